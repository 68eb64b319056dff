"""Sampling graphs from the fitted null and the parametric bootstrap.

Replicate ``r`` of a bootstrap with seed ``s`` draws from
``numpy.random.PCG64(mix64(s, r))``, where ``mix64`` is the SplitMix64
finaliser applied to ``s + (r + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Replicates therefore do not depend on execution order or worker count,
and results are merged in replicate order.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .edge_models import BERNOULLI_CLAMP, EdgeModel, Family
from .errors import DegenerateTestError, GraphError, ModelError
from .graph import CommunityAssignment, Graph
from .modtest import statistics
from .normal import upper_tail
from .nullmodel import ModsigWarning, PiVector, estimate_pi

__all__ = [
    "mix64",
    "sample_graph",
    "BootstrapResult",
    "bootstrap",
    "uniformity_summary",
    "DEFAULT_REPLICATES",
    "MAX_DEGENERATE_FRACTION",
]

log = logging.getLogger(__name__)

_MASK = (1 << 64) - 1
DEFAULT_REPLICATES = 10_000
MAX_DEGENERATE_FRACTION = 0.01
SAMPLE_BLOCK = 256


def mix64(seed: int, index: int) -> int:
    """SplitMix64 avalanche of ``(seed, index)`` into a 64-bit stream seed."""
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK))


def _sample_poisson_pairs(pi: np.ndarray, rng: np.random.Generator):
    """Independent Poisson(pi_i pi_j) counts on every pair, in O(n + edges).

    The total count is Poisson with mean ``sum_{i<j} pi_i pi_j``; each unit
    lands on an ordered pair drawn from ``pi x pi`` conditioned on ``i != j``,
    which puts it on pair ``{i, j}`` with probability proportional to
    ``pi_i pi_j``.
    """
    s1 = float(pi.sum())
    total = 0.5 * (s1 * s1 - float(np.sum(pi * pi)))
    count = int(rng.poisson(total))
    cdf = np.cumsum(pi)
    cdf /= cdf[-1]
    last = pi.size - 1
    ii, jj = [], []
    need = count
    while need:
        i = np.minimum(np.searchsorted(cdf, rng.random(need), side="right"), last)
        j = np.minimum(np.searchsorted(cdf, rng.random(need), side="right"), last)
        ok = i != j
        ii.append(i[ok])
        jj.append(j[ok])
        need -= int(ok.sum())
    if not ii:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    i, j = np.concatenate(ii), np.concatenate(jj)
    n = pi.size
    code, counts = np.unique(np.minimum(i, j) * n + np.maximum(i, j), return_counts=True)
    return code // n, code % n, counts.astype(float)


def _sample_dense_pairs(pi: np.ndarray, m: EdgeModel, rng: np.random.Generator, strict: bool):
    n = pi.size
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for start in range(0, n, SAMPLE_BLOCK):
        r = idx[start:start + SAMPLE_BLOCK]
        upper = idx[None, :] > r[:, None]
        ri, cj = np.nonzero(upper)
        ri = r[ri]
        mu = pi[ri] * pi[cj]
        if m.family is Family.BERNOULLI and np.any(mu >= 1.0):
            if strict:
                raise ModelError("Bernoulli mean pi_i*pi_j >= 1 for some pair; use lenient mode to clamp")
            mu = np.minimum(mu, BERNOULLI_CLAMP)
        x = m.sample(mu, rng)
        nz = x > 0
        rows.append(ri[nz])
        cols.append(cj[nz])
        vals.append(x[nz])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def sample_graph(p: PiVector, m: EdgeModel, seed, labels=None, *, strict: bool = True) -> Graph:
    """Draw one graph with independent edges of base mean ``pi_i pi_j`` from ``m``.

    ``seed`` is an integer or a ``numpy.random.Generator``. Negative binomial
    edges are Gamma-Poisson mixtures. For zero-inflated families the base
    graph is drawn first and each positive pair is then zeroed with
    probability ``omega``.
    """
    rng = _rng(seed)
    pi = p.pi
    if labels is None:
        labels = [str(i) for i in range(pi.size)]
    elif len(labels) != pi.size:
        raise GraphError(f"{len(labels)} labels for {pi.size} nodes")
    base = m.base
    if base.family is Family.POISSON:
        r, c, w = _sample_poisson_pairs(pi, rng)
    else:
        r, c, w = _sample_dense_pairs(pi, base, rng, strict)
    if m.family.zero_inflated:
        keep = rng.random(w.size) >= m.omega
        r, c, w = r[keep], c[keep], w[keep]
    return Graph(tuple(labels), r, c, w)


@dataclass
class BootstrapResult:
    """Replicate statistics of a parametric bootstrap.

    Arrays have one entry per replicate in replicate order; degenerate
    replicates hold NaN and are excluded from every summary.
    """

    replicates: int
    seed: int
    q_values: np.ndarray
    z_values: np.ndarray
    p_values: np.ndarray
    p_mean: float
    p_std: float
    bootstrap_p: float | None
    observed_q: float | None
    n_degenerate: int
    valid: bool

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "seed": self.seed,
            "p_mean": self.p_mean,
            "p_std": self.p_std,
            "bootstrap_p": self.bootstrap_p,
            "observed_q": self.observed_q,
            "n_degenerate": self.n_degenerate,
            "valid": self.valid,
        }


def _replicate(g_labels, p: PiVector, a: CommunityAssignment, m: EdgeModel, seed: int, index: int, strict: bool):
    g = sample_graph(p, m, mix64(seed, index), g_labels, strict=strict)
    try:
        if g.isolated().size:
            kept = np.flatnonzero(g.degree > 0)
            g, a = g.induced(kept), a.restrict(kept)
        q, b, s, z = statistics(g, a, m, strict=False)
    except (DegenerateTestError, GraphError, ModelError):
        return math.nan, math.nan
    return q, z


def _run_chunk(args):
    labels, pi, groups, group_labels, m, seed, start, stop, strict = args
    p = PiVector(pi)
    a = CommunityAssignment(groups, group_labels)
    out = np.empty((stop - start, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModsigWarning)
        for k, r in enumerate(range(start, stop)):
            out[k] = _replicate(labels, p, a, m, seed, r, strict)
    return out


def _worker_count(workers: int) -> int:
    cap = os.environ.get("MODSIG_THREADS")
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer MODSIG_THREADS=%r", cap)
    return max(1, workers)


def bootstrap(
    g: Graph,
    a: CommunityAssignment,
    model: EdgeModel | Family | str,
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    *,
    workers: int = 1,
    observed_q: float | None = None,
    strict: bool = True,
) -> BootstrapResult:
    """Parametric bootstrap of modularity under the fitted degree-based null.

    The null is fitted once on ``g`` (when a family rather than a model is
    given). Each replicate samples a graph from it, re-estimates the
    propensities from the simulated degrees and recomputes the shifted and
    scaled modularity with the same edge model. ``bootstrap_p`` is
    ``(1 + #{Q* >= Q_obs}) / (valid + 1)``, with ``Q_obs`` the modularity
    of ``g`` unless ``observed_q`` is given.
    """
    if B < 1:
        raise ValueError(f"bootstrap needs B >= 1 replicates, got {B}")
    if a.n != g.n:
        raise GraphError(f"assignment covers {a.n} nodes but graph has {g.n}")
    if not isinstance(model, EdgeModel):
        from .fitting import fit_edge_model

        model = fit_edge_model(g, Family(model))
    p = estimate_pi(g, strict=strict)
    if p.kept is not None:
        g, a = g.induced(p.kept), a.restrict(p.kept)
        p = PiVector(p.pi)
    if observed_q is None:
        from .modtest import modularity_hat

        observed_q = modularity_hat(g, a)

    nworkers = _worker_count(workers)
    nchunks = min(B, nworkers * 4) if nworkers > 1 else 1
    bounds = np.linspace(0, B, nchunks + 1).astype(int)
    jobs = [
        (g.labels, p.pi, a.group_of, a.labels, model, seed, int(lo), int(hi), strict)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    out = np.concatenate(parts)
    q_values, z_values = out[:, 0], out[:, 1]
    ok = ~np.isnan(z_values)
    p_values = np.full(B, math.nan)
    p_values[ok] = [upper_tail(z) for z in z_values[ok]]
    n_bad = int(B - ok.sum())
    if n_bad:
        log.warning("%d of %d bootstrap replicates were degenerate and were dropped", n_bad, B)
    valid = n_bad <= MAX_DEGENERATE_FRACTION * B
    if ok.any():
        p_mean, p_std = uniformity_summary(p_values[ok])
        exceed = int(np.sum(q_values[ok] >= observed_q))
        boot_p = (1 + exceed) / (int(ok.sum()) + 1)
    else:
        p_mean = p_std = math.nan
        boot_p = None
    return BootstrapResult(
        replicates=B,
        seed=int(seed),
        q_values=q_values,
        z_values=z_values,
        p_values=p_values,
        p_mean=p_mean,
        p_std=p_std,
        bootstrap_p=boot_p,
        observed_q=float(observed_q),
        n_degenerate=n_bad,
        valid=valid,
    )


def uniformity_summary(p_values) -> tuple[float, float]:
    """Sample mean and standard deviation (``ddof=1``) of p-values.

    Uniform p-values have mean 1/2 and standard deviation ``1/sqrt(12)``.
    """
    x = np.asarray(p_values, dtype=float)
    if x.size == 0:
        raise ValueError("uniformity summary of an empty vector")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return float(x.mean()), std
