"""Degree plug-in estimation, degree moments, standard errors and diagnostics.

Node propensities are estimated from degrees as
``pi_hat_i = d_i / sqrt(sum_l d_l)``, so that ``pi_hat_i * pi_hat_j``
equals the expected edge weight that modularity subtracts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .edge_models import BERNOULLI_CLAMP, EdgeModel, Family
from .errors import GraphError, ModelError
from .graph import CommunityAssignment, Graph, degree_quartiles

__all__ = [
    "ModsigWarning",
    "PiVector",
    "DegreeMoments",
    "StandardErrors",
    "DiagnosticThresholds",
    "DiagnosticsReport",
    "estimate_pi",
    "expected_edge",
    "edge_variance",
    "degree_moments",
    "clt_standard_errors",
    "check_assumptions",
    "quartile_ratios",
    "infeasible_pairs",
]


class ModsigWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PiVector:
    """Per-node propensities with cached power sums.

    ``kept`` holds the graph indices the entries refer to when isolated
    nodes were dropped; it is ``None`` when every node was kept.
    """

    pi: np.ndarray
    kept: np.ndarray | None = None
    power_sums: tuple[float, float, float, float] = field(init=False)
    _group_cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).copy()
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "power_sums", tuple(float(np.sum(pi**p)) for p in (1, 2, 3, 4)))

    @property
    def n(self) -> int:
        return int(self.pi.size)

    @property
    def l1(self) -> float:
        return self.power_sums[0]

    @property
    def l2sq(self) -> float:
        return self.power_sums[1]

    def group_power_sums(self, a: CommunityAssignment) -> np.ndarray:
        """``(K, 4)`` array of per-group sums of ``pi**p`` for ``p = 1..4``."""
        if a.n != self.n:
            raise GraphError(f"assignment covers {a.n} nodes but pi has {self.n}")
        hit = self._group_cache.get(id(a))
        if hit is not None and hit[0] is a:
            return hit[1]
        out = np.stack(
            [np.bincount(a.group_of, self.pi**p, minlength=a.K) for p in (1, 2, 3, 4)], axis=1
        )
        out.setflags(write=False)
        self._group_cache[id(a)] = (a, out)
        return out


def estimate_pi(g: Graph, *, strict: bool = True) -> PiVector:
    """Degree plug-in propensities ``d_i / sqrt(||d||_1)``.

    Parameters
    ----------
    g : Graph
    strict : bool
        If true, an isolated node is an error. Otherwise isolated nodes are
        dropped with a :class:`ModsigWarning` and ``kept`` records the
        surviving graph indices.
    """
    if g.n == 0 or g.total_degree <= 0:
        raise GraphError("cannot estimate propensities on an edgeless graph")
    iso = g.isolated()
    scale = math.sqrt(g.total_degree)
    if iso.size == 0:
        return PiVector(g.degree / scale)
    if strict:
        raise GraphError(
            f"{iso.size} isolated node(s), e.g. {g.labels[iso[0]]!r}; propensities must be positive"
        )
    warnings.warn(f"dropping {iso.size} isolated node(s)", ModsigWarning, stacklevel=2)
    kept = np.flatnonzero(g.degree > 0)
    return PiVector(g.degree[kept] / scale, kept=kept)


def expected_edge(p: PiVector, i: int, j: int) -> float:
    if i == j:
        raise ModelError("no self-loops: expected edge needs i != j")
    return float(p.pi[i] * p.pi[j])


def _bernoulli_feasible(mu, strict: bool):
    mu = np.asarray(mu, dtype=float)
    if np.any(mu >= 1.0):
        if strict:
            raise ModelError("Bernoulli mean pi_i*pi_j >= 1 for some pair; use lenient mode to clamp")
        warnings.warn("clamping infeasible Bernoulli mean", ModsigWarning, stacklevel=3)
        return np.minimum(mu, BERNOULLI_CLAMP)
    return mu


def edge_variance(p: PiVector, m: EdgeModel, i: int, j: int, *, strict: bool = True) -> float:
    """``Var A_ij`` under ``m`` at the plug-in mean ``pi_i * pi_j``."""
    mu = expected_edge(p, i, j)
    if m.family is Family.BERNOULLI:
        mu = float(_bernoulli_feasible(mu, strict))
    return float(m.variance(mu))


def infeasible_pairs(pi: np.ndarray, threshold: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """All pairs ``i < j`` with ``pi_i * pi_j >= threshold``.

    Runs in O(n log n + number of such pairs).
    """
    order = np.argsort(pi, kind="stable")
    srt = pi[order]
    ii, jj = [], []
    for pos in range(srt.size - 1, -1, -1):
        if srt[pos] <= 0:
            break
        start = int(np.searchsorted(srt, threshold / srt[pos], side="left"))
        start = max(start, pos + 1)
        if start >= srt.size:
            if srt[pos] * srt[-1] < threshold:
                break
            continue
        others = order[start:]
        ii.append(np.full(others.size, order[pos]))
        jj.append(others)
    if not ii:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    a, b = np.concatenate(ii), np.concatenate(jj)
    # searchsorted on rounded products can admit borderline pairs; recheck exactly
    ok = pi[a] * pi[b] >= threshold
    a, b = a[ok], b[ok]
    return np.minimum(a, b), np.maximum(a, b)


def _bernoulli_clamp_pairs(p: PiVector, strict: bool):
    """Pairs whose Bernoulli mean needs clamping, with the variance correction."""
    i, j = infeasible_pairs(p.pi, 1.0)
    if i.size and strict:
        raise ModelError(
            f"Bernoulli mean pi_i*pi_j >= 1 for {i.size} pair(s); use lenient mode to clamp"
        )
    if i.size:
        warnings.warn(f"clamping {i.size} infeasible Bernoulli mean(s)", ModsigWarning, stacklevel=3)
    mu = p.pi[i] * p.pi[j]
    clamped = np.minimum(mu, BERNOULLI_CLAMP)
    return i, j, clamped * (1 - clamped) - mu * (1 - mu)


@dataclass(frozen=True)
class DegreeMoments:
    e_d: np.ndarray
    var_d: np.ndarray
    e_d1: float


def degree_moments(p: PiVector, m: EdgeModel, *, strict: bool = True) -> DegreeMoments:
    """Finite-n expectation and variance of each degree, and ``E ||d||_1``.

    ``E d_i = pi_i (||pi||_1 - pi_i)`` for every family. The variance is
    ``sum_{j != i} Var A_ij``, computed in O(n) from power sums using the
    quadratic form of the family variance.
    """
    pi = p.pi
    s1, s2 = p.power_sums[:2]
    e_d = pi * (s1 - pi)
    c1, c2 = m.variance_coefficients()
    var_d = c1 * e_d + c2 * pi**2 * (s2 - pi**2)
    if m.family is Family.BERNOULLI:
        i, j, corr = _bernoulli_clamp_pairs(p, strict)
        if i.size:
            var_d = var_d + np.bincount(i, corr, minlength=p.n) + np.bincount(j, corr, minlength=p.n)
    return DegreeMoments(e_d, var_d, s1 * s1 - s2)


class StandardErrors(NamedTuple):
    se_pi: np.ndarray
    se_edge: Callable[[int, int], float]


def clt_standard_errors(p: PiVector, m: EdgeModel, *, strict: bool = True) -> StandardErrors:
    """Plug-in standard errors of ``pi_hat_i`` and of ``pi_hat_i * pi_hat_j``."""
    mom = degree_moments(p, m, strict=strict)
    se_pi = np.sqrt(mom.var_d / mom.e_d1)
    pi, var_d, e1 = p.pi, mom.var_d, mom.e_d1

    def se_edge(i: int, j: int) -> float:
        if i == j:
            raise ModelError("no self-loops: se_edge needs i != j")
        return math.sqrt((pi[j] ** 2 * var_d[i] + pi[i] ** 2 * var_d[j]) / e1)

    return StandardErrors(se_pi, se_edge)


@dataclass(frozen=True)
class DiagnosticThresholds:
    """Warning thresholds for the asymptotic assumptions.

    The quartile proxies follow the benchmark practice of replacing the
    minimum, mean and maximum degree by the first, second and third
    quartiles. ``star_max`` also applies to the raw max/mean ratio, which
    is what catches a single dominating hub.
    """

    star_max: float = 10.0
    sparse_min: float = 0.5
    dense_max: float = 0.1
    k_over_n_max: float = 0.1
    dispersion_min: float = 1e-2
    dispersion_max: float = 1e4
    skewness_max: float = 1e4


@dataclass
class DiagnosticsReport:
    n: int
    mean_degree: float
    quartiles: tuple[float, float, float]
    ratio_star: float
    ratio_sparse: float
    ratio_dense: float
    quartile_star: float
    quartile_sparse: float
    quartile_dense: float
    dispersion_range: tuple[float, float]
    skewness_range: tuple[float, float]
    k_over_n: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_degree": self.mean_degree,
            "quartiles": list(self.quartiles),
            "ratio_star": self.ratio_star,
            "ratio_sparse": self.ratio_sparse,
            "ratio_dense": self.ratio_dense,
            "quartile_star": self.quartile_star,
            "quartile_sparse": self.quartile_sparse,
            "quartile_dense": self.quartile_dense,
            "dispersion_range": list(self.dispersion_range),
            "skewness_range": list(self.skewness_range),
            "k_over_n": self.k_over_n,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticsReport:
        d = dict(d)
        for key in ("quartiles", "dispersion_range", "skewness_range"):
            d[key] = tuple(d[key])
        d["warnings"] = list(d["warnings"])
        return cls(**d)


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return math.inf if num > 0 else 0.0


def quartile_ratios(q1: float, q2: float, q3: float, n: int) -> tuple[float, float, float]:
    """``(Q3/Q2, Q1/sqrt(Q2), Q3/(n sqrt(Q2)))``, the robust assumption proxies."""
    root = math.sqrt(q2)
    return _ratio(q3, q2), _ratio(q1, root), _ratio(q3, n * root)


def _moment_ranges(m: EdgeModel, mu_lo: float, mu_hi: float):
    if m.family is Family.BERNOULLI:
        mu_hi = min(mu_hi, BERNOULLI_CLAMP)
        mu_lo = min(mu_lo, mu_hi)
    if mu_hi <= 0:
        return (math.nan, math.nan), (math.nan, math.nan)
    # ZI skewness need not be monotone in mu: scan a log grid
    grid = np.unique(np.concatenate([[mu_lo, mu_hi], np.geomspace(mu_lo, mu_hi, 65)]))
    mean = m.mean(grid)
    var = m.variance(grid)
    disp = var / mean
    skew = m.third_central_moment(grid) / var
    return (float(disp.min()), float(disp.max())), (float(skew.min()), float(skew.max()))


def check_assumptions(
    g: Graph,
    m: EdgeModel,
    a: CommunityAssignment | None = None,
    thresholds: DiagnosticThresholds = DiagnosticThresholds(),
) -> DiagnosticsReport:
    """Degree-based proxies for the null-model regularity conditions.

    Never raises on a violated assumption; threshold crossings are listed
    in ``warnings``.
    """
    if g.n == 0:
        raise GraphError("diagnostics of an empty graph")
    d = g.degree
    n = g.n
    mean = float(d.mean())
    dmax, dmin = float(d.max()), float(d.min())
    q1, q2, q3 = degree_quartiles(g)
    qs, qsp, qd = quartile_ratios(q1, q2, q3, n)

    if g.total_degree > 0 and n >= 2:
        pi = np.sort(d / math.sqrt(g.total_degree))
        disp, skew = _moment_ranges(m, float(pi[0] * pi[1]), float(pi[-1] * pi[-2]))
    else:
        disp = skew = (math.nan, math.nan)

    rep = DiagnosticsReport(
        n=n,
        mean_degree=mean,
        quartiles=(q1, q2, q3),
        ratio_star=_ratio(dmax, mean),
        ratio_sparse=_ratio(dmin, math.sqrt(mean)),
        ratio_dense=_ratio(dmax, n * math.sqrt(mean)),
        quartile_star=qs,
        quartile_sparse=qsp,
        quartile_dense=qd,
        dispersion_range=disp,
        skewness_range=skew,
        k_over_n=None if a is None else a.K / a.n,
    )
    t = thresholds
    w = rep.warnings
    if rep.ratio_star > t.star_max or qs > t.star_max:
        w.append(
            f"hub dominance: max/mean degree {rep.ratio_star:.3g}, "
            f"Q3/Q2 {qs:.3g} (threshold {t.star_max:g})"
        )
    if qsp < t.sparse_min:
        w.append(f"sparsity: Q1/sqrt(Q2) = {qsp:.3g} < {t.sparse_min:g}")
    if qd > t.dense_max:
        w.append(f"density: Q3/(n sqrt(Q2)) = {qd:.3g} > {t.dense_max:g}")
    if not math.isnan(disp[0]) and (disp[0] < t.dispersion_min or disp[1] > t.dispersion_max):
        w.append(
            f"dispersion: variance/mean range [{disp[0]:.3g}, {disp[1]:.3g}] "
            f"outside [{t.dispersion_min:g}, {t.dispersion_max:g}]"
        )
    if not math.isnan(skew[1]) and skew[1] > t.skewness_max:
        w.append(f"skewness: third moment/variance up to {skew[1]:.3g}")
    if rep.k_over_n is not None and rep.k_over_n > t.k_over_n_max:
        w.append(f"K/n = {rep.k_over_n:.3g} > {t.k_over_n_max:g}: too many groups for the limit theorem")
    return rep
