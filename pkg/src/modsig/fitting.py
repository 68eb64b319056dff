"""Likelihoods over all node pairs, shape/zero-inflation MLEs, deviance tables.

Propensities are always the degree plug-in; only the shape ``r`` and the
zero-inflation mass ``omega`` are fitted. The likelihood runs over all
``n(n-1)/2`` pairs, non-edges contributing the zero-count probability.

Pair sums are evaluated over *distinct* propensity values: with ``U``
distinct values of multiplicity ``c_a`` the sum of ``f(pi_i pi_j)`` over
pairs ``i < j`` is

    1/2 * sum_{a,b} W_ab f(u_a u_b),   W_ab = c_a c_b (a != b),  W_aa = c_a (c_a - 1)

which is exact and costs O(U^2) instead of O(n^2). Count data has few
distinct degrees, so U is usually far below n. Rows of the U x U grid are
processed in fixed blocks of ``PAIR_BLOCK`` and accumulated in block
order, so results do not depend on how the work is scheduled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import digamma, gammaln

from .edge_models import EdgeModel, Family
from .errors import ConvergenceError, ModelError
from .graph import Graph
from .nullmodel import ModsigWarning, PiVector, estimate_pi

__all__ = [
    "R_BOUNDS",
    "OMEGA_MAX",
    "PairSummer",
    "golden_section_max",
    "log_likelihood",
    "saturated_log_likelihood",
    "nb_score_r",
    "fit_edge_model",
    "r_at_cap",
    "ComparisonRow",
    "ModelComparison",
    "compare_models",
]

R_BOUNDS = (1e-6, 1e6)
OMEGA_MAX = 1.0 - 1e-9
LOG_TOL = 1e-8
MAX_SWEEPS = 200
PAIR_BLOCK = 512

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class PairSummer:
    """Sums of ``f(pi_i * pi_j)`` over all unordered pairs of distinct nodes."""

    def __init__(self, pi: np.ndarray):
        self.values, counts = np.unique(np.asarray(pi, dtype=float), return_counts=True)
        self.counts = counts.astype(float)

    def sum(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        u, c = self.values, self.counts
        total = 0.0
        for start in range(0, u.size, PAIR_BLOCK):
            stop = min(start + PAIR_BLOCK, u.size)
            mu = np.outer(u[start:stop], u)
            w = np.outer(c[start:stop], c)
            idx = np.arange(start, stop)
            w[idx - start, idx] = c[idx] * (c[idx] - 1.0)
            live = w > 0  # a node never pairs with itself
            total += float(np.sum(w[live] * f(mu[live])))
        return 0.5 * total


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = LOG_TOL):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    The interior optimum is compared against both endpoints, so a maximum
    on the boundary is found exactly.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(500):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise ConvergenceError("golden-section search did not converge")
    best = [(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)]
    if any(math.isnan(v) for v, _ in best):
        raise ConvergenceError("log-likelihood evaluated to NaN during search")
    fx, x = max(best, key=lambda t: t[0])
    return x, fx


def _check_counts(g: Graph, m: EdgeModel):
    if m.family is Family.BERNOULLI:
        if np.any(g.weights != 1.0):
            raise ModelError("Bernoulli likelihood needs 0/1 edge weights")
    elif not g.is_integer_valued():
        raise ModelError(f"{m.family.value} likelihood needs integer edge weights")


class _Likelihood:
    """Log-likelihood of one graph, reusable across parameter values."""

    def __init__(self, g: Graph, p: PiVector | None = None):
        self.g = g
        self.p = p if p is not None else estimate_pi(g)
        if self.p.kept is not None:
            raise ModelError("likelihood needs every node to have positive degree")
        self.pairs = PairSummer(self.p.pi)
        pi = self.p.pi
        self.k = g.weights
        self.mu = pi[g.rows] * pi[g.cols]

    def __call__(self, m: EdgeModel) -> float:
        fam = m.family
        if fam is Family.POISSON:
            s1, s2 = self.p.power_sums[:2]
            zeros = -0.5 * (s1 * s1 - s2)
        elif fam is Family.BERNOULLI:
            if _max_pair_mean(self.pairs) >= 1.0:
                raise ModelError("Bernoulli mean pi_i*pi_j >= 1 for some pair")
            zeros = self.pairs.sum(lambda mu: np.log1p(-mu))
        else:
            zeros = self.pairs.sum(lambda mu: m.logpmf(np.zeros_like(mu), mu))
        edges = m.logpmf(self.k, self.mu) - m.logpmf(np.zeros_like(self.mu), self.mu)
        return float(zeros + np.sum(edges))


def _max_pair_mean(pairs: PairSummer) -> float:
    u, c = pairs.values, pairs.counts
    if c[-1] >= 2:
        return float(u[-1] ** 2)
    return float(u[-1] * u[-2]) if u.size >= 2 else 0.0


def log_likelihood(g: Graph, m: EdgeModel, p: PiVector | None = None) -> float:
    """Sum over all pairs ``i < j`` of ``log P(A_ij)`` at mean ``pi_hat_i pi_hat_j``."""
    _check_counts(g, m)
    return _Likelihood(g, p)(m)


def saturated_log_likelihood(g: Graph) -> float:
    """Poisson log-likelihood with each pair's mean set to its own count."""
    k = g.weights
    return float(np.sum(k * np.log(k) - k - gammaln(k + 1.0)))


def nb_score_r(g: Graph, r: float, p: PiVector | None = None) -> float:
    """Derivative of the negative binomial log-likelihood with respect to ``r``."""
    _check_counts(g, EdgeModel.negbin(r))
    lik = _Likelihood(g, p)
    zeros = lik.pairs.sum(lambda mu: -np.log1p(mu / r) + mu / (r + mu))
    k, mu = lik.k, lik.mu
    edges = digamma(k + r) - digamma(r) - k / (r + mu)
    return float(zeros + np.sum(edges))


def r_at_cap(m: EdgeModel) -> bool:
    """True if the fitted shape sits at the upper search bound (no overdispersion)."""
    return m.r is not None and math.log(m.r) >= math.log(R_BOUNDS[1]) - 1e-6


def _fit_r(lik: _Likelihood, omega: float | None, lo=None, hi=None):
    lo = math.log(R_BOUNDS[0]) if lo is None else lo
    hi = math.log(R_BOUNDS[1]) if hi is None else hi
    if omega is None:
        f = lambda t: lik(EdgeModel.negbin(math.exp(t)))
    else:
        f = lambda t: lik(EdgeModel.zinegbin(omega, math.exp(t)))
    t, val = golden_section_max(f, lo, hi)
    return math.exp(t), val


def _fit_omega(lik: _Likelihood, r: float | None):
    if r is None:
        f = lambda w: lik(EdgeModel.zipoisson(w))
    else:
        f = lambda w: lik(EdgeModel.zinegbin(w, r))
    return golden_section_max(f, 0.0, OMEGA_MAX)


def _fit(g: Graph, family: Family, p: PiVector | None = None):
    """Returns ``(model, log_likelihood)``."""
    family = Family(family)
    lik = _Likelihood(g, p)
    if family is Family.BERNOULLI:
        m = EdgeModel.bernoulli()
        return m, lik(m)
    if family is Family.POISSON:
        m = EdgeModel.poisson()
        return m, lik(m)
    if g.m == 0:
        raise ModelError("need at least one positive pair to fit")
    if family is Family.NEGBIN:
        r, val = _fit_r(lik, None)
        m = EdgeModel.negbin(r)
        if r_at_cap(m):
            warnings.warn("negative binomial shape at upper cap: effectively Poisson", ModsigWarning, stacklevel=3)
        return m, val
    if family is Family.ZIPOISSON:
        w, val = _fit_omega(lik, None)
        return EdgeModel.zipoisson(w), val

    # zero-inflated negative binomial: coordinate ascent from the NB fit,
    # accepting only non-decreasing moves so the result never falls below NB.
    r, best = _fit_r(lik, None)
    w = 0.0
    for _ in range(MAX_SWEEPS):
        w_new, val_w = _fit_omega(lik, r)
        if val_w < best:
            w_new, val_w = w, best
        r_new, val_r = _fit_r(lik, w_new)
        if val_r < val_w:
            r_new, val_r = r, val_w
        moved = abs(w_new - w) + abs(math.log(r_new) - math.log(r))
        w, r, gain, best = w_new, r_new, val_r - best, val_r
        if moved <= LOG_TOL or gain <= LOG_TOL * max(1.0, abs(best)):
            break
    else:
        raise ConvergenceError(f"zero-inflated NB fit did not converge in {MAX_SWEEPS} sweeps")
    return EdgeModel.zinegbin(w, r), best


def fit_edge_model(g: Graph, family: Family | str, p: PiVector | None = None) -> EdgeModel:
    """Fit the free parameters of ``family`` by maximum likelihood.

    Propensities stay at the degree plug-in. Bernoulli and Poisson have no
    free parameters and are returned as is. A shape estimate at the upper
    bound of ``R_BOUNDS`` raises a :class:`ModsigWarning` (no detectable
    overdispersion).
    """
    family = Family(family)
    if family is Family.BERNOULLI:
        return EdgeModel.bernoulli()
    if family is Family.POISSON:
        return EdgeModel.poisson()
    if not g.is_integer_valued():
        raise ModelError(f"{family.value} fit needs integer edge weights")
    return _fit(g, family, p)[0]


@dataclass(frozen=True)
class ComparisonRow:
    family: Family
    parameter_count: int
    log_likelihood: float
    residual_deviance: float
    model: EdgeModel


@dataclass(frozen=True)
class ModelComparison:
    rows: tuple[ComparisonRow, ...]
    saturated_log_likelihood: float

    def row(self, family: Family | str) -> ComparisonRow:
        family = Family(family)
        return next(r for r in self.rows if r.family is family)


COMPARED_FAMILIES = (Family.POISSON, Family.ZIPOISSON, Family.NEGBIN, Family.ZINEGBIN)


def compare_models(g: Graph) -> ModelComparison:
    """Deviance of each count family against the saturated Poisson model.

    ``parameter_count`` is ``n`` plus the family's extra parameters.
    """
    if not g.is_integer_valued():
        raise ModelError("model comparison needs integer edge weights")
    p = estimate_pi(g)
    sat = saturated_log_likelihood(g)
    rows = []
    for fam in COMPARED_FAMILIES:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModsigWarning)
            m, ll = _fit(g, fam, p)
        rows.append(ComparisonRow(fam, g.n + fam.extra_parameters, ll, max(0.0, 2.0 * (sat - ll)), m))
    return ModelComparison(tuple(rows), sat)
