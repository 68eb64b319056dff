"""Modularity, its null bias and variance, and the one-sided normal test.

Every pairwise sum over same-group pairs ``i < j`` has two evaluations:

* a factorised O(n + K) path built from per-group sums, used everywhere;
* a ``*_reference`` O(n^2) path that loops over row blocks of the dense
  pair matrix, kept as an independent check.

Factorised variance
-------------------
With ``x_i = pi_i**p`` and weights ``c_ij = [same group] + beta_i + beta_j``,
the sum over ordered pairs, diagonal included, is::

    F_p = sum_k (X_k^2 + 4 X_k Y_k) + 2 X Z + 2 Y^2

where ``X_k = sum_{i in k} x_i``, ``Y_k = sum_{i in k} beta_i x_i`` and
``X, Y, Z`` are the global sums of ``x``, ``beta x`` and ``beta^2 x``.
Removing the diagonal ``D_p = sum_i (1 + 2 beta_i)^2 x_i^2`` and halving
gives the sum over ``i < j``; the variance is ``c1 T_1 + c2 T_2`` for a
family with ``Var A = c1 mu + c2 mu^2``. Results agree with the reference
path to rounding, not bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .edge_models import CLT_FAMILIES, BERNOULLI_CLAMP, EdgeModel, Family
from .errors import DegenerateTestError, GraphError, ModelError
from .graph import CommunityAssignment, Graph
from .normal import upper_tail
from .nullmodel import (
    DiagnosticThresholds,
    DiagnosticsReport,
    ModsigWarning,
    PiVector,
    check_assumptions,
    estimate_pi,
    infeasible_pairs,
)

__all__ = [
    "BetaWeights",
    "ModularityReport",
    "TestOptions",
    "modularity_hat",
    "population_modularity",
    "beta_weights",
    "bias_hat",
    "bias_hat_reference",
    "bias_alternative",
    "bias_alternative_reference",
    "variance_hat",
    "variance_hat_reference",
    "p_value",
    "significance_test",
    "statistics",
]

REFERENCE_BLOCK = 256


def _check(n: int, a: CommunityAssignment):
    if a.n != n:
        raise GraphError(f"assignment covers {a.n} nodes but the graph has {n}")


def _within_edge_weight(g: Graph, a: CommunityAssignment) -> float:
    same = a.group_of[g.rows] == a.group_of[g.cols]
    return float(g.weights[same].sum())


def _within_pair_products(x: np.ndarray, a: CommunityAssignment) -> float:
    """``sum over same-group pairs i < j of x_i x_j``."""
    s = np.bincount(a.group_of, x, minlength=a.K)
    q = np.bincount(a.group_of, x * x, minlength=a.K)
    return 0.5 * float(np.sum(s * s - q))


def modularity_hat(g: Graph, a: CommunityAssignment) -> float:
    """Observed modularity ``sum_{i<j, same group} (A_ij - d_i d_j / ||d||_1)``."""
    _check(g.n, a)
    if g.total_degree <= 0:
        raise GraphError("modularity of an edgeless graph")
    return _within_edge_weight(g, a) - _within_pair_products(g.degree, a) / g.total_degree


def population_modularity(true_pi, g: Graph, a: CommunityAssignment) -> float:
    """Modularity with the true edge means ``pi_i pi_j`` in place of the degree estimate."""
    true_pi = np.asarray(true_pi, dtype=float)
    if true_pi.size != g.n:
        raise GraphError(f"{true_pi.size} propensities for {g.n} nodes")
    _check(g.n, a)
    return _within_edge_weight(g, a) - _within_pair_products(true_pi, a)


@dataclass(frozen=True)
class BetaWeights:
    beta: np.ndarray
    alpha: np.ndarray


def _expected_degrees(p: PiVector, a: CommunityAssignment):
    _check(p.n, a)
    pi = p.pi
    e_d = pi * (p.l1 - pi)
    if np.any(e_d <= 0):
        raise ModelError("every node needs a positive expected degree")
    group_pi = p.group_power_sums(a)[:, 0]
    e_dw = pi * (group_pi[a.group_of] - pi)
    return e_d, e_dw


def beta_weights(p: PiVector, a: CommunityAssignment) -> BetaWeights:
    """Node weights of the within/between degree decomposition.

    ``beta_i = (1/2) sum_l E d_l^w / sum_l E d_l - E d_i^w / E d_i`` and
    ``alpha_i = 1/2 + beta_i``, all at the plug-in propensities.
    """
    e_d, e_dw = _expected_degrees(p, a)
    gs = p.group_power_sums(a)
    total_w = float(np.sum(gs[:, 0] ** 2 - gs[:, 1]))
    total = p.l1 * p.l1 - p.l2sq
    beta = 0.5 * total_w / total - e_dw / e_d
    return BetaWeights(beta, 0.5 + beta)


def bias_hat(p: PiVector, a: CommunityAssignment) -> float:
    """Plug-in shift ``b = sum_{i<j same} mu_ij (E d_i + E d_j - ||pi||_2^2) / E||d||_1``."""
    _check(p.n, a)
    pi = p.pi
    e_d = pi * (p.l1 - pi)
    e1 = p.l1 * p.l1 - p.l2sq
    if e1 <= 0:
        raise ModelError("expected total degree must be positive")
    gs = p.group_power_sums(a)
    # sum_{i != j in k} pi_i pi_j E d_i = sum_{i in k} pi_i E d_i (P_k - pi_i)
    cross = float(np.sum(pi * e_d * (gs[a.group_of, 0] - pi)))
    pairs = 0.5 * float(np.sum(gs[:, 0] ** 2 - gs[:, 1]))
    return (cross - p.l2sq * pairs) / e1


def _bernoulli_corrections(p: PiVector, m: EdgeModel, strict: bool):
    """Clamped pairs and the change they make to ``Var A_ij``."""
    if m.family is not Family.BERNOULLI:
        return None
    i, j = infeasible_pairs(p.pi, 1.0)
    if not i.size:
        return None
    if strict:
        raise ModelError(f"Bernoulli mean pi_i*pi_j >= 1 for {i.size} pair(s); use lenient mode to clamp")
    warnings.warn(f"clamping {i.size} infeasible Bernoulli mean(s)", ModsigWarning, stacklevel=3)
    mu = p.pi[i] * p.pi[j]
    c = np.minimum(mu, BERNOULLI_CLAMP)
    return i, j, c * (1 - c) - mu * (1 - mu)


def bias_alternative(p: PiVector, m: EdgeModel, a: CommunityAssignment, *, strict: bool = True) -> float:
    """``b' = sum_{i<j same} (mu_ij - (E d_i E d_j + Var A_ij) / E||d||_1)``."""
    _check(p.n, a)
    pi = p.pi
    e_d = pi * (p.l1 - pi)
    e1 = p.l1 * p.l1 - p.l2sq
    gs = p.group_power_sums(a)
    mean_pairs = 0.5 * float(np.sum(gs[:, 0] ** 2 - gs[:, 1]))
    sq_pairs = 0.5 * float(np.sum(gs[:, 1] ** 2 - gs[:, 3]))
    c1, c2 = m.variance_coefficients()
    var_pairs = c1 * mean_pairs + c2 * sq_pairs
    corr = _bernoulli_corrections(p, m, strict)
    if corr is not None:
        i, j, dv = corr
        var_pairs += float(np.sum(dv[a.group_of[i] == a.group_of[j]]))
    return mean_pairs - (_within_pair_products(e_d, a) + var_pairs) / e1


def variance_hat(p: PiVector, m: EdgeModel, a: CommunityAssignment, *, strict: bool = True) -> float:
    """Plug-in ``s^2 = sum_{i<j} (delta_ij + beta_i + beta_j)^2 Var A_ij`` in O(n + K).

    See the module docstring for the factorisation.
    """
    if m.family not in CLT_FAMILIES:
        raise ModelError(f"variance of modularity is defined for {[f.value for f in CLT_FAMILIES]}")
    beta = beta_weights(p, a).beta
    g = a.group_of
    c1, c2 = m.variance_coefficients()
    total = 0.0
    for coef, power in ((c1, 1), (c2, 2)):
        if coef == 0.0:
            continue
        x = p.pi**power
        bx = beta * x
        X_k = np.bincount(g, x, minlength=a.K)
        Y_k = np.bincount(g, bx, minlength=a.K)
        full = float(np.sum(X_k * X_k + 4.0 * X_k * Y_k)) + 2.0 * float(x.sum()) * float(
            np.sum(beta * bx)
        ) + 2.0 * float(bx.sum()) ** 2
        diag = float(np.sum((1.0 + 2.0 * beta) ** 2 * x * x))
        total += coef * 0.5 * (full - diag)
    corr = _bernoulli_corrections(p, m, strict)
    if corr is not None:
        i, j, dv = corr
        w = (g[i] == g[j]) + beta[i] + beta[j]
        total += float(np.sum(w * w * dv))
    return total


def _pair_blocks(n: int):
    for start in range(0, n, REFERENCE_BLOCK):
        stop = min(start + REFERENCE_BLOCK, n)
        rows = np.arange(start, stop)
        yield rows, np.arange(n)[None, :] > rows[:, None]


def _reference_variance(p: PiVector, m: EdgeModel, rows, strict: bool):
    mu = np.outer(p.pi[rows], p.pi)
    if m.family is Family.BERNOULLI:
        if np.any(mu[np.arange(p.n)[None, :] > rows[:, None]] >= 1.0):
            if strict:
                raise ModelError("Bernoulli mean pi_i*pi_j >= 1 for some pair")
            mu = np.minimum(mu, BERNOULLI_CLAMP)
    return mu, m.variance(mu)


def bias_hat_reference(p: PiVector, a: CommunityAssignment) -> float:
    """O(n^2) evaluation of :func:`bias_hat`."""
    _check(p.n, a)
    pi = p.pi
    e_d = pi * (p.l1 - pi)
    e1 = p.l1 * p.l1 - p.l2sq
    total = 0.0
    for rows, upper in _pair_blocks(p.n):
        same = a.group_of[rows][:, None] == a.group_of[None, :]
        mu = np.outer(pi[rows], pi)
        term = mu * (e_d[rows][:, None] + e_d[None, :] - p.l2sq) / e1
        total += float(np.sum(term[same & upper]))
    return total


def bias_alternative_reference(p: PiVector, m: EdgeModel, a: CommunityAssignment, *, strict: bool = True) -> float:
    """O(n^2) evaluation of :func:`bias_alternative`."""
    _check(p.n, a)
    pi = p.pi
    e_d = pi * (p.l1 - pi)
    e1 = p.l1 * p.l1 - p.l2sq
    total = 0.0
    for rows, upper in _pair_blocks(p.n):
        same = a.group_of[rows][:, None] == a.group_of[None, :]
        mu = np.outer(pi[rows], pi)
        _, var = _reference_variance(p, m, rows, strict)
        term = mu - (np.outer(e_d[rows], e_d) + var) / e1
        total += float(np.sum(term[same & upper]))
    return total


def variance_hat_reference(p: PiVector, m: EdgeModel, a: CommunityAssignment, *, strict: bool = True) -> float:
    """O(n^2) evaluation of :func:`variance_hat`."""
    if m.family not in CLT_FAMILIES:
        raise ModelError("variance of modularity needs a Bernoulli, Poisson or NB model")
    beta = beta_weights(p, a).beta
    total = 0.0
    for rows, upper in _pair_blocks(p.n):
        same = a.group_of[rows][:, None] == a.group_of[None, :]
        coef = same + beta[rows][:, None] + beta[None, :]
        _, var = _reference_variance(p, m, rows, strict)
        total += float(np.sum((coef * coef * var)[upper]))
    return total


def p_value(z: float) -> float:
    """One-sided ``P(Z >= z)`` for a standard normal ``Z``."""
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z}")
    return upper_tail(z)


def _check_nondegenerate(a: CommunityAssignment):
    if a.K == 1:
        raise DegenerateTestError("degenerate test: a single group has zero modularity variance")
    if a.K == a.n:
        raise DegenerateTestError("degenerate test: all-singleton groups have zero modularity variance")


def statistics(g: Graph, a: CommunityAssignment, m: EdgeModel, *, strict: bool = True):
    """``(q_hat, b_hat, s_hat, z)`` for a graph without isolated nodes."""
    _check_nondegenerate(a)
    p = estimate_pi(g, strict=True)
    q = modularity_hat(g, a)
    b = bias_hat(p, a)
    s2 = variance_hat(p, m, a, strict=strict)
    if not (s2 > 0 and math.isfinite(s2)):
        raise DegenerateTestError(f"degenerate test: modularity variance is {s2}")
    s = math.sqrt(s2)
    return q, b, s, (q - b) / s


@dataclass
class TestOptions:
    """Knobs for :func:`significance_test`.

    ``strict`` makes isolated nodes and infeasible Bernoulli means errors;
    otherwise isolated nodes are dropped and Bernoulli means clamped, with
    warnings. ``bootstrap`` replicates (0 disables) use ``seed`` and up to
    ``workers`` processes. ``model`` skips fitting when given.
    """

    __test__ = False

    strict: bool = True
    thresholds: DiagnosticThresholds = field(default_factory=DiagnosticThresholds)
    bootstrap: int = 0
    seed: int = 0
    workers: int = 1
    model: EdgeModel | None = None
    covariate_name: str = ""


@dataclass
class ModularityReport:
    q_hat: float
    b_hat: float
    s_hat: float
    z: float
    p_normal: float
    model: EdgeModel
    diagnostics: DiagnosticsReport
    n: int
    K: int
    covariate_name: str = ""
    p_bootstrap: float | None = None
    bootstrap: Any = None
    dropped_nodes: int = 0


def significance_test(
    g: Graph,
    a: CommunityAssignment,
    family: Family | str = Family.POISSON,
    options: TestOptions | None = None,
) -> ModularityReport:
    """Run the full test: fit the null, check assumptions, shift, scale, p-value.

    Raises
    ------
    DegenerateTestError
        When the assignment has a single group or only singletons.
    ModelError
        For families outside Bernoulli/Poisson/NB or infeasible data.
    """
    from .fitting import fit_edge_model

    opts = options or TestOptions()
    family = Family(family)
    if family not in CLT_FAMILIES:
        raise ModelError(f"the normal test supports {[f.value for f in CLT_FAMILIES]}, not {family.value}")
    _check(g.n, a)
    dropped = 0
    iso = g.isolated()
    if iso.size:
        if opts.strict:
            raise GraphError(f"{iso.size} isolated node(s), e.g. {g.labels[iso[0]]!r}")
        warnings.warn(f"dropping {iso.size} isolated node(s)", ModsigWarning, stacklevel=2)
        kept = np.flatnonzero(g.degree > 0)
        g, a, dropped = g.induced(kept), a.restrict(kept), int(iso.size)
    _check_nondegenerate(a)

    m = opts.model if opts.model is not None else fit_edge_model(g, family)
    if m.family is not family:
        raise ModelError(f"supplied model is {m.family.value}, test asked for {family.value}")
    diagnostics = check_assumptions(g, m, a, opts.thresholds)
    q, b, s, z = statistics(g, a, m, strict=opts.strict)
    report = ModularityReport(
        q_hat=q,
        b_hat=b,
        s_hat=s,
        z=z,
        p_normal=p_value(z),
        model=m,
        diagnostics=diagnostics,
        n=g.n,
        K=a.K,
        covariate_name=opts.covariate_name,
        dropped_nodes=dropped,
    )
    if opts.bootstrap:
        from .sim import bootstrap

        res = bootstrap(g, a, m, opts.bootstrap, opts.seed, workers=opts.workers, observed_q=q, strict=opts.strict)
        report.p_bootstrap = res.bootstrap_p
        report.bootstrap = res
    return report
