"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (``SKIP`` for the
dataset-dependent criterion); the lines are repeated in the pytest
terminal summary. Run ``python3 tests/test_acceptance.py`` to get just
the lines.
"""

import math
import os
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from modsig import CommunityAssignment, EdgeModel, Graph, ModsigWarning, PiVector, estimate_pi
from modsig.cli import run_command
from modsig.fitting import fit_edge_model
from modsig.io import read_gml
from modsig.modtest import (
    beta_weights,
    bias_alternative,
    bias_hat,
    bias_hat_reference,
    modularity_hat,
    significance_test,
    statistics,
    variance_hat,
    variance_hat_reference,
)
from modsig.nullmodel import clt_standard_errors
from modsig.normal import upper_tail
from modsig.sim import mix64, sample_graph

RESULTS: list[str] = []


def record(number: int, name: str, ok: bool, detail: str, skipped: bool = False):
    status = "SKIP" if skipped else ("PASS" if ok else "FAIL")
    line = f"[{status}] criterion {number:>2} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    if not skipped:
        assert ok, line


def heterogeneous_null(n: int, seed: int):
    """Propensities with expected degrees log-uniform on [10, 100]."""
    rng = np.random.default_rng(seed)
    target = 10.0 * 10.0 ** rng.uniform(0, 1, n)
    pi = target / math.sqrt(target.sum())
    return pi, rng


def random_groups(rng, n, k):
    g = rng.integers(0, k, n)
    g[:k] = np.arange(k)
    return CommunityAssignment.from_values(g.tolist())


def drop_isolated(g: Graph, a: CommunityAssignment):
    if g.isolated().size:
        kept = np.flatnonzero(g.degree > 0)
        return g.induced(kept), a.restrict(kept)
    return g, a


@pytest.fixture(scope="module")
def null_run():
    n, reps = 500, 2000
    pi, rng = heterogeneous_null(n, 2024)
    a = random_groups(rng, n, 5)
    p, m = PiVector(pi), EdgeModel.poisson()
    start = time.perf_counter()
    z = np.empty(reps)
    for r in range(reps):
        g, ar = drop_isolated(sample_graph(p, m, mix64(11, r)), a)
        z[r] = statistics(g, ar, m)[3]
    elapsed = time.perf_counter() - start
    pvals = np.array([upper_tail(x) for x in z])
    return z, pvals, elapsed, float(np.max(pi * (pi.sum() - pi)) / np.min(pi * (pi.sum() - pi)))


def test_criterion_01_null_normality(null_run):
    z, _, elapsed, spread = null_run
    mean, std = float(z.mean()), float(z.std(ddof=1))
    ok = -0.1 <= mean <= 0.1 and 0.9 <= std <= 1.1 and elapsed < 60
    record(1, "null normality", ok,
           f"mean z {mean:+.4f} in [-0.1, 0.1], std {std:.4f} in [0.9, 1.1], "
           f"E d spread {spread:.1f}, {elapsed:.1f}s < 60s")


def test_criterion_02_p_uniformity(null_run):
    _, p, _, _ = null_run
    mean, std = float(p.mean()), float(p.std(ddof=1))
    ks = float(stats.kstest(p, "uniform").statistic)
    ok = 0.47 <= mean <= 0.53 and 0.26 <= std <= 0.32 and ks < 0.05
    record(2, "p-value uniformity", ok,
           f"mean {mean:.4f} in [0.47, 0.53], std {std:.4f} in [0.26, 0.32], KS {ks:.4f} < 0.05")


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(303)
    models = [EdgeModel.bernoulli(), EdgeModel.poisson(), EdgeModel.negbin(0.5)]
    worst = 0.0
    start = time.perf_counter()
    for k in range(200):
        n = int(rng.integers(3, 61))
        p = PiVector(rng.uniform(0.05, 0.95, n))
        a = random_groups(rng, n, int(rng.integers(2, min(n, 8) + 1)))
        m = models[k % 3]
        for fast, ref in ((bias_hat(p, a), bias_hat_reference(p, a)),
                          (variance_hat(p, m, a), variance_hat_reference(p, m, a))):
            worst = max(worst, abs(fast - ref) / max(abs(ref), 1e-300))
    elapsed = time.perf_counter() - start
    record(3, "oracle equivalence", worst <= 1e-9 and elapsed < 10,
           f"worst relative gap {worst:.2e} <= 1e-9 over 200 instances x 3 families, {elapsed:.2f}s < 10s")


def test_criterion_04_path_fixtures():
    g = Graph.from_arrays(["a", "b", "c"], [0, 1], [1, 2], [1.0, 1.0])
    a = CommunityAssignment.from_values([0, 0, 1])
    p = estimate_pi(g)
    bern = (7 / 30) ** 2 * 0.25 + (4 / 15) ** 2 * 0.1875 + 0.1**2 * 0.25
    checks = {
        "Q": (modularity_hat(g, a), 0.5),
        "b": (bias_hat(p, a), 0.05),
        "beta0": (beta_weights(p, a).beta[0], -7 / 15),
        "beta1": (beta_weights(p, a).beta[1], -0.3),
        "beta2": (beta_weights(p, a).beta[2], 0.2),
        "s2 poisson": (variance_hat(p, EdgeModel.poisson(), a), 0.05),
        "s2 bernoulli": (variance_hat(p, EdgeModel.bernoulli(), a), bern),
    }
    worst = max(abs(got - want) for got, want in checks.values())
    ok = worst <= 1e-10 and round(bern, 5) == 0.02944
    record(4, "path-graph fixtures", ok,
           f"max abs error {worst:.1e} <= 1e-10 over {len(checks)} values (Bernoulli s2 = {bern:.6f})")


def test_criterion_05_normal_tail():
    vals = {z: upper_tail(z) for z in (2.36, 3.14, -0.46, 0.0)}
    ok = (9.0e-3 <= vals[2.36] <= 9.3e-3 and 8.3e-4 <= vals[3.14] <= 8.6e-4
          and 0.67 <= vals[-0.46] <= 0.68 and vals[0.0] == 0.5)
    record(5, "normal tail", ok,
           f"p(2.36)={vals[2.36]:.4e}, p(3.14)={vals[3.14]:.4e}, p(-0.46)={vals[-0.46]:.5f}, p(0)={vals[0.0]!r}")


def test_criterion_06_nb_recovery():
    rng = np.random.default_rng(606)
    n, r_true = 200, 0.5
    pi = rng.uniform(0.5, 2.0, n)
    p = PiVector(pi)
    start = time.perf_counter()
    fits = []
    for rep in range(50):
        g = sample_graph(p, EdgeModel.negbin(r_true), mix64(6, rep))
        g = g.induced(np.flatnonzero(g.degree > 0))
        fits.append(fit_edge_model(g, "negbin").r)
    elapsed = time.perf_counter() - start
    med = float(np.median(fits))
    record(6, "NB shape recovery", 0.4 <= med <= 0.6 and elapsed < 60,
           f"median r_hat {med:.4f} in [0.4, 0.6] over 50 fits (range {min(fits):.3f}-{max(fits):.3f}), "
           f"{elapsed:.1f}s < 60s")


def test_criterion_07_power():
    rng = np.random.default_rng(707)
    n = 200
    grp = np.arange(n) % 2
    i, j = np.triu_indices(n, 1)
    mu = np.where(grp[i] == grp[j], 0.09, 0.03)  # within mean 3x between
    g = Graph.from_arrays([str(k) for k in range(n)], i, j, rng.poisson(mu).astype(float))
    a = CommunityAssignment.from_values(grp.tolist())
    g, a = drop_isolated(g, a)
    rep = significance_test(g, a, "poisson")
    record(7, "planted two-block power", rep.p_normal < 1e-6 and rep.z > 5,
           f"z {rep.z:.2f} > 5, p {rep.p_normal:.2e} < 1e-6")


def test_criterion_08_coverage():
    n, reps = 500, 1000
    pi, _ = heterogeneous_null(n, 808)
    p, m = PiVector(pi), EdgeModel.poisson()
    covered = total = 0
    for r in range(reps):
        g = sample_graph(p, m, mix64(8, r))
        if g.isolated().size:
            continue
        est = estimate_pi(g)
        se = clt_standard_errors(est, m).se_pi
        covered += int(np.sum(np.abs(est.pi - pi) <= 1.96 * se))
        total += n
    rate = covered / total
    record(8, "plug-in CLT coverage", 0.92 <= rate <= 0.975,
           f"coverage {rate:.4f} in [0.92, 0.975] over {total // n} replicates x {n} nodes")


def _bias_gap(n: int, degree_scale: float) -> float:
    m = EdgeModel.poisson()
    pi, rng = heterogeneous_null(n, 900 + n)
    pi = pi * math.sqrt(degree_scale)  # multiplies every expected degree by degree_scale
    a = random_groups(rng, n, 5)
    p = PiVector(pi)
    acc = []
    for r in range(100):
        g, ar = drop_isolated(sample_graph(p, m, mix64(n, r)), a)
        est = estimate_pi(g)
        acc.append(abs(bias_hat(est, ar) - bias_alternative(est, m, ar)) / math.sqrt(variance_hat(est, m, ar)))
    return float(np.mean(acc))


def test_criterion_09_bias_approximation():
    # The O(n^-3/2) agreement needs the sparsity assumption ||pi||_1^2 >= n^1.5,
    # i.e. mean degree growing at least like sqrt(n); degrees scale that way here.
    # With degrees held fixed the ratio does not fall between these two n
    # (the pi^2 terms of the gap shrink as n grows); that run is reported too.
    gaps = {n: _bias_gap(n, math.sqrt(n / 200)) for n in (200, 800)}
    fixed = _bias_gap(800, 1.0)
    ok = gaps[800] < gaps[200] and gaps[800] < 0.05
    record(9, "bias approximation", ok,
           f"mean |b-b'|/s {gaps[200]:.4f} (n=200) > {gaps[800]:.4f} (n=800, degrees x2), and < 0.05; "
           f"fixed degrees at n=800: {fixed:.4f}")


BOOKS = Path(os.environ.get("MODSIG_BOOKS_GML", Path(__file__).parent / "data" / "polbooks.gml"))


def test_criterion_10_books():
    if not BOOKS.exists():
        record(10, "books dataset", False, f"no GML at {BOOKS} (set MODSIG_BOOKS_GML)", skipped=True)
        pytest.skip("political-books GML not supplied")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModsigWarning)
        g, table = read_gml(BOOKS)
        g, a, _ = table.assignment(g, "value")
        rep = significance_test(g, a, "bernoulli")
    ok = abs(rep.z - 21) <= 2 and rep.p_normal < 1e-6
    record(10, "books dataset", ok, f"n {g.n}, K {a.K}, z {rep.z:.2f} in 21 +/- 2, p {rep.p_normal:.1e} < 1e-6")


def test_criterion_11_determinism(tmp_path, capsys):
    rng = np.random.default_rng(1111)
    n = 120
    grp = rng.integers(0, 3, n)
    lines = []
    for i in range(n):
        for j in range(i + 1, n):
            k = rng.poisson(0.12 if grp[i] == grp[j] else 0.08)
            if k:
                lines.append(f"n{i}\tn{j}\t{k}\n")
    (tmp_path / "e.tsv").write_text("".join(lines))
    (tmp_path / "c.csv").write_text("node,group\n" + "".join(f"n{i},{grp[i]}\n" for i in range(n)))
    outs = []
    for run in range(2):
        out = tmp_path / f"r{run}.json"
        code, _ = run_command(["test", "--edges", str(tmp_path / "e.tsv"), "--covariates", str(tmp_path / "c.csv"),
                               "--column", "group", "--model", "negbin", "--bootstrap", "1000", "--seed", "7",
                               "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    capsys.readouterr()
    record(11, "CLI determinism", outs[0] == outs[1],
           f"two runs of test --bootstrap 1000 --seed 7: {len(outs[0])} bytes, identical={outs[0] == outs[1]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
