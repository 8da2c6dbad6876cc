"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line; the lines are
also collected into a summary section at the end of the pytest run.
"""
import math
from itertools import combinations

import numpy as np
import pytest

from liglearn.estimator import DesignMatrix, SolverConfig, fit_player, gradient, hessian, loss
from liglearn.game_core import enumerate_psne, generate_game, min_payoff_over_psne
from liglearn.harness import ExperimentConfig, aggregate, run_sweep
from liglearn.noise_models import GlobalNoiseModel, LocalNoiseModel, distribution_constants
from liglearn.theory import (
    build_fano_ensemble,
    compute_constants,
    fano_kl,
    fano_model,
    c_min_lower_bound,
)

from conftest import random_game


def curve(records, n):
    rows = sorted((r for r in aggregate(records) if r["n"] == n), key=lambda r: r["c"])
    return [r["c"] for r in rows], [r["probability"] for r in rows]


def transition(cs, ps):
    return next((c for c, p in zip(cs, ps) if p >= 0.5), math.inf)


def crit1_config(out):
    return ExperimentConfig(n_list=[10, 12], k_list=[1], noise="global", q_g=0.01, delta=0.01,
                            C_of_k={1: 10000.0}, trials=40, seed=7, out=str(out))


@pytest.fixture(scope="module")
def global_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("crit1")
    return out, run_sweep(crit1_config(out))


@pytest.fixture(scope="module")
def local_sweep(tmp_path_factory):
    cfg = ExperimentConfig(n_list=[10], k_list=[1], noise="local", q=0.6, delta=0.01,
                           trials=40, seed=7, out=str(tmp_path_factory.mktemp("crit2")))
    return run_sweep(cfg)


def random_model(rng, n):
    """A random game with nonempty PSNE set and an admissible noise model."""
    while True:
        g = random_game(rng, n) if rng.random() < 0.5 else generate_game(n, int(rng.integers(1, min(4, n))), rng)
        ne = enumerate_psne(g)
        if len(ne) == 0 or len(ne) == 2**n:
            continue
        if rng.random() < 0.5:
            lo = len(ne) / 2**n
            return g, GlobalNoiseModel(ne, lo + (1 - lo) * rng.uniform(0.01, 0.99))
        return g, LocalNoiseModel(ne, rng.uniform(0.5 + 1e-3, 1.0 - 1e-3, size=n))


def test_criterion_01_global_phase_transition(global_sweep, report):
    _, records = global_sweep
    parts, ok = [], True
    steps = {}
    for n in (10, 12):
        cs, ps = curve(records, n)
        ok &= ps[0] <= 0.2 and ps[-1] >= 0.9
        steps[n] = transition(cs, ps)
        parts.append(f"n={n}: p(c={cs[0]:g})={ps[0]:.3f} p(c={cs[-1]:g})={ps[-1]:.3f} "
                     f"transition c={steps[n]:g}")
    grid = ExperimentConfig().c_grid
    step = grid[1] - grid[0]
    ok &= abs(steps[10] - steps[12]) <= step + 1e-12
    report(1, ok, "; ".join(parts))
    assert ok


def test_criterion_02_local_phase_transition(local_sweep, report):
    cs, ps = curve(local_sweep, 10)
    ok = ps[0] <= 0.2 and ps[-1] >= 0.9
    report(2, ok, f"n=10 q=0.6: p(c={cs[0]:g})={ps[0]:.3f} p(c={cs[-1]:g})={ps[-1]:.3f} "
                  f"transition c={transition(cs, ps):g}")
    assert ok


def test_recovery_curves_are_nearly_monotone(global_sweep, local_sweep):
    # one inversion of at most 0.1 is tolerated per curve
    curves = [curve(global_sweep[1], 10), curve(global_sweep[1], 12), curve(local_sweep, 10)]
    for _, ps in curves:
        drops = [a - b for a, b in zip(ps, ps[1:]) if b < a]
        assert len(drops) <= 1 and all(d <= 0.1 for d in drops)


def test_criterion_03_normalization(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    for t in range(50):
        n = int(rng.integers(2, 11))
        g, _ = random_model(rng, n)
        ne = enumerate_psne(g)
        lo = len(ne) / 2**n
        for model in (GlobalNoiseModel(ne, lo + (1 - lo) * rng.uniform(0.01, 0.99)),
                      LocalNoiseModel(ne, rng.uniform(0.501, 0.999, size=n))):
            worst = max(worst, abs(model.pmf_all().sum() - 1.0))
    ok = worst <= 1e-12
    report(3, ok, f"50 random equilibrium sets (n<=10), global and local pmf, max |sum-1| = {worst:.2e}")
    assert ok


def test_criterion_04_finite_differences(report):
    rng = np.random.default_rng(4)
    n, m, h = 8, 50, 1e-5
    g_err = h_err = 0.0
    for _ in range(100):
        _, model = random_model(rng, n)
        Z = DesignMatrix.from_actions(model.sample(m, rng), int(rng.integers(n)), n)
        v = rng.normal(scale=0.7, size=n)
        E = np.eye(n)
        fd_g = np.array([(loss(v + h * e, Z) - loss(v - h * e, Z)) / (2 * h) for e in E])
        fd_H = np.array([(gradient(v + h * e, Z) - gradient(v - h * e, Z)) / (2 * h) for e in E])
        g_err = max(g_err, np.abs(fd_g - gradient(v, Z)).max())
        h_err = max(h_err, np.abs(fd_H - hessian(v, Z)).max())
    ok = g_err <= 1e-6 and h_err <= 1e-5
    report(4, ok, f"100 instances: gradient err {g_err:.1e}, Hessian err {h_err:.1e}")
    assert ok


def kkt_violation(v, grad, lam):
    worst = 0.0
    for vj, gj in zip(v, grad):
        if vj != 0:
            worst = max(worst, abs(gj + lam * np.sign(vj)))
        else:
            worst = max(worst, abs(gj) - lam)
    return worst


def test_criterion_05_solver_certificate(report):
    rng = np.random.default_rng(5)
    n = 8
    bad_kkt = not_converged = null_fail = 0
    for _ in range(100):
        _, model = random_model(rng, n)
        m = int(rng.integers(20, 2000))
        Z = DesignMatrix.from_actions(model.sample(m, rng), int(rng.integers(n)), n)
        g0 = np.abs(gradient(np.zeros(n), Z)).max()
        lam = g0 * rng.uniform(0.02, 0.9)
        fit = fit_player(Z, SolverConfig(lam=lam))
        if not fit.converged:
            not_converged += 1
        elif kkt_violation(fit.v_hat, gradient(fit.v_hat, Z), lam) > 1e-7:
            bad_kkt += 1
        for lam0 in (g0, g0 * 1.5):
            if np.any(fit_player(Z, SolverConfig(lam=lam0)).v_hat != 0):
                null_fail += 1
    ok = bad_kkt == 0 and not_converged == 0 and null_fail == 0
    report(5, ok, f"100 instances: KKT failures {bad_kkt}, unconverged {not_converged}, "
                  f"null-threshold failures {null_fail}")
    assert ok


def test_criterion_06_equilibrium_count_bound(report):
    rng = np.random.default_rng(6)
    checked = violations = 0
    while checked < 1000:
        n = int(rng.integers(2, 11))
        g = random_game(rng, n, density=rng.uniform(0.2, 1.0), bias=rng.random() < 0.7)
        ne = enumerate_psne(g)
        if not 1 <= len(ne) < 2**n or min_payoff_over_psne(g, ne) <= 0:
            continue
        checked += 1
        violations += len(ne) > 2 ** (n - 1)
    ok = violations == 0
    report(6, ok, f"{checked} games, {violations} violations")
    assert ok


def test_criterion_07_constant_sandwich(report):
    rng = np.random.default_rng(7)
    n = 8
    pairs = violations = 0
    while pairs < 100:
        g, model = random_model(rng, n)
        dc = distribution_constants(model)
        if not dc.assumption1_holds:
            continue
        players = [i for i in range(n) if np.any(g.player_params(i))]
        if not players:
            continue
        pairs += 1
        for i in players:
            tc = compute_constants(g, model, i)
            # the lower bound can be attained exactly; allow rounding in the last bits
            lo = c_min_lower_bound(g, model, i) * (1 - 1e-12)
            if tc.c_min < lo or tc.d_max > 2**n * dc.p_max * (1 + 1e-12):
                violations += 1
    ok = violations == 0
    report(7, ok, f"{pairs} (game, model) pairs at n=8, {violations} violations")
    assert ok


def test_criterion_08_gradient_bound_coverage(report):
    rng = np.random.default_rng(8)
    n, delta, reps = 8, 0.1, 500
    cases = []
    for kind in ("global", "local"):
        while True:
            g = generate_game(n, int(rng.choice([1, 3])), rng)
            ne = enumerate_psne(g)
            if len(ne) == 0 or min_payoff_over_psne(g, ne) <= 0:
                continue
            if kind == "global":
                model = GlobalNoiseModel(ne, len(ne) / 2**n + 0.2)
            else:
                model = LocalNoiseModel(ne, np.full(n, 0.8))
            break
        m = 300
        bound = {i: compute_constants(g, model, i).nu + math.sqrt(2 / m * math.log(2 * n / delta))
                 for i in range(n)}
        hits = np.zeros(n)
        for _ in range(reps):
            data = model.sample(m, rng)
            for i in range(n):
                grad = gradient(g.player_params(i), DesignMatrix.from_actions(data, i, n))
                hits[i] += np.abs(grad).max() <= bound[i]
        cases.append((kind, hits.min() / reps))
    ok = all(cov >= 0.85 for _, cov in cases)
    report(8, ok, ", ".join(f"{k} noise worst-player coverage {c:.3f}" for k, c in cases))
    assert ok


def brute_kl(p, q):
    return sum(a * math.log(a / b) for a, b in zip(p, q) if a > 0)


def test_criterion_09_fano_construction(report):
    rng = np.random.default_rng(9)
    problems = []
    kl_err = 0.0
    for n in (6, 8):
        q = 1 / n
        if fano_kl(n, q) > math.log(2):
            problems.append(f"kl>log2 at n={n}")
        for k in range(1, n):
            ens = build_fano_ensemble(n, k, cap=math.comb(n, k), rng=rng)
            if len(ens.members) != math.comb(n, k):
                problems.append(f"size n={n} k={k}")
            sets = set()
            for g in ens.members:
                ne = enumerate_psne(g)
                sets.add(ne.actions)
                if len(ne) != 1 or min_payoff_over_psne(g, ne) != 1.0:
                    problems.append(f"member n={n} k={k}")
            if len(sets) != len(ens.members):
                problems.append(f"duplicate PSNE n={n} k={k}")
            pmfs = [fano_model(g, q).pmf_all() for g in ens.members[:12]]
            for a, b in combinations(range(len(pmfs)), 2):
                kl_err = max(kl_err, abs(brute_kl(pmfs[a], pmfs[b]) - fano_kl(n, q)))
    ok = not problems and kl_err <= 1e-12
    report(9, ok, f"n in {{6,8}}, all k: problems {problems or 'none'}, max KL error {kl_err:.1e}")
    assert ok


def test_criterion_10_determinism(global_sweep, tmp_path, report):
    first, _ = global_sweep
    run_sweep(crit1_config(tmp_path))
    same = all((first / f).read_bytes() == (tmp_path / f).read_bytes()
               for f in ("trials.csv", "aggregate.csv"))
    report(10, same, "rerun of criterion 1 gives byte-identical trials.csv and aggregate.csv"
           if same else "CSV bytes differ between runs")
    assert same
