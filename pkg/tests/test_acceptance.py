"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. Tolerances are pinned here
and nowhere else; seeds are fixed so every number reproduces bit for bit.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.linalg import null_space
from scipy.optimize import LinearConstraint, minimize

import entropywalks as ew
from entropywalks.certify import CERTIFIED
from entropywalks.runner import _spin_index, scale_study
from entropywalks.sampling import glauber_chain_sample, occupancy, subset_chain_sample


def _report(name, detail):
    print(f"[PASS] {name}: {detail}")


# --------------------------------------------------------------------------
# 1. rank-1 entropy contraction of the erase-one projection


def test_criterion_01_rank_one_contraction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = math.inf
    for n in (2, 3, 4, 5):
        for _ in range(50):
            u = rng.normal(size=n)
            u *= math.sqrt(rng.uniform(0.05, 0.9)) / np.linalg.norm(u)
            h = rng.normal(size=n)
            rep = ew.rank_one_contraction_check(u, h, trials=200,
                                                seed=int(rng.integers(2 ** 31)))
            worst = min(worst, rep.worst_contraction_margin)
            assert rep.worst_contraction_margin >= -1e-10, (n, u, h)
    wall = time.perf_counter() - t0
    assert wall < 120.0
    _report("criterion 1", f"200 models x 200 nu, worst slack {worst:.3e}, {wall:.1f}s")


# --------------------------------------------------------------------------
# 2. tangent inequality for uniform densities and their field shifts


def test_criterion_02_tangent_inequality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    cases = [(2, 1), (3, 1), (3, 2), (4, 2), (5, 2), (5, 3), (6, 3), (7, 3),
             (8, 3), (8, 4)]
    worst = math.inf
    count = 0
    for n, k in cases:
        base = ew.uniform_density(n, k)
        lam = rng.uniform(0.05, 20.0, size=n)
        for mu in (base, ew.external_field(base, lam)):
            cert = ew.tangent_check(mu, 1.0, num_points=1000,
                                    seed=int(rng.integers(2 ** 31)))
            worst = min(worst, cert.margin)
            count += 1
            assert cert.margin >= -1e-12, (n, k, cert.margin)
    wall = time.perf_counter() - t0
    assert count == 20 and wall < 30.0
    _report("criterion 2", f"20 instances x 1000+ points, worst slack {worst:.3e}, {wall:.1f}s")


# --------------------------------------------------------------------------
# 3. minimum relative entropy: dual equals exhaustive primal


def _primal_oracle(mu, q, nu_feasible, seed, n_starts=12):
    """Independent primal minimizer over {nu >= 0 : nu D = q}: feasible
    polytope sampling (null-space grid around a feasible point) + SLSQP
    polish, feasibility-checked before accepting a value."""
    p = mu.probs
    D = mu.indicator / mu.k
    m = mu.size
    rng = np.random.default_rng(seed)
    logp = np.log(p)

    def obj(nu):
        nu = np.clip(nu, 1e-300, None)
        return float(np.sum(nu * (np.log(nu) - logp)))

    N = null_space(D.T)
    starts = [nu_feasible]
    tries = 0
    while N.shape[1] > 0 and len(starts) < n_starts and tries < 200:
        tries += 1
        cand = nu_feasible + N @ (rng.normal(size=N.shape[1]) * 0.5)
        if np.all(cand >= 0):
            starts.append(cand)
    best = obj(nu_feasible)
    cons = [LinearConstraint(D.T, q, q)]
    for x0 in starts:
        res = minimize(obj, x0, constraints=cons, bounds=[(0, 1)] * m,
                       method="SLSQP", options={"maxiter": 500, "ftol": 1e-14})
        nu = np.clip(res.x, 0, None)
        if np.max(np.abs(D.T @ nu - q)) < 1e-8 and abs(nu.sum() - 1) < 1e-8:
            best = min(best, obj(nu))
    return best


def test_criterion_03_dual_equals_primal():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = 0.0
    for trial in range(20):
        n = int(rng.integers(3, 7))
        k = int(rng.integers(1, n))
        sets = list(itertools.combinations(range(n), k))
        rng.shuffle(sets)
        sets = sets[:min(10, len(sets))]
        mu = ew.make_density(n, k, [(s, rng.uniform(0.2, 2.0)) for s in sets])
        nu0 = rng.dirichlet(np.ones(mu.size))
        q = nu0 @ mu.indicator / mu.k
        dual = ew.min_entropy_dual(mu, q).value
        primal = _primal_oracle(mu, q, nu0, seed=trial)
        worst = max(worst, abs(dual - primal))
        assert abs(dual - primal) < 1e-4, (trial, dual, primal)
    # boundary case: forced point mass
    sol = ew.min_entropy_dual(ew.uniform_density(3, 2), [0.5, 0.5, 0.0])
    assert abs(sol.value - math.log(3)) < 1e-6
    wall = time.perf_counter() - t0
    assert wall < 120.0
    _report("criterion 3", f"20 duals vs primal oracle, worst gap {worst:.2e}; "
                           f"log(3) boundary exact, {wall:.1f}s")


# --------------------------------------------------------------------------
# 4. multi-step contraction constant on the 2-fold distribution


def test_criterion_04_two_fold_kappa_and_telescope():
    fold = ew.r_fold(ew.uniform_density(4, 2), 2)
    rep = ew.contraction_coefficient(fold, 2, trials=512, seed=404, alpha=0.5)
    assert rep.kappa_bound == pytest.approx(1 / 6)
    assert rep.coefficient <= 1 - 1 / 6 + 1e-8
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        w = rng.dirichlet(np.ones(fold.size))
        nu = ew.make_density(fold.n, fold.k, list(zip(fold.sets, w)))
        tp = ew.telescope_profile(nu, fold, alpha=0.5)
        kl = ew.kl_divergence(nu.probs, fold.probs)
        gap = abs(tp.deltas.sum() - kl)
        worst = max(worst, gap)
        assert gap < 1e-12
    _report("criterion 4", f"measured {rep.coefficient:.6f} <= {1 - 1/6:.6f}; "
                           f"telescoping identity within {worst:.1e} on 100 nu")


# --------------------------------------------------------------------------
# 5. reducibility boundary of the fold


def test_criterion_05_fold_reducibility():
    import scipy.sparse.csgraph as csg

    fold = ew.r_fold(ew.uniform_density(4, 2), 2)
    K1 = ew.down_up_kernel(fold, 3)
    assert np.array_equal(K1.dense(), np.eye(fold.size))
    K2 = ew.down_up_kernel(fold, 2)
    ncomp = csg.connected_components((K2.dense() > 0).astype(int),
                                     directed=False)[0]
    sr = ew.spectrum_report(K2)
    assert ncomp == 1
    assert sr.gap > 1e-9
    assert sr.min_eigenvalue >= -1e-9
    _report("criterion 5", f"k<->k-1 kernel is exactly the identity; "
                           f"k<->k-2 irreducible with gap {sr.gap:.4f}")


# --------------------------------------------------------------------------
# 6. rank-1 concavity profile certificates


def test_criterion_06_rank_one_profile():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    worst_eig_margin = math.inf
    worst_ineq = math.inf
    for _ in range(100):
        n = int(rng.integers(2, 9))
        u = rng.normal(size=n)
        u *= rng.uniform(0.1, 0.95) / np.linalg.norm(u)
        h = rng.normal(size=n)
        cert = ew.rank_one_flc_certify(u, h, shifts=200,
                                       seed=int(rng.integers(2 ** 31)),
                                       eig_tol=1e-8, ineq_tol=1e-10)
        assert cert.verdict == CERTIFIED, (u, h, cert.witness)
        worst_eig_margin = min(worst_eig_margin, cert.margin)
    wall = time.perf_counter() - t0
    assert wall < 300.0
    _report("criterion 6", f"100 models x 200 shifts certified, "
                           f"worst margin {worst_eig_margin:.2e}, {wall:.1f}s")


# --------------------------------------------------------------------------
# 7. Glauber MLSI bracket vs the operator-norm bound


def test_criterion_07_glauber_mlsi_bracket():
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    worst = math.inf
    for _ in range(30):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n))
        base = ew.psd_shift(ew.make_ising(0.5 * (A + A.T), np.zeros(n)))
        target = rng.uniform(0.05, 0.9)
        model = ew.make_ising(base.interaction * (target / base.op_norm),
                              rng.normal(size=n))
        est = ew.mlsi_estimate(ew.glauber_kernel(model), trials=192,
                               seed=int(rng.integers(2 ** 31)))
        bound = (1.0 - model.op_norm) / n
        worst = min(worst, est.upper - bound)
        assert est.upper >= bound - 1e-8, (n, model.op_norm, est.upper, bound)
        assert est.lower <= est.upper + 1e-6, (est.lower, est.upper)
    wall = time.perf_counter() - t0
    _report("criterion 7", f"30 PSD models: worst (upper - bound) {worst:.4f}, "
                           f"bracket closed, {wall:.1f}s")


# --------------------------------------------------------------------------
# 8. exchange inequality sweep with huge fields, log space


def test_criterion_08_exchange_sweep():
    rng = np.random.default_rng(808)
    worst = -math.inf
    for _ in range(20):
        n = int(rng.integers(2, 9))
        A = rng.normal(size=(n, n))
        base = ew.make_ising(0.5 * (A + A.T), np.zeros(n))
        scale = rng.uniform(0.1, 1.0) / base.op_norm
        h = rng.uniform(-1e3, 1e3, size=n)
        model = ew.make_ising(base.interaction * scale, h)
        rep = ew.exchange_check(model, pairs="all")
        assert np.isfinite(rep.max_log_ratio)
        assert rep.max_log_ratio <= 4.0 * math.sqrt(n) * model.op_norm + 1e-10
        assert rep.max_log_ratio <= 4.0 * math.sqrt(n) + 1e-10
        worst = max(worst, rep.max_log_ratio - rep.log_bound)
    _report("criterion 8", f"20 exhaustive sweeps, |h| up to 1e3, "
                           f"worst bound slack {-worst:.3f} (log scale)")


# --------------------------------------------------------------------------
# 9. Curie-Weiss scaling bands


def test_criterion_09_curie_weiss_scaling():
    rows, summary = scale_study([8, 10, 12], 0.5, seed=909, walk_runs=0)
    for r in rows:
        assert 1 / 3 <= r["gap_n_over_delta"] <= 3.0, r
        assert 1 / 6 <= r["tmix_over_nlogn"] <= 6.0, r
    assert abs(summary["gap_exponent"] + 1.0) <= 0.3
    _report("criterion 9", f"gap*n/delta in {summary['gap_band']}, "
                           f"tmix/(n log n / delta) in {summary['tmix_band']}, "
                           f"gap ~ n^{summary['gap_exponent']:.3f}")


# --------------------------------------------------------------------------
# 10. simulator fidelity and throughput


def test_criterion_10_simulator_fidelity_and_speed():
    rng = np.random.default_rng(1010)
    runs = 100_000
    eps_horizon = 0.02
    results = []

    def check_subset(mu, ell, start, seed):
        K = ew.down_up_kernel(mu, ell)
        t = ew.mixing_time(K, K.row_states.index(start), eps_horizon)
        masks = subset_chain_sample(mu, ell, start, t, runs, seed=seed)
        emp = occupancy(masks, mu)
        tv = ew.tv_distance(emp, mu.probs)
        results.append((f"subset k={mu.k} ell={ell}", t, tv))
        assert tv <= 0.05

    def check_glauber(model, seed):
        K = ew.glauber_kernel(model)
        start = tuple([1] * model.n)
        t = ew.mixing_time(K, K.row_states.index(start), eps_horizon)
        X = glauber_chain_sample(model, np.ones(model.n, dtype=np.int8), t,
                                 runs, seed=seed)
        emp = np.bincount(_spin_index(X), minlength=1 << model.n) / runs
        tv = ew.tv_distance(emp, K.stationary)
        results.append((f"glauber n={model.n}", t, tv))
        assert tv <= 0.05

    check_subset(ew.uniform_density(3, 2), 1, (0, 1), 11)
    skew = ew.make_density(4, 2, [(s, w) for s, w in zip(
        itertools.combinations(range(4), 2), (3.0, 1.0, 0.5, 1.5, 2.0, 1.0))])
    check_subset(skew, 1, (0, 1), 12)
    check_subset(ew.r_fold(ew.uniform_density(4, 2), 2), 2, (0, 1, 2, 3), 13)
    check_glauber(ew.curie_weiss(4, 0.5), 14)
    u = rng.normal(size=5)
    u *= math.sqrt(0.5) / np.linalg.norm(u)
    check_glauber(ew.make_rank_one(u, rng.normal(size=5)), 15)

    # throughput: rank-1 cached updates at n = 10^4
    ubig = rng.normal(size=10_000)
    ubig *= 0.9 / np.linalg.norm(ubig)
    model = ew.make_rank_one(ubig, rng.normal(size=10_000))
    _, secs = ew.glauber_throughput(model, 10 ** 7, seed=16)
    rate = 10 ** 7 / secs
    assert secs < 10.0
    assert rate >= 1e6
    detail = "; ".join(f"{name} t*={t} tv={tv:.3f}" for name, t, tv in results)
    _report("criterion 10", f"{detail}; rank-1 rate {rate/1e6:.1f}M steps/s "
                            f"({secs:.2f}s for 1e7)")


# --------------------------------------------------------------------------
# 11. Dobrushin entries of rank-1 conditionals under the tanh bound


def test_criterion_11_dobrushin_tanh_bound():
    rng = np.random.default_rng(1111)
    worst = math.inf
    for _ in range(50):
        n = int(rng.integers(3, 7))
        u = rng.uniform(0.05, 1.0, size=n)
        u /= max(1.0, np.linalg.norm(u)) * rng.uniform(1.0, 1.6)
        h = rng.normal(size=n)
        cond = ew.make_rank_one(u[1:], h[1:] + u[0] * u[1:])
        R = ew.dobrushin_matrix(cond)
        T = np.tanh(np.outer(u[1:], u[1:]))
        np.fill_diagonal(T, 0.0)
        margin = float(np.min(T - R + 2.0 * np.eye(n - 1)))
        worst = min(worst, margin)
        assert np.all(R <= T + 1e-12 + 2.0 * np.eye(n - 1)), (u, R, T)
    _report("criterion 11", f"50 conditionals, worst tanh-bound margin {worst:.2e}")
