import numpy as np
import pytest

import fairmeasure as fm
from fairmeasure.solver import (_Objective, _corr_batch, _m_batch, _n_batch,
                                box_bounds)
from fairmeasure.unfairness import _m_raw, _n_raw

from conftest import random_process


# -- constraint checking ---------------------------------------------------------

def test_box_slack_at_uniform(two_path):
    for N in (1.0, 1.5, 2.0, 4.0):
        params = fm.ConstraintParams(N=N)
        rep = fm.check_constraints(fm.uniform_measure(two_path.lattice), two_path, params)
        assert rep.feasible
        # lower slack is (1 - 1/N) * mu on every atom
        assert np.allclose(rep.box_lower_slack, (1 - 1 / N) * 0.5, atol=1e-15)
        assert np.allclose(rep.box_upper_slack, (N - 1) * 0.5, atol=1e-15)


def test_correlation_integral_two_identical_assets(two_path_pair):
    # Cov = 0.5625, E|g1 g2| = 2.125 at time 1: integral = 9/34
    U = fm.uniform_measure(two_path_pair.lattice)
    val = fm.correlation_integral(U, two_path_pair, 0, 1)
    assert val == pytest.approx(0.5625 / 2.125, abs=1e-15)
    rep_lo = fm.check_constraints(U, two_path_pair, fm.ConstraintParams(N=2.0, c=0.2))
    assert rep_lo.feasible
    rep_hi = fm.check_constraints(U, two_path_pair, fm.ConstraintParams(N=2.0, c=0.3))
    assert not rep_hi.feasible


def test_box_violation_case(two_path):
    # box per atom is [0.25, 1.0]; 0.9 passes, 0.1 breaks the lower bound
    Q = fm.Measure(two_path.lattice, [0.9, 0.1])
    rep = fm.check_constraints(Q, two_path, fm.ConstraintParams(N=2.0))
    assert not rep.feasible
    assert rep.box_lower_slack[0] == pytest.approx(0.65, abs=1e-15)
    assert rep.box_upper_slack[0] == pytest.approx(0.1, abs=1e-15)
    assert rep.box_lower_slack[1] == pytest.approx(-0.15, abs=1e-15)


def test_unsupported_vector_correlation():
    lat = fm.build_lattice(3, 1)
    vals = np.ones((2, 3, 4))
    vals[1] = 1.0 + np.arange(12).reshape(3, 4) / 10.0
    g = fm.LatticeProcess(lat, 2, 2, vals)
    with pytest.raises(fm.UnsupportedConstraintError):
        fm.check_constraints(fm.uniform_measure(lat), g, fm.ConstraintParams(N=2.0, c=0.1))
    # without a floor the same process is fine
    rep = fm.check_constraints(fm.uniform_measure(lat), g, fm.ConstraintParams(N=2.0))
    assert rep.feasible


def test_constraint_params_validation():
    with pytest.raises(fm.ParameterError):
        fm.ConstraintParams(N=0.8)
    with pytest.raises(fm.ParameterError):
        fm.ConstraintParams(N=2.0, p=0.0)
    with pytest.raises(fm.ParameterError):
        fm.ConstraintParams(N=2.0, objective="z")


# -- projection -------------------------------------------------------------------

def test_projection_identity_on_feasible(two_path):
    params = fm.ConstraintParams(N=2.0)
    base = fm.uniform_measure(two_path.lattice)
    q = np.array([0.5, 0.5])
    out = fm.project_box_simplex(q, params, base)
    assert np.array_equal(out, q)
    q2 = np.array([0.4, 0.6])
    assert np.array_equal(fm.project_box_simplex(q2, params, base), q2)


def test_projection_custom_box_example():
    # fine-grid oracle over the feasible segment q2 = 1 - q1, q in [0.25, 0.75]
    v = np.array([0.9, 0.1])
    lo = np.array([0.25, 0.25])
    hi = np.array([0.75, 0.75])
    grid = np.linspace(0.25, 0.75, 20001)
    dist = (grid - v[0]) ** 2 + ((1 - grid) - v[1]) ** 2
    best = grid[int(np.argmin(dist))]
    assert best == pytest.approx(0.75, abs=1e-12)
    out = fm.project_capped_simplex(v, lo, hi)
    assert np.allclose(out, [0.75, 0.25], atol=1e-12)


def test_projection_feasible_to_tolerance():
    rng = np.random.default_rng(6)
    for _ in range(30):
        lat = fm.build_lattice(2, int(rng.integers(1, 4)))
        lo, hi = box_bounds(lat, float(rng.uniform(1.0, 3.0)))
        v = rng.normal(0.0, 1.0, lat.n_paths)
        q = fm.project_capped_simplex(v, lo, hi)
        assert abs(q.sum() - 1.0) <= 1e-12
        assert np.all(q >= lo - 1e-12) and np.all(q <= hi + 1e-12)
        # idempotent and a true minimizer against a random feasible comparison point
        again = fm.project_capped_simplex(q, lo, hi)
        assert np.abs(again - q).max() <= 1e-12
        other = fm.project_capped_simplex(rng.uniform(lo, hi), lo, hi)
        assert ((q - v) ** 2).sum() <= ((other - v) ** 2).sum() + 1e-12


def test_projection_empty_box():
    with pytest.raises(fm.ParameterError):
        fm.project_capped_simplex(np.array([0.5, 0.5]),
                                  np.array([0.6, 0.6]), np.array([0.7, 0.7]))


# -- batched evaluators agree with the reference implementation --------------------

def test_batch_evaluators_match_reference():
    rng = np.random.default_rng(12)
    for b, K in [(2, 1), (2, 2), (4, 1)]:
        lat = fm.build_lattice(b, K)
        g = random_process(rng, lat, n=2, d=1, low=0.3, high=3.0)
        Qmat = rng.uniform(0.05, 0.5, (17, lat.n_paths))
        Qmat /= Qmat.sum(axis=1, keepdims=True)
        for p in (1.0, 2.0, 3.0):
            batch = _m_batch(Qmat, g, p)
            ref = np.array([_m_raw(q, g, p, True) for q in Qmat])
            assert np.allclose(batch, ref, rtol=1e-12, atol=1e-15)
        batch_n = _n_batch(Qmat, g)
        ref_n = np.array([_n_raw(q, g) for q in Qmat])
        assert np.allclose(batch_n, ref_n, rtol=1e-12, atol=1e-15)
        batch_c = _corr_batch(Qmat, g, 0, 1)
        from fairmeasure.solver import _corr_integral_raw
        ref_c = np.array([_corr_integral_raw(q, g, 0, 1) for q in Qmat])
        assert np.allclose(batch_c, ref_c, rtol=1e-12, atol=1e-15)


# -- minimize -----------------------------------------------------------------------

def test_minimize_recovers_risk_neutral_measure(two_path):
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=4))
    assert rep.feasible
    assert rep.value <= 1e-8
    assert np.allclose(rep.measure.weights, [1 / 3, 2 / 3], atol=1e-3)
    assert rep.kkt_residual <= 1e-5


def test_minimize_n_objective_zero(two_path):
    params = fm.ConstraintParams(N=2.0, objective="n")
    rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=4, gradient="analytic"))
    assert rep.feasible
    assert rep.value <= 1e-8
    assert np.allclose(rep.measure.weights, [1 / 3, 2 / 3], atol=1e-3)


def test_minimize_box_edge(two_path):
    params = fm.ConstraintParams(N=1.2, p=2.0, objective="m")
    rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=4))
    # the box [1/2.4, 0.6] excludes 1/3: optimum sits at the near edge
    assert np.allclose(rep.measure.weights, [1 / 2.4, 1 - 1 / 2.4], atol=1e-6)
    oracle = fm.brute_force_min(two_path, params, resolution=2000)
    assert rep.value == pytest.approx(oracle.value, abs=1e-6)
    assert rep.value == pytest.approx((0.5 - 1.5 / 2.4) ** 2, rel=1e-9)


def test_minimize_never_worse_than_base(two_path):
    U = fm.uniform_measure(two_path.lattice)
    for objective, base_val in [("m", 0.0625), ("n", 0.25)]:
        params = fm.ConstraintParams(N=1.5, p=2.0, objective=objective)
        rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=2, max_iter=40))
        assert rep.feasible
        assert 0.0 <= rep.value <= base_val + 1e-12


def test_minimize_constant_process_returns_zero():
    lat = fm.build_lattice(2, 2)
    const = fm.LatticeProcess(lat, 1, 1, np.full((3, 4, 1), 2.0))
    rep = fm.minimize(const, fm.ConstraintParams(N=2.0), fm.SolveOptions(restarts=2))
    assert rep.feasible
    assert rep.value == 0.0
    assert rep.kkt_residual == 0.0


def test_minimize_infeasible_floor(two_path_pair):
    params = fm.ConstraintParams(N=2.0, c=0.9, p=2.0)
    rep = fm.minimize(two_path_pair, params,
                      fm.SolveOptions(restarts=3, max_iter=120))
    assert not rep.feasible
    assert any(s < -fm.solver.FEASIBILITY_TOL for s in rep.constraint_slacks.values())


def test_minimize_feasible_floor_active(two_path_pair):
    # floor above the uniform value 9/34 but below the achievable maximum
    params = fm.ConstraintParams(N=2.0, c=0.30, p=2.0)
    rep = fm.minimize(two_path_pair, params, fm.SolveOptions(restarts=4, max_iter=200))
    assert rep.feasible
    U = fm.uniform_measure(two_path_pair.lattice)
    assert rep.value <= _m_raw(U.weights, two_path_pair, 2.0, True) + 1e-12
    oracle = fm.brute_force_min(two_path_pair, params, resolution=2000)
    assert rep.value <= oracle.value + 1e-6


def test_minimize_monotone_in_N(two_path):
    values = []
    prev = None
    for N in (1.1, 1.5, 2.0, 3.0):
        params = fm.ConstraintParams(N=N, p=2.0, objective="m")
        extra = [prev] if prev is not None else []
        rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=3), extra_starts=extra)
        values.append(rep.value)
        prev = rep.measure.weights
    assert all(values[i + 1] <= values[i] + 1e-6 for i in range(len(values) - 1))


def test_refinement_never_increases_optimum(two_path):
    params = fm.ConstraintParams(N=1.4, p=2.0, objective="m")
    coarse = fm.minimize(two_path, params, fm.SolveOptions(restarts=3))
    fine_g = fm.duplicate_branches(two_path, copies=2)
    lifted = fm.lift_measure(coarse.measure, copies=2)
    fine = fm.minimize(fine_g, params, fm.SolveOptions(restarts=3),
                       extra_starts=[lifted.weights])
    assert fine.value <= coarse.value + 1e-6


# -- brute force ---------------------------------------------------------------------

def test_brute_force_canonical(two_path):
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    res = fm.brute_force_min(two_path, params, resolution=2000)
    assert res.value <= 2e-7
    assert res.measure.weights[0] == pytest.approx(1 / 3, abs=5e-4)


def test_brute_force_singleton_when_N_is_one(two_path):
    params = fm.ConstraintParams(N=1.0, p=2.0, objective="m")
    res = fm.brute_force_min(two_path, params, resolution=50)
    assert np.allclose(res.measure.weights, 0.5, atol=1e-12)
    assert res.value == pytest.approx(0.0625, abs=1e-12)


def test_brute_force_tie_breaks_lexicographically():
    lat = fm.build_lattice(2, 1)
    const = fm.LatticeProcess(lat, 1, 1, np.full((2, 2, 1), 1.0))
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    res = fm.brute_force_min(const, params, resolution=4)
    assert res.value == 0.0
    # every grid point ties at 0; the first (lexicographically smallest) wins
    assert res.measure.weights[0] == pytest.approx(0.25, abs=1e-12)


def test_brute_force_size_limits():
    lat = fm.build_lattice(2, 3)
    g = random_process(np.random.default_rng(0), lat)
    with pytest.raises(fm.SizeBudgetError):
        fm.brute_force_min(g, fm.ConstraintParams(N=2.0), resolution=10)
    small = fm.build_lattice(2, 1)
    g2 = random_process(np.random.default_rng(0), small)
    with pytest.raises(fm.ParameterError):
        fm.brute_force_min(g2, fm.ConstraintParams(N=2.0), resolution=5000)


def test_brute_force_infeasible_floor(two_path_pair):
    params = fm.ConstraintParams(N=2.0, c=0.9, p=2.0)
    with pytest.raises(fm.InfeasibleError):
        fm.brute_force_min(two_path_pair, params, resolution=200)


# -- KKT residual -----------------------------------------------------------------------

def test_kkt_residual_examples(two_path):
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    at_opt = fm.kkt_residual(fm.Measure(two_path.lattice, [1 / 3, 2 / 3]), two_path, params)
    assert at_opt <= 1e-5
    at_base = fm.kkt_residual(fm.uniform_measure(two_path.lattice), two_path, params)
    assert at_base > 1e-3
    lat = two_path.lattice
    const = fm.LatticeProcess(lat, 1, 1, np.full((2, 2, 1), 1.0))
    everywhere = [fm.uniform_measure(lat), fm.Measure(lat, [0.3, 0.7])]
    for Q in everywhere:
        assert fm.kkt_residual(Q, const, params) == 0.0


# -- gradients ---------------------------------------------------------------------------

def test_analytic_gradient_matches_fd():
    rng = np.random.default_rng(31)
    for b, K in [(2, 1), (2, 2), (4, 1)]:
        lat = fm.build_lattice(b, K)
        lo, hi = box_bounds(lat, 2.5)
        for _ in range(6):
            g = random_process(rng, lat, n=2, d=1, low=0.3, high=3.0)
            q = fm.project_capped_simplex(rng.uniform(lo, hi), lo, hi)
            for params in [fm.ConstraintParams(N=2.5, p=1.5, objective="m"),
                           fm.ConstraintParams(N=2.5, p=2.0, objective="m"),
                           fm.ConstraintParams(N=2.5, p=3.0, objective="m"),
                           fm.ConstraintParams(N=2.5, objective="n")]:
                obj = _Objective(g, params, 0.0)
                ana = obj.gradient(q, "analytic", 1e-6)
                fd = obj.gradient(q, "fd", 1e-6)
                scale = max(np.linalg.norm(ana), np.linalg.norm(fd))
                assert np.linalg.norm(ana - fd) <= 1e-4 * scale


def test_analytic_gradient_matches_fd_with_penalty(two_path_pair):
    params = fm.ConstraintParams(N=2.0, c=0.35, p=2.0)
    obj = _Objective(two_path_pair, params, rho=25.0)
    rng = np.random.default_rng(8)
    lo, hi = box_bounds(two_path_pair.lattice, 2.0)
    for _ in range(8):
        q = fm.project_capped_simplex(rng.uniform(lo, hi), lo, hi)
        ana = obj.gradient(q, "analytic", 1e-6)
        fd = obj.gradient(q, "fd", 1e-6)
        scale = max(np.linalg.norm(ana), np.linalg.norm(fd))
        assert np.linalg.norm(ana - fd) <= 1e-4 * scale


# -- reports ------------------------------------------------------------------------------

def test_solve_report_contents(two_path):
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    rep = fm.minimize(two_path, params, fm.SolveOptions(restarts=2))
    assert rep.iterations >= 1
    assert len(rep.trace) == rep.iterations
    assert set(rep.constraint_slacks) == {"box_lower", "box_upper", "normalization"}
    assert all(s >= -fm.solver.FEASIBILITY_TOL for s in rep.constraint_slacks.values())


def test_minimize_deterministic_given_seed(two_path):
    params = fm.ConstraintParams(N=1.7, p=2.0, objective="m")
    reps = [fm.minimize(two_path, params, fm.SolveOptions(restarts=5, seed=42))
            for _ in range(2)]
    assert reps[0].value == reps[1].value
    assert np.array_equal(reps[0].measure.weights, reps[1].measure.weights)
    assert reps[0].iterations == reps[1].iterations


def test_minimize_workers_match_serial(two_path):
    params = fm.ConstraintParams(N=2.0, p=2.0, objective="m")
    serial = fm.minimize(two_path, params, fm.SolveOptions(restarts=4, workers=1))
    threaded = fm.minimize(two_path, params, fm.SolveOptions(restarts=4, workers=4))
    assert serial.value == threaded.value
    assert np.array_equal(serial.measure.weights, threaded.measure.weights)
