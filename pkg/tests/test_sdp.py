import itertools

import numpy as np
import pytest

from conftest import random_channel
from swipt_ps.model import ChannelRealization, SystemParams, max_rate
from swipt_ps.sdp import (
    INFEASIBLE,
    OPTIMAL,
    SdrAssemblyError,
    assemble_sdr,
    check_schur,
    dump_instance,
    load_instance,
    rank1_feasible,
    rank1_objective,
    schur_lift,
    solve_sdr,
)
from swipt_ps.taylor import build_problem_data, linearize_energy


def make_instance(ch, p, psi, a, eps):
    pd = build_problem_data(ch, p)
    le = linearize_energy(pd, a, p)
    return assemble_sdr(pd, le, psi, a, eps)


def cvx_reference(inst):
    cp = pytest.importorskip("cvxpy")
    K = inst.K
    X = cp.Variable((K + 1, K + 1), symmetric=True)
    Lam, lam = X[:K, :K], X[:K, K]
    cons = [X >> 0, X[K, K] == 1,
            lam >= inst.box_lo, lam <= inst.box_hi,
            cp.diag(Lam) == cp.multiply(inst.diag_coupling, lam),
            cp.trace(inst.rate_Lambda @ Lam) + inst.rate_lambda @ lam >= 0]
    obj = inst.obj_offset + cp.trace(inst.obj_lin_Lambda @ Lam) + inst.obj_lin_lambda @ lam
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.status, prob.value


# -- assembly ---------------------------------------------------------------

def test_assembly_zero_demand(params, h1):
    inst = make_instance(h1, params, 0.0, [0.5, 0.5], 0.1)
    assert inst.rate_factor == 0.0
    assert np.array_equal(inst.rate_lambda, np.zeros(2))
    assert np.allclose(inst.rate_Lambda, 2 * np.outer([0.1681, 0.0841], [0.1681, 0.0841]))
    assert np.allclose(inst.box_lo, [0.4, 0.4]) and np.allclose(inst.box_hi, [0.6, 0.6])


def test_assembly_unit_factor(params, h1):
    inst = make_instance(h1, params, 1.0, [0.5, 0.5], 0.1)
    assert inst.rate_factor == 1.0
    pd = build_problem_data(h1, params)
    assert np.allclose(inst.rate_Lambda, 2 * pd.G1 - pd.Sigma, atol=1e-15)
    assert np.allclose(inst.rate_lambda, -pd.sigma, atol=1e-15)


def test_assembly_clamps_box(params, h1):
    inst = make_instance(h1, params, 0.5, [0.05, 0.95], 0.2)
    assert np.allclose(inst.box_lo, [0.0, 0.75])
    assert np.allclose(inst.box_hi, [0.25, 1.0])


def test_assembly_errors(params, h1):
    with pytest.raises(SdrAssemblyError):
        make_instance(h1, params, -0.1, [0.5, 0.5], 0.1)
    with pytest.raises(SdrAssemblyError):
        make_instance(h1, params, 0.5, [0.5, 0.5], 0.0)


def test_objective_matches_linearised_energy(params, h2, rng):
    from swipt_ps.taylor import approx_energy

    a = np.array([0.3, 0.5, 0.2])
    pd = build_problem_data(h2, params)
    le = linearize_energy(pd, a, params)
    inst = assemble_sdr(pd, le, 0.5, a, 0.1)
    for _ in range(20):
        lam = rng.uniform(0, 1, 3)
        assert rank1_objective(inst, lam) == pytest.approx(approx_energy(le, lam, params), rel=1e-12)


# -- schur complement -------------------------------------------------------

def test_check_schur_examples():
    assert check_schur(np.array([[0.25]]), [0.5])
    assert not check_schur(np.array([[0.2]]), [0.5])
    assert check_schur(np.array([[0.2]]), [0.5], tol=0.1)
    assert check_schur(np.eye(2), [0.5, 0.5])


def test_check_schur_matches_eigen_test(rng):
    for _ in range(500):
        K = int(rng.integers(1, 5))
        lam = rng.uniform(0, 1, K)
        A = rng.normal(size=(K, K))
        C = A @ A.T * rng.uniform(0, 0.2) - rng.uniform(0, 0.05) * np.eye(K)
        Lam = C + np.outer(lam, lam)
        expected = np.linalg.eigvalsh(C)[0] >= 0
        if abs(np.linalg.eigvalsh(C)[0]) < 1e-9:
            continue
        assert check_schur(Lam, lam) == expected


def test_schur_lift_layout():
    X = schur_lift(np.array([[1.0, 2.0], [2.0, 3.0]]), [4.0, 5.0])
    assert np.array_equal(X, [[1, 2, 4], [2, 3, 5], [4, 5, 1]])


# -- solver -----------------------------------------------------------------

def test_zero_radius_limit_returns_expansion_point(params, h1):
    a = np.array([0.4, 0.6])
    inst = make_instance(h1, params, 0.5, a, 1e-7)
    sol = solve_sdr(inst)
    assert sol.optimal
    assert np.allclose(sol.lambda_star, a, atol=2e-7)


def test_single_antenna_endpoint_enumeration(rng):
    p = SystemParams()
    for _ in range(30):
        ch = random_channel(rng, K=1)
        a = rng.uniform(0.05, 0.95, 1)
        eps = rng.uniform(0.01, 0.5)
        psi = rng.uniform(0, max_rate(ch, p, [1.0]))
        inst = make_instance(ch, p, psi, a, eps)
        # with one antenna Lam = a lam, and the lifted matrix forces 0 <= lam <= a
        lo, hi = inst.box_lo[0], min(inst.box_hi[0], a[0])
        cands = [x for x in (lo, hi) if x <= hi]

        def value(x):
            return inst.objective(np.array([x]), np.array([[a[0] * x]]))

        def ok(x):
            return inst.rate_slack(np.array([x]), np.array([[a[0] * x]])) >= -1e-12

        feas = [x for x in cands if ok(x)]
        sol = solve_sdr(inst)
        if not feas:
            assert sol.status == INFEASIBLE
            continue
        assert sol.optimal
        assert sol.objective == pytest.approx(max(value(x) for x in feas), abs=1e-6)


def test_relaxation_upper_bounds_rank_one_points(params, rng):
    for _ in range(20):
        ch = random_channel(rng, K=3)
        a = np.round(rng.uniform(0.05, 0.9, 3), 2)
        psi = rng.uniform(0, 0.6) * max_rate(ch, params, np.ones(3))
        inst = make_instance(ch, params, psi, a, 1.0)
        sol = solve_sdr(inst)
        # lam_k^2 = a_k lam_k leaves lam_k in {0, a_k}
        best = -np.inf
        for lam in itertools.product(*[(0.0, ak) for ak in a]):
            if rank1_feasible(inst, lam):
                best = max(best, rank1_objective(inst, lam))
        if sol.optimal:
            # interior iterates sit below a boundary optimum by at most the duality gap
            assert sol.objective >= best - 1e-6 * (1 + abs(best))
        else:
            assert sol.status == INFEASIBLE and best == -np.inf


def test_matches_cvxpy(params, rng):
    n_checked = 0
    for _ in range(30):
        ch = random_channel(rng)
        a = rng.uniform(0.05, 0.9, ch.K)
        eps = rng.uniform(0.05, 0.5)
        psi = rng.uniform(0, 1) * max_rate(ch, params, np.ones(ch.K))
        inst = make_instance(ch, params, psi, a, eps)
        sol = solve_sdr(inst)
        status, value = cvx_reference(inst)
        if status == "optimal":
            assert sol.optimal
            assert sol.objective == pytest.approx(value, abs=1e-5)
            n_checked += 1
        elif status == "infeasible":
            assert sol.status == INFEASIBLE
    assert n_checked >= 10


def test_solution_satisfies_constraints(params, h2):
    a = np.array([0.4, 0.5, 0.3])
    inst = make_instance(h2, params, 1.0, a, 0.2)
    sol = solve_sdr(inst)
    assert sol.status == OPTIMAL
    lam, Lam = sol.lambda_star, sol.Lambda_star
    assert np.all(lam >= inst.box_lo - 1e-9) and np.all(lam <= inst.box_hi + 1e-9)
    assert np.allclose(np.diag(Lam), a * lam, atol=1e-9)
    assert inst.rate_slack(lam, Lam) >= -1e-9
    assert check_schur(Lam, lam, tol=1e-7)
    assert sol.kkt_residuals.worst() <= 1e-6
    # the lifted PSD condition implies lam_k (a_k - lam_k) >= 0
    assert np.all(lam * (a - lam) >= -1e-7)


def test_infeasible_demand(params, h1):
    # near the all-ID rate, a box far from one cannot meet the demand
    top = max_rate(h1, params, np.ones(2))
    inst = make_instance(h1, params, 0.99 * top, [0.2, 0.2], 0.05)
    sol = solve_sdr(inst)
    assert sol.status == INFEASIBLE
    assert sol.lambda_star is None


def test_deterministic(params, h2):
    inst = make_instance(h2, params, 0.8, [0.3, 0.3, 0.3], 0.15)
    s1, s2 = solve_sdr(inst), solve_sdr(inst)
    assert np.array_equal(s1.lambda_star, s2.lambda_star)
    assert np.array_equal(s1.Lambda_star, s2.Lambda_star)
    assert s1.objective == s2.objective


def test_tolerance_validation(params, h1):
    inst = make_instance(h1, params, 0.5, [0.5, 0.5], 0.1)
    with pytest.raises(ValueError):
        solve_sdr(inst, tol=1e-3)


def test_dump_round_trip(params, h2, tmp_path):
    inst = make_instance(h2, params, 0.8, [0.3, 0.6, 0.2], 0.15)
    path = tmp_path / "inst.txt"
    dump_instance(inst, path)
    text = path.read_text()
    assert text.startswith("# swipt-ps sdr-instance v1\n")
    back = load_instance(path)
    assert back.K == inst.K and back.psi == inst.psi and back.obj_offset == inst.obj_offset
    for name in ("obj_lin_lambda", "obj_lin_Lambda", "rate_Lambda", "rate_lambda",
                 "box_lo", "box_hi", "diag_coupling"):
        assert np.array_equal(getattr(back, name), getattr(inst, name))
    assert solve_sdr(back).objective == solve_sdr(inst).objective


def test_load_rejects_other_files(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("hello\n")
    with pytest.raises(ValueError):
        load_instance(path)


def test_zero_width_box_is_handled():
    ch = ChannelRealization([0.4, 0.3])
    p = SystemParams()
    inst = make_instance(ch, p, 0.0, [0.0, 0.0], 0.2)
    sol = solve_sdr(inst)
    assert sol.optimal
    assert np.allclose(sol.lambda_star, 0.0, atol=1e-9)
