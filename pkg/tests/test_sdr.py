import numpy as np
import pytest

from relaybf import forms, network, sdr
from _oracles import grid_maxmin_single_user


def scalar_problem():
    one = np.array([[1.0 + 0j]])
    uf = forms.UserForms(a=one, abar=one, c=one, cbar=one, user=(0, 0))
    cf = forms.ConstraintForm(d=one, dbar=one, bound=2.0, label="total")
    return [uf], [cf]


def test_feasibility_trivial_and_scalar():
    users, cons = scalar_problem()
    feas, x1, x2 = sdr.feasibility(0.0, users, cons)
    assert feas
    # the scalar closed form: max x/(x+1) at x = X1+X2 = 2 gives 2/3
    feas, x1, x2 = sdr.feasibility(2.0 / 3.0 - 1e-6, users, cons)
    assert feas
    assert abs((x1 + x2)[0, 0].real - 2.0) < 1e-4
    feas, _, _ = sdr.feasibility(0.9, users, cons)
    assert not feas
    with pytest.raises(ValueError):
        sdr.feasibility(-1.0, users, cons)


def test_scalar_gamma_star():
    users, cons = scalar_problem()
    sol = sdr.solve_r2sdr(users, cons)
    assert sol.status == "optimal"
    assert abs(sol.gamma_star - 2.0 / 3.0) < 1e-3
    sol1 = sdr.solve_r1sdr(users, cons)
    assert abs(sol1.gamma_star - 0.5) < 1e-3  # BF: |w|^2 <= 1 at full weight
    assert sol1.x2 is None


def test_no_constraints_rejected():
    users, _ = scalar_problem()
    with pytest.raises(sdr.SdrError):
        sdr.solve_r2sdr(users, [])


def test_matches_grid_oracle_single_user():
    cfg = network.uniform_config("distributed", 2, 1, 1, total_power=2.0)
    r = network.generate_channels(cfg, 9)
    users = forms.build_user_forms(r, cfg)
    cons = forms.build_constraints(r, cfg)
    sol = sdr.solve_r2sdr(users, cons, tol_gamma=1e-5)
    p, s2 = cfg.tx_powers[0], cfg.user_noise[0]
    v1 = r.f[0].conj() * r.g[0]
    v2 = r.f[0] * r.g[0]
    amp1 = np.sqrt(p / s2) * np.abs(v1)
    amp2 = np.sqrt(p / s2) * np.abs(v2)
    cd = np.asarray(cfg.relay_noise) * np.abs(r.g[0]) ** 2 / s2
    dd = np.diag(cons[0].d).real
    oracle = grid_maxmin_single_user(amp1, amp2, cd, cd, dd, cons[0].bound)
    assert abs(sol.gamma_star - oracle) <= 1e-3 * oracle


def test_budget_monotonicity():
    cfg = network.uniform_config("distributed", 3, 2, 4, total_power=1.0)
    r = network.generate_channels(cfg, 12)
    users = forms.build_user_forms(r, cfg)
    small = forms.build_constraints(r, cfg)
    big = [forms.ConstraintForm(c.d, c.dbar, 4.0 * c.bound, c.label) for c in small]
    g_small = sdr.solve_r2sdr(users, small).gamma_star
    g_big = sdr.solve_r2sdr(users, big).gamma_star
    assert g_big >= g_small - 1e-9


def test_infeasible_above_eigen_bound():
    cfg = network.uniform_config("mimo", 2, 1, 2, total_power=2.0)
    r = network.generate_channels(cfg, 30)
    users = forms.build_user_forms(r, cfg)
    cons = forms.build_constraints(r, cfg)
    stacks = sdr._Stacks(users, cons, sdr.SCHEME_BFA)
    hi = sdr._gamma_upper_bound(stacks)
    feas, _, _ = sdr.feasibility(hi, users, cons)
    assert not feas


def test_randomize_rank_one_recovers_gamma():
    users, cons = scalar_problem()
    sol = sdr.solve_r2sdr(users, cons)
    pair = sdr.randomize(sol, users, cons, 20, np.random.default_rng(3))
    # rank-1 covariances: every candidate is a phase-rotated scaled principal
    # vector, so rounding achieves the relaxation value exactly
    assert abs(pair.min_sinr - sol.gamma_star) < 1e-6 + 1e-3 * sol.gamma_star
    assert pair.w1.shape == (1,)
    assert pair.w2.shape == (1,)
    ms, util = sdr.evaluate_pair(users, cons, pair)
    assert util <= 1.0 + 1e-9


def test_randomize_scaling_to_tightest_cap():
    # single cap D = Dbar = I, b = 1: a draw with |xi|^2 + |eta|^2 = q is
    # scaled by 1/sqrt(q); the winner must sit exactly on the cap
    eye = np.eye(2, dtype=complex)
    uf = forms.UserForms(a=eye, abar=eye, c=np.zeros((2, 2)), cbar=np.zeros((2, 2)), user=(0, 0))
    cf = forms.ConstraintForm(d=eye, dbar=eye, bound=1.0, label="total")
    sol = sdr.SdrSolution(
        x1=0.5 * eye, x2=0.5 * eye, gamma_star=1.0, status="optimal",
        bisection_iters=0, scheme=sdr.SCHEME_BFA,
    )
    pair = sdr.randomize(sol, [uf], [cf], 8, np.random.default_rng(4))
    power = np.vdot(pair.w1, pair.w1).real + np.vdot(pair.w2, pair.w2).real
    assert abs(power - 1.0) < 1e-9


def test_randomize_bf_scheme_empty_w2():
    users, cons = scalar_problem()
    sol = sdr.solve_r1sdr(users, cons)
    pair = sdr.randomize(sol, users, cons, 10, np.random.default_rng(5))
    assert pair.w2.size == 0
    assert abs(pair.min_sinr - 0.5) < 1e-3


def test_candidate_count_monotone_common_prefix():
    cfg = network.uniform_config("mimo", 2, 2, 4, total_power=3.0)
    r = network.generate_channels(cfg, 44)
    users = forms.build_user_forms(r, cfg)
    cons = forms.build_constraints(r, cfg)
    sol = sdr.solve_r2sdr(users, cons)
    best = -1.0
    for n_cand in (1, 5, 25, 125):
        pair = sdr.randomize(sol, users, cons, n_cand, np.random.default_rng(77))
        assert pair.min_sinr >= best - 1e-15
        best = pair.min_sinr


def test_rounded_below_relaxation_and_feasible():
    cfg = network.uniform_config("distributed", 4, 2, 8, total_power=2.0,
                                 per_relay_power=0.8)
    r = network.generate_channels(cfg, 50)
    users = forms.build_user_forms(r, cfg)
    cons = forms.build_constraints(r, cfg)
    for solve in (sdr.solve_r1sdr, sdr.solve_r2sdr):
        sol = solve(users, cons)
        assert sol.status == "optimal"
        pair = sdr.randomize(sol, users, cons, 200, np.random.default_rng(6))
        assert pair.min_sinr <= sol.gamma_star + 1e-6
        ms, util = sdr.evaluate_pair(users, cons, pair)
        assert util <= 1.0 + 1e-9
        assert abs(ms - pair.min_sinr) < 1e-9 * max(1.0, ms)


def test_bracketing_invariant():
    cfg = network.uniform_config("mimo", 2, 2, 4, total_power=2.0)
    r = network.generate_channels(cfg, 60)
    users = forms.build_user_forms(r, cfg)
    cons = forms.build_constraints(r, cfg)
    tol = 1e-3
    sol = sdr.solve_r2sdr(users, cons, tol_gamma=tol)
    feas_at, _, _ = sdr.feasibility(sol.gamma_star * (1.0 + tol), users, cons)
    assert not feas_at
    # the witness itself certifies gamma_star
    for uf in users:
        num = np.vdot(uf.a, sol.x1).real + np.vdot(uf.abar, sol.x2).real
        den = np.vdot(uf.c, sol.x1).real + np.vdot(uf.cbar, sol.x2).real
        assert num >= sol.gamma_star * (den + 1.0) - 1e-7 * (1.0 + num)
    for cf in cons:
        lhs = np.vdot(cf.d, sol.x1).real + np.vdot(cf.dbar, sol.x2).real
        assert lhs <= cf.bound * (1.0 + 1e-7)
