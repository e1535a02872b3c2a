"""Tests for the menu constructions and their verification oracles."""

import numpy as np
import pytest

import statmenus as sm
from statmenus.contracts import Contract
from statmenus.errors import InfeasibleMenuError, InvalidPotentialError

ALPHA = 0.25


def anchored_schedule(eta, q_bar, knots=513):
    """Strictly decreasing slack that hits exactly zero at the worst type."""
    zs = np.linspace(0.0, q_bar, knots)
    values = eta * ((1 - zs) ** 2 - (1 - q_bar) ** 2)
    return sm.tabulated_schedule(zs, values)


def fdr_thresholds_on(qs, objective, model):
    return [(float(q), sm.fdr_threshold(float(q), objective, model)) for q in qs]


# ---------------------------------------------------------------------------
# general construction from a potential
# ---------------------------------------------------------------------------


def make_discrete_potential(points, subgrads, boundary=1.0):
    """Discrete convex potential with each subgradient strictly between the
    neighboring chord slopes."""
    points = list(points)
    values = [0.0] * len(points)
    values[-1] = boundary
    for i in range(len(points) - 2, -1, -1):
        chord = 0.5 * (subgrads[i] + subgrads[i + 1])
        values[i] = values[i + 1] - chord * (points[i + 1] - points[i])
    return sm.tabulated_potential(points, values, subgrads)


def test_truthful_utility_equals_potential(gm1, fdr25, five_types):
    G = make_discrete_potential(five_types, [-40.0, -25.0, -12.0, -6.0, -2.0])
    menu = sm.build_from_potential(G, fdr_thresholds_on(five_types, fdr25, gm1), gm1)
    for p in menu.support:
        assert sm.utility(p, menu.contract_for(p), gm1) == pytest.approx(G.value(p), abs=1e-10)


def test_reward_reproduces_subgradient(gm1, fdr25, five_types):
    G = make_discrete_potential(five_types, [-40.0, -25.0, -12.0, -6.0, -2.0])
    menu = sm.build_from_potential(G, fdr_thresholds_on(five_types, fdr25, gm1), gm1)
    for p, c in zip(menu.support, menu.contracts):
        slope = c.reward * (c.tau - sm.power(gm1, c.tau))
        assert slope == pytest.approx(G.subgradient(p), abs=1e-12)


def test_potential_route_matches_fixed_reward_costs(gm1, fdr25):
    """The constant-reward closed form agrees with the general recipe fed
    its own potential."""
    direct = sm.build_fixed_reward(100.0, 0.45, 0.85, fdr25, gm1, n=33)
    G = sm.fixed_reward_potential(100.0, 0.85, fdr25, gm1)
    alt = sm.build_from_potential(
        G, [(p, c.tau) for p, c in zip(direct.support, direct.contracts)], gm1
    )
    for a, b in zip(direct.contracts, alt.contracts):
        assert a.cost == pytest.approx(b.cost, abs=1e-8)
        assert a.reward == pytest.approx(b.reward, abs=1e-8)


def test_potential_route_matches_varying_reward(gm1, fdr25):
    q_bar = 0.8
    tau_bar = sm.fdr_threshold(q_bar, fdr25, gm1)
    base = Contract(tau_bar, 100.0, sm.zero_utility_cost(q_bar, tau_bar, 100.0, gm1))
    eps = sm.quadratic_schedule(0.3)
    thresholds = fdr_thresholds_on(np.linspace(0.3, q_bar, 21), fdr25, gm1)
    direct = sm.build_varying_reward(base, eps, thresholds, gm1)
    G = sm.varying_reward_potential(base, q_bar, eps, gm1)
    alt = sm.build_from_potential(G, thresholds, gm1)
    for a, b in zip(direct.contracts, alt.contracts):
        assert a.cost == pytest.approx(b.cost, abs=1e-8)
        assert a.reward == pytest.approx(b.reward, abs=1e-10)


def test_invalid_potentials_rejected(gm1, fdr25, five_types):
    thresholds = fdr_thresholds_on(five_types, fdr25, gm1)
    flat = sm.tabulated_potential(five_types, [1.0] * 5, [-1.0] * 5)  # line, not strictly convex
    with pytest.raises(InvalidPotentialError):
        sm.build_from_potential(flat, thresholds, gm1)
    positive_grad = make_discrete_potential(five_types, [-4.0, -3.0, -2.0, -1.0, 0.5])
    with pytest.raises(InvalidPotentialError):
        sm.build_from_potential(positive_grad, thresholds, gm1)
    negative_boundary = make_discrete_potential(
        five_types, [-40.0, -25.0, -12.0, -6.0, -2.0], boundary=-1.0
    )
    with pytest.raises(InvalidPotentialError):
        sm.build_from_potential(negative_boundary, thresholds, gm1)


def test_boundary_thresholds_rejected(gm1):
    G = make_discrete_potential([0.3, 0.7], [-5.0, -1.0])
    with pytest.raises(ValueError):
        sm.build_from_potential(G, [(0.3, 0.5), (0.7, 1.0)], gm1)  # tau=1 has no margin


# ---------------------------------------------------------------------------
# varying-reward family
# ---------------------------------------------------------------------------


def test_varying_reward_boundary_equals_base(gm1, fdr25):
    """With a slack hitting zero at the worst type, the boundary contract is
    the base contract."""
    q_bar = 0.8
    tau_bar = sm.fdr_threshold(q_bar, fdr25, gm1)
    base = Contract(tau_bar, 100.0, sm.zero_utility_cost(q_bar, tau_bar, 100.0, gm1))
    thresholds = fdr_thresholds_on(np.linspace(0.3, q_bar, 33), fdr25, gm1)
    menu = sm.build_varying_reward(base, anchored_schedule(0.5, q_bar), thresholds, gm1)
    top = menu.contracts[-1]
    assert top.reward == pytest.approx(base.reward, abs=1e-8)
    assert top.cost == pytest.approx(base.cost, abs=1e-8)


def test_varying_reward_family_separates_on_grid(gm1):
    """Quadratic-slack menus over a 64-point grid of [0, 0.8] pass the
    brute-force check; thresholds are a synthetic interior decreasing map
    (the construction puts no restriction beyond that)."""
    grid = np.linspace(0.0, 0.8, 64)
    thresholds = [(float(q), 0.97 - 0.95 * float(q)) for q in grid]
    tau_bar = thresholds[-1][1]
    base = Contract(tau_bar, 100.0, sm.zero_utility_cost(0.8, tau_bar, 100.0, gm1))
    for eta in (0.01, 0.1, 0.5, 1.0):
        menu = sm.build_varying_reward(base, sm.quadratic_schedule(eta), thresholds, gm1)
        assert sm.verify_separating(menu, model=gm1).passed


def test_varying_reward_rejects_bad_base(gm1, fdr25):
    q_bar = 0.8
    tau_bar = sm.fdr_threshold(q_bar, fdr25, gm1)
    bad_base = Contract(tau_bar, 100.0, 5.0)  # far from zero utility
    thresholds = fdr_thresholds_on([0.5, q_bar], fdr25, gm1)
    with pytest.raises(ValueError):
        sm.build_varying_reward(bad_base, sm.quadratic_schedule(0.1), thresholds, gm1)


def test_varying_reward_rejects_bad_schedule(gm1, fdr25):
    q_bar = 0.8
    tau_bar = sm.fdr_threshold(q_bar, fdr25, gm1)
    base = Contract(tau_bar, 100.0, sm.zero_utility_cost(q_bar, tau_bar, 100.0, gm1))
    thresholds = fdr_thresholds_on([0.5, q_bar], fdr25, gm1)
    increasing = sm.tabulated_schedule([0.0, q_bar], [0.1, 0.2])
    with pytest.raises(ValueError):
        sm.build_varying_reward(base, increasing, thresholds, gm1)
    negative = sm.tabulated_schedule([0.0, q_bar], [-0.1, -0.2])
    with pytest.raises(ValueError):
        sm.build_varying_reward(base, negative, thresholds, gm1)
    with pytest.raises(ValueError):
        sm.quadratic_schedule(0.0)


# ---------------------------------------------------------------------------
# fixed-reward construction
# ---------------------------------------------------------------------------


def test_fixed_reward_worst_type_zero_utility(gm1, fixed_menu):
    worst = fixed_menu.contracts[-1]
    assert sm.utility(0.86, worst, gm1) == pytest.approx(0.0, abs=1e-8)


def test_fixed_reward_separates(gm1, fixed_menu):
    assert sm.verify_separating(fixed_menu, model=gm1).passed


def test_fixed_reward_constant_reward(fixed_menu):
    assert all(c.reward == 100.0 for c in fixed_menu.contracts)


def test_fixed_reward_infeasible_below_bound():
    model = sm.gaussian_model(0.5)
    with pytest.raises(InfeasibleMenuError) as err:
        sm.build_fixed_reward(100.0, 0.2, 0.8, sm.fdr_objective(ALPHA), model)
    assert err.value.bound == pytest.approx(0.33, abs=0.01)
    assert "0.33" in str(err.value)


def test_fixed_reward_potential_convexity(gm1, fdr25):
    """Second differences of the induced potential are strictly positive on
    the elicitable range."""
    G = sm.fixed_reward_potential(100.0, 0.85, fdr25, gm1)
    qs = np.linspace(0.45, 0.84, 25)
    vals = np.array([G.value(float(q)) for q in qs])
    assert np.all(np.diff(vals, 2) > 0)


def test_elicitable_range_weak_test():
    q_lo, _ = sm.elicitable_range(sm.fdr_objective(ALPHA), sm.gaussian_model(0.5))
    assert q_lo == pytest.approx(0.33, abs=0.01)


def test_elicitable_range_strong_test():
    _, tau_bar = sm.elicitable_range(sm.fdr_objective(ALPHA), sm.gaussian_model(2.0))
    assert tau_bar == pytest.approx(0.16, abs=0.005)


def test_elicitable_range_unit_effect(gm1, fdr25):
    q_lo, tau_bar = sm.elicitable_range(fdr25, gm1)
    assert tau_bar == pytest.approx(1.0 - sm.normal_cdf(0.5), abs=1e-12)
    assert q_lo == pytest.approx(0.43, abs=0.01)


def test_elicitable_range_is_slope_one_point(gm1, fdr25):
    q_lo, tau_bar = sm.elicitable_range(fdr25, gm1)
    assert sm.power_derivative(gm1, tau_bar) == pytest.approx(1.0, abs=1e-9)
    assert sm.fdr_threshold(q_lo, fdr25, gm1) == pytest.approx(tau_bar, abs=1e-9)


# ---------------------------------------------------------------------------
# finite-type recursion
# ---------------------------------------------------------------------------


def test_finite_menu_separates(gm1, five_type_menu):
    assert sm.verify_separating(five_type_menu, model=gm1).passed


def test_finite_menu_single_step_formula(gm1, fdr25, five_types):
    """Last recursion step: R_4 = R_5 * Delta_5 / Delta_4 + eps."""
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    menu = sm.build_finite_menu(five_types, taus, (100.0, 5.0), 50.0, lam=0.5, model=gm1)
    deltas = [sm.power(gm1, t) - t for t in taus]
    expected_r4 = 100.0 * deltas[4] / deltas[3] + 50.0
    assert menu.contracts[3].reward == pytest.approx(expected_r4, rel=1e-12)
    assert menu.contracts[4].reward == 100.0
    assert menu.contracts[4].cost == 5.0


def test_finite_menu_interval_width_and_midpoint(gm1, fdr25, five_types):
    """Admissible cost intervals, recomputed from the built rewards, have
    width (q_t - q_{t-1}) * eps * Delta_{t-1}, and midpoint costs sit at
    their centers."""
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    menu = sm.build_finite_menu(five_types, taus, (100.0, 5.0), 50.0, lam=0.5, model=gm1)
    betas = [sm.power(gm1, t) for t in taus]
    deltas = [b - t for b, t in zip(betas, taus)]
    r = [c.reward for c in menu.contracts]
    c = [c.cost for c in menu.contracts]
    for i in range(4):
        slope_gap = r[i + 1] * deltas[i + 1] - r[i] * deltas[i]
        base_term = r[i] * betas[i] - r[i + 1] * betas[i + 1] + c[i + 1]
        left = five_types[i + 1] * slope_gap + base_term
        right = five_types[i] * slope_gap + base_term
        expected_width = (five_types[i + 1] - five_types[i]) * 50.0 * deltas[i]
        assert right - left == pytest.approx(expected_width, rel=1e-9)
        assert right - left > 0
        assert c[i] == pytest.approx(0.5 * (left + right), rel=1e-12)


def test_finite_menu_lambda_endpoints_warn(gm1, fdr25, five_types):
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    with pytest.warns(UserWarning):
        sm.build_finite_menu(five_types, taus, (100.0, 5.0), 50.0, lam=0.0, model=gm1)


def test_finite_menu_terminal_participation_enforced(gm1, fdr25, five_types):
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    with pytest.raises(InfeasibleMenuError):
        sm.build_finite_menu(five_types, taus, (100.0, 50.0), 50.0, lam=0.5, model=gm1)


def test_finite_menu_rejects_nonpositive_slack(gm1, fdr25, five_types):
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    with pytest.raises(ValueError):
        sm.build_finite_menu(five_types, taus, (100.0, 5.0), 0.0, lam=0.5, model=gm1)
    with pytest.raises(ValueError):
        sm.build_finite_menu(five_types, taus, (100.0, 5.0), [50.0, 50.0, -1.0, 50.0], lam=0.5, model=gm1)


def test_finite_menu_slack_controls_separation(gm1, fdr25, five_types):
    """Larger slack widens the reward spread between adjacent contracts."""
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    small = sm.build_finite_menu(five_types, taus, (100.0, 5.0), 50.0, lam=0.5, model=gm1)
    large = sm.build_finite_menu(five_types, taus, (100.0, 5.0), 100.0, lam=0.5, model=gm1)
    assert large.contracts[0].reward > small.contracts[0].reward


def test_finite_menu_contract_ordering(gm1, five_type_menu, five_types):
    """No type prefers a contract built for a more distant type: above q_t
    contract t beats t-1, below q_{t-1} the reverse."""
    grid = np.linspace(0.0, 1.0, 401)
    for i in range(1, 5):
        c_hi, c_lo = five_type_menu.contracts[i], five_type_menu.contracts[i - 1]
        for q in grid:
            q = float(q)
            hi_u = sm.utility(q, c_hi, gm1)
            lo_u = sm.utility(q, c_lo, gm1)
            if q >= five_types[i]:
                assert hi_u > lo_u
            elif q <= five_types[i - 1]:
                assert hi_u < lo_u


# ---------------------------------------------------------------------------
# potential recovery (converse direction as an oracle)
# ---------------------------------------------------------------------------


def test_recovered_potentials_valid_for_all_builders(gm1, fdr25, five_types, five_type_menu, fixed_menu):
    menus = [five_type_menu, fixed_menu]
    G = make_discrete_potential(five_types, [-40.0, -25.0, -12.0, -6.0, -2.0])
    menus.append(sm.build_from_potential(G, fdr_thresholds_on(five_types, fdr25, gm1), gm1))
    q_bar = 0.8
    tau_bar = sm.fdr_threshold(q_bar, fdr25, gm1)
    base = Contract(tau_bar, 100.0, sm.zero_utility_cost(q_bar, tau_bar, 100.0, gm1))
    thresholds = fdr_thresholds_on(np.linspace(0.3, q_bar, 17), fdr25, gm1)
    menus.append(sm.build_varying_reward(base, sm.quadratic_schedule(0.2), thresholds, gm1))
    for menu in menus:
        recovered = sm.recover_potential(menu, gm1)
        sm.validate_potential(recovered, menu.support, tol=1e-8)
        assert all(recovered.subgradient(p) < 0 for p in menu.support)


def test_validate_potential_flags_broken_menu(gm1, five_type_menu):
    contracts = list(five_type_menu.contracts)
    c0, c4 = contracts[0], contracts[4]
    contracts[0] = Contract(c0.tau, c0.reward, c4.cost)
    contracts[4] = Contract(c4.tau, c4.reward, c0.cost)
    broken = five_type_menu.__class__(support=five_type_menu.support, contracts=tuple(contracts))
    recovered = sm.recover_potential(broken, gm1)
    with pytest.raises(InvalidPotentialError):
        sm.validate_potential(recovered, broken.support, tol=1e-8)


# ---------------------------------------------------------------------------
# fixed-cost feasibility
# ---------------------------------------------------------------------------


def test_fixed_cost_infeasible_for_concave_power(gm1):
    assert not sm.fixed_cost_feasible(0.5, 0.1, gm1)


def test_fixed_cost_feasible_for_convex_ratio_power():
    taus = list(np.linspace(0.0, 0.55, 23)) + [1.0]
    betas = [float(t * np.exp(t)) for t in taus[:-1]] + [1.0]
    model = sm.tabulated_model(taus, betas)
    assert sm.fixed_cost_feasible(0.5, 0.2, model)


def test_fixed_cost_equal_thresholds_rejected(gm1):
    with pytest.raises(ValueError):
        sm.fixed_cost_feasible(0.3, 0.3, gm1)
    with pytest.raises(ValueError):
        sm.fixed_cost_feasible(0.1, 0.5, gm1)
