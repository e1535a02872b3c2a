"""Menu constructions.

Every separating menu corresponds to a convex potential G on the reported
types: G(p) is the truthful-reporting utility of type p and its subgradient
g_p < 0 pins down the reward through

    R_p = g_p / (beta0(tau_p) - beta1(tau_p)),
    c_p = g_p * [beta1(tau_p) / (beta0(tau_p) - beta1(tau_p)) + p] - G(p).

``build_from_potential`` applies that recipe to any valid potential. The
other builders are closed-form specializations: a varying-reward family
whose screening cost shrinks with a slack schedule epsilon, the unique
constant-reward menu (whose potential is pinned down by the power
function), and a backward recursion for finitely many types. The converse
direction (recovering and validating the potential of an existing menu)
serves as an independent verification oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ._quad import adaptive_simpson
from .contracts import Contract, Menu, utility
from .errors import InfeasibleMenuError, InvalidPotentialError
from .objectives import PrincipalObjective, optimal_threshold
from .testmodel import TestModel, normal_cdf, power, power_derivative

__all__ = [
    "GPotential",
    "EpsilonSchedule",
    "quadratic_schedule",
    "tabulated_schedule",
    "tabulated_potential",
    "varying_reward_potential",
    "fixed_reward_potential",
    "validate_potential",
    "recover_potential",
    "build_from_potential",
    "build_varying_reward",
    "build_fixed_reward",
    "build_finite_menu",
    "elicitable_range",
    "fixed_cost_feasible",
]

INTEGRAL_TOL = 1e-10  # cost integrals must sit well below the IC margin
PARTICIPATION_TOL = 1e-8


@dataclass(frozen=True)
class GPotential:
    """Convex potential: truthful utility values and negative subgradients."""

    value: Callable[[float], float]
    subgradient: Callable[[float], float]
    representation: str


def tabulated_potential(
    points: Sequence[float], values: Sequence[float], subgradients: Sequence[float]
) -> GPotential:
    """Discrete potential from user-supplied values and subgradients.

    Subgradients are taken as given and validated by the builders, never
    inferred from the values.
    """
    points = tuple(float(p) for p in points)
    if len(set(points)) != len(points):
        raise ValueError("potential points must be distinct")
    if not len(points) == len(values) == len(subgradients):
        raise ValueError("points, values, and subgradients must align")
    val = dict(zip(points, map(float, values)))
    sub = dict(zip(points, map(float, subgradients)))

    def value(q: float) -> float:
        try:
            return val[q]
        except KeyError:
            raise KeyError(f"potential tabulated only on its support; no value at {q!r}") from None

    def subgradient(q: float) -> float:
        try:
            return sub[q]
        except KeyError:
            raise KeyError(f"potential tabulated only on its support; no value at {q!r}") from None

    return GPotential(value=value, subgradient=subgradient, representation="tabulated")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Slack schedule for the varying-reward family.

    Must be positive and strictly decreasing below the worst type, with
    value ~0 there; smaller schedules leave less rent on the table.
    """

    kind: str
    eta: Optional[float] = None
    zs: Optional[Tuple[float, ...]] = None
    values: Optional[Tuple[float, ...]] = None

    def value(self, z: float) -> float:
        if self.kind == "quadratic":
            return self.eta * (1.0 - z) ** 2
        return float(np.interp(z, self.zs, self.values))


def quadratic_schedule(eta: float) -> EpsilonSchedule:
    """eps(z) = eta * (1 - z)^2."""
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta!r}")
    return EpsilonSchedule(kind="quadratic", eta=float(eta))


def tabulated_schedule(zs: Sequence[float], values: Sequence[float]) -> EpsilonSchedule:
    """Piecewise-linear schedule through the given knots."""
    if len(zs) != len(values) or len(zs) < 2:
        raise ValueError("schedule needs matching knot sequences of length >= 2")
    return EpsilonSchedule(
        kind="tabulated", zs=tuple(map(float, zs)), values=tuple(map(float, values))
    )


def _validate_schedule(eps: EpsilonSchedule, q_bar: float) -> None:
    grid = np.linspace(0.0, q_bar, 129)
    vals = np.array([eps.value(float(z)) for z in grid])
    if np.any(vals[:-1] <= 0.0):
        raise ValueError("slack schedule must be strictly positive below the worst type")
    if np.any(np.diff(vals) >= 0.0):
        raise ValueError("slack schedule must be strictly decreasing")
    if vals[-1] < -1e-12:
        raise ValueError("slack schedule must be nonnegative at the worst type")


def _potential_issue(ps, values, subgrads, tol: float) -> Optional[str]:
    """First violated potential condition on the given support, or None."""
    n = len(ps)
    for i in range(n):
        if not subgrads[i] < tol:
            return f"subgradient at {ps[i]:.6g} is {subgrads[i]:.6g}, expected < 0"
    for j in range(n):  # supporting line at ps[j]
        for i in range(n):
            if i == j:
                continue
            line = values[j] + subgrads[j] * (ps[i] - ps[j])
            if not values[i] > line - tol:
                return (
                    f"supporting line at {ps[j]:.6g} not strictly below the potential "
                    f"at {ps[i]:.6g} (gap {values[i] - line:.3g})"
                )
    if not values[-1] >= -tol:
        return f"potential at the worst type {ps[-1]:.6g} is {values[-1]:.6g}, expected >= 0"
    return None


def validate_potential(G: GPotential, support: Sequence[float], tol: float = 0.0) -> None:
    """Raise unless G satisfies the separating-menu conditions on ``support``.

    Checks g_p < 0, the strict supporting-line inequality for every ordered
    pair, and nonnegativity at the largest supported type, all with slack
    ``tol``.
    """
    ps = [float(p) for p in support]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("support must be strictly increasing")
    values = [G.value(p) for p in ps]
    subgrads = [G.subgradient(p) for p in ps]
    issue = _potential_issue(ps, values, subgrads, tol)
    if issue is not None:
        raise InvalidPotentialError(issue)


def recover_potential(menu: Menu, model: TestModel) -> GPotential:
    """Potential induced by an existing menu: values are truthful utilities,
    subgradients the utility slopes R_p [beta0 - beta1]."""
    values = []
    subgrads = []
    for p, contract in zip(menu.support, menu.contracts):
        values.append(utility(p, contract, model))
        subgrads.append(contract.reward * (contract.tau - power(model, contract.tau)))
    return tabulated_potential(menu.support, values, subgrads)


def _checked_thresholds(thresholds, model) -> Tuple[List[float], List[float], List[float]]:
    ps = [float(p) for p, _ in thresholds]
    taus = [float(t) for _, t in thresholds]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("threshold support must be strictly increasing in the type")
    deltas = []
    for p, tau in zip(ps, taus):
        delta = power(model, tau) - tau
        if delta <= 0.0:
            raise ValueError(
                f"no power margin at tau={tau:.6g} (type {p:.6g}); interior thresholds required"
            )
        deltas.append(delta)
    return ps, taus, deltas


def build_from_potential(
    G: GPotential, thresholds: Sequence[Tuple[float, float]], model: TestModel
) -> Menu:
    """General construction: contracts from a valid potential and a threshold
    assignment on the same support."""
    ps, taus, deltas = _checked_thresholds(thresholds, model)
    values = [G.value(p) for p in ps]
    subgrads = [G.subgradient(p) for p in ps]
    issue = _potential_issue(ps, values, subgrads, 0.0)
    if issue is not None:
        raise InvalidPotentialError(issue)
    contracts = []
    for p, tau, delta, v, g in zip(ps, taus, deltas, values, subgrads):
        beta1 = delta + tau
        reward = -g / delta
        cost = g * (p - beta1 / delta) - v
        contracts.append(Contract(tau=tau, reward=reward, cost=cost))
    return Menu(support=tuple(ps), contracts=tuple(contracts))


def build_varying_reward(
    base: Contract,
    eps: EpsilonSchedule,
    thresholds: Sequence[Tuple[float, float]],
    model: TestModel,
) -> Menu:
    """Varying-reward family anchored at a zero-utility base contract.

    ``base`` is the contract intended for the worst type (the largest type
    in ``thresholds``) and must satisfy the worst-case participation
    condition: the worst type is exactly indifferent to opting out.
    """
    ps, taus, deltas = _checked_thresholds(thresholds, model)
    q_bar = ps[-1]
    if abs(base.tau - taus[-1]) > 1e-12:
        raise ValueError(
            f"base threshold {base.tau!r} must match the worst type's threshold {taus[-1]!r}"
        )
    slack = utility(q_bar, base, model)
    if abs(slack) > PARTICIPATION_TOL:
        raise ValueError(
            f"base contract must give the worst type zero utility, got {slack:.3g}"
        )
    _validate_schedule(eps, q_bar)

    scale = base.reward * (power(model, base.tau) - base.tau)
    one_plus = lambda z: 1.0 + eps.value(z)

    # Integral of 1 + eps from each support point to the worst type,
    # accumulated over segments from the top down.
    integrals = [0.0] * len(ps)
    for i in range(len(ps) - 2, -1, -1):
        integrals[i] = integrals[i + 1] + adaptive_simpson(
            one_plus, ps[i], ps[i + 1], tol=INTEGRAL_TOL
        )

    contracts = []
    for p, tau, delta, integral in zip(ps, taus, deltas, integrals):
        beta1 = delta + tau
        reward = scale * one_plus(p) / delta
        cost = reward * (p * tau + (1.0 - p) * beta1) - scale * integral
        contracts.append(Contract(tau=tau, reward=reward, cost=cost))
    return Menu(support=tuple(ps), contracts=tuple(contracts))


def elicitable_range(objective: PrincipalObjective, model: TestModel) -> Tuple[float, float]:
    """Limits of constant-reward separation: (q_lo, tau_bar).

    ``tau_bar`` is the largest threshold with beta1'(tau) > 1 and ``q_lo``
    the type assigned that threshold; only types in [q_lo, 1] can be given
    constant-reward contracts.
    """
    if model.kind == "gaussian_mean":
        tau_bar = normal_cdf(-0.5 * model.theta1)
    else:
        lo, hi = 1e-6, 1.0 - 1e-6
        if power_derivative(model, lo) <= 1.0:
            tau_bar = lo
        elif power_derivative(model, hi) > 1.0:
            tau_bar = hi
        else:
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if power_derivative(model, mid) > 1.0:
                    lo = mid
                else:
                    hi = mid
            tau_bar = 0.5 * (lo + hi)
    lo_q, hi_q = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo_q + hi_q)
        if optimal_threshold(mid, objective, model) > tau_bar:
            lo_q = mid
        else:
            hi_q = mid
    return 0.5 * (lo_q + hi_q), tau_bar


def fixed_reward_potential(
    reward: float, q_bar: float, objective: PrincipalObjective, model: TestModel
) -> GPotential:
    """Potential of the unique constant-reward menu: R * integral of the
    power margin along the threshold map, vanishing at the worst type."""
    if reward <= 0.0:
        raise ValueError(f"reward must be positive, got {reward!r}")

    def margin(z: float) -> float:
        tau = optimal_threshold(z, objective, model)
        return power(model, tau) - tau

    def value(q: float) -> float:
        return reward * adaptive_simpson(margin, q, q_bar, tol=INTEGRAL_TOL)

    def subgradient(q: float) -> float:
        return -reward * margin(q)

    return GPotential(value=value, subgradient=subgradient, representation="closed_form_cor3")


def varying_reward_potential(
    base: Contract, q_bar: float, eps: EpsilonSchedule, model: TestModel
) -> GPotential:
    """Potential of the varying-reward family: the base utility margin times
    the integral of 1 + eps up to the worst type."""
    scale = base.reward * (power(model, base.tau) - base.tau)
    if scale <= 0.0:
        raise ValueError("base contract must have a positive power margin")

    def value(q: float) -> float:
        return scale * adaptive_simpson(lambda z: 1.0 + eps.value(z), q, q_bar, tol=INTEGRAL_TOL)

    def subgradient(q: float) -> float:
        return -scale * (1.0 + eps.value(q))

    return GPotential(value=value, subgradient=subgradient, representation="closed_form_cor2")


def build_fixed_reward(
    reward: float,
    q_lo: float,
    q_bar: float,
    objective: PrincipalObjective,
    model: TestModel,
    n: int = 129,
) -> Menu:
    """Unique constant-reward separating menu on the type range [q_lo, q_bar].

    Requires the range to sit inside the elicitable range, the power curve
    to have slope > 1 along the assigned thresholds, and the threshold map
    to be strictly decreasing there. The worst type pays the zero-utility
    cost; better types pay a surcharge for looser thresholds.
    """
    if reward <= 0.0:
        raise ValueError(f"reward must be positive, got {reward!r}")
    if not 0.0 < q_lo < q_bar < 1.0:
        raise ValueError(f"need 0 < q_lo < q_bar < 1, got [{q_lo!r}, {q_bar!r}]")
    if n < 2:
        raise ValueError("support needs at least two points")
    bound, tau_bar = elicitable_range(objective, model)
    if q_lo < bound - 1e-9:
        raise InfeasibleMenuError(
            f"constant-reward menus cannot reach below type {bound:.6g} "
            f"(power slope exceeds 1 only for thresholds up to {tau_bar:.6g}); "
            f"requested q_lo={q_lo:.6g}",
            bound=bound,
        )

    support = np.linspace(q_lo, q_bar, n)
    taus = [optimal_threshold(float(q), objective, model) for q in support]
    for (q_a, t_a), (q_b, t_b) in zip(zip(support, taus), list(zip(support, taus))[1:]):
        if not t_b < t_a:
            raise InfeasibleMenuError(
                f"threshold map not strictly decreasing between {q_a:.6g} and {q_b:.6g}"
            )
    for q, tau in zip(support, taus):
        if power_derivative(model, tau) <= 1.0 - 1e-9:
            raise InfeasibleMenuError(
                f"power slope at tau={tau:.6g} (type {q:.6g}) must exceed 1", bound=bound
            )

    def margin(z: float) -> float:
        tau = optimal_threshold(float(z), objective, model)
        return power(model, tau) - tau

    integrals = [0.0] * len(support)
    for i in range(len(support) - 2, -1, -1):
        integrals[i] = integrals[i + 1] + adaptive_simpson(
            margin, float(support[i]), float(support[i + 1]), tol=INTEGRAL_TOL
        )

    contracts = []
    for q, tau, integral in zip(support, taus, integrals):
        beta1 = power(model, tau)
        cost = reward * (q * tau + (1.0 - q) * beta1) - reward * integral
        contracts.append(Contract(tau=tau, reward=reward, cost=cost))
    return Menu(support=tuple(float(q) for q in support), contracts=tuple(contracts))


def build_finite_menu(
    types: Sequence[float],
    thresholds: Sequence[float],
    terminal: Tuple[float, float],
    eps: Sequence[float] | float,
    lam: float = 0.5,
    *,
    model: TestModel,
) -> Menu:
    """Backward recursion for finitely many types.

    Starting from a terminal (reward, cost) pair satisfying the worst
    type's participation constraint, each step inflates the reward by the
    power-margin ratio plus a positive slack and places the cost at
    fraction ``lam`` of the admissible interval. Positive slack keeps the
    interval nonempty, so the result is separating for lam in (0, 1).
    """
    types = [float(q) for q in types]
    taus = [float(t) for t in thresholds]
    n = len(types)
    if n < 2:
        raise ValueError("finite construction needs at least two types")
    if len(taus) != n:
        raise ValueError("need one threshold per type")
    if any(b <= a for a, b in zip(types, types[1:])):
        raise ValueError("types must be strictly increasing")
    if isinstance(eps, (int, float)):
        eps_seq = [float(eps)] * (n - 1)
    else:
        eps_seq = [float(e) for e in eps]
    if len(eps_seq) != n - 1:
        raise ValueError(f"need {n - 1} slack values, got {len(eps_seq)}")
    if any(e <= 0.0 for e in eps_seq):
        raise ValueError("slack values must be strictly positive")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam!r}")
    if lam in (0.0, 1.0):
        warnings.warn(
            "lam at an interval endpoint produces exact indifference between "
            "adjacent contracts; use an interior value for strict separation",
            stacklevel=2,
        )

    betas = [power(model, t) for t in taus]
    deltas = [b - t for b, t in zip(betas, taus)]
    if any(d <= 0.0 for d in deltas):
        raise ValueError("interior thresholds with positive power margin required")

    reward_n, cost_n = float(terminal[0]), float(terminal[1])
    terminal_utility = utility(types[-1], Contract(taus[-1], reward_n, cost_n), model)
    if terminal_utility < -1e-12:
        raise InfeasibleMenuError(
            f"terminal contract violates participation for the worst type "
            f"{types[-1]:.6g} (utility {terminal_utility:.6g})"
        )

    rewards = [0.0] * n
    costs = [0.0] * n
    rewards[-1] = reward_n
    costs[-1] = cost_n
    for i in range(n - 2, -1, -1):  # transition between types[i] and types[i+1]
        rewards[i] = rewards[i + 1] * deltas[i + 1] / deltas[i] + eps_seq[i]
        slope_gap = rewards[i + 1] * deltas[i + 1] - rewards[i] * deltas[i]
        base_term = rewards[i] * betas[i] - rewards[i + 1] * betas[i + 1] + costs[i + 1]
        left = types[i + 1] * slope_gap + base_term
        right = types[i] * slope_gap + base_term
        if not right > left:
            raise InfeasibleMenuError(
                f"empty cost interval at step {i + 1}: [{left:.6g}, {right:.6g}]",
                interval=(left, right),
            )
        costs[i] = left + lam * (right - left)

    contracts = tuple(
        Contract(tau=t, reward=r, cost=c) for t, r, c in zip(taus, rewards, costs)
    )
    return Menu(support=tuple(types), contracts=contracts)


def fixed_cost_feasible(tau1: float, tau2: float, model: TestModel) -> bool:
    """Whether a two-contract constant-cost menu can separate types whose
    thresholds are tau1 > tau2: requires the power-to-size ratio to be
    strictly increasing between them."""
    if tau1 == tau2:
        raise ValueError("thresholds must be distinct")
    if not 0.0 < tau2 < tau1 <= 1.0:
        raise ValueError(f"need 0 < tau2 < tau1 <= 1, got ({tau1!r}, {tau2!r})")
    return power(model, tau1) / tau1 > power(model, tau2) / tau2
