"""Contracts, menus, agent selection, and separating-menu verification.

A contract is a triple (threshold, reward, cost). An agent of type q who
takes the contract indexed by report p has expected utility

    psi(q; p) = q * R_p * [beta0(tau_p) - beta1(tau_p)] + [R_p * beta1(tau_p) - c_p],

affine in q with negative slope whenever the test has nontrivial power. A
menu is separating when truthful selection is strictly optimal for every
supported type and participation utilities are nonnegative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .testmodel import TestModel, power

__all__ = [
    "Contract",
    "Menu",
    "SelectionOutcome",
    "SeparationReport",
    "Violation",
    "utility",
    "zero_utility_cost",
    "select",
    "verify_separating",
    "scoring_rule",
    "expected_score",
]

DEFAULT_IC_MARGIN = 1e-9
# Absorbs float rounding of contracts calibrated to exactly zero utility.
PARTICIPATION_SLACK = 1e-12
TIE_BREAK_RULE = "smallest-report"


@dataclass(frozen=True)
class Contract:
    """Acceptance threshold, reward on approval, and upfront cost."""

    tau: float
    reward: float
    cost: float

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.tau!r}")
        if self.reward < 0.0:
            raise ValueError(f"reward must be nonnegative, got {self.reward!r}")


@dataclass(frozen=True)
class Menu:
    """Contracts indexed by a strictly increasing support of reported types."""

    support: Tuple[float, ...]
    contracts: Tuple[Contract, ...]

    def __post_init__(self):
        if not self.support:
            raise ValueError("menu support must be nonempty")
        if len(self.support) != len(self.contracts):
            raise ValueError("support and contracts must align")
        if any(not 0.0 <= p <= 1.0 for p in self.support):
            raise ValueError("support must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly increasing")

    def contract_for(self, p: float) -> Contract:
        try:
            return self.contracts[self.support.index(p)]
        except ValueError:
            raise KeyError(f"report {p!r} is not in the menu support") from None

    def to_json(self) -> str:
        doc = {
            "support": list(self.support),
            "contracts": [
                {"tau": c.tau, "reward": c.reward, "cost": c.cost} for c in self.contracts
            ],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "Menu":
        doc = json.loads(text)
        contracts = tuple(
            Contract(tau=c["tau"], reward=c["reward"], cost=c["cost"]) for c in doc["contracts"]
        )
        return Menu(support=tuple(doc["support"]), contracts=contracts)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @staticmethod
    def load(path) -> "Menu":
        with open(path) as fh:
            return Menu.from_json(fh.read())


@dataclass(frozen=True)
class SelectionOutcome:
    """Report chosen by an agent (None means opt out) and the best utility found."""

    report: Optional[float]
    utility: float

    @property
    def opted_out(self) -> bool:
        return self.report is None


def utility(q: float, contract: Contract, model: TestModel) -> float:
    """Expected utility of a type-q agent under ``contract``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    beta1 = power(model, contract.tau)
    return q * contract.reward * (contract.tau - beta1) + (contract.reward * beta1 - contract.cost)


def zero_utility_cost(q: float, tau: float, reward: float, model: TestModel) -> float:
    """Cost calibrated so a type-q agent gets exactly zero utility.

    Equals reward times the agent's approval probability under ``tau``,
    nudged by at most a few ulps so the calibrated agent lands on the
    participation side of the opt-out boundary.
    """
    cost = reward * (q * tau + (1.0 - q) * power(model, tau))
    while utility(q, Contract(tau=tau, reward=reward, cost=cost), model) < 0.0:
        cost = math.nextafter(cost, -math.inf)
    return cost


def select(q: float, menu: Menu, model: TestModel) -> SelectionOutcome:
    """Utility-maximizing report for a type-q agent, or opt-out.

    Ties break toward the smallest reported type; utility exactly 0 still
    participates.
    """
    best_p = None
    best_u = -float("inf")
    for p, contract in zip(menu.support, menu.contracts):
        u = utility(q, contract, model)
        if u > best_u:
            best_u = u
            best_p = p
    if best_u < 0.0:
        return SelectionOutcome(report=None, utility=best_u)
    return SelectionOutcome(report=best_p, utility=best_u)


@dataclass(frozen=True)
class Violation:
    kind: str  # "ic" or "participation"
    q: float
    p: Optional[float]
    gap: float


@dataclass(frozen=True)
class SeparationReport:
    """Outcome of a brute-force separation check over support x support."""

    passed: bool
    support: Tuple[float, ...]
    margin: float
    pairs_checked: int
    first_violation: Optional[Violation]
    tie_break: str = TIE_BREAK_RULE

    def describe(self) -> str:
        if self.passed:
            return (
                f"separating: {len(self.support)} types, {self.pairs_checked} pairs, "
                f"margin {self.margin:g}"
            )
        v = self.first_violation
        if v.kind == "participation":
            return f"participation violated at q={v.q:.6g}: utility {v.gap:.6g} < 0"
        return (
            f"IC violated at q={v.q:.6g}: report {v.p:.6g} beats truthful by "
            f"{-v.gap:.6g} (margin {self.margin:g})"
        )


def verify_separating(
    menu: Menu,
    support: Optional[Sequence[float]] = None,
    *,
    model: TestModel,
    margin: float = DEFAULT_IC_MARGIN,
) -> SeparationReport:
    """Check that every supported type strictly prefers its own contract.

    For each q in ``support`` (default: the full menu support) requires
    psi(q; q) > psi(q; p) + margin for p != q and psi(q; q) >= 0, the latter
    with a 1e-12 slack for boundary contracts calibrated to zero utility.
    Returns a report carrying the first violating pair rather than raising.
    """
    if support is None:
        support = menu.support
    support = tuple(float(q) for q in support)
    menu_index = {p: c for p, c in zip(menu.support, menu.contracts)}
    missing = [q for q in support if q not in menu_index]
    if missing:
        raise ValueError(f"verified support must be within the menu support; missing {missing[:3]}")

    truthful = {q: utility(q, menu_index[q], model) for q in support}
    pairs = 0
    for q in support:
        if truthful[q] < -PARTICIPATION_SLACK:
            return SeparationReport(
                passed=False,
                support=support,
                margin=margin,
                pairs_checked=pairs,
                first_violation=Violation(kind="participation", q=q, p=None, gap=truthful[q]),
            )
        for p, contract in zip(menu.support, menu.contracts):
            if p == q:
                continue
            pairs += 1
            cross = utility(q, contract, model)
            if not truthful[q] > cross + margin:
                return SeparationReport(
                    passed=False,
                    support=support,
                    margin=margin,
                    pairs_checked=pairs,
                    first_violation=Violation(kind="ic", q=q, p=p, gap=truthful[q] - cross),
                )
    return SeparationReport(
        passed=True, support=support, margin=margin, pairs_checked=pairs, first_violation=None
    )


def scoring_rule(menu: Menu, p: float, y: int, model: TestModel) -> float:
    """Realized payoff of report ``p`` when the proposal state is ``y``.

    ``y = 1`` means the proposal is null (ineffective), ``y = 0`` effective.
    """
    if y not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {y!r}")
    contract = menu.contract_for(p)
    rate = contract.tau if y == 1 else power(model, contract.tau)
    return contract.reward * rate - contract.cost


def expected_score(menu: Menu, p: float, q: float, model: TestModel) -> float:
    """Expected payoff q * S(p, 1) + (1-q) * S(p, 0); equals utility(q, contract_p)."""
    return q * scoring_rule(menu, p, 1, model) + (1.0 - q) * scoring_rule(menu, p, 0, model)
