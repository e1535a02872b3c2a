"""Principal objectives and the type-optimal threshold map q -> tau_q.

Two objectives are supported: a weighted sum of type I/II error costs
(``bayes``) and TDR maximization under an FDR budget (``fdr``). Either way
the principal's ideal threshold decreases in the agent's prior null
probability, and aggregating per-type performance over a population gives
the oracle value the menus are designed to match.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import StatMenusError
from .rates import bayes_risk, fdr, tdr
from .testmodel import TestModel, inverse_likelihood_ratio, power

__all__ = [
    "PrincipalObjective",
    "TypePopulation",
    "bayes_objective",
    "fdr_objective",
    "discrete_population",
    "uniform_population",
    "bayes_threshold",
    "fdr_threshold",
    "optimal_threshold",
    "type_for_threshold",
    "threshold_map",
    "oracle_bayes_risk",
    "oracle_tdr",
]

WEIGHT_SUM_TOL = 1e-12
_BISECT_LO = 1e-12
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class PrincipalObjective:
    """Either error-cost weights (omega0, omega1) or an FDR budget alpha."""

    kind: str
    omega0: Optional[float] = None
    omega1: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind == "bayes":
            if self.omega0 is None or self.omega1 is None or self.alpha is not None:
                raise ValueError("bayes objective takes omega0 and omega1 only")
            if self.omega0 < 0.0 or self.omega1 < 0.0 or self.omega0 + self.omega1 <= 0.0:
                raise ValueError("error costs must be nonnegative with positive sum")
        elif self.kind == "fdr":
            if self.alpha is None or self.omega0 is not None or self.omega1 is not None:
                raise ValueError("fdr objective takes alpha only")
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"FDR budget must lie in (0, 1), got {self.alpha!r}")
        else:
            raise ValueError(f"unknown objective kind {self.kind!r}")


def bayes_objective(omega0: float, omega1: float) -> PrincipalObjective:
    return PrincipalObjective(kind="bayes", omega0=float(omega0), omega1=float(omega1))


def fdr_objective(alpha: float) -> PrincipalObjective:
    return PrincipalObjective(kind="fdr", alpha=float(alpha))


@dataclass(frozen=True)
class TypePopulation:
    """Distribution over prior-null probabilities q.

    ``discrete`` holds weighted atoms; ``uniform_grid`` is a continuous
    uniform on [lo, hi] evaluated on an n-point grid (composite trapezoid
    for expectations).
    """

    kind: str
    types: Optional[Tuple[float, ...]] = None
    weights: Optional[Tuple[float, ...]] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind == "discrete":
            if not self.types:
                raise ValueError("discrete population needs at least one type")
            if any(not 0.0 <= q <= 1.0 for q in self.types):
                raise ValueError("types must lie in [0, 1]")
            if any(b <= a for a, b in zip(self.types, self.types[1:])):
                raise ValueError("types must be strictly increasing")
            if len(self.weights) != len(self.types):
                raise ValueError("weights must match types")
            if any(w < 0.0 for w in self.weights):
                raise ValueError("weights must be nonnegative")
            if abs(sum(self.weights) - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}")
        elif self.kind == "uniform_grid":
            if self.lo is None or self.hi is None or not 0.0 <= self.lo < self.hi <= 1.0:
                raise ValueError("uniform_grid needs 0 <= lo < hi <= 1")
            if self.n is None or self.n < 2:
                raise ValueError("uniform_grid needs n >= 2 grid points")
        else:
            raise ValueError(f"unknown population kind {self.kind!r}")

    def points(self) -> np.ndarray:
        """Evaluation grid: the atoms, or the uniform grid."""
        if self.kind == "discrete":
            return np.array(self.types)
        return np.linspace(self.lo, self.hi, self.n)

    def expectation(self, f: Callable[[float], float]) -> float:
        """E[f(q)] under the population (weighted sum or trapezoid rule)."""
        pts = self.points()
        vals = np.array([f(float(q)) for q in pts])
        if self.kind == "discrete":
            return float(np.dot(np.array(self.weights), vals))
        return float(np.trapezoid(vals, pts) / (self.hi - self.lo))


def discrete_population(
    types: Sequence[float], weights: Optional[Sequence[float]] = None
) -> TypePopulation:
    """Discrete population; weights default to equal."""
    types = tuple(float(q) for q in types)
    if weights is None:
        weights = (1.0 / len(types),) * len(types)
    return TypePopulation(kind="discrete", types=types, weights=tuple(float(w) for w in weights))


def uniform_population(lo: float, hi: float, n: int = 1024) -> TypePopulation:
    return TypePopulation(kind="uniform_grid", lo=float(lo), hi=float(hi), n=int(n))


def bayes_threshold(q: float, objective: PrincipalObjective, model: TestModel) -> float:
    """Threshold minimizing the weighted error risk for a known type ``q``.

    Thresholds the likelihood ratio at q*omega0 / ((1-q)*omega1), mapped to
    the p-value scale. Boundary types resolve by taking limits: q=0 -> 1,
    q=1 -> 0; omega1=0 makes false negatives costless, so tau=0.
    """
    if objective.kind != "bayes":
        raise ValueError("bayes_threshold requires a bayes objective")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    if objective.omega1 == 0.0 or q == 1.0:
        return 0.0
    if q == 0.0 or objective.omega0 == 0.0:
        return 1.0
    ratio = q * objective.omega0 / ((1.0 - q) * objective.omega1)
    return inverse_likelihood_ratio(model, ratio)


@lru_cache(maxsize=1 << 20)
def _fdr_threshold_cached(q: float, alpha: float, model: TestModel) -> float:
    if q == 0.0:
        return 1.0
    if q == 1.0:
        return 0.0
    if fdr(q, 1.0, model) <= alpha:
        return 1.0
    # FDR is strictly increasing in tau for concave nontrivial power, so
    # bisection on [1e-12, 1] is globally safe.
    lo, hi = _BISECT_LO, 1.0
    if fdr(q, lo, model) > alpha:
        return lo
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fdr(q, mid, model) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def fdr_threshold(q: float, objective: PrincipalObjective, model: TestModel) -> float:
    """Largest threshold keeping FDR(q, tau) within the budget alpha."""
    if objective.kind != "fdr":
        raise ValueError("fdr_threshold requires an fdr objective")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"type must lie in [0, 1], got {q!r}")
    return _fdr_threshold_cached(q, objective.alpha, model)


def optimal_threshold(q: float, objective: PrincipalObjective, model: TestModel) -> float:
    """Type-optimal threshold under either objective."""
    if objective.kind == "bayes":
        return bayes_threshold(q, objective, model)
    return fdr_threshold(q, objective, model)


def type_for_threshold(tau: float, objective: PrincipalObjective, model: TestModel) -> float:
    """Inverse of the threshold map: the type assigned threshold ``tau``.

    Closed form in both cases; only defined for interior tau.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"inverse map defined for tau in (0, 1), got {tau!r}")
    if objective.kind == "fdr":
        alpha = objective.alpha
        r = alpha * power(model, tau) / ((1.0 - alpha) * tau)
        return r / (1.0 + r)
    from .testmodel import likelihood_ratio

    lr = likelihood_ratio(model, tau)
    return objective.omega1 * lr / (objective.omega0 + objective.omega1 * lr)


def threshold_map(
    population: TypePopulation, objective: PrincipalObjective, model: TestModel
) -> List[Tuple[float, float]]:
    """Per-type optimal thresholds over the population grid.

    The returned assignment is checked to be non-increasing in q.
    """
    pairs = [(float(q), optimal_threshold(float(q), objective, model)) for q in population.points()]
    for (q_a, t_a), (q_b, t_b) in zip(pairs, pairs[1:]):
        if t_b > t_a + 1e-12:
            raise StatMenusError(
                f"threshold map not non-increasing: tau({q_a})={t_a} < tau({q_b})={t_b}"
            )
    return pairs


def oracle_bayes_risk(
    population: TypePopulation, objective: PrincipalObjective, model: TestModel
) -> float:
    """Population-average Bayes risk when every type gets its optimal threshold."""
    if objective.kind != "bayes":
        raise ValueError("oracle_bayes_risk requires a bayes objective")

    def integrand(q: float) -> float:
        tau = bayes_threshold(q, objective, model)
        return bayes_risk(q, tau, objective.omega0, objective.omega1, model)

    return population.expectation(integrand)


def oracle_tdr(
    population: TypePopulation, objective: PrincipalObjective, model: TestModel
) -> float:
    """Population-average TDR when every type gets its FDR-budget threshold."""
    if objective.kind != "fdr":
        raise ValueError("oracle_tdr requires an fdr objective")

    def integrand(q: float) -> float:
        return tdr(q, fdr_threshold(q, objective, model), model)

    return population.expectation(integrand)
