"""Statistical and financial evaluation of menus.

Covers the per-type error rates, FDR/TDR frontier sweeps for two-type
populations, the screening cost and information rent of a menu relative to
a single base contract, and a seeded Monte Carlo simulator that checks the
analytic quantities empirically. The simulator partitions agents into
fixed-size chunks whose generators are spawned from the root seed, so
results are reproducible and independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .contracts import Contract, Menu, select, utility
from .objectives import TypePopulation, fdr_objective, fdr_threshold
from .rates import bayes_risk, fdr, tdr
from .testmodel import TestModel, power, sample_pvalues

__all__ = [
    "fdr",
    "tdr",
    "bayes_risk",
    "FrontierPoint",
    "frontier",
    "matched_tdr",
    "screening_cost",
    "information_rent",
    "principal_return",
    "SimulationReport",
    "simulate_population",
]

_CHUNK = 1 << 16
_FORM_AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class FrontierPoint:
    """One point of a labeled FDR/TDR trade-off curve."""

    label: str  # oracle | uniform | good_only | bad_only
    parameter: float  # the sweep value producing the point (alpha or tau)
    fdr: float
    tdr: float


def _sweep_grid(resolution: int, lo: float = 1e-6) -> np.ndarray:
    # Log-spaced points resolve the steep low-threshold region, linear the rest.
    n_log = resolution // 4
    grid = np.concatenate(
        [
            np.geomspace(lo, 0.05, n_log, endpoint=False),
            np.linspace(0.05, 1.0, resolution - n_log),
        ]
    )
    return grid


def frontier(
    population: TypePopulation, model: TestModel, resolution: int = 512
) -> List[FrontierPoint]:
    """FDR/TDR curves for a two-type population.

    Four labeled sweeps: a single threshold applied to everyone (uniform),
    a single threshold applied to one type only while the other is never
    tested (good_only / bad_only), and per-type budget-optimal thresholds
    swept over the budget (oracle). "Good" is the type with the smaller
    prior null probability.
    """
    if population.kind != "discrete" or len(population.types) != 2:
        raise ValueError("frontier requires a discrete population with exactly two types")
    (q_good, q_bad) = population.types
    (w_good, w_bad) = population.weights
    points: List[FrontierPoint] = []

    for tau in _sweep_grid(resolution):
        tau = float(tau)
        beta1 = power(model, tau)
        null_mass = (w_good * q_good + w_bad * q_bad) * tau
        approve_mass = null_mass + (w_good * (1 - q_good) + w_bad * (1 - q_bad)) * beta1
        mix_fdr = null_mass / approve_mass if approve_mass > 0 else 0.0
        mix_tdr = w_good * tdr(q_good, tau, model) + w_bad * tdr(q_bad, tau, model)
        points.append(FrontierPoint("uniform", tau, mix_fdr, mix_tdr))
        points.append(
            FrontierPoint("good_only", tau, fdr(q_good, tau, model), w_good * tdr(q_good, tau, model))
        )
        points.append(
            FrontierPoint("bad_only", tau, fdr(q_bad, tau, model), w_bad * tdr(q_bad, tau, model))
        )

    for alpha in _sweep_grid(resolution, lo=1e-4):
        alpha = float(alpha)
        if alpha >= 1.0:
            continue
        objective = fdr_objective(alpha)
        taus = [fdr_threshold(q, objective, model) for q in (q_good, q_bad)]
        null_mass = w_good * q_good * taus[0] + w_bad * q_bad * taus[1]
        approve_mass = null_mass + w_good * (1 - q_good) * power(model, taus[0]) + w_bad * (
            1 - q_bad
        ) * power(model, taus[1])
        mix_fdr = null_mass / approve_mass if approve_mass > 0 else 0.0
        mix_tdr = w_good * tdr(q_good, taus[0], model) + w_bad * tdr(q_bad, taus[1], model)
        points.append(FrontierPoint("oracle", alpha, mix_fdr, mix_tdr))
    return points


def matched_tdr(points: Sequence[FrontierPoint], fdr_values: np.ndarray) -> np.ndarray:
    """TDR of a curve at given FDR abscissae by monotone linear interpolation.

    Queries outside the curve's FDR range return NaN so comparisons skip
    unmatched regions.
    """
    order = np.argsort([p.fdr for p in points])
    f = np.array([points[i].fdr for i in order])
    t = np.array([points[i].tdr for i in order])
    out = np.interp(fdr_values, f, t)
    out = np.where((fdr_values < f[0]) | (fdr_values > f[-1]), np.nan, out)
    return out


def screening_cost(
    menu: Menu, base: Contract, population: TypePopulation, model: TestModel
) -> float:
    """Expected surplus conceded relative to offering only the base contract.

    Integrates the gap between the menu's utility envelope and the base
    contract's utility over the population, which should lie inside the
    range the menu was designed for.
    """
    return population.expectation(
        lambda q: select(q, menu, model).utility - utility(q, base, model)
    )


def information_rent(menu: Menu, population: TypePopulation, model: TestModel) -> float:
    """Expected truthful-reporting utility left to agents under the menu."""
    return population.expectation(lambda q: select(q, menu, model).utility)


def principal_return(menu: Menu, base: Contract, q: float, model: TestModel) -> float:
    """Expected financial return from tailoring type q's contract vs the base.

    Computed both as the difference of (cost - reward * approval) brackets
    and as the negated utility gap; the two must agree to 1e-10.
    """
    outcome = select(q, menu, model)
    if outcome.opted_out:
        raise ValueError(f"type {q!r} opts out of the menu; return undefined")
    chosen = menu.contract_for(outcome.report)

    def approve_prob(contract: Contract) -> float:
        return q * contract.tau + (1.0 - q) * power(model, contract.tau)

    tailored = chosen.cost - chosen.reward * approve_prob(chosen)
    baseline = base.cost - base.reward * approve_prob(base)
    two_bracket = tailored - baseline
    simplified = -(outcome.utility - utility(q, base, model))
    if abs(two_bracket - simplified) > _FORM_AGREEMENT_TOL:
        raise RuntimeError(
            f"return forms disagree by {two_bracket - simplified:.3g}; numerical fault"
        )
    return simplified


@dataclass(frozen=True)
class SimulationReport:
    """Aggregate outcome of a synthetic agent population run."""

    n_agents: int
    seed: int
    stratified: bool
    participating: int
    approved: int
    approved_null: int
    empirical_fdr: float
    fdr_se: float
    empirical_tdr: float
    tdr_se: float
    principal_cash: float
    per_type: Optional[Dict[float, Dict[str, int]]] = None

    def __post_init__(self):
        if not 0 <= self.approved <= self.participating <= self.n_agents:
            raise ValueError("inconsistent simulation counts")
        if not 0.0 <= self.empirical_fdr <= 1.0 or not 0.0 <= self.empirical_tdr <= 1.0:
            raise ValueError("rates must lie in [0, 1]")


def _stratified_counts(weights: np.ndarray, size: int) -> np.ndarray:
    # Largest-remainder allocation keeps per-chunk counts deterministic.
    raw = weights * size
    counts = np.floor(raw).astype(int)
    short = size - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _simulate_chunk(menu, population, model, size, seed_child, stratified):
    rng = np.random.default_rng(seed_child)
    slopes = np.array(
        [c.reward * (c.tau - power(model, c.tau)) for c in menu.contracts]
    )
    intercepts = np.array([c.reward * power(model, c.tau) - c.cost for c in menu.contracts])
    taus = np.array([c.tau for c in menu.contracts])
    rewards = np.array([c.reward for c in menu.contracts])
    costs = np.array([c.cost for c in menu.contracts])

    if population.kind == "discrete":
        types = np.array(population.types)
        if stratified:
            counts = _stratified_counts(np.array(population.weights), size)
            type_idx = np.repeat(np.arange(len(types)), counts)
        else:
            type_idx = rng.choice(len(types), size=size, p=np.array(population.weights))
        q = types[type_idx]
    else:
        type_idx = None
        q = rng.uniform(population.lo, population.hi, size=size)

    # argmax over contracts; first maximum wins, matching the smallest-report
    # tie-break because the support is sorted ascending.
    utilities = q[:, None] * slopes[None, :] + intercepts[None, :]
    choice = np.argmax(utilities, axis=1)
    best = utilities[np.arange(size), choice]
    participate = best >= 0.0

    is_null = rng.random(size) < q
    pvals = sample_pvalues(model, is_null, rng)
    approve = participate & (pvals <= taus[choice])

    cash = float(np.sum(np.where(participate, costs[choice], 0.0))) - float(
        np.sum(np.where(approve, rewards[choice], 0.0))
    )
    out = {
        "participating": int(participate.sum()),
        "approved": int(approve.sum()),
        "approved_null": int((approve & is_null).sum()),
        "approved_nonnull": int((approve & ~is_null).sum()),
        "cash": cash,
    }
    if type_idx is not None:
        k = len(population.types)
        out["per_type"] = {
            "agents": np.bincount(type_idx, minlength=k),
            "participating": np.bincount(type_idx[participate], minlength=k),
            "null": np.bincount(type_idx[is_null], minlength=k),
            "approved_null": np.bincount(type_idx[approve & is_null], minlength=k),
            "approved_nonnull": np.bincount(type_idx[approve & ~is_null], minlength=k),
        }
    return out


def simulate_population(
    menu: Menu,
    population: TypePopulation,
    model: TestModel,
    n: int,
    seed: int,
    stratified: bool = False,
    jobs: int = 1,
) -> SimulationReport:
    """Run ``n`` synthetic agents through the menu and tally outcomes.

    Each agent draws a type, selects a contract (or opts out), runs a trial
    if participating, and is approved when the p-value clears the chosen
    threshold. Types are drawn i.i.d. unless ``stratified`` allocates them
    proportionally per chunk (discrete populations only). The chunk layout
    and per-chunk generators depend only on ``seed`` and ``n``, so reports
    are identical for any ``jobs``.
    """
    if n < 1:
        raise ValueError("need at least one agent")
    if stratified and population.kind != "discrete":
        raise ValueError("stratified sampling requires a discrete population")
    sizes = [_CHUNK] * (n // _CHUNK)
    if n % _CHUNK:
        sizes.append(n % _CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(args):
        size, child = args
        return _simulate_chunk(menu, population, model, size, child, stratified)

    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, zip(sizes, children)))
    else:
        results = [work(a) for a in zip(sizes, children)]

    participating = sum(r["participating"] for r in results)
    approved = sum(r["approved"] for r in results)
    approved_null = sum(r["approved_null"] for r in results)
    approved_nonnull = sum(r["approved_nonnull"] for r in results)
    cash = sum(r["cash"] for r in results)

    emp_fdr = approved_null / approved if approved else 0.0
    fdr_se = math.sqrt(emp_fdr * (1.0 - emp_fdr) / approved) if approved else 0.0
    emp_tdr = approved_nonnull / n
    tdr_se = math.sqrt(emp_tdr * (1.0 - emp_tdr) / n)

    per_type = None
    if population.kind == "discrete":
        keys = ("agents", "participating", "null", "approved_null", "approved_nonnull")
        totals = {k: sum(r["per_type"][k] for r in results) for k in keys}
        per_type = {
            float(q): {k: int(totals[k][i]) for k in keys}
            for i, q in enumerate(population.types)
        }

    return SimulationReport(
        n_agents=n,
        seed=seed,
        stratified=stratified,
        participating=participating,
        approved=approved,
        approved_null=approved_null,
        empirical_fdr=emp_fdr,
        fdr_se=fdr_se,
        empirical_tdr=emp_tdr,
        tdr_se=tdr_se,
        principal_cash=cash,
        per_type=per_type,
    )
