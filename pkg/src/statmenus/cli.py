"""Command-line orchestration.

Subcommands map onto the library: ``thresholds`` (type-optimal threshold
map), ``menu-build`` / ``menu-verify`` (constructions and the brute-force
separation check), ``frontier`` (two-type FDR/TDR sweeps), ``evaluate``
(oracle values plus menu cost metrics), ``simulate`` (seeded Monte Carlo),
and ``sensitivity`` (misspecification gap sweeps). All inputs come from a
JSON config; outputs are CSV/JSON files stamped with the config hash so
identical runs produce identical bytes.

Exit codes: 0 success, 2 invalid config, 3 infeasible construction,
4 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .builders import (
    build_finite_menu,
    build_fixed_reward,
    build_from_potential,
    build_varying_reward,
    quadratic_schedule,
    tabulated_potential,
)
from .contracts import Contract, Menu, verify_separating, zero_utility_cost
from .errors import ConfigError, StatMenusError
from .evaluation import (
    frontier,
    information_rent,
    principal_return,
    screening_cost,
    simulate_population,
)
from .objectives import (
    PrincipalObjective,
    TypePopulation,
    bayes_objective,
    discrete_population,
    fdr_objective,
    optimal_threshold,
    oracle_bayes_risk,
    oracle_tdr,
    threshold_map,
    uniform_population,
)
from .sensitivity import MisspecScenario, sensitivity_sweep
from .testmodel import TestModel, gaussian_model, tabulated_from_csv, tabulated_model

COMMANDS = (
    "thresholds",
    "menu-build",
    "menu-verify",
    "frontier",
    "evaluate",
    "simulate",
    "sensitivity",
)
BUILDER_METHODS = ("potential", "varying_reward", "fixed_reward", "finite")
SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration with constructed domain objects."""

    raw: Dict[str, Any]
    base_dir: Path
    model: TestModel
    objective: PrincipalObjective
    population: Optional[TypePopulation]
    menu: Dict[str, Any]
    simulation: Dict[str, Any]
    sensitivity: Dict[str, Any]
    output_dir: Optional[str]


class _Checker:
    def __init__(self):
        self.errors: List[Tuple[str, str]] = []

    def fail(self, pointer: str, message: str) -> None:
        self.errors.append((pointer, message))

    def require(self, cond: bool, pointer: str, message: str) -> bool:
        if not cond:
            self.fail(pointer, message)
        return cond

    def raise_if_failed(self) -> None:
        if self.errors:
            raise ConfigError(self.errors)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration.

    Raises ``ConfigError`` carrying (json-pointer, message) pairs for every
    problem found.
    """
    path = Path(path)
    chk = _Checker()
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([("/", f"config file not found: {path}")]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([("/", f"not valid JSON: {exc}")]) from None
    if not isinstance(raw, dict):
        raise ConfigError([("/", "top level must be an object")])

    if raw.get("schema_version") != SCHEMA_VERSION:
        chk.fail("/schema_version", f"must be {SCHEMA_VERSION}")

    model = None
    test = raw.get("test")
    if not isinstance(test, dict):
        chk.fail("/test", "required section")
    else:
        kind = test.get("kind")
        if kind == "gaussian_mean":
            theta = test.get("theta1")
            if chk.require(_is_num(theta) and 0 < theta <= 10, "/test/theta1", "must be a number in (0, 10]"):
                model = gaussian_model(theta)
        elif kind == "tabulated":
            try:
                if "csv" in test:
                    model = tabulated_from_csv(path.parent / test["csv"])
                elif "taus" in test and "betas" in test:
                    model = tabulated_model(test["taus"], test["betas"])
                else:
                    chk.fail("/test", "tabulated needs 'csv' or 'taus'+'betas'")
            except (StatMenusError, OSError, TypeError) as exc:
                chk.fail("/test", str(exc))
        else:
            chk.fail("/test/kind", "must be 'gaussian_mean' or 'tabulated'")

    objective = None
    obj = raw.get("objective")
    if not isinstance(obj, dict):
        chk.fail("/objective", "required section")
    else:
        kind = obj.get("kind")
        if kind == "fdr":
            alpha = obj.get("alpha")
            if chk.require(_is_num(alpha) and 0 < alpha < 1, "/objective/alpha", "must be a number in (0, 1)"):
                objective = fdr_objective(alpha)
        elif kind == "bayes":
            w0, w1 = obj.get("omega0"), obj.get("omega1")
            ok = chk.require(_is_num(w0) and w0 >= 0, "/objective/omega0", "must be a nonnegative number")
            ok &= chk.require(_is_num(w1) and w1 >= 0, "/objective/omega1", "must be a nonnegative number")
            if ok and chk.require(w0 + w1 > 0, "/objective", "omega0 + omega1 must be positive"):
                objective = bayes_objective(w0, w1)
        else:
            chk.fail("/objective/kind", "must be 'bayes' or 'fdr'")

    population = None
    pop = raw.get("population")
    if pop is not None:
        if not isinstance(pop, dict):
            chk.fail("/population", "must be an object")
        else:
            kind = pop.get("kind")
            try:
                if kind == "discrete":
                    population = discrete_population(pop["types"], pop.get("weights"))
                elif kind == "uniform_grid":
                    population = uniform_population(pop["lo"], pop["hi"], pop.get("n", 1024))
                else:
                    chk.fail("/population/kind", "must be 'discrete' or 'uniform_grid'")
            except (KeyError, TypeError, ValueError) as exc:
                chk.fail("/population", str(exc))

    menu = raw.get("menu", {})
    if not isinstance(menu, dict):
        chk.fail("/menu", "must be an object")
        menu = {}
    elif "method" in menu and menu["method"] not in BUILDER_METHODS:
        chk.fail("/menu/method", f"unknown builder method {menu['method']!r}; allowed: {', '.join(BUILDER_METHODS)}")

    if isinstance(menu, dict) and "etas" in menu:
        etas = menu["etas"]
        if not (isinstance(etas, list) and etas and all(_is_num(e) and e > 0 for e in etas)):
            chk.fail("/menu/etas", "must be a nonempty list of positive numbers")

    simulation = raw.get("simulation", {})
    if not isinstance(simulation, dict):
        chk.fail("/simulation", "must be an object")
        simulation = {}
    else:
        if "n" in simulation and not (isinstance(simulation["n"], int) and simulation["n"] >= 1):
            chk.fail("/simulation/n", "must be a positive integer")
        if "seed" in simulation and not isinstance(simulation["seed"], int):
            chk.fail("/simulation/seed", "must be an integer")

    sens = raw.get("sensitivity", {})
    if not isinstance(sens, dict):
        chk.fail("/sensitivity", "must be an object")
        sens = {}
    elif "actual_theta1" in sens:
        thetas = sens["actual_theta1"]
        if not (isinstance(thetas, list) and thetas and all(_is_num(t) and 0 < t <= 10 for t in thetas)):
            chk.fail("/sensitivity/actual_theta1", "must be a nonempty list of numbers in (0, 10]")

    output_dir = None
    out = raw.get("output", {})
    if not isinstance(out, dict):
        chk.fail("/output", "must be an object")
    elif "directory" in out:
        if isinstance(out["directory"], str):
            output_dir = out["directory"]
        else:
            chk.fail("/output/directory", "must be a string")

    chk.raise_if_failed()
    return RunConfig(
        raw=raw,
        base_dir=path.parent,
        model=model,
        objective=objective,
        population=population,
        menu=menu,
        simulation=simulation,
        sensitivity=sens,
        output_dir=output_dir,
    )


def _config_hash(config: RunConfig, seed: Optional[int], grid: Optional[int]) -> str:
    payload = {"config": config.raw, "overrides": {"seed": seed, "grid": grid}}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, stamp: str, header: Sequence[str], rows) -> None:
    lines = [f"# config_sha256={stamp} artifact_version={__version__}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, stamp: str, doc: Dict[str, Any]) -> None:
    doc = dict(doc)
    doc["config_sha256"] = stamp
    doc["artifact_version"] = __version__
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _require_sections(config: RunConfig, command: str, needed: Sequence[str]) -> None:
    errs = []
    for name in needed:
        present = {
            "population": config.population is not None,
            "menu.method": bool(config.menu.get("method")),
            "menu.path": bool(config.menu.get("path")),
            "simulation.n": "n" in config.simulation,
            "simulation.seed": "seed" in config.simulation,
            "sensitivity.actual_theta1": "actual_theta1" in config.sensitivity,
        }[name]
        if not present:
            errs.append(("/" + name.replace(".", "/"), f"required by the {command} command"))
    if errs:
        raise ConfigError(errs)


def _load_menu(config: RunConfig) -> Menu:
    path = config.base_dir / config.menu["path"]
    try:
        return Menu.load(path)
    except OSError as exc:
        raise ConfigError([("/menu/path", f"cannot read menu file: {exc}")]) from None
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError([("/menu/path", f"malformed menu document {path}: {exc}")]) from None


def _need(spec: Dict[str, Any], key: str) -> Any:
    try:
        return spec[key]
    except KeyError:
        raise ConfigError([(f"/menu/{key}", "required by this builder method")]) from None


def _build_menu(config: RunConfig, grid: Optional[int]) -> Menu:
    method = config.menu["method"]
    spec = config.menu
    model = config.model
    objective = config.objective
    if method == "finite":
        _require_sections(config, "menu-build[finite]", ["population"])
        if config.population.kind != "discrete":
            raise ConfigError([("/population/kind", "finite construction needs discrete types")])
        pairs = threshold_map(config.population, objective, model)
        return build_finite_menu(
            [q for q, _ in pairs],
            [t for _, t in pairs],
            (spec.get("terminal_reward", 100.0), spec.get("terminal_cost", 0.0)),
            spec.get("epsilon", 50.0),
            lam=spec.get("lambda", 0.5),
            model=model,
        )
    if method == "fixed_reward":
        n = grid or spec.get("n", 129)
        return build_fixed_reward(
            spec.get("reward", 100.0), _need(spec, "q_lo"), _need(spec, "q_bar"),
            objective, model, n=n,
        )
    if method == "varying_reward":
        n = grid or spec.get("n", 65)
        q_lo, q_bar = _need(spec, "q_lo"), _need(spec, "q_bar")
        support = np.linspace(q_lo, q_bar, n)
        thresholds = [(float(q), optimal_threshold(float(q), objective, model)) for q in support]
        reward = spec.get("base_reward", 100.0)
        tau_bar = thresholds[-1][1]
        base = Contract(
            tau=tau_bar, reward=reward, cost=zero_utility_cost(q_bar, tau_bar, reward, model)
        )
        return build_varying_reward(base, quadratic_schedule(spec.get("eta", 0.1)), thresholds, model)
    if method == "potential":
        potential = tabulated_potential(
            _need(spec, "points"), _need(spec, "values"), _need(spec, "subgradients")
        )
        thresholds = [
            (float(p), optimal_threshold(float(p), objective, model)) for p in spec["points"]
        ]
        return build_from_potential(potential, thresholds, model)
    raise ConfigError([("/menu/method", f"unknown builder method {method!r}")])


def run(
    command: str,
    config: RunConfig,
    out_dir: Path,
    seed: Optional[int] = None,
    jobs: int = 1,
    grid: Optional[int] = None,
) -> int:
    """Execute one subcommand; returns the process exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = _config_hash(config, seed, grid)

    if command == "thresholds":
        _require_sections(config, command, ["population"])
        pairs = threshold_map(config.population, config.objective, config.model)
        _write_csv(out_dir / "thresholds.csv", stamp, ("q", "tau"), pairs)
        print(f"thresholds: wrote {len(pairs)} rows to {out_dir / 'thresholds.csv'}")
        return EXIT_OK

    if command == "menu-build":
        _require_sections(config, command, ["menu.method"])
        menu = _build_menu(config, grid)
        menu.save(out_dir / "menu.json")
        print(
            f"menu-build[{config.menu['method']}]: wrote {len(menu.support)} contracts "
            f"on [{menu.support[0]:.6g}, {menu.support[-1]:.6g}] to {out_dir / 'menu.json'}"
        )
        return EXIT_OK

    if command == "menu-verify":
        _require_sections(config, command, ["menu.path"])
        menu = _load_menu(config)
        margin = config.menu.get("margin", 1e-9)
        report = verify_separating(menu, model=config.model, margin=margin)
        doc = {
            "passed": report.passed,
            "margin": report.margin,
            "support_size": len(report.support),
            "pairs_checked": report.pairs_checked,
            "tie_break": report.tie_break,
            "detail": report.describe(),
        }
        if report.first_violation is not None:
            doc["first_violation"] = dataclasses.asdict(report.first_violation)
        _write_json(out_dir / "verify_report.json", stamp, doc)
        print(f"menu-verify: {report.describe()}")
        return EXIT_OK if report.passed else EXIT_VERIFY

    if command == "frontier":
        _require_sections(config, command, ["population"])
        points = frontier(config.population, config.model, resolution=grid or 512)
        _write_csv(
            out_dir / "frontier.csv",
            stamp,
            ("label", "parameter", "fdr", "tdr"),
            ((p.label, p.parameter, p.fdr, p.tdr) for p in points),
        )
        print(f"frontier: wrote {len(points)} points to {out_dir / 'frontier.csv'}")
        return EXIT_OK

    if command == "evaluate":
        _require_sections(config, command, ["population"])
        doc: Dict[str, Any] = {}
        if config.objective.kind == "bayes":
            doc["oracle_bayes_risk"] = oracle_bayes_risk(
                config.population, config.objective, config.model
            )
        else:
            doc["oracle_tdr"] = oracle_tdr(config.population, config.objective, config.model)
        if config.menu.get("method") == "varying_reward" and config.menu.get("etas"):
            # one return-curve column per slack level of the family
            etas = config.menu["etas"]
            family = {}
            doc["family"] = {}
            for eta in etas:
                spec = dict(config.menu)
                spec["eta"] = eta
                menu = _build_menu(dataclasses.replace(config, menu=spec), grid)
                base = menu.contracts[-1]
                family[eta] = (menu, base)
                doc["family"][_fmt(float(eta))] = {
                    "screening_cost": screening_cost(menu, base, config.population, config.model),
                    "information_rent": information_rent(menu, config.population, config.model),
                }
            header = ["q"] + [f"return_eta_{eta:g}" for eta in etas]
            rows = [
                [float(q)]
                + [
                    principal_return(family[eta][0], family[eta][1], float(q), config.model)
                    for eta in etas
                ]
                for q in config.population.points()
            ]
            _write_csv(out_dir / "return_curve.csv", stamp, header, rows)
        elif config.menu.get("path"):
            menu = _load_menu(config)
            base = menu.contracts[-1]
            doc["screening_cost"] = screening_cost(menu, base, config.population, config.model)
            doc["information_rent"] = information_rent(menu, config.population, config.model)
            rows = [
                (float(q), principal_return(menu, base, float(q), config.model))
                for q in config.population.points()
            ]
            _write_csv(out_dir / "return_curve.csv", stamp, ("q", "return"), rows)
        _write_json(out_dir / "evaluate.json", stamp, doc)
        metrics = ", ".join(
            f"{k}={v:.6g}" for k, v in doc.items() if isinstance(v, (int, float))
        )
        print(f"evaluate: {metrics} -> {out_dir / 'evaluate.json'}")
        return EXIT_OK

    if command == "simulate":
        _require_sections(config, command, ["menu.path", "population", "simulation.n"])
        menu = _load_menu(config)
        n = config.simulation["n"]
        run_seed = seed if seed is not None else config.simulation.get("seed", 0)
        report = simulate_population(
            menu,
            config.population,
            config.model,
            n=n,
            seed=run_seed,
            stratified=config.simulation.get("stratified", False),
            jobs=jobs,
        )
        doc = dataclasses.asdict(report)
        if doc["per_type"] is not None:
            doc["per_type"] = {_fmt(k): v for k, v in doc["per_type"].items()}
        _write_json(out_dir / "simulation.json", stamp, doc)
        print(
            f"simulate: n={n} seed={run_seed} fdr={report.empirical_fdr:.4f} "
            f"tdr={report.empirical_tdr:.4f} -> {out_dir / 'simulation.json'}"
        )
        return EXIT_OK

    if command == "sensitivity":
        _require_sections(config, command, ["menu.path", "sensitivity.actual_theta1"])
        menu = _load_menu(config)
        rows = []
        for theta in config.sensitivity["actual_theta1"]:
            scenario = MisspecScenario(
                designed=config.model,
                actual=gaussian_model(theta),
                menu=menu,
                objective=config.objective,
            )
            n_points = grid or config.sensitivity.get("points", 256)
            lo = menu.support[0] + 1e-3
            hi = menu.support[-1] - 1e-3
            for row in sensitivity_sweep(scenario, np.linspace(lo, hi, n_points)):
                rows.append((theta, row.report, row.gap))
        _write_csv(out_dir / "sensitivity.csv", stamp, ("theta_actual", "p", "gap"), rows)
        print(f"sensitivity: wrote {len(rows)} rows to {out_dir / 'sensitivity.csv'}")
        return EXIT_OK

    raise ConfigError([("/", f"unknown command {command!r}")])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="statmenus",
        description="Construct, verify, and evaluate separating menus of statistical contracts.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config or '.')")
    parser.add_argument("--seed", type=int, default=None, help="override the simulation seed")
    parser.add_argument(
        "--jobs", type=int, default=1, help="worker count for sweeps; never affects output values"
    )
    parser.add_argument("--grid", type=int, default=None, help="override grid/sweep resolution")
    args = parser.parse_args(argv)

    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        for pointer, message in exc.errors:
            print(f"config error at {pointer}: {message}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out) if args.out else Path(config.output_dir or ".")
    try:
        return run(
            args.command, config, out_dir, seed=args.seed, jobs=args.jobs, grid=args.grid
        )
    except ConfigError as exc:
        for pointer, message in exc.errors:
            print(f"config error at {pointer}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except (StatMenusError, ValueError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
