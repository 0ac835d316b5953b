"""
Command-line front door.

    python main.py classify --spec market.json
    python main.py price --claim const:1 --alpha 0.9 --theta-scale 0
    python main.py curve --spec market.json --claim call:1:1 --alpha-grid 0.1,0.5,0.9 --seed 7
    python main.py dyadic-example --delta 0.6 --alpha 0.5 --n 20

Exit codes: 0 success, 1 runtime or statistical failure, 2 invalid input.
"""

import argparse
import logging
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ConfigError, PricingLabError, StatisticalError
from app.core.logging import configure_logging
from app.schemas.dyadic import DyadicMarket
from app.schemas.market import ClaimSequence, MarketSpec
from app.schemas.np import DiscreteMeasurePair
from app.schemas.run import OutputFormat, RunConfig
from app.services import arbitrage, gaussian_analytics, np_solver, pricing, reporting
from app.services import dyadic_market as dyadic
from app.services.model import theta_scale

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

DEFAULT_ALPHA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_EPS_GRID = (0.01, 0.05, 0.1, 0.2, 0.5)
SELF_CHECK_SIGMAS = 4.0


# ---------------- Argument parsing ----------------


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _add_market(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--spec", dest="spec_path", help="market spec JSON file")
    group.add_argument("--theta-scale", type=float, help="one-asset market with ||theta|| sqrt(T) = value")
    p.add_argument("--n", type=int, default=1, help="market index n")


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="required whenever Monte Carlo is used")
    p.add_argument("--samples", dest="n_samples", type=int, default=settings.MC_SAMPLES)
    p.add_argument("--chunk-size", type=int, default=settings.MC_CHUNK_SIZE)
    p.add_argument("--workers", dest="max_workers", type=int, default=settings.MC_MAX_WORKERS)
    p.add_argument("--two-pass", action="store_true", help="quantile and mean from independent halves")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--format", choices=[f.value for f in OutputFormat])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantile-pricing", description=settings.PROJECT_NAME)
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("classify", help="asymptotic-arbitrage regime of a market")
    _add_market(p)
    p.add_argument("--n-grid", type=_int_list, help="witness grid for divergent markets")
    _add_output(p)

    p = sub.add_parser("np-set", help="Neyman-Pearson set, Gaussian or discrete")
    _add_market(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--kind", dest="np_kind", choices=["naa1", "naa2", "min-q"], default="naa1")
    p.add_argument("--atoms", dest="atoms_path", help="CSV of label,p,q for a discrete measure pair")
    p.add_argument("--budget", type=float)
    p.add_argument("--minimize", action="store_true", help="min Q subject to P >= budget")
    _add_output(p)

    p = sub.add_parser("power-curve", help="NP powers over an eps grid")
    _add_market(p)
    p.add_argument("--eps-grid", type=_float_list, default=DEFAULT_EPS_GRID)
    _add_output(p)

    for name, help_text in (("price", "quantile price at one alpha"), ("curve", "quantile prices over an alpha grid")):
        p = sub.add_parser(name, help=help_text)
        _add_market(p)
        p.add_argument("--claim", default="const:1")
        if name == "price":
            p.add_argument("--alpha", type=float, required=True)
        else:
            p.add_argument("--alpha-grid", type=_float_list, default=DEFAULT_ALPHA_GRID)
            p.add_argument("--delta", type=float)
        p.add_argument("--method", choices=["auto", "closed_form", "monte_carlo"], default="auto")
        _add_mc(p)
        _add_output(p)

    p = sub.add_parser("trajectory", help="weak-price trajectory over an n grid")
    _add_market(p)
    p.add_argument("--claim", default="const:1")
    p.add_argument("--n-grid", type=_int_list, required=True)
    p.add_argument("--delta", type=float)
    _add_mc(p)
    _add_output(p)

    p = sub.add_parser("dyadic-example", help="table of the binomial example market")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=20)
    _add_output(p)

    p = sub.add_parser("self-check", help="closed form vs Monte Carlo and oracle checks")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", dest="n_samples", type=int, default=200_000)
    p.add_argument("--chunk-size", type=int, default=settings.MC_CHUNK_SIZE)
    p.add_argument("--workers", dest="max_workers", type=int, default=settings.MC_MAX_WORKERS)
    _add_output(p)
    return parser


def to_run_config(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.model_fields and v is not None}
    return RunConfig(**fields)


# ---------------- Helpers ----------------


def _load_market(run: RunConfig) -> MarketSpec:
    if run.spec_path:
        return MarketSpec.model_validate_json(Path(run.spec_path).read_text())
    if run.theta_scale is not None:
        return MarketSpec.from_theta_scale(run.theta_scale)
    raise ConfigError("pass --spec FILE or --theta-scale VALUE")


def _emit(run: RunConfig, text: str) -> None:
    if run.out:
        Path(run.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(run: RunConfig, default: OutputFormat) -> OutputFormat:
    return run.format or default


def _run_meta(run: RunConfig) -> dict:
    return run.model_dump(mode="python", exclude={"out", "format"})


# ---------------- Subcommands ----------------


def cmd_classify(run: RunConfig) -> str:
    verdict = arbitrage.classify(_load_market(run), run.n_grid)
    payload = verdict.model_dump(mode="python")
    payload["flag_labels"] = verdict.flags.labels
    if _fmt(run, OutputFormat.JSON) is OutputFormat.CSV:
        rows = [p.model_dump() for p in verdict.witness or []]
        return reporting.to_csv("classify", ["n", "theta_scale", "eps_n", "p_power"], rows)
    return reporting.to_json("classify", payload, _run_meta(run))


def cmd_np_set(run: RunConfig) -> str:
    if run.atoms_path:
        if run.budget is None:
            raise ConfigError("--atoms needs --budget")
        pair = DiscreteMeasurePair.from_csv(run.atoms_path)
        budget = run.budget
        solution = np_solver.solve_np_min(pair, budget) if run.minimize else np_solver.solve_np(pair, budget)
        payload = {
            "chosen_atoms": list(solution.chosen_atoms),
            "objective_mass": solution.objective_mass,
            "constraint_mass": solution.constraint_mass,
            "lr_threshold": solution.lr_threshold,
            "budget": solution.budget,
            "method": solution.method,
            "greedy_objective": solution.greedy_objective,
            "is_level_set": solution.is_level_set(pair),
        }
        return reporting.to_json("np-set", payload, _run_meta(run))
    if run.eps is None:
        raise ConfigError("--eps is required for Gaussian NP sets")
    s = theta_scale(_load_market(run), run.n)
    builders = {
        "naa1": gaussian_analytics.np_set_naa1,
        "naa2": gaussian_analytics.np_set_naa2,
        "min-q": gaussian_analytics.np_set_min_q,
    }
    np_set = builders[run.np_kind](s, run.eps)
    payload = np_set.model_dump(mode="python")
    payload.update(p_mass=np_set.p_mass, q_mass=np_set.q_mass)
    return reporting.to_json("np-set", payload, _run_meta(run))


def cmd_power_curve(run: RunConfig) -> str:
    grid = run.eps_grid or DEFAULT_EPS_GRID
    points = arbitrage.contiguity_power_curve(_load_market(run), run.n, grid)
    if _fmt(run, OutputFormat.CSV) is OutputFormat.JSON:
        return reporting.to_json("power-curve", [p.model_dump() for p in points], _run_meta(run))
    return reporting.to_csv("power-curve", ["eps", "p_power", "q_power"], [p.model_dump() for p in points])


_PRICE_COLUMNS = ["alpha", "v_alpha", "stderr", "q_n_alpha", "method", "alpha0", "n"]


def _price_row(result) -> dict:
    return {
        "alpha": result.alpha,
        "v_alpha": result.value,
        "stderr": result.stderr,
        "q_n_alpha": result.quantile_q,
        "method": result.method,
        "alpha0": result.atom_alpha0,
        "n": result.n,
    }


def cmd_price(run: RunConfig) -> str:
    spec = _load_market(run)
    claim = ClaimSequence.model_validate(run.claim)
    result = pricing.quantile_price(spec, claim, run.n, run.alpha, run.mc_params(), run.method)
    if _fmt(run, OutputFormat.CSV) is OutputFormat.JSON:
        return reporting.to_json("price", result.model_dump(mode="python"), _run_meta(run))
    return reporting.to_csv("price", _PRICE_COLUMNS, [_price_row(result)])


def cmd_curve(run: RunConfig) -> str:
    spec = _load_market(run)
    claim = ClaimSequence.model_validate(run.claim)
    grid = run.alpha_grid or DEFAULT_ALPHA_GRID
    curve = pricing.price_curve(spec, claim, run.n, grid, run.mc_params(), run.method, run.delta)
    if _fmt(run, OutputFormat.CSV) is OutputFormat.JSON:
        return reporting.to_json("curve", curve.model_dump(mode="python"), _run_meta(run))
    return reporting.to_csv("curve", _PRICE_COLUMNS, [_price_row(p) for p in curve.points])


def cmd_trajectory(run: RunConfig) -> str:
    spec = _load_market(run)
    claim = ClaimSequence.model_validate(run.claim)
    trajectory = pricing.weak_price_trajectory(spec, claim, run.n_grid or (), run.mc_params(), run.delta)
    if _fmt(run, OutputFormat.CSV) is OutputFormat.JSON:
        return reporting.to_json("trajectory", trajectory.model_dump(mode="python"), _run_meta(run))
    rows = [
        {**p.model_dump(), "v_alpha": p.value}
        for p in trajectory.points
    ]
    columns = ["n", "theta_scale", "eps_n", "alpha_n", "v_alpha", "stderr", "strong_price", "gap_bound"]
    return reporting.to_csv("trajectory", columns, rows)


def cmd_dyadic_example(run: RunConfig) -> str:
    rows = dyadic.example_table(run.delta, run.alpha, run.n)
    if _fmt(run, OutputFormat.CSV) is OutputFormat.JSON:
        payload = [
            {"n": r.n, "p_mass": str(r.p_mass), "q_mass": str(r.q_mass), "delta_alpha": str(r.delta_alpha)}
            for r in rows
        ]
        return reporting.to_json("dyadic-example", payload, _run_meta(run))
    table = [
        {"n": r.n, "p_mass": r.p_mass, "q_mass": r.q_mass, "delta_alpha": r.delta_alpha}
        for r in rows
    ]
    return reporting.to_csv("dyadic-example", ["n", "p_mass", "q_mass", "delta_alpha"], table)


# ---------------- self-check ----------------


def _check_closed_form_vs_mc(run: RunConfig) -> list[tuple[str, bool]]:
    params = run.mc_params()
    claim = ClaimSequence.constant(1.0)
    results = []
    for s in (0.0, 0.5, 1.0):
        spec = MarketSpec.from_theta_scale(s)
        curve = pricing.price_curve(spec, claim, 1, (0.25, 0.5, 0.75), params, method="monte_carlo")
        for point in curve.points:
            exact = pricing.quantile_price(spec, claim, 1, point.alpha).value
            ok = abs(point.value - exact) <= SELF_CHECK_SIGMAS * point.stderr + 1e-12
            results.append((f"quantile price s={s} alpha={point.alpha}", ok))
    return results


def _check_np_oracle(run: RunConfig) -> list[tuple[str, bool]]:
    rng = random.Random(run.seed)
    ok = True
    for _ in range(50):
        k = rng.randint(2, 8)
        p_raw = [rng.randint(1, 20) for _ in range(k)]
        q_raw = [rng.randint(1, 20) for _ in range(k)]
        pair = DiscreteMeasurePair.from_masses(
            [Fraction(v, sum(p_raw)) for v in p_raw],
            [Fraction(v, sum(q_raw)) for v in q_raw],
        )
        budget = Fraction(rng.randint(0, sum(q_raw)), sum(q_raw))
        best = np_solver.solve_np(pair, budget)
        dual = np_solver.solve_np_min(pair.swapped(), budget)
        ok = ok and best.constraint_mass <= budget and best.objective_mass >= np_solver.greedy_np(pair, budget).objective_mass
        ok = ok and dual.objective_mass == np_solver.exhaustive_np_min(pair.swapped(), budget).objective_mass
    return [("discrete NP oracle", ok)]


def _check_dyadic() -> list[tuple[str, bool]]:
    results = []
    for delta in (0.25, 0.6):
        market = DyadicMarket(delta=delta, depth_n=10)
        floor = dyadic.quantile_price_const1(market, 0.5).truncated_alpha
        solved = np_solver.solve_np_min(dyadic.as_measure_pair(market), floor)
        value = dyadic.quantile_price_const1(market, 0.5).value
        results.append((f"dyadic oracle delta={delta}", solved.objective_mass == value))
        results.append((f"dyadic NAA1 delta={delta}", all(dyadic.naa1_witness_check(market, l) for l in range(6))))
    return results


def cmd_self_check(run: RunConfig) -> str:
    results = _check_closed_form_vs_mc(run) + _check_np_oracle(run) + _check_dyadic()
    lines = [f"{'PASS' if ok else 'FAIL'} {name}" for name, ok in results]
    text = "\n".join(lines) + "\n"
    if not all(ok for _, ok in results):
        sys.stdout.write(text)
        raise StatisticalError("self-check failed")
    return text


COMMANDS: dict[str, Callable[[RunConfig], str]] = {
    "classify": cmd_classify,
    "np-set": cmd_np_set,
    "power-curve": cmd_power_curve,
    "price": cmd_price,
    "curve": cmd_curve,
    "trajectory": cmd_trajectory,
    "dyadic-example": cmd_dyadic_example,
    "self-check": cmd_self_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    configure_logging(args.log_level)
    try:
        config = to_run_config(args)
        _emit(config, COMMANDS[config.subcommand](config))
    except (ConfigError, ValidationError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PricingLabError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
