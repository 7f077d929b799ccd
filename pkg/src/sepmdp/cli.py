"""Command-line surface: solve, sweep, expand, simulate.

Every run resolves its arguments into a RunManifest first; the report is a
pure function of the manifest, so re-running a manifest reproduces the report
byte for byte.  The default timestamp is a fixed epoch string (override with
--timestamp) so that repeated identical commands stay byte-identical.

Exit codes: 0 ok, 2 validation failure, 3 irreducible-chain failure,
4 infeasible epsilon grid, 5 internal cross-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .baseline import acoe_residual, solve_baseline
from .errors import (
    AssemblyInfeasible,
    CapExceeded,
    CrossCheckFailure,
    NotIrreducible,
    SepMdpError,
)
from .model import Policy, SeparableSpec, assemble, epsilon_max
from .modelio import dumps_report, load_model, sweep_csv
from .montecarlo import simulate_gain
from .perturb import first_order_expansion, sample_instance, sweep
from .solvers import ENUMERATION_CAP, brute_force

DEFAULT_TIMESTAMP = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one run: command, inputs, resolved parameters."""

    command: str
    version: str
    timestamp: str
    input: dict
    parameters: dict


def parse_eps_grid(text: str) -> list[float]:
    """Parse 'log:A:B:K' or 'lin:A:B:K' into a K-point grid from A to B."""
    parts = text.split(":")
    if len(parts) != 4 or parts[0] not in ("log", "lin"):
        raise ValueError(f"bad eps grid '{text}': expected log:A:B:K or lin:A:B:K")
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ValueError(f"bad eps grid '{text}': {exc}") from exc
    if count < 1:
        raise ValueError(f"bad eps grid '{text}': point count must be positive")
    if parts[0] == "log":
        if lo <= 0 or hi <= 0:
            raise ValueError(f"bad eps grid '{text}': log grid endpoints must be positive")
        return [float(e) for e in np.geomspace(lo, hi, count)]
    return [float(e) for e in np.linspace(lo, hi, count)]


def parse_policy(text: str, n_states: int) -> Policy:
    """Parse 'const:a' or a comma list like '0,1,0' into a Policy."""
    if text.startswith("const:"):
        return Policy.constant(int(text.split(":", 1)[1]), n_states)
    return Policy(np.array([int(tok) for tok in text.split(",")], dtype=np.int64))


def _resolve_spec(manifest: RunManifest) -> SeparableSpec:
    src = manifest.input
    if "model" in src:
        return load_model(src["model"])
    sampler = src["sampler"]
    return sample_instance(
        seed=sampler["seed"],
        n_states=sampler["states"],
        n_actions=sampler["actions"],
        perturb_scale=sampler["perturb_scale"],
    )


def _check_grid_feasible(spec: SeparableSpec, grid: list[float]) -> None:
    bound = epsilon_max(spec)
    bad = [e for e in grid if e >= bound]
    if bad:
        raise AssemblyInfeasible(
            f"grid epsilon(s) {bad} at or beyond the feasibility bound epsilon_max = {bound!r}"
        )


def _run_solve(manifest: RunManifest, spec: SeparableSpec) -> dict:
    sol = solve_baseline(spec)
    m0 = assemble(spec, 0.0)
    residual = float(np.abs(acoe_residual(m0, sol.gain, sol.bias)).max())
    cap = manifest.parameters.get("cap", ENUMERATION_CAP)
    check = {"within_cap": False, "gain": None, "agrees": None}
    try:
        bf = brute_force(m0, cap=cap)
        check = {
            "within_cap": True,
            "gain": bf.gain,
            "agrees": bool(abs(bf.gain - sol.gain) <= 1e-9),
        }
    except CapExceeded:
        pass
    return {
        "manifest": asdict(manifest),
        "best_action": sol.best_action,
        "gain": sol.gain,
        "per_action_gain": sol.per_action_gain,
        "bias": sol.bias,
        "acoe_residual_max": residual,
        "brute_force_check": check,
    }


def _run_sweep(manifest: RunManifest, spec: SeparableSpec) -> dict:
    grid = manifest.parameters["epsilons"]
    _check_grid_feasible(spec, grid)
    report = sweep(spec, grid, cap=manifest.parameters.get("cap", ENUMERATION_CAP))
    return {
        "manifest": asdict(manifest),
        "epsilons": report.epsilons,
        "optimal_gain": report.optimal_gain,
        "fixed_policy_gain": report.fixed_policy_gain,
        "gap": report.gap,
        "gap_slope": report.gap_slope,
        "expansion_slope": report.expansion_slope,
        "uniform_C": report.uniform_C,
        "uniform_C_exhaustive": report.uniform_C_exhaustive,
        "baseline_action": report.baseline_action,
        "feasible_below": report.feasible_below,
    }


def _run_expand(manifest: RunManifest, spec: SeparableSpec) -> dict:
    grid = manifest.parameters["epsilons"]
    _check_grid_feasible(spec, grid)
    pi = Policy(np.array(manifest.parameters["policy"], dtype=np.int64))
    report = first_order_expansion(spec, pi, epsilons=grid)
    return {
        "manifest": asdict(manifest),
        "policy": report.policy.action_of,
        "pi0": report.pi0,
        "pi1": report.pi1,
        "g0": report.g0,
        "g1": report.g1,
        "residual_curve": [list(point) for point in report.residual_curve],
    }


def _run_simulate(manifest: RunManifest, spec: SeparableSpec) -> dict:
    params = manifest.parameters
    pi = Policy(np.array(params["policy"], dtype=np.int64))
    est = simulate_gain(
        assemble(spec),
        pi,
        horizon=params["horizon"],
        batches=params["batches"],
        seed=params["sim_seed"],
    )
    return {
        "manifest": asdict(manifest),
        "mean": est.mean,
        "half_width": est.half_width,
        "horizon": est.horizon,
        "batches": est.batches,
        "seed": est.seed,
    }


_RUNNERS = {
    "solve": _run_solve,
    "sweep": _run_sweep,
    "expand": _run_expand,
    "simulate": _run_simulate,
}


def run_from_manifest(manifest: RunManifest) -> dict:
    """Execute a manifest and return the report dict (deterministic per manifest)."""
    spec = _resolve_spec(manifest)
    return _RUNNERS[manifest.command](manifest, spec)


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="model JSON file")
    parser.add_argument("--seed", type=int, default=0, help="sampler seed (sampler mode)")
    parser.add_argument("--states", type=int, help="sampler state count")
    parser.add_argument("--actions", type=int, help="sampler action count")
    parser.add_argument("--perturb-scale", type=float, default=0.5, help="sampler Q scale")
    parser.add_argument("--out", help="output file (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--timestamp", default=DEFAULT_TIMESTAMP, help="manifest timestamp")
    parser.add_argument("--cap", type=int, default=ENUMERATION_CAP, help="policy enumeration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepmdp",
        description="Exact analysis of finite average-reward MDPs with nearly separable structure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="closed-form baseline solve of the epsilon=0 model")
    _add_input_flags(p_solve)

    p_sweep = sub.add_parser("sweep", help="optimality-gap sweep over an epsilon grid")
    _add_input_flags(p_sweep)
    p_sweep.add_argument("--eps-grid", default="log:1e-4:1e-1:7", help="log:A:B:K or lin:A:B:K")

    p_expand = sub.add_parser("expand", help="first-order gain expansion of one policy")
    _add_input_flags(p_expand)
    p_expand.add_argument("--eps-grid", default="log:1e-4:1e-2:5", help="log:A:B:K or lin:A:B:K")
    p_expand.add_argument("--policy", required=True, help="const:a or comma list like 0,1,0")

    p_sim = sub.add_parser("simulate", help="Monte Carlo gain estimate for one policy")
    _add_input_flags(p_sim)
    p_sim.add_argument("--policy", required=True, help="const:a or comma list like 0,1,0")
    p_sim.add_argument("--horizon", type=int, default=10**6)
    p_sim.add_argument("--batches", type=int, default=20)
    p_sim.add_argument(
        "--sim-seed",
        type=int,
        default=None,
        help="trajectory seed (defaults to --seed when a model file is given, else 0)",
    )
    return parser


def _manifest_from_args(args: argparse.Namespace) -> RunManifest:
    if args.model is not None:
        source = {"model": args.model}
    elif args.states is not None and args.actions is not None:
        source = {
            "sampler": {
                "seed": args.seed,
                "states": args.states,
                "actions": args.actions,
                "perturb_scale": args.perturb_scale,
            }
        }
    else:
        raise ValueError("provide either --model FILE or sampler dims --states/--actions")

    params: dict = {"cap": args.cap}
    if args.command in ("sweep", "expand"):
        params["eps_grid"] = args.eps_grid
        params["epsilons"] = parse_eps_grid(args.eps_grid)
    if args.command in ("expand", "simulate"):
        n_states = _input_state_count(source)
        params["policy"] = [int(a) for a in parse_policy(args.policy, n_states).action_of]
    if args.command == "simulate":
        params["horizon"] = args.horizon
        params["batches"] = args.batches
        if args.sim_seed is not None:
            params["sim_seed"] = args.sim_seed
        else:
            params["sim_seed"] = args.seed if args.model is not None else 0
    return RunManifest(
        command=args.command,
        version=__version__,
        timestamp=args.timestamp,
        input=source,
        parameters=params,
    )


def _input_state_count(source: dict) -> int:
    if "model" in source:
        return load_model(source["model"]).n_states
    return source["sampler"]["states"]


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = _manifest_from_args(args)
        report = run_from_manifest(manifest)
        if args.format == "csv":
            if args.command != "sweep":
                raise ValueError("--format csv is only available for sweep")
            _emit(sweep_csv(report), args.out)
        else:
            _emit(dumps_report(report), args.out)
        return 0
    except json.JSONDecodeError as exc:
        print(
            f"error: model file is not valid JSON: {exc.msg} at byte offset {exc.pos} "
            f"(line {exc.lineno}, column {exc.colno})",
            file=sys.stderr,
        )
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotIrreducible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AssemblyInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except CrossCheckFailure as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 5
    except SepMdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
