"""Command-line interface.

Commands: ``select`` (parallel-analysis rank selection on a CSV/binary
matrix), ``simulate`` (the built-in simulation experiments), ``law``
(limiting spectral law densities and upper edges), and ``diagnose``
(signal-destruction diagnostics).

Exit codes: 0 success, 2 usage/flag errors, 3 I/O or parse errors,
4 numeric failures. stdout carries only the primary answer; structured
payloads go to --output / --out-dir; logs and timings go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import simlab
from .dataio import apply_preprocess, read_matrix_binary, read_matrix_csv
from .diagnostics import classify_rate_regime, destruction_report, monte_carlo_flip_norm
from .exceptions import ConvergenceError, ParseError
from .randomize import SeedSpec
from .select import PaConfig, run_pa
from .spectral import MixtureH, density_by_inversion

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _default_threads():
    env = os.environ.get("SFPA_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _add_common_io(parser):
    parser.add_argument("--input", required=True, help="matrix path (.csv or .sfpa binary)")
    parser.add_argument("--delimiter", default=",")
    parser.add_argument("--has-header", action="store_true")
    parser.add_argument("--missing-token", default="")


def _read_input(args):
    if args.input.endswith(".sfpa"):
        matrix = read_matrix_binary(args.input)
        mask = np.zeros(matrix.shape, dtype=bool)
        return matrix, mask
    return read_matrix_csv(
        args.input,
        delimiter=args.delimiter,
        has_header=args.has_header,
        missing_token=args.missing_token,
    )


def _seed_of(args):
    return SeedSpec(master_seed=args.seed, stream_id=0)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sfpa",
        description="Rank selection via signflip/permutation parallel analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="select the number of factors")
    _add_common_io(p_select)
    p_select.add_argument("--method", choices=["signflip", "permutation"], default="signflip")
    p_select.add_argument(
        "--comparison", choices=["pairwise", "upper-edge"], default="pairwise"
    )
    p_select.add_argument("--alpha", type=float, default=95.0)
    p_select.add_argument("--trials", type=int, default=10)
    p_select.add_argument("--seed", type=int, default=0)
    p_select.add_argument(
        "--preprocess",
        default="",
        help="comma-separated steps: impute_missing_zero,center_rows,"
        "center_columns,scale_columns_unit_variance",
    )
    p_select.add_argument("--max-rank", type=int, default=None)
    p_select.add_argument("--output", default=None, help="report path")
    p_select.add_argument("--format", choices=["json", "csv"], default="json")
    p_select.add_argument("--threads", type=int, default=_default_threads())

    p_sim = sub.add_parser("simulate", help="run a built-in simulation experiment")
    p_sim.add_argument(
        "--experiment",
        required=True,
        choices=[
            "homogeneous",
            "hetero-rows",
            "hetero-grid",
            "noise-sv",
            "homogenization-demo",
        ],
    )
    p_sim.add_argument("--runs", type=int, default=100)
    p_sim.add_argument("--trials", type=int, default=10)
    p_sim.add_argument("--alpha", type=float, default=95.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out-dir", required=True)
    p_sim.add_argument(
        "--theta-grid",
        default=None,
        help="min:max:steps (default 0:4:17)",
    )
    p_sim.add_argument("--threads", type=int, default=_default_threads())

    p_law = sub.add_parser("law", help="solve a limiting spectral law")
    p_law.add_argument("--law", choices=["row", "permuted"], required=True)
    p_law.add_argument("--gamma", type=float, required=True)
    p_law.add_argument("--atoms", required=True, help="t1:w1,t2:w2,...")
    p_law.add_argument("--grid", default="0.0001:4.5:400", help="min:max:steps")
    p_law.add_argument("--epsilon", type=float, default=1e-5)
    p_law.add_argument("--edge-threshold", type=float, default=1e-4)
    p_law.add_argument("--output", default=None, help="JSON path; CSV written alongside")

    p_diag = sub.add_parser("diagnose", help="signal-destruction diagnostics")
    _add_common_io(p_diag)
    p_diag.add_argument("--flip-trials", type=int, default=None)
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--k", type=float, default=4.0, help="entrywise norm order")
    p_diag.add_argument(
        "--rate-exponents",
        default=None,
        help="alpha1:alpha2:beta1:beta2:nu1:nu2 to classify a rate regime",
    )
    p_diag.add_argument("--output", default=None)
    return parser


def _parse_range(text, what):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{what} must be min:max:steps, got {text!r}")
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 2 or hi <= lo:
        raise ValueError(f"{what} needs max > min and steps >= 2")
    return np.linspace(lo, hi, steps)


def _parse_atoms(text):
    pairs = []
    for chunk in text.split(","):
        bits = chunk.split(":")
        if len(bits) != 2:
            raise ValueError(f"atom {chunk!r} must be t:w")
        pairs.append((float(bits[0]), float(bits[1])))
    weight_sum = sum(w for _, w in pairs)
    if abs(weight_sum - 1.0) > 1e-9:
        raise ValueError(f"atom weights sum to {weight_sum:.12g}, expected 1")
    return MixtureH.from_pairs(pairs)


def _cmd_select(args):
    matrix, mask = _read_input(args)
    steps = [s for s in args.preprocess.split(",") if s]
    if steps:
        matrix = apply_preprocess(matrix, mask, steps)
    cfg = PaConfig(
        method=args.method,
        comparison=args.comparison.replace("-", "_"),
        alpha=args.alpha,
        trials=args.trials,
        max_rank=args.max_rank,
        seed=_seed_of(args),
        workers=args.threads,
    )
    result = run_pa(matrix, cfg)
    print(result.k_hat)
    if args.output:
        if args.format == "json":
            payload = {
                "command": "select",
                "config": {
                    "method": cfg.method,
                    "comparison": cfg.comparison,
                    "alpha": cfg.alpha,
                    "trials": cfg.trials,
                    "max_rank": args.max_rank,
                    "preprocess": steps,
                    "input": args.input,
                },
                "seed": {"master_seed": cfg.seed.master_seed, "stream_id": cfg.seed.stream_id},
                "results": {
                    "k_hat": result.k_hat,
                    "capped": bool(result.capped),
                    "data_singular_values": [float(v) for v in result.data_sv.values],
                    "null_percentiles": [float(v) for v in result.null_percentiles],
                    "trace": [bool(b) for b in result.trace],
                },
            }
            _write_json(args.output, payload)
        else:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write("k,data_sv,threshold,above,k_hat,capped\n")
                for k, thr in enumerate(result.null_percentiles):
                    fh.write(
                        f"{k},{result.data_sv.values[k]:.17g},{thr:.17g},"
                        f"{int(result.trace[k])},{result.k_hat},{int(result.capped)}\n"
                    )
    return EXIT_OK


def _cmd_simulate(args):
    if args.runs < 1:
        raise ValueError("--runs must be at least 1")
    os.makedirs(args.out_dir, exist_ok=True)
    probe = os.path.join(args.out_dir, ".write_probe")
    with open(probe, "w", encoding="utf-8") as fh:
        fh.write("")
    os.remove(probe)

    seed = _seed_of(args)
    theta_grid = (
        simlab.DEFAULT_THETA_GRID
        if args.theta_grid is None
        else _parse_range(args.theta_grid, "--theta-grid")
    )
    config_echo = {
        "command": "simulate",
        "experiment": args.experiment,
        "runs": args.runs,
        "trials": args.trials,
        "alpha": args.alpha,
        "seed": {"master_seed": seed.master_seed, "stream_id": seed.stream_id},
        "theta_grid": [float(t) for t in np.asarray(theta_grid)],
    }

    if args.experiment in ("homogeneous", "hetero-rows", "hetero-grid"):
        runner = {
            "homogeneous": simlab.experiment_homogeneous,
            "hetero-rows": simlab.experiment_hetero_rows,
            "hetero-grid": simlab.experiment_hetero_grid,
        }[args.experiment]
        sweep = runner(
            seed,
            runs=args.runs,
            theta_grid=theta_grid,
            alpha=args.alpha,
            trials=args.trials,
            workers=args.threads,
        )
        sweep.to_csv(os.path.join(args.out_dir, "sweep.csv"))
        sweep.to_json(os.path.join(args.out_dir, "sweep.json"))
    elif args.experiment == "noise-sv":
        profile = simlab.profile_row_blocks(
            simlab.DEFAULT_N, simlab.DEFAULT_P, simlab.HETERO_ROW_BLOCKS
        )
        samples = simlab.noise_sv_distributions(seed, args.runs, profile=profile)
        samples.to_csv(os.path.join(args.out_dir, "noise_sv.csv"))
        _write_json(os.path.join(args.out_dir, "noise_sv.json"), samples.to_json_dict())
    else:
        demo = simlab.homogenization_demo(seed)
        demo.save(args.out_dir)

    _write_json(os.path.join(args.out_dir, "run_config.json"), config_echo)
    return EXIT_OK


def _cmd_law(args):
    if args.gamma <= 0:
        raise ValueError("--gamma must be positive")
    mixture = _parse_atoms(args.atoms)
    grid = _parse_range(args.grid, "--grid")
    law_kind = "row_variance_law" if args.law == "row" else "permuted_column_law"
    law = density_by_inversion(
        law_kind,
        args.gamma,
        mixture,
        grid,
        epsilon=args.epsilon,
        edge_threshold=args.edge_threshold,
    )
    print(f"{law.upper_edge:.6f}")
    if args.output:
        payload = {
            "command": "law",
            "config": {
                "law": args.law,
                "gamma": args.gamma,
                "atoms": args.atoms,
                "grid": args.grid,
                "epsilon": args.epsilon,
                "edge_threshold": args.edge_threshold,
            },
            "results": law.to_json_dict(),
        }
        _write_json(args.output, payload)
        stem, _ = os.path.splitext(args.output)
        law.to_csv(stem + ".csv")
    return EXIT_OK


def _cmd_diagnose(args):
    matrix, _ = _read_input(args)
    report = destruction_report(matrix, k_for_entrywise=args.k)
    payload = {
        "command": "diagnose",
        "config": {"input": args.input, "k": args.k, "flip_trials": args.flip_trials},
        "seed": {"master_seed": args.seed, "stream_id": 0},
        "results": report.to_json_dict(),
    }
    if args.flip_trials is not None:
        mean, stderr = monte_carlo_flip_norm(matrix, args.flip_trials, _seed_of(args))
        payload["results"]["flip_norm"] = {
            "mean": mean,
            "stderr": stderr,
            "trials": args.flip_trials,
        }
    if args.rate_exponents is not None:
        parts = args.rate_exponents.split(":")
        if len(parts) != 6:
            raise ValueError("--rate-exponents needs alpha1:alpha2:beta1:beta2:nu1:nu2")
        regime = classify_rate_regime(*(float(v) for v in parts))
        payload["results"]["rate_regime"] = regime.to_json_dict()
    print(f"{report.upper_bound_op:.6g}")
    if args.output:
        _write_json(args.output, payload)
    return EXIT_OK


_COMMANDS = {
    "select": _cmd_select,
    "simulate": _cmd_simulate,
    "law": _cmd_law,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        code = _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"sfpa: parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"sfpa: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as exc:
        print(f"sfpa: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"sfpa: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"sfpa: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"sfpa {args.command}: {time.monotonic() - start:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
