"""
Command-line interface for overlap_ec.

Usage:
    python -m overlap_ec gen -n 100 -m 10 -k 3 --seed 7 --out inst.txt
    python -m overlap_ec bounds --k 3 --q-grid 0.05:0.95:0.05 --out bounds.csv
    python -m overlap_ec simulate -n 100000 --r 0.1 --runs 100 --out runs/
    python -m overlap_ec oracle --instance inst.txt --q 1/3 --l 1
    python -m overlap_ec sweep config/sweep.yaml
    python -m overlap_ec replay bounds.csv.manifest.json
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import TYPE_CHECKING, Any

import colorlog

from .config import (
    GEN_SCHEMA,
    SIMULATE_SCHEMA,
    apply_logger_config,
    load_sweep_config,
    parse_f_of_n,
    parse_grid,
    parse_lambdas,
    validate,
)
from .const import (
    DEFAULT_DRAIN,
    DEFAULT_EPSILON_EXPONENT,
    DEFAULT_F_OF_N,
    DEFAULT_LOG_LEVEL,
    DEFAULT_Q_GRID,
    DEFAULT_SCHEDULE,
    DEFAULT_SCHEDULE_EPSILON,
    DEFAULT_SEED,
    DEFAULT_THREADS,
    DRAIN_MODES,
    EXIT_INVALID_PARAMETERS,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_REPLAY_MISMATCH,
    EXIT_RESOURCE_LIMIT,
    LOG_FORMAT,
    LOGGER,
    R_UP_TOLERANCE,
    SCHEDULE_KINDS,
    VERSION,
)
from .coordinator import (
    CampaignCoordinator,
    SimulationParams,
    build_manifest,
    derived_streams,
    dump_bounds_csv,
    write_bounds_csv,
    write_json,
    write_manifest,
    write_step_log,
    write_trajectory_csv,
)
from .core import (
    MAX_SEED,
    MIN_K,
    OverlapEcError,
    OverlapEcInvalidParametersError,
    OverlapEcNumericalError,
    OverlapEcResourceLimitError,
    generate_instance,
    hypergraph_components,
    make_window,
)
from .data import RngSpec
from .oracle import (
    cluster_decomposition,
    count_overlap_pairs,
    enumerate_solutions,
    expected_Z,
    overlap_distribution,
    overlap_support,
)
from .parse_helper import (
    format_instance,
    format_rational,
    instance_digest,
    parse_rational,
    read_instance,
    write_instance,
)
from .trajectory import make_schedule

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .data import EcInstance, TrajectoryCurve
    from .trajectory import Schedule


def setup_logging(level: str = DEFAULT_LOG_LEVEL) -> None:
    """Install a colored stream handler on the root logger."""
    handler = logging.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(LOG_FORMAT))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Master seed (default: 0)")
    common.add_argument(
        "--threads", type=int, default=DEFAULT_THREADS, help="Worker processes (default: 1)"
    )
    common.add_argument(
        "--epsilon-exponent",
        type=float,
        default=DEFAULT_EPSILON_EXPONENT,
        help="Window half-width is n ** exponent / n (default: 0.75)",
    )
    common.add_argument(
        "--f-of-n",
        default=DEFAULT_F_OF_N,
        help="Endgame component limit: ln2, ln, sqrt or c*kind (default: ln2)",
    )
    common.add_argument(
        "--log-level",
        choices=("critical", "error", "warning", "info", "debug"),
        default=DEFAULT_LOG_LEVEL,
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with every subcommand."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="overlap_ec",
        description="Bounds, simulations and oracles for q-overlap Exact Cover",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Generate a random instance")
    gen.add_argument("-n", type=int, required=True)
    gen.add_argument("-m", type=int, required=True)
    gen.add_argument("-k", type=int, default=MIN_K)
    gen.add_argument("--out", type=Path, help="Output file (default: stdout)")
    gen.set_defaults(func=cmd_gen)

    bounds = sub.add_parser(
        "bounds", parents=[common, output], help="Compute r_lb and r_up over q"
    )
    bounds.add_argument("-k", "--k", type=int, default=MIN_K)
    bounds.add_argument("--q-grid", default=DEFAULT_Q_GRID, help="start:stop:step or a,b,c")
    bounds.add_argument("--tol", type=float, default=R_UP_TOLERANCE)
    bounds.add_argument("--out", type=Path, help="Output file (default: stdout)")
    bounds.set_defaults(func=cmd_bounds)

    simulate = sub.add_parser(
        "simulate", parents=[common, output], help="Run the lazy algorithm"
    )
    simulate.add_argument("-n", type=int, required=True)
    simulate.add_argument("--r", type=float, required=True)
    simulate.add_argument("-k", type=int, default=MIN_K)
    simulate.add_argument("--runs", type=int, default=1)
    simulate.add_argument("--schedule", choices=SCHEDULE_KINDS, default=DEFAULT_SCHEDULE)
    simulate.add_argument("--schedule-epsilon", type=float, default=DEFAULT_SCHEDULE_EPSILON)
    simulate.add_argument("--lambdas", help="Constant schedule, e.g. 0.4,0.3,0.3")
    simulate.add_argument("--drain", choices=DRAIN_MODES, default=DEFAULT_DRAIN)
    simulate.add_argument("--targets", default="", help="Overlaps to tune for, e.g. 0.3,0.5")
    simulate.add_argument(
        "--no-trajectories", action="store_true", help="Skip trajectory recording"
    )
    simulate.add_argument(
        "--step-log", action="store_true", help="Write a JSON-lines log of every step"
    )
    simulate.add_argument("--out", type=Path, help="Output directory (default: summary on stdout)")
    simulate.set_defaults(func=cmd_simulate)

    oracle = sub.add_parser("oracle", parents=[common], help="Exhaustive small-instance study")
    oracle.add_argument("--instance", type=Path, help="Instance file")
    oracle.add_argument("-n", type=int)
    oracle.add_argument("-m", type=int)
    oracle.add_argument("-k", type=int, default=MIN_K)
    oracle.add_argument("--q", required=True, help="Overlap target, e.g. 1/3 or 0.5")
    oracle.add_argument("--epsilon-n", type=float, help="Window half-width times n")
    oracle.add_argument("--l", type=int, default=1, help="Cluster radius (default: 1)")
    oracle.add_argument("--expected-z", action="store_true", help="Also compute ln E[Z]")
    oracle.add_argument("--out", type=Path, help="Output file (default: stdout)")
    oracle.set_defaults(func=cmd_oracle)

    sweep = sub.add_parser("sweep", parents=[common], help="Run a YAML parameter sweep")
    sweep.add_argument("config", type=Path)
    sweep.set_defaults(func=cmd_sweep)

    replay = sub.add_parser("replay", parents=[common], help="Re-run a manifest")
    replay.add_argument("manifest", type=Path)
    replay.set_defaults(func=cmd_replay)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with out.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def cmd_gen(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Generate one instance from stream (seed, 0)."""
    validate(GEN_SCHEMA, {"n": args.n, "m": args.m, "k": args.k})
    parse_f_of_n(args.f_of_n)
    started = time.monotonic()
    rng = RngSpec(args.seed, 0)
    inst = generate_instance(args.n, args.m, args.k, rng)
    if args.out is None:
        _emit(format_instance(inst), None)
        return EXIT_OK
    write_instance(args.out, inst)
    write_manifest(
        args.out,
        build_manifest(
            argv,
            args.seed,
            instance_digest(inst),
            time.monotonic() - started,
            ((rng.seed, rng.stream_id),),
            (args.out,),
        ),
    )
    LOGGER.info("Wrote instance n=%d m=%d k=%d to %s", inst.n, inst.m, inst.k, args.out)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Tabulate r_lb and r_up over a q grid."""
    if args.k < MIN_K:
        msg = f"Clause width must be at least {MIN_K}, got k={args.k}"
        raise OverlapEcInvalidParametersError(msg)
    q_grid = parse_grid(args.q_grid)
    started = time.monotonic()
    rows = CampaignCoordinator(args.threads).bounds(args.k, q_grid, args.tol)
    failed = [row.q for row in rows if row.status != "ok"]
    if failed:
        LOGGER.warning("%d grid points were flagged: %s", len(failed), failed)
    if args.format == "json":
        payload = [asdict(row) for row in rows]
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    elif args.out is None:
        dump_bounds_csv(sys.stdout, rows)
    else:
        write_bounds_csv(args.out, rows)
    if args.out is not None:
        write_manifest(
            args.out,
            build_manifest(argv, args.seed, None, time.monotonic() - started, (), (args.out,)),
        )
    return EXIT_OK


def _schedule(args: argparse.Namespace) -> Schedule:
    lambdas = parse_lambdas(args.lambdas) if args.lambdas else None
    if args.schedule == "constant" and lambdas is None:
        msg = "A constant schedule needs --lambdas"
        raise OverlapEcInvalidParametersError(msg)
    return make_schedule(args.schedule, epsilon=args.schedule_epsilon, r=args.r, lambdas=lambdas)


def _write_curves(path: Path, curves: Sequence[TrajectoryCurve], fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        write_json(path, [asdict(curve) for curve in curves])
    else:
        path = path.with_suffix(".csv")
        write_trajectory_csv(path, curves)
    return path


def cmd_simulate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Run independent lazy runs and summarize them."""
    validate(
        SIMULATE_SCHEMA,
        {
            "n": args.n,
            "r": args.r,
            "k": args.k,
            "runs": args.runs,
            "schedule": args.schedule,
            "schedule_epsilon": args.schedule_epsilon,
        },
    )
    parse_f_of_n(args.f_of_n)
    params = SimulationParams(
        n=args.n,
        r=args.r,
        k=args.k,
        runs=args.runs,
        seed=args.seed,
        schedule=_schedule(args),
        f_of_n=args.f_of_n,
        drain=args.drain,
        epsilon_exponent=args.epsilon_exponent,
        record=not args.no_trajectories,
        targets=parse_grid(args.targets) if args.targets else (),
        step_log=args.step_log and args.out is not None,
    )
    started = time.monotonic()
    summary, digests, references = CampaignCoordinator(args.threads).simulate(params)
    if args.out is None:
        _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", None)
        return EXIT_OK

    args.out.mkdir(parents=True, exist_ok=True)
    summary_path = args.out / "summary.json"
    write_json(summary_path, summary)
    outputs = [summary_path]
    if references:
        outputs.append(
            _write_curves(args.out / "reference", list(references.values()), args.format)
        )
    for digest in digests:
        if digest.trajectory is not None:
            outputs.append(
                _write_curves(
                    args.out / f"trajectory_run{digest.index:04d}",
                    [digest.trajectory],
                    args.format,
                )
            )
        if digest.step_log is not None:
            log_path = args.out / f"steps_run{digest.index:04d}.jsonl"
            write_step_log(log_path, digest.step_log)
            outputs.append(log_path)
    write_manifest(
        args.out,
        build_manifest(
            argv,
            args.seed,
            None,
            time.monotonic() - started,
            derived_streams(params),
            outputs,
        ),
    )
    LOGGER.info("Wrote %d files to %s", len(outputs), args.out)
    return EXIT_OK


def _oracle_instance(args: argparse.Namespace) -> EcInstance:
    if args.instance is not None:
        return read_instance(args.instance)
    if args.n is None or args.m is None:
        msg = "oracle needs --instance or both -n and -m"
        raise OverlapEcInvalidParametersError(msg)
    validate(GEN_SCHEMA, {"n": args.n, "m": args.m, "k": args.k})
    return generate_instance(args.n, args.m, args.k, RngSpec(args.seed, 0))


def oracle_report(
    inst: EcInstance,
    q: str,
    radius: int,
    epsilon_n: float | None = None,
    epsilon_exponent: float = DEFAULT_EPSILON_EXPONENT,
    with_expected_z: bool = False,  # noqa: FBT001, FBT002
) -> dict[str, Any]:
    """Return the exhaustive study of one small instance."""
    target = parse_rational(q)
    window = make_window(float(target), inst.n, epsilon_n, epsilon_exponent)
    solutions = enumerate_solutions(inst)
    clusters = cluster_decomposition(solutions, radius)
    lo, hi = window.bounds(inst.n)
    report: dict[str, Any] = {
        "instance_digest": instance_digest(inst),
        "n": inst.n,
        "m": inst.m,
        "k": inst.k,
        "solutions": len(solutions),
        "window": {
            "q": format_rational(target),
            "epsilon_n": window.epsilon_n,
            "lo": lo,
            "hi": hi,
        },
        "Z": count_overlap_pairs(inst, window),
        "Z_with_equal": count_overlap_pairs(inst, window, include_equal=True),
        "overlap_distribution": {
            str(distance): count for distance, count in overlap_distribution(inst).items()
        },
        "overlap_support": [format_rational(v) for v in sorted(overlap_support(inst))],
        "clusters": {
            "l": clusters.l,
            "count": len(clusters.components),
            "sizes": clusters.sizes,
            "diameters": list(clusters.diameters or ()),
        },
        "hypergraph_components": [len(c) for c in hypergraph_components(inst)],
    }
    if with_expected_z:
        report["ln_expected_Z"] = expected_Z(inst.n, inst.m, inst.k, window)
    return report


def cmd_oracle(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Study a small instance exhaustively."""
    started = time.monotonic()
    inst = _oracle_instance(args)
    report = oracle_report(
        inst, args.q, args.l, args.epsilon_n, args.epsilon_exponent, args.expected_z
    )
    if args.out is None:
        _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", None)
        return EXIT_OK
    write_json(args.out, report)
    derived = () if args.instance is not None else ((args.seed, 0),)
    write_manifest(
        args.out,
        build_manifest(
            argv,
            args.seed,
            report["instance_digest"],
            time.monotonic() - started,
            derived,
            (args.out,),
        ),
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """Run every grid point of a YAML sweep file."""
    config = load_sweep_config(args.config)
    apply_logger_config(config.logger)
    written = CampaignCoordinator(config.threads).sweep(config, argv)
    LOGGER.info("Sweep wrote %d files under %s", len(written), config.output)
    return EXIT_OK


def _file_digest(path: Path) -> str | None:
    if not path.is_file():
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_replay(args: argparse.Namespace, argv: Sequence[str]) -> int:  # noqa: ARG001
    """Re-run the command of a manifest and compare every data file byte for byte."""
    manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    command_line = list(manifest["command_line"])
    if command_line and command_line[0] == "replay":
        msg = "A replay manifest cannot be replayed"
        raise OverlapEcInvalidParametersError(msg)
    outputs = [Path(p) for p in manifest.get("outputs", [])]
    before = {str(p): _file_digest(p) for p in outputs}
    status = main(command_line)
    if status != EXIT_OK:
        return status
    report = {
        path: digest is not None and digest == _file_digest(Path(path))
        for path, digest in before.items()
    }
    _emit(json.dumps({"identical": report}, indent=2, sort_keys=True) + "\n", None)
    if all(report.values()):
        LOGGER.info("Replay reproduced %d files", len(report))
        return EXIT_OK
    LOGGER.error("Replay differs for %s", [p for p, same in report.items() if not same])
    return EXIT_REPLAY_MISMATCH


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        if not 0 <= args.seed <= MAX_SEED:
            msg = f"Seed must be a 64-bit unsigned integer, got {args.seed}"
            raise OverlapEcInvalidParametersError(msg)
        if args.threads < 1:
            msg = f"Thread count must be positive, got {args.threads}"
            raise OverlapEcInvalidParametersError(msg)
        return args.func(args, argv)
    except OverlapEcResourceLimitError as err:
        LOGGER.error("Resource limit: %s", err)  # noqa: TRY400
        return EXIT_RESOURCE_LIMIT
    except OverlapEcNumericalError as err:
        LOGGER.error("Numerical failure: %s", err)  # noqa: TRY400
        return EXIT_NUMERICAL
    except OverlapEcInvalidParametersError as err:
        LOGGER.error("Invalid parameters: %s", err)  # noqa: TRY400
        return EXIT_INVALID_PARAMETERS
    except OverlapEcError as err:
        LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_INVALID_PARAMETERS
    except OSError as err:
        LOGGER.error("I/O error: %s", err)  # noqa: TRY400
        return EXIT_IO
