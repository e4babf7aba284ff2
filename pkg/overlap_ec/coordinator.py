# coordinator.py
"""Campaign coordinator for overlap_ec simulations, bound grids and sweeps."""

from __future__ import annotations

import asyncio
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, TextIO

import numpy as np

from .algo import run_lazy, tune_overlap
from .config import parse_f_of_n
from .const import (
    DEFAULT_DRAIN,
    DEFAULT_EPSILON_EXPONENT,
    DEFAULT_F_OF_N,
    DOMAIN,
    LOGGER,
    MU_RELATIVE_TOLERANCE,
    R_UP_TOLERANCE,
    VERSION,
)
from .core import OverlapEcNumericalError, generate_instance, satisfies
from .data import (
    BoundRow,
    OverlapWindow,
    Pair,
    RngSpec,
    RunManifest,
    RunStats,
    TrajectoryCurve,
    TunedPair,
)
from .parse_helper import BOUNDS_HEADER, TRAJECTORY_HEADER
from .trajectory import (
    Schedule,
    closed_form_curve,
    endgame_density_mu,
    make_schedule,
    ode_integrate,
    r_lb_eval,
    stopping_time_t2,
    sup_norm_distance,
)
from .upper import r_up_solve, stationary_domain

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Sequence

    from .data import SweepConfig

_LOGGER = logging.getLogger(__name__)

LOWER_BOUND_K = 3


@dataclass(frozen=True)
class SimulationParams:
    """Parameters of one simulate campaign."""

    n: int
    r: float
    k: int
    runs: int
    seed: int
    schedule: Schedule
    f_of_n: str = DEFAULT_F_OF_N
    drain: str = DEFAULT_DRAIN
    epsilon_exponent: float = DEFAULT_EPSILON_EXPONENT
    record: bool = True
    targets: tuple[float, ...] = ()
    step_log: bool = False

    @property
    def m(self) -> int:
        """Return round(r * n); Python rounds ties to even."""
        return round(self.r * self.n)


@dataclass(frozen=True)
class RunTask:
    """One independent run of a campaign."""

    index: int
    params: SimulationParams

    @property
    def instance_stream(self) -> RngSpec:
        return RngSpec(self.params.seed, 2 * self.index)

    @property
    def run_stream(self) -> RngSpec:
        return RngSpec(self.params.seed, 2 * self.index + 1)


@dataclass(frozen=True)
class RunDigest:
    """What a worker reports back about one run."""

    index: int
    ok: bool
    reason: str | None
    sound: bool
    overlap: float | None
    stats: RunStats
    trajectory: TrajectoryCurve | None
    tuned: tuple[tuple[float, float | None], ...] = ()
    step_log: tuple[dict[str, Any], ...] | None = None


def simulate_run(task: RunTask) -> RunDigest:
    """Generate an instance and run the lazy algorithm on it."""
    params = task.params
    try:
        inst = generate_instance(params.n, params.m, params.k, task.instance_stream)
        result = run_lazy(
            inst,
            params.schedule,
            parse_f_of_n(params.f_of_n),
            task.run_stream,
            record=params.record,
            drain=params.drain,
            step_log=params.step_log,
        )
    except Exception:
        _LOGGER.exception("Run %d of the campaign crashed", task.index)
        return RunDigest(
            index=task.index,
            ok=False,
            reason="error",
            sound=True,
            overlap=None,
            stats=RunStats(),
            trajectory=None,
        )

    if not isinstance(result.outcome, Pair):
        return RunDigest(
            index=task.index,
            ok=False,
            reason=result.outcome.reason,
            sound=True,
            overlap=None,
            stats=result.stats,
            trajectory=result.trajectory,
            step_log=result.step_log,
        )

    pair = result.outcome
    sound = satisfies(pair.a, inst) and satisfies(pair.b, inst)
    if not sound:
        _LOGGER.error("Run %d returned a pair that does not satisfy its instance", task.index)
    tuned = []
    for q in params.targets:
        window = OverlapWindow.for_size(q, params.n, params.epsilon_exponent)
        outcome = tune_overlap(result, window)
        tuned.append((q, outcome.overlap if isinstance(outcome, TunedPair) else None))
    return RunDigest(
        index=task.index,
        ok=True,
        reason=None,
        sound=sound,
        overlap=pair.overlap,
        stats=result.stats,
        trajectory=result.trajectory,
        tuned=tuple(tuned),
        step_log=result.step_log,
    )


def bound_row(k: int, q: float, tol: float = R_UP_TOLERANCE) -> BoundRow:
    """Compute one row of a bound curve; failures are flagged, never dropped."""
    domain = stationary_domain(k, q)
    r_lb = r_lb_eval(q) if k == LOWER_BOUND_K else float("nan")
    try:
        result = r_up_solve(k, q, tol)
    except OverlapEcNumericalError as err:
        _LOGGER.warning("r_up failed for k=%d q=%s: %s", k, q, err)
        status, r_up, residual, alpha = "failed", float("nan"), float("nan"), float("nan")
    else:
        status, r_up, residual, alpha = (
            result.status,
            result.r_value,
            result.residual,
            result.alpha,
        )
        if status == "ok" and not math.isnan(r_lb) and r_up < r_lb:
            _LOGGER.warning("r_up=%s below r_lb=%s at q=%s", r_up, r_lb, q)
            status = "inconsistent"
    return BoundRow(
        q=q,
        q_k=domain.q_k,
        root=domain.root,
        x_max=domain.x_max,
        g_r_up=alpha,
        r_up=r_up,
        residual=residual,
        r_lb=r_lb,
        status=status,
    )


def _bound_row_task(args: tuple[int, float, float]) -> BoundRow:
    return bound_row(*args)


def _stats(values: Sequence[float]) -> dict[str, Any] | None:
    if not values:
        return None
    array = np.asarray(values, dtype=float)
    return {
        "count": int(array.size),
        "mean": float(array.mean()),
        "std": float(array.std()),
        "min": float(array.min()),
        "median": float(np.median(array)),
        "max": float(array.max()),
    }


def _mu_comparison(mu: float, degrees: Sequence[float]) -> dict[str, Any]:
    """Compare the measured endgame degree with the predicted density mu."""
    if not degrees or mu <= 0:
        return {"mu_ratio": None, "mu_within_tolerance": None}
    ratio = float(np.mean(degrees)) / mu
    within = abs(ratio - 1.0) <= MU_RELATIVE_TOLERANCE
    if not within:
        _LOGGER.warning("Mean endgame degree is %.3f times the predicted mu=%.6f", ratio, mu)
    return {"mu_ratio": ratio, "mu_within_tolerance": within}


def reference_curves(r: float, schedule: Schedule) -> dict[str, TrajectoryCurve]:
    """Return the closed-form, paper-ode and recurrence-ode predictions at rate r."""
    return {
        "closed-form": closed_form_curve(r),
        "paper-ode": ode_integrate(r, schedule, "paper-ode"),
        "recurrence-ode": ode_integrate(r, schedule, "recurrence-ode"),
    }


def run_distances(
    curve: TrajectoryCurve, references: dict[str, TrajectoryCurve]
) -> dict[str, float]:
    """Return sup-norm distances of an empirical run to every reference."""
    return {
        "c3_closed_form": sup_norm_distance(curve, references["closed-form"], "c3"),
        "c3_paper_ode": sup_norm_distance(curve, references["paper-ode"], "c3"),
        "c2_recurrence_ode": sup_norm_distance(curve, references["recurrence-ode"], "c2"),
        "c2_closed_form_gap": sup_norm_distance(curve, references["closed-form"], "c2"),
    }


def summarize(
    params: SimulationParams,
    digests: Sequence[RunDigest],
    references: dict[str, TrajectoryCurve] | None,
) -> dict[str, Any]:
    """Reduce run digests to the campaign summary."""
    summary: dict[str, Any] = {
        "tool": DOMAIN,
        "parameters": {
            "n": params.n,
            "m": params.m,
            "r": params.r,
            "k": params.k,
            "runs": params.runs,
            "seed": params.seed,
            "schedule": params.schedule.schedule_id,
            "f_of_n": params.f_of_n,
            "drain": params.drain,
            "epsilon_exponent": params.epsilon_exponent,
        },
        "runs": len(digests),
    }
    if not digests:
        return summary

    successes = [d for d in digests if d.ok]
    failures: dict[str, int] = {}
    for digest in digests:
        if not digest.ok:
            failures[digest.reason] = failures.get(digest.reason, 0) + 1
    r_eff = params.m / params.n
    limit = parse_f_of_n(params.f_of_n)(params.n)
    mu = endgame_density_mu(r_eff).mu if r_eff > 0 else 0.0
    degrees = [d.stats.mean_degree for d in successes]
    summary.update(
        {
            "successes": len(successes),
            "success_fraction": len(successes) / len(digests),
            "failures": dict(sorted(failures.items())),
            "unsound": sum(1 for d in successes if not d.sound),
            "t2_predicted": stopping_time_t2(r_eff) if r_eff > 0 else 0.0,
            "t2_emp": _stats([d.stats.t2_emp for d in digests if d.stats.t2_emp is not None]),
            "raw_overlap": _stats([d.overlap for d in successes]),
            "endgame": {
                "mu_predicted": mu,
                "mean_degree": _stats(degrees),
                **_mu_comparison(mu, degrees),
                "max_component": max((d.stats.max_component for d in successes), default=0),
                "f_of_n": limit,
                "vertices": _stats([d.stats.graph_vertices for d in successes]),
                "edges": _stats([d.stats.graph_edges for d in successes]),
            },
            "schedule_clamped_runs": sum(1 for d in digests if d.stats.schedule_clamped),
        }
    )
    if references is not None:
        distances = [run_distances(d.trajectory, references) for d in digests if d.trajectory]
        summary["distances"] = {}
        if distances:
            summary["distances"] = {
                key: _stats([row[key] for row in distances]) for key in sorted(distances[0])
            }
    if params.targets:
        tuning = {}
        for position, q in enumerate(params.targets):
            landed = [d.tuned[position][1] is not None for d in successes]
            tuning[f"{q:g}"] = sum(landed) / len(landed) if landed else None
        summary["tuning"] = tuning
    return summary


def write_json(path: Path, payload: Any) -> None:
    """Write JSON with sorted keys and '\\n' line endings."""
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def dump_bounds_csv(handle: TextIO, rows: Iterable[BoundRow]) -> None:
    """Write a bound curve with the stable column order to an open handle."""
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(BOUNDS_HEADER)
    for row in rows:
        writer.writerow(
            [
                repr(row.q),
                repr(row.q_k),
                repr(row.root),
                repr(row.x_max),
                repr(row.g_r_up),
                repr(row.r_up),
                repr(row.residual),
                repr(row.r_lb),
                row.status,
            ]
        )


def write_step_log(path: Path, entries: Iterable[dict[str, Any]]) -> None:
    """Write one JSON object per step."""
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for entry in entries:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")


def write_bounds_csv(path: Path, rows: Iterable[BoundRow]) -> None:
    """Write a bound curve to a file."""
    with path.open("w", encoding="utf-8", newline="") as handle:
        dump_bounds_csv(handle, rows)


def write_trajectory_csv(path: Path, curves: Iterable[TrajectoryCurve]) -> None:
    """Write one or more trajectories with the stable column order."""
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for curve in curves:
            for sample in curve.samples:
                writer.writerow(
                    [
                        repr(sample.t),
                        repr(sample.c3),
                        repr(sample.c2),
                        repr(sample.p),
                        repr(sample.n),
                        curve.mode,
                        repr(curve.r),
                        curve.schedule_id,
                    ]
                )


def manifest_path(output: Path) -> Path:
    """Return where the manifest of an output file or directory lives."""
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output: Path, manifest: RunManifest) -> Path:
    """Write the manifest next to (or inside) an output."""
    path = manifest_path(output)
    write_json(path, asdict(manifest))
    LOGGER.info("Wrote manifest %s", path)
    return path


def point_seed(seed: int, index: int) -> int:
    """Derive the master seed of one sweep point."""
    sequence = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class CampaignCoordinator:
    """Class to fan independent tasks out to worker processes."""

    def __init__(self, threads: int = 1) -> None:
        """Initialize the coordinator."""
        self.threads = max(1, threads)

    async def async_map(self, func: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
        """Apply func to every item, in parallel when threads > 1; order is preserved."""
        if self.threads == 1 or len(items) <= 1:
            return [func(item) for item in items]
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.threads) as executor:
            futures = [loop.run_in_executor(executor, func, item) for item in items]
            return list(await asyncio.gather(*futures))

    async def async_simulate(
        self, params: SimulationParams
    ) -> tuple[dict[str, Any], list[RunDigest], dict[str, TrajectoryCurve] | None]:
        """Run a simulate campaign and summarize it."""
        LOGGER.info(
            "Simulating %d runs at n=%d r=%s k=%d seed=%d",
            params.runs,
            params.n,
            params.r,
            params.k,
            params.seed,
        )
        tasks = [RunTask(index=i, params=params) for i in range(params.runs)]
        digests = await self.async_map(simulate_run, tasks)
        references = None
        if params.record and params.k == LOWER_BOUND_K and params.m > 0:
            references = reference_curves(params.m / params.n, params.schedule)
        summary = summarize(params, digests, references)
        LOGGER.info(
            "Campaign finished: %d of %d runs returned a pair",
            summary.get("successes", 0),
            len(digests),
        )
        return summary, digests, references

    async def async_bounds(
        self, k: int, q_grid: Sequence[float], tol: float = R_UP_TOLERANCE
    ) -> list[BoundRow]:
        """Compute a bound curve over a q grid."""
        return await self.async_map(_bound_row_task, [(k, q, tol) for q in q_grid])

    def simulate(
        self, params: SimulationParams
    ) -> tuple[dict[str, Any], list[RunDigest], dict[str, TrajectoryCurve] | None]:
        """Run a simulate campaign from synchronous code."""
        return asyncio.run(self.async_simulate(params))

    def bounds(
        self, k: int, q_grid: Sequence[float], tol: float = R_UP_TOLERANCE
    ) -> list[BoundRow]:
        """Compute a bound curve from synchronous code."""
        return asyncio.run(self.async_bounds(k, q_grid, tol))

    def sweep(self, config: SweepConfig, command_line: Sequence[str]) -> list[Path]:
        """Run every point of a sweep and write its outputs with manifests."""
        out_dir = Path(config.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        if config.q:
            for k in config.k:
                started = time.monotonic()
                rows = self.bounds(k, config.q, config.tolerance)
                path = out_dir / f"bounds_k{k}.csv"
                write_bounds_csv(path, rows)
                written.append(path)
                write_manifest(
                    path,
                    build_manifest(
                        command_line, config.seed, None, time.monotonic() - started, (), (path,)
                    ),
                )

        points = [(k, n, r) for k in config.k for n in config.n for r in config.r]
        for index, (k, n, r) in enumerate(points):
            started = time.monotonic()
            params = SimulationParams(
                n=n,
                r=r,
                k=k,
                runs=config.runs_per_point,
                seed=point_seed(config.seed, index),
                schedule=make_schedule(config.schedule, epsilon=config.schedule_epsilon, r=r),
                f_of_n=config.f_of_n,
                drain=config.drain,
                epsilon_exponent=config.epsilon_exponent,
            )
            summary, _, references = self.simulate(params)
            path = out_dir / f"simulate_k{k}_n{n}_r{r:g}.json"
            write_json(path, summary)
            outputs = [path]
            if references:
                ref_path = out_dir / f"reference_k{k}_n{n}_r{r:g}.csv"
                write_trajectory_csv(ref_path, references.values())
                outputs.append(ref_path)
            written.extend(outputs)
            write_manifest(
                path,
                build_manifest(
                    command_line,
                    params.seed,
                    None,
                    time.monotonic() - started,
                    derived_streams(params),
                    outputs,
                ),
            )
        return written


def derived_streams(params: SimulationParams) -> tuple[tuple[int, int], ...]:
    """Return the (seed, stream) pairs used by every run of a campaign."""
    streams = []
    for index in range(params.runs):
        task = RunTask(index=index, params=params)
        streams.append((task.instance_stream.seed, task.instance_stream.stream_id))
        streams.append((task.run_stream.seed, task.run_stream.stream_id))
    return tuple(streams)


def build_manifest(  # noqa: PLR0913
    command_line: Sequence[str],
    seed: int,
    digest: str | None,
    wall_time: float,
    derived: tuple[tuple[int, int], ...] = (),
    outputs: Sequence[Path] = (),
) -> RunManifest:
    """Return the manifest of one invocation."""
    return RunManifest(
        tool_version=VERSION,
        command_line=tuple(command_line),
        master_seed=seed,
        instance_digest=digest,
        wall_time=wall_time,
        derived_seeds=derived,
        outputs=tuple(str(p) for p in outputs),
    )
