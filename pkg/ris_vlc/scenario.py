"""Experiment orchestration, Monte-Carlo trials, grid oracle and CSV output."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
import time
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import OptimizeResult

from .config import ScenarioConfig
from .const import (
    CSV_SIGNIFICANT_DIGITS,
    DIM_ETA_C,
    DIM_ROLL,
    DIM_YAW,
    KIND_CONVERGENCE_TRACE,
    KIND_EE_VS_K,
    KIND_LC_LOS_BASELINE,
    KIND_NOMA_MULTIUSER,
    KIND_ORACLE_GRID,
    KIND_RATE_VS_K,
    KIND_RIS_ONLY_BASELINE,
    KIND_WALL_BASELINE,
    KIND_WAVELENGTH_SWEEP,
    LOS_ALWAYS,
    WAVELENGTH_NOTE,
)
from .errors import RisVlcError
from .objectives import (
    EnergyEfficiencyObjective,
    Objective,
    PowerModel,
    RateObjective,
    SumRateObjective,
    WallRateObjective,
    total_power,
)
from .optimizer import SineCosineOptimizer, grid_search
from .system_model import Scene, sample_blockers, sample_orientation

_LOGGER: logging.Logger = logging.getLogger(__package__)

ANGLE_DIMS = (DIM_ROLL, DIM_YAW)


@dataclass
class ResultRow:
    """Aggregate of all trials at one sweep point."""

    variable: str
    value: Optional[float]
    kind: str
    trials: int
    failed_trials: int
    mean: float
    min: float
    max: float
    best: dict[str, float] = field(default_factory=dict)
    los_blocked_fraction: float = math.nan
    evaluations_per_trial: int = 0
    total_power_w: Optional[float] = None
    note: str = ""
    elapsed_ms: float = 0.0


@dataclass(frozen=True)
class TraceRow:
    sweep_index: int
    trial: int
    iteration: int
    best_fitness: float


SCENE_STREAM = 0
SEARCH_STREAM = 1


def trial_rng(
    seed: int, trial: int, stream: int = SCENE_STREAM
) -> np.random.Generator:
    """Stream of one trial, shared by every sweep point.

    Scene sampling and the search draw from different ``stream`` keys, so the
    two stay independent even when they are given the same seed.
    """
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(stream, trial))
    )


def sample_scene(cfg: ScenarioConfig, rng: np.random.Generator) -> Scene:
    """Draw device orientations, then random blockers, for one trial."""
    scene = cfg.scene
    mc = cfg.monte_carlo
    if mc.sample_orientation:
        users = []
        for user in scene.users:
            azimuth, polar = sample_orientation(rng)
            users.append(user.with_orientation(azimuth, polar))
        scene = scene.with_users(users)
    if mc.random_blockers:
        extra = sample_blockers(rng, mc.random_blockers, scene.room)
        scene = scene.with_blockers(list(scene.blockers) + extra)
    return scene


def build_objective(cfg: ScenarioConfig, scene: Scene) -> Objective:
    """The fitness of the configured scenario kind on ``scene``."""
    kind = cfg.kind
    params = cfg.params
    if kind == KIND_WALL_BASELINE:
        return WallRateObjective(scene, params, los_mode=cfg.los_mode)
    if kind == KIND_RIS_ONLY_BASELINE:
        return RateObjective(scene, params, los_mode=cfg.los_mode, use_lc=False)
    if kind == KIND_LC_LOS_BASELINE:
        array = scene.mirror_array.with_elements(0, cfg.grow)
        return RateObjective(
            scene.with_mirror_array(array), params, los_mode=LOS_ALWAYS
        )
    if kind == KIND_NOMA_MULTIUSER:
        return SumRateObjective(scene, params, noma=cfg.noma, los_mode=cfg.los_mode)
    rate = RateObjective(scene, params, los_mode=cfg.los_mode)
    if kind == KIND_EE_VS_K:
        return EnergyEfficiencyObjective(rate)
    return rate


def _los_blocked(objective: Objective, position: np.ndarray) -> list[bool]:
    if isinstance(objective, EnergyEfficiencyObjective):
        objective = objective.rate
    if isinstance(objective, SumRateObjective):
        gains = objective.channels(position)
    else:
        gains = [objective.channel(position)]
    return [g.indicator == 0 for g in gains]


def describe_position(objective: Objective, position: np.ndarray) -> dict[str, float]:
    """Best coordinates keyed for output, with angles in degrees."""
    best = objective.describe(position)
    return {
        (f"{name}_deg" if name in ANGLE_DIMS else name): (
            math.degrees(value) if name in ANGLE_DIMS else value
        )
        for name, value in best.items()
    }


def _power(cfg: ScenarioConfig) -> Optional[float]:
    if cfg.kind not in (KIND_EE_VS_K, KIND_RATE_VS_K):
        return None
    model = PowerModel.from_params(cfg.params, cfg.scene.mirror_array.num_elements)
    return total_power(model)


def _solve(
    cfg: ScenarioConfig, objective: Objective, rng: np.random.Generator
) -> tuple[np.ndarray, float, list[float], int]:
    if cfg.kind == KIND_ORACLE_GRID:
        result = oracle_grid_search(cfg, cfg.resolution(objective.space.names), objective)
        return result.x, result.fun, [result.fun], result.nfev
    opt = cfg.optimizer
    optimizer = SineCosineOptimizer(opt.agents, opt.iterations, opt.a)
    result = optimizer.optimize(objective.space, objective, rng)
    return result.best_position, result.best_fitness, result.trace, result.evaluations


def _aggregate(values: list[float]) -> tuple[float, float, float]:
    if not values:
        return math.nan, math.nan, math.nan
    low, high = min(values), max(values)
    mean = min(max(float(np.mean(values)), low), high)
    return mean, low, high


def run_scenario(
    cfg: ScenarioConfig, traces: Optional[list[TraceRow]] = None
) -> list[ResultRow]:
    """Run every sweep point and trial of ``cfg``.

    Trial ``i`` draws its scene and seeds its search from streams keyed by
    (seed, i) alone, so every sweep point is evaluated on the same scenes with
    the same search randomness. Failed trials are counted, not dropped.
    Per-iteration traces are appended to ``traces``.
    """
    _LOGGER.info(
        "Running %s: %s sweep points x %s trials",
        cfg.kind,
        len(cfg.sweep_points()),
        cfg.monte_carlo.trials,
    )
    variable = cfg.sweep.variable if cfg.sweep else ""
    rows = []
    all_traces = []
    for index, value in enumerate(cfg.sweep_points()):
        started = time.perf_counter()
        point = cfg.at(value)
        fitness, blocked, failed, evaluations = [], [], 0, 0
        best_fitness, best = -math.inf, {}
        for trial in range(cfg.monte_carlo.trials):
            scene_rng = trial_rng(cfg.monte_carlo.seed, trial)
            opt_rng = trial_rng(cfg.optimizer.seed, trial, SEARCH_STREAM)
            try:
                scene = sample_scene(point, scene_rng)
                objective = build_objective(point, scene)
                position, value_found, trace, evaluations = _solve(
                    point, objective, opt_rng
                )
                if not math.isfinite(value_found):
                    raise RisVlcError("no feasible point was found")
                blocked.extend(_los_blocked(objective, position))
            except RisVlcError as ex:
                failed += 1
                _LOGGER.warning(
                    "Trial %s of sweep point %s failed: %s", trial, value, ex
                )
                continue
            fitness.append(value_found)
            all_traces.append((index, trial, trace))
            if traces is not None:
                traces.extend(
                    TraceRow(index, trial, t, f) for t, f in enumerate(trace)
                )
            if value_found > best_fitness:
                best_fitness, best = value_found, describe_position(objective, position)

        mean, low, high = _aggregate(fitness)
        rows.append(
            ResultRow(
                variable=variable,
                value=value,
                kind=cfg.kind,
                trials=cfg.monte_carlo.trials,
                failed_trials=failed,
                mean=mean,
                min=low,
                max=high,
                best=best,
                los_blocked_fraction=(
                    sum(blocked) / len(blocked) if blocked else math.nan
                ),
                evaluations_per_trial=evaluations,
                total_power_w=_power(point),
                note=WAVELENGTH_NOTE if cfg.kind == KIND_WAVELENGTH_SWEEP else "",
                elapsed_ms=(time.perf_counter() - started) * 1e3,
            )
        )
        _LOGGER.info("Sweep point %s = %s done: mean %s", variable, value, mean)

    if cfg.kind == KIND_CONVERGENCE_TRACE:
        return convergence_rows(cfg, all_traces)
    return rows


def convergence_rows(
    cfg: ScenarioConfig, traces: Sequence[tuple[int, int, list[float]]]
) -> list[ResultRow]:
    """One row per iteration with the best fitness statistics across trials."""
    if not traces:
        return []
    series = np.array([trace for _, _, trace in traces])
    rows = []
    for t, column in enumerate(series.T):
        mean, low, high = _aggregate([float(v) for v in column])
        rows.append(
            ResultRow(
                variable="iteration",
                value=float(t),
                kind=cfg.kind,
                trials=cfg.monte_carlo.trials,
                failed_trials=cfg.monte_carlo.trials - len(traces),
                mean=mean,
                min=low,
                max=high,
                evaluations_per_trial=cfg.optimizer.agents * (t + 1),
            )
        )
    return rows


def iterations_to_reach(trace: Sequence[float], fraction: float = 0.99) -> int:
    """First iteration whose best fitness reaches ``fraction`` of the final one."""
    target = fraction * trace[-1]
    for t, value in enumerate(trace):
        if value >= target:
            return t
    return len(trace) - 1


def oracle_grid_search(
    cfg: ScenarioConfig,
    resolution: Optional[Sequence[int]] = None,
    objective: Optional[Objective] = None,
) -> OptimizeResult:
    """Exhaustive grid over the search box of the configured objective.

    Without an explicit objective, the configured scene is used as is, with no
    Monte-Carlo sampling.
    """
    if objective is None:
        objective = build_objective(cfg, cfg.scene)
    if resolution is None:
        resolution = cfg.resolution(objective.space.names)
    return grid_search(objective.space, objective, resolution)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(value)
    return format(float(value), f".{CSV_SIGNIFICANT_DIGITS}g")


def csv_columns(rows: Sequence[ResultRow], timing: bool = False) -> list[str]:
    best = [f"best_{DIM_ROLL}_deg", f"best_{DIM_YAW}_deg", f"best_{DIM_ETA_C}"]
    for row in rows:
        for name in row.best:
            column = f"best_{name}"
            if column not in best:
                best.append(column)
    columns = ["variable", "value", "kind", "trials", "failed_trials", "mean", "min", "max"]
    columns += best
    columns += [
        "los_blocked_fraction",
        "evaluations_per_trial",
        "total_power_w",
        "note",
    ]
    if timing:
        columns.append("elapsed_ms")
    return columns


def emit_csv(
    rows: Sequence[ResultRow], path: Union[str, Path], timing: bool = False
):
    """Write rows with a header, 9 significant digits and LF line endings."""
    path = Path(path)
    columns = csv_columns(rows, timing)
    try:
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                record = {
                    "variable": row.variable,
                    "value": _fmt(row.value),
                    "kind": row.kind,
                    "trials": _fmt(row.trials),
                    "failed_trials": _fmt(row.failed_trials),
                    "mean": _fmt(row.mean),
                    "min": _fmt(row.min),
                    "max": _fmt(row.max),
                    "los_blocked_fraction": _fmt(row.los_blocked_fraction),
                    "evaluations_per_trial": _fmt(row.evaluations_per_trial),
                    "total_power_w": _fmt(row.total_power_w),
                    "note": row.note,
                    "elapsed_ms": _fmt(row.elapsed_ms),
                }
                record.update(
                    {f"best_{name}": _fmt(value) for name, value in row.best.items()}
                )
                writer.writerow([record.get(column, "") for column in columns])
    except OSError as ex:
        raise OSError(ex.errno, f"Cannot write results: {ex.strerror}", str(path)) from ex
    _LOGGER.info("Wrote %s rows to %s", len(rows), path)


def emit_trace_csv(traces: Sequence[TraceRow], path: Union[str, Path]):
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["sweep_index", "trial", "iteration", "best_fitness"])
            for row in traces:
                writer.writerow(
                    [row.sweep_index, row.trial, row.iteration, _fmt(row.best_fitness)]
                )
    except OSError as ex:
        raise OSError(ex.errno, f"Cannot write trace: {ex.strerror}", str(path)) from ex
