"""Test experiment orchestration and CSV output."""
import csv
import math
from unittest.mock import patch

import numpy as np
import pytest

from ris_vlc.config import validate_config
from ris_vlc.const import LOS_ALWAYS, WAVELENGTH_NOTE
from ris_vlc.errors import GeometryError
from ris_vlc.objectives import (
    EnergyEfficiencyObjective,
    RateObjective,
    SumRateObjective,
    WallRateObjective,
)
from ris_vlc.scenario import (
    SEARCH_STREAM,
    ResultRow,
    build_objective,
    csv_columns,
    describe_position,
    emit_csv,
    emit_trace_csv,
    iterations_to_reach,
    oracle_grid_search,
    run_scenario,
    sample_scene,
    trial_rng,
)

from .const import MOCK_CONFIG

FIXED_SCENE = {"sample_orientation": False, "random_blockers": 0}


def _read(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def test_trial_streams():
    """Streams repeat per (seed, trial, stream) and differ otherwise."""
    assert trial_rng(0, 2).random() == trial_rng(0, 2).random()
    assert trial_rng(0, 2).random() != trial_rng(0, 3).random()
    assert trial_rng(0, 2).random() != trial_rng(1, 2).random()
    assert trial_rng(0, 2).random() != trial_rng(0, 2, SEARCH_STREAM).random()


def test_sample_scene():
    """Trials redraw orientations and add random blockers."""
    cfg = validate_config({"monte_carlo": {"random_blockers": 2}})
    first = sample_scene(cfg, trial_rng(0, 0))
    again = sample_scene(cfg, trial_rng(0, 0))
    assert first == again
    assert len(first.blockers) == 2
    assert first.user.polar != cfg.scene.user.polar
    fixed = validate_config({"monte_carlo": FIXED_SCENE})
    assert sample_scene(fixed, trial_rng(0, 0)) == fixed.scene


def test_sweep_points_share_trial_scenes():
    """Trial i sees the same orientation and blockers at every sweep point."""
    seen = []

    def _record(cfg, rng):
        scene = sample_scene(cfg, rng)
        seen.append(scene)
        return scene

    with patch("ris_vlc.scenario.sample_scene", side_effect=_record):
        run_scenario(validate_config(MOCK_CONFIG))
    assert len(seen) == 4
    assert seen[:2] == seen[2:]
    assert seen[0] != seen[1]


def test_power_sweep_mean_is_monotone():
    """Random scenes still give a mean rate that never drops as power grows."""
    cfg = validate_config(
        {
            # LoS availability then depends on geometry only, not on the power.
            "params": {"sensitivity_dbm": -200.0},
            "sweep": {"variable": "optical_power", "start": 1, "stop": 8, "steps": 8},
            "monte_carlo": {"trials": 4, "seed": 11, "random_blockers": 3},
            "optimizer": {"agents": 2, "iterations": 30, "seed": 11},
        }
    )
    means = [row.mean for row in run_scenario(cfg)]
    assert len(means) == 8
    assert all(b >= a for a, b in zip(means, means[1:]))


@pytest.mark.parametrize(
    "kind, cls, names",
    [
        ("rate_p0", RateObjective, ["roll", "yaw", "eta_c"]),
        ("rate_vs_k", RateObjective, ["roll", "yaw", "eta_c"]),
        ("ris_only_baseline", RateObjective, ["roll", "yaw"]),
        ("lc_los_baseline", RateObjective, ["eta_c"]),
        ("wall_baseline", WallRateObjective, ["eta_c"]),
        ("ee_vs_k", EnergyEfficiencyObjective, ["roll", "yaw", "eta_c"]),
        ("noma_multiuser", SumRateObjective, ["roll", "yaw", "eta_c_1"]),
    ],
)
def test_build_objective(kind, cls, names):
    """Each scenario kind optimises its own objective and variables."""
    cfg = validate_config({"kind": kind})
    objective = build_objective(cfg, cfg.scene)
    assert isinstance(objective, cls)
    assert objective.space.names == names


def test_lc_los_baseline_has_no_mirrors():
    """The LC-only baseline drops the array and always keeps LoS."""
    cfg = validate_config({"kind": "lc_los_baseline"})
    objective = build_objective(cfg, cfg.scene)
    assert objective.scene.mirror_array.num_elements == 0
    assert objective.los_mode == LOS_ALWAYS


def test_run_mock_scenario():
    """Two sweep points, two trials each, summarised per point."""
    cfg = validate_config(MOCK_CONFIG)
    rows = run_scenario(cfg)
    assert [row.value for row in rows] == [1.0, 4.0]
    for row in rows:
        assert row.variable == "optical_power"
        assert row.trials == 2 and row.failed_trials == 0
        assert row.min <= row.mean <= row.max
        assert row.evaluations_per_trial == 3 * 11
        assert set(row.best) == {"roll_deg", "yaw_deg", "eta_c"}
        assert -90.0 <= row.best["yaw_deg"] <= 90.0
        assert 1.5 <= row.best["eta_c"] <= 1.7
        assert 0.0 <= row.los_blocked_fraction <= 1.0
        assert row.total_power_w is None
        assert row.note == ""


def test_rate_grows_with_power_on_fixed_scene():
    """On one scene the grid optimum rises with every watt of optical power."""
    cfg = validate_config(
        {
            "kind": "oracle_grid",
            "sweep": {"variable": "optical_power", "start": 1, "stop": 8, "steps": 8},
            "monte_carlo": FIXED_SCENE,
            "oracle": {"angle_points": 7, "index_points": 3},
        }
    )
    rows = run_scenario(cfg)
    assert len(rows) == 8
    means = [row.mean for row in rows]
    assert all(b > a for a, b in zip(means, means[1:]))
    assert rows[0].evaluations_per_trial == 7 * 7 * 3


def test_failed_trials_are_counted():
    """A trial that cannot be set up is counted, not dropped."""
    cfg = validate_config({**MOCK_CONFIG, "sweep": None})
    with patch(
        "ris_vlc.scenario.build_objective", side_effect=GeometryError("no geometry")
    ):
        rows = run_scenario(cfg)
    assert rows[0].failed_trials == 2
    assert math.isnan(rows[0].mean)
    assert rows[0].best == {}


def test_convergence_trace_rows():
    """One row per iteration with the best fitness so far across trials."""
    cfg = validate_config(
        {
            "kind": "convergence_trace",
            "monte_carlo": {"trials": 3},
            "optimizer": {"agents": 2, "iterations": 15},
        }
    )
    rows = run_scenario(cfg)
    assert len(rows) == 16
    assert [row.value for row in rows] == [float(t) for t in range(16)]
    assert all(row.variable == "iteration" for row in rows)
    means = [row.mean for row in rows]
    assert all(b >= a for a, b in zip(means, means[1:]))
    assert rows[-1].evaluations_per_trial == 2 * 16


def test_traces_are_collected():
    """Every trial leaves T + 1 trace entries."""
    traces = []
    run_scenario(validate_config(MOCK_CONFIG), traces)
    assert len(traces) == 2 * 2 * 11
    first = [
        row.best_fitness for row in traces if row.sweep_index == 0 and row.trial == 0
    ]
    assert all(b >= a for a, b in zip(first, first[1:]))


def test_wavelength_rows_carry_note():
    """Wavelength sweeps explain which colour the gain model favours."""
    cfg = validate_config(
        {
            "kind": "wavelength_sweep",
            "sweep": {"variable": "wavelength", "values": [510e-9, 670e-9]},
            "optimizer": {"iterations": 5},
        }
    )
    rows = run_scenario(cfg)
    assert [row.note for row in rows] == [WAVELENGTH_NOTE] * 2


def test_energy_rows_report_power():
    """Energy-efficiency sweeps report the power of each array size."""
    cfg = validate_config(
        {
            "kind": "ee_vs_k",
            "scene": {"mirror_array": {"cols": 50, "origin": [0, 0, 1], "grow": "rows"}},
            "sweep": {"variable": "elements", "values": [100, 200]},
            "monte_carlo": FIXED_SCENE,
            "optimizer": {"iterations": 5},
        }
    )
    rows = run_scenario(cfg)
    assert rows[0].total_power_w == pytest.approx(9.8293 + 10.0, abs=1e-3)
    assert rows[1].total_power_w == pytest.approx(9.8293 + 20.0, abs=1e-3)


def test_iterations_to_reach():
    """First iteration within one percent of the final value."""
    assert iterations_to_reach([1.0, 2.0, 3.0, 4.0, 10.0]) == 4
    assert iterations_to_reach([5.0, 5.0, 5.0]) == 0
    assert iterations_to_reach([1.0, 9.95, 10.0]) == 1


def test_oracle_grid_search_on_configured_scene():
    """The grid uses the configured resolution per dimension type."""
    cfg = validate_config({"oracle": {"angle_points": 5, "index_points": 3}})
    result = oracle_grid_search(cfg)
    assert result.nfev == 5 * 5 * 3
    assert -math.pi / 2 <= result.x[0] <= math.pi / 2
    assert 1.5 <= result.x[2] <= 1.7
    assert result.fun > 0


def test_emit_csv_format(tmp_path):
    """Header first, nine significant digits, LF line endings."""
    row = ResultRow(
        variable="optical_power",
        value=2.0,
        kind="rate_p0",
        trials=1,
        failed_trials=0,
        mean=1 / 3,
        min=1 / 3,
        max=1 / 3,
        best={"roll_deg": 1.0, "yaw_deg": -80.0, "eta_c": 1.5},
    )
    path = tmp_path / "results.csv"
    emit_csv([row], path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.count(b"\n") == 2
    [record] = _read(path)
    assert record["mean"] == "0.333333333"
    assert float(record["mean"]) == pytest.approx(1 / 3, rel=1e-8)
    assert record["best_yaw_deg"] == "-80"
    assert record["total_power_w"] == ""
    assert "elapsed_ms" not in record


def test_emit_csv_empty_and_timing(tmp_path):
    """No rows still writes the header; timing adds its column."""
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    assert path.read_text(encoding="utf-8") == ",".join(csv_columns([])) + "\n"
    emit_csv([], path, timing=True)
    assert path.read_text(encoding="utf-8").rstrip("\n").endswith("elapsed_ms")


def test_emit_csv_unwritable_path(tmp_path):
    """Write failures name the target path."""
    blocker = tmp_path / "file.txt"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(OSError) as excinfo:
        emit_csv([], blocker / "results.csv")
    assert "results.csv" in str(excinfo.value)


def test_runs_are_reproducible(tmp_path):
    """Same configuration and seed, byte-identical results."""
    cfg = validate_config(MOCK_CONFIG)
    emit_csv(run_scenario(cfg), tmp_path / "a.csv")
    emit_csv(run_scenario(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_emit_trace_csv(tmp_path):
    """The trace file lists one line per iteration."""
    traces = []
    cfg = validate_config({**MOCK_CONFIG, "sweep": None})
    run_scenario(cfg, traces)
    path = tmp_path / "trace.csv"
    emit_trace_csv(traces, path)
    records = _read(path)
    assert len(records) == 2 * 11
    assert list(records[0]) == ["sweep_index", "trial", "iteration", "best_fitness"]
    assert np.isfinite([float(r["best_fitness"]) for r in records]).all()


def test_describe_position_in_degrees():
    """Angles are reported in degrees, indices unchanged."""
    cfg = validate_config({})
    objective = build_objective(cfg, cfg.scene)
    best = describe_position(objective, [0.1, -math.pi / 4, 1.6])
    assert best["roll_deg"] == pytest.approx(math.degrees(0.1))
    assert best["yaw_deg"] == pytest.approx(-45.0)
    assert best["eta_c"] == 1.6
