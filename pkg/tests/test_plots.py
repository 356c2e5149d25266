import json

import pytest

from safexplore.plots import emit_plots, run_metrics, sensed_area
from safexplore.runlog import RunLog


def _tiny_log():
    log = RunLog({"bounds": [0, 0, 4, 4], "mode": "framework", "z_p": 1.0})
    log.append("SensorUpdate", 0.0, disks=[[2.0, 2.0, 1.0]], obstacles=[[0, 3.0, 3.0, 0.3]])
    log.append(
        "TrackerSample", 0.1, state=[2.0, 1.0, 2.0, 0.0, 1.0, 0.0], ref=[2.05, 2.0, 0.0], rel=[0.05, 0, 0, 0], value=0.05
    )
    log.append("Termination", 0.1, outcome="TIMEOUT", ticks=1, metrics={})
    return log


def test_empty_log_gives_empty_metrics(tmp_path):
    log = RunLog({})
    assert run_metrics(log) == {}
    written = emit_plots(log, tmp_path)
    assert [p.name for p in written] == ["metrics.json"]
    assert json.loads((tmp_path / "metrics.json").read_text()) == {}


def test_single_tick_gives_one_snapshot(tmp_path):
    written = emit_plots(_tiny_log(), tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["metrics.json", "snapshot_000.svg"]
    assert (tmp_path / "snapshot_000.svg").read_text().lstrip().startswith("<")
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["outcome"] == "TIMEOUT" and m["ticks"] == 1
    assert m["max_tracking_error"] == pytest.approx(0.05)
    assert m["explored_area_monotone"]


def test_sensed_area_of_one_disk():
    assert sensed_area([[2.0, 2.0, 1.0]], [0, 0, 4, 4], 0.02) == pytest.approx(3.14159, rel=0.01)
    assert sensed_area([], [0, 0, 4, 4]) == 0.0
