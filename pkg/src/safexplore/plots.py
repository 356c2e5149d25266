"""Post-hoc figures and metrics from a run log.

Everything here reads only the log (plus the value-grid artefact the log
header points at, if it still exists), so plots can be regenerated long
after the run.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from .runlog import RunLog

log = logging.getLogger(__name__)

AREA_RESOLUTION = 0.1  # raster cell size used to measure the sensed area [m]


def _epoch_times(log_: RunLog, max_snapshots: int) -> list[float]:
    ticks = sorted({r["t"] for r in log_.of_type("TrackerSample")})
    if not ticks:
        ticks = sorted({r["t"] for r in log_.records})
    if len(ticks) <= max_snapshots:
        return ticks
    idx = np.linspace(0, len(ticks) - 1, max_snapshots).round().astype(int)
    return [ticks[i] for i in sorted(set(idx.tolist()))]


class _Replay:
    """Incremental reconstruction of world knowledge and graph state."""

    def __init__(self, log_: RunLog):
        self.records = log_.records
        self.pos = 0
        self.disks: list[list[float]] = []
        self.obstacles: dict[int, list[float]] = {}
        self.vertices: dict[int, list[float]] = {}
        self.edges: list[dict] = []
        self.backward: set[int] = set()
        self.path: list[list[float]] = []
        self.plan: list[list[float]] | None = None

    def advance(self, t: float) -> None:
        while self.pos < len(self.records) and self.records[self.pos]["t"] <= t:
            r = self.records[self.pos]
            kind = r["type"]
            if kind == "SensorUpdate":
                self.disks.extend(r.get("disks", []))
                for ob in r.get("obstacles", []):
                    self.obstacles[int(ob[0])] = ob[1:]
            elif kind == "GraphDelta":
                for v in r.get("vertices", []):
                    self.vertices[int(v[0])] = v[1:]
                self.edges.extend(r.get("edges", []))
                self.backward.update(int(i) for i in r.get("promoted", []))
            elif kind == "TrackerSample":
                s = r["state"]
                self.path.append([s[0], s[2]])
            elif kind == "PlanResponse":
                self.plan = r.get("polyline")
            self.pos += 1


def sensed_area(disks, bounds, resolution: float = AREA_RESOLUTION) -> float:
    """Area of the union of sensing disks inside the bounds, by rasterisation."""
    if not len(disks):
        return 0.0
    xmin, ymin, xmax, ymax = bounds
    xs = np.arange(xmin + resolution / 2, xmax, resolution)
    ys = np.arange(ymin + resolution / 2, ymax, resolution)
    X, Y = np.meshgrid(xs, ys)
    covered = np.zeros(X.shape, dtype=bool)
    for x, y, r in disks:
        covered |= (X - x) ** 2 + (Y - y) ** 2 <= r * r
    return float(covered.sum() * resolution * resolution)


def _draw_snapshot(rp: _Replay, header: dict, t: float, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.collections import LineCollection
    from matplotlib.patches import Circle

    xmin, ymin, xmax, ymax = header.get("bounds", (0, 0, 1, 1))
    fig, ax = plt.subplots(figsize=(8, 8 * (ymax - ymin) / max(xmax - xmin, 1e-9)))
    ax.set_xlim(xmin, xmax)
    ax.set_ylim(ymin, ymax)
    ax.set_aspect("equal")
    for x, y, r in rp.disks:
        ax.add_patch(Circle((x, y), r, color="#dcefdc", lw=0, zorder=0))
    for x, y, r in header.get("obstacles", []):
        ax.add_patch(Circle((x, y), r, fill=False, ec="#aaaaaa", ls=":", zorder=1))
    for x, y, r in rp.obstacles.values():
        ax.add_patch(Circle((x, y), r, color="#444444", zorder=2))
    fwd = [e["polyline"] for e in rp.edges if e["to"] not in rp.backward or e["from"] not in rp.backward]
    back = [e["polyline"] for e in rp.edges if e["to"] in rp.backward and e["from"] in rp.backward]
    if fwd:
        ax.add_collection(LineCollection([np.asarray(p)[:, :2] for p in fwd], colors="#9ecae1", lw=0.5, zorder=3))
    if back:
        ax.add_collection(LineCollection([np.asarray(p)[:, :2] for p in back], colors="#3182bd", lw=0.7, zorder=4))
    if rp.plan:
        pl = np.asarray(rp.plan)
        ax.plot(pl[:, 0], pl[:, 1], color="#fd8d3c", lw=1.0, zorder=5)
    if rp.path:
        pa = np.asarray(rp.path)
        ax.plot(pa[:, 0], pa[:, 1], color="#d62728", lw=1.2, zorder=6)
    home, goal = header.get("home"), header.get("goal")
    if home:
        ax.plot(home[0], home[1], "ks", ms=6, zorder=7)
    if goal:
        ax.plot(goal[0], goal[1], "g*", ms=12, zorder=7)
    ax.set_title(f"t = {t:.1f} s   |V| = {len(rp.vertices)}   |G_B| = {len(rp.backward)}")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def _draw_value(grid_path: Path, header: dict, path: Path) -> bool:
    from .reachability.grid import ValueGrid

    try:
        grid = ValueGrid.load(grid_path)
    except (OSError, ValueError) as exc:
        log.warning("value heatmap skipped: %s", exc)
        return False
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d = grid.axes[0].nodes()
    psi = grid.axes[1].nodes()
    vmin = np.asarray(grid.values).min(axis=(2, 3))
    psi_c = np.append(psi, psi[0] + 2 * math.pi)
    vmin_c = np.concatenate([vmin, vmin[:, :1]], axis=1)
    D, P = np.meshgrid(d, psi_c, indexing="ij")
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(D * np.cos(P), D * np.sin(P), vmin_c, shading="gouraud", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="min over (vT, vN) of V")
    teb = header.get("teb", {})
    if "radius" in teb:
        th = np.linspace(0, 2 * math.pi, 200)
        ax.plot(teb["radius"] * np.cos(th), teb["radius"] * np.sin(th), "w--", lw=1)
    ax.set_aspect("equal")
    ax.set_xlabel("tangential offset [m]")
    ax.set_ylabel("normal offset [m]")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return True


def run_metrics(log_: RunLog, epoch_times: list[float] | None = None) -> dict:
    """Summary numbers for a run; an empty dict for a log with no records."""
    if not log_.records:
        return {}
    header = log_.header
    samples = log_.of_type("TrackerSample")
    max_err = 0.0
    max_zerr = 0.0
    z_p = None
    for r in samples:
        s, ref = r["state"], r["ref"]
        max_err = max(max_err, math.hypot(s[0] - ref[0], s[2] - ref[1]))
    if "z_p" in header:
        z_p = header["z_p"]
        max_zerr = max((abs(r["state"][4] - z_p) for r in samples), default=0.0)
    vertices = sum(len(r.get("vertices", [])) for r in log_.of_type("GraphDelta"))
    backward = sum(len(r.get("promoted", [])) for r in log_.of_type("GraphDelta"))
    term = log_.of_type("Termination")
    outcome = term[-1]["outcome"] if term else None
    out = {
        "outcome": outcome,
        "ticks": len(samples),
        "time_to_goal": term[-1]["t"] if outcome == "SUCCESS" else None,
        "vertices": vertices + (1 if header.get("mode") == "framework" else 0),
        "backward_vertices": backward + (1 if header.get("mode") == "framework" else 0),
        "responses": len(log_.of_type("PlanResponse")),
        "violations": len(log_.violations),
        "max_tracking_error": max_err,
        "max_vertical_error": max_zerr if z_p is not None else None,
    }
    if epoch_times:
        bounds = header.get("bounds")
        rp = _Replay(log_)
        areas = []
        for t in epoch_times:
            rp.advance(t)
            areas.append(sensed_area(rp.disks, bounds) if bounds else 0.0)
        out["epoch_times"] = list(epoch_times)
        out["explored_area"] = areas
        out["explored_area_monotone"] = all(b >= a for a, b in zip(areas, areas[1:]))
    return out


def emit_plots(log_: RunLog, out_dir, max_snapshots: int = 8) -> list[Path]:
    """Write world snapshots, the value heatmap and ``metrics.json``.

    Returns the list of files written. A log without records yields only an
    empty ``metrics.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    times = _epoch_times(log_, max_snapshots) if log_.records else []
    if times:
        rp = _Replay(log_)
        for i, t in enumerate(times):
            rp.advance(t)
            path = out / f"snapshot_{i:03d}.svg"
            _draw_snapshot(rp, log_.header, t, path)
            written.append(path)
        artefact = log_.header.get("hj_artefact")
        if artefact and Path(artefact).exists():
            path = out / "value_heatmap.svg"
            if _draw_value(Path(artefact), log_.header, path):
                written.append(path)
    metrics = run_metrics(log_, times)
    mpath = out / "metrics.json"
    mpath.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    written.append(mpath)
    return written
