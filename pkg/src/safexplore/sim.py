"""Deterministic closed-loop simulation of safe exploration.

Each tick the harness (1) flies the tracker under the optimal tracking
controller toward the current reference, (2) advances the reference,
(3) senses from the tracker, (4) runs the scheduled expansion and
consolidation tasks, (5) requests a new trajectory when one is due, and
(6) checks every invariant against the true world. All randomness flows
from the scenario seeds; nothing reads the wall clock.
"""

from __future__ import annotations

import enum
import heapq
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dubins import dubins_connect
from .dynamics import Leg, PlannerState, TerminalKind, Trajectory, concatenate, integrate_planner, wrap_angle
from .explorer import ExplorationPolicy, PlanResponse, ViabilityError, mark_visited, request_trajectory
from .meta_graph import ReachGraph, inbound_consolidate, outbound_expand, sample_candidate
from .reachability.synthesis import TrackingSystem, build_tracking
from .runlog import RunLog
from .scenario import ScenarioConfig, ScenarioError
from .world import KnowledgeMap, RobustFootprint, footprint_free, sense, sweep_inflation, trajectory_safe

log = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    SUCCESS = "SUCCESS"
    TIMEOUT = "TIMEOUT"
    VIOLATION = "VIOLATION"


@dataclass
class RunResult:
    outcome: Outcome
    log: RunLog
    ticks: int
    metrics: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.outcome is Outcome.VIOLATION else 0

    @property
    def violations(self) -> list[dict]:
        return self.log.violations


def prepare_tracking(cfg: ScenarioConfig, cache: str | Path | None = None) -> TrackingSystem:
    """Solve or load the tracking artefacts and check them against the scenario."""
    ts = build_tracking(cfg.planner, cfg.tracker, cfg.hj, cache if cache is not None else cfg.hj_cache)
    if ts.bound.vertical_tolerance > cfg.z_clearance:
        raise ScenarioError(
            f"vertical tracking bound {ts.bound.vertical_tolerance:.3f} m exceeds the "
            f"flight clearance {cfg.z_clearance:.3f} m"
        )
    return ts


def footprint_for(cfg: ScenarioConfig, ts: TrackingSystem) -> RobustFootprint:
    """Body radius plus the planar tracking tolerance (TEB radius and kappa)."""
    return RobustFootprint(cfg.r_robot + ts.bound.planar_tolerance)


def home_loop(cfg: ScenarioConfig, home_id: int = 0) -> Trajectory:
    """Minimum-radius left loop through home, repeated forever."""
    p = cfg.planner
    c = p.speed / p.turn_radius
    period = 2 * math.pi / c
    traj = integrate_planner(cfg.env.home, c, cfg.graph.sample_dt, period, p.speed)
    traj.states[-1] = cfg.env.home.as_array()
    traj.cycle_start = 0
    traj.terminal_kind = TerminalKind.HOME_CYCLE
    traj.legs = (Leg(len(traj) - 1, home_id),)
    return traj


def legs_passed(traj: Trajectory, t0: float, t1: float) -> list[int]:
    """Vertex ids of leg ends the reference passes in ``(t0, t1]``.

    Leg ends inside the periodic tail of a home cycle recur once per period.
    """
    periodic = traj.cycle_start is not None and traj.cycle_period > 0
    cs = float(traj.times[traj.cycle_start]) if periodic else math.inf
    out = []
    for leg in traj.legs:
        te = float(traj.times[leg.end_index])
        if periodic and te > cs and t0 >= te:
            period = traj.cycle_period
            te += (math.floor((t0 - te) / period) + 1) * period
        if t0 < te <= t1:
            out.append(leg.vertex_id)
    return out


def reference_at(traj: Trajectory, t: float) -> PlannerState:
    """Reference state at ``t``; a trajectory ending at the goal holds its end state.

    Only goal-terminal references end, and reaching their end finishes the
    run, so the hold lasts at most part of one tick.
    """
    if not traj.is_periodic() and t > traj.end_time:
        return traj.end
    return traj.state_at(t)


class _Tracker:
    """Exact integration of the 6D model under piecewise-constant input."""

    def __init__(self, ts: TrackingSystem, state: np.ndarray, z_ref: float):
        self.ts = ts
        self.s = state.astype(float)
        self.z_ref = z_ref

    def fly(self, traj: Trajectory, t0: float, tick: float, substep: float) -> None:
        g = self.ts.tracker.g
        n = int(round(tick / substep))
        for i in range(n):
            t = t0 + i * substep
            ref = reference_at(traj, t)
            u = self.ts.control_array(self.s, ref, self.z_ref)
            a = (g * math.cos(u[0]), -g * math.sin(u[1]), u[2] - g)
            s = self.s
            h = substep
            s[0] += s[1] * h + 0.5 * a[0] * h * h
            s[1] += a[0] * h
            s[2] += s[3] * h + 0.5 * a[1] * h * h
            s[3] += a[1] * h
            s[4] += s[5] * h + 0.5 * a[2] * h * h
            s[5] += a[2] * h


@dataclass
class _Context:
    cfg: ScenarioConfig
    ts: TrackingSystem
    fp: RobustFootprint
    log: RunLog
    kmap: KnowledgeMap
    tracker: _Tracker
    traj: Trajectory
    t: float = 0.0
    max_err: float = 0.0
    max_zerr: float = 0.0

    @property
    def goal_tolerance(self) -> float:
        if self.cfg.goal_tolerance is not None:
            return self.cfg.goal_tolerance
        return self.ts.bound.planar_tolerance


def _sense(ctx: _Context) -> None:
    s = ctx.tracker.s
    before = ctx.kmap
    ctx.kmap = sense((s[0], s[2]), ctx.cfg.env, before, ctx.cfg.sensing_range, ctx.t, ctx.cfg.sense_spacing)
    new_disks = ctx.kmap.disks[len(before.disks):]
    new_obs = ctx.kmap.discovered[len(before.discovered):]
    if len(new_disks) or new_obs:
        env = ctx.cfg.env
        ctx.log.append(
            "SensorUpdate",
            ctx.t,
            disks=new_disks.tolist(),
            obstacles=[[i, *env.centers[i].tolist(), float(env.radii[i])] for i in new_obs],
        )


def _track_and_check(ctx: _Context, tick: int) -> dict | None:
    """Fly one tick, log the tracker sample and return a violation if any."""
    cfg = ctx.cfg
    ctx.tracker.fly(ctx.traj, ctx.t, cfg.schedule.tick, cfg.schedule.substep)
    ctx.t = round((tick + 1) * cfg.schedule.tick, 9)
    ref = reference_at(ctx.traj, ctx.t)
    s = ctx.tracker.s
    rel = ctx.ts.relative_array(s, ref)
    err = float(math.hypot(s[0] - ref.x, s[2] - ref.y))
    zerr = abs(float(s[4]) - cfg.z_p)
    ctx.max_err = max(ctx.max_err, err)
    ctx.max_zerr = max(ctx.max_zerr, zerr)
    ctx.log.append(
        "TrackerSample",
        ctx.t,
        state=[round(float(v), 9) for v in s],
        ref=[round(v, 9) for v in (ref.x, ref.y, ref.theta)],
        rel=[round(float(v), 9) for v in rel],
        value=round(ctx.ts.value(rel), 9),
    )
    b = ctx.ts.bound
    if err > b.planar_tolerance:
        return {"kind": "tracking_bound", "distance": err, "limit": b.planar_tolerance}
    if zerr > b.vertical_tolerance:
        return {"kind": "vertical_bound", "distance": zerr, "limit": b.vertical_tolerance}
    if cfg.env.collides(float(s[0]), float(s[2]), cfg.r_robot):
        return {"kind": "collision", "position": [float(s[0]), float(s[2])]}
    return None


def _init(cfg: ScenarioConfig, ts: TrackingSystem, mode: str) -> _Context:
    fp = footprint_for(cfg, ts)
    try:
        cfg.env.validate(fp.radius)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    b = ts.bound
    header = {
        "scenario": cfg.name,
        "mode": mode,
        "seed": cfg.seed,
        "schedule_seed": cfg.schedule.seed,
        "epsilon": cfg.epsilon,
        "bounds": list(cfg.env.bounds),
        "home": list(cfg.env.home.as_array()),
        "goal": list(cfg.env.goal.as_array()),
        "obstacles": [[*c, r] for c, r in zip(cfg.env.centers.tolist(), cfg.env.radii.tolist())],
        "r_robot": cfg.r_robot,
        "z_p": cfg.z_p,
        "footprint_radius": fp.radius,
        "teb": {"radius": b.radius, "level": b.level, "kappa": b.kappa, "z_extent": b.z_extent, "z_kappa": b.z_kappa},
        "hj_artefact": ts.artefact,
        "tick": cfg.schedule.tick,
    }
    home = cfg.env.home
    speed = cfg.planner.speed
    s0 = np.array([home.x, speed * math.cos(home.theta), home.y, speed * math.sin(home.theta), cfg.z_p, 0.0])
    kmap = KnowledgeMap.empty(cfg.env)
    ctx = _Context(cfg, ts, fp, RunLog(header), kmap, _Tracker(ts, s0, cfg.z_p), home_loop(cfg))
    _sense(ctx)
    return ctx


def _finish(ctx: _Context, outcome: Outcome, ticks: int, extra: dict | None = None) -> RunResult:
    metrics = {
        "outcome": outcome.value,
        "ticks": ticks,
        "time": ctx.t,
        "max_tracking_error": ctx.max_err,
        "max_vertical_error": ctx.max_zerr,
        "sensed_disks": int(len(ctx.kmap.disks)),
        "discovered_obstacles": len(ctx.kmap.discovered),
        **(extra or {}),
    }
    ctx.log.append("Termination", ctx.t, outcome=outcome.value, ticks=ticks, metrics=metrics)
    return RunResult(outcome, ctx.log, ticks, metrics)


def _response_record(resp: PlanResponse, safe: bool) -> dict:
    rec = resp.to_record()
    del rec["t"]
    rec["safe_at_emission"] = safe
    return rec


def _terminal_ok(resp: PlanResponse, home: PlannerState) -> bool:
    traj = resp.trajectory
    if resp.terminal_kind is TerminalKind.GOAL:
        return traj.terminal_kind is TerminalKind.GOAL
    if not traj.is_periodic():
        return False
    return PlannerState.from_array(traj.states[traj.cycle_start]).matches(home)


def run(cfg: ScenarioConfig, ts: TrackingSystem | None = None, max_ticks: int | None = None) -> RunResult:
    """Run the safe exploration framework on a scenario."""
    ts = ts or prepare_tracking(cfg)
    ctx = _init(cfg, ts, "framework")
    env = cfg.env
    if not trajectory_safe(ctx.traj, ctx.fp, ctx.kmap):
        raise ScenarioError("the initial loop through home is not known to be safe")
    graph = ReachGraph(env.home, cfg.planner, cfg.graph)
    graph.set_goal(env.goal)
    policy = ExplorationPolicy(cfg.epsilon, cfg.seed)
    sample_rng = np.random.default_rng([cfg.seed, 1])
    sched_rng = np.random.default_rng([cfg.schedule.seed, 2])
    initial = PlanResponse(0.0, ctx.traj, TerminalKind.HOME_CYCLE, None, graph.home_id)
    ctx.log.append("PlanResponse", 0.0, **_response_record(initial, True))
    tasks = ["E"] * cfg.schedule.expand_per_tick + ["C"] * cfg.schedule.consolidate_per_tick
    cursor = 0
    fresh: list[int] = []  # vertices never offered a consolidation attempt, newest last
    n_seen = 1
    last_plan = 0.0
    target = None
    responses = 1
    max_ticks = cfg.max_ticks if max_ticks is None else max_ticks

    for tick in range(max_ticks):
        t_prev = ctx.t
        violation = _track_and_check(ctx, tick)
        if violation:
            ctx.log.append("Violation", ctx.t, **violation)
            return _finish(ctx, Outcome.VIOLATION, tick + 1, {"vertices": len(graph), "responses": responses})
        if math.hypot(ctx.tracker.s[0] - env.goal.x, ctx.tracker.s[2] - env.goal.y) <= ctx.goal_tolerance:
            return _finish(ctx, Outcome.SUCCESS, tick + 1, {"vertices": len(graph), "responses": responses})

        passed = legs_passed(ctx.traj, t_prev, ctx.t)
        if passed:
            mark_visited(graph, passed)

        _sense(ctx)

        n_v, n_e, n_p = len(graph.vertices), len(graph.edges), len(graph.promotions)
        order = [tasks[i] for i in sched_rng.permutation(len(tasks))]
        goal_tried = False
        for task in order:
            if task == "E":
                if graph.goal_id is None and not goal_tried:
                    goal_tried = True
                    if footprint_free(env.goal, ctx.fp, ctx.kmap) and outbound_expand(graph, env.goal, ctx.kmap, ctx.fp):
                        continue
                for _ in range(cfg.schedule.sample_tries):
                    cand = sample_candidate(ctx.kmap, ctx.fp, sample_rng)
                    if cand is not None:
                        outbound_expand(graph, cand, ctx.kmap, ctx.fp)
                        break
            else:
                fresh.extend(range(n_seen, len(graph)))
                n_seen = len(graph)
                vid = None
                while fresh and vid is None:
                    cand = fresh.pop()
                    if not graph.vertices[cand].in_backward_set:
                        vid = cand
                n = len(graph)
                for step in range(n if vid is None else 0):
                    cand = (cursor + step) % n
                    if not graph.vertices[cand].in_backward_set:
                        vid = cand
                        cursor = (cand + 1) % n
                        break
                if vid is not None:
                    inbound_consolidate(graph, vid, ctx.kmap, ctx.fp)
        if len(graph.vertices) > n_v or len(graph.promotions) > n_p:
            ctx.log.append(
                "GraphDelta",
                ctx.t,
                vertices=[
                    [v.id, round(v.state.x, 9), round(v.state.y, 9), round(v.state.theta, 9)]
                    for v in graph.vertices[n_v:]
                ],
                edges=[
                    {"id": e.id, "from": e.from_id, "to": e.to_id, "cost": e.cost, "polyline": e.trajectory.polyline(5)}
                    for e in graph.edges[n_e:]
                ],
                promoted=graph.promotions[n_p:],
                goal_id=graph.goal_id,
            )

        goal_ready = graph.goal_id is not None and graph.vertices[graph.goal_id].in_backward_set
        due = (
            ctx.t - last_plan >= cfg.t_replan - 1e-9
            or (target is not None and graph.vertices[target].visited)
            or (goal_ready and ctx.traj.terminal_kind is not TerminalKind.GOAL)
        )
        if due and ctx.traj.terminal_kind is not TerminalKind.GOAL:
            last_plan = ctx.t
            try:
                resp = request_trajectory(graph, ctx.traj, ctx.t, policy, ctx.kmap, ctx.fp, check=False)
            except ViabilityError as exc:
                ctx.log.append("Violation", ctx.t, kind="non_viable", detail=str(exc))
                return _finish(ctx, Outcome.VIOLATION, tick + 1, {"vertices": len(graph), "responses": responses})
            if not resp.fallback:
                safe = trajectory_safe(resp.trajectory, ctx.fp, ctx.kmap)
                ctx.log.append("PlanResponse", ctx.t, **_response_record(resp, safe))
                responses += 1
                if not safe or not _terminal_ok(resp, env.home):
                    kind = "unsafe_response" if not safe else "bad_terminal"
                    ctx.log.append("Violation", ctx.t, kind=kind)
                    return _finish(ctx, Outcome.VIOLATION, tick + 1, {"vertices": len(graph), "responses": responses})
                ctx.traj = resp.trajectory
                target = resp.target_id

    return _finish(ctx, Outcome.TIMEOUT, max_ticks, {"vertices": len(graph), "responses": responses})


# ---------------------------------------------------------------------------
# optimistic baseline


def _optimistic_free(xs, ys, radius, kmap: KnowledgeMap) -> np.ndarray:
    """Footprint test that treats UNKNOWN space as free."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    xmin, ymin, xmax, ymax = kmap.bounds
    ok = (xs - radius >= xmin) & (xs + radius <= xmax) & (ys - radius >= ymin) & (ys + radius <= ymax)
    if len(kmap.obstacle_radii):
        dx = xs[:, None] - kmap.obstacle_centers[None, :, 0]
        dy = ys[:, None] - kmap.obstacle_centers[None, :, 1]
        ok &= np.all(np.hypot(dx, dy) > kmap.obstacle_radii[None, :] + radius, axis=1)
    return ok


def _optimistic_safe(traj: Trajectory, radius: float, kmap: KnowledgeMap) -> bool:
    r = radius + sweep_inflation(traj)
    return bool(np.all(_optimistic_free(traj.states[:, 0], traj.states[:, 1], r, kmap)))


def optimistic_plan(
    start: PlannerState,
    goal: PlannerState,
    cfg: ScenarioConfig,
    radius: float,
    kmap: KnowledgeMap,
    rng: np.random.Generator,
    samples: int = 300,
    k: int = 8,
) -> Trajectory | None:
    """Shortest Dubins route to the goal in optimistically free space.

    Tries the direct connection first, then a lazily checked roadmap over
    uniform samples. Returns ``None`` when no route is found.
    """
    R, v, dt = cfg.planner.turn_radius, cfg.planner.speed, cfg.graph.sample_dt
    direct = dubins_connect(start, goal, R, v, dt)
    if direct is not None and _optimistic_safe(direct, radius, kmap):
        return direct
    xmin, ymin, xmax, ymax = kmap.bounds
    pts = np.column_stack(
        [
            rng.uniform(xmin, xmax, samples),
            rng.uniform(ymin, ymax, samples),
            math.pi - rng.uniform(0, 2 * math.pi, samples),
        ]
    )
    pts = pts[_optimistic_free(pts[:, 0], pts[:, 1], radius, kmap)]
    nodes = [start.as_array(), *pts, goal.as_array()]
    n = len(nodes)
    arr = np.array(nodes)
    goal_i = n - 1
    dist = {0: 0.0}
    prev: dict[int, tuple[int, Trajectory]] = {}
    heap = [(0.0, 0)]
    done = set()
    while heap:
        c, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == goal_i:
            break
        dth = wrap_angle(arr[:, 2] - arr[u, 2])
        metric = (arr[:, 0] - arr[u, 0]) ** 2 + (arr[:, 1] - arr[u, 1]) ** 2 + (R * dth) ** 2
        metric[u] = np.inf
        nbrs = list(np.argsort(metric, kind="stable")[:k])
        if goal_i not in nbrs:
            nbrs.append(goal_i)
        for w in nbrs:
            w = int(w)
            if w in done:
                continue
            tr = dubins_connect(PlannerState.from_array(arr[u]), PlannerState.from_array(arr[w]), R, v, dt)
            if tr is None or not _optimistic_safe(tr, radius, kmap):
                continue
            nc = c + tr.duration
            if nc < dist.get(w, math.inf):
                dist[w] = nc
                prev[w] = (u, tr)
                heapq.heappush(heap, (nc, w))
    if goal_i not in prev:
        return None
    parts = []
    node = goal_i
    while node != 0:
        u, tr = prev[node]
        parts.append(tr)
        node = u
    return concatenate(parts[::-1])


def run_baseline_optimistic(cfg: ScenarioConfig, ts: TrackingSystem | None = None, max_ticks: int | None = None) -> RunResult:
    """Same harness, but plan straight for the goal treating UNKNOWN as FREE.

    A collision, or a remaining plan that is known to be blocked with no
    alternative, is recorded as a violation and ends the run.
    """
    ts = ts or prepare_tracking(cfg)
    ctx = _init(cfg, ts, "baseline_optimistic")
    env = cfg.env
    rng = np.random.default_rng([cfg.seed, 3])
    radius = ctx.fp.radius
    plan = optimistic_plan(env.home, env.goal, cfg, radius, ctx.kmap, rng)
    if plan is None:
        ctx.log.append("Violation", 0.0, kind="trapped", detail="no optimistic route from home")
        return _finish(ctx, Outcome.VIOLATION, 0)
    plan.terminal_kind = TerminalKind.GOAL
    ctx.traj = plan
    ctx.log.append("PlanResponse", 0.0, terminal_kind="GoalTerminal", polyline=plan.polyline(5), fallback=False)
    max_ticks = cfg.max_ticks if max_ticks is None else max_ticks
    for tick in range(max_ticks):
        violation = _track_and_check(ctx, tick)
        if violation:
            ctx.log.append("Violation", ctx.t, **violation)
            return _finish(ctx, Outcome.VIOLATION, tick + 1)
        if math.hypot(ctx.tracker.s[0] - env.goal.x, ctx.tracker.s[2] - env.goal.y) <= ctx.goal_tolerance:
            return _finish(ctx, Outcome.SUCCESS, tick + 1)
        n_obs = len(ctx.kmap.discovered)
        _sense(ctx)
        if len(ctx.kmap.discovered) == n_obs or ctx.t >= ctx.traj.end_time:
            continue
        remaining = ctx.traj.slice(ctx.t)
        if _optimistic_safe(remaining, radius, ctx.kmap):
            continue
        new = optimistic_plan(ctx.traj.state_at(ctx.t), env.goal, cfg, radius, ctx.kmap, rng)
        if new is None:
            ctx.log.append("Violation", ctx.t, kind="trapped", detail="known obstacles block every route")
            return _finish(ctx, Outcome.VIOLATION, tick + 1)
        ctx.traj = new.shifted(ctx.t)
        ctx.traj.terminal_kind = TerminalKind.GOAL
        ctx.log.append("PlanResponse", ctx.t, terminal_kind="GoalTerminal", polyline=new.polyline(5), fallback=False)
    return _finish(ctx, Outcome.TIMEOUT, max_ticks)
