"""Static circular-obstacle world, disk sensing and footprint safety checks.

Free space is represented exactly: the sensed region is a union of disks and
obstacles are circles, so footprint containment is decided geometrically
rather than on a grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import PlannerState, Trajectory


class Label(str, enum.Enum):
    FREE = "FREE"
    OCCUPIED = "OCCUPIED"
    UNKNOWN = "UNKNOWN"


def _frozen(arr, shape_tail) -> np.ndarray:
    out = np.array(arr, dtype=float).reshape((-1,) + shape_tail)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Environment:
    """Axis-aligned bounds ``(xmin, ymin, xmax, ymax)`` and circular obstacles."""

    bounds: tuple[float, float, float, float]
    centers: np.ndarray
    radii: np.ndarray
    home: PlannerState
    goal: PlannerState

    def __post_init__(self):
        object.__setattr__(self, "centers", _frozen(self.centers, (2,)))
        object.__setattr__(self, "radii", _frozen(self.radii, ()))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if len(self.centers) != len(self.radii):
            raise ValueError("one radius per obstacle centre is required")
        if np.any(self.radii <= 0):
            raise ValueError("obstacle radii must be positive")
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("empty bounds")

    @property
    def n_obstacles(self) -> int:
        return len(self.radii)

    def inside_bounds(self, x, y, r=0.0):
        xmin, ymin, xmax, ymax = self.bounds
        return (x - r >= xmin) & (x + r <= xmax) & (y - r >= ymin) & (y + r <= ymax)

    def collides(self, x: float, y: float, r: float) -> bool:
        """Does the disc (x, y, r) touch a true obstacle or leave the bounds?"""
        if not self.inside_bounds(x, y, r):
            return True
        if self.n_obstacles == 0:
            return False
        dist = np.hypot(self.centers[:, 0] - x, self.centers[:, 1] - y)
        return bool(np.any(dist < self.radii + r))

    def clearance(self, x: float, y: float) -> float:
        """Signed distance from (x, y) to the nearest obstacle surface."""
        if self.n_obstacles == 0:
            return math.inf
        return float(np.min(np.hypot(self.centers[:, 0] - x, self.centers[:, 1] - y) - self.radii))

    def validate(self, footprint_radius: float) -> None:
        """Home and goal footprints must fit inside the bounds and clear all obstacles."""
        for name, p in (("home", self.home), ("goal", self.goal)):
            if not self.inside_bounds(p.x, p.y, footprint_radius):
                raise ValueError(f"{name} footprint leaves the environment bounds")
            if self.collides(p.x, p.y, footprint_radius):
                raise ValueError(f"{name} footprint intersects an obstacle")


@dataclass(frozen=True)
class KnowledgeMap:
    """Immutable snapshot of what has been sensed.

    ``disks`` rows are ``(x, y, range)``; ``discovered`` holds indices into the
    environment's obstacle list, in discovery order.
    """

    bounds: tuple[float, float, float, float]
    disks: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    discovered: tuple[int, ...] = ()
    obstacle_centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    obstacle_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "disks", _frozen(self.disks, (3,)))
        object.__setattr__(self, "obstacle_centers", _frozen(self.obstacle_centers, (2,)))
        object.__setattr__(self, "obstacle_radii", _frozen(self.obstacle_radii, ()))
        object.__setattr__(self, "discovered", tuple(int(i) for i in self.discovered))

    @classmethod
    def empty(cls, env: Environment) -> "KnowledgeMap":
        return cls(env.bounds)

    def to_record(self) -> dict:
        return {
            "t": self.time,
            "sensed_disks": self.disks.tolist(),
            "discovered_obstacles": [
                [*c, r] for c, r in zip(self.obstacle_centers.tolist(), self.obstacle_radii.tolist())
            ],
        }

    def refines(self, other: "KnowledgeMap") -> bool:
        """Does this map contain every update of ``other``?"""
        mine = {tuple(row) for row in self.disks.tolist()}
        return set(other.discovered) <= set(self.discovered) and all(
            tuple(row) in mine for row in other.disks.tolist()
        )


def sense(
    position,
    env: Environment,
    kmap: KnowledgeMap,
    sensing_range: float,
    t: float,
    min_spacing: float = 0.0,
) -> KnowledgeMap:
    """Record an exact omnidirectional scan from ``position``.

    Every obstacle whose circle meets the sensing disk is discovered in full.
    The disk itself is recorded unless an earlier disk of at least the same
    range lies within ``min_spacing`` of ``position``; dropping it only shrinks
    the known free space, so it is always conservative. Repeating an identical
    pose is a no-op apart from the timestamp.
    """
    if not sensing_range > 0:
        raise ValueError("sensing range must be positive")
    px, py = float(position[0]), float(position[1])
    new_ids = []
    if env.n_obstacles:
        dist = np.hypot(env.centers[:, 0] - px, env.centers[:, 1] - py)
        seen = set(kmap.discovered)
        new_ids = [int(i) for i in np.flatnonzero(dist < env.radii + sensing_range) if int(i) not in seen]
    disks = kmap.disks
    record = True
    if len(disks):
        near = np.hypot(disks[:, 0] - px, disks[:, 1] - py)
        close = (near <= min_spacing) | (near == 0.0)
        record = not np.any(close & (disks[:, 2] >= sensing_range))
    if record:
        disks = np.vstack([disks, [[px, py, sensing_range]]])
    discovered = kmap.discovered + tuple(new_ids)
    if new_ids:
        centers = np.vstack([kmap.obstacle_centers, env.centers[new_ids]])
        radii = np.concatenate([kmap.obstacle_radii, env.radii[new_ids]])
    else:
        centers, radii = kmap.obstacle_centers, kmap.obstacle_radii
    return KnowledgeMap(kmap.bounds, disks, discovered, centers, radii, float(t))


def label(x, kmap: KnowledgeMap) -> Label:
    """OCCUPIED inside a discovered obstacle, else FREE inside a sensed disk, else UNKNOWN."""
    px, py = float(x[0]), float(x[1])
    if len(kmap.obstacle_radii):
        dist = np.hypot(kmap.obstacle_centers[:, 0] - px, kmap.obstacle_centers[:, 1] - py)
        if np.any(dist <= kmap.obstacle_radii):
            return Label.OCCUPIED
    if len(kmap.disks):
        dist = np.hypot(kmap.disks[:, 0] - px, kmap.disks[:, 1] - py)
        if np.any(dist <= kmap.disks[:, 2]):
            return Label.FREE
    return Label.UNKNOWN


@dataclass(frozen=True)
class RobustFootprint:
    """Disc swept out by the vehicle body plus its tracking error."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("footprint radius must be positive")


def _inside_bounds(bounds, x, y, r):
    xmin, ymin, xmax, ymax = bounds
    return (x - r >= xmin) & (x + r <= xmax) & (y - r >= ymin) & (y + r <= ymax)


def footprints_free(xs: np.ndarray, ys: np.ndarray, radius: float, kmap: KnowledgeMap) -> np.ndarray:
    """Vectorised :func:`footprint_free` over footprint centres; exact for every entry."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    ok = _inside_bounds(kmap.bounds, xs, ys, radius)
    if len(kmap.obstacle_radii) and ok.any():
        dx = xs[:, None] - kmap.obstacle_centers[None, :, 0]
        dy = ys[:, None] - kmap.obstacle_centers[None, :, 1]
        ok &= np.all(np.hypot(dx, dy) > kmap.obstacle_radii[None, :] + radius, axis=1)
    if not len(kmap.disks):
        return np.zeros_like(ok)
    if not ok.any():
        return ok
    idx = np.flatnonzero(ok)
    dist = np.hypot(xs[idx, None] - kmap.disks[None, :, 0], ys[idx, None] - kmap.disks[None, :, 1])
    r = kmap.disks[None, :, 2]
    single = np.any(dist + radius <= r, axis=1)
    for row, i in enumerate(idx):
        if single[row]:
            continue
        near = dist[row] < r[0] + radius
        if not near.any():
            ok[i] = False
            continue
        sub = kmap.disks[near]
        ok[i] = kernels.disc_covered(
            float(xs[i]), float(ys[i]), float(radius), np.ascontiguousarray(sub[:, :2]), np.ascontiguousarray(sub[:, 2])
        )
    return ok


def footprint_free(p, fp: RobustFootprint | float, kmap: KnowledgeMap) -> bool:
    """Is the footprint disc at ``p`` inside the bounds, the sensed region, and clear
    of every discovered obstacle?"""
    radius = fp.radius if isinstance(fp, RobustFootprint) else float(fp)
    x, y = (p.x, p.y) if isinstance(p, PlannerState) else (p[0], p[1])
    return bool(footprints_free(np.array([x]), np.array([y]), radius, kmap)[0])


def sweep_inflation(xi: Trajectory) -> float:
    """Extra radius covering motion between consecutive samples."""
    return 0.5 * xi.speed * xi.max_spacing


def trajectory_safe(xi: Trajectory, fp: RobustFootprint | float, kmap: KnowledgeMap) -> bool:
    """Footprint check at every sample with the radius inflated by ``v * dt_max / 2``.

    Any point of the path between two samples lies within half a sample
    spacing (in arc length) of one of them, so the inflated checks cover the
    continuous sweep.
    """
    radius = fp.radius if isinstance(fp, RobustFootprint) else float(fp)
    radius += sweep_inflation(xi)
    return bool(np.all(footprints_free(xi.states[:, 0], xi.states[:, 1], radius, kmap)))
