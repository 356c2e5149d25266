import math
import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from safexplore.dynamics import PlannerModel, PlannerState, TrackerModel  # noqa: E402
from safexplore.reachability import HJConfig, build_tracking  # noqa: E402
from safexplore.scenario import load_scenario, shipped_scenario  # noqa: E402
from safexplore.world import Environment, KnowledgeMap  # noqa: E402

G = 9.81


def default_tracker(g: float = G) -> TrackerModel:
    half = math.pi / 2
    return TrackerModel(g, (half - 0.35, half + 0.35), (-0.35, 0.35), (g - 3.0, g + 3.0))


@pytest.fixture
def planner():
    return PlannerModel(1.0, -1.0, 1.0)


@pytest.fixture
def tracker():
    return default_tracker()


@pytest.fixture(scope="session")
def hj_cache_dir():
    """Value grids are cached across sessions; the first session solves them."""
    env = os.environ.get("SAFEXPLORE_TEST_CACHE")
    path = Path(env) if env else Path.home() / ".cache" / "safexplore"
    path.mkdir(parents=True, exist_ok=True)
    return path


@pytest.fixture(scope="session")
def tracking(hj_cache_dir):
    """The default 31^4 tracking system shared by every shipped scenario."""
    return build_tracking(PlannerModel(1.0, -1.0, 1.0), default_tracker(), HJConfig(), hj_cache_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def open_box(size=10.0, home=(2.0, 5.0, 0.0), goal=(8.0, 5.0, 0.0), obstacles=()):
    centers = np.array([o[:2] for o in obstacles]).reshape(-1, 2)
    radii = np.array([o[2] for o in obstacles])
    return Environment((0.0, 0.0, size, size), centers, radii, PlannerState(*home), PlannerState(*goal))


def sensed_everywhere(env):
    """Knowledge map with one sensing disk covering the whole box and every obstacle."""
    xmin, ymin, xmax, ymax = env.bounds
    cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
    r = math.hypot(xmax - xmin, ymax - ymin)
    return KnowledgeMap(
        env.bounds,
        np.array([[cx, cy, r]]),
        tuple(range(env.n_obstacles)),
        env.centers,
        env.radii,
    )


@pytest.fixture(scope="session")
def shipped():
    return {name: load_scenario(shipped_scenario(name)) for name in ("open", "deadend", "enclosed_goal")}


def random_scene(rng):
    """Random knowledge map plus a footprint query for oracle comparisons."""
    bounds = (0.0, 0.0, 10.0, 10.0)
    n_disks = int(rng.integers(1, 7))
    disks = np.c_[rng.uniform(1, 9, (n_disks, 2)), rng.uniform(0.5, 3.0, n_disks)]
    n_obs = int(rng.integers(0, 5))
    centers = rng.uniform(0, 10, (n_obs, 2))
    radii = rng.uniform(0.2, 1.0, n_obs)
    kmap = KnowledgeMap(bounds, disks, tuple(range(n_obs)), centers, radii)
    # bias queries towards sensed disks so both answers are common
    k = int(rng.integers(n_disks))
    point = disks[k, :2] + rng.normal(scale=disks[k, 2] * 0.6, size=2)
    return kmap, point, float(rng.uniform(0.1, 1.0))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines at the end of the session."""
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])
