"""2D arena, ballistic random-walk motion, visibility, and comm topology.

The arena is an axis-aligned rectangle centered at the origin with
axis-aligned rectangular obstacles. Agents move at constant speed and
reflect specularly off walls and obstacle edges; headings are resampled by a
memoryless exponential turn clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ContractError
from .vocab import PersonAttributes

Vec2 = tuple[float, float]

TAU = 2.0 * math.pi
_EPS = 1e-12
_MAX_REFLECTIONS = 4


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x0, y0) to (x1, y1), x0 < x1 and y0 < y1."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ContractError(f"degenerate rectangle {self!r}")

    def contains_interior(self, x: float, y: float) -> bool:
        return self.x0 < x < self.x1 and self.y0 < y < self.y1


@dataclass(frozen=True)
class Arena:
    """Rectangular world centered at the origin."""

    width: float = 25.0
    height: float = 25.0
    obstacles: tuple[Rect, ...] = ()

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ContractError("arena width and height must be positive")
        for r in self.obstacles:
            if not (self.xmin <= r.x0 and r.x1 <= self.xmax
                    and self.ymin <= r.y0 and r.y1 <= self.ymax):
                raise ContractError(f"obstacle {r!r} sticks out of the arena")

    @property
    def xmin(self) -> float:
        return -self.width / 2.0

    @property
    def xmax(self) -> float:
        return self.width / 2.0

    @property
    def ymin(self) -> float:
        return -self.height / 2.0

    @property
    def ymax(self) -> float:
        return self.height / 2.0

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def in_obstacle(self, x: float, y: float) -> bool:
        return any(r.contains_interior(x, y) for r in self.obstacles)


@dataclass
class PersonState:
    person_id: int
    position: Vec2
    heading: float
    speed: float
    attributes: PersonAttributes


@dataclass
class RobotState:
    robot_id: int
    position: Vec2
    heading: float
    speed: float
    fov_half_angle: float
    sensing_range: float
    comm_range: float
    lambda_turn: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.fov_half_angle <= math.pi):
            raise ContractError("fov_half_angle must be in (0, pi]")
        if self.sensing_range <= 0 or self.comm_range <= 0:
            raise ContractError("sensing_range and comm_range must be positive")


def _first_hit(x: float, y: float, dx: float, dy: float, limit: float,
               arena: Arena):
    """Earliest surface contact along the ray within ``limit``.

    Returns (t, [(axis, snap_coord), ...]) or None. Multiple entries mean a
    corner hit where both components reflect. Grazing contact that never
    enters an obstacle interior is not a hit.
    """
    hits: list[tuple[float, str, float]] = []
    if dx > 0:
        hits.append(((arena.xmax - x) / dx, "x", arena.xmax))
    elif dx < 0:
        hits.append(((arena.xmin - x) / dx, "x", arena.xmin))
    if dy > 0:
        hits.append(((arena.ymax - y) / dy, "y", arena.ymax))
    elif dy < 0:
        hits.append(((arena.ymin - y) / dy, "y", arena.ymin))
    hits = [(max(t, 0.0), axis, snap) for t, axis, snap in hits if -_EPS <= t <= limit]

    for r in arena.obstacles:
        if dx == 0.0:
            if not (r.x0 < x < r.x1):
                continue
            tx0, tx1 = -math.inf, math.inf
        else:
            a = (r.x0 - x) / dx
            b = (r.x1 - x) / dx
            tx0, tx1 = (a, b) if a < b else (b, a)
        if dy == 0.0:
            if not (r.y0 < y < r.y1):
                continue
            ty0, ty1 = -math.inf, math.inf
        else:
            a = (r.y0 - y) / dy
            b = (r.y1 - y) / dy
            ty0, ty1 = (a, b) if a < b else (b, a)
        enter = max(tx0, ty0)
        leave = min(tx1, ty1)
        # Strict inequality: touching an edge or sliding along it is not entry.
        if enter >= leave or leave <= _EPS or enter > limit or enter < -_EPS:
            continue
        t = max(enter, 0.0)
        if abs(tx0 - ty0) <= _EPS and math.isfinite(tx0) and math.isfinite(ty0):
            hits.append((t, "x", r.x0 if dx > 0 else r.x1))
            hits.append((t, "y", r.y0 if dy > 0 else r.y1))
        elif tx0 > ty0:
            hits.append((t, "x", r.x0 if dx > 0 else r.x1))
        else:
            hits.append((t, "y", r.y0 if dy > 0 else r.y1))

    if not hits:
        return None
    t_min = min(t for t, _, _ in hits)
    chosen = [(axis, snap) for t, axis, snap in hits if t <= t_min + _EPS]
    return t_min, chosen


def _push_out(x: float, y: float, arena: Arena) -> Vec2:
    """Clamp into the arena and nudge out of any obstacle interior."""
    x = min(max(x, arena.xmin), arena.xmax)
    y = min(max(y, arena.ymin), arena.ymax)
    for r in arena.obstacles:
        if r.contains_interior(x, y):
            moves = [
                (x - r.x0, (r.x0, y)), (r.x1 - x, (r.x1, y)),
                (y - r.y0, (x, r.y0)), (r.y1 - y, (x, r.y1)),
            ]
            _, (x, y) = min(moves, key=lambda m: m[0])
    return x, y


def ballistic_step(
    position: Vec2,
    heading: float,
    speed: float,
    dt: float,
    arena: Arena,
    lambda_turn: float,
    rng,
) -> tuple[Vec2, float]:
    """Advance one tick of the ballistic random walk.

    Moves ``speed * dt`` along the heading with specular reflection at walls
    and obstacle edges (at most 4 reflections, then the step is truncated).
    Independently, with probability 1 - exp(-lambda_turn * dt) the heading is
    resampled uniformly from [0, 2pi).
    """
    x, y = position
    if not arena.contains(x, y) or arena.in_obstacle(x, y):
        raise ContractError(f"position {position!r} outside the free space")
    if dt < 0 or speed < 0 or lambda_turn < 0:
        raise ContractError("dt, speed and lambda_turn must be non-negative")

    dx, dy = math.cos(heading), math.sin(heading)
    remaining = speed * dt
    reflected = False
    for _ in range(_MAX_REFLECTIONS):
        if remaining <= 0.0:
            break
        hit = _first_hit(x, y, dx, dy, remaining, arena)
        if hit is None:
            x += dx * remaining
            y += dy * remaining
            remaining = 0.0
            break
        t, surfaces = hit
        x += dx * t
        y += dy * t
        for axis, snap in surfaces:
            if axis == "x":
                x = snap
                dx = -dx
            else:
                y = snap
                dy = -dy
        reflected = True
        remaining -= t
    # Reflections exhausted with distance left: the leftover is dropped.

    x, y = _push_out(x, y, arena)
    new_heading = math.atan2(dy, dx) % TAU if reflected else heading
    if rng is not None and rng.random() < -math.expm1(-lambda_turn * dt):
        new_heading = rng.uniform(0.0, TAU)
    return (x, y), new_heading


def segment_blocked(p: Vec2, q: Vec2, obstacles: Iterable[Rect]) -> bool:
    """True iff the open segment (p, q) crosses any obstacle interior.

    Touching a corner or sliding along an edge does not block.
    """
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    for r in obstacles:
        if dx == 0.0:
            if not (r.x0 < px < r.x1):
                continue
            tx0, tx1 = -math.inf, math.inf
        else:
            a = (r.x0 - px) / dx
            b = (r.x1 - px) / dx
            tx0, tx1 = (a, b) if a < b else (b, a)
        if dy == 0.0:
            if not (r.y0 < py < r.y1):
                continue
            ty0, ty1 = -math.inf, math.inf
        else:
            a = (r.y0 - py) / dy
            b = (r.y1 - py) / dy
            ty0, ty1 = (a, b) if a < b else (b, a)
        enter = max(tx0, ty0, 0.0)
        leave = min(tx1, ty1, 1.0)
        if enter < leave:
            return True
    return False


def _angle_diff(a: float, b: float) -> float:
    """Minimal absolute angular difference, in [0, pi]."""
    d = (a - b + math.pi) % TAU - math.pi
    return abs(d)


def visible_people(
    robot: RobotState, people: Sequence[PersonState], arena: Arena
) -> list[int]:
    """IDs of people within range, inside the FOV cone, and unoccluded.

    Distance and angular bounds are inclusive. Order follows the input list.
    """
    rx, ry = robot.position
    out = []
    for person in people:
        px, py = person.position
        d = math.hypot(px - rx, py - ry)
        if d > robot.sensing_range:
            continue
        if d > 0.0:
            bearing = math.atan2(py - ry, px - rx)
            if _angle_diff(bearing, robot.heading) > robot.fov_half_angle:
                continue
        if segment_blocked(robot.position, person.position, arena.obstacles):
            continue
        out.append(person.person_id)
    return out


def comm_pairs(robots: Sequence[RobotState]) -> list[tuple[int, int]]:
    """Unordered robot pairs within mutual communication range.

    A pair communicates iff their distance is at most the smaller of the two
    comm ranges. Pairs are (lower_id, higher_id), sorted.
    """
    ordered = sorted(robots, key=lambda r: r.robot_id)
    pairs = []
    for i, a in enumerate(ordered):
        ax, ay = a.position
        for b in ordered[i + 1:]:
            if a.robot_id == b.robot_id:
                raise ContractError(f"duplicate robot_id {a.robot_id}")
            bx, by = b.position
            if math.hypot(bx - ax, by - ay) <= min(a.comm_range, b.comm_range):
                pairs.append((a.robot_id, b.robot_id))
    return pairs
