"""Procedural mazes and the 2-d point-robot navigation tasks built on them.

Layouts are perfect mazes (the open-border graph over cells is a spanning
tree) carved by depth-first search with backtracking on an n x n grid.
World coordinates span [0, n] x [0, n]; cell (x, y) covers the unit square
with corner (x, y), the start cell sits bottom-left, the goal cell
top-left.

The robot is a unit-mass disc driven by a 2-d force action:

    velocity <- damping * velocity + dt * force_scale * action
    position <- position + dt * velocity      (x axis, then y axis)

Collisions cancel the blocked velocity component and leave the tangential
one (sliding), raising the corresponding bumper. The robot senses two
bumpers (left/right of its heading, both on a head-on contact) and three
rangefinders at -45/0/+45 degrees from the heading, clamped to range_max.
The heading is the direction of the current velocity, +x when nearly at
rest. Reward is sparse: 1 on first entry into the goal cell, which also
ends the episode; fitness is the discounted return gamma**t_goal. The
behavior descriptor of an episode is the final position scaled to [0,1]^2.

Episode simulation is vectorized across a batch of genomes; the batched
path is the production path and `MazeTask.evaluate` is a batch of one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, DimensionMismatchError
from .networks import NetworkShape, decode
from .qd import EvalResult
from .rngs import RngKey

_CROSS_TOL = 1e-9  # head-on bumper threshold on the heading/contact cross product


@dataclass(frozen=True)
class MazeLayout:
    """Wall flags of one maze; immutable and shareable."""

    n: int
    open_east: np.ndarray  # (n, n) bool, border between (x, y) and (x+1, y)
    open_north: np.ndarray  # (n, n) bool, border between (x, y) and (x, y+1)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("maze side must be >= 1")
        for name in ("open_east", "open_north"):
            arr = np.asarray(getattr(self, name), dtype=bool)
            if arr.shape != (self.n, self.n):
                raise ValueError(f"{name} must have shape (n, n)")
            object.__setattr__(self, name, arr)
        if self.n > 0 and (self.open_east[self.n - 1, :].any()
                           or self.open_north[:, self.n - 1].any()):
            raise ValueError("outer boundary must be closed")

    @property
    def start_cell(self) -> tuple[int, int]:
        return (0, 0)

    @property
    def goal_cell(self) -> tuple[int, int]:
        return (0, self.n - 1)

    def open_borders(self, x: int, y: int) -> dict[str, bool]:
        """Per-cell north/east/south/west open flags (symmetric by sharing)."""
        return {
            "north": y + 1 < self.n and bool(self.open_north[x, y]),
            "east": x + 1 < self.n and bool(self.open_east[x, y]),
            "south": y > 0 and bool(self.open_north[x, y - 1]),
            "west": x > 0 and bool(self.open_east[x - 1, y]),
        }

    def open_internal_border_count(self) -> int:
        return int(self.open_east[: self.n - 1, :].sum()
                   + self.open_north[:, : self.n - 1].sum())

    def wall_tables(self):
        """Blocking lookup tables for the simulator and the rangefinders.

        wall_v[k, j] is True when the vertical line x=k blocks row j;
        wall_h[m, i] is True when the horizontal line y=m blocks column i.
        """
        n = self.n
        wall_v = np.ones((n + 1, n), dtype=bool)
        wall_v[1:n, :] = ~self.open_east[: n - 1, :]
        wall_h = np.ones((n + 1, n), dtype=bool)
        wall_h[1:n, :] = ~self.open_north[:, : n - 1].T
        return wall_v, wall_h

    def canonical_hex(self) -> str:
        """Row-major east/south flag bitstring, hex-packed; dedup key."""
        bits = []
        for y in range(self.n):
            for x in range(self.n):
                bits.append(x + 1 < self.n and bool(self.open_east[x, y]))
                bits.append(y > 0 and bool(self.open_north[x, y - 1]))
        packed = np.packbits(np.array(bits, dtype=np.uint8))
        return packed.tobytes().hex()

    @classmethod
    def from_canonical_hex(cls, n: int, hexstring: str) -> "MazeLayout":
        bits = np.unpackbits(np.frombuffer(bytes.fromhex(hexstring), dtype=np.uint8))
        if bits.size < 2 * n * n:
            raise ValueError("hex string too short for maze side")
        open_east = np.zeros((n, n), dtype=bool)
        open_north = np.zeros((n, n), dtype=bool)
        i = 0
        for y in range(n):
            for x in range(n):
                if bits[i] and x + 1 < n:
                    open_east[x, y] = True
                if bits[i + 1] and y > 0:
                    open_north[x, y - 1] = True
                i += 2
        return cls(n, open_east, open_north)


def generate_maze(n: int, rng) -> MazeLayout:
    """Carve a perfect maze by depth-first search with backtracking."""
    open_east = np.zeros((n, n), dtype=bool)
    open_north = np.zeros((n, n), dtype=bool)
    if n == 1:
        return MazeLayout(n, open_east, open_north)
    visited = np.zeros((n, n), dtype=bool)
    stack = [(0, 0)]
    visited[0, 0] = True
    while stack:
        x, y = stack[-1]
        neighbors = []
        if x + 1 < n and not visited[x + 1, y]:
            neighbors.append((x + 1, y))
        if x > 0 and not visited[x - 1, y]:
            neighbors.append((x - 1, y))
        if y + 1 < n and not visited[x, y + 1]:
            neighbors.append((x, y + 1))
        if y > 0 and not visited[x, y - 1]:
            neighbors.append((x, y - 1))
        if not neighbors:
            stack.pop()
            continue
        nx, ny = neighbors[int(rng.integers(len(neighbors)))]
        if nx != x:
            open_east[min(x, nx), y] = True
        else:
            open_north[x, min(y, ny)] = True
        visited[nx, ny] = True
        stack.append((nx, ny))
    return MazeLayout(n, open_east, open_north)


@dataclass(frozen=True)
class SimParams:
    """Dynamics constants.

    The speed limit dt * force_scale / (1 - damping) caps the per-step
    displacement at dt times that; it must stay below one cell so a step
    never crosses more than one wall line per axis.
    """

    dt: float = 0.1
    damping: float = 0.9
    force_scale: float = 1.0
    radius: float = 0.1
    heading_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        max_step = self.dt * self.dt * self.force_scale / (1.0 - self.damping)
        if max_step >= 0.9:
            raise ValueError(
                f"per-step displacement bound {max_step:.3f} too large; "
                "reduce dt or force_scale"
            )
        if not 0.0 < self.radius < 0.5:
            raise ValueError("radius must lie in (0, 0.5)")


def default_range_max(n: int) -> float:
    """Rangefinder reach: about one tenth of the environment."""
    return 0.1 * n


# ---------------------------------------------------------------------------
# vectorized simulation core (one row per episode)


def _axis_move(pos_u, pos_w, du, walls, n, radius):
    """Resolve one axis of motion against the axis' wall table.

    pos_u moves by du; pos_w is the cross coordinate whose band
    (pos_w - r, pos_w + r) selects the wall rows that can block. Returns
    (new_u, blocked) where blocked episodes were clamped at the wall.
    """
    forward = du > 0
    k = np.where(forward, np.floor(pos_u + du + radius),
                 np.ceil(pos_u + du - radius))
    crossing = np.where(forward, k >= pos_u + radius, k <= pos_u - radius)
    crossing &= du != 0.0
    ki = np.minimum(np.maximum(k.astype(np.int64), 0), n)

    j_a = np.minimum(np.maximum(np.floor(pos_w - radius).astype(np.int64), 0), n - 1)
    j_b_f = np.floor(pos_w + radius)
    j_b = np.minimum(np.maximum(j_b_f.astype(np.int64), 0), n - 1)
    b_valid = (j_b_f < pos_w + radius) & (j_b_f <= n - 1) & (j_b != j_a)

    blocked = crossing & (walls[ki, j_a] | (b_valid & walls[ki, j_b]))
    limit = np.where(forward, k - radius, k + radius)
    new_u = np.where(blocked, limit, pos_u + du)
    return new_u, blocked


def _raycast(px, py, dx, dy, wall_v, wall_h, n, range_max):
    """Distance along (dx, dy) to the nearest closed border, capped.

    Vectorized over any number of rays; walks the grid lines outward, at
    most ceil(range_max) + 1 of them per axis.
    """
    best = np.full(px.shape, range_max)
    lines = math.ceil(range_max) + 1
    for u0, w0, du, dw, walls in ((px, py, dx, dy, wall_v),
                                  (py, px, dy, dx, wall_h)):
        moving = np.abs(du) > 1e-12
        forward = du > 0
        base = np.where(forward, np.floor(u0), np.ceil(u0))
        sign = np.where(forward, 1.0, -1.0)
        safe_du = np.where(moving, du, 1.0)
        for step in range(1, lines + 1):
            k = base + sign * step
            t = (k - u0) / safe_du
            valid = moving & (t > 0.0) & (t < best)
            t_safe = np.where(valid, t, 0.0)
            w_hit = w0 + t_safe * dw
            rows = np.minimum(np.maximum(np.floor(w_hit).astype(np.int64), 0), n - 1)
            ki = np.minimum(np.maximum(k.astype(np.int64), 0), n)
            hit = valid & (w_hit >= 0.0) & (w_hit <= n) & walls[ki, rows]
            best = np.where(hit, t, best)
    return best


_SQ2 = math.sqrt(0.5)


def _observe(pos, vel, contact_x, contact_y, wall_v, wall_h, n, range_max, params):
    vx, vy = vel[:, 0], vel[:, 1]
    speed = np.hypot(vx, vy)
    still = speed < params.heading_eps
    with np.errstate(divide="ignore", invalid="ignore"):
        hx = np.where(still, 1.0, vx / speed)
        hy = np.where(still, 0.0, vy / speed)

    left = np.zeros(len(pos), dtype=bool)
    right = np.zeros(len(pos), dtype=bool)
    for cx, cy in ((contact_x, None), (None, contact_y)):
        if cx is not None:
            present = cx != 0
            cross = -hy * cx
        else:
            present = cy != 0
            cross = hx * cy
        left |= present & (cross >= -_CROSS_TOL)
        right |= present & (cross <= _CROSS_TOL)

    # all three rays (heading rotated by -45, 0, +45 degrees) in one pass
    px, py = pos[:, 0], pos[:, 1]
    ray_dx = np.concatenate([_SQ2 * (hx + hy), hx, _SQ2 * (hx - hy)])
    ray_dy = np.concatenate([_SQ2 * (hy - hx), hy, _SQ2 * (hy + hx)])
    ranges = _raycast(np.tile(px, 3), np.tile(py, 3), ray_dx, ray_dy,
                      wall_v, wall_h, n, range_max).reshape(3, len(pos))
    obs = np.empty((len(pos), 5))
    obs[:, 0] = left
    obs[:, 1] = right
    obs[:, 2] = ranges[0]
    obs[:, 3] = ranges[1]
    obs[:, 4] = ranges[2]
    return obs


def _forward_policy(layers, obs):
    h = obs
    for w, b in layers:
        h = np.tanh(np.matmul(w, h[..., None])[..., 0] + b)
    return h


def simulate_episodes(
    layout_tables,
    n: int,
    goal_cell,
    layers,
    init_pos,
    params: SimParams,
    episode_length: int,
    gamma: float,
    range_max: float,
):
    """Run a batch of closed-loop episodes in lockstep.

    layers are batched per-layer (weights, biases) stacks; episodes that
    enter the goal cell drop out of the batch. Returns (fitness,
    final_positions, solved).
    """
    wall_v, wall_h = layout_tables
    batch = layers[0][0].shape[0]
    gx, gy = goal_cell

    fitness = np.zeros(batch)
    solved = np.zeros(batch, dtype=bool)
    final_pos = np.tile(np.asarray(init_pos, dtype=np.float64), (batch, 1))

    active = np.arange(batch)
    pos = final_pos.copy()
    vel = np.zeros((batch, 2))
    zeros = np.zeros(batch, dtype=np.int64)
    obs = _observe(pos, vel, zeros, zeros, wall_v, wall_h, n, range_max, params)

    for t in range(episode_length):
        action = _forward_policy(layers, obs)
        vel = params.damping * vel + params.dt * params.force_scale * action
        new_x, blocked_x = _axis_move(
            pos[:, 0], pos[:, 1], params.dt * vel[:, 0], wall_v, n, params.radius
        )
        contact_x = np.where(blocked_x, np.sign(vel[:, 0]).astype(np.int64), 0)
        vel[:, 0] = np.where(blocked_x, 0.0, vel[:, 0])
        pos[:, 0] = new_x
        new_y, blocked_y = _axis_move(
            pos[:, 1], pos[:, 0], params.dt * vel[:, 1], wall_h, n, params.radius
        )
        contact_y = np.where(blocked_y, np.sign(vel[:, 1]).astype(np.int64), 0)
        vel[:, 1] = np.where(blocked_y, 0.0, vel[:, 1])
        pos[:, 1] = new_y

        reached = (np.floor(pos[:, 0]).astype(np.int64) == gx) & (
            np.floor(pos[:, 1]).astype(np.int64) == gy
        )
        if reached.any():
            idx = active[reached]
            fitness[idx] = gamma**t
            solved[idx] = True
            final_pos[idx] = pos[reached]
            keep = ~reached
            active = active[keep]
            if active.size == 0:
                return fitness, final_pos, solved
            pos = pos[keep]
            vel = vel[keep]
            contact_x = contact_x[keep]
            contact_y = contact_y[keep]
            layers = [(w[keep], b[keep]) for w, b in layers]
        obs = _observe(pos, vel, contact_x, contact_y, wall_v, wall_h, n,
                       range_max, params)

    final_pos[active] = pos
    return fitness, final_pos, solved


@dataclass(frozen=True)
class MazeTask:
    """One maze environment with its episode settings baked in."""

    layout: MazeLayout
    shape: NetworkShape
    episode_length: int = 400
    gamma: float = 0.99
    init_position: tuple[float, float] = (0.5, 0.5)
    params: SimParams = field(default_factory=SimParams)

    def __post_init__(self):
        if self.shape.input_dim != 5 or self.shape.output_dim != 2:
            raise ValueError("maze policies need 5 inputs and 2 outputs")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.episode_length < 0:
            raise ValueError("episode_length must be >= 0")

    @property
    def range_max(self) -> float:
        return default_range_max(self.layout.n)

    def evaluate_batch(self, genomes) -> list[EvalResult]:
        if not genomes:
            return []
        want = self.shape.parameter_count
        for g in genomes:
            if len(g.params) != want:
                raise DimensionMismatchError("genome", want, len(g.params))
        matrix = np.stack([g.params for g in genomes])
        layers = decode(matrix, self.shape)
        fitness, final_pos, solved = simulate_episodes(
            self.layout.wall_tables(),
            self.layout.n,
            self.layout.goal_cell,
            layers,
            self.init_position,
            self.params,
            self.episode_length,
            self.gamma,
            self.range_max,
        )
        behaviors = final_pos / self.layout.n
        return [
            EvalResult(float(f), b.copy(), bool(s))
            for f, b, s in zip(fitness, behaviors, solved)
        ]

    def evaluate(self, genome) -> EvalResult:
        return self.evaluate_batch([genome])[0]


def make_task(
    layout: MazeLayout,
    episode_length: int = 400,
    gamma: float = 0.99,
    *,
    hidden_dims=(10, 10, 10),
    init_noise: float = 1e-3,
    rng=None,
    params: SimParams | None = None,
) -> MazeTask:
    """Build the navigation task for one layout.

    The initial position is the start-cell center plus one fixed Gaussian
    perturbation of scale init_noise drawn here, so the task itself stays
    deterministic; pass init_noise=0 (or rng=None) for the exact center.
    """
    params = params or SimParams()
    sx, sy = layout.start_cell
    center = np.array([sx + 0.5, sy + 0.5])
    if rng is not None and init_noise > 0.0:
        center = center + init_noise * rng.standard_normal(2)
        margin = params.radius + 1e-6
        center = np.clip(center, margin, layout.n - margin)
    return MazeTask(
        layout=layout,
        shape=NetworkShape(5, tuple(hidden_dims), 2),
        episode_length=episode_length,
        gamma=gamma,
        init_position=(float(center[0]), float(center[1])),
        params=params,
    )


def generate_dataset(n: int, count_train: int, count_test: int, key: RngKey):
    """Disjoint train/test pools of pairwise-distinct layouts.

    Maze i is generated from the key's child stream i, so every record is
    reproducible from (n, seed=i) alone. Raises DatasetError when the side
    cannot supply enough distinct layouts.
    """
    if count_train < 1 or count_test < 1:
        raise DatasetError("pool sizes must be >= 1")
    need = count_train + count_test
    seen = set()
    records = []  # (seed, layout)
    stall_limit = max(1000, 10 * need)
    stall = 0
    i = 0
    while len(records) < need:
        layout = generate_maze(n, key.child(i).generator())
        code = layout.canonical_hex()
        if code in seen:
            stall += 1
            if stall >= stall_limit:
                raise DatasetError(
                    f"could not find {need} distinct {n}x{n} mazes "
                    f"({len(records)} found after {i + 1} attempts)"
                )
        else:
            seen.add(code)
            records.append((i, layout))
            stall = 0
        i += 1
    return records[:count_train], records[count_train:]


def sample_tasks_from_pool(
    records,
    count: int,
    rng,
    *,
    episode_length: int = 400,
    gamma: float = 0.99,
    init_noise: float = 1e-3,
    hidden_dims=(10, 10, 10),
    params: SimParams | None = None,
) -> list[MazeTask]:
    """Draw `count` distinct layouts from a dataset pool as live tasks."""
    if count > len(records):
        raise ValueError(
            f"cannot sample {count} distinct mazes from a pool of {len(records)}"
        )
    picks = rng.choice(len(records), size=count, replace=False)
    return [
        make_task(
            records[i][1],
            episode_length,
            gamma,
            hidden_dims=hidden_dims,
            init_noise=init_noise,
            rng=rng,
            params=params,
        )
        for i in picks
    ]


def render_ascii(layout: MazeLayout, marks: dict | None = None) -> str:
    """Draw the maze; start and goal cells are marked S and G."""
    n = layout.n
    marks = dict(marks or {})
    marks.setdefault(layout.start_cell, "S")
    marks.setdefault(layout.goal_cell, "G")
    rows = []
    for y in range(n - 1, -1, -1):
        top = ""
        mid = ""
        for x in range(n):
            b = layout.open_borders(x, y)
            top += "+  " if b["north"] else "+--"
            mid += " " if b["west"] else "|"
            mid += f"{marks.get((x, y), ' '):^2}"
        rows.append(top + "+")
        rows.append(mid + ("|" if not layout.open_borders(n - 1, y)["east"] else " "))
    bottom = "".join(
        "+  " if layout.open_borders(x, 0)["south"] else "+--" for x in range(n)
    )
    rows.append(bottom + "+")
    return "\n".join(rows)
