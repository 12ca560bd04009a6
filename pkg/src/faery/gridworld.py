"""Grid-bandit task distribution for the meta-objective ablation.

Environments are 40x40 grids with a single goal cell drawn from one of
three zones; an agent is just the one cell it picks (horizon 1), which is
also its behavior descriptor. Fitness is binary: 1 on the goal cell, 0
elsewhere. Mutation nudges the cell by a random increment in one of the
four grid directions. Zone geometry is chosen so that the three zones
separate the two meta-objectives: Z1 is closest to the starting row
(fast adaptation), Z2 carries most of the task mass (polyvalence), and
Z0 is small and remote (covered only when both objectives act together).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import partial
from typing import NamedTuple

import numpy as np

from .meta import MetaConfig, PriorPopulation, run_faery
from .networks import round_robin_parents
from .qd import EvalResult, QdConfig
from .rngs import RngKey

ZONE_NAMES = ("Z0", "Z1", "Z2")
MODE_CODES = {"joint": 0, "f0_only": 1, "f1_only": 2}

_SPLIT_STREAM = 900
_RUN_STREAM = 901


class GridGenome(NamedTuple):
    row: int
    col: int


def _block(rows, cols) -> frozenset:
    return frozenset((r, c) for r in rows for c in cols)


@dataclass(frozen=True)
class GridWorldSpec:
    """Three goal zones at staggered distances from the starting row.

    Z1 (16 cells) is nearest, Z0 (9 cells) small at middle distance off to
    the side, Z2 (84 cells) far but carrying most of the task mass.
    """

    side: int = 40
    z0: frozenset = field(default_factory=lambda: _block(range(11, 14), range(6, 9)))
    z1: frozenset = field(default_factory=lambda: _block(range(5, 9), range(26, 30)))
    z2: frozenset = field(default_factory=lambda: _block(range(27, 33), range(13, 27)))
    init_row: int = 0

    def __post_init__(self):
        zones = self.zones
        for name, cells in zones.items():
            for r, c in cells:
                if not (0 <= r < self.side and 0 <= c < self.side):
                    raise ValueError(f"{name} cell {(r, c)} outside the grid")
        if self.z0 & self.z1 or self.z0 & self.z2 or self.z1 & self.z2:
            raise ValueError("zones must be pairwise disjoint")
        if not len(self.z2) > len(self.z0):
            raise ValueError("Z2 must carry more cells than Z0")
        dist = {n: min(abs(r - self.init_row) for r, _ in cells)
                for n, cells in zones.items()}
        if min(dist, key=dist.get) != "Z1":
            raise ValueError("Z1 must be the zone nearest to the starting row")

    @property
    def zones(self) -> dict[str, frozenset]:
        return {"Z0": self.z0, "Z1": self.z1, "Z2": self.z2}

    def zone_of(self, cell) -> str | None:
        for name, cells in self.zones.items():
            if tuple(cell) in cells:
                return name
        return None


@dataclass(frozen=True)
class GridSplit:
    """Fixed train/test halves of each zone's cells (train gets odd extras)."""

    train: dict[str, tuple]
    test: dict[str, tuple]

    @property
    def train_cells(self) -> tuple:
        return tuple(c for name in ZONE_NAMES for c in self.train[name])

    @property
    def test_cells(self) -> tuple:
        return tuple(c for name in ZONE_NAMES for c in self.test[name])


def split_goal_cells(spec: GridWorldSpec, rng) -> GridSplit:
    train, test = {}, {}
    for name, cells in spec.zones.items():
        ordered = sorted(cells)
        perm = rng.permutation(len(ordered))
        half = (len(ordered) + 1) // 2
        train[name] = tuple(ordered[i] for i in perm[:half])
        test[name] = tuple(ordered[i] for i in perm[half:])
    return GridSplit(train, test)


@dataclass(frozen=True)
class GridTask:
    goal: tuple
    side: int = 40

    def evaluate(self, genome) -> EvalResult:
        hit = (genome.row, genome.col) == tuple(self.goal)
        return EvalResult(
            fitness=1.0 if hit else 0.0,
            behavior=np.array([genome.row, genome.col], dtype=np.float64),
            solved=hit,
        )


def sample_grid_tasks(cells, count: int, rng, side: int = 40) -> list[GridTask]:
    """Uniform draws (with replacement) from the split's goal cells."""
    if not cells:
        raise ValueError("no goal cells to sample from")
    picks = rng.integers(len(cells), size=count)
    return [GridTask(tuple(cells[i]), side) for i in picks]


def grid_mutate(genome: GridGenome, rng, step_max: int = 3, side: int = 40) -> GridGenome:
    """Shift the cell by 1..step_max in one of the four directions, clamped."""
    direction = int(rng.integers(4))
    magnitude = int(rng.integers(1, step_max + 1))
    dr, dc = ((0, -magnitude), (0, magnitude), (-magnitude, 0), (magnitude, 0))[
        direction
    ]
    return GridGenome(
        min(max(genome.row + dr, 0), side - 1),
        min(max(genome.col + dc, 0), side - 1),
    )


def grid_reproduce(population, count, rng, step_max: int = 3, side: int = 40):
    parents = round_robin_parents(len(population), count)
    children = [
        grid_mutate(population[p], rng, step_max=step_max, side=side) for p in parents
    ]
    return children, parents


def initial_grid_population(mu: int, rng, spec: GridWorldSpec):
    """All agents start somewhere on the spec's initial row."""
    cols = rng.integers(spec.side, size=mu)
    return [GridGenome(spec.init_row, int(c)) for c in cols]


def default_ablation_config(mode: str = "joint") -> MetaConfig:
    """The grid experiment setup: 25+25 candidates, 70 meta-generations."""
    return MetaConfig(
        mu=25,
        lambda_=25,
        m_train=25,
        g_outer=70,
        qd=QdConfig(g_qd_max=20, s_max=1, c_lambda=1.0, novelty_k=15,
                    archive_capacity=5000),
        m_test=0,
        objective_mode=mode,
    )


@dataclass
class AblationRun:
    mode: str
    run_index: int
    final_cells: list
    covered: dict[str, bool]
    members_in_zone: dict[str, int]


@dataclass
class AblationReport:
    runs: list[AblationRun]

    def coverage_counts(self, mode: str) -> dict[str, int]:
        rows = [r for r in self.runs if r.mode == mode]
        return {
            name: sum(r.covered[name] for r in rows) for name in ZONE_NAMES
        }


def _run_single_ablation(args) -> AblationRun:
    spec, split, mode, run_index, key, cfg, step_max = args
    reproduce = partial(grid_reproduce, step_max=step_max, side=spec.side)

    def train_sampler(count, rng):
        return sample_grid_tasks(split.train_cells, count, rng, spec.side)

    prior = run_faery(
        train_sampler,
        None,
        cfg,
        key,
        init_population=lambda rng: initial_grid_population(cfg.mu, rng, spec),
        reproduce=reproduce,
    )
    cells = [tuple(g) for g in prior.genomes]
    members = {
        name: sum(1 for c in cells if c in zone)
        for name, zone in spec.zones.items()
    }
    return AblationRun(
        mode=mode,
        run_index=run_index,
        final_cells=cells,
        covered={name: members[name] > 0 for name in ZONE_NAMES},
        members_in_zone=members,
    )


def run_ablation(
    modes,
    runs: int,
    key: RngKey,
    *,
    spec: GridWorldSpec | None = None,
    cfg: MetaConfig | None = None,
    step_max: int = 3,
    executor=None,
) -> AblationReport:
    """Repeat the grid experiment per objective mode and measure zone coverage.

    All runs share one train/test split of the goal cells (derived from the
    key); each (mode, run) pair gets its own rng subtree, so run counts and
    mode subsets can change without perturbing other runs.
    """
    if isinstance(modes, str):
        modes = [modes]
    spec = spec or GridWorldSpec()
    split = split_goal_cells(spec, key.child(_SPLIT_STREAM).generator())
    jobs = []
    for mode in modes:
        run_cfg = (
            replace(cfg, objective_mode=mode) if cfg else default_ablation_config(mode)
        )
        for r in range(runs):
            jobs.append(
                (spec, split, mode, r,
                 key.child(_RUN_STREAM, MODE_CODES[mode], r), run_cfg, step_max)
            )
    if executor is None:
        results = [_run_single_ablation(j) for j in jobs]
    else:
        results = list(executor.map(_run_single_ablation, jobs))
    return AblationReport(list(results))
