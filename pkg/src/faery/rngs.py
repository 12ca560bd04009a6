"""Deterministic random-stream derivation.

Every stochastic component draws from a generator derived from the master
seed plus a logical integer path (meta-generation, split, task index, ...).
Streams are therefore independent of thread/process scheduling, which is
what makes runs reproducible at any parallelism degree and resumable from
checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Path components for the fixed stream roles.
PRIOR_INIT = 0
OUTER_MUTATION = 1
TASK_SAMPLING = 2
QD_INSTANCE = 3
TRAIN_SPLIT = 0
TEST_SPLIT = 1


@dataclass(frozen=True)
class RngKey:
    """A logical address of one random stream under a master seed."""

    path: tuple[int, ...]

    def child(self, *indices: int) -> "RngKey":
        return RngKey(self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(list(self.path)))


def master_key(seed: int) -> RngKey:
    if seed < 0:
        raise ValueError("master seed must be non-negative")
    return RngKey((int(seed),))
