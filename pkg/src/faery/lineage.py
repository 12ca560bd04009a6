"""Evolution forest: the genealogy of one QD instance.

Every individual ever evaluated by an instance is a node. Seed individuals
are roots tagged with their index in the candidate (prior + offspring)
population; mutation children point at their parent. Depth counts
mutations from the root and approximates the number of mutations needed to
reach a node from the prior member it descends from.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import UnknownNodeError

NO_PARENT = -1


@dataclass
class RootStats:
    """Per-prior-candidate solution tally: how many, and at which depths."""

    solution_count: int = 0
    solution_depths: list[int] = field(default_factory=list)


class EvolutionForest:
    """Append-only node table (parent, root index, depth), ids are dense ints."""

    def __init__(self):
        self._parent: list[int] = []
        self._root_index: list[int] = []
        self._depth: list[int] = []

    def __len__(self):
        return len(self._parent)

    def register_root(self, prior_index: int) -> int:
        if prior_index < 0:
            raise ValueError("prior index must be non-negative")
        node_id = len(self._parent)
        self._parent.append(NO_PARENT)
        self._root_index.append(int(prior_index))
        self._depth.append(0)
        return node_id

    def register_child(self, parent_id: int) -> int:
        if not 0 <= parent_id < len(self._parent):
            raise UnknownNodeError(parent_id)
        node_id = len(self._parent)
        self._parent.append(int(parent_id))
        self._root_index.append(self._root_index[parent_id])
        self._depth.append(self._depth[parent_id] + 1)
        return node_id

    def parent(self, node_id: int) -> int | None:
        self._check(node_id)
        p = self._parent[node_id]
        return None if p == NO_PARENT else p

    def depth(self, node_id: int) -> int:
        self._check(node_id)
        return self._depth[node_id]

    def root_index(self, node_id: int) -> int:
        self._check(node_id)
        return self._root_index[node_id]

    def root_indices(self) -> set[int]:
        return {
            r for r, p in zip(self._root_index, self._parent) if p == NO_PARENT
        }

    def root_stats(self, solved_node_ids) -> dict[int, RootStats]:
        """Tally solved descendants per prior index, over this forest.

        Prior indices that registered a root but accumulated no solutions
        map to an empty RootStats.
        """
        stats = {idx: RootStats() for idx in self.root_indices()}
        for node_id in sorted(solved_node_ids):
            self._check(node_id)
            entry = stats[self._root_index[node_id]]
            entry.solution_count += 1
            entry.solution_depths.append(self._depth[node_id])
        return stats

    def write_csv(self, stream, solved_node_ids=frozenset()):
        """Dump the node table (id, parent, root_index, depth, solved)."""
        solved = set(solved_node_ids)
        writer = csv.writer(stream)
        writer.writerow(["node_id", "parent_id", "root_index", "depth", "solved"])
        for i in range(len(self._parent)):
            writer.writerow(
                [i, self._parent[i], self._root_index[i], self._depth[i],
                 int(i in solved)]
            )

    def _check(self, node_id: int):
        if not 0 <= node_id < len(self._parent):
            raise UnknownNodeError(node_id)
