import io

import numpy as np
import pytest

from faery import EvolutionForest, UnknownNodeError

from oracles import recompute_depth, reference_forest


def test_roots_have_depth_zero_and_distinct_ids():
    f = EvolutionForest()
    ids = [f.register_root(i) for i in range(3)]
    assert len(set(ids)) == 3
    assert [f.depth(i) for i in ids] == [0, 0, 0]
    assert all(f.parent(i) is None for i in ids)


def test_duplicate_prior_index_allowed_at_forest_level():
    f = EvolutionForest()
    a = f.register_root(4)
    b = f.register_root(4)
    assert a != b
    assert f.root_index(a) == f.root_index(b) == 4


def test_chain_depth():
    f = EvolutionForest()
    node = f.register_root(0)
    for _ in range(3):
        node = f.register_child(node)
    assert f.depth(node) == 3


def test_second_tree_solution_depth_is_four():
    f, solved = reference_forest()
    depth_by_root = {}
    for s in solved:
        depth_by_root.setdefault(f.root_index(s), []).append(f.depth(s))
    assert sorted(depth_by_root[1]) == [3, 4]


def test_children_inherit_root_index():
    f = EvolutionForest()
    a = f.register_root(0)
    b = f.register_root(1)
    ca = f.register_child(f.register_child(a))
    cb = f.register_child(f.register_child(b))
    assert f.root_index(ca) == 0
    assert f.root_index(cb) == 1


def test_unknown_parent_rejected():
    f = EvolutionForest()
    f.register_root(0)
    with pytest.raises(UnknownNodeError):
        f.register_child(99)


def test_root_stats_reference_forest():
    f, solved = reference_forest()
    stats = f.root_stats(solved)
    assert stats[0].solution_count == 1
    assert stats[1].solution_count == 2
    assert stats[2].solution_count == 2
    assert sorted(stats[0].solution_depths) == [2]
    assert sorted(stats[1].solution_depths) == [3, 4]
    assert sorted(stats[2].solution_depths) == [2, 4]


def test_root_stats_no_solutions():
    f, _ = reference_forest()
    stats = f.root_stats(set())
    assert all(s.solution_count == 0 and s.solution_depths == [] for s in
               stats.values())
    assert set(stats) == {0, 1, 2}


def test_root_marked_solved_counts_at_depth_zero():
    f = EvolutionForest()
    r = f.register_root(7)
    stats = f.root_stats({r})
    assert stats[7].solution_count == 1
    assert stats[7].solution_depths == [0]


def test_solution_counts_partition_solved_set(rng):
    f, ids = _random_forest(rng, 500, roots=6)
    solved = set(rng.choice(ids, size=80, replace=False).tolist())
    stats = f.root_stats(solved)
    assert sum(s.solution_count for s in stats.values()) == len(solved)


def test_incremental_depth_matches_parent_walk(rng):
    f, ids = _random_forest(rng, 2000, roots=5)
    for node in ids:
        assert f.depth(node) == recompute_depth(f, node)


def test_csv_dump_round_trips():
    f, solved = reference_forest()
    buf = io.StringIO()
    f.write_csv(buf, solved)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "node_id,parent_id,root_index,depth,solved"
    assert len(lines) == len(f) + 1
    solved_rows = [line for line in lines[1:] if line.endswith(",1")]
    assert len(solved_rows) == len(solved)


def _random_forest(rng, size, roots):
    f = EvolutionForest()
    ids = [f.register_root(i) for i in range(roots)]
    while len(ids) < size:
        ids.append(f.register_child(int(rng.integers(len(ids)))))
    return f, ids
