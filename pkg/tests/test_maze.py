import math

import numpy as np
import pytest

from faery import (
    DatasetError,
    Genome,
    MazeLayout,
    SimParams,
    generate_dataset,
    generate_maze,
    make_task,
    master_key,
    random_genome,
    render_ascii,
    sample_tasks_from_pool,
)
from faery.maze import _raycast, default_range_max

from oracles import (
    brute_force_raycast,
    closed_segments,
    flood_fill_cells,
    naive_forward,
    oracle_episode,
)


def _maze(n=8, seed=0):
    return generate_maze(n, master_key(seed).child(0).generator())


# ---------------------------------------------------------------------------
# layout generation


def test_single_cell_maze_degenerates():
    m = _maze(n=1)
    assert m.open_internal_border_count() == 0
    assert m.start_cell == m.goal_cell == (0, 0)


def test_perfect_maze_properties_across_seeds():
    for seed in range(100):
        m = generate_maze(8, master_key(seed).child(0).generator())
        assert m.open_internal_border_count() == 63
        assert len(flood_fill_cells(m)) == 64


def test_wall_symmetry_between_neighbors():
    m = _maze()
    for x in range(7):
        for y in range(7):
            assert m.open_borders(x, y)["east"] == m.open_borders(x + 1, y)["west"]
            assert m.open_borders(x, y)["north"] == m.open_borders(x, y + 1)["south"]


def test_generation_deterministic():
    a = generate_maze(8, master_key(1).child(0).generator())
    b = generate_maze(8, master_key(1).child(0).generator())
    assert a.canonical_hex() == b.canonical_hex()


def test_canonical_hex_round_trip():
    m = _maze(n=10, seed=3)
    again = MazeLayout.from_canonical_hex(10, m.canonical_hex())
    assert np.array_equal(m.open_east, again.open_east)
    assert np.array_equal(m.open_north, again.open_north)


def test_start_goal_cells():
    m = _maze()
    assert m.start_cell == (0, 0)
    assert m.goal_cell == (0, 7)


def test_render_ascii_shape():
    art = render_ascii(_maze(n=4))
    lines = art.splitlines()
    assert len(lines) == 2 * 4 + 1
    assert "S" in art and "G" in art


# ---------------------------------------------------------------------------
# rangefinders


def test_rangefinder_against_brute_force(rng):
    for seed in range(5):
        layout = generate_maze(8, master_key(seed).child(0).generator())
        tables = layout.wall_tables()
        range_max = default_range_max(8)
        for _ in range(200):
            px, py = rng.uniform(0.15, 7.85, size=2)
            angle = rng.uniform(0, 2 * math.pi)
            dx, dy = math.cos(angle), math.sin(angle)
            got = _raycast(
                np.array([px]), np.array([py]), np.array([dx]), np.array([dy]),
                tables[0], tables[1], 8, range_max,
            )[0]
            want = brute_force_raycast(layout, px, py, dx, dy, range_max)
            assert got == pytest.approx(want, abs=1e-9)


def test_rangefinder_known_distance():
    # empty 1x1 world: boundary walls only
    layout = MazeLayout(1, np.zeros((1, 1), bool), np.zeros((1, 1), bool))
    tables = layout.wall_tables()
    got = _raycast(np.array([0.7]), np.array([0.5]), np.array([1.0]),
                   np.array([0.0]), tables[0], tables[1], 1, 10.0)[0]
    assert got == pytest.approx(0.3, abs=1e-12)


def test_rangefinder_clamps_to_range_max():
    layout = MazeLayout(1, np.zeros((1, 1), bool), np.zeros((1, 1), bool))
    tables = layout.wall_tables()
    got = _raycast(np.array([0.7]), np.array([0.5]), np.array([1.0]),
                   np.array([0.0]), tables[0], tables[1], 1, 0.1)[0]
    assert got == 0.1


# ---------------------------------------------------------------------------
# episode semantics


def _zero_policy(task):
    return Genome(np.zeros(task.shape.parameter_count))


def test_null_policy_stays_at_start():
    task = make_task(_maze(), episode_length=50, init_noise=0.0)
    res = task.evaluate(_zero_policy(task))
    assert not res.solved
    assert res.fitness == 0.0
    assert np.allclose(res.behavior * 8, [0.5, 0.5], atol=1e-12)


def test_constant_push_hits_wall_and_stops():
    # fully walled 2x2 world, policy pushes +x into the cell's east border
    layout = MazeLayout(2, np.zeros((2, 2), bool), np.zeros((2, 2), bool))
    task = make_task(layout, episode_length=60, init_noise=0.0)
    params = np.zeros(task.shape.parameter_count)
    params[-2] = 1.0  # x-action bias -> tanh(1) forever
    res = task.evaluate(Genome(params))
    assert not res.solved
    # pressed against the wall at x = 1 - radius
    assert res.behavior[0] * 2 == pytest.approx(0.9, abs=1e-9)
    assert res.behavior[1] * 2 == pytest.approx(0.5, abs=1e-12)


def test_open_corridor_reaches_goal_with_hand_integrated_fitness():
    # carve column 0 fully open from start to goal
    n = 6
    open_north = np.zeros((n, n), bool)
    open_north[0, : n - 1] = True
    layout = MazeLayout(n, np.zeros((n, n), bool), open_north)
    task = make_task(layout, episode_length=400, gamma=0.99, init_noise=0.0)
    params = np.zeros(task.shape.parameter_count)
    params[-1] = 2.0  # constant +y action tanh(2)
    res = task.evaluate(Genome(params, -3.0, 3.0))
    assert res.solved

    # independent integration of the velocity recurrence; the first action
    # is discounted at t = 0
    action = math.tanh(2.0)
    y, vy = 0.5, 0.0
    for t in range(400):
        vy = 0.9 * vy + 0.1 * action
        y += 0.1 * vy
        if math.floor(y) == n - 1:
            break
    assert res.fitness == pytest.approx(0.99**t, abs=1e-12)
    assert res.behavior[1] == pytest.approx(y / n, abs=1e-9)


def test_episode_deterministic():
    task = make_task(_maze(), episode_length=100, init_noise=0.0)
    g = random_genome(task.shape, master_key(2).child(0).generator())
    a = task.evaluate(g)
    b = task.evaluate(g)
    assert a.fitness == b.fitness
    assert np.array_equal(a.behavior, b.behavior)


def test_batch_matches_single_evaluation():
    task = make_task(_maze(seed=5), episode_length=80, init_noise=0.0)
    rng = master_key(3).child(0).generator()
    genomes = [random_genome(task.shape, rng) for _ in range(6)]
    batch = task.evaluate_batch(genomes)
    for g, expect in zip(genomes, batch):
        single = task.evaluate(g)
        assert single.fitness == expect.fitness
        assert np.array_equal(single.behavior, expect.behavior)
        assert single.solved == expect.solved


def test_episode_matches_scalar_oracle():
    rng = master_key(17).child(0).generator()
    for seed in range(4):
        layout = generate_maze(5, master_key(seed).child(0).generator())
        task = make_task(layout, episode_length=40, init_noise=0.0)
        for _ in range(3):
            g = random_genome(task.shape, rng)
            got = task.evaluate(g)
            fitness, final, solved = oracle_episode(
                layout, g.params, task.shape.layer_dims, task.init_position,
                task.params, task.episode_length, task.gamma, task.range_max,
            )
            assert got.solved == solved
            assert got.fitness == pytest.approx(fitness, abs=1e-9)
            assert np.allclose(got.behavior * 5, final, atol=1e-9)


def test_robot_never_penetrates_walls(rng):
    # final positions keep the full body radius away from every closed wall
    for seed in range(3):
        layout = generate_maze(6, master_key(seed).child(0).generator())
        task = make_task(layout, episode_length=150, init_noise=0.0)
        genomes = [random_genome(task.shape, rng) for _ in range(12)]
        for res in task.evaluate_batch(genomes):
            x, y = res.behavior * 6
            assert 0.1 - 1e-9 <= x <= 6 - 0.1 + 1e-9
            assert 0.1 - 1e-9 <= y <= 6 - 0.1 + 1e-9
            dist = min(
                _point_segment_distance(x, y, seg) for seg in
                closed_segments(layout)
            )
            assert dist >= 0.1 - 1e-9


def test_behavior_lies_in_unit_square(rng):
    task = make_task(_maze(seed=9), episode_length=120, init_noise=0.0)
    genomes = [random_genome(task.shape, rng) for _ in range(16)]
    for res in task.evaluate_batch(genomes):
        assert 0.0 <= res.behavior[0] <= 1.0
        assert 0.0 <= res.behavior[1] <= 1.0
        if res.solved:
            assert 0.0 < res.fitness <= 1.0


def test_initial_perturbation_fixed_per_task():
    layout = _maze(seed=4)
    rng = master_key(6).child(0).generator()
    task = make_task(layout, episode_length=10, init_noise=1e-3, rng=rng)
    assert task.init_position != (0.5, 0.5)
    g = _zero_policy(task)
    assert task.evaluate(g).behavior.tolist() == task.evaluate(g).behavior.tolist()


def test_wrong_genome_length_reports_sizes():
    task = make_task(_maze(), episode_length=5)
    from faery import DimensionMismatchError

    with pytest.raises(DimensionMismatchError) as err:
        task.evaluate(Genome(np.zeros(10)))
    assert err.value.expected == task.shape.parameter_count
    assert err.value.actual == 10


def _point_segment_distance(x, y, seg):
    axis, k, lo, hi = seg
    if axis == 0:
        du, dw = x - k, min(max(y, lo), hi) - y
    else:
        du, dw = y - k, min(max(x, lo), hi) - x
    return math.hypot(du, dw)


# ---------------------------------------------------------------------------
# datasets


def test_generate_dataset_disjoint_and_distinct():
    train, test = generate_dataset(5, 12, 5, master_key(21))
    codes = [layout.canonical_hex() for _, layout in train + test]
    assert len(set(codes)) == 17
    assert len(train) == 12 and len(test) == 5


def test_generate_dataset_deterministic():
    a = generate_dataset(4, 6, 3, master_key(9))
    b = generate_dataset(4, 6, 3, master_key(9))
    assert [l.canonical_hex() for _, l in a[0]] == [
        l.canonical_hex() for _, l in b[0]
    ]


def test_generate_dataset_pigeonhole_error():
    with pytest.raises(DatasetError):
        generate_dataset(1, 2, 1, master_key(0))


def test_sample_tasks_draws_distinct_mazes():
    train, _ = generate_dataset(5, 10, 2, master_key(30))
    rng = master_key(31).child(0).generator()
    tasks = sample_tasks_from_pool(train, 6, rng, episode_length=10)
    assert len({t.layout.canonical_hex() for t in tasks}) == 6
    with pytest.raises(ValueError):
        sample_tasks_from_pool(train, 11, rng)


def test_sim_params_validation():
    with pytest.raises(ValueError):
        SimParams(dt=1.0, damping=0.0, force_scale=1.0)
    with pytest.raises(ValueError):
        SimParams(radius=0.6)
