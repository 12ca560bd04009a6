import json

import numpy as np
import pytest

from faery import (
    DatasetError,
    Genome,
    MetaGenReport,
    MetaScore,
    NetworkShape,
    PriorPopulation,
    WORST_SENTINEL,
    generate_dataset,
    master_key,
)
from faery.storage import (
    Checkpoint,
    ReportWriter,
    checkpoint_to_json,
    load_checkpoint,
    load_maze_dataset,
    parse_report_rows,
    save_checkpoint,
    save_maze_dataset,
)


def test_maze_dataset_round_trip(tmp_path):
    train, _ = generate_dataset(5, 8, 2, master_key(12))
    path = tmp_path / "pool.txt"
    save_maze_dataset(path, train, 5)
    n, records = load_maze_dataset(path)
    assert n == 5
    assert [seed for seed, _ in records] == [seed for seed, _ in train]
    assert [l.canonical_hex() for _, l in records] == [
        l.canonical_hex() for _, l in train
    ]


def test_maze_dataset_write_is_deterministic(tmp_path):
    train, _ = generate_dataset(4, 5, 2, master_key(1))
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_maze_dataset(a, train, 4)
    save_maze_dataset(b, train, 4)
    assert a.read_bytes() == b.read_bytes()


def test_maze_dataset_header_validated(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("something-else v9 n=4 count=0\n")
    with pytest.raises(DatasetError):
        load_maze_dataset(path)


def _checkpoint(seed=3, mu=4):
    shape = NetworkShape(5, (10, 10, 10), 2)
    rng = np.random.default_rng(0)
    members = []
    for i in range(mu):
        g = Genome(rng.uniform(-1, 1, size=shape.parameter_count))
        score = MetaScore(i, -1.5) if i else MetaScore(0, WORST_SENTINEL)
        members.append((g, score))
    return Checkpoint(seed, 7, shape, -1.0, 1.0, PriorPopulation(members))


def test_checkpoint_round_trip(tmp_path):
    path = tmp_path / "ck.bin"
    ck = _checkpoint()
    save_checkpoint(path, ck)
    loaded = load_checkpoint(path)
    assert loaded.seed == ck.seed
    assert loaded.next_meta_generation == 7
    assert loaded.shape == ck.shape
    assert (loaded.lo, loaded.hi) == (-1.0, 1.0)
    for (g1, s1), (g2, s2) in zip(loaded.prior.members, ck.prior.members):
        assert np.array_equal(g1.params, g2.params)
        assert s1 == s2


def test_checkpoint_save_load_save_byte_identical(tmp_path):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    save_checkpoint(a, _checkpoint())
    save_checkpoint(b, load_checkpoint(a))
    assert a.read_bytes() == b.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 40)
    from faery import CheckpointError

    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_json_export_lossless():
    ck = _checkpoint()
    obj = json.loads(checkpoint_to_json(ck))
    assert obj["format_version"] == 1
    assert obj["prior"][0]["score"]["adaptation"] == "-inf"
    assert obj["prior"][1]["score"]["adaptation"] == -1.5
    params = np.array(obj["prior"][2]["params"])
    assert np.array_equal(params, ck.prior.genomes[2].params)


def _report(gen, split, solved=0.5, mean=3.0):
    return MetaGenReport(
        meta_generation=gen,
        split=split,
        task_count=4,
        solved_ratio=solved,
        mean_generations_over_solved=mean,
        count_unsolved=2,
        polyvalence_mean=1.25,
        polyvalence_max=3,
        adaptation_mean=-2.5,
        scored_candidates=5,
    )


def test_report_writer_emits_and_truncates(tmp_path):
    writer = ReportWriter(tmp_path)
    writer.start(fresh=True)
    for g in range(3):
        writer.emit(_report(g, "train"))
        writer.emit(_report(g, "test"))
    rows = parse_report_rows(writer.paths["train"])
    assert [r["meta_generation"] for r in rows] == ["0", "1", "2"]
    writer.truncate_from(1)
    rows = parse_report_rows(writer.paths["train"])
    assert [r["meta_generation"] for r in rows] == ["0"]
    rows = parse_report_rows(writer.paths["test"])
    assert [r["meta_generation"] for r in rows] == ["0"]


def test_report_none_fields_round_trip(tmp_path):
    writer = ReportWriter(tmp_path)
    writer.start(fresh=True)
    writer.emit(_report(0, "train", solved=0.0, mean=None))
    row = parse_report_rows(writer.paths["train"])[0]
    assert row["mean_generations_over_solved"] == ""


def test_summary_contains_final_rows(tmp_path):
    writer = ReportWriter(tmp_path)
    writer.start(fresh=True)
    writer.emit(_report(0, "train"))
    writer.emit(_report(1, "train", solved=1.0))
    path = writer.write_summary({"kind": "maze_meta", "seed": 5})
    summary = json.loads(path.read_text())
    assert summary["kind"] == "maze_meta"
    assert summary["train"]["rows"] == 2
    assert summary["train"]["final"]["solved_ratio"] == "1.0"
    assert summary["test"]["rows"] == 0
