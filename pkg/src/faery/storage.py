"""On-disk formats: maze datasets, prior checkpoints, report CSVs.

Every format carries a version marker. Writers are deterministic byte for
byte given the same data, which is what the end-to-end reproducibility
checks compare.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, DatasetError
from .maze import MazeLayout
from .meta import WORST_SENTINEL, MetaGenReport, MetaScore, PriorPopulation
from .networks import Genome, NetworkShape

MAZE_DATASET_HEADER = "faery-maze-dataset v1"
REPORT_HEADER = "# faery-report v1"
ABLATION_HEADER = "# faery-ablation v1"
CHECKPOINT_MAGIC = b"FAERYCKP"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# maze dataset files


def save_maze_dataset(path, records, n: int):
    """One line per maze: seed, canonical hex, start cell, goal cell."""
    lines = [f"{MAZE_DATASET_HEADER} n={n} count={len(records)}"]
    for seed, layout in records:
        sx, sy = layout.start_cell
        gx, gy = layout.goal_cell
        lines.append(f"{seed} {layout.canonical_hex()} {sx},{sy} {gx},{gy}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_maze_dataset(path):
    text = Path(path).read_text().splitlines()
    if not text:
        raise DatasetError(f"{path}: empty dataset file")
    header = text[0].split()
    if header[:2] != MAZE_DATASET_HEADER.split():
        raise DatasetError(f"{path}: unrecognized header {text[0]!r}")
    fields = dict(kv.split("=") for kv in header[2:])
    n = int(fields["n"])
    count = int(fields["count"])
    records = []
    for line in text[1:]:
        if not line.strip():
            continue
        seed, hexcode, start, goal = line.split()
        layout = MazeLayout.from_canonical_hex(n, hexcode)
        if f"{layout.start_cell[0]},{layout.start_cell[1]}" != start:
            raise DatasetError(f"{path}: start cell mismatch on seed {seed}")
        if f"{layout.goal_cell[0]},{layout.goal_cell[1]}" != goal:
            raise DatasetError(f"{path}: goal cell mismatch on seed {seed}")
        records.append((int(seed), layout))
    if len(records) != count:
        raise DatasetError(f"{path}: header says {count} mazes, found {len(records)}")
    return n, records


# ---------------------------------------------------------------------------
# prior checkpoints


@dataclass
class Checkpoint:
    """Training state at a meta-generation boundary.

    next_meta_generation together with the master seed is the whole rng
    cursor: streams are keyed by meta-generation, never consumed across
    them, so resuming reproduces an uninterrupted run bit for bit.
    """

    seed: int
    next_meta_generation: int
    shape: NetworkShape
    lo: float
    hi: float
    prior: PriorPopulation


def save_checkpoint(path, ckpt: Checkpoint):
    genomes = ckpt.prior.genomes
    scores = ckpt.prior.scores
    mu = len(genomes)
    genome_len = ckpt.shape.parameter_count
    hidden = ckpt.shape.hidden_dims
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<IQI", CHECKPOINT_VERSION, ckpt.seed,
                       ckpt.next_meta_generation)
    out += struct.pack(f"<II{len(hidden)}II", ckpt.shape.input_dim, len(hidden),
                       *hidden, ckpt.shape.output_dim)
    out += struct.pack("<ddII", ckpt.lo, ckpt.hi, mu, genome_len)
    for g in genomes:
        if len(g.params) != genome_len:
            raise CheckpointError("genome length does not match network shape")
        out += g.params.astype("<f8").tobytes()
    for s in scores:
        out += struct.pack("<qd", s.polyvalence, s.adaptation)
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    off = 8

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    version, seed, next_gen = take("<IQI")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    input_dim, n_hidden = take("<II")
    hidden = take(f"<{n_hidden}I") if n_hidden else ()
    (output_dim,) = take("<I")
    lo, hi, mu, genome_len = take("<ddII")
    shape = NetworkShape(input_dim, tuple(hidden), output_dim)
    if shape.parameter_count != genome_len:
        raise CheckpointError(f"{path}: genome length disagrees with shape")
    members = []
    genomes = []
    for _ in range(mu):
        params = np.frombuffer(raw, dtype="<f8", count=genome_len, offset=off).copy()
        off += 8 * genome_len
        genomes.append(Genome(params, lo, hi))
    for g in genomes:
        polyvalence, adaptation = take("<qd")
        members.append((g, MetaScore(polyvalence, adaptation)))
    if off != len(raw):
        raise CheckpointError(f"{path}: trailing bytes in checkpoint")
    return Checkpoint(seed, next_gen, shape, lo, hi, PriorPopulation(members))


def checkpoint_to_json(ckpt: Checkpoint) -> str:
    """Lossless text export (floats via repr, sentinel spelled "-inf")."""

    def score_obj(s: MetaScore):
        return {
            "polyvalence": s.polyvalence,
            "adaptation": "-inf" if s.adaptation == WORST_SENTINEL else s.adaptation,
        }

    obj = {
        "format_version": CHECKPOINT_VERSION,
        "seed": ckpt.seed,
        "next_meta_generation": ckpt.next_meta_generation,
        "network": {
            "input_dim": ckpt.shape.input_dim,
            "hidden_dims": list(ckpt.shape.hidden_dims),
            "output_dim": ckpt.shape.output_dim,
        },
        "bounds": [ckpt.lo, ckpt.hi],
        "prior": [
            {"params": g.params.tolist(), "score": score_obj(s)}
            for g, s in ckpt.prior.members
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=1)


# ---------------------------------------------------------------------------
# report CSVs

REPORT_COLUMNS = (
    "meta_generation",
    "split",
    "task_count",
    "solved_ratio",
    "mean_generations_over_solved",
    "count_unsolved",
    "polyvalence_mean",
    "polyvalence_max",
    "adaptation_mean",
    "scored_candidates",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_row(report: MetaGenReport) -> str:
    return ",".join(_fmt(getattr(report, col)) for col in REPORT_COLUMNS)


def parse_report_rows(path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    rows = []
    for line in lines:
        if not line or line.startswith("#") or line.startswith(REPORT_COLUMNS[0]):
            continue
        rows.append(dict(zip(REPORT_COLUMNS, line.split(","))))
    return rows


class ReportWriter:
    """Append-only per-split CSVs, flushed after every row.

    truncate_from(k) drops rows at meta-generation >= k so a resumed run
    reproduces the uninterrupted files exactly.
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.paths = {
            split: self.out_dir / f"report_{split}.csv" for split in ("train", "test")
        }

    def start(self, fresh: bool):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for path in self.paths.values():
            if fresh or not path.exists():
                path.write_text(
                    REPORT_HEADER + "\n" + ",".join(REPORT_COLUMNS) + "\n"
                )

    def truncate_from(self, meta_generation: int):
        for path in self.paths.values():
            if not path.exists():
                continue
            lines = path.read_text().splitlines()
            kept = [
                line
                for line in lines
                if line.startswith("#")
                or line.startswith(REPORT_COLUMNS[0])
                or (line and int(line.split(",", 1)[0]) < meta_generation)
            ]
            path.write_text("\n".join(kept) + "\n")

    def emit(self, report: MetaGenReport):
        path = self.paths[report.split]
        with path.open("a") as fh:
            fh.write(report_row(report) + "\n")

    def write_summary(self, extra: dict | None = None):
        summary = {"format_version": 1}
        summary.update(extra or {})
        for split, path in self.paths.items():
            rows = parse_report_rows(path) if path.exists() else []
            summary[split] = {
                "rows": len(rows),
                "final": rows[-1] if rows else None,
            }
        out = self.out_dir / "summary.json"
        out.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
        return out


# ---------------------------------------------------------------------------
# ablation CSVs


def save_ablation_report(out_dir, report):
    """Coverage table plus a final-positions dump, both versioned CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coverage = [ABLATION_HEADER, "mode,run,zone,covered,member_count_in_zone"]
    positions = [ABLATION_HEADER, "mode,run,member_index,row,col"]
    for run in report.runs:
        for zone in sorted(run.covered):
            coverage.append(
                f"{run.mode},{run.run_index},{zone},"
                f"{int(run.covered[zone])},{run.members_in_zone[zone]}"
            )
        for i, (row, col) in enumerate(run.final_cells):
            positions.append(f"{run.mode},{run.run_index},{i},{row},{col}")
    cov_path = out_dir / "ablation_coverage.csv"
    pos_path = out_dir / "ablation_positions.csv"
    cov_path.write_text("\n".join(coverage) + "\n")
    pos_path.write_text("\n".join(positions) + "\n")
    return cov_path, pos_path
