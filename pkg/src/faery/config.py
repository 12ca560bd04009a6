"""Experiment configuration: JSON schema, defaults, validation.

Configs are nested key-value JSON with a format_version field. Validation
collects every problem with its field path before any compute starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .meta import OBJECTIVE_MODES, MetaConfig
from .networks import MutationConfig
from .qd import QdConfig

CONFIG_VERSION = 1

KINDS = ("maze_meta", "grid_ablation", "qd_single", "transfer_seed_eval")


@dataclass
class MazeSettings:
    episode_length: int = 400
    gamma: float = 0.99
    init_noise: float = 1e-3
    hidden_dims: tuple = (10, 10, 10)
    lo: float = -1.0
    hi: float = 1.0


@dataclass
class TrainConfig:
    seed: int
    out_dir: str
    train_file: str
    test_file: str
    meta: MetaConfig
    maze: MazeSettings = field(default_factory=MazeSettings)
    parallelism: int = 1


@dataclass
class AblationConfig:
    seed: int
    out_dir: str
    meta: MetaConfig
    runs: int = 15
    modes: tuple = ("joint", "f0_only", "f1_only")
    step_max: int = 3
    parallelism: int = 1


class _Reader:
    """Pulls typed values out of nested dicts, remembering every problem."""

    def __init__(self, obj):
        self.obj = obj
        self.problems: list[str] = []
        self.seen: set[str] = set()

    def get(self, path, kind, default=None, required=False, pred=None, note=""):
        self.seen.add(path)
        node = self.obj
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if required:
                    self.problems.append(f"{path}: required field missing")
                return default
            node = node[part]
        if kind is float and isinstance(node, int) and not isinstance(node, bool):
            node = float(node)
        if kind is not None and (not isinstance(node, kind) or isinstance(node, bool)
                                 and kind is not bool):
            self.problems.append(f"{path}: expected {kind.__name__}")
            return default
        if pred is not None and not pred(node):
            self.problems.append(f"{path}: {note}")
            return default
        return node

    def get_list(self, path, item_kind, default=None):
        self.seen.add(path)
        node = self.obj
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        if not isinstance(node, list) or not all(
            isinstance(v, item_kind) for v in node
        ):
            name = getattr(item_kind, "__name__", "number")
            self.problems.append(f"{path}: expected list of {name}")
            return default
        return node

    def raise_if_failed(self):
        if self.problems:
            raise ConfigError(self.problems)


def load_config_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])


def _common_checks(r: _Reader, expected_kind: str):
    version = r.get("format_version", int, required=True)
    if version is not None and version != CONFIG_VERSION:
        r.problems.append(f"format_version: unsupported version {version}")
    kind = r.get("kind", str, required=True)
    if kind is not None and kind != expected_kind:
        r.problems.append(f"kind: expected {expected_kind!r}, got {kind!r}")
    seed = r.get("seed", int, required=True,
                 pred=lambda s: 0 <= s < 2**64, note="must fit in u64")
    out_dir = r.get("out_dir", str, required=True)
    parallelism = r.get("parallelism", int, default=1,
                        pred=lambda p: p >= 1, note="must be >= 1")
    return seed, out_dir, parallelism


def _read_qd(r: _Reader, default_g_qd: int) -> QdConfig:
    pos = (lambda v: v >= 1, "must be >= 1")
    return QdConfig(
        g_qd_max=r.get("qd.g_qd_max", int, default=default_g_qd,
                       pred=lambda v: v >= 0, note="must be >= 0"),
        s_max=r.get("qd.s_max", int, default=1, pred=pos[0], note=pos[1]),
        c_lambda=r.get("qd.c_lambda", float, default=1.0,
                       pred=lambda v: v > 0, note="must be > 0"),
        novelty_k=r.get("qd.novelty_k", int, default=15, pred=pos[0], note=pos[1]),
        archive_capacity=r.get("qd.archive_capacity", int, default=5000,
                               pred=pos[0], note=pos[1]),
    )


def _read_meta(r: _Reader, qd: QdConfig, mutation: MutationConfig,
               defaults: dict) -> MetaConfig:
    pos = (lambda v: v >= 1, "must be >= 1")
    mode = r.get("meta.objective_mode", str, default="joint",
                 pred=lambda m: m in OBJECTIVE_MODES,
                 note=f"must be one of {OBJECTIVE_MODES}")
    return MetaConfig(
        mu=r.get("meta.mu", int, default=defaults["mu"], pred=pos[0], note=pos[1]),
        lambda_=r.get("meta.lambda", int, default=defaults["lambda"],
                      pred=pos[0], note=pos[1]),
        m_train=r.get("meta.m_train", int, default=defaults["m_train"],
                      pred=pos[0], note=pos[1]),
        m_test=r.get("meta.m_test", int, default=defaults.get("m_test", 0),
                     pred=lambda v: v >= 0, note="must be >= 0"),
        g_outer=r.get("meta.g_outer", int, default=defaults["g_outer"],
                      pred=pos[0], note=pos[1]),
        test_every=r.get("meta.test_every", int, default=1,
                         pred=pos[0], note=pos[1]),
        qd=qd,
        mutation=mutation,
        objective_mode=mode,
    )


def _read_mutation(r: _Reader) -> MutationConfig:
    per_gene = r.get("mutation.per_gene_prob", float, default=None,
                     pred=lambda v: 0.0 <= v <= 1.0, note="must lie in [0, 1]")
    return MutationConfig(
        eta=r.get("mutation.eta", float, default=15.0,
                  pred=lambda v: v > 0, note="must be > 0"),
        per_gene_prob=per_gene,
    )


def parse_train_config(obj: dict) -> TrainConfig:
    r = _Reader(obj)
    seed, out_dir, parallelism = _common_checks(r, "maze_meta")
    train_file = r.get("dataset.train_file", str, required=True)
    test_file = r.get("dataset.test_file", str, required=True)
    hidden = r.get_list("maze.hidden_dims", int, default=[10, 10, 10]) or [10, 10, 10]
    bounds = r.get_list("maze.bounds", (int, float), default=[-1.0, 1.0])
    if bounds is None or len(bounds) != 2 or not bounds[0] < bounds[1]:
        r.problems.append("maze.bounds: expected [lo, hi] with lo < hi")
        bounds = [-1.0, 1.0]
    maze = MazeSettings(
        episode_length=r.get("maze.episode_length", int, default=400,
                             pred=lambda v: v >= 1, note="must be >= 1"),
        gamma=r.get("maze.gamma", float, default=0.99,
                    pred=lambda v: 0 < v <= 1, note="must lie in (0, 1]"),
        init_noise=r.get("maze.init_noise", float, default=1e-3,
                         pred=lambda v: v >= 0, note="must be >= 0"),
        hidden_dims=tuple(hidden),
        lo=float(bounds[0]),
        hi=float(bounds[1]),
    )
    qd = _read_qd(r, default_g_qd=100)
    mutation = _read_mutation(r)
    try:
        meta = _read_meta(r, qd, mutation,
                          {"mu": 24, "lambda": 24, "m_train": 8,
                           "m_test": 8, "g_outer": 30})
    except ValueError as exc:
        meta = None
        r.problems.append(f"meta: {exc}")
    r.raise_if_failed()
    return TrainConfig(
        seed=seed,
        out_dir=out_dir,
        train_file=train_file,
        test_file=test_file,
        meta=meta,
        maze=maze,
        parallelism=parallelism,
    )


def parse_ablation_config(obj: dict) -> AblationConfig:
    r = _Reader(obj)
    seed, out_dir, parallelism = _common_checks(r, "grid_ablation")
    runs = r.get("runs", int, default=15, pred=lambda v: v >= 1, note="must be >= 1")
    modes = r.get_list("modes", str, default=list(OBJECTIVE_MODES))
    if modes is not None and not all(m in OBJECTIVE_MODES for m in modes):
        r.problems.append(f"modes: entries must be in {OBJECTIVE_MODES}")
    step_max = r.get("grid.step_max", int, default=3,
                     pred=lambda v: v >= 1, note="must be >= 1")
    qd = _read_qd(r, default_g_qd=20)
    try:
        meta = _read_meta(r, qd, MutationConfig(),
                          {"mu": 25, "lambda": 25, "m_train": 25,
                           "g_outer": 70})
    except ValueError as exc:
        meta = None
        r.problems.append(f"meta: {exc}")
    r.raise_if_failed()
    return AblationConfig(
        seed=seed,
        out_dir=out_dir,
        meta=meta,
        runs=runs,
        modes=tuple(modes),
        step_max=step_max,
        parallelism=parallelism,
    )
