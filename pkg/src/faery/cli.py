"""Command-line entry points.

Subcommands: generate-dataset, train, eval, ablate, render-maze.
Exit codes: 0 success, 2 configuration error, 3 runtime failure.
All randomness is keyed by --seed; reruns with the same configuration
produce byte-identical outputs at any --parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from . import config as cfgmod
from . import storage
from .errors import ConfigError, FaeryError
from .gridworld import run_ablation
from .maze import generate_dataset, generate_maze, render_ascii, sample_tasks_from_pool
from .meta import MetaConfig, PriorPopulation, meta_generation, run_faery
from .networks import (
    MutationConfig,
    NetworkShape,
    initial_network_population,
    polynomial_reproducer,
)
from .rngs import PRIOR_INIT, TASK_SAMPLING, master_key

_SEED_MAX = 2**64 - 1


def _positive_seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= _SEED_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit int")
    return value


def _executor(parallelism: int, jobs: int):
    workers = min(parallelism, max(jobs, 1))
    if workers <= 1:
        return None
    return ProcessPoolExecutor(max_workers=workers)


def _merge_cli_overrides(obj: dict, args) -> dict:
    merged = dict(obj)
    if getattr(args, "seed", None) is not None:
        merged["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        merged["out_dir"] = str(args.out)
    if getattr(args, "parallelism", None) is not None:
        merged["parallelism"] = args.parallelism
    return merged


# ---------------------------------------------------------------------------
# generate-dataset


def cmd_generate_dataset(args) -> int:
    if args.train < 1 or args.test < 1:
        raise ConfigError(["--train and --test must be >= 1"])
    if args.n < 1:
        raise ConfigError(["--n must be >= 1"])
    key = master_key(args.seed)
    train, test = generate_dataset(args.n, args.train, args.test, key)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_path = out / f"mazes{args.n}x{args.n}_train.txt"
    test_path = out / f"mazes{args.n}x{args.n}_test.txt"
    storage.save_maze_dataset(train_path, train, args.n)
    storage.save_maze_dataset(test_path, test, args.n)
    codes = {layout.canonical_hex() for _, layout in train + test}
    print(f"wrote {len(train)} train mazes -> {train_path}")
    print(f"wrote {len(test)} test mazes  -> {test_path}")
    print(f"all {len(codes)} layouts pairwise distinct, train/test disjoint")
    return 0


# ---------------------------------------------------------------------------
# train


def _maze_sampler(records, maze: cfgmod.MazeSettings):
    return partial(
        sample_tasks_from_pool,
        records,
        episode_length=maze.episode_length,
        gamma=maze.gamma,
        init_noise=maze.init_noise,
        hidden_dims=maze.hidden_dims,
    )


def cmd_train(args) -> int:
    obj = cfgmod.load_config_file(args.config)
    cfg = cfgmod.parse_train_config(_merge_cli_overrides(obj, args))
    n_train, train_records = storage.load_maze_dataset(cfg.train_file)
    n_test, test_records = storage.load_maze_dataset(cfg.test_file)
    problems = []
    if n_train != n_test:
        problems.append("dataset: train and test pools use different maze sides")
    if cfg.meta.m_train > len(train_records):
        problems.append("meta.m_train: exceeds train pool size")
    if cfg.meta.m_test > len(test_records):
        problems.append("meta.m_test: exceeds test pool size")
    if problems:
        raise ConfigError(problems)

    shape = NetworkShape(5, cfg.maze.hidden_dims, 2)
    out = Path(cfg.out_dir)
    ckpt_path = out / "checkpoint.bin"
    writer = storage.ReportWriter(out)

    initial_prior = None
    start = 0
    if ckpt_path.exists():
        if not args.resume:
            raise ConfigError(
                [f"{ckpt_path} already exists; pass --resume to continue"]
            )
        ckpt = storage.load_checkpoint(ckpt_path)
        if ckpt.seed != cfg.seed or ckpt.shape != shape:
            raise ConfigError(["checkpoint does not match config (seed or shape)"])
        initial_prior = ckpt.prior
        start = ckpt.next_meta_generation
        writer.start(fresh=False)
        writer.truncate_from(start)
    else:
        writer.start(fresh=True)

    def save_state(g, prior):
        tmp = ckpt_path.with_suffix(".tmp")
        storage.save_checkpoint(
            tmp,
            storage.Checkpoint(cfg.seed, g + 1, shape, cfg.maze.lo, cfg.maze.hi,
                               prior),
        )
        os.replace(tmp, ckpt_path)

    key = master_key(cfg.seed)
    executor = _executor(cfg.parallelism, cfg.meta.m_train + cfg.meta.m_test)
    try:
        prior = run_faery(
            _maze_sampler(train_records, cfg.maze),
            _maze_sampler(test_records, cfg.maze),
            cfg.meta,
            key,
            report_sink=writer.emit,
            init_population=partial(
                initial_network_population,
                count=cfg.meta.mu,
                shape=shape,
                lo=cfg.maze.lo,
                hi=cfg.maze.hi,
            ),
            reproduce=partial(polynomial_reproducer, cfg=cfg.meta.mutation),
            executor=executor,
            initial_prior=initial_prior,
            start_generation=start,
            on_generation=save_state,
        )
    finally:
        if executor is not None:
            executor.shutdown()

    final = storage.Checkpoint(cfg.seed, cfg.meta.g_outer, shape,
                               cfg.maze.lo, cfg.maze.hi, prior)
    (out / "prior_final.json").write_text(storage.checkpoint_to_json(final) + "\n")
    summary = writer.write_summary({"kind": "maze_meta", "seed": cfg.seed})
    print(f"checkpoint: {ckpt_path}")
    print(f"summary:    {summary}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    if args.checkpoint is None and not args.scratch:
        raise ConfigError(["pass --checkpoint PATH or --scratch"])
    if args.m < 0:
        raise ConfigError(["--m must be >= 0"])
    n, records = storage.load_maze_dataset(args.dataset)
    out = Path(args.out)
    writer = storage.ReportWriter(out)
    writer.start(fresh=True)
    if args.m == 0:
        summary = writer.write_summary({"kind": "eval", "seed": args.seed})
        print(f"no tasks requested; empty report at {summary}")
        return 0

    key = master_key(args.seed)
    if args.scratch:
        shape = NetworkShape(5, tuple(args.hidden), 2)
        genomes = initial_network_population(
            key.child(PRIOR_INIT).generator(), count=args.mu, shape=shape
        )
        prior = PriorPopulation.fresh(genomes)
        lo, hi = -1.0, 1.0
    else:
        ckpt = storage.load_checkpoint(args.checkpoint)
        shape = ckpt.shape
        prior = ckpt.prior
        lo, hi = ckpt.lo, ckpt.hi
    if shape.input_dim != 5 or shape.output_dim != 2:
        raise ConfigError(
            ["checkpoint network shape is not a maze policy (5 inputs, 2 outputs)"]
        )

    lam = args.offspring if args.offspring is not None else len(prior)
    meta_cfg = MetaConfig(
        mu=len(prior),
        lambda_=lam,
        m_train=args.m,
        g_outer=1,
        qd=cfgmod.QdConfig(g_qd_max=args.g_qd),
        mutation=MutationConfig(),
    )
    tasks = sample_tasks_from_pool(
        records,
        args.m,
        key.child(TASK_SAMPLING).generator(),
        episode_length=args.episode_length,
        gamma=args.gamma,
        init_noise=args.init_noise,
        hidden_dims=shape.hidden_dims,
    )
    executor = _executor(args.parallelism, args.m)
    try:
        _, report = meta_generation(
            prior,
            tasks,
            meta_cfg,
            key,
            reproduce=partial(polynomial_reproducer, cfg=MutationConfig()),
            executor=executor,
            split="test",
        )
    finally:
        if executor is not None:
            executor.shutdown()
    writer.emit(report)
    summary = writer.write_summary({"kind": "eval", "seed": args.seed})
    mean = report.mean_generations_over_solved
    print(f"solved {report.solved_ratio:.3f} of {args.m} tasks; "
          f"mean generations over solved: "
          f"{'n/a' if mean is None else f'{mean:.2f}'}")
    print(f"summary: {summary}")
    return 0


# ---------------------------------------------------------------------------
# ablate


def cmd_ablate(args) -> int:
    obj = cfgmod.load_config_file(args.config) if args.config else {
        "format_version": 1,
        "kind": "grid_ablation",
        "seed": args.seed if args.seed is not None else 0,
        "out_dir": str(args.out) if args.out is not None else "ablation_out",
    }
    merged = _merge_cli_overrides(obj, args)
    if args.runs is not None:
        merged["runs"] = args.runs
    if args.mode is not None:
        merged["modes"] = [args.mode]
    cfg = cfgmod.parse_ablation_config(merged)

    key = master_key(cfg.seed)
    executor = _executor(cfg.parallelism, cfg.runs * len(cfg.modes))
    try:
        report = run_ablation(
            list(cfg.modes),
            cfg.runs,
            key,
            cfg=cfg.meta,
            step_max=cfg.step_max,
            executor=executor,
        )
    finally:
        if executor is not None:
            executor.shutdown()
    cov_path, pos_path = storage.save_ablation_report(cfg.out_dir, report)
    for mode in cfg.modes:
        counts = report.coverage_counts(mode)
        cov = " ".join(f"{z}={counts[z]}/{cfg.runs}" for z in sorted(counts))
        print(f"{mode}: zone coverage {cov}")
    print(f"coverage:  {cov_path}")
    print(f"positions: {pos_path}")
    return 0


# ---------------------------------------------------------------------------
# render-maze


def cmd_render_maze(args) -> int:
    if args.dataset is not None:
        _, records = storage.load_maze_dataset(args.dataset)
        if not 0 <= args.index < len(records):
            raise ConfigError([f"--index must lie in [0, {len(records)})"])
        seed, layout = records[args.index]
        print(f"maze seed {seed}")
    else:
        layout = generate_maze(args.n, master_key(args.seed).child(0).generator())
    print(render_ascii(layout))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faery",
        description="Meta-learn a prior population that lets quality-diversity "
        "optimization solve new tasks in few generations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-dataset", help="write disjoint train/test maze pools")
    p.add_argument("--n", type=int, required=True, help="maze side in cells")
    p.add_argument("--train", type=int, required=True)
    p.add_argument("--test", type=int, required=True)
    p.add_argument("--seed", type=_positive_seed, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate_dataset)

    p = sub.add_parser("train", help="run the meta loop on a maze dataset")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--seed", type=_positive_seed, help="override config seed")
    p.add_argument("--out", type=Path, help="override config out_dir")
    p.add_argument("--parallelism", type=int, help="QD instances run in parallel")
    p.add_argument("--resume", action="store_true",
                   help="continue from the checkpoint in the output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="measure a prior checkpoint as QD seeds")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--scratch", action="store_true",
                   help="use a random prior instead of a checkpoint")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--m", type=int, required=True, help="number of sampled tasks")
    p.add_argument("--seed", type=_positive_seed, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--g-qd", type=int, default=100, dest="g_qd")
    p.add_argument("--offspring", type=int,
                   help="offspring added to the seeds (default: prior size)")
    p.add_argument("--mu", type=int, default=24, help="prior size with --scratch")
    p.add_argument("--hidden", type=int, nargs="+", default=[10, 10, 10],
                   help="hidden layer sizes with --scratch")
    p.add_argument("--episode-length", type=int, default=400)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--init-noise", type=float, default=1e-3)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="grid-bandit meta-objective ablation")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=_positive_seed)
    p.add_argument("--out", type=Path)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--mode", choices=["joint", "f0_only", "f1_only"],
                   help="run a single objective mode (default: all three)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("render-maze", help="print a maze as ASCII art")
    p.add_argument("--dataset", type=Path)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=_positive_seed, default=0)
    p.set_defaults(func=cmd_render_maze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except FaeryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
