"""The meta-learning outer loop over QD instances.

Each meta-generation samples a batch of tasks, seeds one QD instance per
task with the candidate population (current prior plus its offspring),
and scores every candidate from the resulting evolution forests:

  polyvalence  - total number of solutions descending from the candidate,
                 over all sampled tasks;
  adaptation   - negated mean forest depth of those solutions (the depth
                 approximates how many mutations away the solutions are).

Candidates with no solutions carry the -inf adaptation sentinel. Both
scores are maximized; the next prior is the NSGA-II selection of the
candidates under those two objectives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RootIndexError
from .evo import nsga2_select_indices
from .networks import MutationConfig
from .qd import QdConfig, QdOutcome, Reproducer, Task, run_qd_instance
from .rngs import OUTER_MUTATION, QD_INSTANCE, TASK_SAMPLING, TEST_SPLIT, TRAIN_SPLIT, RngKey

WORST_SENTINEL = float("-inf")

OBJECTIVE_MODES = ("joint", "f0_only", "f1_only")


@dataclass(frozen=True)
class MetaScore:
    """(polyvalence, adaptation) pair attached to one candidate."""

    polyvalence: int
    adaptation: float

    def __post_init__(self):
        if self.polyvalence < 0:
            raise ValueError("polyvalence must be non-negative")
        if (self.polyvalence == 0) != (self.adaptation == WORST_SENTINEL):
            raise ValueError(
                "adaptation must be the worst-sentinel exactly when no "
                "solutions were found"
            )
        if self.polyvalence > 0 and self.adaptation > 0:
            raise ValueError("adaptation is a negated mean depth, must be <= 0")

    def objectives(self, mode: str) -> tuple[float, ...]:
        if mode == "joint":
            return (float(self.polyvalence), self.adaptation)
        if mode == "f0_only":
            return (float(self.polyvalence),)
        if mode == "f1_only":
            return (self.adaptation,)
        raise ValueError(f"unknown objective mode {mode!r}")


@dataclass
class PriorPopulation:
    """The learned prior: mu genomes plus their latest meta scores."""

    members: list  # (genome, MetaScore)

    @classmethod
    def fresh(cls, genomes) -> "PriorPopulation":
        return cls([(g, MetaScore(0, WORST_SENTINEL)) for g in genomes])

    @property
    def genomes(self) -> list:
        return [g for g, _ in self.members]

    @property
    def scores(self) -> list[MetaScore]:
        return [s for _, s in self.members]

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class MetaConfig:
    mu: int
    lambda_: int
    m_train: int
    g_outer: int
    qd: QdConfig
    mutation: MutationConfig = MutationConfig()
    m_test: int = 0
    test_every: int = 1
    objective_mode: str = "joint"

    def __post_init__(self):
        if min(self.mu, self.lambda_, self.m_train) < 1:
            raise ValueError("mu, lambda_ and m_train must be positive")
        if self.g_outer < 0 or self.m_test < 0 or self.test_every < 1:
            raise ValueError("g_outer/m_test must be >= 0 and test_every >= 1")
        if self.objective_mode not in OBJECTIVE_MODES:
            raise ValueError(f"objective_mode must be one of {OBJECTIVE_MODES}")


@dataclass
class MetaGenReport:
    """Aggregates of one meta-generation, for one split."""

    meta_generation: int
    split: str
    task_count: int
    solved_ratio: float
    mean_generations_over_solved: float | None
    count_unsolved: int
    polyvalence_mean: float
    polyvalence_max: int
    adaptation_mean: float | None  # over candidates with at least one solution
    scored_candidates: int


def compute_meta_scores(
    outcomes: list[QdOutcome], candidate_count: int
) -> list[MetaScore]:
    """Fold the evolution forests of all outcomes into per-candidate scores."""
    counts = np.zeros(candidate_count, dtype=np.int64)
    depth_sums = np.zeros(candidate_count, dtype=np.float64)
    for outcome in outcomes:
        stats = outcome.forest.root_stats(outcome.solved_node_ids)
        for candidate, entry in stats.items():
            if not 0 <= candidate < candidate_count:
                raise RootIndexError(candidate, candidate_count)
            counts[candidate] += entry.solution_count
            depth_sums[candidate] += sum(entry.solution_depths)
    return [
        MetaScore(int(c), -ds / c if c > 0 else WORST_SENTINEL)
        for c, ds in zip(counts, depth_sums)
    ]


def _run_one_instance(payload):
    task, seeds, qd_cfg, key, reproduce = payload
    return run_qd_instance(task, seeds, qd_cfg, key.generator(), reproduce=reproduce)


def _summarize(
    meta_generation_index: int,
    split: str,
    outcomes: list[QdOutcome],
    scores: list[MetaScore],
) -> MetaGenReport:
    solved = [o for o in outcomes if o.solved]
    gens = [o.generations_used for o in solved]
    finite = [s.adaptation for s in scores if s.polyvalence > 0]
    return MetaGenReport(
        meta_generation=meta_generation_index,
        split=split,
        task_count=len(outcomes),
        solved_ratio=len(solved) / len(outcomes) if outcomes else 0.0,
        mean_generations_over_solved=(sum(gens) / len(gens)) if gens else None,
        count_unsolved=len(outcomes) - len(solved),
        polyvalence_mean=float(np.mean([s.polyvalence for s in scores])),
        polyvalence_max=int(max(s.polyvalence for s in scores)),
        adaptation_mean=(sum(finite) / len(finite)) if finite else None,
        scored_candidates=len(finite),
    )


def meta_generation(
    prior: PriorPopulation,
    tasks: list[Task],
    cfg: MetaConfig,
    key: RngKey,
    *,
    reproduce: Reproducer,
    executor=None,
    meta_generation_index: int = 0,
    split: str = "train",
) -> tuple[PriorPopulation, MetaGenReport]:
    """Run one outer-loop iteration and select the next prior.

    The candidate set is the prior plus lambda_ mutated offspring; every
    candidate seeds every QD instance. Selection runs over the meta scores
    under cfg.objective_mode. The split tag only labels the report and the
    rng subtree; pure-measurement calls (test split) simply discard the
    returned prior.
    """
    if len(prior) != cfg.mu:
        raise ValueError(f"prior has {len(prior)} members, expected {cfg.mu}")
    split_code = TRAIN_SPLIT if split == "train" else TEST_SPLIT
    outer_rng = key.child(OUTER_MUTATION, split_code).generator()
    offspring, _ = reproduce(prior.genomes, cfg.lambda_, outer_rng)
    candidates = prior.genomes + offspring
    seeds = list(zip(candidates, range(len(candidates))))

    payloads = [
        (task, seeds, cfg.qd, key.child(QD_INSTANCE, split_code, i), reproduce)
        for i, task in enumerate(tasks)
    ]
    if executor is None:
        outcomes = [_run_one_instance(p) for p in payloads]
    else:
        outcomes = list(executor.map(_run_one_instance, payloads))

    scores = compute_meta_scores(outcomes, len(candidates))
    objectives = [s.objectives(cfg.objective_mode) for s in scores]
    keep = nsga2_select_indices(objectives, cfg.mu)
    next_prior = PriorPopulation([(candidates[i], scores[i]) for i in keep])
    report = _summarize(meta_generation_index, split, outcomes, scores)
    return next_prior, report


# sampler(count, rng) -> list of Task
TaskSampler = Callable[[int, np.random.Generator], list]


def run_faery(
    train_sampler: TaskSampler,
    test_sampler: TaskSampler | None,
    cfg: MetaConfig,
    key: RngKey,
    report_sink: Callable[[MetaGenReport], None] | None = None,
    *,
    init_population: Callable[[np.random.Generator], list],
    reproduce: Reproducer,
    executor=None,
    initial_prior: PriorPopulation | None = None,
    start_generation: int = 0,
    on_generation: Callable[[int, PriorPopulation], None] | None = None,
) -> PriorPopulation:
    """Iterate meta-generations on train tasks, measuring on test tasks.

    Test evaluations use the same pre-update prior as the train pass of
    the same meta-generation and never feed selection, so removing them
    does not change the final prior. Resuming from (initial_prior,
    start_generation) reproduces an uninterrupted run exactly because all
    random streams are keyed by meta-generation index, not consumed
    sequentially.
    """
    if initial_prior is not None:
        prior = initial_prior
    else:
        from .rngs import PRIOR_INIT

        prior = PriorPopulation.fresh(
            init_population(key.child(PRIOR_INIT).generator())
        )
    if len(prior) != cfg.mu:
        raise ValueError("initial prior size does not match cfg.mu")

    for g in range(start_generation, cfg.g_outer):
        gkey = key.child(g)
        train_tasks = train_sampler(
            cfg.m_train, gkey.child(TASK_SAMPLING, TRAIN_SPLIT).generator()
        )
        if len(train_tasks) != cfg.m_train:
            raise ValueError("train sampler returned the wrong number of tasks")
        if test_sampler is not None and cfg.m_test > 0 and g % cfg.test_every == 0:
            test_tasks = test_sampler(
                cfg.m_test, gkey.child(TASK_SAMPLING, TEST_SPLIT).generator()
            )
            _, test_report = meta_generation(
                prior,
                test_tasks,
                cfg,
                gkey,
                reproduce=reproduce,
                executor=executor,
                meta_generation_index=g,
                split="test",
            )
        else:
            test_report = None

        prior, train_report = meta_generation(
            prior,
            train_tasks,
            cfg,
            gkey,
            reproduce=reproduce,
            executor=executor,
            meta_generation_index=g,
            split="train",
        )
        if report_sink is not None:
            report_sink(train_report)
            if test_report is not None:
                report_sink(test_report)
        if on_generation is not None:
            on_generation(g, prior)
    return prior
