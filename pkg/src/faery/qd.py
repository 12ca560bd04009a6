"""One inner quality-diversity optimization on one task.

The instance population is evolved with NSGA-II over (novelty, fitness),
every evaluated individual is recorded in the evolution forest, and the
run stops as soon as enough solutions have been found or the generation
budget is exhausted. Seed evaluations count as generation 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Protocol

import numpy as np

from .errors import TaskEvaluationError
from .evo import NoveltyArchive, archive_insert, novelty_scores, nsga2_select_indices
from .lineage import EvolutionForest


@dataclass(frozen=True)
class EvalResult:
    fitness: float
    behavior: np.ndarray
    solved: bool


class Task(Protocol):
    """A single environment instance with its success predicate baked in."""

    def evaluate(self, genome) -> EvalResult: ...


# reproduce(genomes, count, rng) -> (offspring, parent_indices)
Reproducer = Callable[[list, int, np.random.Generator], tuple[list, list[int]]]


@dataclass(frozen=True)
class QdConfig:
    g_qd_max: int
    s_max: int = 1
    c_lambda: float = 1.0
    novelty_k: int = 15
    archive_capacity: int = 5000

    def __post_init__(self):
        if self.g_qd_max < 0:
            raise ValueError("g_qd_max must be >= 0")
        if self.s_max < 1:
            raise ValueError("s_max must be >= 1")
        if self.c_lambda <= 0 or self.novelty_k < 1 or self.archive_capacity < 1:
            raise ValueError("c_lambda, novelty_k, archive_capacity must be positive")


@dataclass
class QdOutcome:
    solutions: list  # (node_id, genome), in discovery order
    generations_used: int | None
    forest: EvolutionForest
    solved: bool

    @property
    def solved_node_ids(self) -> set[int]:
        return {node_id for node_id, _ in self.solutions}


def evaluate(task: Task, genome) -> EvalResult:
    """Run one episode; thin wrapper kept as the single-genome entry point."""
    return task.evaluate(genome)


def _evaluate_batch(task: Task, genomes, node_ids) -> list[EvalResult]:
    batch = getattr(task, "evaluate_batch", None)
    if batch is not None:
        try:
            return batch(genomes)
        except Exception as exc:
            raise TaskEvaluationError(list(node_ids), exc) from exc
    out = []
    for g, nid in zip(genomes, node_ids):
        try:
            out.append(task.evaluate(g))
        except Exception as exc:
            raise TaskEvaluationError(nid, exc) from exc
    return out


def run_qd_instance(
    task: Task,
    seed_population: list[tuple[Any, int]],
    cfg: QdConfig,
    rng: np.random.Generator,
    *,
    reproduce: Reproducer,
) -> QdOutcome:
    """Evolve the seeded population on one task until solved or out of budget.

    seed_population pairs each genome with its index in the candidate
    population; those indices become the forest roots, so they must be
    distinct. Each generation produces ceil(c_lambda * pop_size) offspring,
    evaluates them, adds their behaviors to the novelty archive, and keeps
    pop_size survivors by NSGA-II over (novelty, fitness).
    """
    if not seed_population:
        raise ValueError("seed population must not be empty")
    prior_indices = [idx for _, idx in seed_population]
    if len(set(prior_indices)) != len(prior_indices):
        raise ValueError("duplicate prior indices in seed population")

    forest = EvolutionForest()
    genomes = [g for g, _ in seed_population]
    node_ids = [forest.register_root(idx) for idx in prior_indices]
    results = _evaluate_batch(task, genomes, node_ids)

    behavior_dim = np.asarray(results[0].behavior).size
    archive = NoveltyArchive.empty(behavior_dim, cfg.archive_capacity, cfg.novelty_k)

    solutions = [
        (nid, g) for nid, g, r in zip(node_ids, genomes, results) if r.solved
    ]
    pop_size = len(seed_population)

    pop_genomes = genomes
    pop_nodes = node_ids
    pop_fitness = [r.fitness for r in results]
    pop_behavior = [np.asarray(r.behavior, dtype=np.float64).ravel() for r in results]

    stop_generation = 0 if len(solutions) >= cfg.s_max else None
    generation = 0
    while stop_generation is None and generation < cfg.g_qd_max:
        generation += 1
        n_offspring = math.ceil(cfg.c_lambda * pop_size)
        children, parent_idx = reproduce(pop_genomes, n_offspring, rng)
        child_nodes = [forest.register_child(pop_nodes[p]) for p in parent_idx]
        child_results = _evaluate_batch(task, children, child_nodes)

        solutions.extend(
            (nid, g)
            for nid, g, r in zip(child_nodes, children, child_results)
            if r.solved
        )

        child_behaviors = [
            np.asarray(r.behavior, dtype=np.float64).ravel() for r in child_results
        ]
        archive = archive_insert(archive, np.vstack(child_behaviors), rng)

        all_genomes = pop_genomes + children
        all_nodes = pop_nodes + child_nodes
        all_fitness = pop_fitness + [r.fitness for r in child_results]
        all_behaviors = pop_behavior + child_behaviors

        novelty = novelty_scores(np.vstack(all_behaviors), archive)
        objectives = np.column_stack([novelty, all_fitness])
        keep = nsga2_select_indices(objectives, pop_size)

        pop_genomes = [all_genomes[i] for i in keep]
        pop_nodes = [all_nodes[i] for i in keep]
        pop_fitness = [all_fitness[i] for i in keep]
        pop_behavior = [all_behaviors[i] for i in keep]

        if len(solutions) >= cfg.s_max:
            stop_generation = generation

    solved = len(solutions) >= 1
    if stop_generation is not None:
        generations_used = stop_generation
    else:
        generations_used = cfg.g_qd_max if solved else None
    return QdOutcome(
        solutions=solutions,
        generations_used=generations_used,
        forest=forest,
        solved=solved,
    )
