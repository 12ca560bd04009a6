"""Bounded flat-vector genomes and the feed-forward policies they encode.

A genome is a real vector in [lo, hi]^P holding the weights of a fully
connected tanh network, stored layer by layer: each layer contributes its
weight matrix in row-major order followed by its bias vector. Variation is
Deb's bounded polynomial mutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyPopulationError


@dataclass(frozen=True)
class NetworkShape:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) != d or d < 1 for d in dims):
            raise ValueError(f"all layer dims must be positive integers, got {dims}")
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def parameter_count(self) -> int:
        dims = self.layer_dims
        return sum(n_in * n_out + n_out for n_in, n_out in zip(dims, dims[1:]))


@dataclass
class Genome:
    """A parameter vector with per-coordinate closed bounds [lo, hi]."""

    params: np.ndarray
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.ndim != 1:
            raise ValueError("genome params must be a flat vector")
        if not self.lo < self.hi:
            raise ValueError(f"invalid bounds [{self.lo}, {self.hi}]")
        if self.params.size and (
            self.params.min() < self.lo or self.params.max() > self.hi
        ):
            raise ValueError("genome parameters violate bounds")

    def __len__(self):
        return self.params.size


@dataclass(frozen=True)
class MutationConfig:
    """Bounded polynomial mutation settings.

    eta is the distribution index; larger values concentrate perturbations
    near the parent. per_gene_prob defaults to 1/len(genome) when None.
    """

    eta: float = 15.0
    per_gene_prob: float | None = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.per_gene_prob is not None and not 0.0 <= self.per_gene_prob <= 1.0:
            raise ValueError("per_gene_prob must lie in [0, 1]")

    def resolved_prob(self, genome_len: int) -> float:
        if self.per_gene_prob is not None:
            return self.per_gene_prob
        return 1.0 / max(genome_len, 1)


def random_genome(shape: NetworkShape, rng, lo: float = -1.0, hi: float = 1.0) -> Genome:
    """Coordinate-wise uniform genome in [lo, hi]."""
    return Genome(rng.uniform(lo, hi, size=shape.parameter_count), lo, hi)


def decode(params: np.ndarray, shape: NetworkShape):
    """Split a flat vector into per-layer (weights, biases) arrays.

    Weights of the layer mapping n_in -> n_out occupy n_out*n_in entries in
    row-major order, followed by the n_out biases.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.shape[-1] != shape.parameter_count:
        raise DimensionMismatchError(
            "genome", shape.parameter_count, params.shape[-1]
        )
    layers = []
    offset = 0
    dims = shape.layer_dims
    lead = params.shape[:-1]
    for n_in, n_out in zip(dims, dims[1:]):
        w = params[..., offset : offset + n_out * n_in].reshape(*lead, n_out, n_in)
        offset += n_out * n_in
        b = params[..., offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def forward(layers, observation: np.ndarray) -> np.ndarray:
    """Run decoded layers on one observation (tanh on every layer)."""
    h = np.asarray(observation, dtype=np.float64)
    for w, b in layers:
        h = np.tanh(w @ h + b)
    return h


def forward_batch(layers, observations: np.ndarray) -> np.ndarray:
    """Vectorized forward pass: layer arrays (N,out,in)/(N,out), obs (N,in)."""
    h = observations
    for w, b in layers:
        h = np.tanh(np.matmul(w, h[..., None])[..., 0] + b)
    return h


def decode_and_forward(
    genome: Genome, shape: NetworkShape, observation: np.ndarray
) -> np.ndarray:
    obs = np.asarray(observation, dtype=np.float64)
    if obs.shape != (shape.input_dim,):
        raise DimensionMismatchError("observation", shape.input_dim, obs.shape)
    return forward(decode(genome.params, shape), obs)


def mutate(genome: Genome, cfg: MutationConfig, rng) -> Genome:
    """Polynomial mutation: perturb each gene with probability per_gene_prob.

    For a uniform draw u the perturbation is
        u <= 0.5:  x + ((2u)^(1/(eta+1)) - 1) * (x - lo)
        u >  0.5:  x + (1 - (2(1-u))^(1/(eta+1))) * (hi - x)
    which keeps the result inside [lo, hi] for any u. The input genome is
    never modified. Draw order: one uniform vector for the gene mask, then
    one uniform value per selected gene.
    """
    x = genome.params
    n = x.size
    prob = cfg.resolved_prob(n)
    out = x.copy()
    mask = rng.random(n) < prob
    k = int(mask.sum())
    if k:
        u = rng.random(k)
        xm = x[mask]
        exponent = 1.0 / (cfg.eta + 1.0)
        left = u <= 0.5
        delta = np.where(
            left,
            np.power(2.0 * u, exponent) - 1.0,
            1.0 - np.power(2.0 * (1.0 - u), exponent),
        )
        span = np.where(left, xm - genome.lo, genome.hi - xm)
        out[mask] = np.clip(xm + delta * span, genome.lo, genome.hi)
    return Genome(out, genome.lo, genome.hi)


def mutate_population(population, count: int, cfg: MutationConfig, rng):
    """Produce `count` offspring, assigning parents round-robin.

    Offspring j descends from population[j % len(population)]; the parent
    indices are returned so callers can record lineage.
    """
    if not population:
        raise EmptyPopulationError()
    if count < 1:
        raise ValueError("offspring count must be >= 1")
    parents = [j % len(population) for j in range(count)]
    children = [mutate(population[p], cfg, rng) for p in parents]
    return children, parents


def round_robin_parents(population_size: int, count: int):
    if population_size < 1:
        raise EmptyPopulationError()
    return [j % population_size for j in range(count)]


def polynomial_reproducer(population, count, rng, *, cfg: MutationConfig):
    """mutate_population with the reproducer calling convention (rng last).

    Bind cfg with functools.partial to get a picklable reproduce callable
    for the QD and meta loops.
    """
    return mutate_population(population, count, cfg, rng)


def initial_network_population(rng, *, count, shape: NetworkShape,
                               lo: float = -1.0, hi: float = 1.0):
    return [random_genome(shape, rng, lo, hi) for _ in range(count)]
