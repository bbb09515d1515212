"""Genetic-algorithm docking driver.

One docking run is single-threaded; fitness is the float32 total score
(lower is better), evaluated for the whole population per generation through
the selected backend. The RNG is numpy's Philox counter-based generator so a
run is a pure function of (seed, config, backend) regardless of how many
runs execute concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import scoring
from .energy import TermWeights
from .grids import GridMapSet
from .io_formats import ParameterTable
from .model import LigandTopology
from .pose import RIGID_GENES


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    generations: int = 1000
    tournament_size: int = 2
    crossover_rate: float = 0.8
    mutation_rate: float = 0.02
    mutation_sigma_translation: float = 0.5   # A
    mutation_sigma_rotation: float = 0.1      # raw gene units, renormalized
    mutation_sigma_torsion: float = 0.2       # rad
    elitism_count: int = 1
    seed: int = 0
    # (lo, hi) per axis; filled from the grid box when docking
    translation_bounds: tuple[tuple[float, float, float], tuple[float, float, float]] | None = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (0 <= self.elitism_count < self.population_size):
            raise ValueError("elitism_count must be in [0, population_size)")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class OperatorCounts:
    """Operator invocations observed by next_generation (for rate tests)."""

    children: int = 0
    crossovers: int = 0
    gene_mutations: int = 0
    genes_seen: int = 0


@dataclass(frozen=True)
class DockingResult:
    best_genotype: np.ndarray
    best_score: scoring.ScoreBreakdown
    trace: np.ndarray            # (generations + 1,) float32 best total per generation
    n_evaluations: int
    seed_key: tuple[int, int]


def make_rng(global_seed: int, ligand_index: int = 0) -> np.random.Generator:
    """Philox generator keyed with (global_seed, ligand_index)."""
    key = np.array([np.uint64(global_seed), np.uint64(ligand_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _bounds_from_config(config: GaConfig):
    if config.translation_bounds is None:
        raise ValueError("config.translation_bounds unset; pass the grid box")
    lo = np.asarray(config.translation_bounds[0], dtype=np.float64)
    hi = np.asarray(config.translation_bounds[1], dtype=np.float64)
    if (hi <= lo).any():
        raise ValueError(f"degenerate translation box: lo={lo}, hi={hi}")
    return lo, hi


def init_population(
    config: GaConfig, topology: LigandTopology, rng: np.random.Generator | None = None
) -> np.ndarray:
    """(population_size, 7 + T) float64 gene matrix.

    Translations uniform in the box, rotation genes uniform on the unit
    3-sphere (normalized Gaussian draws), torsions uniform in [-pi, pi).
    """
    rng = rng or make_rng(config.seed)
    lo, hi = _bounds_from_config(config)
    pop = config.population_size
    t = rng.uniform(lo, hi, size=(pop, 3))
    q = rng.standard_normal((pop, 4))
    norms = np.sqrt((q * q).sum(axis=1))
    degenerate = norms < 1e-12
    q[degenerate] = (1.0, 0.0, 0.0, 0.0)
    norms[degenerate] = 1.0
    q /= norms[:, None]
    tors = rng.uniform(-math.pi, math.pi, size=(pop, topology.n_torsions))
    return np.concatenate([t, q, tors], axis=1)


def _mutation_sigmas(config: GaConfig, n_genes: int) -> np.ndarray:
    sig = np.empty(n_genes)
    sig[0:3] = config.mutation_sigma_translation
    sig[3:RIGID_GENES] = config.mutation_sigma_rotation
    sig[RIGID_GENES:] = config.mutation_sigma_torsion
    return sig


def next_generation(
    population: np.ndarray,
    fitness: np.ndarray,
    rng: np.random.Generator,
    config: GaConfig,
    counts: OperatorCounts | None = None,
) -> np.ndarray:
    """Elitism + tournament selection + two-point crossover + Gaussian
    mutation (rotation genes renormalized). Lower fitness is better.

    All random draws happen unconditionally in a fixed order, so the stream
    consumed is a pure function of shapes and config.
    """
    pop, n_genes = population.shape
    if fitness.shape != (pop,):
        raise ValueError("fitness length must match population")
    order = np.argsort(fitness, kind="stable")
    elites = population[order[: config.elitism_count]].copy()
    n_children = pop - config.elitism_count

    k = config.tournament_size
    contenders = rng.integers(0, pop, size=(n_children, 2, k))
    winners = np.take_along_axis(
        contenders, np.argmin(fitness[contenders], axis=2)[:, :, None], axis=2
    )[:, :, 0]
    p1 = population[winners[:, 0]]
    p2 = population[winners[:, 1]]

    do_cx = rng.random(n_children) < config.crossover_rate
    cuts = np.sort(rng.integers(0, n_genes + 1, size=(n_children, 2)), axis=1)
    gene_pos = np.arange(n_genes)
    middle = (gene_pos >= cuts[:, 0:1]) & (gene_pos < cuts[:, 1:2])
    children = np.where(do_cx[:, None] & middle, p2, p1)

    mutate = rng.random((n_children, n_genes)) < config.mutation_rate
    noise = rng.standard_normal((n_children, n_genes)) * _mutation_sigmas(config, n_genes)
    children = children + np.where(mutate, noise, 0.0)

    # Mutated rotation genes are renormalized (unmutated ones stay bitwise
    # intact; decode normalizes at pose time anyway). A crossover can splice
    # two quaternions into a degenerate all-zero one; parent 1's rotation
    # wins there.
    quat = children[:, 3:RIGID_GENES]
    norms = np.sqrt((quat * quat).sum(axis=1))
    bad = norms < 1e-9
    if bad.any():
        quat[bad] = p1[bad, 3:RIGID_GENES]
        norms[bad] = np.sqrt((quat[bad] * quat[bad]).sum(axis=1))
    renorm = mutate[:, 3:RIGID_GENES].any(axis=1) | bad
    children[renorm, 3:RIGID_GENES] = quat[renorm] / norms[renorm, None]

    if counts is not None:
        counts.children += n_children
        counts.crossovers += int(do_cx.sum())
        counts.gene_mutations += int(mutate.sum())
        counts.genes_seen += n_children * n_genes

    return np.concatenate([elites, children], axis=0)


def dock(
    topology: LigandTopology,
    grid_set: GridMapSet,
    config: GaConfig | None = None,
    backend=None,
    weights: TermWeights | None = None,
    table: ParameterTable | None = None,
    rng: np.random.Generator | None = None,
    seed_key: tuple[int, int] | None = None,
    context: scoring.ScoringContext | None = None,
) -> DockingResult:
    """Run the GA: score-all then breed, for `generations` rounds.

    Reproducible bitwise for a fixed (seed, config, backend) on one platform.
    """
    config = config or GaConfig()
    if config.translation_bounds is None:
        config = replace(
            config, translation_bounds=(grid_set.spec.origin, grid_set.spec.upper)
        )
    if rng is None:
        rng = make_rng(config.seed)
        seed_key = seed_key or (config.seed, 0)
    ctx = context or scoring.prepare_context(topology, grid_set, weights=weights, table=table)
    b = scoring.get_backend(backend)

    population = init_population(config, topology, rng)
    trace = np.empty(config.generations + 1, dtype=np.float32)
    best_total = np.float32(np.inf)
    best_genes: np.ndarray | None = None
    best_parts = (0.0, 0.0)
    n_evaluations = 0

    for gen in range(config.generations + 1):
        inter64, intra64, totals = scoring.score_population(topology, population, ctx, backend=b)
        n_evaluations += population.shape[0]
        idx = int(np.argmin(totals))
        if totals[idx] < best_total or best_genes is None:
            best_total = totals[idx]
            best_genes = population[idx].copy()
            best_parts = (float(inter64[idx]), float(intra64[idx]))
        # the generation's own best (non-increasing only thanks to elitism)
        trace[gen] = totals[idx]
        if gen < config.generations:
            population = next_generation(population, totals.astype(np.float64), rng, config)

    breakdown = scoring.ScoreBreakdown.from_components(
        best_parts[0], best_parts[1], ctx.torsional32
    )
    return DockingResult(
        best_genotype=best_genes,
        best_score=breakdown,
        trace=trace,
        n_evaluations=n_evaluations,
        seed_key=seed_key or (config.seed, 0),
    )
