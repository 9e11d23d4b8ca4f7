"""Genetic configuration search for single-link channel-gain maximization.

A plain elitist GA over binary control vectors: tournament selection
(size 2), uniform crossover, independent per-bit mutation.  A separately
seeded set of 100 random configurations provides the baseline statistics
against which the enhancement ratio is defined; the baseline configurations
are injected into the initial population, so the final gain can never fall
below the best baseline sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network_model import SystemParameters, end_to_end


@dataclass(frozen=True)
class GaConfig:
    """GA operator rates, budget and seeding.

    ``max_generations=None`` expands to ``100 * n_m`` at run time and
    ``mutation_rate=None`` to ``1 / n_m``.  The search stops early when the
    best gain improved by less than ``improvement_tol`` over the last
    ``stall_generations`` generations (which subsumes "no improvement").
    """

    population: int = 200
    max_generations: int | None = None
    stall_generations: int = 50
    improvement_tol: float = 1e-6
    seed: int = 0
    mutation_rate: float | None = None
    crossover_rate: float = 0.9
    tournament_size: int = 2
    elite: int = 1
    baseline_count: int = 100

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 < self.crossover_rate < 1.0:
            raise ValueError("crossover_rate must lie in (0, 1)")
        if self.mutation_rate is not None and not 0.0 < self.mutation_rate < 1.0:
            raise ValueError("mutation_rate must lie in (0, 1)")
        if self.stall_generations < 1 or self.elite < 0 or self.baseline_count < 1:
            raise ValueError("invalid GA budget settings")


@dataclass
class OptimizationResult:
    best_v: np.ndarray
    best_gain: float
    generations_used: int
    gain_trace: list[float]          # best-so-far per generation, non-decreasing
    random_baseline: tuple[float, float]   # mean and SD over the baseline draws
    baseline_max: float
    enhancement: float               # best_gain / baseline mean


def channel_gain(p: SystemParameters, v, user: int, feed: int) -> float:
    """Squared magnitude of one end-to-end channel entry for configuration v."""
    h = end_to_end(p, v)
    if not (0 <= user < h.shape[0] and 0 <= feed < h.shape[1]):
        raise ValueError(f"user/feed index ({user}, {feed}) out of range for {h.shape}")
    return float(np.abs(h[user, feed]) ** 2)


def gain_function(p: SystemParameters, user: int, feed: int) -> Callable[[np.ndarray], float]:
    """Bind a parameter set and link indices into a ``v -> gain`` callable."""
    return lambda v: channel_gain(p, v, user, feed)


def genetic_optimize(model: Callable[[np.ndarray], float], n_m: int, cfg: GaConfig | None = None) -> OptimizationResult:
    """Maximize ``model(v)`` over binary vectors of length ``n_m``.

    Deterministic for a fixed ``cfg.seed``: the baseline draws and the
    evolutionary stream use independent sub-seeds, and all evolutionary
    randomness comes from a single sequential generator, so results do not
    depend on how fitness evaluations are scheduled.
    """
    if n_m < 1:
        raise ValueError("n_m must be >= 1")
    cfg = cfg or GaConfig()
    max_generations = cfg.max_generations if cfg.max_generations is not None else 100 * n_m
    mutation_rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / n_m

    cache: dict[bytes, float] = {}

    def fitness(v: np.ndarray) -> float:
        key = v.tobytes()
        if key not in cache:
            cache[key] = float(model(v))
        return cache[key]

    baseline_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    baseline = baseline_rng.integers(0, 2, size=(cfg.baseline_count, n_m), dtype=np.uint8)
    baseline_gains = np.array([fitness(v) for v in baseline])
    baseline_mean = float(baseline_gains.mean())
    baseline_sd = float(baseline_gains.std())
    baseline_max = float(baseline_gains.max())
    baseline_best = baseline[int(np.argmax(baseline_gains))]

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    pop = np.empty((cfg.population, n_m), dtype=np.uint8)
    pop[0] = baseline_best                     # keeps best >= baseline max
    injected = min(cfg.population - 1, cfg.baseline_count)
    pop[1 : 1 + injected] = baseline[:injected]
    if 1 + injected < cfg.population:
        pop[1 + injected :] = rng.integers(
            0, 2, size=(cfg.population - 1 - injected, n_m), dtype=np.uint8
        )

    scores = np.array([fitness(v) for v in pop])
    best_idx = int(np.argmax(scores))
    best_v = pop[best_idx].copy()
    best_gain = float(scores[best_idx])
    trace = [best_gain]

    generations = 0
    for gen in range(1, max_generations + 1):
        generations = gen
        order = np.argsort(-scores, kind="stable")
        next_pop = np.empty_like(pop)
        n_elite = min(cfg.elite, cfg.population)
        next_pop[:n_elite] = pop[order[:n_elite]]

        fill = n_elite
        while fill < cfg.population:
            parents = []
            for _ in range(2):
                contenders = rng.integers(0, cfg.population, size=cfg.tournament_size)
                winner = contenders[int(np.argmax(scores[contenders]))]
                parents.append(pop[winner])
            child_a, child_b = parents[0].copy(), parents[1].copy()
            if rng.random() < cfg.crossover_rate:
                swap = rng.random(n_m) < 0.5
                child_a[swap], child_b[swap] = parents[1][swap], parents[0][swap]
            for child in (child_a, child_b):
                flips = rng.random(n_m) < mutation_rate
                child[flips] ^= 1
                if fill < cfg.population:
                    next_pop[fill] = child
                    fill += 1

        pop = next_pop
        scores = np.array([fitness(v) for v in pop])
        gen_best = int(np.argmax(scores))
        if scores[gen_best] > best_gain:
            best_gain = float(scores[gen_best])
            best_v = pop[gen_best].copy()
        trace.append(best_gain)

        if gen >= cfg.stall_generations:
            window = trace[-1] - trace[-1 - cfg.stall_generations]
            if window < cfg.improvement_tol:
                break

    enhancement = best_gain / baseline_mean if baseline_mean > 0 else float("inf")
    return OptimizationResult(
        best_v=best_v,
        best_gain=best_gain,
        generations_used=generations,
        gain_trace=trace,
        random_baseline=(baseline_mean, baseline_sd),
        baseline_max=baseline_max,
        enhancement=enhancement,
    )
