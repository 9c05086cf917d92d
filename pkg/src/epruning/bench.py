"""Pseudo-boolean test objectives and a brute-force oracle for the BDE search."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from . import bde

MAX_TABLE_DIM = 12
MAX_BRUTE_FORCE_DIM = 20


@dataclass(frozen=True)
class PseudoBooleanObjective:
    name: str
    dim: int
    evaluate: Callable[[np.ndarray], float]
    table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __call__(self, state) -> float:
        return self.evaluate(state)


def state_index(state) -> int:
    """Binary value of a state read as a string, bit 0 most significant."""
    value = 0
    for bit in np.asarray(state):
        value = (value << 1) | int(bit)
    return value


def index_state(index: int, D: int) -> np.ndarray:
    return np.array([(index >> (D - 1 - d)) & 1 for d in range(D)], dtype=np.uint8)


def onemax(state) -> float:
    state = np.asarray(state)
    return float(state.size - state.sum())


def onemax_objective(D: int) -> PseudoBooleanObjective:
    return PseudoBooleanObjective(f"onemax-{D}", D, onemax)


def random_table_objective(D: int, seed: int = 0) -> PseudoBooleanObjective:
    """Lookup table of 2**D seeded uniform energies."""
    if not 1 <= D <= MAX_TABLE_DIM:
        raise ValueError(f"table objectives need 1 <= D <= {MAX_TABLE_DIM}")
    table = np.random.default_rng(seed).random(2 ** D)
    weights = 1 << np.arange(D - 1, -1, -1)

    def evaluate(state) -> float:
        return float(table[int(np.dot(np.asarray(state, dtype=np.int64), weights))])

    return PseudoBooleanObjective(f"table-{D}-{seed}", D, evaluate, table)


def brute_force_optimum(objective, D: int) -> tuple[np.ndarray, float]:
    """Exhaustive minimum; ties go to the lowest binary value."""
    if D > MAX_BRUTE_FORCE_DIM:
        raise ValueError(f"brute force is capped at D = {MAX_BRUTE_FORCE_DIM}")
    best_index, best_energy = 0, np.inf
    for index in range(2 ** D):
        e = objective(index_state(index, D))
        if e < best_energy:
            best_index, best_energy = index, e
    return index_state(best_index, D), float(best_energy)


@dataclass
class BenchmarkResult:
    optimum: float
    successes: dict[int, bool]
    histories: dict[int, np.ndarray] = field(repr=False)

    @property
    def success_rate(self) -> float:
        return sum(self.successes.values()) / len(self.successes)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "step", "best_energy"])
            for seed, hist in self.histories.items():
                for t, e in enumerate(hist):
                    w.writerow([seed, t, repr(float(e))])


def run_bde(objective, D: int, params: bde.BdeParams, steps: int, S: int = 8,
            workers: int = 1) -> tuple[bde.Population, np.ndarray]:
    """Run BDE for ``steps`` generations; history[t] is the best energy after t."""
    pop = bde.evaluate_population(bde.init_population(S, D, params.seed), objective, workers)
    history = [pop.best_energy]
    for _ in range(steps):
        pop = bde.step(pop, objective, params, workers=workers)
        history.append(pop.best_energy)
    return pop, np.array(history)


def run_bde_benchmark(objective, params: bde.BdeParams, steps: int,
                      seeds: Iterable[int], S: int = 8, optimum: float | None = None,
                      tol: float = 1e-12) -> BenchmarkResult:
    """Success rate of reaching the brute-force optimum energy, per seed."""
    D = objective.dim
    if optimum is None:
        optimum = brute_force_optimum(objective, D)[1]
    successes, histories = {}, {}
    for seed in seeds:
        _, hist = run_bde(objective, D, replace(params, seed=seed), steps, S)
        histories[seed] = hist
        successes[seed] = bool(hist[-1] <= optimum + tol)
    return BenchmarkResult(optimum, successes, histories)
