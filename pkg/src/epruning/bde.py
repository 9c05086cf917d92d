"""Binary differential evolution over bit-vector states.

Generic over any objective mapping a 0/1 vector to a real energy (lower is
better). Every candidate draws its random numbers from its own stream,
keyed by (seed, generation, candidate index), so evaluating candidates in
parallel cannot change a trajectory.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Literal, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]
Repair = Callable[[np.ndarray, np.random.Generator], np.ndarray]

MIN_POPULATION = 4
CONVERGENCE_TOL = 1e-12


@dataclass(frozen=True)
class BdeParams:
    mutation_factor: float = 0.5
    crossover_rate: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.mutation_factor <= 1:
            raise ValueError("mutation_factor must lie in (0, 1]")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must lie in [0, 1]")


@dataclass
class Population:
    states: np.ndarray  # (S, D) uint8
    energies: np.ndarray | None = None
    generation: int = 0

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def best_index(self) -> int:
        if self.energies is None:
            raise ValueError("population has not been evaluated")
        return int(np.argmin(self.energies))  # first minimum wins ties

    @property
    def best_state(self) -> np.ndarray:
        return self.states[self.best_index]

    @property
    def best_energy(self) -> float:
        return float(self.energies[self.best_index])


@dataclass(frozen=True)
class ConvergenceStatus:
    delta_s: float
    converged: bool
    epochs_without_convergence: int = 0


def candidate_rng(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, generation, index])


def init_population(S: int, D: int, seed: int = 0) -> Population:
    """Each bit independently Bernoulli(0.5)."""
    if S < MIN_POPULATION:
        raise ValueError(f"population size {S} < {MIN_POPULATION}")
    if D < 1:
        raise ValueError("state dimension must be positive")
    rng = np.random.default_rng([seed, 0xB17])
    return Population(rng.integers(0, 2, size=(S, D), dtype=np.uint8))


def evaluate(objective: Objective, states: np.ndarray, workers: int = 1) -> np.ndarray:
    if workers > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(objective, states))
    else:
        values = [objective(s) for s in states]
    energies = np.asarray(values, dtype=np.float64)
    if not np.isfinite(energies).all():
        raise FloatingPointError(f"objective returned non-finite energies: {energies}")
    return energies


def evaluate_population(pop: Population, objective: Objective, workers: int = 1) -> Population:
    return replace(pop, energies=evaluate(objective, pop.states, workers))


def mutate(pop: Population, i: int, params: BdeParams, rng) -> np.ndarray:
    """Flip the base vector's bit where two donors disagree, with prob F."""
    S = pop.size
    if S < MIN_POPULATION:
        raise ValueError(f"need at least {MIN_POPULATION} candidates to mutate")
    # three distinct draws from the S-1 indices other than i
    i1, i2, i3 = (j + (j >= i) for j in rng.choice(S - 1, size=3, replace=False))
    base, a, b = pop.states[i1], pop.states[i2], pop.states[i3]
    r = rng.random(pop.dim)
    flip = (a != b) & (r < params.mutation_factor)
    return np.where(flip, 1 - base, base).astype(np.uint8)


def crossover(parent: np.ndarray, mutant: np.ndarray, params: BdeParams, rng) -> np.ndarray:
    parent = np.asarray(parent)
    mutant = np.asarray(mutant)
    if parent.shape != mutant.shape:
        raise ValueError(f"length mismatch: {parent.shape} vs {mutant.shape}")
    r = rng.random(parent.shape[0])
    return np.where(r <= params.crossover_rate, mutant, parent).astype(np.uint8)


def select(parent_energy: float, trial_energy: float) -> Literal["trial", "parent"]:
    if not (np.isfinite(parent_energy) and np.isfinite(trial_energy)):
        raise FloatingPointError(
            f"non-finite energy in selection: parent={parent_energy}, trial={trial_energy}")
    return "trial" if trial_energy <= parent_energy else "parent"


def step(pop: Population, objective: Objective, params: BdeParams, *,
         workers: int = 1, repair: Repair | None = None,
         reevaluate_parents: bool = False,
         rngs: Sequence | None = None) -> Population:
    """One generation: mutate, cross over, evaluate and select every candidate.

    ``repair`` may edit a trial state before it is scored (it receives the
    candidate's own stream). With ``reevaluate_parents`` the parents are
    rescored by ``objective`` before comparison instead of keeping their
    stored energies.
    """
    if pop.energies is None:
        raise ValueError("evaluate the population before stepping it")
    generation = pop.generation + 1
    if rngs is None:
        rngs = [candidate_rng(params.seed, generation, i) for i in range(pop.size)]
    trials = np.empty_like(pop.states)
    for i in range(pop.size):
        mutant = mutate(pop, i, params, rngs[i])
        trial = crossover(pop.states[i], mutant, params, rngs[i])
        if repair is not None:
            trial = repair(trial, rngs[i])
        trials[i] = trial

    trial_energies = evaluate(objective, trials, workers)
    parent_energies = (evaluate(objective, pop.states, workers)
                       if reevaluate_parents else pop.energies)

    states = pop.states.copy()
    energies = np.array(parent_energies, dtype=np.float64)
    for i in range(pop.size):
        if select(parent_energies[i], trial_energies[i]) == "trial":
            states[i] = trials[i]
            energies[i] = trial_energies[i]
    return Population(states, energies, generation)


def delta_s(pop: Population, epochs_without_convergence: int = 0) -> ConvergenceStatus:
    """Best energy minus mean energy; zero once every candidate agrees."""
    if pop.energies is None:
        raise ValueError("population has not been evaluated")
    e = pop.energies
    # each term best - e_j is exactly <= 0, so the mean cannot round above 0
    value = float(np.mean(e.min() - e))
    return ConvergenceStatus(value, abs(value) <= CONVERGENCE_TOL, epochs_without_convergence)
