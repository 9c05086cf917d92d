"""Energy view of a classifier's logits.

With a softmax output the class energies are the negated logits, and the
loss of a sample is its target energy minus the lowest energy among the
other classes: negative when the target wins outright, zero on a tie.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EnergySample:
    logits: np.ndarray
    target: int

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        if logits.ndim != 1 or logits.size < 2:
            raise ValueError("need a logit vector with at least 2 classes")
        if not np.isfinite(logits).all():
            raise ValueError("logits must be finite")
        if not 0 <= self.target < logits.size:
            raise ValueError(f"target {self.target} outside [0, {logits.size})")
        object.__setattr__(self, "logits", logits)


@dataclass(frozen=True)
class GibbsParams:
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def hamiltonian(sample: EnergySample) -> np.ndarray:
    return -sample.logits


def gibbs_probabilities(sample: EnergySample, params: GibbsParams = GibbsParams()) -> np.ndarray:
    scores = -params.beta * hamiltonian(sample)
    scores = scores - scores.max()
    p = np.exp(scores)
    return p / p.sum()


def energy_loss(sample: EnergySample) -> float:
    energy = hamiltonian(sample)
    others = np.delete(energy, sample.target)
    return float(energy[sample.target] - others.min())


def batch_energy_loss(samples: Sequence[EnergySample], reduction: str = "mean") -> float:
    if len(samples) == 0:
        raise ValueError("empty batch")
    losses = [energy_loss(s) for s in samples]
    return _reduce(np.asarray(losses), reduction)


def logit_energy_losses(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Vectorised per-sample energy loss for a (B, C) logit matrix."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.intp)
    rows = np.arange(len(targets))
    energy = -logits
    target_energy = energy[rows, targets]
    rivals = energy.copy()
    rivals[rows, targets] = np.inf
    return target_energy - rivals.min(axis=1)


def logit_energy_loss(logits: np.ndarray, targets: np.ndarray, reduction: str = "mean") -> float:
    if len(targets) == 0:
        raise ValueError("empty batch")
    return _reduce(logit_energy_losses(logits, targets), reduction)


def _reduce(values: np.ndarray, reduction: str) -> float:
    if reduction == "mean":
        return float(values.mean())
    if reduction == "sum":
        return float(values.sum())
    raise ValueError(f"unknown reduction {reduction!r}")
