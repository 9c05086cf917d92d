"""Energy-based pruning during training, plus a magnitude-pruning baseline.

Training runs in two phases. While searching, every batch advances a BDE
population of unit masks scored by the batch energy loss, and the weights
take one SGD step under the population's best mask. Once the population
agrees (delta_s == 0) or the stagnation threshold passes, the best mask is
frozen and the remaining epochs fine-tune that sub-network.
"""

from __future__ import annotations

import csv
import hashlib
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import bde
from .data import Dataset, batch_iter
from .energy import logit_energy_loss
from .nn import (Network, UnitLayout, count_params, cross_entropy, forward_masked,
                 ones_mask, sgd_step, topk_hits)

PHASES = ("search", "finetune", "dense")


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.1
    lr_step_epochs: int = 50
    lr_gamma: float = 0.1
    weight_decay: float = 1e-6
    stagnation_threshold: int = 100
    population_size: int = 8
    bde: bde.BdeParams = field(default_factory=bde.BdeParams)
    seed: int = 0
    topk: tuple[int, ...] = (1, 3, 5)
    reevaluate_parents: bool = False
    energy_reduction: str = "mean"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.bde, dict):
            self.bde = bde.BdeParams(**self.bde)
        self.topk = tuple(self.topk)
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("epochs, batch_size and lr must be positive")
        if self.lr_step_epochs < 1 or not 0 < self.lr_gamma <= 1:
            raise ValueError("lr_step_epochs must be positive and lr_gamma in (0, 1]")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if not 0 <= self.stagnation_threshold <= self.epochs:
            raise ValueError("stagnation_threshold must lie in [0, epochs]")
        if self.population_size < bde.MIN_POPULATION:
            raise ValueError(f"population_size must be at least {bde.MIN_POPULATION}")
        if not self.topk or min(self.topk) < 1:
            raise ValueError("topk must list positive integers")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.lr_gamma ** ((epoch - 1) // self.lr_step_epochs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["topk"] = list(self.topk)
        return d


@dataclass
class RunMetrics:
    topk: tuple[int, ...]
    rows: list[dict] = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        cols = ["epoch", "phase", "ce_loss", "best_energy", "mean_energy", "delta_s"]
        for split in ("train", "test"):
            cols += [f"{split}_top{k}" for k in self.topk]
        return cols + ["R", "mask_hash"]

    def append(self, row: dict) -> None:
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(row.get(c)) for c in self.columns])


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def mask_hash(mask: np.ndarray) -> str:
    return hashlib.sha1(np.asarray(mask, dtype=np.uint8).tobytes()).hexdigest()[:12]


def energy_objective(net: Network, inputs: np.ndarray, targets: np.ndarray,
                     reduction: str = "mean") -> Callable[[np.ndarray], float]:
    """Batch energy loss of the sub-network selected by a mask; read-only on ``net``."""
    def objective(mask: np.ndarray) -> float:
        return logit_energy_loss(forward_masked(net, inputs, mask), targets, reduction)
    return objective


def make_layer_repair(layout: UnitLayout) -> bde.Repair:
    """Revive one random unit in any layer a mask switched off entirely."""
    def repair(state: np.ndarray, rng) -> np.ndarray:
        state = state.copy()
        for offset, width in zip(layout.offsets, layout.widths):
            if not state[offset:offset + width].any():
                state[offset + int(rng.integers(width))] = 1
        return state
    return repair


def evaluate(net: Network, mask, data: Dataset, topk=(1, 3, 5)) -> dict:
    """Loss, top-k accuracies (fractions) and kept-parameter accounting.

    Accuracies for k >= C are 1 by definition.
    """
    mask = ones_mask(net) if mask is None else np.asarray(mask)
    logits = forward_masked(net, data.features, mask)
    kept, total = count_params(net, mask)
    row = {"loss": cross_entropy(logits, data.labels)}
    for k in topk:
        row[f"top{k}"] = float(topk_hits(logits, data.labels, min(k, net.class_count)).mean())
    row.update(R=kept / total, kept=kept, total=total)
    return row


def _epoch_row(net, mask, config, train, test, epoch, phase, losses, pop=None) -> dict:
    row = {"epoch": epoch, "phase": phase, "ce_loss": float(np.mean(losses)),
           "best_energy": None, "mean_energy": None, "delta_s": None}
    if pop is not None and pop.energies is not None:
        row.update(best_energy=pop.best_energy, mean_energy=float(pop.energies.mean()),
                   delta_s=bde.delta_s(pop).delta_s)
    for split, ds in (("train", train), ("test", test)):
        if ds is None:
            continue
        ev = evaluate(net, mask, ds, config.topk)
        for k in config.topk:
            row[f"{split}_top{k}"] = ev[f"top{k}"]
    row["R"] = float(100.0 * count_params(net, mask)[0] / count_params(net)[1])
    row["mask_hash"] = mask_hash(mask)
    return row


def _check_data(net: Network, *datasets) -> None:
    for ds in datasets:
        if ds is None:
            continue
        if ds.class_count != net.class_count:
            raise ValueError(f"dataset has {ds.class_count} classes, network {net.class_count}")
        if ds.dim != net.input_dim:
            raise ValueError(f"dataset dim {ds.dim} != network input_dim {net.input_dim}")


def _sgd_epoch(net, mask, config, data, epoch) -> list[float]:
    lr = config.lr_at(epoch)
    return [sgd_step(net, xb, yb, mask, lr, config.weight_decay)
            for xb, yb in batch_iter(data, config.batch_size, [config.seed, 1, epoch])]


def fine_tune(net: Network, mask, config: TrainConfig, data: Dataset, epochs: int | None = None,
              start_epoch: int = 1, history: list | None = None) -> Network:
    """Masked SGD with a frozen mask; the epoch count defaults to ``config.epochs``."""
    mask = np.asarray(mask, dtype=np.uint8)
    _check_data(net, data)
    epochs = config.epochs if epochs is None else epochs
    for epoch in range(start_epoch, start_epoch + epochs):
        losses = _sgd_epoch(net, mask, config, data, epoch)
        if history is not None:
            history.append(float(np.mean(losses)))
    return net


def train_fixed_mask(config: TrainConfig, net: Network, train: Dataset, test: Dataset | None = None,
                     mask=None, epochs: int | None = None, start_epoch: int = 1,
                     phase: str = "dense", metrics: RunMetrics | None = None) -> tuple[Network, RunMetrics]:
    """Like :func:`fine_tune` but records one metrics row per epoch."""
    mask = ones_mask(net) if mask is None else np.asarray(mask, dtype=np.uint8)
    _check_data(net, train, test)
    metrics = RunMetrics(config.topk) if metrics is None else metrics
    epochs = config.epochs if epochs is None else epochs
    for epoch in range(start_epoch, start_epoch + epochs):
        losses = _sgd_epoch(net, mask, config, train, epoch)
        metrics.append(_epoch_row(net, mask, config, train, test, epoch, phase, losses))
    return net, metrics


def train_epruning(config: TrainConfig, net: Network, train: Dataset, test: Dataset | None = None,
                   population: bde.Population | None = None) -> tuple[Network, np.ndarray, RunMetrics]:
    """Train ``net`` in place while searching for a pruning mask.

    Parent energies are carried across batches, so a trial scored on the
    current batch is compared with its parent's score from an earlier batch,
    unless ``config.reevaluate_parents`` is set. Delta_s is refreshed once
    per epoch. Epoch 1 always searches; afterwards the search runs while
    delta_s != 0 and epoch <= stagnation_threshold.
    """
    _check_data(net, train, test)
    layout = net.layout
    repair = make_layer_repair(layout)
    params = config.bde
    if population is None:
        population = bde.init_population(config.population_size, layout.size, params.seed)
        population.states = np.array([repair(s, bde.candidate_rng(params.seed, 0, i))
                                      for i, s in enumerate(population.states)])
    elif population.dim != layout.size:
        raise ValueError("population dimension does not match the network's unit count")
    pop = population
    metrics = RunMetrics(config.topk)
    best_mask = None
    converged = False
    stalled = 0

    epoch = 1
    while epoch <= config.epochs and (
            epoch == 1 or (not converged and epoch <= config.stagnation_threshold)):
        lr = config.lr_at(epoch)
        losses = []
        for xb, yb in batch_iter(train, config.batch_size, [config.seed, 1, epoch]):
            objective = energy_objective(net, xb, yb, config.energy_reduction)
            if pop.energies is None:
                pop = bde.evaluate_population(pop, objective, config.workers)
            pop = bde.step(pop, objective, params, workers=config.workers, repair=repair,
                           reevaluate_parents=config.reevaluate_parents)
            best_mask = pop.best_state.copy()
            losses.append(sgd_step(net, xb, yb, best_mask, lr, config.weight_decay))
        status = bde.delta_s(pop, stalled)
        converged = status.converged
        stalled = 0 if converged else stalled + 1
        metrics.append(_epoch_row(net, best_mask, config, train, test, epoch, "search", losses, pop))
        epoch += 1

    for epoch in range(epoch, config.epochs + 1):
        losses = _sgd_epoch(net, best_mask, config, train, epoch)
        metrics.append(_epoch_row(net, best_mask, config, train, test, epoch, "finetune", losses, pop))
    return net, best_mask, metrics


class PruningTargetWarning(UserWarning):
    pass


def unit_scores(net: Network) -> np.ndarray:
    """L1 norm of each hidden unit's incoming weights plus its bias."""
    return np.concatenate([np.abs(l.weights).sum(axis=1) + np.abs(l.biases)
                           for l in net.layers[:-1]])


def magnitude_prune_baseline(net: Network, target_R: float) -> np.ndarray:
    """Drop the weakest units until the kept-parameter ratio reaches ``target_R``.

    Units are ranked by :func:`unit_scores`; equal scores drop the lower
    layer, then the lower unit index, first. The last live unit of a layer
    is never dropped, so a target below the one-unit-per-layer network
    returns that network with a :class:`PruningTargetWarning`.
    """
    if not 0 < target_R <= 1:
        raise ValueError("target_R must lie in (0, 1]")
    layout = net.layout
    mask = ones_mask(net)
    _, total = count_params(net, mask)
    owner = np.repeat(np.arange(len(layout.widths)), layout.widths)
    alive = np.array(layout.widths)
    for d in np.argsort(unit_scores(net), kind="stable"):
        if count_params(net, mask)[0] / total <= target_R + 1e-12:
            return mask
        if alive[owner[d]] == 1:
            continue
        mask[d] = 0
        alive[owner[d]] -= 1
    if count_params(net, mask)[0] / total > target_R + 1e-12:
        warnings.warn(f"target R={target_R:.4f} unreachable; returning the minimal mask",
                      PruningTargetWarning, stacklevel=2)
    return mask


def run_baseline(config: TrainConfig, net: Network, train: Dataset, test: Dataset | None,
                 target_R: float) -> tuple[Network, np.ndarray, RunMetrics]:
    """Dense training, magnitude pruning to ``target_R``, then fine-tuning.

    The dense phase lasts ``stagnation_threshold`` epochs (at least one) so
    the split mirrors the EPruning schedule.
    """
    dense_epochs = max(1, min(config.stagnation_threshold, config.epochs))
    net, metrics = train_fixed_mask(config, net, train, test, epochs=dense_epochs)
    mask = magnitude_prune_baseline(net, target_R)
    rest = config.epochs - dense_epochs
    if rest > 0:
        train_fixed_mask(config, net, train, test, mask, rest, dense_epochs + 1,
                         "finetune", metrics)
    return net, mask, metrics


def run_summary(config: TrainConfig, net: Network, mask, test: Dataset | None,
                started: float) -> dict:
    kept, total = count_params(net, mask)
    summary = {"config": config.to_dict(), "R": 100.0 * kept / total,
               "kept_params": kept, "total_params": total,
               "wall_time_s": time.perf_counter() - started}
    if test is not None:
        ev = evaluate(net, mask, test, config.topk)
        summary["test"] = {f"top{k}": ev[f"top{k}"] for k in config.topk}
        summary["test"]["loss"] = ev["loss"]
    return summary
