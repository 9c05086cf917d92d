"""Command-line entry point: ``epruning {train,baseline,bench,eval}``.

A JSON config fully determines a run; flags override single values. Every
run writes ``resolved-config.json`` next to its outputs. Failures print a
one-line JSON object ``{"error": kind, "message": ...}`` on stderr and exit
with a code that identifies the kind.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

from . import bench, data, nn, report, trainer

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_DIVERGED = 4
EXIT_DATA = 5

COMMANDS = ("train", "baseline", "bench", "eval")

DEFAULTS = {
    "dataset": {"source": "blobs", "n_per_class": 625, "classes": 4, "dim": 2,
                "spread": 1.0, "seed": 0, "test_fraction": 0.2},
    "hidden": [64, 64],
    "train": {},
    "rate": None,
    "bench": {"objective": "onemax", "dim": 12, "table_seed": 0, "steps": 500,
              "seeds": 100, "population_size": 8},
    "out": "runs/default",
}

_DATASET_KEYS = {
    "blobs": {"n_per_class", "classes", "dim", "spread", "seed", "test_fraction"},
    "spirals": {"n_per_class", "turns", "noise", "classes", "seed", "test_fraction"},
    "csv": {"train", "test", "label_column"},
    "idx": {"train_images", "train_labels", "test_images", "test_labels"},
}


class ConfigError(ValueError):
    pass


class MissingFileError(FileNotFoundError):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "dataset":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise MissingFileError(f"config file {path} not found")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, loaded)
    train = cfg["train"]
    if args.seed is not None:
        train["seed"] = args.seed
        train.setdefault("bde", {})["seed"] = args.seed
    if args.epochs is not None:
        train["epochs"] = args.epochs
        if train.get("stagnation_threshold", 100) > args.epochs:
            train["stagnation_threshold"] = args.epochs
    if args.workers is not None:
        train["workers"] = args.workers
    if args.reevaluate_parents:
        train["reevaluate_parents"] = True
    if args.rate is not None:
        cfg["rate"] = args.rate
    if args.out is not None:
        cfg["out"] = args.out
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    ds = cfg["dataset"]
    if not isinstance(ds, dict) or ds.get("source") not in _DATASET_KEYS:
        raise ConfigError(f"dataset.source must be one of {sorted(_DATASET_KEYS)}")
    extra = set(ds) - _DATASET_KEYS[ds["source"]] - {"source"}
    if extra:
        raise ConfigError(f"dataset keys {sorted(extra)} do not apply to source {ds['source']!r}")
    hidden = cfg["hidden"]
    if not isinstance(hidden, list) or not all(isinstance(h, int) and h >= 1 for h in hidden):
        raise ConfigError("hidden must be a list of positive integers")
    try:
        train_config(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from None
    rate = cfg["rate"]
    if rate is not None and not (isinstance(rate, (int, float)) and 0 < rate <= 1):
        raise ConfigError("rate must be a fraction in (0, 1]")


def train_config(cfg: dict) -> trainer.TrainConfig:
    return trainer.TrainConfig(**cfg["train"])


def _require(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"{path} not found")
    return path


def load_datasets(ds_cfg: dict) -> tuple[data.Dataset, data.Dataset | None]:
    src = ds_cfg["source"]
    if src in ("blobs", "spirals"):
        n = ds_cfg.get("n_per_class", 625)
        seed = ds_cfg.get("seed", 0)
        if src == "blobs":
            full = data.gen_blobs(n, ds_cfg.get("classes", 4), ds_cfg.get("dim", 2),
                                  ds_cfg.get("spread", 1.0), seed)
        else:
            full = data.gen_spirals(n, ds_cfg.get("turns", 1.0), ds_cfg.get("noise", 0.0), seed,
                                    ds_cfg.get("classes", 2))
        return data.train_test_split(full, ds_cfg.get("test_fraction", 0.2), seed)
    if src == "csv":
        label = ds_cfg.get("label_column", "label")
        train = data.load_csv(_require(ds_cfg["train"]), label)
        test = data.load_csv(_require(ds_cfg["test"]), label) if ds_cfg.get("test") else None
        return train, test
    train = data.load_idx(_require(ds_cfg["train_images"]), _require(ds_cfg["train_labels"]))
    test = None
    if ds_cfg.get("test_images"):
        test = data.load_idx(_require(ds_cfg["test_images"]), _require(ds_cfg["test_labels"]),
                             train.class_count)
    return train, test


def _write_common(out: Path, cfg: dict, net, mask, metrics, summary, rows) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved-config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    metrics.to_csv(out / "metrics.csv")
    nn.save_checkpoint(net, out / "model.ckpt")
    nn.save_mask(mask, net.layout, out / "mask.txt")
    report.emit_report(rows, out, summary)


def cmd_train(cfg: dict) -> int:
    tc = train_config(cfg)
    train, test = load_datasets(cfg["dataset"])
    net = nn.init_network(train.dim, cfg["hidden"], train.class_count, tc.seed)
    started = time.perf_counter()
    net, mask, metrics = trainer.train_epruning(tc, net, train, test)
    summary = trainer.run_summary(tc, net, mask, test, started)
    rows = report.full_and_pruned("EPruning", net, mask, test if test is not None else train)
    _write_common(Path(cfg["out"]), cfg, net, mask, metrics, summary, rows)
    print(report.format_table(rows), end="")
    return EXIT_OK


def cmd_baseline(cfg: dict) -> int:
    if cfg["rate"] is None:
        raise ConfigError("baseline needs a target rate (--rate or config 'rate')")
    tc = train_config(cfg)
    train, test = load_datasets(cfg["dataset"])
    net = nn.init_network(train.dim, cfg["hidden"], train.class_count, tc.seed)
    started = time.perf_counter()
    net, mask, metrics = trainer.run_baseline(tc, net, train, test, cfg["rate"])
    summary = trainer.run_summary(tc, net, mask, test, started)
    summary["target_rate"] = cfg["rate"]
    rows = report.full_and_pruned("Magnitude", net, mask, test if test is not None else train)
    _write_common(Path(cfg["out"]), cfg, net, mask, metrics, summary, rows)
    print(report.format_table(rows), end="")
    return EXIT_OK


def cmd_bench(cfg: dict) -> int:
    b = cfg["bench"]
    tc = train_config(cfg)
    D = b["dim"]
    if b["objective"] == "onemax":
        objective = bench.onemax_objective(D)
    elif b["objective"] == "table":
        objective = bench.random_table_objective(D, b.get("table_seed", 0))
    else:
        raise ConfigError("bench.objective must be 'onemax' or 'table'")
    result = bench.run_bde_benchmark(objective, tc.bde, b["steps"], range(b["seeds"]),
                                     b.get("population_size", 8))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved-config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    result.to_csv(out / "bench.csv")
    summary = {"objective": objective.name, "optimum": result.optimum,
               "success_rate": result.success_rate, "steps": b["steps"], "seeds": b["seeds"]}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_eval(cfg: dict, checkpoint, mask_path) -> int:
    out = Path(cfg["out"])
    net = nn.load_checkpoint(_require(checkpoint or out / "model.ckpt"))
    mask, layout = nn.load_mask(_require(mask_path or out / "mask.txt"))
    if layout != net.layout:
        raise ConfigError("mask layout does not match the checkpoint")
    train, test = load_datasets(cfg["dataset"])
    rows = report.full_and_pruned("Model", net, mask, test if test is not None else train)
    print(report.format_table(rows), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epruning", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--seed", type=int, help="training and search seed")
    p.add_argument("--workers", type=int, help="threads for population evaluation")
    p.add_argument("--out", help="output directory")
    p.add_argument("--epochs", type=int, help="override train.epochs (also caps the stagnation threshold)")
    p.add_argument("--rate", type=float, help="baseline target kept-parameter fraction")
    p.add_argument("--reevaluate-parents", action="store_true",
                   help="rescore parents on the current batch before selection")
    p.add_argument("--checkpoint", help="eval: checkpoint path (default OUT/model.ckpt)")
    p.add_argument("--mask", help="eval: mask path (default OUT/mask.txt)")
    return p


def _fail(kind: str, code: int, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg)
        if args.command == "bench":
            return cmd_bench(cfg)
        return cmd_eval(cfg, args.checkpoint, args.mask)
    except (MissingFileError, FileNotFoundError) as exc:
        return _fail("missing_file", EXIT_MISSING_FILE, exc)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except (nn.DivergenceError, FloatingPointError) as exc:
        return _fail("diverged", EXIT_DIVERGED, exc)
    except (data.DataError, ValueError) as exc:
        return _fail("data", EXIT_DATA, exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
