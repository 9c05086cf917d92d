"""Table-style result rows: Loss, Top-1/3/5 and kept parameters."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .data import Dataset
from .nn import Network, ones_mask
from .trainer import evaluate

COLUMNS = ("Model", "Loss", "Top-1", "Top-3", "Top-5", "R", "#p")


def table_row(name: str, net: Network, mask, data: Dataset) -> dict:
    """One row; accuracies and R in percent, ``#p`` the kept parameter count."""
    ev = evaluate(net, mask, data, (1, 3, 5))
    return {"Model": name, "Loss": ev["loss"],
            "Top-1": 100 * ev["top1"], "Top-3": 100 * ev["top3"], "Top-5": 100 * ev["top5"],
            "R": 100 * ev["R"], "#p": ev["kept"]}


def full_and_pruned(name: str, net: Network, mask, data: Dataset) -> list[dict]:
    return [table_row(f"{name}(F)", net, ones_mask(net), data),
            table_row(f"{name}(P)", net, mask, data)]


def format_table(rows: list[dict]) -> str:
    cells = [list(COLUMNS)]
    for r in rows:
        cells.append([r["Model"], f"{r['Loss']:.4f}", f"{r['Top-1']:.2f}", f"{r['Top-3']:.2f}",
                      f"{r['Top-5']:.2f}", f"{r['R']:.2f}", str(r["#p"])])
    widths = [max(len(row[j]) for row in cells) for j in range(len(COLUMNS))]
    lines = ["  ".join(c.ljust(w) if j == 0 else c.rjust(w)
                       for j, (c, w) in enumerate(zip(row, widths))) for row in cells]
    return "\n".join(lines) + "\n"


def emit_report(rows: list[dict], out_dir, summary: dict | None = None) -> None:
    """Write report.csv and report.txt (and summary.json when given) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    (out / "report.txt").write_text(format_table(rows))
    if summary is not None:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
