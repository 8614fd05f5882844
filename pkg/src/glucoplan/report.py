"""Evaluation reports: MAE tables and trace plots with stable filenames."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import MissingArtifacts

TABLE_NAME = "mae_table.csv"
TRACE_PLOT_NAME = "trace_plot.png"
ERROR_PLOT_NAME = "error_hist.png"


def write_eval_artifacts(out_dir: str | Path, target_channel: str,
                         predictions: np.ndarray, labels: np.ndarray,
                         per_clip: list[float], mae: float) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        out / "predictions.npz",
        predictions=predictions,
        labels=labels,
        target_channel=np.array(target_channel),
    )
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_index", "mae"])
        for idx, value in enumerate(per_clip):
            writer.writerow([idx, f"{value:.6f}"])
    (out / "summary.txt").write_text(
        f"target: {target_channel}\nclips: {len(per_clip)}\nmae: {mae:.6f}\n",
        encoding="utf-8",
    )


def emit_report(eval_dir: str | Path, out_dir: "str | Path | None" = None) -> list[Path]:
    """Turn evaluate() artifacts into a MAE table and two plots.

    Deterministic: identical inputs produce a byte-identical table and
    stable plot files. Raises MissingArtifacts when evaluate has not run.
    """
    eval_dir = Path(eval_dir)
    out = Path(out_dir) if out_dir else eval_dir
    out.mkdir(parents=True, exist_ok=True)
    npz_path = eval_dir / "predictions.npz"
    metrics_path = eval_dir / "metrics.csv"
    if not npz_path.exists() or not metrics_path.exists():
        raise MissingArtifacts(
            f"{eval_dir} lacks predictions.npz/metrics.csv; run evaluate first"
        )
    data = np.load(npz_path)
    predictions, labels = data["predictions"], data["labels"]
    target = str(data["target_channel"])
    unit = "IU" if target == "bolus_insulin" else "mg/dl"

    per_clip = np.abs(predictions - labels).mean(axis=1)
    per_slot = np.abs(predictions - labels).mean(axis=0)
    table_path = out / TABLE_NAME
    with open(table_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["target", target])
        writer.writerow(["unit", unit])
        writer.writerow(["clips", str(len(per_clip))])
        writer.writerow(["mae_overall", f"{np.abs(predictions - labels).mean():.6f}"])
        for slot, value in enumerate(per_slot):
            writer.writerow([f"mae_slot_{slot + 1}", f"{value:.6f}"])

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    worst = int(np.argmax(per_clip))
    best = int(np.argmin(per_clip))
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=True)
    for ax, idx, title in ((axes[0], best, "best clip"), (axes[1], worst, "worst clip")):
        slots = np.arange(1, predictions.shape[1] + 1)
        ax.plot(slots, labels[idx], "o-", label="reference")
        ax.plot(slots, predictions[idx], "s--", label="predicted")
        ax.set_title(f"{title} (#{idx})")
        ax.set_xlabel("future slot")
    axes[0].set_ylabel(f"{target} ({unit})")
    axes[0].legend()
    fig.tight_layout()
    trace_path = out / TRACE_PLOT_NAME
    fig.savefig(trace_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(per_clip, bins=min(30, max(5, len(per_clip) // 3)), edgecolor="black")
    ax.set_xlabel(f"per-clip MAE ({unit})")
    ax.set_ylabel("clips")
    fig.tight_layout()
    hist_path = out / ERROR_PLOT_NAME
    fig.savefig(hist_path, dpi=120)
    plt.close(fig)

    return [table_path, trace_path, hist_path]
