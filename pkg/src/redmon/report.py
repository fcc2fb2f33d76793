"""Render a verdicts file to CSV plus matplotlib figures.

The CSV has one row per step: t, failed (-1 when no substitution is
flagged) and one err_i column per substitution. Three PNGs land next to
it: the substitution outputs over time (midpoint with interval error
bars), the per-substitution error curves, and the flagged index.
"""

from __future__ import annotations

import csv
import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .monitor import VerdictRecord, read_verdicts


class ReportError(ValueError):
    """Verdicts unusable for reporting."""


def _num_substitutions(records: Sequence[VerdictRecord]) -> int:
    if not records:
        raise ReportError("no verdict records")
    sizes = {len(r.errors) for r in records}
    if len(sizes) != 1:
        raise ReportError(f"inconsistent error vector lengths: {sorted(sizes)}")
    return sizes.pop()


def write_csv(path: str, records: Sequence[VerdictRecord]) -> None:
    n = _num_substitutions(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "failed"] + [f"err_{i}" for i in range(n)])
        for r in records:
            failed = -1 if r.failed is None else r.failed
            writer.writerow([r.t, failed] + list(r.errors))


def _plot_outputs(path: str, records: Sequence[VerdictRecord], n: int) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    cmap = plt.get_cmap("tab10")
    for i in range(n):
        ts, mids, half = [], [], []
        for r in records:
            for out in r.outputs:
                if out["s"] != i or not out["v"]:
                    continue
                lo, hi = out["v"][0]
                ts.append(r.t)
                mids.append((lo + hi) / 2.0)
                half.append((hi - lo) / 2.0)
        if ts:
            ax.errorbar(
                ts,
                mids,
                yerr=half,
                fmt=".",
                markersize=4,
                capsize=2,
                linewidth=0.8,
                color=cmap(i % 10),
                label=f"s{i}",
            )
    ax.set_xlabel("t")
    ax.set_ylabel("output (dim 0)")
    ax.set_title("substitution outputs")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_errors(path: str, records: Sequence[VerdictRecord], n: int) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    cmap = plt.get_cmap("tab10")
    ts = [r.t for r in records]
    for i in range(n):
        ax.plot(
            ts,
            [r.errors[i] for r in records],
            linewidth=1.0,
            color=cmap(i % 10),
            label=f"err_{i}",
        )
    ax.set_xlabel("t")
    ax.set_ylabel("accumulated gap")
    ax.set_title("per-substitution error")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_failed(path: str, records: Sequence[VerdictRecord], n: int) -> None:
    fig, ax = plt.subplots(figsize=(8, 2.8))
    ts = [r.t for r in records]
    failed = [-1 if r.failed is None else r.failed for r in records]
    ax.step(ts, failed, where="post", linewidth=1.0, color="tab:red")
    ax.set_xlabel("t")
    ax.set_ylabel("failed index")
    ax.set_yticks(list(range(-1, n)))
    ax.set_ylim(-1.5, n - 0.5)
    ax.set_title("flagged substitution (-1: none)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(
    verdicts_path: str, out_dir: Optional[str] = None, stem: Optional[str] = None
) -> dict[str, str]:
    """Write report.csv and three PNGs; returns the paths by artifact name."""
    meta, records = read_verdicts(verdicts_path)
    n = _num_substitutions(records)
    if out_dir is None:
        out_dir = os.path.dirname(os.path.abspath(verdicts_path))
    os.makedirs(out_dir, exist_ok=True)
    if stem is None:
        stem = os.path.splitext(os.path.basename(verdicts_path))[0]
    paths = {
        "csv": os.path.join(out_dir, f"{stem}.csv"),
        "outputs": os.path.join(out_dir, f"{stem}_outputs.png"),
        "errors": os.path.join(out_dir, f"{stem}_errors.png"),
        "failed": os.path.join(out_dir, f"{stem}_failed.png"),
    }
    write_csv(paths["csv"], records)
    _plot_outputs(paths["outputs"], records, n)
    _plot_errors(paths["errors"], records, n)
    _plot_failed(paths["failed"], records, n)
    return paths
