"""Figure rendering for the CLI report paths.

matplotlib is an optional dependency (``pip install cardgauge[plot]``).
It is imported only when a figure is requested, and figures are drawn on
a bare ``Figure`` so no GUI backend is ever touched.
"""

from __future__ import annotations

from pathlib import Path

from .diagnostics import CoverageMatrix
from .reporting import CardReport
from .scoring import Verdict

_VERDICT_COLOR = {
    Verdict.SUFFICIENT: "#3b7d3b",
    Verdict.INSUFFICIENT: "#b23a3a",
    Verdict.VACUOUS: "#9a9a9a",
}


def _figure(width: float, height: float):
    try:
        from matplotlib.figure import Figure
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise RuntimeError("figure output needs matplotlib: pip install 'cardgauge[plot]'") from exc
    return Figure(figsize=(width, height), dpi=100)


def plot_coverage_heatmap(matrix: CoverageMatrix, path: str | Path, *,
                          grid: str = "union", names: dict[str, str] | None = None) -> Path:
    """Task-family x module heatmap; darker cells mean lower coverage."""
    rows = {"union": matrix.values, "mean": matrix.mean_values}[grid]
    names = names or {}
    n_rows, n_cols = max(len(rows), 1), len(matrix.modules)
    fig = _figure(1.2 + 1.1 * n_cols, 1.6 + 0.45 * n_rows)
    ax = fig.add_subplot(1, 1, 1)
    data = [list(r) for r in rows] or [[0.0] * n_cols]
    im = ax.imshow(data, cmap="magma", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(n_cols))
    ax.set_xticklabels([names.get(m, m) for m in matrix.modules], rotation=35, ha="right",
                       fontsize=8)
    ax.set_yticks(range(len(matrix.task_families)))
    ax.set_yticklabels(matrix.task_families, fontsize=8)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=7,
                    color="black" if v > 0.55 else "white")
    cbar = fig.colorbar(im, ax=ax)
    cbar.set_label("coverage")
    ax.set_title(f"Module coverage by task family ({grid})", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    return path


def plot_module_scores(report: CardReport, path: str | Path) -> Path:
    """Bars of cumulative prior per module with the baseline marked."""
    scores = report.module_scores
    fig = _figure(8.0, 4.0)
    ax = fig.add_subplot(1, 1, 1)
    xs = range(len(scores))
    ax.bar(xs, [s.cumulative_prior for s in scores],
           color=[_VERDICT_COLOR[s.verdict] for s in scores], width=0.6)
    for x, s in zip(xs, scores):
        ax.hlines(s.baseline, x - 0.4, x + 0.4, colors="black", linewidth=1.5)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([report.name(s.module_id) for s in scores], rotation=35, ha="right",
                       fontsize=8)
    ax.set_ylabel("cumulative prior")
    ax.set_title(f"{report.project_id}: documented prior vs baseline", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    return path
