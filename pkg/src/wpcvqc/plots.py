"""Figure rendering for experiment reports.

The report path renders a criteria panel plus histograms of the numeric
per-trial fields next to the delimited output. Files go to the experiment's
output directory as PNG.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

HIST_FIELDS = ("estimate", "distance", "p_final", "p_star", "oracle_calls",
               "relative_error", "fraction_below", "max_dev",
               "worst_distance", "quality")


def render_criteria_figure(summary, path: Path) -> Path:
    names = [c.name for c in summary.criteria]
    values = [c.value for c in summary.criteria]
    bounds = [c.bound for c in summary.criteria]
    colors = ["tab:green" if c.passed else "tab:red"
              for c in summary.criteria]
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.5 * len(names) + 1)))
    y = np.arange(len(names))
    ax.barh(y, values, color=colors, alpha=0.8, label="measured")
    for yi, b in zip(y, bounds):
        ax.plot([b, b], [yi - 0.4, yi + 0.4], color="k", lw=1.5)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("measured value (black tick = recomputed bound)")
    ax.set_title(f"{summary.experiment}: "
                 f"{'PASS' if summary.passed else 'FAIL'}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_field_histograms(experiment: str, records, out_dir: Path) -> list:
    files = []
    for fld in HIST_FIELDS:
        vals = [r[fld] for r in records
                if isinstance(r.get(fld), (int, float))
                and not isinstance(r.get(fld), bool)]
        if len(vals) < 5:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(vals, bins=min(40, max(8, len(set(vals)))),
                color="tab:blue", alpha=0.85)
        ax.set_xlabel(fld)
        ax.set_ylabel("trials")
        ax.set_title(f"{experiment}: {fld}")
        fig.tight_layout()
        path = out_dir / f"{experiment}_{fld}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        files.append(path)
    return files


def render_report(experiment: str, summary, records, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [render_criteria_figure(summary, out / f"{experiment}_criteria.png")]
    files.extend(render_field_histograms(experiment, records, out))
    return files
