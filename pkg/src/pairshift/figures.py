"""Bar-chart rendering for the report path: one figure per country."""

from __future__ import annotations

import re
from pathlib import Path

COMPONENT_ORDER = ("preference", "availability", "interaction")
COMPONENT_COLORS = {
    "preference": "#444444",
    "availability": "#bbbbbb",
    "interaction": "#e0e0e0",
}


def _safe_name(country: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "_", country) or "unnamed"


def render_report_figures(schemes: list[str],
                          by_scheme: dict[str, dict[tuple[str, str, str], float]],
                          out_dir: str | Path) -> list[Path]:
    """Render component bars per country, one panel per scheme.

    `by_scheme` maps scheme name to {(country, period, component): value}.
    Writes ``<country>.png`` files into `out_dir` and returns their paths.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    countries = sorted({key[0] for values in by_scheme.values() for key in values})
    written: list[Path] = []
    for country in countries:
        periods = sorted({
            key[1] for values in by_scheme.values()
            for key in values if key[0] == country
        })
        fig, axes = plt.subplots(
            len(schemes), 1, figsize=(max(6.0, 1.8 * len(periods)), 2.6 * len(schemes)),
            sharex=True, sharey=True, squeeze=False,
        )
        for ax, scheme in zip(axes.ravel(), schemes):
            values = by_scheme[scheme]
            width = 0.8 / len(COMPONENT_ORDER)
            for offset, component in enumerate(COMPONENT_ORDER):
                heights = [values.get((country, period, component), 0.0)
                           for period in periods]
                positions = [i + (offset - 1) * width for i in range(len(periods))]
                ax.bar(positions, heights, width=width, label=component,
                       color=COMPONENT_COLORS[component], edgecolor="black",
                       linewidth=0.5)
            totals = [values.get((country, period, "total"), 0.0)
                      for period in periods]
            ax.plot(range(len(periods)), totals, "kD", markersize=5, label="total")
            ax.axhline(0.0, color="black", linewidth=0.8)
            ax.set_title(scheme, fontsize=10)
            ax.set_xticks(range(len(periods)))
            ax.set_xticklabels(periods, fontsize=9)
        axes.ravel()[0].legend(fontsize=8, ncol=4, frameon=False)
        fig.suptitle(f"Homogamy-share change components: {country}")
        fig.supylabel("change in homogamy share")
        fig.tight_layout()
        target = out_dir / f"{_safe_name(country)}.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)
    return written
