"""Figure recipes over the simulator's CSV schemas.

Each recipe binds one CSV layout to one figure style: convergence traces
become mean curves with min/max bands on a log axis, sum-rate sweeps
become per-design line plots, and the power decomposition becomes
stacked signal/interference bars. The renderer never modifies its input
and produces byte-identical images for identical CSV content.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

matplotlib.rcParams["svg.hashsalt"] = "bdris-plots"

FIGURES = (
    "convergence",
    "sumrate-power",
    "sumrate-users",
    "sumrate-elements",
    "decomposition",
)

_SWEEP_COLUMNS = ["design", "bs_scheme", "sweep_value", "trial", "sum_rate_bpshz"]
_REQUIRED = {
    "convergence": ["design", "trial", "iteration", "residual"],
    "sumrate-power": _SWEEP_COLUMNS,
    "sumrate-users": _SWEEP_COLUMNS,
    "sumrate-elements": _SWEEP_COLUMNS,
    "decomposition": ["design", "variant", "trial", "signal_power",
                      "interference_power", "frob_power"],
}
_X_LABEL = {
    "sumrate-power": "transmit power (dBm)",
    "sumrate-users": "number of users",
    "sumrate-elements": "number of surface elements",
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FigureRecipe:
    input_csv: str
    figure: str
    output: str
    log_y: bool | None = None   # default: log for convergence, linear otherwise
    band: bool = True           # shade min/max around the mean where applicable

    def __post_init__(self) -> None:
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r} (choose from {FIGURES})")


@dataclass
class RenderResult:
    """What was drawn; series are exposed for tests and downstream checks."""

    output: str
    empty: bool
    series: dict = field(default_factory=dict)


def _load(recipe: FigureRecipe) -> pd.DataFrame:
    df = pd.read_csv(recipe.input_csv)
    missing = [c for c in _REQUIRED[recipe.figure] if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{recipe.input_csv} does not match the {recipe.figure} schema: "
            f"missing column {missing[0]!r}"
        )
    return df


def _save(fig, recipe: FigureRecipe) -> None:
    kwargs = {}
    if recipe.output.endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(recipe.output, dpi=150, **kwargs)
    plt.close(fig)


def render(recipe: FigureRecipe) -> RenderResult:
    """Render one figure; a header-only CSV yields empty axes plus a warning."""
    df = _load(recipe)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    result = RenderResult(output=recipe.output, empty=df.empty)
    if df.empty:
        warnings.warn(f"{recipe.input_csv} has no data rows; rendering empty axes")
        ax.set_title(f"{recipe.figure} (no data)")
        _save(fig, recipe)
        return result

    if recipe.figure == "convergence":
        _draw_convergence(ax, df, recipe, result)
    elif recipe.figure == "decomposition":
        _draw_decomposition(ax, df, recipe, result)
    else:
        _draw_sumrate(ax, df, recipe, result)
    fig.tight_layout()
    _save(fig, recipe)
    return result


def _draw_convergence(ax, df, recipe, result):
    for design, group in df.groupby("design", sort=True):
        stats = group.groupby("iteration")["residual"].agg(["mean", "min", "max"])
        line, = ax.plot(stats.index, stats["mean"], label=design)
        if recipe.band:
            ax.fill_between(stats.index, stats["min"], stats["max"],
                            alpha=0.25, color=line.get_color(), linewidth=0)
        result.series[design] = {
            "iteration": stats.index.to_numpy(),
            "mean": stats["mean"].to_numpy(),
            "min": stats["min"].to_numpy(),
            "max": stats["max"].to_numpy(),
        }
    if recipe.log_y or recipe.log_y is None:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("squared nulling norm")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def _draw_sumrate(ax, df, recipe, result):
    for (design, scheme), group in df.groupby(["design", "bs_scheme"], sort=True):
        curve = group.groupby("sweep_value")["sum_rate_bpshz"].mean().sort_index()
        label = f"{design} + {scheme}" if isinstance(scheme, str) and scheme else design
        ax.plot(curve.index, curve.to_numpy(), marker="o", markersize=3, label=label)
        result.series[(design, str(scheme))] = {
            "x": curve.index.to_numpy(),
            "mean": curve.to_numpy(),
        }
    if recipe.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(_X_LABEL[recipe.figure])
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)


def _draw_decomposition(ax, df, recipe, result):
    stats = (
        df.groupby(["design", "variant"], sort=True)[
            ["signal_power", "interference_power", "frob_power"]
        ]
        .mean()
        .reset_index()
    )
    labels = [f"{r.design}\n{r.variant}" for r in stats.itertuples()]
    x = np.arange(len(stats))
    ax.bar(x, stats["signal_power"], width=0.6, label="signal")
    ax.bar(x, stats["interference_power"], width=0.6,
           bottom=stats["signal_power"], label="interference")
    ax.plot(x, stats["frob_power"], "k_", markersize=18, label="total channel power")
    ax.set_xticks(x, labels, fontsize=8)
    if recipe.log_y or recipe.log_y is None:
        ax.set_yscale("log")
    ax.set_ylabel("power")
    ax.legend(fontsize=8)
    for r in stats.itertuples():
        result.series[(r.design, r.variant)] = {
            "signal": r.signal_power,
            "interference": r.interference_power,
            "frob": r.frob_power,
        }
