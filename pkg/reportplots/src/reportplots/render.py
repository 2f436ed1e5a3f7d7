"""Drawing code for the figure panels.

One PNG per input CSV.  Rendering is a pure function of the CSV bytes:
colors and layout are fixed here, the PNG metadata is pinned, and nothing
depends on the clock, so re-rendering the same bundle reproduces the same
image file.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.lines import Line2D
from matplotlib.patches import Patch

from .schemas import SchemaError, cell_float, cell_float_or_none, read_panel

ROBUST_COLOR = "tab:blue"
NONROBUST_COLOR = "tab:red"
EXACT_COLOR = "black"
PRESET_COLORS = ("tab:green", "tab:orange", "tab:purple", "tab:brown", "tab:pink")

# Fixed so a rerun writes byte-identical files (the default embeds the
# matplotlib version string, which would churn across environments).
PNG_METADATA = {"Software": "report-plots"}

DQ_TITLES = {
    "d": "Fidelity error distribution",
    "e": "Two-qubit correlator error distribution",
    "f": "Single-qubit purity error distribution",
    "g": "Two-qubit purity error distribution",
}


def _save(fig, out_path: Path) -> None:
    fig.savefig(out_path, dpi=150, metadata=PNG_METADATA)
    plt.close(fig)


def _dedup(values) -> list:
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _interval_errors(rows, source, values, lo_key, hi_key):
    """Asymmetric error-bar lengths from CI columns, or None when absent."""
    lows, highs = [], []
    for row, v in zip(rows, values):
        lo = cell_float_or_none(row, lo_key, source)
        hi = cell_float_or_none(row, hi_key, source)
        if lo is None or hi is None:
            warnings.warn(
                f"{source}: empty {lo_key}/{hi_key} cells, drawing points "
                "without error bars",
                stacklevel=3,
            )
            return None
        lows.append(v - lo)
        highs.append(hi - v)
    return np.clip(np.array([lows, highs]), 0.0, None)


def _render_panel_a(rows, out_path: Path, source: str) -> dict:
    presets = _dedup(r["preset"] for r in rows)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    counts = {}
    for idx, preset in enumerate(presets):
        sub = [r for r in rows if r["preset"] == preset]
        counts[preset] = len(sub)
        color = PRESET_COLORS[idx % len(PRESET_COLORS)]
        off = (idx - (len(presets) - 1) / 2) * 0.22
        x = np.array([cell_float(r, "qubit", source) for r in sub]) + off
        est = np.array([cell_float(r, "p_flip", source) for r in sub])
        true = np.array([cell_float(r, "p_flip_true", source) for r in sub])
        yerr = _interval_errors(sub, source, est, "ci_low", "ci_high")
        ax.errorbar(x, est, yerr=yerr, fmt="o", ms=4, capsize=2,
                    color=color, linestyle="none", label=preset)
        ax.scatter(x, true, marker="D", facecolors="none",
                   edgecolors=color, s=22, linewidths=0.9, zorder=3)
    handles, labels = ax.get_legend_handles_labels()
    handles.append(Line2D([], [], marker="D", linestyle="none",
                          markerfacecolor="none", markeredgecolor="gray",
                          label="true rate"))
    labels.append("true rate")
    ax.legend(handles, labels, fontsize=8)
    ax.set_xlabel("qubit")
    ax.set_ylabel("flip rate $p_{flip}$")
    ax.set_title("Per-qubit readout flip rates by pulse length")
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    _save(fig, out_path)
    return {"out": str(out_path), "n_points": len(rows),
            "presets": presets, "per_preset": counts}


def _comparison_series(ax, rows, source, x):
    """Exact, robust, and non-robust values of one estimate block."""
    exact = np.array([cell_float(r, "exact", source) for r in rows])
    robust = np.array([cell_float(r, "robust", source) for r in rows])
    nonrob = np.array([cell_float(r, "nonrobust", source) for r in rows])
    ax.scatter(x, exact, marker="D", color=EXACT_COLOR, s=24,
               zorder=3, label="exact")
    r_err = _interval_errors(rows, source, robust, "robust_ci_low", "robust_ci_high")
    n_err = _interval_errors(rows, source, nonrob,
                             "nonrobust_ci_low", "nonrobust_ci_high")
    ax.errorbar(x - 0.08, robust, yerr=r_err, fmt="o", ms=5, capsize=3,
                color=ROBUST_COLOR, linestyle="none", label="robust")
    ax.errorbar(x + 0.08, nonrob, yerr=n_err, fmt="s", ms=5, capsize=3,
                color=NONROBUST_COLOR, linestyle="none", label="non-robust")


def _render_panel_b(rows, out_path: Path, source: str) -> dict:
    estimators = _dedup(r["estimator"] for r in rows)
    fig, axes = plt.subplots(1, len(estimators), figsize=(4.5 * len(estimators), 4.0),
                             sharey=True, squeeze=False)
    for ax, estimator in zip(axes[0], estimators):
        sub = [r for r in rows if r["estimator"] == estimator]
        x = np.arange(len(sub), dtype=float)
        _comparison_series(ax, sub, source, x)
        ax.set_xticks(x)
        ax.set_xticklabels([r["pair"] for r in sub], rotation=45, fontsize=8)
        ax.set_xlabel("qubit pair")
        ax.set_title(f"{estimator} estimator")
        ax.grid(True, alpha=0.25)
    axes[0][0].set_ylabel("pair purity")
    axes[0][0].legend(fontsize=8)
    fig.suptitle("Two-qubit subsystem purities")
    fig.tight_layout()
    _save(fig, out_path)
    return {"out": str(out_path), "n_points": len(rows), "estimators": estimators}


def _render_panel_c(rows, out_path: Path, source: str) -> dict:
    fig, ax = plt.subplots(figsize=(max(6.0, 0.35 * len(rows)), 4.0))
    x = np.arange(len(rows), dtype=float)
    _comparison_series(ax, rows, source, x)
    mismatches = [k for k, r in enumerate(rows)
                  if r["sign_exact"] != r["sign_robust"]]
    for k in mismatches:
        ax.scatter([x[k]], [cell_float(rows[k], "robust", source)],
                   marker="x", color="red", s=60, zorder=4)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels([r["label"] for r in rows], rotation=60, fontsize=7)
    ax.set_ylabel("Pauli correlator")
    title = "Encoded correlators and decoded signs"
    if mismatches:
        title += f" ({len(mismatches)} sign mismatch(es) marked)"
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    _save(fig, out_path)
    return {"out": str(out_path), "n_points": len(rows),
            "n_sign_mismatches": len(mismatches)}


def _render_panel_dq(rows, out_path: Path, source: str) -> dict:
    presets = _dedup(r["preset"] for r in rows)
    methods = [m for m in ("NR", "R") if any(r["method"] == m for r in rows)]
    colors = {"NR": NONROBUST_COLOR, "R": ROBUST_COLOR}
    fig, ax = plt.subplots(figsize=(1.2 + 1.6 * len(presets), 4.0))
    for i, preset in enumerate(presets):
        for j, method in enumerate(methods):
            vals = np.array([
                cell_float(r, "delta", source) for r in rows
                if r["preset"] == preset and r["method"] == method
            ])
            if vals.size == 0:
                continue
            pos = i + (j - (len(methods) - 1) / 2) * 0.35
            if vals.size >= 2 and np.ptp(vals) > 0:
                parts = ax.violinplot([vals], positions=[pos], widths=0.3,
                                      showmedians=True, showextrema=False)
                for body in parts["bodies"]:
                    body.set_facecolor(colors[method])
                    body.set_alpha(0.55)
                parts["cmedians"].set_color(colors[method])
            else:
                # One sample (or zero spread) has no density to draw.
                ax.plot([pos] * vals.size, vals, marker="o", linestyle="none",
                        ms=4, color=colors[method], alpha=0.8)
    panel = rows[0]["panel"] if rows else "?"
    ax.set_xticks(np.arange(len(presets)))
    ax.set_xticklabels(presets, fontsize=9)
    ax.set_ylim(bottom=0.0)
    ax.set_ylabel(r"absolute error $\Delta q$")
    ax.set_title(DQ_TITLES.get(panel, f"Error distribution (panel {panel})"))
    ax.legend(handles=[Patch(facecolor=colors[m], alpha=0.55, label=m)
                       for m in methods], fontsize=8)
    ax.grid(True, axis="y", alpha=0.25)
    fig.tight_layout()
    _save(fig, out_path)
    return {"out": str(out_path), "n_points": len(rows),
            "presets": presets, "groups": methods}


_RENDERERS = {
    "panel_a": _render_panel_a,
    "panel_b": _render_panel_b,
    "panel_c": _render_panel_c,
    "panel_d": _render_panel_dq,
    "panel_e": _render_panel_dq,
    "panel_f": _render_panel_dq,
    "panel_g": _render_panel_dq,
}


def render_panel(csv_path: str | Path, out_dir: str | Path) -> dict:
    """Render one panel CSV to ``<out_dir>/<stem>.png``; returns a summary."""
    csv_path = Path(csv_path)
    rows = read_panel(csv_path)
    if not rows:
        raise SchemaError(f"{csv_path.name}: no data rows")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _RENDERERS[csv_path.stem](rows, out_dir / f"{csv_path.stem}.png",
                                     csv_path.name)


def render_all(in_dir: str | Path, out_dir: str | Path) -> dict[str, dict]:
    """Render every panel CSV found under ``in_dir``.

    Accepts either the figures directory itself or a run output root that
    contains a ``figures/`` subdirectory.
    """
    in_dir = Path(in_dir)
    paths = sorted(in_dir.glob("panel_*.csv"))
    if not paths and (in_dir / "figures").is_dir():
        paths = sorted((in_dir / "figures").glob("panel_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no panel_*.csv files under {in_dir}")
    return {p.stem: render_panel(p, out_dir) for p in paths}
