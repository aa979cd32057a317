"""Post-run reporting: summary statistics and diagnostic figures.

Reads the ``series.csv`` written by the simulator, prints decay and
attenuation summaries, and renders 2-D time-series figures (PNG) next to
the delimited output.  Field surface plots are intentionally not produced;
the snapshot CSV carries the raw (t, x) data instead.
"""

from __future__ import annotations

import csv
import os

import numpy as np

SERIES_COLUMNS = ("t", "e_norm", "eps_norm", "xi", "d_norm",
                  "int_e_sq", "int_d_sq")


class ReportError(ValueError):
    """series.csv is missing, malformed or too short."""


def read_series(path) -> dict:
    """Load series.csv into a dict of column arrays; validates the header
    and requires at least two rows."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ReportError(f"{path}: empty file") from None
        missing = [c for c in SERIES_COLUMNS if c not in header]
        if missing:
            raise ReportError(f"{path}: missing columns {', '.join(missing)}")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ReportError(f"{path}: insufficient data "
                          f"({len(rows)} row(s), need at least 2)")
    data = np.asarray(rows).T
    return {name: data[header.index(name)] for name in SERIES_COLUMNS}


def summarize(series: dict) -> dict:
    """Decay and attenuation summary of a series."""
    e = series["e_norm"]
    xi = series["xi"]
    out = {"t_final": float(series["t"][-1]),
           "initial_e_norm": float(e[0]),
           "final_e_norm": float(e[-1])}
    if e[0] > 0:
        out["decay_ratio"] = float(e[-1] / e[0])
    else:
        out["decay_ratio"] = 0.0
        out["degenerate"] = "initial error norm is zero"
    if np.all(np.isfinite(xi)):
        out["max_xi_increase"] = float(np.max(np.diff(xi))) if xi.size > 1 else 0.0
    int_d = series["int_d_sq"][-1]
    if int_d > 0:
        out["hinf_ratio"] = float(series["int_e_sq"][-1] / int_d)
    return out


def print_summary(summary: dict) -> None:
    print(f"final time:            {summary['t_final']:g}")
    print(f"initial e_norm:        {summary['initial_e_norm']:.6g}")
    print(f"final e_norm:          {summary['final_e_norm']:.6g}")
    line = f"decay ratio:           {summary['decay_ratio']:.6g}"
    if "degenerate" in summary:
        line += f" (degenerate: {summary['degenerate']})"
    print(line)
    if "max_xi_increase" in summary:
        print(f"max xi increase/step:  {summary['max_xi_increase']:.6g}")
    else:
        print("max xi increase/step:  n/a (no certificate recorded)")
    if "hinf_ratio" in summary:
        print(f"hinf ratio:            {summary['hinf_ratio']:.6g}")
    else:
        print("hinf ratio:            n/a (disturbance inactive)")


def render_figures(series: dict, out_dir) -> list:
    """Render the diagnostic figures into ``out_dir``; returns the paths.

    Produces the error-norm history, the Lyapunov energy history (when
    recorded) and the disturbance/attenuation history (when the
    disturbance is active).
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    t = series["t"]
    paths = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, series["e_norm"], label="|e|")
    ax.plot(t, series["eps_norm"], "--", label="|eps|")
    ax.set_xlabel("t")
    ax.set_ylabel("L2 norm")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, "error_norms.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    xi = series["xi"]
    if np.all(np.isfinite(xi)):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(t, xi, color="tab:purple")
        ax.set_xlabel("t")
        ax.set_ylabel("Lyapunov energy")
        fig.tight_layout()
        path = os.path.join(out_dir, "lyapunov.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

    if series["int_d_sq"][-1] > 0:
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
        ax1.plot(t, series["d_norm"], color="tab:red")
        ax1.set_ylabel("|d(t)|")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(series["int_d_sq"] > 0,
                             series["int_e_sq"] / series["int_d_sq"], np.nan)
        ax2.plot(t, ratio, color="tab:green")
        ax2.set_xlabel("t")
        ax2.set_ylabel("running ratio")
        fig.tight_layout()
        path = os.path.join(out_dir, "disturbance.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
