"""Report figures rendered to files.

Non-interactive (Agg) backend only; every function writes a PNG and returns
its path.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .simulator import vehicle_columns  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
}

LIMIT_COLOR = "tab:red"


def _figsize(width=6.5, rows=1, row_height=None):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    h = row_height if row_height is not None else width * golden
    return width, h * rows


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def _draw_profile(ax, cols, label_limits=True):
    charted = cols["charted"].astype(bool)
    tau = np.where(charted, cols["tau_hat"], np.nan)
    ax.plot(cols["t"], tau, color="tab:blue", label="estimated time gap")
    kw = {"color": LIMIT_COLOR, "linewidth": 0.9}
    ax.plot(cols["t"], cols["ucl"], label="control limits" if label_limits else None, **kw)
    ax.plot(cols["t"], cols["lcl"], **kw)
    ax.plot(cols["t"], cols["active_tau_star"], color=LIMIT_COLOR, linestyle="--",
            linewidth=0.7)
    flags = cols["violation"].astype(bool)
    if flags.any():
        ax.plot(cols["t"][flags], cols["tau_hat"][flags], "o", ms=2, color="tab:orange",
                label="out of control")


def plot_time_gap_profiles(records, path):
    """One panel per follower: charted time gap with control limits."""
    ids = sorted({r.vehicle_id for r in records})
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(ids), 1, sharex=True, squeeze=False, layout="constrained",
                                 figsize=_figsize(rows=len(ids), row_height=1.5))
        for ax, vid in zip(axes[:, 0], ids):
            _draw_profile(ax, vehicle_columns(records, vid), label_limits=vid == ids[0])
            ax.set_ylabel(f"veh {vid} [s]")
        axes[0, 0].legend(loc="upper right", ncol=3)
        axes[-1, 0].set_xlabel("time [s]")
        return _save(fig, path)


def plot_regime_comparison(records, vehicle_id, path):
    """Time gap of one vehicle, split at each change of its time-gap setting."""
    cols = vehicle_columns(records, vehicle_id)
    stars = cols["active_tau_star"]
    bounds = np.concatenate([[0], np.flatnonzero(stars[1:] != stars[:-1]) + 1, [stars.size]])
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(bounds) - 1, 1, squeeze=False, layout="constrained",
                                 figsize=_figsize(rows=len(bounds) - 1, row_height=2.0))
        for ax, lo, hi in zip(axes[:, 0], bounds[:-1], bounds[1:]):
            seg = {k: v[lo:hi] for k, v in cols.items()}
            _draw_profile(ax, seg)
            ax.set_title(f"vehicle {vehicle_id}, time gap setting {stars[lo]:g} s")
            ax.set_ylabel("time gap [s]")
        axes[-1, 0].set_xlabel("time [s]")
        return _save(fig, path)


def plot_lead(lead, path):
    """Leader speed profile and trajectory."""
    with plt.rc_context(STYLE):
        fig, (ax_v, ax_x) = plt.subplots(1, 2, layout="constrained", figsize=_figsize(width=7.5, row_height=2.6))
        ax_v.plot(lead.t, lead.v / 0.44704)
        ax_v.set_xlabel("time [s]")
        ax_v.set_ylabel("speed [mph]")
        ax_x.plot(lead.t, lead.x)
        ax_x.set_xlabel("time [s]")
        ax_x.set_ylabel("position [m]")
        return _save(fig, path)


def render_report(result, out_dir):
    """Write the standard figure set for a simulation result; returns the paths."""
    out_dir = Path(out_dir)
    paths = [plot_lead(result.lead, out_dir / "lead_profile.png")]
    if result.records:
        paths.append(plot_time_gap_profiles(result.records, out_dir / "time_gap_profiles.png"))
        for vid in sorted({r.vehicle_id for r in result.records}):
            cols = vehicle_columns(result.records, vid)
            if np.unique(cols["active_tau_star"]).size > 1:
                paths.append(plot_regime_comparison(
                    result.records, vid, out_dir / f"vehicle_{vid}_regimes.png"))
    return paths
