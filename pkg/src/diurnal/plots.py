"""Static SVG figures built from report tables only."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    with matplotlib.rc_context({"svg.hashsalt": "diurnal", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def _hours_axis(ax):
    ax.set_xlim(0, 24)
    ax.set_xticks(range(0, 25, 3))
    ax.set_xlabel("hour of day")


def plot_curves(table, value: str, title: str, path: Path, x: str = "bin") -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    for group, sub in table.groupby("group", sort=True):
        ax.plot(sub[x].to_numpy() / 4.0 + 0.125, sub[value].to_numpy(), label=str(group))
    _hours_axis(ax)
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_heatmap(table, title: str, path: Path) -> Path:
    values = table.drop(columns=["month"]).to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(8, max(3, 0.18 * len(values))))
    masked = np.ma.masked_invalid(values)
    cmap = plt.get_cmap("Reds").copy()
    cmap.set_bad("0.8")
    ax.imshow(masked, aspect="auto", cmap=cmap, extent=(0, 24, len(values), 0), interpolation="nearest")
    ax.set_yticks(np.arange(len(values)) + 0.5)
    ax.set_yticklabels(table["month"].astype(str), fontsize=6)
    _hours_axis(ax)
    ax.set_title(title)
    return _save(fig, path)


def plot_clockface(activity, ratio, wake, path: Path) -> Path:
    """Polar summary: activity curves, susceptible bins shaded, waking windows as arcs."""
    groups = sorted(activity["group"].unique())
    fig, axes = plt.subplots(1, len(groups), subplot_kw={"projection": "polar"},
                             figsize=(3.2 * len(groups), 3.4), squeeze=False)
    theta = 2 * np.pi * (np.arange(96) + 0.5) / 96
    for ax, group in zip(axes[0], groups):
        ax.set_theta_zero_location("N")
        ax.set_theta_direction(-1)
        a = activity.loc[activity["group"] == group, "spectral"].to_numpy()
        ax.plot(np.append(theta, theta[0]), np.append(a, a[0]))
        r = ratio.loc[ratio["group"] == group] if len(ratio) else ratio
        top = float(np.nanmax(a)) if a.size else 1.0
        if len(r):
            sus = r["susceptible"].to_numpy().astype(bool)
            ax.bar(theta[sus], top, width=2 * np.pi / 96, color="tab:red", alpha=0.2)
        w = wake.loc[wake["group"] == group]
        if len(w):
            onset, length = float(w["onset"].iloc[0]), float(w["length"].iloc[0])
            arc = 2 * np.pi * (onset + np.linspace(length, 24, 50)) / 24
            ax.plot(arc, np.full(arc.shape, 0.15 * top), color="0.5", lw=3)
        ax.set_xticks(2 * np.pi * np.arange(0, 24, 3) / 24)
        ax.set_xticklabels([f"{h:02d}" for h in range(0, 24, 3)])
        ax.set_yticklabels([])
        ax.set_title(str(group), fontsize="small")
    return _save(fig, path)


def write_plots(bundle, out: Path) -> list[Path]:
    t = bundle.tables
    files = []
    if "activity_curves" in t:
        files.append(plot_curves(t["activity_curves"], "spectral", "activity by time of day",
                                 out / "activity_clock.svg"))
        files.append(plot_curves(t["activity_curves"], "aligned_spectral", "activity by hours since waking",
                                 out / "activity_waking.svg"))
    if len(t.get("ratio_curves", ())):
        files.append(plot_curves(t["ratio_curves"], "spectral", "disinformative ratio by time of day",
                                 out / "ratio_clock.svg"))
    for name in sorted(t):
        if name.startswith("heatmap_"):
            files.append(plot_heatmap(t[name], name[len("heatmap_"):], out / f"{name}.svg"))
    if "activity_curves" in t and "wake_windows" in t:
        files.append(plot_clockface(t["activity_curves"], t.get("ratio_curves", []), t["wake_windows"],
                                    out / "clockface.svg"))
    return files
