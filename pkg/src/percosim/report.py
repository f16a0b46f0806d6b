"""Figure rendering for sweep results: PNGs written next to the delimited output."""

from __future__ import annotations

from pathlib import Path

from .scenarios import Metrics


def _series(rows, name):
    pairs = [(r.seed, getattr(r, name)) for r in rows if getattr(r, name) is not None]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def render_figures(rows: list[Metrics], out_dir: Path, basename: str) -> list[Path]:
    """Render the standard sweep figures; returns the files actually written.

    Figures with no data (for example transfer plots of a storage sweep) are
    skipped rather than emitted empty.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    rate_series = [
        ("routing_success_rate", "routing success"),
        ("delivery_rate", "delivery"),
        ("storage_recovery_rate", "storage recovery"),
        ("storage_adversary_rate", "storage adversary"),
    ]
    fig, ax = plt.subplots(figsize=(7, 4))
    plotted = False
    for name, label in rate_series:
        xs, ys = _series(rows, name)
        if xs:
            ax.plot(xs, ys, marker="o", linestyle="-", label=label)
            plotted = True
    if plotted:
        ax.set_xlabel("seed")
        ax.set_ylabel("rate")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(f"{basename}: success rates per seed")
        ax.legend(loc="best")
        ax.grid(True, alpha=0.3)
        path = out_dir / f"{basename}_rates.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        written.append(path)
    plt.close(fig)

    xs, ys = _series(rows, "mean_overhead_ratio")
    if xs:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar([str(x) for x in xs], ys, color="#4878a8")
        ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
        ax.set_xlabel("seed")
        ax.set_ylabel("received / k")
        ax.set_title(f"{basename}: coded-packet overhead per seed")
        path = out_dir / f"{basename}_overhead.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        written.append(path)
        plt.close(fig)

    _, hops = _series(rows, "mean_hops")
    if hops:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.hist(hops, bins=min(12, max(3, len(set(hops)))), color="#6aa86a", edgecolor="black")
        ax.set_xlabel("mean hops per selected path")
        ax.set_ylabel("runs")
        ax.set_title(f"{basename}: path length distribution")
        path = out_dir / f"{basename}_hops.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        written.append(path)
        plt.close(fig)

    xs, ys = _series(rows, "mean_ticks_to_delivery")
    if xs:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(xs, ys, marker="s", color="#a86a6a")
        ax.set_xlabel("seed")
        ax.set_ylabel("ticks")
        ax.set_title(f"{basename}: time to delivery per seed")
        ax.grid(True, alpha=0.3)
        path = out_dir / f"{basename}_ticks.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        written.append(path)
        plt.close(fig)

    return written
