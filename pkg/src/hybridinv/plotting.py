"""Optional PNG rendering of hybrid arcs (needs the ``plot`` extra)."""

from __future__ import annotations

from .systems import HybridArc


def _pyplot():
    try:
        import matplotlib
    except ImportError as e:  # pragma: no cover - depends on the environment
        raise RuntimeError("plotting needs matplotlib; install the 'plot' extra") from e
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_arc(arc: HybridArc, path, labels=None, title: str = "") -> None:
    """Components against flow time, plus the phase portrait of the last two."""
    plt = _pyplot()
    n = arc.dim
    labels = list(labels) if labels else [f"x_{i + 1}" for i in range(n)]
    phase = n >= 2
    fig, axes = plt.subplots(1, 2 if phase else 1, figsize=(10 if phase else 6, 4), squeeze=False)
    ax = axes[0, 0]
    for i in range(n):
        color = f"C{i}"
        for k, (t, x) in enumerate(zip(arc.times, arc.states)):
            ax.plot(t, x[:, i], color=color, lw=1, label=labels[i] if k == 0 else None)
    for jr in arc.jumps:
        ax.axvline(jr.t, color="0.85", lw=0.5, zorder=0)
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize="small")
    if phase:
        a, b = n - 2, n - 1
        ax = axes[0, 1]
        for x in arc.states:
            ax.plot(x[:, a], x[:, b], color="C0", lw=1)
        for jr in arc.jumps:
            ax.plot([jr.x_before[a], jr.x_after[a]], [jr.x_before[b], jr.x_after[b]], color="C3", ls=":", lw=0.8)
        x0 = arc.x_initial
        ax.plot([x0[a]], [x0[b]], "ko", ms=4)
        ax.set_xlabel(labels[a])
        ax.set_ylabel(labels[b])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
