"""SVG figures of recorded runs (matplotlib, non-interactive backend)."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .engine import SimResult  # noqa: E402

__all__ = ["PLOT_KINDS", "plot_svg"]

PLOT_KINDS = ("states", "errors", "surfaces", "inputs")


def _series_axes(fig, rows):
    return fig.subplots(rows, 1, sharex=True, squeeze=False)[:, 0]


def plot_svg(result, what: str, path) -> Path:
    """Write one figure of ``result`` (a ``SimResult`` or a CSV path) as SVG.

    ``errors`` overlays the TBG references ``H(t) e_i(0)`` as dashed curves.
    """
    if what not in PLOT_KINDS:
        raise ValueError(f"unknown plot {what!r}; valid options: {', '.join(PLOT_KINDS)}")
    if not isinstance(result, SimResult):
        from .scenario import read_csv

        result = read_csv(result)
    n, N = result.order, result.n_agents
    t = result.t

    if what in ("states", "errors"):
        fig = plt.figure(figsize=(7, 2.2 * n))
        axes = _series_axes(fig, n)
        for j, ax in enumerate(axes):
            if what == "states":
                for i in range(N):
                    ax.plot(t, result.x[:, i, j], lw=1, label=f"agent {i + 1}")
                ax.plot(t, result.x_leader[:, j], "k-", lw=1.5, label="leader")
                ax.set_ylabel(f"x{j + 1}")
            else:
                for i in range(N):
                    (line,) = ax.plot(t, result.e[:, i, j], lw=1, label=f"agent {i + 1}")
                    ax.plot(t, result.ref[:, i, j], "--", lw=1, color=line.get_color())
                ax.set_ylabel(f"e{j + 1}")
        axes[0].legend(fontsize="x-small", ncol=3, loc="upper right")
    else:
        fig = plt.figure(figsize=(7, 3.2))
        ax = _series_axes(fig, 1)[0]
        series, label = (result.s, "s") if what == "surfaces" else (result.v, "v")
        for i in range(N):
            ax.plot(t, series[:, i], lw=1, label=f"agent {i + 1}")
        ax.set_ylabel(label)
        ax.legend(fontsize="x-small", ncol=4, loc="upper right")
        axes = [ax]

    if "t_f" in result.meta:
        for ax in axes:
            ax.axvline(result.meta["t_f"], color="grey", lw=0.8, ls=":")
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(f"{result.meta.get('scenario', '')} {what}".strip())
    fig.tight_layout()

    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    from .scenario import atomic_write_text

    path = Path(path)
    atomic_write_text(path, buf.getvalue())
    return path
