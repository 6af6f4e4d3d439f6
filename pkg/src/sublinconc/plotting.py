"""SVG tail plots for sandwich and sharpness runs."""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LOG_FLOOR = 1e-300


def _floor(values) -> np.ndarray:
    return np.maximum(np.asarray(values, dtype=float), LOG_FLOOR)


def sandwich_svg(rows: Sequence, title: str = "") -> str:
    """Log-scale tail plot: MC estimate with CI, the three upper bounds, the lower bound."""
    plt.rcParams["svg.hashsalt"] = "sublinconc"
    t = np.array([r.t for r in rows])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    point = np.array([r.mc.point for r in rows])
    lo = np.array([r.mc.ci_lo for r in rows])
    hi = np.array([r.mc.ci_hi for r in rows])
    ax.fill_between(t, _floor(lo), _floor(hi), color="0.8", label="MC 99% CI")
    ax.plot(t, _floor(point), "k.-", label="MC estimate")
    for name, style in (("azuma", "C0--"), ("bernstein", "C1--"), ("dimfree", "C2--")):
        ax.plot(t, _floor([getattr(r, name).clamped for r in rows]), style, label=name)
    valid = np.array([r.lower_valid for r in rows])
    if valid.any():
        ax.plot(t[valid], _floor([r.lower for r in rows if r.lower_valid]), "C3^-", label="lower bound")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("tail probability")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def sharpness_svg(ns: Sequence[int], ci_hi: Sequence[float], point: Sequence[float],
                  lower: Sequence[float]) -> str:
    plt.rcParams["svg.hashsalt"] = "sublinconc"
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(ns, _floor(point), "k.-", label="MC estimate")
    ax.plot(ns, _floor(ci_hi), "k:", label="MC 99% CI upper")
    ax.plot(ns, _floor(lower), "C3^-", label="lower bound")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("tail probability at the boundary t")
    ax.legend(fontsize="small")
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
