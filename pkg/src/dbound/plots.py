"""Rendering of figure CSV data to PNG files.

The experiment harness emits delimited data; this module draws the
companion picture next to it.  Rendering is best-effort presentation code:
schemas are owned by experiments.figure_rows.
"""

from __future__ import annotations

import math
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PROTOCOL_STYLE = {
    "ours": dict(color="tab:blue", marker="o"),
    "hk": dict(color="tab:orange", marker="s"),
    "at": dict(color="tab:green", marker="^"),
    "at3": dict(color="tab:red", marker="v"),
    "naive": dict(color="gray", linestyle="--"),
}

_WINNER_COLORS = {
    "": (1.0, 1.0, 1.0),
    "ours": (0.22, 0.49, 0.72),
    "hk": (1.0, 0.60, 0.20),
    "at": (0.30, 0.69, 0.29),
    "at3": (0.89, 0.29, 0.20),
}


def _col(header: Sequence[str], rows: Sequence[Sequence[str]], name: str) -> List[str]:
    idx = list(header).index(name)
    return [row[idx] for row in rows]


def _floats(values: Sequence[str]) -> np.ndarray:
    return np.array([float(v) if v else math.nan for v in values])


def render_figure(which: str, header: Sequence[str], rows: Sequence[Sequence[str]], out_png: str) -> str:
    """Draw one figure PNG from its CSV header/rows; returns the path."""
    if which in ("fig2a", "fig2b"):
        _render_curves(which, header, rows, out_png)
    elif which in ("fig3a", "fig3b"):
        _render_tradeoff(which, header, rows, out_png)
    elif which in ("fig5a", "fig5b"):
        _render_noise(which, header, rows, out_png)
    else:
        raise ValueError(f"unknown figure id {which!r}")
    return out_png


def _render_curves(which, header, rows, out_png):
    n = _floats(_col(header, rows, "n"))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for proto in ("ours", "hk", "at", "at3", "naive"):
        vals = _floats(_col(header, rows, proto))
        mask = ~np.isnan(vals)
        ax.semilogy(n[mask], vals[mask], label=proto, markersize=3,
                    **PROTOCOL_STYLE.get(proto, {}))
    ax.set_xlabel("rounds n")
    kind = "relay (mafia) fraud" if which == "fig2a" else "early-reply (distance) fraud"
    ax.set_ylabel(f"{kind} success probability")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=160)
    plt.close(fig)


def _render_tradeoff(which, header, rows, out_png):
    a = np.array([int(v) for v in _col(header, rows, "a")])
    b = np.array([int(v) for v in _col(header, rows, "b")])
    winner = _col(header, rows, "winner")
    a_max, b_max = a.max(), b.max()
    img = np.ones((b_max, a_max, 3))
    for ai, bi, w in zip(a, b, winner):
        img[bi - 1, ai - 1] = _WINNER_COLORS.get(w, (0.5, 0.5, 0.5))
    fig, ax = plt.subplots(figsize=(6, 5.2))
    ax.imshow(img, origin="lower", extent=(0.5, a_max + 0.5, 0.5, b_max + 0.5), aspect="auto")
    ax.set_xlabel("relay-fraud target exponent a  (success <= 2^-a)")
    ax.set_ylabel("early-reply target exponent b  (success <= 2^-b)")
    title = "round/memory trade-off" + (" (state capped at 5n bits)" if which == "fig3b" else "")
    ax.set_title(title)
    handles = [plt.Rectangle((0, 0), 1, 1, fc=_WINNER_COLORS[k]) for k in ("ours", "hk", "at", "at3", "")]
    ax.legend(handles, ["ours", "hk", "at", "at3", "unreachable"], loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=160)
    plt.close(fig)


def _render_noise(which, header, rows, out_png):
    pf = _floats(_col(header, rows, "p_f"))
    proto = _col(header, rows, "protocol")
    sec = _floats(_col(header, rows, "security"))
    err = _floats(_col(header, rows, "security_stderr"))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for p in sorted(set(proto)):
        mask = np.array([v == p for v in proto])
        order = np.argsort(pf[mask])
        x, y, e = pf[mask][order], sec[mask][order], err[mask][order]
        ax.errorbar(x, np.maximum(y, 1e-12), yerr=3 * e, label=p, capsize=2,
                    **{k: v for k, v in PROTOCOL_STYLE.get(p, {}).items() if k != "linestyle"})
    ax.set_yscale("log")
    ax.set_xlabel("forward flip probability p_f")
    ax.set_ylabel("optimized relay-fraud success")
    sub = "p_f = p_b" if which == "fig5a" else "p_f + p_b = 0.05"
    ax.set_title(f"best achievable security, FRR <= 5% ({sub})")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=160)
    plt.close(fig)
