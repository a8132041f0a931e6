"""Figure rendering for report artifacts.

Every figure is rendered off-screen and written atomically as a PNG next to
the delimited output it illustrates.  The PNG metadata is pinned so reruns
of the same configuration produce identical bytes.
"""

from __future__ import annotations

import io
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle

from .geometry import ClosedDisk, RealInterval
from .serialize import atomic_write_bytes

PNG_METADATA = {"Software": "nifs-atlas"}

_DEPTH_COLORS = ("#264653", "#2a9d8f", "#e76f51", "#8ab17d", "#e9c46a", "#6d597a")


def _save(fig, path: str) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=150, metadata=PNG_METADATA)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def save_pieces_figure(sys, layers, path: str) -> None:
    """Plot piece enclosures, one layer per requested depth.

    ``layers`` is a list of (depth, pieces) pairs.  Interval pieces are drawn
    as horizontal segments stacked by depth; disk pieces as outlined circles.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    interval_mode = isinstance(sys.seed, RealInterval)
    if interval_mode:
        ax.hlines(0, sys.seed.lo, sys.seed.hi, colors="#bbbbbb", lw=6)
        for depth, pieces in layers:
            color = _DEPTH_COLORS[depth % len(_DEPTH_COLORS)]
            for p in pieces:
                ax.hlines(depth, p.enclosure.lo, p.enclosure.hi, colors=color, lw=6)
        ax.set_ylim(max(d for d, _ in layers) + 0.5, -0.5)
        ax.set_ylabel("depth")
        ax.set_yticks([0] + [d for d, _ in layers])
    else:
        seed = sys.seed if isinstance(sys.seed, ClosedDisk) else sys.seed.as_disk()
        ax.add_patch(
            Circle(
                (seed.center.real, seed.center.imag),
                seed.radius,
                fill=False,
                ls="--",
                color="#999999",
            )
        )
        for depth, pieces in layers:
            color = _DEPTH_COLORS[depth % len(_DEPTH_COLORS)]
            for p in pieces:
                d = p.enclosure
                ax.add_patch(
                    Circle((d.center.real, d.center.imag), d.radius, fill=False, color=color)
                )
        ax.set_aspect("equal")
        pad = 1.1 * seed.radius
        ax.set_xlim(seed.center.real - pad, seed.center.real + pad)
        ax.set_ylim(seed.center.imag - pad, seed.center.imag + pad)
    ax.set_title("piece enclosures by depth")
    fig.tight_layout()
    _save(fig, path)


def save_moduli_figure(cert, path: str) -> None:
    """Modulus lower bounds and annulus diameters along a certificate."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    entries = cert.entries
    if entries:
        ns = [e.subsequence_index for e in entries]
        ax.plot(
            ns,
            [e.modulus_lower for e in entries],
            "o-",
            color="#2a9d8f",
            label="modulus lower bound",
        )
        ax2 = ax.twinx()
        ax2.semilogy(
            ns,
            [e.euclidean_diameter for e in entries],
            "s--",
            color="#e76f51",
            label="annulus diameter",
        )
        ax2.set_ylabel("euclidean diameter (log scale)")
        lines1, labels1 = ax.get_legend_handles_labels()
        lines2, labels2 = ax2.get_legend_handles_labels()
        ax.legend(lines1 + lines2, labels1 + labels2, loc="center right")
    ax.set_xlabel("certificate entry n")
    ax.set_ylabel("modulus lower bound")
    ax.set_title(f"certificate: {cert.verdict} ({len(entries)} entries)")
    fig.tight_layout()
    _save(fig, path)


def save_ratios_figure(report, path: str) -> None:
    """Per-stage separation ratios and the trend verdict."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    js = [r.stage_index for r in report.reports]
    ratios = [r.ratio for r in report.reports]
    ax.semilogy(js, ratios, "o-", color="#264653")
    ax.axhline(report.min_ratio, ls=":", color="#999999")
    ax.axhline(report.max_ratio, ls=":", color="#999999")
    ax.set_xlabel("stage j")
    ax.set_ylabel("separation ratio delta/eta (log scale)")
    ax.set_title(
        f"trend {report.trend}: ratio spread {report.ratio_spread:.3g} "
        f"over stages {report.first_stage}..{report.last_stage}"
    )
    fig.tight_layout()
    _save(fig, path)


def save_spread_hist_figure(summary, growing_factor: float, path: str) -> None:
    """Histogram of per-sequence ratio spreads from a sampling run."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    spreads = [
        math.log10(r.max_ratio / r.min_ratio) if r.min_ratio > 0 else math.inf
        for r in summary.records
    ]
    finite = [s for s in spreads if math.isfinite(s)]
    if finite:
        ax.hist(finite, bins=30, color="#2a9d8f", edgecolor="#264653")
    ax.axvline(
        math.log10(growing_factor),
        color="#e76f51",
        ls="--",
        label="growth threshold",
    )
    ax.set_xlabel("log10 of per-sequence ratio spread")
    ax.set_ylabel("sequences")
    ax.set_title(
        f"fraction growing {summary.fraction_growing:.2f} "
        f"over {len(summary.records)} sequences"
    )
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_search_figure(points, results, path: str) -> None:
    """Point set on the real line with the best separating annuli found.

    ``results`` maps a search label to a RoundAnnulus or None.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    xs = [complex(p).real for p in points]
    ax.plot(xs, [0.0] * len(xs), "k.", ms=4)
    colors = ("#2a9d8f", "#e76f51", "#264653")
    for i, (label, ann) in enumerate(sorted(results.items())):
        if ann is None:
            continue
        color = colors[i % len(colors)]
        for radius in (ann.inner, ann.outer):
            ax.add_patch(
                Circle(
                    (ann.center.real, ann.center.imag),
                    radius,
                    fill=False,
                    color=color,
                    label=label if radius == ann.inner else None,
                )
            )
    ax.set_aspect("equal")
    ax.set_xlim(-0.6, 1.2)
    ax.set_ylim(-0.7, 0.7)
    ax.legend(loc="upper right")
    ax.set_title("best separating annuli")
    fig.tight_layout()
    _save(fig, path)
