"""Named example presets runnable from the command line.

Most presets are plain run configurations; the annulus-search demo is a
custom runner because it exercises the geometry search directly rather than
a stagewise system.  Random presets pin their seeds so reruns are
byte-identical.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import RoundAnnulus, annulus_modulus, best_separating_annulus_search
from .report import save_search_figure
from .serialize import atomic_write_text, canonical_json

SAMPLER_SEED = 20260816


@dataclass(frozen=True)
class Preset:
    name: str
    summary: str
    config: dict | None = None
    runner: Callable[[str], tuple[str, list[str]]] | None = None


def _annulus_record(ann: RoundAnnulus | None) -> dict | None:
    if ann is None:
        return None
    return {
        "R": ann.outer,
        "center": ann.center,
        "modulus": annulus_modulus(ann),
        "r": ann.inner,
    }


def run_annulus_search_demo(out_dir: str) -> tuple[str, list[str]]:
    """Best separating annuli around 0 in the set {0} u {2^-n : n <= 20}.

    Two grid searches: one over off-center candidates (centers across
    [-0.25, 0.25]), one restricted to annuli centered at the hole point.
    The centered search is capped by the consecutive-gap ratio of the point
    set, so its best modulus stays at or below log 2; off-center annuli can
    trap a dyadic block inside the hole and reach moduli near log 3.
    """
    points = [0.0] + [2.0 ** -n for n in range(21)]
    centers = np.linspace(-0.25, 0.25, 1000)
    radii = np.geomspace(2.0 ** -20, 1.0, 1000)
    unrestricted = best_separating_annulus_search(points, 0.0, centers, radii)
    centered = best_separating_annulus_search(points, 0.0, [0.0], radii)
    payload = {
        "points": [complex(p) for p in points],
        "searches": {
            "unrestricted": _annulus_record(unrestricted),
            "zero-centered": _annulus_record(centered),
        },
    }
    json_path = os.path.join(out_dir, "annulus-search.json")
    atomic_write_text(json_path, canonical_json(payload) + "\n")
    fig_path = os.path.join(out_dir, "annulus-search.png")
    save_search_figure(
        points,
        {"unrestricted": unrestricted, "zero-centered": centered},
        fig_path,
    )
    mod_centered = annulus_modulus(centered) if centered else float("nan")
    mod_wide = annulus_modulus(unrestricted) if unrestricted else float("nan")
    line = (
        f"annulus search: zero-centered best modulus {mod_centered:.6f} "
        f"(cap log 2 = {math.log(2.0):.6f}), unrestricted best modulus {mod_wide:.6f}"
    )
    return line, [json_path, fig_path]


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "figure1",
            "piece tables for the interval system with scales 1/3, 1/4, 1/5 at depths 1..3",
            config={
                "system": {
                    "family": "cantor",
                    "m": 2,
                    "a_rule": "1/(j+2)",
                    "seed_mode": "interval",
                },
                "horizon": 3,
                "action": "pieces",
                "params": {"start": 1, "depths": [1, 2, 3]},
            },
        ),
        Preset(
            "example2-2-unbounded",
            "certificate for the gapped ternary system with widening gaps l_j = j",
            config={
                "system": {"family": "gapped", "l_rule": "j"},
                "horizon": 10,
                "action": "certify",
                "params": {},
            },
        ),
        Preset(
            "pointwise-thin-closure",
            "separating-annulus grid search around 0 in {0} u {2^-n : n <= 20}",
            runner=run_annulus_search_demo,
        ),
        Preset(
            "shrinking-cantor-certify",
            "certificate for the two-map interval family with scales 1/(j+2), horizon 30",
            config={
                "system": {
                    "family": "cantor",
                    "m": 2,
                    "a_rule": "1/(j+2)",
                    "seed_mode": "disk",
                },
                "horizon": 30,
                "action": "certify",
                "params": {},
            },
        ),
        Preset(
            "constant-julia-dichotomy",
            "per-stage separation report for 4z^2 + 2 with constant multipliers 2",
            config={
                "system": {"family": "julia", "quad_a": 4.0, "quad_c": 2.0, "a_rule": "2"},
                "horizon": 30,
                "action": "dichotomy",
                "params": {},
            },
        ),
        Preset(
            "julia-escape-render",
            "escape-stage image for 4z^2 + 2 with constant multipliers 2, 256x256, 20 stages",
            config={
                "system": {"family": "julia", "quad_a": 4.0, "quad_c": 2.0, "a_rule": "2"},
                "horizon": 20,
                "action": "render",
                "params": {
                    "window": [-1.1, 1.1, -1.1, 1.1],
                    "nx": 256,
                    "ny": 256,
                    "max_stages": 20,
                },
            },
        ),
        Preset(
            "random-sequence-sampler",
            "trend fractions for 100 heavy-tailed random multiplier sequences, horizon 50",
            config={
                "system": {
                    "family": "julia",
                    "quad_a": 4.0,
                    "quad_c": 2.0,
                    "random": {
                        "kind": "one-plus-pareto",
                        "alpha": 1.0,
                        "scale": 1.0,
                        "seed": SAMPLER_SEED,
                    },
                },
                "horizon": 50,
                "action": "sample",
                "params": {"count": 100},
            },
        ),
    )
}
