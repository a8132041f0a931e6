"""Command-line front end.

Each run takes a JSON configuration naming a system family and an action,
writes the declared artifacts atomically under the output directory, and
prints a one-line summary.  Exit code 0 means success, 2 a configuration or
mathematical-hypothesis failure, 1 an unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

from . import report
from .certify import build_certificate, certificate_json, default_c, separation_report
from .errors import AtlasError, ConfigError
from .families import cantor_system, explicit_system, gapped_system
from .geometry import RealInterval
from .julia import (
    DEFAULT_EPS,
    TREND_GROWING_FACTOR,
    EscapeGrid,
    RandomSeqSpec,
    dichotomy_report,
    forward_classify,
    inverse_ifs,
    make_poly_seq,
    render,
    sample_sequences,
    summary_json,
)
from .nifs import invariance_check, pieces
from .presets import PRESETS
from .seqlang import rule_from_config
from .serialize import atomic_write_bytes, atomic_write_text, canonical_json, csv_text

ACTIONS = ("pieces", "certify", "dichotomy", "render", "sample", "invariance")

DEFAULT_OUTPUTS = {
    "pieces": {"table": "pieces.csv", "figure": "pieces.png"},
    "certify": {"certificate": "certificate.json", "figure": "moduli.png"},
    "dichotomy": {"report": "dichotomy.csv", "figure": "ratios.png"},
    "render": {"image": "escape.ppm"},
    "sample": {"summary": "sample.json", "figure": "ratios-hist.png"},
    "invariance": {"report": "invariance.json"},
}

DICHOTOMY_CSV_HEADER = "j,a_j_modulus,b_lower,delta_lower,eta_upper,ratio"


def _check_keys(obj, where: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object, got {type(obj).__name__}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where} is missing required key(s): {sorted(missing)}")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{where} has unknown key(s): {sorted(unknown)}")


def _as_number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


def _as_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    return v


def _as_complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return complex(_as_number(v["re"], where), _as_number(v["im"], where))
    raise ConfigError(f'{where} must be a number or {{"re", "im"}} object, got {v!r}')


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _resolve_output(outputs_cfg, action: str, out_dir: str) -> dict[str, str | None]:
    defaults = DEFAULT_OUTPUTS[action]
    if outputs_cfg is None:
        outputs_cfg = {}
    _check_keys(outputs_cfg, "output", set(), set(defaults))
    resolved: dict[str, str | None] = {}
    for key, default in defaults.items():
        value = outputs_cfg.get(key, default)
        if value is None:
            resolved[key] = None
            continue
        if not isinstance(value, str) or not value:
            raise ConfigError(f"output.{key} must be a path or null, got {value!r}")
        resolved[key] = value if os.path.isabs(value) else os.path.join(out_dir, value)
    return resolved


def _word_text(labels) -> str:
    return ".".join(str(l) for l in labels)


def _run_pieces(system, params, outputs) -> str:
    _check_keys(params, "params", set(), {"start", "depth", "depths"})
    start = _as_int(params.get("start", 1), "params.start")
    if "depth" in params and "depths" in params:
        raise ConfigError("give params.depth or params.depths, not both")
    if "depth" in params:
        depths = [_as_int(params["depth"], "params.depth")]
    elif "depths" in params:
        raw = params["depths"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("params.depths must be a nonempty list")
        depths = [_as_int(d, "params.depths entry") for d in raw]
    else:
        depths = [system.horizon - start + 1]
    layers = [(d, pieces(system, start, d)) for d in depths]
    interval_mode = isinstance(system.seed, RealInterval)
    rows = []
    for d, layer in layers:
        for p in layer:
            word = _word_text(p.word.labels)
            if interval_mode:
                rows.append([d, word, p.enclosure.lo, p.enclosure.hi])
            else:
                e = p.enclosure
                rows.append([d, word, e.center.real, e.center.imag, e.radius])
    header = "depth,word,lo,hi" if interval_mode else "depth,word,center_re,center_im,radius"
    written = []
    if outputs["table"]:
        atomic_write_text(outputs["table"], csv_text(header, rows))
        written.append(outputs["table"])
    if outputs["figure"]:
        report.save_pieces_figure(system, layers, outputs["figure"])
        written.append(outputs["figure"])
    total = sum(len(layer) for _, layer in layers)
    return (
        f"pieces: {total} pieces at depth(s) {','.join(str(d) for d in depths)} "
        f"from stage {start} -> {', '.join(written) or 'no artifacts'}"
    )


def _run_certify(system, params, outputs) -> str:
    _check_keys(params, "params", set(), {"subsequence", "c", "word_rule"})
    raw_sub = params.get("subsequence")
    if raw_sub is None:
        subsequence = list(range(1, system.horizon + 1))
    else:
        if not isinstance(raw_sub, list) or not raw_sub:
            raise ConfigError("params.subsequence must be a nonempty list")
        subsequence = [_as_int(j, "params.subsequence entry") for j in raw_sub]
    c_cfg = params.get("c")
    if c_cfg is None:
        reports = [separation_report(system, j) for j in subsequence]
        c = default_c(system, reports)
    else:
        c = _as_number(c_cfg, "params.c")
    word_rule = params.get("word_rule", "smallest-label")
    if not isinstance(word_rule, str):
        raise ConfigError(f"params.word_rule must be a string, got {word_rule!r}")
    cert = build_certificate(system, subsequence, c, word_rule)
    written = []
    if outputs["certificate"]:
        atomic_write_text(outputs["certificate"], certificate_json(cert) + "\n")
        written.append(outputs["certificate"])
    if outputs["figure"]:
        report.save_moduli_figure(cert, outputs["figure"])
        written.append(outputs["figure"])
    verified = sum(1 for e in cert.entries if e.separation_verified)
    return (
        f"certify: verdict {cert.verdict}, {verified}/{len(cert.entries)} entries "
        f"verified, c = {c:.6g} -> {', '.join(written) or 'no artifacts'}"
    )


def _run_dichotomy(spec, eps, params, outputs) -> str:
    _check_keys(params, "params", set(), {"first", "last"})
    first = _as_int(params.get("first", 1), "params.first")
    last = _as_int(params.get("last", spec.horizon), "params.last")
    rep = dichotomy_report(spec, first, last, eps)
    rows = [
        [
            r.stage_index,
            abs(spec.a_values[r.stage_index - 1]),
            r.b_lower,
            r.delta_lower,
            r.eta_upper,
            r.ratio,
        ]
        for r in rep.reports
    ]
    written = []
    if outputs["report"]:
        atomic_write_text(outputs["report"], csv_text(DICHOTOMY_CSV_HEADER, rows))
        written.append(outputs["report"])
    if outputs["figure"]:
        report.save_ratios_figure(rep, outputs["figure"])
        written.append(outputs["figure"])
    return (
        f"dichotomy: trend {rep.trend} over stages {first}..{last}, "
        f"ratio spread {rep.ratio_spread:.4g} -> {', '.join(written) or 'no artifacts'}"
    )


def _run_render(spec, params, outputs, threads: int) -> str:
    _check_keys(
        params,
        "params",
        set(),
        {"window", "nx", "ny", "max_stages", "membership_radius"},
    )
    window = params.get("window", [-1.1, 1.1, -1.1, 1.1])
    if not isinstance(window, list) or len(window) != 4:
        raise ConfigError("params.window must be [re_lo, re_hi, im_lo, im_hi]")
    re_lo, re_hi, im_lo, im_hi = (_as_number(v, "params.window entry") for v in window)
    nx = _as_int(params.get("nx", 256), "params.nx")
    ny = _as_int(params.get("ny", 256), "params.ny")
    max_stages = _as_int(params.get("max_stages", spec.horizon), "params.max_stages")
    radius = _as_number(params.get("membership_radius", 1.0), "params.membership_radius")
    grid = EscapeGrid(re_lo, re_hi, im_lo, im_hi, nx, ny, max_stages, radius)
    matrix = forward_classify(spec, grid, threads)
    written = []
    if outputs["image"]:
        atomic_write_bytes(outputs["image"], render(matrix))
        written.append(outputs["image"])
    in_count = int((matrix == 0).sum())
    return (
        f"render: {nx}x{ny} pixels, {max_stages} stages, {in_count} pixels never "
        f"escape -> {', '.join(written) or 'no artifacts'}"
    )


def _run_sample(quad_a, quad_c, random_cfg, horizon, eps, params, outputs) -> str:
    _check_keys(params, "params", set(), {"count"})
    count = _as_int(params.get("count", 100), "params.count")
    kind = random_cfg["kind"]
    rand = RandomSeqSpec(
        kind=kind,
        seed=random_cfg["seed"],
        count=count,
        horizon=horizon,
        alpha=random_cfg.get("alpha"),
        scale=random_cfg.get("scale"),
        min_mod=random_cfg.get("min_mod"),
        max_mod=random_cfg.get("max_mod"),
    )
    summary = sample_sequences(quad_a, quad_c, rand, eps)
    written = []
    if outputs["summary"]:
        atomic_write_text(outputs["summary"], summary_json(summary) + "\n")
        written.append(outputs["summary"])
    if outputs["figure"]:
        report.save_spread_hist_figure(summary, TREND_GROWING_FACTOR, outputs["figure"])
        written.append(outputs["figure"])
    return (
        f"sample: fraction growing {summary.fraction_growing:.2f} over "
        f"{count} sequences (seed {rand.seed}) -> {', '.join(written) or 'no artifacts'}"
    )


def _run_invariance(system, params, outputs) -> str:
    _check_keys(params, "params", {"j", "k"})
    j = _as_int(params["j"], "params.j")
    k = _as_int(params["k"], "params.k")
    rep = invariance_check(system, j, k)
    written = []
    if outputs["report"]:
        payload = {
            "depth": rep.depth,
            "max_discrepancy": rep.max_discrepancy,
            "mode": rep.mode,
            "ok": rep.ok,
            "start": rep.start,
            "words_checked": rep.words_checked,
        }
        atomic_write_text(outputs["report"], canonical_json(payload) + "\n")
        written.append(outputs["report"])
    status = "holds" if rep.ok else "FAILS"
    return (
        f"invariance: {status} at j={j}, k={k} (discrepancy {rep.max_discrepancy:.3g}, "
        f"{rep.words_checked} words) -> {', '.join(written) or 'no artifacts'}"
    )


def _validate_random_cfg(random_cfg, seed_override) -> dict:
    _check_keys(
        random_cfg,
        "system.random",
        {"kind"},
        {"seed", "alpha", "scale", "min_mod", "max_mod"},
    )
    kind = random_cfg.get("kind")
    if kind not in ("one-plus-pareto", "annular-uniform"):
        raise ConfigError(f"system.random.kind must name a distribution, got {kind!r}")
    out = dict(random_cfg)
    if seed_override is not None:
        out["seed"] = seed_override
    if "seed" not in out:
        raise ConfigError("system.random needs a seed (or pass --seed)")
    out["seed"] = _as_int(out["seed"], "system.random.seed")
    for key in ("alpha", "scale", "min_mod", "max_mod"):
        if key in out:
            out[key] = _as_number(out[key], f"system.random.{key}")
    return out


def run_config(cfg: dict, action: str, out_dir: str, seed_override=None, threads: int = 1) -> str:
    """Validate a configuration and execute its action; returns the summary line."""
    _check_keys(cfg, "config", {"system", "horizon"}, {"action", "params", "output"})
    declared = cfg.get("action")
    if declared is not None and declared != action:
        raise ConfigError(
            f"config declares action {declared!r} but {action!r} was requested"
        )
    if action not in ACTIONS:
        raise ConfigError(f"unknown action {action!r}")
    horizon = _as_int(cfg["horizon"], "horizon")
    if horizon < 1:
        raise ConfigError(f"horizon must be at least 1, got {horizon}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    os.makedirs(out_dir, exist_ok=True)
    outputs = _resolve_output(cfg.get("output"), action, out_dir)

    system_cfg = cfg.get("system")
    if not isinstance(system_cfg, dict) or "family" not in system_cfg:
        raise ConfigError("system must be an object with a family key")
    family = system_cfg["family"]

    if family == "cantor":
        _check_keys(system_cfg, "system", {"family", "m", "a_rule"}, {"seed_mode"})
        system = cantor_system(
            _as_int(system_cfg["m"], "system.m"),
            system_cfg["a_rule"],
            horizon,
            system_cfg.get("seed_mode", "disk"),
        )
    elif family == "gapped":
        _check_keys(system_cfg, "system", {"family", "l_rule"})
        system = gapped_system(system_cfg["l_rule"], horizon)
    elif family == "explicit":
        _check_keys(system_cfg, "system", {"family", "stages"})
        raw_stages = system_cfg["stages"]
        if not isinstance(raw_stages, list) or not raw_stages:
            raise ConfigError("system.stages must be a nonempty list of stages")
        stage_coeffs = []
        for s, stage in enumerate(raw_stages, start=1):
            if not isinstance(stage, list) or not stage:
                raise ConfigError(f"system.stages[{s}] must be a nonempty list of [a, b] pairs")
            coeffs = []
            for pair in stage:
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigError(
                        f"system.stages[{s}] entries must be [a, b] pairs, got {pair!r}"
                    )
                coeffs.append(
                    (
                        _as_complex(pair[0], f"system.stages[{s}] coefficient a"),
                        _as_complex(pair[1], f"system.stages[{s}] coefficient b"),
                    )
                )
            stage_coeffs.append(coeffs)
        if len(stage_coeffs) != horizon:
            raise ConfigError(
                f"system.stages lists {len(stage_coeffs)} stages but horizon is {horizon}"
            )
        system = explicit_system(stage_coeffs)
    elif family == "julia":
        _check_keys(
            system_cfg,
            "system",
            {"family", "quad_a", "quad_c"},
            {"a_rule", "random", "eps"},
        )
        if ("a_rule" in system_cfg) == ("random" in system_cfg):
            raise ConfigError("julia system needs exactly one of a_rule and random")
        quad_a = _as_complex(system_cfg["quad_a"], "system.quad_a")
        quad_c = _as_complex(system_cfg["quad_c"], "system.quad_c")
        eps = _as_number(system_cfg.get("eps", DEFAULT_EPS), "system.eps")
        if "random" in system_cfg:
            if action != "sample":
                raise ConfigError(
                    "random multiplier sequences only drive the sample action"
                )
            random_cfg = _validate_random_cfg(system_cfg["random"], seed_override)
            return _run_sample(quad_a, quad_c, random_cfg, horizon, eps, params, outputs)
        if action == "sample":
            raise ConfigError("the sample action needs system.random")
        spec = make_poly_seq(
            quad_a, quad_c, rule=rule_from_config(system_cfg["a_rule"]), horizon=horizon
        )
        if action == "dichotomy":
            return _run_dichotomy(spec, eps, params, outputs)
        if action == "render":
            return _run_render(spec, params, outputs, threads)
        system = inverse_ifs(spec, eps)
    else:
        raise ConfigError(f"unknown family {family!r}")

    if action == "pieces":
        return _run_pieces(system, params, outputs)
    if action == "certify":
        return _run_certify(system, params, outputs)
    if action == "invariance":
        return _run_invariance(system, params, outputs)
    raise ConfigError(f"action {action!r} does not apply to the {family} family")


def _run_examples(name, out_dir: str, seed_override, threads: int) -> str:
    if name is None:
        lines = [f"{p.name}: {p.summary}" for p in PRESETS.values()]
        return "\n".join(lines)
    preset = PRESETS.get(name)
    if preset is None:
        known = ", ".join(PRESETS)
        raise ConfigError(f"unknown preset {name!r} (known presets: {known})")
    os.makedirs(out_dir, exist_ok=True)
    if preset.runner is not None:
        line, _paths = preset.runner(out_dir)
        return line
    cfg = json.loads(json.dumps(preset.config))  # deep copy, keeps presets frozen
    return run_config(cfg, cfg["action"], out_dir, seed_override, threads)


def _resolve_threads(arg_value) -> int:
    if arg_value is not None:
        return arg_value
    env = os.environ.get("NIFS_ATLAS_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"NIFS_ATLAS_THREADS must be an integer, got {env!r}") from exc
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nifs-atlas",
        description="stagewise contracting systems: piece tables, certificates, "
        "escape images, and sequence sampling",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for action in ACTIONS:
        p = sub.add_parser(action, help=f"run the {action} action from a config")
        p.add_argument("--config", required=True, help="path to a JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="override the random seed")
        p.add_argument("--threads", type=int, default=None, help="worker thread count")
    ex = sub.add_parser("examples", help="list presets, or run one by name")
    ex.add_argument("name", nargs="?", default=None, help="preset name (omit to list)")
    ex.add_argument("--out", default=".", help="output directory (default: current)")
    ex.add_argument("--seed", type=int, default=None, help="override the random seed")
    ex.add_argument("--threads", type=int, default=None, help="worker thread count")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = _resolve_threads(args.threads)
        if args.command == "examples":
            line = _run_examples(args.name, args.out, args.seed, threads)
        else:
            cfg = load_config(args.config)
            line = run_config(cfg, args.command, args.out, args.seed, threads)
        print(line)
        return 0
    except AtlasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
