"""Built-in system families.

* ``cantor_system``: stage j splits the seed into ``m`` equally spaced
  affine copies scaled by a_j, labels 1..m left to right; requires
  0 < a_j <= 1/(m+1) so the copies stay disjoint with room to spare.
* ``gapped_system``: three fixed generator maps on [0, 1] (left third,
  right third, middle-fixing third); stage k is the pair
  {g1 o g3^{l_k}, g2 o g3^{l_k}} collapsed to affine maps, so the stage
  images shrink like 3^-(l_k + 1) while staying centered at 1/6 and 5/6.
* ``explicit_system``: stages given directly as affine coefficient lists.

All three share the default geometry: domain disk of radius 0.7 about 1/2,
envelope disk of radius 0.6 about 1/2, and a seed that is either the
interval [0, 1] or the envelope disk.

Every family records a canonical JSON descriptor; ``system_from_descriptor``
rebuilds the identical system from it.
"""

from __future__ import annotations

import json

from .errors import ConfigError, ParameterError
from .geometry import ClosedDisk, DiskDomain, Enclosure, RealInterval
from .maps import AffineMap, compose_chain
from .nifs import Stage, SystemSpec, assemble_system, stage_of
from .seqlang import SeqRule, evaluate_rule, rule_from_config, rule_to_config
from .serialize import canonical_json

DEFAULT_DOMAIN = DiskDomain(ClosedDisk(0.5, 0.7))
DEFAULT_ENVELOPE = ClosedDisk(0.5, 0.6)
UNIT_INTERVAL = RealInterval(0.0, 1.0)


def _resolve_rule(rule) -> SeqRule:
    if isinstance(rule, (int, float, str, dict)):
        return rule_from_config(rule)
    return rule


def cantor_system(
    m: int,
    a_rule,
    horizon: int,
    seed_mode: str = "disk",
    samples: int = 256,
) -> SystemSpec:
    if m < 2:
        raise ParameterError(f"need at least 2 maps per stage, got m={m}")
    if horizon < 1:
        raise ParameterError(f"horizon must be at least 1, got {horizon}")
    if seed_mode not in ("disk", "interval"):
        raise ParameterError(f'seed_mode must be "disk" or "interval", got {seed_mode!r}')
    rule = _resolve_rule(a_rule)
    stages = []
    for j in range(1, horizon + 1):
        a = evaluate_rule(rule, j)
        if not 0.0 < a <= 1.0 / (m + 1):
            raise ParameterError(
                f"stage {j}: scale a_j={a} outside (0, 1/{m + 1}]"
            )
        stages.append(
            stage_of(
                [AffineMap(a, (i - 1) * (1.0 - a) / (m - 1)) for i in range(1, m + 1)]
            )
        )
    seed: Enclosure = DEFAULT_ENVELOPE if seed_mode == "disk" else UNIT_INTERVAL
    descriptor = canonical_json(
        {
            "a_rule": rule_to_config(rule),
            "family": "cantor",
            "horizon": horizon,
            "m": m,
            "seed_mode": seed_mode,
        }
    )
    return assemble_system(
        DEFAULT_DOMAIN,
        seed,
        stages,
        envelope=DEFAULT_ENVELOPE,
        descriptor=descriptor,
        samples=samples,
    )


GAP_LEFT = AffineMap(1.0 / 3.0, 0.0)
GAP_RIGHT = AffineMap(1.0 / 3.0, 2.0 / 3.0)
GAP_MIDDLE = AffineMap(1.0 / 3.0, 1.0 / 3.0)


def _integer_value(rule: SeqRule, j: int) -> int:
    v = evaluate_rule(rule, j)
    l = round(v)
    if abs(v - l) > 1e-9:
        raise ParameterError(f"stage {j}: exponent rule gave non-integer {v}")
    return int(l)


def gapped_system(l_rule, horizon: int, samples: int = 256) -> SystemSpec:
    if horizon < 1:
        raise ParameterError(f"horizon must be at least 1, got {horizon}")
    rule = _resolve_rule(l_rule)
    stages = []
    for k in range(1, horizon + 1):
        l = _integer_value(rule, k)
        if l < 0:
            raise ParameterError(f"stage {k}: exponent l_k={l} must be nonnegative")
        chain = [GAP_MIDDLE] * l
        stages.append(
            stage_of(
                [
                    compose_chain([GAP_LEFT] + chain),
                    compose_chain([GAP_RIGHT] + chain),
                ]
            )
        )
    descriptor = canonical_json(
        {"family": "gapped", "horizon": horizon, "l_rule": rule_to_config(rule)}
    )
    return assemble_system(
        DEFAULT_DOMAIN,
        DEFAULT_ENVELOPE,
        stages,
        envelope=DEFAULT_ENVELOPE,
        descriptor=descriptor,
        samples=samples,
    )


def _encode_enclosure(e: Enclosure):
    if isinstance(e, RealInterval):
        return {"hi": e.hi, "kind": "interval", "lo": e.lo}
    return {"center": e.center, "kind": "disk", "radius": e.radius}


def _decode_complex(v) -> complex:
    if isinstance(v, dict) and set(v) == {"im", "re"}:
        return complex(v["re"], v["im"])
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    raise ConfigError(f"expected a number or re/im object, got {v!r}")


def _decode_enclosure(obj) -> Enclosure:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"expected an enclosure object, got {obj!r}")
    if obj["kind"] == "interval":
        return RealInterval(obj["lo"], obj["hi"])
    if obj["kind"] == "disk":
        return ClosedDisk(_decode_complex(obj["center"]), obj["radius"])
    raise ConfigError(f"unknown enclosure kind {obj['kind']!r}")


def explicit_system(
    stage_coeffs,
    seed: Enclosure | None = None,
    domain: DiskDomain | None = None,
    envelope: ClosedDisk | None = None,
    samples: int = 256,
) -> SystemSpec:
    """Assemble a system from affine coefficient lists, one list of (a, b)
    pairs per stage."""
    if seed is None:
        seed = DEFAULT_ENVELOPE
    if domain is None:
        domain = DEFAULT_DOMAIN
    if envelope is None:
        envelope = seed if isinstance(seed, ClosedDisk) else DEFAULT_ENVELOPE
    stages = []
    for coeffs in stage_coeffs:
        stages.append(stage_of([AffineMap(a, b) for a, b in coeffs]))
    if not stages:
        raise ParameterError("need at least one stage")
    descriptor = canonical_json(
        {
            "domain": {"center": domain.center, "radius": domain.radius},
            "envelope": {"center": envelope.center, "radius": envelope.radius},
            "family": "explicit",
            "horizon": len(stages),
            "seed": _encode_enclosure(seed),
            "stages": [
                [[complex(a), complex(b)] for a, b in coeffs] for coeffs in stage_coeffs
            ],
        }
    )
    return assemble_system(
        domain, seed, stages, envelope=envelope, descriptor=descriptor, samples=samples
    )


def system_from_descriptor(text: str, samples: int = 256) -> SystemSpec:
    """Rebuild a system from a descriptor produced by a family constructor."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"descriptor is not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError("descriptor must be an object with a family field")
    family = obj["family"]
    if family == "cantor":
        return cantor_system(
            obj["m"], obj["a_rule"], obj["horizon"], obj["seed_mode"], samples
        )
    if family == "gapped":
        return gapped_system(obj["l_rule"], obj["horizon"], samples)
    if family == "explicit":
        return explicit_system(
            [
                [(_decode_complex(a), _decode_complex(b)) for a, b in coeffs]
                for coeffs in obj["stages"]
            ],
            seed=_decode_enclosure(obj["seed"]),
            domain=DiskDomain(
                ClosedDisk(_decode_complex(obj["domain"]["center"]), obj["domain"]["radius"])
            ),
            envelope=ClosedDisk(
                _decode_complex(obj["envelope"]["center"]), obj["envelope"]["radius"]
            ),
            samples=samples,
        )
    if family == "julia":
        from .julia import inverse_ifs, make_poly_seq

        spec = make_poly_seq(
            _decode_complex(obj["quad_a"]),
            _decode_complex(obj["quad_c"]),
            values=[_decode_complex(v) for v in obj["a_values"]],
        )
        return inverse_ifs(spec, eps=obj["eps"], samples=samples)
    raise ConfigError(f"unknown family {family!r}")
