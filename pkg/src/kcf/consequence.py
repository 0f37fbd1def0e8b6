"""Attack consequence vectors and their aggregation.

A consequence vector records per-component availability degradation in
[0, 1] for space, ground, and user components, and confidentiality /
integrity / availability degradation triples for link slots. Storage is
sparse: an absent entry means zero degradation, and inserting an explicit
zero never changes any result.

Analysts may additionally annotate a whole segment with a single score
(``segment_overrides``); segment scoring prefers that value and falls back
to aggregating the component entries. CIA triples are never averaged into
one number; the only single-number summary offered is the maximum of the
three, which is lossy and labeled as such in outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING
import json

from .errors import (InvalidWeights, LengthMismatch, MissingAnnotation,
                     ParseError, ValidationError)
from .system_model import (GROUND_UNITS, SPACE_UNITS, USER_COMPONENTS,
                           SegmentKind, all_components, parse_address,
                           segment_components)

if TYPE_CHECKING:
    from .incidents import IncidentRecord


class CiaMode(Enum):
    MAX = "max"
    COMPONENT_WISE = "component_wise"


def _check_degradation(value, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{where}: degradation must be a number")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{where}: degradation {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class CiaTriple:
    confidentiality: float = 0.0
    integrity: float = 0.0
    availability: float = 0.0

    def __post_init__(self):
        for name in ("confidentiality", "integrity", "availability"):
            _check_degradation(getattr(self, name), f"cia {name}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.confidentiality, self.integrity, self.availability)


@dataclass(frozen=True)
class ConsequenceVector:
    """Sparse per-component degradation. Keys are canonical address strings."""

    scalars: dict[str, float] = field(default_factory=dict)
    links: dict[str, CiaTriple] = field(default_factory=dict)
    segment_overrides: dict[SegmentKind, float] = field(default_factory=dict)

    def scalar(self, address: str) -> float:
        return self.scalars.get(address, 0.0)

    def link(self, address: str) -> CiaTriple:
        return self.links.get(address, CiaTriple())


_SEGMENT_NAMES = {seg.value: seg for seg in SegmentKind}


def parse_consequence(raw: dict, where: str = "consequence") -> ConsequenceVector:
    """Parse the incident-file consequence object.

    Keys are segment names ("space", "ground", "user", "link") for direct
    segment-level scores, or canonical component addresses. Link addresses
    take a {"c": x, "i": y, "a": z} object; everything else takes a number.
    """
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: consequence must be an object")
    scalars: dict[str, float] = {}
    links: dict[str, CiaTriple] = {}
    overrides: dict[SegmentKind, float] = {}
    for key, value in raw.items():
        if key in _SEGMENT_NAMES:
            overrides[_SEGMENT_NAMES[key]] = _check_degradation(value, f"{where}: {key}")
            continue
        address = parse_address(key)  # raises ValidationError for unknown keys
        if address.segment is SegmentKind.LINK:
            if not isinstance(value, dict) or set(value) - {"c", "i", "a"}:
                raise ParseError(f"{where}: {key} must be a {{c, i, a}} object")
            links[key] = CiaTriple(
                _check_degradation(value.get("c", 0.0), f"{where}: {key}.c"),
                _check_degradation(value.get("i", 0.0), f"{where}: {key}.i"),
                _check_degradation(value.get("a", 0.0), f"{where}: {key}.a"))
        else:
            scalars[key] = _check_degradation(value, f"{where}: {key}")
    return ConsequenceVector(scalars=scalars, links=links, segment_overrides=overrides)


def serialize_consequence(vec: ConsequenceVector) -> dict:
    out: dict = {}
    for seg, value in vec.segment_overrides.items():
        out[seg.value] = value
    for key, value in vec.scalars.items():
        out[key] = value
    for key, triple in vec.links.items():
        out[key] = {"c": triple.confidentiality, "i": triple.integrity,
                    "a": triple.availability}
    return out


def validate_weights(weights: list[float]) -> list[float]:
    """A weight vector is non-empty, has entries in [0, 1], and sums to 1."""
    if not weights:
        raise InvalidWeights("weight vector is empty")
    for w in weights:
        if not isinstance(w, (int, float)) or isinstance(w, bool) or not 0.0 <= w <= 1.0:
            raise InvalidWeights(f"weight {w!r} outside [0, 1]")
    total = math.fsum(weights)
    if abs(total - 1.0) > 1e-9:
        raise InvalidWeights(f"weights sum to {total}, expected 1")
    return [float(w) for w in weights]


def uniform_weights(n: int) -> list[float]:
    return [1.0 / n] * n


def aggregate_weighted_average(values: list[float], weights: list[float]) -> float:
    """Weighted average of degradation values; result stays in [0, 1]."""
    weights = validate_weights(weights)
    if len(values) != len(weights):
        raise LengthMismatch(f"{len(values)} values vs {len(weights)} weights")
    return min(1.0, max(0.0, math.fsum(w * v for w, v in zip(weights, values))))


# Unit layout per segment: (unit key prefix, number of sub-components).
_SEGMENT_UNITS: dict[SegmentKind, list[tuple[str, int]]] = {
    SegmentKind.SPACE: [(f"space.{u}", len(subs)) for u, subs in SPACE_UNITS.items()],
    SegmentKind.GROUND: [(f"ground.{u}", len(subs)) for u, subs in GROUND_UNITS.items()],
    SegmentKind.USER: [("user", len(USER_COMPONENTS))],
}


def aggregate_segment(vec: ConsequenceVector, segment: SegmentKind,
                      weights: dict[str, list[float]] | None = None) -> float:
    """Collapse one segment of a consequence vector to a single number.

    Space, ground, and user aggregate in two levels: sub-components into
    their unit, units into the segment, each with a weighted average
    (uniform by default; override per unit prefix or per segment name via
    ``weights``). The link segment summarizes each link slot with the lossy
    CIA maximum before averaging across slots.
    """
    weights = weights or {}

    if segment is SegmentKind.LINK:
        slots = [a.canonical() for a in segment_components(SegmentKind.LINK)]
        values = [max(vec.link(a).as_tuple()) for a in slots]
        w = weights.get("link", uniform_weights(len(slots)))
        return aggregate_weighted_average(values, w)

    unit_layout = _SEGMENT_UNITS[segment]
    unit_values: list[float] = []
    for prefix, size in unit_layout:
        values = [vec.scalar(f"{prefix}.{i}") for i in range(1, size + 1)]
        w = weights.get(prefix, uniform_weights(size))
        unit_values.append(aggregate_weighted_average(values, w))
    if len(unit_values) == 1:
        return unit_values[0]
    w = weights.get(segment.value, uniform_weights(len(unit_values)))
    return aggregate_weighted_average(unit_values, w)


def cia_summary(triple: CiaTriple, mode: CiaMode = CiaMode.COMPONENT_WISE):
    """Summarize a CIA triple. MAX is lossy; COMPONENT_WISE is the identity.

    A CVSS-style product aggregation is deliberately not offered: the three
    assurances are not degraded independently, so treating them as
    independent probabilities is unsound.
    """
    if mode is CiaMode.MAX:
        return max(triple.as_tuple())
    return triple


def dominates(a: ConsequenceVector, b: ConsequenceVector) -> bool:
    """Component-wise partial order: a dominates b iff every entry of a is
    at least the corresponding entry of b, with absent entries read as 0.
    CIA triples compare component-wise. Segment overrides do not participate.
    """
    for address in all_components():
        key = address.canonical()
        if address.segment is SegmentKind.LINK:
            ta, tb = a.link(key).as_tuple(), b.link(key).as_tuple()
            if any(x < y for x, y in zip(ta, tb)):
                return False
        else:
            if a.scalar(key) < b.scalar(key):
                return False
    return True


def score_segment_for_attack(record: "IncidentRecord", segment: SegmentKind,
                             weights: dict[str, list[float]] | None = None) -> float:
    """Single consequence score for one segment of one incident.

    Prefers the analyst's direct segment-level annotation; otherwise
    aggregates the annotated components. Raises MissingAnnotation when the
    incident carries no consequence annotations at all.
    """
    vec = record.consequence
    if vec is None:
        raise MissingAnnotation(f"incident {record.id!r} has no consequence annotations")
    if segment in vec.segment_overrides:
        return vec.segment_overrides[segment]
    return aggregate_segment(vec, segment, weights)


def load_weights(path: str | Path) -> dict[str, list[float]]:
    """Load weight overrides: a JSON object mapping a unit prefix
    ("space.bus", "ground.gs", ...), segment name, or "link" to its
    weight vector.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read weights {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("weights: top level must be an object")
    known = {prefix for units in _SEGMENT_UNITS.values() for prefix, _ in units}
    known |= {seg.value for seg in SegmentKind}
    out: dict[str, list[float]] = {}
    for key, value in raw.items():
        if key not in known:
            raise ValidationError(f"weights: unknown key {key!r}")
        if not isinstance(value, list):
            raise ParseError(f"weights: {key} must be a list")
        try:
            out[key] = validate_weights(value)
        except InvalidWeights as exc:
            raise ValidationError(f"weights: {key}: {exc}") from exc
    return out
