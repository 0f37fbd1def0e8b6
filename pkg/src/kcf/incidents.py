"""Incident record ingestion and category statistics.

Incident files are UTF-8 JSON arrays. Each incident carries the reported
facts (year, category, target, actor, objective, narrative, sources), an
analyst-annotated chronological event list, and optional consequence
annotations. Events map observations onto taxonomy tactic/technique ids;
ingested events are always observations, never hypotheses.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .consequence import ConsequenceVector, parse_consequence
from .errors import ParseError, ValidationError
from .system_model import SegmentKind
from .taxonomy import Taxonomy

EARLIEST_YEAR = 1977


class AttackCategory(Enum):
    JAMMING = "jamming"
    CNE = "cne"
    HIJACKING = "hijacking"
    CONTROL = "control"
    DOS = "dos"
    EAVESDROPPING = "eavesdropping"
    THEFT_LOSS = "theft_loss"
    SPOOFING = "spoofing"


class Provenance(Enum):
    OBSERVED = "observed"
    EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class ObservedEvent:
    """One analyst-annotated event from an incident narrative."""

    seq: int
    description: str
    tactic: str | None = None
    technique: str | None = None
    segment: SegmentKind | None = None
    provenance: Provenance = Provenance.OBSERVED


@dataclass(frozen=True)
class IncidentRecord:
    id: str
    year: int
    category: AttackCategory
    target: str = ""
    actor: str = ""
    objective: str = ""
    narrative: str = ""
    sources: tuple[str, ...] = ()
    events: tuple[ObservedEvent, ...] = ()
    consequence: ConsequenceVector | None = None


_INCIDENT_KEYS = {"id", "year", "category", "target", "actor", "objective",
                  "narrative", "sources", "events", "consequence"}
_EVENT_KEYS = {"seq", "description", "tactic", "technique", "segment"}


def _parse_event(raw: dict, incident_id: str, tax: Taxonomy | None) -> ObservedEvent:
    unknown = set(raw) - _EVENT_KEYS
    if unknown:
        raise ParseError(f"incident {incident_id!r}: event has unknown keys {sorted(unknown)}")
    seq = raw.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ValidationError(f"incident {incident_id!r}: event seq must be an integer >= 0")
    tactic = raw.get("tactic")
    technique = raw.get("technique")
    if technique is not None and tactic is None:
        raise ValidationError(
            f"incident {incident_id!r}: event {seq} has a technique but no tactic")
    if tax is not None:
        if tactic is not None and tactic not in tax.tactics:
            raise ValidationError(
                f"incident {incident_id!r}: event {seq} names unknown tactic {tactic!r}")
        if technique is not None:
            entry = tax.techniques.get(technique)
            if entry is None:
                raise ValidationError(
                    f"incident {incident_id!r}: event {seq} names unknown technique {technique!r}")
            if tactic not in entry.tactics:
                raise ValidationError(
                    f"incident {incident_id!r}: event {seq} technique {technique!r}"
                    f" does not map to tactic {tactic!r}")
    segment = raw.get("segment")
    if segment is not None:
        try:
            segment = SegmentKind(segment)
        except ValueError:
            raise ValidationError(
                f"incident {incident_id!r}: event {seq} names unknown segment {raw['segment']!r}")
    return ObservedEvent(seq=seq, description=raw.get("description", ""),
                         tactic=tactic, technique=technique, segment=segment)


def load_incidents(path: str | Path, tax: Taxonomy | None = None) -> list[IncidentRecord]:
    """Load incident records; cross-checks taxonomy ids when tax is given."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read incidents {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError("incidents: top level must be an array")

    records: list[IncidentRecord] = []
    seen: set[str] = set()
    this_year = datetime.date.today().year
    for entry in raw:
        if not isinstance(entry, dict):
            raise ParseError("incidents: entries must be objects")
        unknown = set(entry) - _INCIDENT_KEYS
        if unknown:
            raise ParseError(f"incident {entry.get('id')!r}: unknown keys {sorted(unknown)}")
        iid = entry.get("id")
        if not iid or not isinstance(iid, str):
            raise ValidationError("incident id must be a non-empty string")
        if iid in seen:
            raise ValidationError(f"duplicate incident id: {iid!r}")
        seen.add(iid)
        year = entry.get("year")
        if not isinstance(year, int) or isinstance(year, bool):
            raise ValidationError(f"incident {iid!r}: year must be an integer")
        if not EARLIEST_YEAR <= year <= this_year:
            raise ValidationError(
                f"incident {iid!r}: year {year} outside [{EARLIEST_YEAR}, {this_year}]")
        try:
            category = AttackCategory(entry.get("category"))
        except ValueError:
            raise ValidationError(
                f"incident {iid!r}: unknown category {entry.get('category')!r}")

        events = [_parse_event(e, iid, tax) for e in entry.get("events", [])]
        seqs = [e.seq for e in events]
        if seqs != sorted(set(seqs)):
            raise ValidationError(f"incident {iid!r}: events must be strictly ordered by seq")

        consequence = None
        if entry.get("consequence") is not None:
            consequence = parse_consequence(entry["consequence"], where=f"incident {iid!r}")

        sources = entry.get("sources", [])
        if not isinstance(sources, list) or not all(isinstance(s, str) for s in sources):
            raise ValidationError(f"incident {iid!r}: sources must be a list of strings")

        records.append(IncidentRecord(
            id=iid, year=year, category=category,
            target=entry.get("target", ""), actor=entry.get("actor", ""),
            objective=entry.get("objective", ""), narrative=entry.get("narrative", ""),
            sources=tuple(sources), events=tuple(events), consequence=consequence))
    return records


def category_histogram(records: list[IncidentRecord]) -> dict[AttackCategory, int]:
    """Count records per category; every category is present in the result."""
    counts = {cat: 0 for cat in AttackCategory}
    for record in records:
        counts[record.category] += 1
    return counts
