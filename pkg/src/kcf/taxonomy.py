"""Tactic/technique vocabulary: activity categories, scores, prerequisites.

A taxonomy is loaded from a JSON file and is immutable afterwards. It
partitions tactics into four activity categories (objective, milestone,
enabling, information discovery), carries a sophistication score in [0, 1]
for every tactic and technique, and declares prerequisite edges between
tactics ("left must precede right in a chain") that must form a DAG.
"""

from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ParseError, UnknownId, ValidationError


class Source(Enum):
    ATTACK = "attack"
    SPARTA = "sparta"


class ActivityCategory(Enum):
    OBJECTIVE = "objective"
    MILESTONE = "milestone"
    ENABLING = "enabling"
    INFO_DISCOVERY = "info_discovery"


@dataclass(frozen=True)
class Tactic:
    id: str
    name: str
    source: Source
    category: ActivityCategory
    score: float


@dataclass(frozen=True)
class Technique:
    id: str
    name: str
    source: Source
    tactics: tuple[str, ...]
    score: float


@dataclass(frozen=True)
class Taxonomy:
    tactics: dict[str, Tactic]
    techniques: dict[str, Technique]
    prerequisites: tuple[tuple[str, str], ...]

    def category_of(self, tactic_id: str) -> ActivityCategory:
        try:
            return self.tactics[tactic_id].category
        except KeyError:
            raise UnknownId(f"unknown tactic: {tactic_id!r}") from None

    def score_of_tactic(self, tactic_id: str) -> float:
        try:
            return self.tactics[tactic_id].score
        except KeyError:
            raise UnknownId(f"unknown tactic: {tactic_id!r}") from None

    def score_of_technique(self, technique_id: str) -> float:
        try:
            return self.techniques[technique_id].score
        except KeyError:
            raise UnknownId(f"unknown technique: {technique_id!r}") from None

    def tactics_in_category(self, category: ActivityCategory) -> list[str]:
        return [t.id for t in self.tactics.values() if t.category is category]

    def techniques_for_tactic(self, tactic_id: str) -> list[str]:
        if tactic_id not in self.tactics:
            raise UnknownId(f"unknown tactic: {tactic_id!r}")
        return [te.id for te in self.techniques.values() if tactic_id in te.tactics]

    def prerequisites_of(self, tactic_id: str) -> list[str]:
        return [a for a, b in self.prerequisites if b == tactic_id]


_TACTIC_KEYS = {"id", "name", "source", "category", "score"}
_TECHNIQUE_KEYS = {"id", "name", "source", "tactics", "score"}
_TOP_KEYS = {"tactics", "techniques", "prerequisites"}


def _check_keys(entry: dict, allowed: set[str], what: str) -> None:
    unknown = set(entry) - allowed
    if unknown:
        raise ParseError(f"{what}: unknown keys {sorted(unknown)}")
    missing = allowed - set(entry)
    if missing:
        raise ParseError(f"{what}: missing keys {sorted(missing)}")


def _score(value, what: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ParseError(f"{what}: score must be a number")
    score = float(value)
    if not 0.0 <= score <= 1.0:
        raise ValidationError(f"{what}: score {score} outside [0, 1]")
    return score


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load and validate a taxonomy file; see the module docstring for rules."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read taxonomy {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("taxonomy: top level must be an object")
    _check_keys(raw, _TOP_KEYS, "taxonomy")

    tactics: dict[str, Tactic] = {}
    for entry in raw["tactics"]:
        if not isinstance(entry, dict):
            raise ParseError("taxonomy: tactic entries must be objects")
        _check_keys(entry, _TACTIC_KEYS, f"tactic {entry.get('id')!r}")
        tid = entry["id"]
        if not tid or not isinstance(tid, str):
            raise ValidationError("tactic id must be a non-empty string")
        if tid in tactics:
            raise ValidationError(f"duplicate tactic id: {tid!r}")
        try:
            source = Source(entry["source"])
            category = ActivityCategory(entry["category"])
        except ValueError as exc:
            raise ParseError(f"tactic {tid!r}: {exc}") from exc
        tactics[tid] = Tactic(tid, entry["name"], source, category,
                              _score(entry["score"], f"tactic {tid!r}"))
    if not tactics:
        raise ValidationError("taxonomy has no tactics")

    techniques: dict[str, Technique] = {}
    for entry in raw["techniques"]:
        if not isinstance(entry, dict):
            raise ParseError("taxonomy: technique entries must be objects")
        _check_keys(entry, _TECHNIQUE_KEYS, f"technique {entry.get('id')!r}")
        tid = entry["id"]
        if not tid or not isinstance(tid, str):
            raise ValidationError("technique id must be a non-empty string")
        if tid in techniques or tid in tactics:
            raise ValidationError(f"duplicate id: {tid!r}")
        parents = entry["tactics"]
        if not isinstance(parents, list) or not parents:
            raise ValidationError(f"technique {tid!r} references no tactic")
        for parent in parents:
            if parent not in tactics:
                raise ValidationError(
                    f"technique {tid!r} references unknown tactic {parent!r}")
        try:
            source = Source(entry["source"])
        except ValueError as exc:
            raise ParseError(f"technique {tid!r}: {exc}") from exc
        techniques[tid] = Technique(tid, entry["name"], source, tuple(parents),
                                    _score(entry["score"], f"technique {tid!r}"))

    edges: list[tuple[str, str]] = []
    for item in raw["prerequisites"]:
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(x, str) for x in item)):
            raise ParseError("prerequisites must be [before, after] id pairs")
        before, after = item
        for tid in (before, after):
            if tid not in tactics:
                raise ValidationError(f"prerequisite references unknown tactic {tid!r}")
        edges.append((before, after))

    sorter = graphlib.TopologicalSorter({t: set() for t in tactics})
    for before, after in edges:
        sorter.add(after, before)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        raise ValidationError(f"prerequisite edges contain a cycle: {exc.args[1]}") from exc

    return Taxonomy(tactics=tactics, techniques=techniques, prerequisites=tuple(edges))


def serialize_taxonomy(tax: Taxonomy) -> dict:
    """Plain-dict form that round-trips through load_taxonomy."""
    return {
        "tactics": [
            {"id": t.id, "name": t.name, "source": t.source.value,
             "category": t.category.value, "score": t.score}
            for t in tax.tactics.values()
        ],
        "techniques": [
            {"id": te.id, "name": te.name, "source": te.source.value,
             "tactics": list(te.tactics), "score": te.score}
            for te in tax.techniques.values()
        ],
        "prerequisites": [list(edge) for edge in tax.prerequisites],
    }


def save_taxonomy(tax: Taxonomy, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(serialize_taxonomy(tax), indent=2) + "\n", encoding="utf-8")
