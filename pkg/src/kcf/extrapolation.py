"""Missing-data extrapolation: from incomplete incident records to kill chains.

The pipeline runs in three steps per incident and assumption profile:

1. Objective inference: objective-category tactics are taken from the
   annotated events when present, otherwise from the per-category objective
   rule rows.
2. Tactic chain construction: the observed events form an immutable
   backbone in chronological order; required milestone tactics (per-category
   rows plus toggle-gated ones) and missing prerequisites are inserted at
   the earliest position that respects the prerequisite DAG, keeps
   non-objective tactics ahead of the first objective, and never reorders
   observations. Insertion order is deterministic: prerequisite-topological,
   ties broken by category (information discovery < enabling < milestone <
   objective) then tactic id.
3. Milestone blocks: every milestone tactic owns a block of supporting
   enabling / information-discovery tactics. Block rules list the expected
   supporters per milestone (optionally gated by a profile toggle); missing
   ones are inserted just before the milestone, in rule order, skipping
   tactics the block already contains.

Enumeration then expands each chain position without an annotated technique
over its candidate technique set (keyed by the profile's actor key),
producing the Cartesian product in lexicographic order. A step keeps
provenance "observed" only when both its tactic and technique come from an
annotated event; every candidate-expanded step is "extrapolated".
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (ChainCapExceeded, MissingCandidates, NoObjectiveResolvable,
                     ParseError, UnsatisfiablePrerequisites, ValidationError)
from .incidents import AttackCategory, IncidentRecord, Provenance
from .system_model import SegmentKind
from .taxonomy import ActivityCategory, Taxonomy

DEFAULT_CHAIN_CAP = 100_000

# Documented assumption toggles. The tactic each one inserts is data in the
# rule table, not code.
TOGGLE_KEYS = frozenset({
    "requires_privilege_escalation",
    "requires_defense_evasion",
    "requires_persistence",
    "requires_credential_access",
    "requires_lateral_movement",
    "requires_command_and_control",
})

_CATEGORY_RANK = {
    ActivityCategory.INFO_DISCOVERY: 0,
    ActivityCategory.ENABLING: 1,
    ActivityCategory.MILESTONE: 2,
    ActivityCategory.OBJECTIVE: 3,
}


@dataclass(frozen=True)
class AssumptionProfile:
    """Named set of extrapolation assumptions.

    ``actor_profile`` selects the candidate technique sets. ``categories``
    and ``actors`` restrict which incidents the profile applies to; empty
    means no restriction.
    """

    name: str
    actor_profile: str
    toggles: dict[str, bool] = field(default_factory=dict)
    categories: frozenset[AttackCategory] = frozenset()
    actors: frozenset[str] = frozenset()

    def applies_to(self, record: IncidentRecord) -> bool:
        if self.categories and record.category not in self.categories:
            return False
        if self.actors and record.actor not in self.actors:
            return False
        return True


@dataclass(frozen=True)
class BlockSupporter:
    tactic: str
    toggle: str | None = None


@dataclass(frozen=True)
class RuleTable:
    """Extrapolation rules: objective rows, milestone rows, block rules."""

    objectives: dict[AttackCategory, tuple[str, ...]]
    milestones: dict[AttackCategory, tuple[str, ...]]
    toggle_milestones: dict[str, str]
    blocks: dict[str, tuple[BlockSupporter, ...]]
    technique_tags: dict[str, frozenset[str]]


@dataclass(frozen=True)
class CandidateMap:
    """Candidate technique ids per (actor profile, tactic)."""

    sets: dict[str, dict[str, tuple[str, ...]]]

    def candidates_for(self, actor_profile: str, tactic: str) -> tuple[str, ...]:
        options = self.sets.get(actor_profile, {}).get(tactic, ())
        if not options:
            raise MissingCandidates(
                f"no candidate techniques for tactic {tactic!r}"
                f" under actor profile {actor_profile!r}")
        return options


@dataclass(frozen=True)
class ChainStep:
    """One chain position: a tactic, optionally a fixed technique."""

    tactic: str
    technique: str | None
    provenance: Provenance
    segment: SegmentKind | None = None


@dataclass(frozen=True)
class MilestoneBlock:
    milestone: str
    supporting: tuple[str, ...]


@dataclass(frozen=True)
class CampaignScenario:
    incident_id: str
    profile: str
    actor_profile: str
    steps: tuple[ChainStep, ...]
    blocks: tuple[MilestoneBlock, ...] = ()

    @property
    def tactic_chain(self) -> list[tuple[str, Provenance]]:
        return [(s.tactic, s.provenance) for s in self.steps]


@dataclass(frozen=True)
class KillChain:
    incident_id: str
    profile: str
    steps: tuple[ChainStep, ...]
    scenario: CampaignScenario | None = None


@dataclass(frozen=True)
class ExtrapolationResult:
    incident_id: str
    scenarios: tuple[CampaignScenario, ...]
    chains: tuple[KillChain, ...]


def infer_objectives(record: IncidentRecord, tax: Taxonomy,
                     rules: RuleTable) -> list[tuple[str, Provenance]]:
    """Objective tactics for an incident, chronologically ordered.

    Annotated objective events win; only when none exist does the
    per-category rule row supply extrapolated objectives.
    """
    annotated = [
        (e.tactic, Provenance.OBSERVED) for e in record.events
        if e.tactic and tax.category_of(e.tactic) is ActivityCategory.OBJECTIVE
    ]
    if annotated:
        return annotated
    row = rules.objectives.get(record.category, ())
    if not row:
        raise NoObjectiveResolvable(
            f"incident {record.id!r}: no annotated objective and no rule row"
            f" for category {record.category.value!r}")
    return [(tactic, Provenance.EXTRAPOLATED) for tactic in row]


def _topo_order(tactics: list[str], tax: Taxonomy) -> list[str]:
    """Prerequisite-topological order, ties by (category rank, tactic id)."""
    def tie_key(t: str):
        return (_CATEGORY_RANK[tax.category_of(t)], t)

    pool = set(tactics)
    deps = {t: {a for a, b in tax.prerequisites if b == t and a in pool} for t in pool}
    order: list[str] = []
    while pool:
        ready = sorted((t for t in pool if not deps[t]), key=tie_key)
        if not ready:  # cannot happen: taxonomy validated the DAG
            ready = sorted(pool, key=tie_key)
        for t in ready:
            order.append(t)
            pool.discard(t)
            for others in deps.values():
                others.discard(t)
    return order


def _first_index(steps: list[ChainStep], tactic: str) -> int | None:
    for i, step in enumerate(steps):
        if step.tactic == tactic:
            return i
    return None


def _first_objective_index(steps: list[ChainStep], tax: Taxonomy) -> int | None:
    for i, step in enumerate(steps):
        if tax.category_of(step.tactic) is ActivityCategory.OBJECTIVE:
            return i
    return None


def _check_order(steps: list[ChainStep], tax: Taxonomy, incident_id: str) -> None:
    for a, b in tax.prerequisites:
        ia, ib = _first_index(steps, a), _first_index(steps, b)
        if ia is not None and ib is not None and ia > ib:
            raise UnsatisfiablePrerequisites(
                f"incident {incident_id!r}: observed order places {b!r}"
                f" before its prerequisite {a!r}")


def _insert_tactic(steps: list[ChainStep], tactic: str, tax: Taxonomy,
                   incident_id: str) -> None:
    """Insert an extrapolated tactic at the earliest valid position."""
    lower = 0
    for a, b in tax.prerequisites:
        if b == tactic:
            ia = _first_index(steps, a)
            if ia is not None:
                lower = max(lower, ia + 1)
    upper = len(steps)
    for a, b in tax.prerequisites:
        if a == tactic:
            ib = _first_index(steps, b)
            if ib is not None:
                upper = min(upper, ib)
    if tax.category_of(tactic) is not ActivityCategory.OBJECTIVE:
        first_obj = _first_objective_index(steps, tax)
        if first_obj is not None:
            upper = min(upper, first_obj)
    if lower > upper:
        raise UnsatisfiablePrerequisites(
            f"incident {incident_id!r}: no valid position for {tactic!r}"
            f" under the observed order")
    steps.insert(lower, ChainStep(tactic, None, Provenance.EXTRAPOLATED))


def build_tactic_chain(record: IncidentRecord, objectives: list[tuple[str, Provenance]],
                       tax: Taxonomy, profile: AssumptionProfile,
                       rules: RuleTable) -> CampaignScenario:
    """Step 2: backbone from observations, then milestone and prerequisite
    gap-filling. Returns a scenario without milestone blocks attached.
    """
    if not objectives:
        raise NoObjectiveResolvable(f"incident {record.id!r}: empty objective list")

    steps = [ChainStep(e.tactic, e.technique, Provenance.OBSERVED, e.segment)
             for e in record.events if e.tactic]
    for tactic, provenance in objectives:
        if provenance is Provenance.EXTRAPOLATED:
            steps.append(ChainStep(tactic, None, Provenance.EXTRAPOLATED))
    _check_order(steps, tax, record.id)

    required = list(rules.milestones.get(record.category, ()))
    for toggle in sorted(rules.toggle_milestones):
        if profile.toggles.get(toggle, False):
            required.append(rules.toggle_milestones[toggle])
    pending = [t for t in dict.fromkeys(required)
               if _first_index(steps, t) is None]
    for tactic in _topo_order(pending, tax):
        _insert_tactic(steps, tactic, tax, record.id)

    # Prerequisite closure: anything present pulls in its missing
    # prerequisites, transitively.
    while True:
        present = {s.tactic for s in steps}
        missing = {a for a, b in tax.prerequisites if b in present and a not in present}
        if not missing:
            break
        for tactic in _topo_order(sorted(missing), tax):
            _insert_tactic(steps, tactic, tax, record.id)

    return CampaignScenario(incident_id=record.id, profile=profile.name,
                            actor_profile=profile.actor_profile, steps=tuple(steps))


def attach_milestone_blocks(scenario: CampaignScenario, tax: Taxonomy,
                            profile: AssumptionProfile,
                            rules: RuleTable) -> CampaignScenario:
    """Step 3: give every milestone tactic its block, inserting missing
    supporters per the block rules. Idempotent: supporters already in the
    block are never duplicated.
    """
    out: list[ChainStep] = []
    span: list[ChainStep] = []
    blocks: list[MilestoneBlock] = []
    for step in scenario.steps:
        if tax.category_of(step.tactic) is not ActivityCategory.MILESTONE:
            out.append(step)
            span.append(step)
            continue
        present = {s.tactic for s in span}
        inserted: list[ChainStep] = []
        for supporter in rules.blocks.get(step.tactic, ()):
            if supporter.toggle and not profile.toggles.get(supporter.toggle, False):
                continue
            if supporter.tactic in present:
                continue
            present.add(supporter.tactic)
            inserted.append(ChainStep(supporter.tactic, None, Provenance.EXTRAPOLATED))
        supporting = [s.tactic for s in span
                      if tax.category_of(s.tactic) in (ActivityCategory.ENABLING,
                                                       ActivityCategory.INFO_DISCOVERY)]
        supporting += [s.tactic for s in inserted]
        out.extend(inserted)
        out.append(step)
        blocks.append(MilestoneBlock(milestone=step.tactic, supporting=tuple(supporting)))
        span = []
    return replace(scenario, steps=tuple(out), blocks=tuple(blocks))


def chain_count(scenario: CampaignScenario, candidates: CandidateMap) -> int:
    """Number of chains enumeration would produce, without materializing."""
    count = 1
    for step in scenario.steps:
        if step.technique is None:
            count *= len(candidates.candidates_for(scenario.actor_profile, step.tactic))
    return count


def enumerate_killchains(scenario: CampaignScenario, candidates: CandidateMap,
                         tax: Taxonomy, cap: int | None = None) -> list[KillChain]:
    """Expand candidate techniques into the full set of kill chains.

    Output size is the product of the candidate-set sizes over the steps
    without a fixed technique; chains come out in lexicographic order of
    the candidate choices.
    """
    options: list[tuple[str, ...]] = []
    for step in scenario.steps:
        if step.technique is not None:
            options.append((step.technique,))
        else:
            options.append(candidates.candidates_for(scenario.actor_profile, step.tactic))
    total = math.prod(len(o) for o in options)
    if cap is not None and total > cap:
        raise ChainCapExceeded(scenario.incident_id, total, cap)

    chains: list[KillChain] = []
    for combo in itertools.product(*options):
        steps = tuple(
            ChainStep(
                tactic=step.tactic,
                technique=technique,
                provenance=(Provenance.OBSERVED
                            if step.provenance is Provenance.OBSERVED
                            and step.technique is not None
                            else Provenance.EXTRAPOLATED),
                segment=step.segment,
            )
            for step, technique in zip(scenario.steps, combo))
        chains.append(KillChain(incident_id=scenario.incident_id,
                                profile=scenario.profile, steps=steps,
                                scenario=scenario))
    return chains


def run_extrapolation(record: IncidentRecord, tax: Taxonomy,
                      profiles: list[AssumptionProfile], candidates: CandidateMap,
                      rules: RuleTable,
                      cap: int | None = DEFAULT_CHAIN_CAP) -> ExtrapolationResult:
    """Full per-incident pipeline over every given profile.

    The cap bounds the incident's total chain count across profiles and is
    checked before any chain is materialized. Output is ordered by profile
    name, then lexicographic chain order.
    """
    scenarios: list[CampaignScenario] = []
    for profile in sorted(profiles, key=lambda p: p.name):
        objectives = infer_objectives(record, tax, rules)
        scenario = build_tactic_chain(record, objectives, tax, profile, rules)
        scenario = attach_milestone_blocks(scenario, tax, profile, rules)
        scenarios.append((scenario, profile))

    total = sum(chain_count(s, candidates) for s, _ in scenarios)
    if cap is not None and total > cap:
        raise ChainCapExceeded(record.id, total, cap)

    chains: list[KillChain] = []
    for scenario, _ in scenarios:
        chains.extend(enumerate_killchains(scenario, candidates, tax, cap=None))
    return ExtrapolationResult(incident_id=record.id,
                               scenarios=tuple(s for s, _ in scenarios),
                               chains=tuple(chains))


def select_profiles(record: IncidentRecord,
                    profiles: list[AssumptionProfile]) -> list[AssumptionProfile]:
    """Profiles applicable to a record, in their declared order."""
    return [p for p in profiles if p.applies_to(record)]


# ---------------------------------------------------------------------------
# File loading

def load_profiles(path: str | Path) -> list[AssumptionProfile]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read profiles {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError("profiles: top level must be an array")
    profiles: list[AssumptionProfile] = []
    names: set[str] = set()
    for entry in raw:
        if not isinstance(entry, dict):
            raise ParseError("profiles: entries must be objects")
        unknown = set(entry) - {"name", "actor_profile", "toggles", "applies_to"}
        if unknown:
            raise ParseError(f"profile {entry.get('name')!r}: unknown keys {sorted(unknown)}")
        name = entry.get("name")
        if not name or not isinstance(name, str):
            raise ValidationError("profile name must be a non-empty string")
        if name in names:
            raise ValidationError(f"duplicate profile name: {name!r}")
        names.add(name)
        toggles = entry.get("toggles", {})
        bad = set(toggles) - TOGGLE_KEYS
        if bad:
            raise ValidationError(f"profile {name!r}: unknown toggles {sorted(bad)}")
        applies = entry.get("applies_to", {})
        if not isinstance(applies, dict) or set(applies) - {"categories", "actors"}:
            raise ParseError(f"profile {name!r}: applies_to takes categories/actors")
        try:
            categories = frozenset(AttackCategory(c) for c in applies.get("categories", []))
        except ValueError as exc:
            raise ValidationError(f"profile {name!r}: {exc}") from exc
        profiles.append(AssumptionProfile(
            name=name, actor_profile=entry.get("actor_profile", ""),
            toggles={k: bool(v) for k, v in toggles.items()},
            categories=categories,
            actors=frozenset(applies.get("actors", []))))
    return profiles


def load_rules(path: str | Path, tax: Taxonomy) -> RuleTable:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read rules {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("rules: top level must be an object")
    unknown = set(raw) - {"objectives", "milestones", "toggle_milestones",
                          "blocks", "technique_tags"}
    if unknown:
        raise ParseError(f"rules: unknown keys {sorted(unknown)}")

    def want_category(tactic: str, category: ActivityCategory, where: str) -> str:
        if tactic not in tax.tactics:
            raise ValidationError(f"rules: {where} names unknown tactic {tactic!r}")
        if tax.category_of(tactic) is not category:
            raise ValidationError(
                f"rules: {where} tactic {tactic!r} is not {category.value}")
        return tactic

    objectives: dict[AttackCategory, tuple[str, ...]] = {}
    for key, row in raw.get("objectives", {}).items():
        cat = AttackCategory(key)
        objectives[cat] = tuple(
            want_category(t, ActivityCategory.OBJECTIVE, f"objectives[{key}]")
            for t in row)
    missing = [c.value for c in AttackCategory if c not in objectives]
    if missing:
        raise ValidationError(f"rules: objectives missing categories {missing}")

    milestones: dict[AttackCategory, tuple[str, ...]] = {}
    for key, row in raw.get("milestones", {}).items():
        cat = AttackCategory(key)
        milestones[cat] = tuple(
            want_category(t, ActivityCategory.MILESTONE, f"milestones[{key}]")
            for t in row)

    toggle_milestones: dict[str, str] = {}
    for toggle, tactic in raw.get("toggle_milestones", {}).items():
        if toggle not in TOGGLE_KEYS:
            raise ValidationError(f"rules: unknown toggle {toggle!r}")
        toggle_milestones[toggle] = want_category(
            tactic, ActivityCategory.MILESTONE, f"toggle_milestones[{toggle}]")

    blocks: dict[str, tuple[BlockSupporter, ...]] = {}
    for milestone, entries in raw.get("blocks", {}).items():
        want_category(milestone, ActivityCategory.MILESTONE, "blocks")
        supporters = []
        for entry in entries:
            if not isinstance(entry, dict) or set(entry) - {"tactic", "toggle"}:
                raise ParseError(f"rules: blocks[{milestone}] entries take tactic/toggle")
            tactic = entry["tactic"]
            if tactic not in tax.tactics:
                raise ValidationError(f"rules: blocks[{milestone}] names unknown tactic {tactic!r}")
            if tax.category_of(tactic) not in (ActivityCategory.ENABLING,
                                               ActivityCategory.INFO_DISCOVERY):
                raise ValidationError(
                    f"rules: blocks[{milestone}] supporter {tactic!r} must be"
                    " enabling or info_discovery")
            toggle = entry.get("toggle")
            if toggle is not None and toggle not in TOGGLE_KEYS:
                raise ValidationError(f"rules: unknown toggle {toggle!r}")
            supporters.append(BlockSupporter(tactic=tactic, toggle=toggle))
        blocks[milestone] = tuple(supporters)

    technique_tags: dict[str, frozenset[str]] = {}
    for tag, ids in raw.get("technique_tags", {}).items():
        for tid in ids:
            if tid not in tax.techniques:
                raise ValidationError(f"rules: tag {tag!r} names unknown technique {tid!r}")
        technique_tags[tag] = frozenset(ids)

    return RuleTable(objectives=objectives, milestones=milestones,
                     toggle_milestones=toggle_milestones, blocks=blocks,
                     technique_tags=technique_tags)


def load_candidates(path: str | Path, tax: Taxonomy) -> CandidateMap:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read candidates {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("candidates: top level must be an object")
    sets: dict[str, dict[str, tuple[str, ...]]] = {}
    for actor, per_tactic in raw.items():
        if not isinstance(per_tactic, dict):
            raise ParseError(f"candidates[{actor}]: must be an object")
        rows: dict[str, tuple[str, ...]] = {}
        for tactic, ids in per_tactic.items():
            if tactic not in tax.tactics:
                raise ValidationError(f"candidates[{actor}]: unknown tactic {tactic!r}")
            if not isinstance(ids, list) or not ids:
                raise ValidationError(f"candidates[{actor}][{tactic}]: empty candidate set")
            if len(set(ids)) != len(ids):
                raise ValidationError(f"candidates[{actor}][{tactic}]: duplicate techniques")
            for tid in ids:
                entry = tax.techniques.get(tid)
                if entry is None:
                    raise ValidationError(
                        f"candidates[{actor}][{tactic}]: unknown technique {tid!r}")
                if tactic not in entry.tactics:
                    raise ValidationError(
                        f"candidates[{actor}][{tactic}]: {tid!r} does not map to this tactic")
            rows[tactic] = tuple(ids)
        sets[actor] = rows
    return CandidateMap(sets=sets)


# ---------------------------------------------------------------------------
# Kill Chain Table serialization

KILLCHAIN_COLUMNS = ("incident_id", "profile", "chain_index", "step_index",
                     "tactic_id", "technique_id", "provenance", "segment")


def write_killchain_table(results: list[ExtrapolationResult], path: str | Path) -> None:
    """Write the Kill Chain Table CSV, one row per step, sorted by incident."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(KILLCHAIN_COLUMNS)
        for result in sorted(results, key=lambda r: r.incident_id):
            for chain_index, chain in enumerate(result.chains):
                for step_index, step in enumerate(chain.steps):
                    writer.writerow([
                        result.incident_id, chain.profile, chain_index, step_index,
                        step.tactic, step.technique, step.provenance.value,
                        step.segment.value if step.segment else ""])


def read_killchain_table(path: str | Path) -> list[KillChain]:
    """Rebuild kill chains from a table written by write_killchain_table."""
    grouped: dict[tuple[str, int], list[tuple[int, ChainStep, str]]] = {}
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != list(KILLCHAIN_COLUMNS):
                raise ParseError(f"{path}: unexpected kill chain table header")
            for row in reader:
                step = ChainStep(
                    tactic=row["tactic_id"],
                    technique=row["technique_id"] or None,
                    provenance=Provenance(row["provenance"]),
                    segment=SegmentKind(row["segment"]) if row["segment"] else None)
                key = (row["incident_id"], int(row["chain_index"]))
                grouped.setdefault(key, []).append((int(row["step_index"]), step, row["profile"]))
    except OSError as exc:
        raise ParseError(f"cannot read kill chain table {path}: {exc}") from exc
    chains = []
    for (incident_id, _), rows in sorted(grouped.items()):
        rows.sort(key=lambda r: r[0])
        chains.append(KillChain(incident_id=incident_id, profile=rows[0][2],
                                steps=tuple(step for _, step, _ in rows)))
    return chains
