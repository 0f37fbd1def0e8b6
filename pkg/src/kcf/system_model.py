"""Four-segment space system model and its addressable components.

The model fixes the component layout used by consequence scoring: a space
segment (bus system + payload), a ground segment (ground station, mission
control, data processing center, remote terminal), a three-component user
segment, and a link segment covering the eight link families between and
within segments. Every component has a canonical string form, e.g.
``space.bus.3``, ``ground.mc.1``, ``user.2``, ``link.sg``, ``link.g.gs-mc``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering

from .errors import ValidationError


class SegmentKind(Enum):
    SPACE = "space"
    GROUND = "ground"
    USER = "user"
    LINK = "link"


SEGMENT_ORDER = (SegmentKind.SPACE, SegmentKind.GROUND, SegmentKind.USER, SegmentKind.LINK)

# Sub-component counts per unit. The names document what each index means.
SPACE_UNITS = {
    "bus": ("electrical power", "attitude control", "communication",
            "command & data", "propulsion", "thermal control"),
    "payload": ("communication", "navigation", "scientific application",
                "remote sensing", "national security"),
}
GROUND_UNITS = {
    "gs": ("tracking", "ranging", "transmission", "reception"),
    "mc": ("telemetry processing", "commanding", "analysis and support"),
    "dpc": ("mission analysis", "payload processing"),
    "rt": ("network access", "software access"),
}
USER_COMPONENTS = ("transmission", "reception", "processing")

# Link families: intra-space, intra-ground WAN, then the six inter-segment
# pairings. The intra-ground family carries an endpoint pair.
LINK_FAMILIES = ("s", "g", "ss", "gg", "sg", "su", "gu", "uu")
WAN_NODES = ("gs", "mc", "dpc", "rt")
WAN_PAIRS = tuple(itertools.combinations(WAN_NODES, 2))


@total_ordering
@dataclass(frozen=True)
class ComponentAddress:
    """One addressable slot of the system model.

    ``unit`` is a unit code for space/ground ("bus", "gs", ...), empty for
    user components, and the link family code for links. ``index`` is the
    1-based sub-component index (0 for links). ``pair`` is set only for
    intra-ground WAN links.
    """

    segment: SegmentKind
    unit: str = ""
    index: int = 0
    pair: tuple[str, str] | None = None

    def canonical(self) -> str:
        if self.segment is SegmentKind.USER:
            return f"user.{self.index}"
        if self.segment is SegmentKind.LINK:
            if self.pair is not None:
                return f"link.g.{self.pair[0]}-{self.pair[1]}"
            return f"link.{self.unit}"
        return f"{self.segment.value}.{self.unit}.{self.index}"

    def sort_key(self) -> tuple:
        seg = SEGMENT_ORDER.index(self.segment)
        if self.segment is SegmentKind.LINK:
            fam = LINK_FAMILIES.index(self.unit)
            pair = WAN_PAIRS.index(self.pair) if self.pair is not None else -1
            return (seg, fam, pair, 0)
        units = {SegmentKind.SPACE: ("bus", "payload"),
                 SegmentKind.GROUND: ("gs", "mc", "dpc", "rt"),
                 SegmentKind.USER: ("",)}[self.segment]
        return (seg, units.index(self.unit), -1, self.index)

    def __lt__(self, other: "ComponentAddress") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.canonical()


def all_components() -> list[ComponentAddress]:
    """Enumerate every address in stable order (space, ground, user, link)."""
    out: list[ComponentAddress] = []
    for unit, subs in SPACE_UNITS.items():
        for i in range(1, len(subs) + 1):
            out.append(ComponentAddress(SegmentKind.SPACE, unit, i))
    for unit, subs in GROUND_UNITS.items():
        for i in range(1, len(subs) + 1):
            out.append(ComponentAddress(SegmentKind.GROUND, unit, i))
    for i in range(1, len(USER_COMPONENTS) + 1):
        out.append(ComponentAddress(SegmentKind.USER, "", i))
    for fam in LINK_FAMILIES:
        if fam == "g":
            for pair in WAN_PAIRS:
                out.append(ComponentAddress(SegmentKind.LINK, "g", 0, pair))
        else:
            out.append(ComponentAddress(SegmentKind.LINK, fam, 0))
    return out


def segment_components(segment: SegmentKind) -> list[ComponentAddress]:
    return [a for a in all_components() if a.segment is segment]


def parse_address(text: str) -> ComponentAddress:
    """Parse a canonical address string; raises ValidationError if unknown."""
    parts = text.split(".")
    try:
        if parts[0] == "user" and len(parts) == 2:
            idx = int(parts[1])
            if 1 <= idx <= len(USER_COMPONENTS):
                return ComponentAddress(SegmentKind.USER, "", idx)
        elif parts[0] == "link":
            if len(parts) == 2 and parts[1] in LINK_FAMILIES and parts[1] != "g":
                return ComponentAddress(SegmentKind.LINK, parts[1], 0)
            if len(parts) == 3 and parts[1] == "g":
                a, b = parts[2].split("-")
                pair = (a, b) if (a, b) in WAN_PAIRS else (b, a)
                if pair in WAN_PAIRS:
                    return ComponentAddress(SegmentKind.LINK, "g", 0, pair)
        elif parts[0] in ("space", "ground") and len(parts) == 3:
            seg = SegmentKind(parts[0])
            units = SPACE_UNITS if seg is SegmentKind.SPACE else GROUND_UNITS
            unit, idx = parts[1], int(parts[2])
            if unit in units and 1 <= idx <= len(units[unit]):
                return ComponentAddress(seg, unit, idx)
    except (ValueError, IndexError):
        pass
    raise ValidationError(f"unknown component address: {text!r}")
