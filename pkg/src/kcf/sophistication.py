"""Attack sophistication over sets of kill chains.

Each chain's sophistication is the maximum tactic (or technique) score among
its steps. Across the chains extrapolated for one attack, the highest of
those per-chain maxima bounds the attack from above, the lowest bounds the
least sophisticated variant that still succeeds, and the mean summarizes the
spread. All six numbers live in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import EmptyChain, EmptySet
from .incidents import AttackCategory
from .taxonomy import Taxonomy

if TYPE_CHECKING:
    from .extrapolation import KillChain


@dataclass(frozen=True)
class SophisticationResult:
    alpha_ta_plus: float
    alpha_ta_minus: float
    alpha_ta_avg: float
    alpha_te_plus: float
    alpha_te_minus: float
    alpha_te_avg: float
    n_chains: int


@dataclass(frozen=True)
class IncidentSophistication:
    """SophisticationResult plus the incident metadata reports need."""

    incident_id: str
    year: int
    category: AttackCategory
    result: SophisticationResult


def chain_max_tactic(chain: "KillChain", tax: Taxonomy) -> float:
    """Highest tactic score among the chain's steps."""
    if not chain.steps:
        raise EmptyChain(f"chain for {chain.incident_id!r} has no steps")
    return max(tax.score_of_tactic(step.tactic) for step in chain.steps)


def chain_max_technique(chain: "KillChain", tax: Taxonomy) -> float:
    """Highest technique score among the chain's steps."""
    if not chain.steps:
        raise EmptyChain(f"chain for {chain.incident_id!r} has no steps")
    return max(tax.score_of_technique(step.technique) for step in chain.steps)


def attack_sophistication(chains: list["KillChain"], tax: Taxonomy) -> SophisticationResult:
    """Highest / lowest / average sophistication over a set of kill chains.

    Uses math.fsum for the means so the result is independent of chain
    order.
    """
    if not chains:
        raise EmptySet("attack sophistication needs at least one kill chain")
    ta = [chain_max_tactic(c, tax) for c in chains]
    te = [chain_max_technique(c, tax) for c in chains]
    n = len(chains)
    return SophisticationResult(
        alpha_ta_plus=max(ta), alpha_ta_minus=min(ta), alpha_ta_avg=math.fsum(ta) / n,
        alpha_te_plus=max(te), alpha_te_minus=min(te), alpha_te_avg=math.fsum(te) / n,
        n_chains=n)
