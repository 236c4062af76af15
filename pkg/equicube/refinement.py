"""
Coarsest equitable refinement of an arbitrary coloring of Q_n.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from equicube.config import invariant_checks_enabled
from equicube.exceptions import InvariantViolation, MismatchError
from equicube.hypercube import Coloring
from equicube.spectral import essential_arguments, neighbor_color_counts

logger = logging.getLogger(__name__)


@dataclass
class RefinementTrace:
    rounds: list = field(default_factory=list)
    final: Optional[Coloring] = None

    def to_dict(self) -> dict:
        return {
            "rounds": [{"round": r, "k_before": before, "k_after": after} for r, before, after in self.rounds],
            "final_k": self.final.k if self.final is not None else None,
        }


def _split_round(colors: np.ndarray, k: int, n: int) -> tuple:
    """One splitting round: new labels ordered by (old color, neighbor signature)."""
    counts = neighbor_color_counts(colors, k, n)
    signature = np.concatenate((colors[:, None].astype(np.int64), counts.astype(np.int64)), axis=1)
    unique, inverse = np.unique(signature, axis=0, return_inverse=True)
    return inverse.reshape(-1).astype(np.int64), len(unique)


def coarsest_equitable_refinement(f: Coloring, trace: bool = False):
    """Split classes by neighbor color counts until stable.

    Args:
        f (Coloring): any coloring
        trace (bool): also return a RefinementTrace

    Returns:
        Coloring, or (Coloring, RefinementTrace) when trace is set. The result is perfect,
        refines f, and is refined by every perfect coloring that refines f.
    """
    colors = f.colors.astype(np.int64)
    k = f.k
    log = RefinementTrace()
    round_index = 0
    while True:
        colors_next, k_next = _split_round(colors, k, f.n)
        log.rounds.append((round_index, k, k_next))
        logger.debug(f"refinement round {round_index}: {k} -> {k_next} colors")
        round_index += 1
        if k_next == k:
            break
        colors, k = colors_next, k_next
    result = Coloring(f.n, colors)
    log.final = result
    if invariant_checks_enabled():
        _check_essential_monotone(f, result)
    if trace:
        return result, log
    return result


def _check_essential_monotone(f: Coloring, g: Coloring) -> None:
    before = set(essential_arguments(f))
    after = set(essential_arguments(g))
    if not after <= before:
        raise InvariantViolation(
            f"refinement gained essential arguments {sorted(after - before)}",
            operation="coarsest_equitable_refinement",
            n=f.n,
            k=f.k,
        )


def is_refinement_of(g: Coloring, f: Coloring) -> bool:
    """True iff every color class of g lies inside one color class of f."""
    if g.n != f.n:
        raise MismatchError("cannot compare colorings of different dimensions", operation="is_refinement_of", n=g.n)
    pairs = np.unique(g.colors.astype(np.int64) * f.k + f.colors.astype(np.int64))
    return len(pairs) == g.k
