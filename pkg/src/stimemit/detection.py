"""Threshold-detector fanouts, coincidence probabilities, and heralding.

Detection is diagonal in the Fock basis: each basis state contributes its
squared amplitude times the probability that the photons it places in each
fanout produce the required number of clicks.  Modes listed on the same
fanout (a beam and its temporally orthogonal companions) pool their photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

from .fock import FockError, ModeRegistry, QuantumState


@dataclass(frozen=True)
class DetectorFanout:
    """A beam split over ``arms`` threshold detectors.

    Parameters
    ----------
    channel : str
        Mode feeding the fanout.
    arms : int
        Number of detectors.
    splitting : tuple of float, optional
        Routing probability per arm; symmetric when omitted.
    efficiency : float
        Per-detector efficiency, applied independently to each photon.
    companions : tuple of str
        Further modes entering the same detectors (e.g. the orthogonal
        temporal mode of ``channel``).
    """

    channel: str
    arms: int = 1
    splitting: tuple[float, ...] | None = None
    efficiency: float = 1.0
    companions: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.arms < 1:
            raise FockError(f"fanout needs at least one arm, got {self.arms}")
        split = self.splitting
        if split is None:
            split = (1.0 / self.arms,) * self.arms
        split = tuple(float(p) for p in split)
        if len(split) != self.arms:
            raise FockError(f"splitting has {len(split)} entries for {self.arms} arms")
        if any(p < 0 for p in split) or abs(math.fsum(split) - 1.0) > 1e-12:
            raise FockError(f"splitting must be non-negative and sum to 1, got {split}")
        if not 0.0 < self.efficiency <= 1.0:
            raise FockError(f"efficiency must be in (0, 1], got {self.efficiency}")
        object.__setattr__(self, "splitting", split)
        object.__setattr__(self, "companions", tuple(self.companions))

    @classmethod
    def symmetric(cls, channel: str, arms: int, efficiency: float = 1.0,
                  companions: Sequence[str] = ()) -> "DetectorFanout":
        return cls(channel, arms, None, efficiency, tuple(companions))

    @classmethod
    def cascade(cls, channel: str, efficiency: float = 1.0,
                companions: Sequence[str] = ()) -> "DetectorFanout":
        """Three detectors behind two 50:50 splitters: (1/2, 1/4, 1/4)."""
        return cls(channel, 3, (0.5, 0.25, 0.25), efficiency, tuple(companions))

    @property
    def modes(self) -> tuple[str, ...]:
        return (self.channel,) + self.companions


@dataclass(frozen=True)
class CoincidencePattern:
    """Required clicks per fanout, e.g. ``(("signal", 3), ("idler", 1))``."""

    requirements: tuple[tuple[str, int], ...]

    def __post_init__(self):
        reqs = tuple((str(g), int(k)) for g, k in self.requirements)
        if any(k < 0 for _, k in reqs):
            raise FockError("click requirements must be >= 0")
        object.__setattr__(self, "requirements", reqs)

    @property
    def photons_required(self) -> int:
        return sum(k for _, k in self.requirements)


def _compositions(n: int, bins: int):
    if bins == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, bins - 1):
            yield (first,) + rest


@lru_cache(maxsize=4096)
def _click_probability(n: int, splitting: tuple[float, ...], efficiency: float,
                       required: int) -> float:
    # the final bin collects photons lost to inefficiency
    probs = tuple(efficiency * p for p in splitting) + (1.0 - efficiency,)
    total = 0.0
    for counts in _compositions(n, len(probs)):
        clicks = sum(1 for c in counts[:-1] if c > 0)
        if clicks < required:
            continue
        weight = math.factorial(n)
        for c, p in zip(counts, probs):
            weight = weight / math.factorial(c) * p ** c
        total += weight
    return total


def click_probability_given_photons(n: int, fanout: DetectorFanout, required_clicks: int) -> float:
    """Probability that at least ``required_clicks`` arms fire when ``n`` photons arrive.

    Exact multinomial enumeration over routings, with each photon detected
    independently with the fanout efficiency.
    """
    if n < 0:
        raise FockError(f"photon number must be >= 0, got {n}")
    if required_clicks > fanout.arms:
        raise FockError(f"{required_clicks} clicks requested from a {fanout.arms}-arm fanout")
    if required_clicks <= 0:
        return 1.0
    return _click_probability(int(n), fanout.splitting, float(fanout.efficiency), int(required_clicks))


def coincidence_probability(
    state: QuantumState,
    pattern: CoincidencePattern,
    fanouts: Mapping[str, DetectorFanout],
) -> float:
    """Probability of the coincidence ``pattern`` for ``state`` (not renormalized)."""
    groups = []
    for name, required in pattern.requirements:
        if name not in fanouts:
            raise FockError(f"pattern references fanout {name!r} with no definition")
        fan = fanouts[name]
        if required > fan.arms:
            raise FockError(f"{required} clicks requested from {fan.arms}-arm fanout {name!r}")
        idx = [state.registry.index(m) for m in fan.modes]
        groups.append((fan, idx, required))
    total = 0.0
    for occ, amp in state:
        p = abs(amp) ** 2
        for fan, idx, required in groups:
            if p == 0.0:
                break
            p *= click_probability_given_photons(sum(occ[j] for j in idx), fan, required)
        total += p
    return total


def herald_branches(state: QuantumState, herald_mode: str) -> dict[int, QuantumState]:
    """Split the clicked part of ``state`` by herald photon number, herald mode removed.

    The branches are mutually incoherent: after the herald mode is traced
    out they form a mixture, not a superposition.
    """
    j = state.registry.index(herald_mode)
    registry: ModeRegistry = state.registry.without(herald_mode)
    branches: dict[int, dict[tuple[int, ...], complex]] = {}
    for occ, amp in state:
        if occ[j] > 0:
            branches.setdefault(occ[j], {})[occ[:j] + occ[j + 1:]] = amp
    return {
        k: QuantumState(registry, terms, state.cutoff, state.truncated, state.prune)
        for k, terms in sorted(branches.items())
    }


def herald_single_photon(
    state: QuantumState, herald_mode: str, discard: bool = True
) -> tuple[QuantumState, float]:
    """Condition on a click (one or more photons) in ``herald_mode``.

    Returns the unnormalized conditional state and the heralding probability
    (its squared norm).  With ``discard=True`` the herald mode is removed;
    this is only exact when every retained term has the same herald photon
    number, and a :class:`FockError` is raised otherwise.  ``discard=False``
    keeps the projected herald mode, which stays exact in all cases as long
    as later optics leave that mode alone.
    """
    j = state.registry.index(herald_mode)
    if not discard:
        kept = {occ: amp for occ, amp in state if occ[j] > 0}
        out = state._derive(kept)
        return out, out.squared_norm
    branches = herald_branches(state, herald_mode)
    if len(branches) > 1:
        raise FockError(
            f"herald counts {sorted(branches)} on {herald_mode!r} cannot be merged into one pure "
            "state; use discard=False or herald_branches"
        )
    if not branches:
        out = QuantumState(state.registry.without(herald_mode), {}, state.cutoff,
                           state.truncated, state.prune)
    else:
        (out,) = branches.values()
    return out, out.squared_norm
