"""Partial distinguishability through a matched/orthogonal mode decomposition.

An injected photon whose temporal mode overlaps the reference mode with
amplitude ``beta`` is written as ``beta * matched + sqrt(1 - beta^2) * orthogonal``.
Only the matched part interferes with photons from the amplifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fock import (
    DEFAULT_CUTOFF,
    FockError,
    ModeRegistry,
    QuantumState,
    coherent_amplitudes,
    coherent_truncation_error,
)


@dataclass(frozen=True)
class OverlapModel:
    """Delay-dependent overlap ``beta(T) = max_overlap * exp(-(T - t0)^2 / (2 tc^2))``.

    The squared overlap then has the ``exp(-(T - t0)^2 / tc^2)`` profile of
    the fitted bunching peak.  ``max_overlap`` is the residual mode match at
    zero delay (1 for a perfectly matched setup).
    """

    t0: float = 0.0
    tc: float = 1.0
    shape: str = "gaussian"
    max_overlap: float = 1.0

    def __post_init__(self):
        if not self.tc > 0:
            raise FockError(f"tc must be > 0, got {self.tc}")
        if self.shape != "gaussian":
            raise FockError(f"unsupported overlap shape {self.shape!r}")
        if not 0.0 <= self.max_overlap <= 1.0:
            raise FockError(f"max_overlap must be in [0, 1], got {self.max_overlap}")


@dataclass(frozen=True)
class ModePair:
    matched: str
    orthogonal: str

    def __post_init__(self):
        if self.matched == self.orthogonal:
            raise FockError("matched and orthogonal modes must differ")


def overlap_amplitude(model: OverlapModel, t_h: float) -> float:
    d = (t_h - model.t0) / model.tc
    return model.max_overlap * math.exp(-0.5 * d * d)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta <= 1.0:
        raise FockError(f"beta must be in [0, 1], got {beta}")
    return beta


def _registry_for(modes: ModePair, registry: ModeRegistry | None) -> ModeRegistry:
    registry = registry or ModeRegistry((modes.matched, modes.orthogonal))
    registry.index(modes.matched)
    registry.index(modes.orthogonal)
    return registry


def inject_fock_partial(
    n: int,
    beta: float,
    modes: ModePair,
    registry: ModeRegistry | None = None,
    cutoff: int | None = None,
) -> QuantumState:
    """``n`` photons in the mode ``beta*matched + sqrt(1-beta^2)*orthogonal``.

    Expands to ``sum_k sqrt(C(n,k)) beta^k gamma^(n-k) |k, n-k>``.  Other
    modes of ``registry`` are left empty.
    """
    beta = _check_beta(beta)
    if n < 0:
        raise FockError(f"n must be >= 0, got {n}")
    registry = _registry_for(modes, registry)
    cutoff = max(n, DEFAULT_CUTOFF) if cutoff is None else cutoff
    if n > cutoff:
        raise FockError(f"{n} photons exceed cutoff {cutoff}")
    gamma = math.sqrt(max(0.0, 1.0 - beta * beta))
    jm, jo = registry.index(modes.matched), registry.index(modes.orthogonal)
    terms = {}
    for k in range(n + 1):
        occ = [0] * len(registry)
        occ[jm], occ[jo] = k, n - k
        terms[tuple(occ)] = math.sqrt(math.comb(n, k)) * beta ** k * gamma ** (n - k)
    return QuantumState(registry, terms, cutoff)


def inject_coherent_partial(
    alpha: complex,
    beta: float,
    modes: ModePair,
    cutoff: int = DEFAULT_CUTOFF,
    registry: ModeRegistry | None = None,
) -> QuantumState:
    """Coherent pulse split into coherent states ``beta*alpha`` and ``gamma*alpha``.

    Terms whose combined photon number exceeds ``cutoff`` are omitted; the
    state is flagged truncated when the omitted weight is non-zero.
    """
    beta = _check_beta(beta)
    registry = _registry_for(modes, registry)
    gamma = math.sqrt(max(0.0, 1.0 - beta * beta))
    am = coherent_amplitudes(beta * complex(alpha), cutoff)
    ao = coherent_amplitudes(gamma * complex(alpha), cutoff)
    jm, jo = registry.index(modes.matched), registry.index(modes.orthogonal)
    terms = {}
    for k in range(cutoff + 1):
        for m in range(cutoff + 1 - k):
            occ = [0] * len(registry)
            occ[jm], occ[jo] = k, m
            terms[tuple(occ)] = am[k] * ao[m]
    # combined photon number is Poisson(|alpha|^2), so the tail is that of one mode
    lost = coherent_truncation_error(alpha, cutoff) > 0
    return QuantumState(registry, terms, cutoff, truncated=lost)
