"""Perturbative parametric amplifier, lossless beam splitter, and gain relations."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fock import (
    DEFAULT_CUTOFF,
    FockError,
    ModeRegistry,
    Occupation,
    QuantumState,
    annihilate,
    create,
    scale_and_add,
)

DEFAULT_GAIN = 0.1


@dataclass(frozen=True)
class AmplifierSpec:
    """Two-mode parametric amplifier coupling ``signal`` and ``idler``.

    ``order`` is the power of the gain at which the exponential of the
    pair-creation generator is truncated; ``order=1`` is ``1 + K``.
    """

    g: complex = DEFAULT_GAIN
    signal: str = "s"
    idler: str = "i"
    order: int = 1

    def __post_init__(self):
        if self.signal == self.idler:
            raise FockError("amplifier signal and idler must be different modes")
        if int(self.order) != self.order or self.order < 1:
            raise FockError(f"amplifier order must be an integer >= 1, got {self.order}")
        if not abs(complex(self.g)) < 1:
            raise FockError(f"|g| must be < 1 for the perturbative expansion, got {abs(self.g)}")

    @property
    def big_gain_sq(self) -> float:
        """``|G|^2 = 1 + |g|^2``, the signal self-gain."""
        return 1.0 + abs(complex(self.g)) ** 2


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Real beam splitter: ``a1 -> t a1 + r a2``, ``a2 -> t a2 - r a1``."""

    in1: str
    in2: str
    t: float = 1 / math.sqrt(2)
    r: float = 1 / math.sqrt(2)

    def __post_init__(self):
        if self.in1 == self.in2:
            raise FockError("beam splitter inputs must be different modes")
        if abs(self.t ** 2 + self.r ** 2 - 1) > 1e-12:
            raise FockError(f"t^2 + r^2 must equal 1, got {self.t ** 2 + self.r ** 2!r}")

    @classmethod
    def balanced(cls, in1: str, in2: str) -> "BeamSplitterSpec":
        return cls(in1, in2)


def _pair_generator(state: QuantumState, spec: AmplifierSpec) -> QuantumState:
    """``(g a_s^dag a_i^dag - g* a_s a_i)|psi>``."""
    g = complex(spec.g)
    up = create(create(state, spec.signal), spec.idler)
    down = annihilate(annihilate(state, spec.signal), spec.idler)
    return scale_and_add([(g, up), (-g.conjugate(), down)])


def apply_amplifier(state: QuantumState, spec: AmplifierSpec) -> QuantumState:
    """Apply the amplifier evolution expanded to ``spec.order`` in the gain.

    Returns ``sum_{k<=order} K^k |psi> / k!`` with
    ``K = g a_s^dag a_i^dag - g* a_s a_i``.  At order 1 on an empty idler this
    is exactly ``|psi> + g a_s^dag a_i^dag |psi>``.
    """
    state.registry.index(spec.signal)
    state.registry.index(spec.idler)
    total = state
    term = state
    for k in range(1, spec.order + 1):
        term = _pair_generator(term, spec) * (1.0 / k)
        total = scale_and_add([(1.0, total), (1.0, term)])
    return total


def _split_term(n1: int, n2: int, t: float, r: float) -> dict[tuple[int, int], float]:
    """Output amplitudes of ``|n1, n2>`` through the beam splitter.

    Expands ``(t b1 - r b2)^n1 (r b1 + t b2)^n2 |0>`` (creation operators),
    then normalizes monomials to Fock kets.
    """
    out: dict[tuple[int, int], float] = {}
    norm_in = math.sqrt(math.factorial(n1) * math.factorial(n2))
    for j in range(n1 + 1):
        cj = math.comb(n1, j) * t ** j * (-r) ** (n1 - j)
        if cj == 0:
            continue
        for k in range(n2 + 1):
            ck = math.comb(n2, k) * r ** k * t ** (n2 - k)
            if ck == 0:
                continue
            m1 = j + k
            m2 = n1 + n2 - m1
            out[(m1, m2)] = out.get((m1, m2), 0.0) + cj * ck
    return {
        key: c * math.sqrt(math.factorial(key[0]) * math.factorial(key[1])) / norm_in
        for key, c in out.items()
    }


def apply_beam_splitter(state: QuantumState, spec: BeamSplitterSpec) -> QuantumState:
    """Exact two-mode beam-splitter transformation of ``state``.

    Photon number is conserved, so the cutoff is never hit.
    """
    j1 = state.registry.index(spec.in1)
    j2 = state.registry.index(spec.in2)
    out: dict[Occupation, complex] = {}
    cache: dict[tuple[int, int], dict[tuple[int, int], float]] = {}
    for occ, amp in state:
        key = (occ[j1], occ[j2])
        if key not in cache:
            cache[key] = _split_term(key[0], key[1], spec.t, spec.r)
        for (m1, m2), c in cache[key].items():
            new = list(occ)
            new[j1] = m1
            new[j2] = m2
            new_t = tuple(new)
            out[new_t] = out.get(new_t, 0j) + amp * c
    return state._derive(out)


def bunching_probability(
    n_photons_port_a: int,
    one_photon_port_b: bool = True,
    indistinguishable: bool = True,
) -> float:
    """Probability that every photon leaves the same output port of a 50:50 splitter.

    ``n_photons_port_a`` photons enter port ``a``; optionally one more photon
    enters port ``b``.  If ``indistinguishable`` is false that extra photon
    travels in an orthogonal companion mode and cannot interfere with the
    others.  The result is obtained by propagating the Fock state, not from a
    closed form.
    """
    n = int(n_photons_port_a)
    if n < 0:
        raise FockError(f"photon number must be >= 0, got {n}")
    extra = 1 if one_photon_port_b else 0
    registry = ModeRegistry(("a", "b", "a_perp", "b_perp"))
    cutoff = n + extra
    if indistinguishable or not extra:
        counts = {"a": n, "b": extra}
    else:
        counts = {"a": n, "b_perp": extra}
    state = QuantumState.basis(registry, counts, cutoff)
    state = apply_beam_splitter(state, BeamSplitterSpec.balanced("a", "b"))
    state = apply_beam_splitter(state, BeamSplitterSpec.balanced("a_perp", "b_perp"))
    # port 1 collects the a and a_perp outputs
    dist = state.photon_number_distribution(("a", "a_perp"))
    return dist.get(n + extra, 0.0)


def mean_gain_photon_number(n_in: int, g: complex) -> float:
    """Mean signal photon number after the amplifier for Fock input ``|n_in>``.

    Uses ``a_out = G a_s + g a_i^dag`` with ``|G|^2 = 1 + |g|^2`` and a
    vacuum idler (``<a_i a_i^dag> = 1``), giving ``|G|^2 n_in + |g|^2``.  The
    excess over the input is ``(n_in + 1)|g|^2``: spontaneous plus one
    stimulated share per input photon.
    """
    if n_in < 0:
        raise FockError(f"n_in must be >= 0, got {n_in}")
    g2 = abs(complex(g)) ** 2
    return (1.0 + g2) * n_in + g2


def emission_probability(state: QuantumState, idler: str) -> float:
    """Total weight of terms with at least one idler photon (pair emitted)."""
    j = state.registry.index(idler)
    return math.fsum(abs(a) ** 2 for occ, a in state if occ[j] > 0)


def ideal_enhancement(
    n_input_photons: int,
    g: complex = DEFAULT_GAIN,
    cutoff: int = DEFAULT_CUTOFF,
) -> float:
    """Emission rate with ``n`` matched input photons relative to vacuum input.

    Both rates are read off the order-1 amplifier output as the weight of
    idler-occupied terms.  Raises if the emitted ``n+1``-signal plus idler
    term does not fit under ``cutoff``.
    """
    n = int(n_input_photons)
    if n < 0:
        raise FockError(f"photon number must be >= 0, got {n}")
    if n + 2 > cutoff:
        raise FockError(
            f"cutoff {cutoff} too small: emission from {n} input photons needs {n + 2} photons"
        )
    registry = ModeRegistry(("s", "i"))
    spec = AmplifierSpec(g=g, signal="s", idler="i", order=1)
    stimulated = apply_amplifier(QuantumState.basis(registry, {"s": n}, cutoff), spec)
    spontaneous = apply_amplifier(QuantumState.vacuum(registry, cutoff), spec)
    return emission_probability(stimulated, "i") / emission_probability(spontaneous, "i")
