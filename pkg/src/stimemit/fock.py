"""Sparse multi-mode Fock states with a global photon-number cutoff.

A :class:`QuantumState` is an immutable map from occupation tuples to
complex amplitudes.  Every operation returns a new state; amplitudes below
the prune threshold are dropped, and any term discarded because it would
exceed the cutoff marks the result as ``truncated``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

DEFAULT_CUTOFF = 6
PRUNE_THRESHOLD = 1e-15

Occupation = tuple[int, ...]


class FockError(ValueError):
    """Base class for configuration errors in Fock-space operations."""


class UnknownModeError(FockError, KeyError):
    pass


class RegistryMismatchError(FockError):
    pass


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered set of mode labels; position in ``labels`` is the occupation index."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise FockError(f"duplicate mode labels in {labels!r}")
        if any(not isinstance(x, str) or not x for x in labels):
            raise FockError("mode labels must be non-empty strings")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownModeError(f"unknown mode {label!r}; registry has {self.labels}") from None

    def occupation(self, counts: Mapping[str, int] | None = None) -> Occupation:
        """Build an occupation tuple from ``{label: count}``; unlisted modes are empty."""
        occ = [0] * len(self.labels)
        for label, n in (counts or {}).items():
            if n < 0:
                raise FockError(f"negative occupation {n} for mode {label!r}")
            occ[self.index(label)] = int(n)
        return tuple(occ)

    def without(self, label: str) -> "ModeRegistry":
        self.index(label)
        return ModeRegistry(tuple(x for x in self.labels if x != label))

    def concat(self, other: "ModeRegistry") -> "ModeRegistry":
        return ModeRegistry(self.labels + other.labels)


class QuantumState:
    """Superposition of Fock basis states over a :class:`ModeRegistry`.

    Parameters
    ----------
    registry : ModeRegistry
        Modes the occupation tuples refer to.
    terms : mapping
        ``{occupation tuple: amplitude}``.  Terms above ``cutoff`` raise;
        use the operator functions to get silent-but-flagged truncation.
    cutoff : int
        Maximum total photon number.
    truncated : bool
        Set when some term was discarded for exceeding the cutoff.
    """

    __slots__ = ("_terms", "registry", "cutoff", "truncated", "prune")

    def __init__(
        self,
        registry: ModeRegistry,
        terms: Mapping[Occupation, complex] | None = None,
        cutoff: int = DEFAULT_CUTOFF,
        truncated: bool = False,
        prune: float = PRUNE_THRESHOLD,
    ):
        if cutoff < 0:
            raise FockError(f"cutoff must be >= 0, got {cutoff}")
        clean: dict[Occupation, complex] = {}
        for occ, amp in (terms or {}).items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != len(registry):
                raise FockError(f"occupation {occ} does not match {len(registry)} modes")
            if any(n < 0 for n in occ):
                raise FockError(f"negative occupation in {occ}")
            if sum(occ) > cutoff:
                raise FockError(f"occupation {occ} exceeds cutoff {cutoff}")
            amp = complex(amp)
            if not cmath.isfinite(amp):
                raise FockError(f"non-finite amplitude for {occ}")
            if abs(amp) >= prune:
                clean[occ] = amp
        self._terms = MappingProxyType(dict(sorted(clean.items())))
        self.registry = registry
        self.cutoff = int(cutoff)
        self.truncated = bool(truncated)
        self.prune = prune

    # construction helpers

    @classmethod
    def vacuum(cls, registry: ModeRegistry, cutoff: int = DEFAULT_CUTOFF) -> "QuantumState":
        return cls(registry, {(0,) * len(registry): 1.0}, cutoff)

    @classmethod
    def basis(
        cls,
        registry: ModeRegistry,
        counts: Mapping[str, int] | Sequence[int] | None = None,
        cutoff: int = DEFAULT_CUTOFF,
        amplitude: complex = 1.0,
    ) -> "QuantumState":
        if counts is None or isinstance(counts, Mapping):
            occ = registry.occupation(counts)
        else:
            occ = tuple(counts)
        return cls(registry, {occ: amplitude}, cutoff)

    def _derive(self, terms: Mapping[Occupation, complex], truncated: bool = False,
                registry: ModeRegistry | None = None) -> "QuantumState":
        return QuantumState(registry or self.registry, terms, self.cutoff,
                            self.truncated or truncated, self.prune)

    # read access

    @property
    def terms(self) -> Mapping[Occupation, complex]:
        return self._terms

    def __iter__(self) -> Iterator[tuple[Occupation, complex]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def amplitude(self, counts: Mapping[str, int] | Sequence[int]) -> complex:
        occ = self.registry.occupation(counts) if isinstance(counts, Mapping) else tuple(counts)
        return self._terms.get(occ, 0j)

    def probability(self, counts: Mapping[str, int] | Sequence[int]) -> float:
        return abs(self.amplitude(counts)) ** 2

    @property
    def squared_norm(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._terms.values())

    def normalized(self) -> "QuantumState":
        norm = math.sqrt(self.squared_norm)
        if norm == 0:
            raise FockError("cannot normalize the zero state")
        return self._derive({k: a / norm for k, a in self._terms.items()})

    def mean_photon_number(self, mode: str) -> float:
        """Expectation of the number operator, divided by the squared norm."""
        j = self.registry.index(mode)
        norm = self.squared_norm
        if norm == 0:
            return 0.0
        return math.fsum(occ[j] * abs(a) ** 2 for occ, a in self._terms.items()) / norm

    def photon_number_distribution(self, modes: Iterable[str]) -> dict[int, float]:
        """Unnormalized probability of each total photon count over ``modes``."""
        idx = [self.registry.index(m) for m in modes]
        dist: dict[int, float] = {}
        for occ, amp in self._terms.items():
            n = sum(occ[j] for j in idx)
            dist[n] = dist.get(n, 0.0) + abs(amp) ** 2
        return dict(sorted(dist.items()))

    def __mul__(self, c: complex) -> "QuantumState":
        return self._derive({k: c * a for k, a in self._terms.items()})

    __rmul__ = __mul__

    def __add__(self, other: "QuantumState") -> "QuantumState":
        return scale_and_add([(1.0, self), (1.0, other)])

    def __sub__(self, other: "QuantumState") -> "QuantumState":
        return scale_and_add([(1.0, self), (-1.0, other)])

    def __repr__(self) -> str:
        inner = " + ".join(f"({a:.6g})|{','.join(map(str, o))}>" for o, a in self._terms.items())
        flag = ", truncated" if self.truncated else ""
        return f"QuantumState({self.registry.labels}, {inner or '0'}{flag})"

    def to_text(self) -> str:
        """Debug serialization: one ``<occupations> re im`` line per term, sorted."""
        lines = [
            f"<{','.join(map(str, occ))}> {amp.real:.17g} {amp.imag:.17g}"
            for occ, amp in self._terms.items()
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, registry: ModeRegistry, cutoff: int = DEFAULT_CUTOFF) -> "QuantumState":
        terms = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            occ_s, re_s, im_s = line.split()
            occ = tuple(int(x) for x in occ_s.strip("<>").split(","))
            terms[occ] = complex(float(re_s), float(im_s))
        return cls(registry, terms, cutoff)


def _check_same(states: Sequence[QuantumState]) -> None:
    first = states[0]
    for s in states[1:]:
        if s.registry != first.registry:
            raise RegistryMismatchError(f"registries differ: {first.registry.labels} vs {s.registry.labels}")
        if s.cutoff != first.cutoff:
            raise RegistryMismatchError(f"cutoffs differ: {first.cutoff} vs {s.cutoff}")


def create(state: QuantumState, mode: str) -> QuantumState:
    """Apply the creation operator on ``mode``: ``|n> -> sqrt(n+1)|n+1>``."""
    j = state.registry.index(mode)
    out: dict[Occupation, complex] = {}
    dropped = False
    for occ, amp in state:
        if sum(occ) + 1 > state.cutoff:
            dropped = True
            continue
        new = occ[:j] + (occ[j] + 1,) + occ[j + 1:]
        out[new] = amp * math.sqrt(occ[j] + 1)
    return state._derive(out, truncated=dropped)


def annihilate(state: QuantumState, mode: str) -> QuantumState:
    """Apply the annihilation operator on ``mode``: ``|n> -> sqrt(n)|n-1>``."""
    j = state.registry.index(mode)
    out: dict[Occupation, complex] = {}
    for occ, amp in state:
        if occ[j] == 0:
            continue
        new = occ[:j] + (occ[j] - 1,) + occ[j + 1:]
        out[new] = amp * math.sqrt(occ[j])
    return state._derive(out)


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    """``<a|b>``, antilinear in the first argument."""
    _check_same([a, b])
    small, large = (a.terms, b.terms) if len(a) <= len(b) else (b.terms, a.terms)
    total = 0j
    for occ in small:
        if occ in large:
            total += a.terms[occ].conjugate() * b.terms[occ]
    return total


def scale_and_add(states: Sequence[tuple[complex, QuantumState]]) -> QuantumState:
    """Linear combination ``sum_k c_k |psi_k>``."""
    if not states:
        raise FockError("scale_and_add needs at least one state")
    _check_same([s for _, s in states])
    acc: dict[Occupation, complex] = {}
    for c, s in states:
        for occ, amp in s:
            acc[occ] = acc.get(occ, 0j) + c * amp
    return states[0][1]._derive(acc, truncated=any(s.truncated for _, s in states))


def coherent_amplitudes(alpha: complex, cutoff: int) -> list[complex]:
    """Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n = 0..cutoff``."""
    if cutoff < 0:
        raise FockError(f"cutoff must be >= 0, got {cutoff}")
    alpha = complex(alpha)
    pref = math.exp(-abs(alpha) ** 2 / 2)
    amps = []
    term = complex(pref)
    for n in range(cutoff + 1):
        if n > 0:
            term *= alpha / math.sqrt(n)
        amps.append(term)
    return amps


def coherent_truncation_error(alpha: complex, cutoff: int) -> float:
    """Probability weight of a coherent state lying above ``cutoff`` photons."""
    mu = abs(alpha) ** 2
    if mu == 0:
        return 0.0
    # tail summed directly; subtracting from 1 loses everything below ~1e-16
    term = math.exp(-mu)
    for n in range(1, cutoff + 1):
        term *= mu / n
    tail = 0.0
    n = cutoff
    while True:
        n += 1
        term *= mu / n
        tail += term
        if term < 1e-300 or term < tail * 1e-17:
            return tail


def coherent_state_truncated(
    mode: str,
    alpha: complex,
    cutoff: int = DEFAULT_CUTOFF,
    registry: ModeRegistry | None = None,
) -> QuantumState:
    """Coherent state on ``mode`` truncated at ``cutoff`` photons, not renormalized.

    The discarded weight is available from :func:`coherent_truncation_error`;
    the state is flagged ``truncated`` whenever that weight is non-zero.
    """
    registry = registry or ModeRegistry((mode,))
    j = registry.index(mode)
    terms = {}
    for n, amp in enumerate(coherent_amplitudes(alpha, cutoff)):
        occ = [0] * len(registry)
        occ[j] = n
        terms[tuple(occ)] = amp
    lost = coherent_truncation_error(alpha, cutoff) > 0
    return QuantumState(registry, terms, cutoff, truncated=lost)


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Product state over the concatenated registry; cutoff is the larger of the two."""
    registry = a.registry.concat(b.registry)
    cutoff = max(a.cutoff, b.cutoff)
    terms = {}
    dropped = False
    for oa, xa in a:
        for ob, xb in b:
            if sum(oa) + sum(ob) > cutoff:
                dropped = True
                continue
            terms[oa + ob] = xa * xb
    return QuantumState(registry, terms, cutoff, a.truncated or b.truncated or dropped, a.prune)
