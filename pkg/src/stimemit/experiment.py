"""Delay scans for the amplifier and beam-splitter experiments.

Both scans sweep the injection delay, turn it into a mode overlap, propagate
the Fock state and read off a coincidence probability.  Optional Poisson
sampling turns probabilities into counts with per-point RNG streams seeded
from ``(seed, point index)``.
"""

from __future__ import annotations

import dataclasses
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .detection import (
    CoincidencePattern,
    DetectorFanout,
    click_probability_given_photons,
    coincidence_probability,
    herald_single_photon,
)
from .fitting import ScanPoint
from .fock import DEFAULT_CUTOFF, FockError, ModeRegistry, QuantumState
from .optics import (
    DEFAULT_GAIN,
    AmplifierSpec,
    BeamSplitterSpec,
    apply_amplifier,
    apply_beam_splitter,
    bunching_probability,
    ideal_enhancement,
)
from .overlap import ModePair, OverlapModel, inject_coherent_partial, overlap_amplitude

SEED_ENV_VAR = "STIMEMIT_SEED"
DEFAULT_ALPHA = math.sqrt(0.1)

# signal clicks required on the fanout for each pattern; the idler/herald click is implied
PATTERN_SIGNAL_CLICKS = {"abcd": 3, "abd": 2}


class ConfigError(ValueError):
    pass


def default_delays(model: OverlapModel, n_points: int = 21, span: float = 3.0) -> tuple[float, ...]:
    """``n_points`` evenly spaced delays over ``t0 +/- span*tc``."""
    grid = np.linspace(model.t0 - span * model.tc, model.t0 + span * model.tc, n_points)
    return tuple(float(x) for x in grid)


@dataclass(frozen=True)
class AmplifierScanConfig:
    """Settings for the stimulated-emission scan.

    ``alpha`` is the coherent injection amplitude, ``g`` the amplifier gain.
    ``shots = 0`` returns exact probabilities; otherwise each point is a
    Poisson count with mean ``probability * shots``.
    """

    alpha: complex = DEFAULT_ALPHA
    g: complex = DEFAULT_GAIN
    overlap: OverlapModel = field(default_factory=OverlapModel)
    delays: tuple[float, ...] = ()
    fanout: str = "symmetric"
    efficiency: float = 1.0
    order: int = 2
    cutoff: int = DEFAULT_CUTOFF
    shots: float = 0
    seed: int = 0

    def __post_init__(self):
        delays = tuple(float(d) for d in self.delays) or default_delays(self.overlap)
        object.__setattr__(self, "delays", delays)
        if list(delays) != sorted(delays):
            raise ConfigError("delays must be sorted")
        if self.shots < 0:
            raise ConfigError(f"shots must be >= 0, got {self.shots}")
        if self.fanout not in ("symmetric", "cascade"):
            raise ConfigError(f"fanout must be 'symmetric' or 'cascade', got {self.fanout!r}")
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if self.cutoff < 0:
            raise ConfigError(f"cutoff must be >= 0, got {self.cutoff}")
        if not abs(complex(self.g)) < 1:
            raise ConfigError(f"|g| must be < 1, got {abs(complex(self.g))}")


@dataclass(frozen=True)
class BeamSplitterScanConfig(AmplifierScanConfig):
    """Settings for the beam-splitter analogue.

    ``g`` is the gain of the heralded pair source; the combining splitter is
    ``t``/``r`` (50:50 by default).
    """

    t: float = 1 / math.sqrt(2)
    r: float = 1 / math.sqrt(2)


@dataclass(frozen=True)
class ScanResult:
    points: tuple[ScanPoint, ...]
    probabilities: tuple[float, ...]
    pattern: str
    config: AmplifierScanConfig
    truncated: bool = False

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def _pattern_clicks(pattern: str, cutoff: int) -> int:
    key = pattern.lower()
    if key not in PATTERN_SIGNAL_CLICKS:
        raise ConfigError(f"unknown pattern {pattern!r}; expected one of {sorted(PATTERN_SIGNAL_CLICKS)}")
    clicks = PATTERN_SIGNAL_CLICKS[key]
    if clicks + 1 > cutoff:
        raise ConfigError(
            f"cutoff {cutoff} is too small for pattern {key.upper()}: needs {clicks + 1} photons"
        )
    return clicks


def _signal_fanout(config: AmplifierScanConfig, channel: str, companion: str) -> DetectorFanout:
    if config.fanout == "cascade":
        return DetectorFanout.cascade(channel, config.efficiency, (companion,))
    return DetectorFanout.symmetric(channel, 3, config.efficiency, (companion,))


def _sample(probabilities: Sequence[float], delays: Sequence[float], config: AmplifierScanConfig):
    points = []
    for k, (d, p) in enumerate(zip(delays, probabilities)):
        if config.shots > 0:
            rng = np.random.default_rng([int(config.seed), k])
            counts = float(rng.poisson(p * config.shots))
            points.append(ScanPoint(d, counts, math.sqrt(max(counts, 1.0))))
        else:
            # exact mode: no statistical error, unit weights
            points.append(ScanPoint(d, p, 1.0))
    return tuple(points)


def amplifier_point(config: AmplifierScanConfig, beta: float, pattern: str = "abcd") -> tuple[float, bool]:
    """Coincidence probability at one overlap value; also returns the truncation flag."""
    clicks = _pattern_clicks(pattern, config.cutoff)
    registry = ModeRegistry(("s", "s_perp", "i"))
    state = inject_coherent_partial(config.alpha, beta, ModePair("s", "s_perp"), config.cutoff, registry)
    state = apply_amplifier(state, AmplifierSpec(config.g, "s", "i", config.order))
    fanouts = {
        "signal": _signal_fanout(config, "s", "s_perp"),
        "idler": DetectorFanout("i", 1, efficiency=config.efficiency),
    }
    pat = CoincidencePattern((("signal", clicks), ("idler", 1)))
    return coincidence_probability(state, pat, fanouts), state.truncated


def run_amplifier_scan(config: AmplifierScanConfig, pattern: str = "abcd") -> ScanResult:
    """Coincidence rate versus injection delay for the parametric amplifier.

    Pattern ``abcd`` needs three clicks on the signal fanout and an idler
    click; ``abd`` needs two signal clicks and an idler click.
    """
    _pattern_clicks(pattern, config.cutoff)
    probs, flags = [], []
    for d in config.delays:
        p, trunc = amplifier_point(config, overlap_amplitude(config.overlap, d), pattern)
        probs.append(p)
        flags.append(trunc)
    return ScanResult(_sample(probs, config.delays, config), tuple(probs), pattern.lower(),
                      config, any(flags))


def beamsplitter_point(config: BeamSplitterScanConfig, beta: float, pattern: str = "abcd") -> tuple[float, bool]:
    clicks = _pattern_clicks(pattern, config.cutoff)
    # h: heralded photon, c: coherent injection, *_perp: their orthogonal temporal modes
    registry = ModeRegistry(("h", "h_perp", "c", "c_perp", "i"))
    state = inject_coherent_partial(config.alpha, beta, ModePair("c", "c_perp"), config.cutoff, registry)
    state = apply_amplifier(state, AmplifierSpec(config.g, "h", "i", config.order))
    if config.efficiency < 1:
        # threshold herald with finite efficiency: weight each branch by its click probability
        herald = DetectorFanout("i", 1, efficiency=config.efficiency)
        j = state.registry.index("i")
        state = QuantumState(
            state.registry,
            {occ: a * math.sqrt(click_probability_given_photons(occ[j], herald, 1)) for occ, a in state},
            state.cutoff, state.truncated,
        )
    # the idler stays in the registry: branches with one and two idler photons must not interfere
    state, _ = herald_single_photon(state, "i", discard=False)
    state = apply_beam_splitter(state, BeamSplitterSpec("h", "c", config.t, config.r))
    state = apply_beam_splitter(state, BeamSplitterSpec("h_perp", "c_perp", config.t, config.r))
    fanouts = {"port1": _signal_fanout(config, "h", "h_perp")}
    pat = CoincidencePattern((("port1", clicks),))
    return coincidence_probability(state, pat, fanouts), state.truncated


def run_beamsplitter_scan(config: BeamSplitterScanConfig, pattern: str = "abcd") -> ScanResult:
    """Coincidence rate versus delay for the heralded-photon beam-splitter analogue.

    A pair source heralded on its idler supplies one photon that meets the
    partially overlapped coherent pulse on the splitter; clicks are counted
    on one output port.
    """
    _pattern_clicks(pattern, config.cutoff)
    probs, flags = [], []
    for d in config.delays:
        p, trunc = beamsplitter_point(config, overlap_amplitude(config.overlap, d), pattern)
        probs.append(p)
        flags.append(trunc)
    return ScanResult(_sample(probs, config.delays, config), tuple(probs), pattern.lower(),
                      config, any(flags))


@dataclass(frozen=True)
class EnhancementRow:
    n: int
    amplifier_rate: float
    bs_indistinguishable: float
    bs_distinguishable: float

    @property
    def ratio(self) -> float:
        return self.bs_indistinguishable / self.bs_distinguishable


@dataclass(frozen=True)
class EnhancementReport:
    rows: tuple[EnhancementRow, ...]

    def format_table(self) -> str:
        lines = ["N  amplifier_rate_R  bs_indistinguishable  bs_distinguishable  ratio"]
        for row in self.rows:
            lines.append(
                f"{row.n:<2d} {row.amplifier_rate:>16.6g}  {row.bs_indistinguishable:>20.6g}"
                f"  {row.bs_distinguishable:>18.6g}  {row.ratio:>5.6g}"
            )
        return "\n".join(lines) + "\n"


def report_enhancement(n_max: int, cutoff: int = DEFAULT_CUTOFF, g: complex = DEFAULT_GAIN) -> EnhancementReport:
    """Amplifier emission rate (units of the spontaneous rate) next to the
    beam-splitter bunching probabilities, for ``N = 0..n_max`` input photons."""
    if n_max < 0:
        raise FockError(f"n_max must be >= 0, got {n_max}")
    if n_max + 2 > cutoff:
        raise FockError(f"cutoff {cutoff} too small for n_max={n_max}: needs {n_max + 2}")
    rows = []
    for n in range(n_max + 1):
        rows.append(EnhancementRow(
            n=n,
            amplifier_rate=ideal_enhancement(n, g, cutoff),
            bs_indistinguishable=bunching_probability(n, True, True),
            bs_distinguishable=bunching_probability(n, True, False),
        ))
    return EnhancementReport(tuple(rows))


# ---------------------------------------------------------------------------
# config files and CSV

_CONFIG_KEYS = {
    "alpha", "g", "t0", "tc", "max_overlap", "delays", "n_delays", "delay_span",
    "fanout", "efficiency", "order", "cutoff", "shots", "seed", "t", "r",
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _num(raw: Mapping[str, str], key: str, kind, default):
    if key not in raw:
        return default
    try:
        return kind(raw[key].replace(" ", ""))
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw[key]!r}") from None


def build_config(raw: Mapping[str, str], kind: str = "amplifier", seed: int | None = None) -> AmplifierScanConfig:
    """Turn parsed ``key = value`` pairs into a scan config.

    The seed comes from ``seed`` if given, else the file, else the
    ``STIMEMIT_SEED`` environment variable, else 0.
    """
    overlap = OverlapModel(
        t0=_num(raw, "t0", float, 0.0),
        tc=_num(raw, "tc", float, 1.0),
        max_overlap=_num(raw, "max_overlap", float, 1.0),
    )
    if "delays" in raw:
        try:
            delays = tuple(float(x) for x in raw["delays"].split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"bad delays list: {raw['delays']!r}") from None
        if not delays:
            raise ConfigError("delays list is empty")
    else:
        delays = default_delays(overlap, _num(raw, "n_delays", int, 21), _num(raw, "delay_span", float, 3.0))
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        seed = _num(raw, "seed", int, None)
        if seed is None:
            seed = _num({"seed": env}, "seed", int, 0) if env else 0
    kwargs = dict(
        alpha=_num(raw, "alpha", complex, DEFAULT_ALPHA),
        g=_num(raw, "g", complex, DEFAULT_GAIN),
        overlap=overlap,
        delays=delays,
        fanout=raw.get("fanout", "symmetric"),
        efficiency=_num(raw, "efficiency", float, 1.0),
        order=_num(raw, "order", int, 2),
        cutoff=_num(raw, "cutoff", int, DEFAULT_CUTOFF),
        shots=_num(raw, "shots", float, 0),
        seed=seed,
    )
    if kind == "beamsplitter":
        return BeamSplitterScanConfig(
            **kwargs,
            t=_num(raw, "t", float, 1 / math.sqrt(2)),
            r=_num(raw, "r", float, 1 / math.sqrt(2)),
        )
    if "t" in raw or "r" in raw:
        raise ConfigError("keys 't' and 'r' only apply to beam-splitter scans")
    return AmplifierScanConfig(**kwargs)


def load_config(path: str | os.PathLike, kind: str = "amplifier", seed: int | None = None) -> AmplifierScanConfig:
    with open(path, encoding="utf-8") as fh:
        return build_config(parse_config_text(fh.read()), kind, seed)


def scan_to_csv(points: Iterable[ScanPoint]) -> str:
    buf = io.StringIO(newline="")
    buf.write("delay,value,sigma\n")
    for p in points:
        buf.write(f"{p.delay:.17g},{p.value:.17g},{p.sigma:.17g}\n")
    return buf.getvalue()


def write_scan_csv(points: Iterable[ScanPoint], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(scan_to_csv(points))


def read_scan_csv(path: str | os.PathLike) -> list[ScanPoint]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "delay,value,sigma":
        raise ConfigError(f"{path}: expected header 'delay,value,sigma'")
    points = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 3 columns")
        try:
            points.append(ScanPoint(*(float(x) for x in parts)))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return points


def config_summary(config: AmplifierScanConfig) -> dict:
    """Flat echo of a config, for scan metadata."""
    out = dataclasses.asdict(config)
    out["delays"] = list(config.delays)
    return out
