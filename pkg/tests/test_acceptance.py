"""End-to-end acceptance checks.

Each ``check_*`` function returns ``(passed, detail)``; the pytest wrappers
record one line per criterion, which the conftest prints in the terminal
summary.  Run this file directly to print the lines without pytest.
"""

import math
import os
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from stimemit.experiment import AmplifierScanConfig, BeamSplitterScanConfig, run_amplifier_scan, run_beamsplitter_scan
from stimemit.fitting import FitError, ScanPoint, fit_gaussian_peak, gaussian_peak
from stimemit.fock import ModeRegistry, QuantumState
from stimemit.optics import (
    AmplifierSpec,
    BeamSplitterSpec,
    apply_amplifier,
    apply_beam_splitter,
    bunching_probability,
    ideal_enhancement,
)
from stimemit.overlap import OverlapModel

sys.path.insert(0, os.path.dirname(__file__))
from oracles import beam_splitter_unitary, distinguishable_all_one_port, linear_optics_amplitude  # noqa: E402

# pinned tolerances and budgets
ENHANCEMENT_TOL = 1e-12
BUNCHING_TOL = 1e-12
V1_TARGET, V1_TOL = 0.88, 0.02
V2_TARGET, V2_TOL = 1.76, 0.04
RATIO_TARGET, RATIO_TOL = 2.00, 0.05
EQUIVALENCE_TOL = 0.02
RECOVERY_REL_TOL = 1e-6
COVERAGE_RANGE = (0.60, 0.75)
COVERAGE_TRIALS = 2000
UNITARITY_TOL = 1e-12
UNITARITY_STATES = 1000
BUDGET_S = {1: 1.0, 2: 1.0, 3: 10.0, 4: 20.0, 5: 60.0, 6: 5.0}

# scan setup shared by criteria 3 and 4: weak injection and gain, residual mode mismatch 0.88
SCAN_KW = dict(alpha=0.1, g=0.01, order=2, overlap=OverlapModel(tc=330.0, max_overlap=math.sqrt(0.88)))

# coverage scenario: peak of about 60 counts, 21 delays over +/-3 coherence widths
TRUE_PEAK = (21.0, 1.81, 0.0, 330.0)

LINES = {}


def _timed(fn):
    start = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - start


def check_enhancement():
    errors = [abs(ideal_enhancement(n) - (n + 1)) for n in range(5)]
    return max(errors) < ENHANCEMENT_TOL, f"max |R_N - (N+1)| = {max(errors):.2e} for N=0..4"


def check_bunching():
    worst = 0.0
    u = beam_splitter_unitary(1 / math.sqrt(2), 1 / math.sqrt(2))
    for n in range(1, 5):
        ind = bunching_probability(n, True, True)
        dis = bunching_probability(n, True, False)
        # oracles: permanent of the splitter unitary, and classical routing of n+1 photons
        amp = linear_optics_amplitude(u, (n, 1), (n + 1, 0))
        worst = max(
            worst,
            abs(ind - abs(amp) ** 2),
            abs(dis - distinguishable_all_one_port([[0.5, 0.5]] * (n + 1))),
            abs(ind - (n + 1) / 2 ** (n + 1)),
            abs(dis - 1 / 2 ** (n + 1)),
        )
    return worst < BUNCHING_TOL, f"max deviation {worst:.2e} for N=1..4"


def _fit_v(result):
    return fit_gaussian_peak(result.points).v


def check_visibilities():
    config = AmplifierScanConfig(**SCAN_KW)
    v1 = _fit_v(run_amplifier_scan(config, "abd"))
    v2 = _fit_v(run_amplifier_scan(config, "abcd"))
    ratio = v2 / v1
    ok = abs(v1 - V1_TARGET) <= V1_TOL and abs(v2 - V2_TARGET) <= V2_TOL and abs(ratio - RATIO_TARGET) <= RATIO_TOL
    return ok, f"v1={v1:.4f} v2={v2:.4f} v2/v1={ratio:.4f}"


def check_equivalence():
    diffs = []
    for pattern in ("abd", "abcd"):
        v_amp = _fit_v(run_amplifier_scan(AmplifierScanConfig(**SCAN_KW), pattern))
        v_bs = _fit_v(run_beamsplitter_scan(BeamSplitterScanConfig(**SCAN_KW), pattern))
        diffs.append((pattern, v_amp, v_bs))
    worst = max(abs(a - b) for _, a, b in diffs)
    detail = " ".join(f"{p}: amp={a:.4f} bs={b:.4f}" for p, a, b in diffs)
    return worst < EQUIVALENCE_TOL, f"{detail} max|dv|={worst:.4f}"


def check_fit_recovery():
    delays = np.linspace(-1000, 1000, 21)
    truth = (100.0, 1.81, 0.0, 330.0)
    y = gaussian_peak(delays, *truth)
    fit = fit_gaussian_peak([ScanPoint(float(d), float(v), math.sqrt(v)) for d, v in zip(delays, y)])
    rel = max(abs(got - want) / max(abs(want), 1.0) for got, want in zip(fit.params, truth))
    recovered = fit.converged and rel < RECOVERY_REL_TOL

    a, v, t0, tc = TRUE_PEAK
    grid = np.linspace(t0 - 3 * tc, t0 + 3 * tc, 21)
    mean = gaussian_peak(grid, a, v, t0, tc)
    covered = 0
    for trial in range(COVERAGE_TRIALS):
        counts = np.random.default_rng([2024, trial]).poisson(mean)
        points = [ScanPoint(float(d), float(n), math.sqrt(max(n, 1))) for d, n in zip(grid, counts)]
        try:
            f = fit_gaussian_peak(points)
        except FitError:
            continue  # counted as a miss
        if f.converged and abs(f.v - v) <= f.v_err:
            covered += 1
    coverage = covered / COVERAGE_TRIALS
    ok = recovered and COVERAGE_RANGE[0] <= coverage <= COVERAGE_RANGE[1]
    return ok, f"noiseless max rel err {rel:.1e}; coverage {coverage:.3f} over {COVERAGE_TRIALS} trials (peak {mean.max():.1f} counts)"


def check_conservation():
    rng = np.random.default_rng(6)
    reg = ModeRegistry(("a", "b", "c"))
    worst = 0.0
    for _ in range(UNITARITY_STATES):
        terms = {}
        for _ in range(rng.integers(1, 9)):
            occ = tuple(int(x) for x in rng.integers(0, 4, size=3))
            if sum(occ) <= 6:
                terms[occ] = complex(rng.normal(), rng.normal())
        if not terms:
            continue
        psi = QuantumState(reg, terms, 6)
        theta = rng.uniform(0, math.pi / 2)
        out = apply_beam_splitter(psi, BeamSplitterSpec("a", "b", math.cos(theta), math.sin(theta)))
        worst = max(worst, abs(out.squared_norm - psi.squared_norm) / psi.squared_norm)
        before = psi.photon_number_distribution(reg.labels)
        after = out.photon_number_distribution(reg.labels)
        for k in set(before) | set(after):
            worst = max(worst, abs(before.get(k, 0.0) - after.get(k, 0.0)) / psi.squared_norm)

    g = 0.1
    si = ModeRegistry(("s", "i"))
    exact = True
    for n in range(6):
        out = apply_amplifier(QuantumState.basis(si, {"s": n}, n + 2), AmplifierSpec(g, "s", "i", 1))
        exact &= dict(out.terms) == {(n, 0): 1.0, (n + 1, 1): g * math.sqrt(n + 1)}
    return worst < UNITARITY_TOL and exact, f"max splitter drift {worst:.1e} on {UNITARITY_STATES} states; amplifier order 1 exact for n<=5: {exact}"


def _cli_command():
    exe = shutil.which("stimemit")
    return [exe] if exe else [sys.executable, "-m", "stimemit"]


def check_determinism(tmp_dir):
    cfg = os.path.join(tmp_dir, "scan.cfg")
    with open(cfg, "w", encoding="utf-8") as fh:
        fh.write("alpha = 0.316\ng = 0.1\nmax_overlap = 0.938\nshots = 1e7\nseed = 17\n")
    outputs = []
    for k in range(2):
        out = os.path.join(tmp_dir, f"run{k}.csv")
        subprocess.run(_cli_command() + ["scan-amp", "--config", cfg, "--pattern", "abcd", "--out", out], check=True)
        with open(out, "rb") as fh:
            outputs.append(fh.read())
    nonzero = any(float(line.split(b",")[1]) > 0 for line in outputs[0].splitlines()[1:])
    return outputs[0] == outputs[1] and nonzero, f"{len(outputs[0])} bytes, identical: {outputs[0] == outputs[1]}"


def _record(number, name, ok, detail, elapsed=None):
    budget = BUDGET_S.get(number)
    within = budget is None or elapsed is None or elapsed < budget
    timing = "" if elapsed is None else f" [{elapsed:.2f}s" + (f" < {budget:g}s]" if budget else "]")
    status = "PASS" if ok and within else "FAIL"
    LINES[number] = f"criterion {number} {status}: {name}: {detail}{timing}"
    return ok and within


@pytest.mark.parametrize("number,name,check", [
    (1, "ideal enhancement N+1", check_enhancement),
    (2, "beam-splitter bunching", check_bunching),
    (3, "visibilities via mode mismatch", check_visibilities),
    (4, "amplifier / beam-splitter equivalence", check_equivalence),
    (5, "fit recovery and coverage", check_fit_recovery),
    (6, "conservation and normalization", check_conservation),
])
def test_criterion(number, name, check):
    ok, detail, elapsed = _timed(check)
    assert _record(number, name, ok, detail, elapsed), LINES[number]


def test_criterion_7_determinism(tmp_path):
    ok, detail = check_determinism(str(tmp_path))
    assert _record(7, "scan-amp byte-identical reruns", ok, detail), LINES[7]


if __name__ == "__main__":
    import tempfile

    checks = [
        (1, "ideal enhancement N+1", check_enhancement),
        (2, "beam-splitter bunching", check_bunching),
        (3, "visibilities via mode mismatch", check_visibilities),
        (4, "amplifier / beam-splitter equivalence", check_equivalence),
        (5, "fit recovery and coverage", check_fit_recovery),
        (6, "conservation and normalization", check_conservation),
    ]
    for number, name, check in checks:
        _record(number, name, *_timed(check))
    with tempfile.TemporaryDirectory() as tmp:
        _record(7, "scan-amp byte-identical reruns", *check_determinism(tmp))
    for number in sorted(LINES):
        print(LINES[number])
    sys.exit(0 if all("PASS" in line for line in LINES.values()) else 1)
