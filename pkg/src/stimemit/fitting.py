"""Weighted least-squares fit of a Gaussian bunching peak on a flat baseline.

Model: ``F(T) = A * (1 + v * exp(-(T - t0)^2 / tc^2))``.  The minimizer is a
damped Gauss-Newton (Levenberg-Marquardt) iteration with Marquardt diagonal
scaling; parameter uncertainties come from the inverse curvature matrix at
the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PARAM_NAMES = ("a", "v", "t0", "tc")
MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-9


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ScanPoint:
    delay: float
    value: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.delay) and math.isfinite(self.value) and math.isfinite(self.sigma)):
            raise FitError(f"non-finite scan point {self}")
        if not self.sigma > 0:
            raise FitError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class FitResult:
    a: float
    v: float
    t0: float
    tc: float
    a_err: float
    v_err: float
    t0_err: float
    tc_err: float
    chi2: float
    dof: int
    converged: bool
    iterations: int
    degenerate: bool = False
    weighted: bool = True

    @property
    def params(self) -> tuple[float, float, float, float]:
        return (self.a, self.v, self.t0, self.tc)

    @property
    def errors(self) -> tuple[float, float, float, float]:
        return (self.a_err, self.v_err, self.t0_err, self.tc_err)

    def report(self) -> str:
        """Plain-text report: ``param estimate uncertainty`` lines, then diagnostics."""
        lines = [f"{name} {val:.10g} {err:.6g}" for name, val, err in zip(PARAM_NAMES, self.params, self.errors)]
        lines.append(f"chi2 {self.chi2:.10g}")
        lines.append(f"dof {self.dof}")
        lines.append(f"converged {str(self.converged).lower()}")
        if self.degenerate:
            lines.append("degenerate true")
        return "\n".join(lines) + "\n"


def gaussian_peak(delay, a: float, v: float, t0: float, tc: float):
    """``a * (1 + v * exp(-(delay - t0)^2 / tc^2))``; works on scalars and arrays."""
    if tc == 0:
        raise FitError("tc must be non-zero")
    x = np.asarray(delay, dtype=float)
    out = a * (1.0 + v * np.exp(-((x - t0) ** 2) / tc ** 2))
    return float(out) if out.ndim == 0 else out


def _model_and_jacobian(x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, v, t0, tc = p
    d = x - t0
    e = np.exp(-(d * d) / (tc * tc))
    f = a * (1.0 + v * e)
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0 + v * e
    jac[:, 1] = a * e
    jac[:, 2] = a * v * e * 2.0 * d / (tc * tc)
    jac[:, 3] = a * v * e * 2.0 * d * d / (tc * tc * tc)
    return f, jac


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # baseline from the quarter of points farthest from the scan centre
    order = np.argsort(-np.abs(x - np.median(x)), kind="stable")
    n_outer = max(2, x.size // 4)
    a = float(np.mean(y[order[:n_outer]]))
    k = int(np.argmax(y))
    t0 = float(x[k])
    if a == 0:
        a = float(np.mean(y)) or 1.0
    v = float(y[k] / a - 1.0)

    excess = y - a
    half = excess[k] / 2.0
    left = right = None
    for i in range(k, 0, -1):
        if excess[i - 1] < half <= excess[i]:
            left = x[i - 1] + (half - excess[i - 1]) * (x[i] - x[i - 1]) / (excess[i] - excess[i - 1])
            break
    for i in range(k, x.size - 1):
        if excess[i + 1] < half <= excess[i]:
            right = x[i] + (excess[i] - half) * (x[i + 1] - x[i]) / (excess[i] - excess[i + 1])
            break
    span = float(x[-1] - x[0])
    if left is not None and right is not None:
        fwhm = right - left
    elif left is not None:
        fwhm = 2.0 * (t0 - left)
    elif right is not None:
        fwhm = 2.0 * (right - t0)
    else:
        fwhm = span / 2.0
    tc = fwhm / 2.0 if fwhm > 0 else span / 4.0
    return np.array([a, v, t0, tc])


def _check_points(points: Sequence[ScanPoint]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(points) < 6:
        raise FitError(f"need at least 6 scan points, got {len(points)}")
    pts = sorted(points, key=lambda p: p.delay)
    x = np.array([p.delay for p in pts], dtype=float)
    y = np.array([p.value for p in pts], dtype=float)
    s = np.array([p.sigma for p in pts], dtype=float)
    if np.any(s <= 0):
        raise FitError("sigma must be > 0")
    return x, y, s


def fit_gaussian_peak(points: Sequence[ScanPoint], weighted: bool = True) -> FitResult:
    """Fit the bunching-peak model to ``points``.

    With ``weighted=False`` all points count equally and the covariance is
    rescaled by the residual variance ``chi2 / dof``.  Data with no spread at
    all returns a non-converged result flagged ``degenerate`` with ``v = 0``.
    """
    x, y, s = _check_points(points)
    n = x.size
    dof = n - 4
    w_sigma = s if weighted else np.ones_like(s)

    if np.ptp(y) == 0:
        w = 1.0 / w_sigma ** 2
        a = float(y[0])
        a_err = float(1.0 / math.sqrt(w.sum()))
        return FitResult(a, 0.0, float(np.median(x)), float(np.ptp(x) / 4.0 or 1.0),
                         a_err, math.inf, math.inf, math.inf, 0.0, dof,
                         converged=False, iterations=0, degenerate=True, weighted=weighted)

    k = int(np.argmax(y))
    distinct = np.unique(x)
    if np.sum(distinct < x[k]) < 2 or np.sum(distinct > x[k]) < 2:
        raise FitError("need at least two distinct delays on each side of the peak")

    # work in rescaled units so that A ~ 1 and delays ~ 1
    y_scale = float(np.max(np.abs(y)))
    x_center = float(np.median(x))
    x_scale = float(np.ptp(x))
    xs = (x - x_center) / x_scale
    ys = y / y_scale
    ss = w_sigma / y_scale
    wsq = 1.0 / ss

    p = _initial_guess(xs, ys)

    def chi2_of(params):
        f, _ = _model_and_jacobian(xs, params)
        r = (ys - f) * wsq
        return float(r @ r)

    chi2 = chi2_of(p)
    lam = 1e-3
    converged = False
    iterations = 0
    while iterations < MAX_ITERATIONS:
        iterations += 1
        f, jac = _model_and_jacobian(xs, p)
        jw = jac * wsq[:, None]
        r = (ys - f) * wsq
        jtj = jw.T @ jw
        grad = jw.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0] = 1.0
        step_ok = False
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                if lam > 1e20:
                    break
                continue
            trial = p + step
            scale = np.maximum(np.abs(p), np.array([abs(p[0]), 1.0, abs(p[3]), abs(p[3])]))
            rel = float(np.max(np.abs(step) / np.where(scale > 0, scale, 1.0)))
            trial_chi2 = chi2_of(trial) if trial[3] != 0 else math.inf
            if trial_chi2 <= chi2:
                p, chi2 = trial, trial_chi2
                lam = max(lam / 10.0, 1e-12)
                step_ok = True
            else:
                lam *= 10.0
            if rel < STEP_TOLERANCE:
                converged = True
            if step_ok or converged or lam > 1e20:
                break
        if converged or not step_ok:
            break

    p[3] = abs(p[3])
    _, jac = _model_and_jacobian(xs, p)
    jw = jac * wsq[:, None]
    try:
        cov = np.linalg.inv(jw.T @ jw)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.inf)
        converged = False
    if not weighted:
        cov = cov * (chi2 / dof if dof > 0 else np.inf)
    errs = np.sqrt(np.abs(np.diag(cov)))

    a, v, t0, tc = p
    units = np.array([y_scale, 1.0, x_scale, x_scale])
    errs = errs * units
    return FitResult(
        a=float(a * y_scale), v=float(v), t0=float(t0 * x_scale + x_center), tc=float(tc * x_scale),
        a_err=float(errs[0]), v_err=float(errs[1]), t0_err=float(errs[2]), tc_err=float(errs[3]),
        chi2=float(chi2), dof=dof, converged=bool(converged and tc > 0),
        iterations=iterations, weighted=weighted,
    )


def peak_to_wing(fit: FitResult) -> float:
    """Ratio of the fitted peak height to the baseline, ``1 + v``."""
    if not (fit.converged or fit.degenerate):
        raise FitError("peak-to-wing ratio requested from a non-converged fit")
    return 1.0 + fit.v
