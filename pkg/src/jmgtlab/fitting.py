"""Log-log tail fitting used by decay-rate verifications.

Fits target (1+t)^r laws.  ``windowed_tail_fit`` first averages the squared
quantity over sliding geometric windows [t, beta t]; per-mode oscillation in
the norms (cos^2 factors of the conjugate root pair) averages out while any
power law passes through with the same exponent and a shifted constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int
    conclusive: bool

    def as_dict(self):
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "n_points": self.n_points,
            "conclusive": self.conclusive,
        }


def loglog_slope(x, y) -> FitResult:
    """Least-squares slope of log y against log x (positive samples only)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 3:
        raise QuadratureError("need at least 3 positive samples for a slope fit")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(((pred - ly) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(
        float(coef[0]), float(coef[1]), r2,
        (float(x[keep].min()), float(x[keep].max())), int(keep.sum()),
        r2 >= 0.99,
    )


def fit_one_plus_t(times, values) -> FitResult:
    """Slope of log(values) against log(1+t) (the (1+t)^r convention)."""
    return loglog_slope(1.0 + np.asarray(times, dtype=float), values)


def window_average_sq(times, values_sq, t_lo, t_hi, beta=1.8, n_windows=12):
    """Sliding geometric-window means of a squared quantity.

    Returns (window centroids, sqrt of the window means).  Windows are
    [t0, beta t0] with t0 geometric between t_lo and t_hi/beta; centroids are
    the geometric window centers t0 sqrt(beta).
    """
    times = np.asarray(times, dtype=float)
    values_sq = np.asarray(values_sq, dtype=float)
    if beta <= 1.0:
        raise QuadratureError("window ratio beta must exceed 1")
    if t_hi / beta <= t_lo:
        raise QuadratureError("fit window too narrow for the chosen beta")
    starts = np.geomspace(t_lo, t_hi / beta, n_windows)
    cent, avg = [], []
    for t0 in starts:
        sel = (times >= t0) & (times <= beta * t0)
        if sel.sum() < 4:
            raise QuadratureError(
                "time sampling too sparse for window averaging; densify t grid"
            )
        th, v = times[sel], values_sq[sel]
        avg.append(np.trapezoid(v, th) / (th[-1] - th[0]))
        cent.append(t0 * np.sqrt(beta))
    return np.asarray(cent), np.sqrt(np.asarray(avg))


def windowed_tail_fit(
    times, values, t_lo, t_hi, beta=1.8, n_windows=12
) -> FitResult:
    """Tail exponent of a sampled norm via window-averaged squares."""
    tc, vals = window_average_sq(
        times, np.asarray(values, dtype=float) ** 2, t_lo, t_hi, beta, n_windows
    )
    return fit_one_plus_t(tc, vals)
