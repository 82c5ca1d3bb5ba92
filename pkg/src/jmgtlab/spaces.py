"""Discrete norms and inequality checkers.

Spectral-weight norms are lattice quadratures of their whole-space
counterparts: every norm is a weighted l2 sum with cell volume dxi^n (or a
Riemann sum with dx^n on the physical side).  The frequency-uniform
decomposition restricts a spectrum to unit boxes k + [0,1)^n in physical
frequency units; the boxes partition the lattice exactly.

"<=" inequalities from the theory carry no explicit constants; every checker
reports the empirical constant over the supplied field(s) or ensemble, and
the test suite asserts stability of those constants under grid refinement.
The L-infinity norm is the exact grid max, a lower bound of the continuum
sup.  Fractional L^p Sobolev seminorms are realized as spectral multiplier
|xi|^s followed by the discrete physical-space p-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FrequencyGrid, forward_transform, inverse_transform
from .errors import ConfigError, ContractError, QuadratureError

GAMMA_VALUES = (1.0, 2.0, float("inf"))


# ---------------------------------------------------------------------------
# basic norms


def japanese_bracket(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def _homogeneous_weight(mag, s: float):
    """|xi|^s with the zero mode excluded for s != 0 (0^0 := 1)."""
    mag = np.asarray(mag, dtype=float)
    if s == 0.0:
        return np.ones_like(mag)
    with np.errstate(divide="ignore"):
        w = np.where(mag > 0, mag, 1.0) ** s
    return np.where(mag > 0, w, 0.0)


def e_norm(f_hat, alpha: float, s: float, grid: FrequencyGrid) -> float:
    """|| <xi>^s 2^(alpha |xi|) fhat ||_{L2(dxi)} for alpha <= 0."""
    if alpha > 0:
        raise ConfigError(
            "alpha > 0 (Gevrey weights) is outside this artifact's scope"
        )
    fh = grid.check_shape(f_hat)
    w = japanese_bracket(grid.magnitudes) ** s * np.exp2(alpha * grid.magnitudes)
    return float(np.sqrt(((w * np.abs(fh)) ** 2).sum() * grid.dxi**grid.n))


def sobolev_norm(f_hat, s: float, grid: FrequencyGrid, homogeneous=True) -> float:
    """Hdot^s (default) or H^s norm of a spectrum."""
    fh = grid.check_shape(f_hat)
    if homogeneous:
        w = _homogeneous_weight(grid.magnitudes, s)
    else:
        w = japanese_bracket(grid.magnitudes) ** s
    return float(np.sqrt(((w * np.abs(fh)) ** 2).sum() * grid.dxi**grid.n))


def lebesgue_norm(f_phys, p: float, grid: FrequencyGrid) -> float:
    """Discrete L^p(dx) norm; p = inf is the exact grid max."""
    f = grid.check_shape(f_phys)
    if math.isinf(p):
        return float(np.max(np.abs(f)))
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    return float(((np.abs(f) ** p).sum() * grid.dx**grid.n) ** (1.0 / p))


def hdot_p_norm(f_hat, s: float, p: float, grid: FrequencyGrid) -> float:
    """Fractional seminorm ||f||_{Hdot^s_p}: multiplier |xi|^s, then L^p."""
    fh = grid.check_shape(f_hat)
    g = inverse_transform(grid, _homogeneous_weight(grid.magnitudes, s) * fh)
    return lebesgue_norm(g, p, grid)


def intersection_norm(norms) -> float:
    """||.||_{A \\cap B ...} realized as the sum of the component norms."""
    return float(sum(norms))


# ---------------------------------------------------------------------------
# frequency-uniform decomposition


def box_labels(grid: FrequencyGrid):
    """Integer box label floor(xi) per mode; (uniq_boxes, inverse, |k|, <k>)."""
    cached = grid._cache.get("boxes")
    if cached is None:
        xi = grid.frequencies.reshape(grid.n, -1)
        labels = np.floor(xi).astype(np.int64).T  # (modes, n)
        uniq, inv = np.unique(labels, axis=0, return_inverse=True)
        kmag = np.sqrt((uniq.astype(float) ** 2).sum(axis=1))
        cached = (uniq, inv.ravel(), kmag)
        grid._cache["boxes"] = cached
    return cached


def uniform_decompose(f_hat, k, grid: FrequencyGrid):
    """Restriction of fhat to the box k + [0,1)^n (zero elsewhere)."""
    fh = grid.check_shape(f_hat)
    k = np.asarray(k, dtype=np.int64).reshape(grid.n)
    xi = grid.frequencies
    mask = np.ones(grid.shape, dtype=bool)
    for j in range(grid.n):
        mask &= (xi[j] >= k[j]) & (xi[j] < k[j] + 1)
    return np.where(mask, fh, 0.0)


def box_l2_profile(f_hat, grid: FrequencyGrid):
    """Per-box L2(dxi) norms of a spectrum; aligned with box_labels(grid)."""
    fh = grid.check_shape(f_hat)
    uniq, inv, _ = box_labels(grid)
    acc = np.zeros(len(uniq))
    np.add.at(acc, inv, (np.abs(fh) ** 2).ravel())
    return np.sqrt(acc * grid.dxi**grid.n)


def decomposition_e_norm(f_hat, alpha: float, s: float, grid: FrequencyGrid) -> float:
    """E-norm in its box-decomposition form (the '≈'-equivalent expression)."""
    if alpha > 0:
        raise ConfigError("alpha > 0 is out of scope")
    uniq, _, kmag = box_labels(grid)
    prof = box_l2_profile(f_hat, grid)
    w = japanese_bracket(kmag) ** s * np.exp2(alpha * kmag)
    return float(np.sqrt(((w * prof) ** 2).sum()))


def _time_lp(values, times, gamma: float):
    """L^gamma_t quadrature of sampled nonnegative values (trapezoid)."""
    values = np.asarray(values, dtype=float)
    if gamma == 1.0:
        return np.trapezoid(values, times, axis=0)
    if gamma == 2.0:
        return np.sqrt(np.trapezoid(values**2, times, axis=0))
    if math.isinf(gamma):
        return values.max(axis=0)
    raise ConfigError(f"gamma must be 1, 2 or inf, got {gamma}")


def mixed_time_norm(
    g_hist, times, alpha: float, s: float, gamma: float, grid: FrequencyGrid
) -> float:
    """Mixed norm: per-box L^gamma_t of the box L2 profile, then weighted l2.

    ``g_hist`` is a (T,) + grid.shape array of spectra sampled on ``times``
    (a truncation [0, T] of the real-line time norm; pick T so the
    exponential tail is negligible).
    """
    g_hist = np.asarray(g_hist)
    times = np.asarray(times, dtype=float)
    if g_hist.ndim != grid.n + 1 or g_hist.shape[1:] != grid.shape:
        raise ContractError(
            f"history shape {g_hist.shape} does not match (T,)+{grid.shape}"
        )
    if len(times) < 2 or np.any(np.diff(times) <= 0):
        raise QuadratureError("need at least two strictly increasing sample times")
    if alpha > 0:
        raise ConfigError("alpha > 0 is out of scope")
    uniq, inv, kmag = box_labels(grid)
    T = g_hist.shape[0]
    acc = np.zeros((T, len(uniq)))
    flat = (np.abs(g_hist) ** 2).reshape(T, -1)
    for t in range(T):
        np.add.at(acc[t], inv, flat[t])
    prof = np.sqrt(acc * grid.dxi**grid.n)  # (T, boxes)
    per_box = _time_lp(prof, times, gamma)
    w = japanese_bracket(kmag) ** s * np.exp2(alpha * kmag)
    return float(np.sqrt(((w * per_box) ** 2).sum()))


def y_weighted_norm(
    dw_hist, times, m: float, s: float, sigma: float, grid: FrequencyGrid
) -> float:
    """Time-weighted solution norm: sup_t of the two weighted Sobolev terms.

    sup over samples of (1+t)^a ||dw||_{L2} + (1+t)^(a+b) ||dw||_{Hdot^{s+sigma}}
    with a = n(2-m)/(4 m sigma), b = (s+sigma)/(2 sigma).
    """
    if not (1.0 <= m < 2.0):
        raise ConfigError(f"m must lie in [1, 2), got {m}")
    dw_hist = np.asarray(dw_hist)
    times = np.asarray(times, dtype=float)
    a = grid.n * (2.0 - m) / (4.0 * m * sigma)
    b = (s + sigma) / (2.0 * sigma)
    vals = []
    for t, fh in zip(times, dw_hist):
        l2 = sobolev_norm(fh, 0.0, grid)
        hs = sobolev_norm(fh, s + sigma, grid)
        vals.append((1.0 + t) ** a * l2 + (1.0 + t) ** (a + b) * hs)
    return float(max(vals))


# ---------------------------------------------------------------------------
# random fields for ensemble checks


def random_band_limited(grid: FrequencyGrid, rng, band=None, decay=2.0, octant_R=None):
    """Random complex spectrum supported in |xi| <= band with <xi>^-decay taper.

    With ``octant_R`` the support is further restricted to the first octant
    at radius R (all components nonnegative, |xi|_inf >= R).
    """
    if band is None:
        band = grid.dxi * grid.N / 3.0
    mag = grid.magnitudes
    mask = (mag > 0) & (mag <= band)
    if octant_R is not None:
        mask &= grid.octant_mask(octant_R)
    re = rng.standard_normal(grid.shape)
    im = rng.standard_normal(grid.shape)
    f = (re + 1j * im) * japanese_bracket(mag) ** (-decay)
    return np.where(mask, f, 0.0)


# ---------------------------------------------------------------------------
# inequality checkers


@dataclass
class InequalityReport:
    """lhs <= C * rhs_shape: one evaluated instance."""

    name: str
    lhs: float
    rhs: float
    ratio: float
    degenerate: bool
    extra: dict

    def as_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "degenerate": self.degenerate,
            **{k: v for k, v in self.extra.items()},
        }


def _report(name, lhs, rhs, **extra):
    if rhs == 0.0:
        return InequalityReport(name, lhs, rhs, float("nan"), True, extra)
    return InequalityReport(name, lhs, rhs, lhs / rhs, False, extra)


def check_algebra_prop_3_6(
    g1_hist, g2_hist, times, alpha: float, s: float, sigma: float, grid: FrequencyGrid
) -> InequalityReport:
    """Octant product estimate: L~1 E^{alpha,s+sigma} norm of g1*g2 vs the
    product of the factors' L~2 norms."""
    if s < grid.n / 2.0 - sigma:
        raise ConfigError(f"requires s >= n/2 - sigma = {grid.n / 2 - sigma}")
    octant = grid.octant_mask(0.0)
    for name, hist in (("g1", g1_hist), ("g2", g2_hist)):
        hist = np.asarray(hist)
        off = np.abs(hist[:, ~octant]).max() if hist[:, ~octant].size else 0.0
        peak = np.abs(hist).max()
        if peak > 0 and off > 1e-12 * peak:
            raise ContractError(f"{name} has spectral mass outside the first octant")
    g1_hist = np.asarray(g1_hist)
    g2_hist = np.asarray(g2_hist)
    prod = np.empty_like(g1_hist)
    for t in range(g1_hist.shape[0]):
        a = inverse_transform(grid, g1_hist[t])
        b = inverse_transform(grid, g2_hist[t])
        prod[t] = forward_transform(grid, a * b)
    lhs = mixed_time_norm(prod, times, alpha, s + sigma, 1.0, grid)
    r1 = mixed_time_norm(g1_hist, times, alpha, s + sigma, 2.0, grid)
    r2 = mixed_time_norm(g2_hist, times, alpha, s + sigma, 2.0, grid)
    return _report("algebra_prop_3_6", lhs, r1 * r2, alpha=alpha, s=s)


def gns_beta(kappa, s, p, p0, p1, n):
    return (1.0 / p0 - 1.0 / p + kappa / n) / (1.0 / p0 - 1.0 / p1 + s / n)


def check_gns(f_hat, kappa, s, p, p0, p1, grid: FrequencyGrid) -> InequalityReport:
    """Fractional Gagliardo-Nirenberg: ||f||_{Hdot^kappa_p} vs
    ||f||_{L^p0}^(1-beta) ||f||_{Hdot^s_p1}^beta."""
    for name, q in (("p", p), ("p0", p0), ("p1", p1)):
        if not (1.0 < q < math.inf):
            raise ConfigError(f"{name} must lie in (1, inf), got {q}")
    if not (0.0 <= kappa < s):
        raise ConfigError(f"requires 0 <= kappa < s, got kappa={kappa}, s={s}")
    beta = gns_beta(kappa, s, p, p0, p1, grid.n)
    if not (kappa / s - 1e-12 <= beta <= 1.0 + 1e-12):
        raise ConfigError(
            f"interpolation exponent beta={beta:.6f} outside [kappa/s, 1]"
        )
    lhs = hdot_p_norm(f_hat, kappa, p, grid)
    f_phys = inverse_transform(grid, grid.check_shape(f_hat))
    rhs = lebesgue_norm(f_phys, p0, grid) ** (1.0 - beta) * hdot_p_norm(
        f_hat, s, p1, grid
    ) ** beta
    return _report("gagliardo_nirenberg", lhs, rhs, beta=beta)


def check_embedding(f_hat, alpha0, beta0, grid: FrequencyGrid) -> InequalityReport:
    """L^inf interpolation embedding with the constructive split point.

    Reports the ratio plus the two split terms lambda0^(n/2-alpha0) A and
    lambda0^(n/2-beta0) B, which the optimal lambda0 makes equal.
    """
    n = grid.n
    if not (2.0 * alpha0 < n < 2.0 * beta0):
        raise ConfigError(f"requires 2*alpha0 < n < 2*beta0, got {alpha0}, {beta0}")
    fh = grid.check_shape(f_hat)
    A = sobolev_norm(fh, alpha0, grid)
    B = sobolev_norm(fh, beta0, grid)
    if A == 0.0 or B == 0.0:
        return InequalityReport("sobolev_embedding", 0.0, 0.0, float("nan"), True, {})
    lam0 = A ** (-1.0 / (beta0 - alpha0)) * B ** (1.0 / (beta0 - alpha0))
    t1 = lam0 ** (n / 2.0 - alpha0) * A
    t2 = lam0 ** (n / 2.0 - beta0) * B
    lhs = lebesgue_norm(inverse_transform(grid, fh), math.inf, grid)
    theta = (2.0 * beta0 - n) / (2.0 * (beta0 - alpha0))
    rhs = A**theta * B ** (1.0 - theta)
    return _report(
        "sobolev_embedding",
        lhs,
        rhs,
        lambda0=lam0,
        split_terms=(t1, t2),
        split_balance=abs(t1 - t2) / max(t1, t2),
    )


def check_leibniz(f_hat, g_hat, s, r, p1, p2, q1, q2, grid: FrequencyGrid) -> InequalityReport:
    """Fractional Leibniz rule for the product fg."""
    if s <= 0:
        raise ConfigError(f"requires s > 0, got {s}")
    for (a, b) in ((p1, p2), (q1, q2)):
        if abs(1.0 / r - (1.0 / a + 1.0 / b)) > 1e-12:
            raise ConfigError(
                f"Hoelder relation violated: 1/{r} != 1/{a} + 1/{b}"
            )
    f_phys = inverse_transform(grid, grid.check_shape(f_hat))
    g_phys = inverse_transform(grid, grid.check_shape(g_hat))
    fg_hat = forward_transform(grid, f_phys * g_phys)
    lhs = hdot_p_norm(fg_hat, s, r, grid)
    rhs = hdot_p_norm(f_hat, s, p1, grid) * lebesgue_norm(g_phys, p2, grid) + \
        lebesgue_norm(f_phys, q1, grid) * hdot_p_norm(g_hat, s, q2, grid)
    return _report("fractional_leibniz", lhs, rhs, s=s, r=r)


def check_data_estimates_prop_4_8(
    u1_hat, v1_hat, s, sigma, m1, m2, grid: FrequencyGrid
) -> tuple:
    """Initial-data product bounds: (u1^2 - v1^2, u1 v1) vs squared H^{s+sigma}."""
    if s <= max(grid.n / 2.0 - sigma, 0.0):
        raise ConfigError(f"requires s > [n/2 - sigma]_+ = {max(grid.n/2 - sigma, 0)}")
    u1 = inverse_transform(grid, grid.check_shape(u1_hat))
    v1 = inverse_transform(grid, grid.check_shape(v1_hat))
    rhs = (
        sobolev_norm(u1_hat, s + sigma, grid, homogeneous=False) ** 2
        + sobolev_norm(v1_hat, s + sigma, grid, homogeneous=False) ** 2
    )
    reports = []
    for name, prod, m in (
        ("data_u1sq_minus_v1sq", u1 * u1 - v1 * v1, m1),
        ("data_u1v1", u1 * v1, m2),
    ):
        ph = forward_transform(grid, prod)
        lhs = intersection_norm(
            (sobolev_norm(ph, s, grid, homogeneous=False), lebesgue_norm(prod, m, grid))
        )
        reports.append(_report(name, lhs, rhs, m=m))
    return tuple(reports)


def check_nonlinearity_estimates_prop_4_9(
    du_hist, dv_hist, times, p, m1, m2, s, sigma, grid: FrequencyGrid
) -> dict:
    """Time-weighted quadratic-term bounds against the Y-norm right sides.

    Checks, per sample time, || (d_t u)^2 +- (d_t v)^2 ||_{L^p} and
    ||...||_{Hdot^{s+sigma}} against the displayed (1+t)-weighted powers of
    the Y-norms; reports the worst-time ratios.
    """
    if not (1.0 <= p <= 2.0):
        raise ConfigError(f"p must lie in [1, 2], got {p}")
    if s <= max(grid.n / 2.0 - sigma, 0.0):
        raise ConfigError("requires s > [n/2 - sigma]_+")
    du_hist = np.asarray(du_hist)
    dv_hist = np.asarray(dv_hist)
    yu = y_weighted_norm(du_hist, times, m1, s, sigma, grid)
    yv = y_weighted_norm(dv_hist, times, m2, s, sigma, grid)
    ysq = (yu + yv) ** 2
    mmax = max(m1, m2)
    n = grid.n
    rate_lp = -n / (2.0 * sigma) * (2.0 / mmax - 1.0 / p)
    rate_hs = -n / (2.0 * sigma) * (2.0 / mmax - 0.5 + (s + sigma) / n)
    worst = {"lp_plus": 0.0, "lp_minus": 0.0, "hs_plus": 0.0, "hs_minus": 0.0}
    if ysq == 0.0:
        return {"degenerate": True, "worst_ratios": worst, "y_norms": (yu, yv)}
    for t, duh, dvh in zip(times, du_hist, dv_hist):
        du = inverse_transform(grid, duh)
        dv = inverse_transform(grid, dvh)
        for tag, fld in (("plus", du * du + dv * dv), ("minus", du * du - dv * dv)):
            fh = forward_transform(grid, fld)
            lp = lebesgue_norm(fld, p, grid)
            hs = sobolev_norm(fh, s + sigma, grid)
            worst[f"lp_{tag}"] = max(
                worst[f"lp_{tag}"], lp / ((1.0 + t) ** rate_lp * ysq)
            )
            worst[f"hs_{tag}"] = max(
                worst[f"hs_{tag}"], hs / ((1.0 + t) ** rate_hs * ysq)
            )
    return {
        "degenerate": False,
        "worst_ratios": worst,
        "y_norms": (yu, yv),
        "rates": {"lp": rate_lp, "hs": rate_hs},
        "p": p,
    }
