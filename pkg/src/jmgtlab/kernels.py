"""Solution kernels K0, K1, K2 of the per-mode linear ODE and their bounds.

Khat_j(t, |xi|; lambda) solves

    tau y''' + y'' + (delta+tau) |eta|^(2 sigma) y' + |eta|^(2 sigma) y = 0,
    (y, y', y'')(0) = e_j,      eta = xi / lambda,

so a mode of the linear equation evolves as
phihat(t) = K0 phihat0 + K1 phihat1 + K2 phihat2.

Evaluation: eigen-expansion Khat_j(t) = sum_i c_ij exp(mu_i t) with the
Lagrange closed-form for the Vandermonde coefficients.  Modes whose roots
come within 1e-6 of each other (the transition band, and the zero mode with
its double root at 0) fall back to direct adaptive ODE integration, flagged
in the result; the Vandermonde system is too ill-conditioned there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .core import ModelParams
from .dispersion import (
    characteristic_roots,
    roots_batch,
    threshold_N0,
    threshold_eps0,
    thresholds,
)
from .errors import DomainError

DEGENERATE_ROOT_TOL = 1e-6

KERNEL_KEYS = ("k0", "k1", "k2", "dk0", "dk1", "dk2", "ddk0", "ddk1", "ddk2")


@dataclass(frozen=True)
class KernelTriple:
    """Kernel values and time derivatives at one (t, |xi|)."""

    t: float
    xi_mag: float
    k0: complex
    k1: complex
    k2: complex
    dk0: complex
    dk1: complex
    dk2: complex
    ddk0: complex
    ddk1: complex
    ddk2: complex
    method: str = "eigen"  # 'eigen' | 'ode'


def _lagrange_coefficients(mu):
    """c[..., i, j]: coefficient of exp(mu_i t) in Khat_j, distinct roots.

    Row i of the inverse Vandermonde is the coefficient list of the Lagrange
    basis polynomial L_i(x) = prod_{l != i} (x - mu_l) / (mu_i - mu_l).
    """
    mu = np.asarray(mu, dtype=complex)
    pairs = [(1, 2), (0, 2), (0, 1)]
    D = np.stack(
        [(mu[..., i] - mu[..., a]) * (mu[..., i] - mu[..., b]) for i, (a, b) in enumerate(pairs)],
        axis=-1,
    )
    e1 = np.stack([mu[..., a] + mu[..., b] for (a, b) in pairs], axis=-1)
    e2 = np.stack([mu[..., a] * mu[..., b] for (a, b) in pairs], axis=-1)
    c = np.empty(mu.shape + (3,), dtype=complex)
    c[..., 0] = e2 / D
    c[..., 1] = -e1 / D
    c[..., 2] = 1.0 / D
    return c


def _ode_fundamental(ts, X, params: ModelParams, rtol=1e-12, atol=1e-14):
    """Integrate the 3x3 fundamental system; returns (len(ts), 3, 3) array
    with [time, derivative-order p, kernel index j]."""
    tau, delta = params.tau, params.delta

    def rhs(t, y):
        Y = y.reshape(3, 3)
        out = np.empty_like(Y)
        out[0] = Y[1]
        out[1] = Y[2]
        out[2] = -(Y[2] + (delta + tau) * X * Y[1] + X * Y[0]) / tau
        return out.reshape(-1)

    ts = np.asarray(ts, dtype=float)
    y0 = np.eye(3).reshape(-1)
    tmax = float(ts.max()) if ts.size else 0.0
    if tmax == 0.0:
        return np.tile(np.eye(3), (len(ts), 1, 1))
    sol = solve_ivp(
        rhs, (0.0, tmax), y0, t_eval=np.clip(ts, 0.0, tmax),
        method="DOP853", rtol=rtol, atol=atol,
    )
    return sol.y.T.reshape(len(ts), 3, 3)


def kernel_table(ts, xi_mags, params: ModelParams):
    """Vectorized kernel evaluation on a (time, magnitude) product grid.

    Returns a dict with keys k0..ddk2 (arrays of shape (T, M)) plus
    'ode_fallback', the boolean mask of magnitudes handled by integration.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    xi_mags = np.atleast_1d(np.asarray(xi_mags, dtype=float))
    X = params.symbol(xi_mags)
    mu = roots_batch(X, params.tau, params.delta)
    gap = np.min(
        np.abs(mu[:, [0, 0, 1]] - mu[:, [1, 2, 2]]),
        axis=1,
    )
    fallback = gap < DEGENERATE_ROOT_TOL

    out = {k: np.zeros((len(ts), len(xi_mags)), dtype=complex) for k in KERNEL_KEYS}
    good = ~fallback
    if np.any(good):
        c = _lagrange_coefficients(mu[good])  # (Mg, 3, 3)
        E = np.exp(mu[good][None, :, :] * ts[:, None, None])  # (T, Mg, 3)
        mug = mu[good]
        for p, prefix in enumerate(("k", "dk", "ddk")):
            w = c * (mug**p)[:, :, None]  # (Mg, 3, 3)
            vals = np.einsum("tmi,mij->tmj", E, w)  # (T, Mg, 3)
            for j in range(3):
                out[f"{prefix}{j}"][:, good] = vals[:, :, j]
    for idx in np.flatnonzero(fallback):
        Y = _ode_fundamental(ts, float(X[idx]), params)  # (T, p, j)
        for p, prefix in enumerate(("k", "dk", "ddk")):
            for j in range(3):
                out[f"{prefix}{j}"][:, idx] = Y[:, p, j]
    out["ode_fallback"] = fallback
    return out


def kernel_eval(t: float, xi_mag: float, params: ModelParams) -> KernelTriple:
    """Kernel triple at a single (t, |xi|); see module docs for the method."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    tab = kernel_table(np.array([t]), np.array([xi_mag]), params)
    method = "ode" if bool(tab["ode_fallback"][0]) else "eigen"
    vals = {k: complex(tab[k][0, 0]) for k in KERNEL_KEYS}
    return KernelTriple(t=float(t), xi_mag=float(xi_mag), method=method, **vals)


def default_bound_time_grid(t_max: float = 50.0):
    """{0} followed by 0.01 * 2^k up to t_max, then t_max itself."""
    ts = [0.0]
    v = 0.01
    while v < t_max:
        ts.append(v)
        v *= 2.0
    ts.append(t_max)
    return np.array(ts)


def _fit_envelope_constant(values, envelope):
    mask = envelope > 0
    if not np.any(mask):
        return float("inf")
    return float(np.max(values[mask] / envelope[mask]))


@dataclass
class BoundFitReport:
    """Result of an empirical pointwise-bound fit."""

    ok: bool
    c_rate: float
    constants: dict
    lambda_values: tuple
    lambda_variation: float
    details: dict

    def as_dict(self):
        return {
            "ok": self.ok,
            "c_rate": self.c_rate,
            "constants": self.constants,
            "lambda_values": list(self.lambda_values),
            "lambda_variation": self.lambda_variation,
            "details": self.details,
        }


def check_large_freq_bounds(
    params: ModelParams,
    t_grid=None,
    eta_grid=None,
    lambdas=(1.0, 2.0, 4.0),
) -> BoundFitReport:
    """Fit (C, c) in the large-frequency kernel bounds, per lambda.

    For |xi| >= N0*lambda the grouped quantity |dK0| + |dK1| + |ddK2| must sit
    under C exp(-c t) and |dK2| under C' lambda^sigma |xi|^(-sigma) exp(-c t).
    The xi-grids are matched in eta = xi/lambda across the lambda family, the
    spec's paired-sweep design; c is fixed at 95% of the least-negative
    spectral abscissa over the family, and C is the smallest constant that
    works on the grid.  Reports per-term constants informationally.
    """
    n0 = threshold_N0(params)
    if eta_grid is None:
        eta_grid = np.geomspace(n0, 64.0 * n0, 40)
    else:
        eta_grid = np.asarray(eta_grid, dtype=float)
        if np.any(eta_grid < n0):
            raise DomainError("eta grid extends below the large-frequency threshold")
    if t_grid is None:
        t_grid = default_bound_time_grid()

    # Spectral abscissa over the eta range (lambda-invariant at matched eta).
    probe = ModelParams(params.tau, params.delta, params.b_over_a, params.sigma, 1.0)
    mu = roots_batch(probe.symbol(eta_grid), params.tau, params.delta)
    absc = np.max(mu.real, axis=1)
    c_rate = 0.95 * float(-absc.max())
    if c_rate <= 0:
        return BoundFitReport(
            ok=False, c_rate=c_rate, constants={}, lambda_values=tuple(lambdas),
            lambda_variation=float("nan"),
            details={"reason": "nonnegative spectral abscissa", "abscissa": absc.tolist()},
        )

    env_t = np.exp(-c_rate * t_grid)[:, None]
    per_lambda = {}
    for lam in lambdas:
        p = ModelParams(params.tau, params.delta, params.b_over_a, params.sigma, float(lam))
        xi_grid = eta_grid * lam
        tab = kernel_table(t_grid, xi_grid, p)
        grouped = np.abs(tab["dk0"]) + np.abs(tab["dk1"]) + np.abs(tab["ddk2"])
        C_grouped = _fit_envelope_constant(grouped, np.broadcast_to(env_t, grouped.shape))
        env_k2 = lam**p.sigma * xi_grid[None, :] ** (-p.sigma) * env_t
        C_k2 = _fit_envelope_constant(np.abs(tab["dk2"]), env_k2)
        per_lambda[lam] = {
            "C_grouped": C_grouped,
            "C_dk2": C_k2,
            "C_dk0": _fit_envelope_constant(np.abs(tab["dk0"]), np.broadcast_to(env_t, grouped.shape)),
            "C_dk1": _fit_envelope_constant(np.abs(tab["dk1"]), np.broadcast_to(env_t, grouped.shape)),
            "C_ddk2": _fit_envelope_constant(np.abs(tab["ddk2"]), np.broadcast_to(env_t, grouped.shape)),
        }
    groups = np.array([per_lambda[l]["C_grouped"] for l in lambdas])
    k2s = np.array([per_lambda[l]["C_dk2"] for l in lambdas])
    var = float(
        max(np.ptp(groups) / groups.mean() if groups.mean() else np.inf,
            np.ptp(k2s) / k2s.mean() if k2s.mean() else np.inf)
    )
    ok = np.all(np.isfinite(groups)) and np.all(np.isfinite(k2s)) and c_rate > 0
    return BoundFitReport(
        ok=bool(ok),
        c_rate=c_rate,
        constants={str(l): per_lambda[l] for l in lambdas},
        lambda_values=tuple(float(l) for l in lambdas),
        lambda_variation=var,
        details={
            "eta_grid": [float(eta_grid.min()), float(eta_grid.max()), len(eta_grid)],
            "t_grid_max": float(np.max(t_grid)),
            "N0": n0,
        },
    )


def check_small_freq_bounds(
    params: ModelParams, t_grid=None, xi_grid=None
) -> BoundFitReport:
    """Fit constants in the small-frequency kernel bounds (lambda = 1).

    Bounds checked, for |xi| <= eps0:
        |dK0|  <= C (|xi|^s e^{-c |xi|^{2s} t} + |xi|^{2s} e^{-c' t})
        |dK1|  <= C (e^{-c |xi|^{2s} t} + |xi|^{2s} e^{-c' t})
        |dK2|  <= C (e^{-c |xi|^{2s} t} + e^{-c' t})
        |ddK2| <= C (|xi|^s e^{-c |xi|^{2s} t} + e^{-c' t})
    with s = sigma.  The diffusive rate c is fixed at 95% of the minimum of
    |Re mu_2| / |xi|^{2 sigma} over the grid (so c tracks delta/2), and the
    relaxation rate c' at 95% of min |Re mu_1|.
    """
    if params.lam != 1.0:
        raise DomainError("small-frequency bounds are stated for lambda = 1")
    e0 = threshold_eps0(params)
    if xi_grid is None:
        xi_grid = np.geomspace(e0 / 64.0, e0, 40)
    else:
        xi_grid = np.asarray(xi_grid, dtype=float)
        if np.any(xi_grid > e0):
            raise DomainError("xi grid extends above the small-frequency threshold")
    if t_grid is None:
        t_grid = default_bound_time_grid()
    sigma = params.sigma

    triples = [characteristic_roots(x, params) for x in xi_grid]
    mu_r = np.array([tr.mu_r for tr in triples])
    mu1_re = np.array([tr.mu1.real for tr in triples])
    c_diff = 0.95 * float(np.min(-mu_r / xi_grid ** (2.0 * sigma)))
    c_relax = 0.95 * float(np.min(-mu1_re))
    if c_diff <= 0 or c_relax <= 0:
        return BoundFitReport(
            ok=False, c_rate=c_diff, constants={}, lambda_values=(1.0,),
            lambda_variation=0.0, details={"reason": "unstable root real parts"},
        )

    tab = kernel_table(t_grid, xi_grid, params)
    xs = xi_grid[None, :] ** sigma
    x2s = xi_grid[None, :] ** (2.0 * sigma)
    diff_env = np.exp(-c_diff * x2s * t_grid[:, None])
    relax_env = np.exp(-c_relax * t_grid)[:, None]
    envs = {
        "dk0": xs * diff_env + x2s * relax_env,
        "dk1": diff_env + x2s * relax_env,
        "dk2": diff_env + relax_env,
        "ddk2": xs * diff_env + relax_env,
    }
    constants = {
        key: _fit_envelope_constant(np.abs(tab[key]), env) for key, env in envs.items()
    }
    ok = all(np.isfinite(v) for v in constants.values())
    return BoundFitReport(
        ok=bool(ok),
        c_rate=c_diff,
        constants=constants,
        lambda_values=(1.0,),
        lambda_variation=0.0,
        details={
            "c_relax": c_relax,
            "c_diff_over_half_delta": c_diff / (params.delta / 2.0),
            "xi_grid": [float(xi_grid.min()), float(xi_grid.max()), len(xi_grid)],
            "eps0": e0,
        },
    )


def small_freq_representation(
    t: float, xi_mag: float, data_hat, params: ModelParams
) -> complex:
    """d_t what via the explicit three-term small-frequency closed form.

    data_hat = (what0, what1, what2) are the mode's initial values.  Valid in
    the conjugate-pair regime at |xi| <= eps0; uses exact root values, so it
    must agree with the kernel-assembled d_t what to high accuracy.
    """
    if params.lam != 1.0:
        raise DomainError("representation stated for lambda = 1")
    e0 = threshold_eps0(params)
    if xi_mag > e0:
        raise DomainError(f"|xi|={xi_mag} above eps0={e0}")
    tr = characteristic_roots(xi_mag, params)
    if tr.discriminant >= 0:
        raise DomainError("roots are not a conjugate pair at this frequency")
    w0, w1, w2 = (complex(v) for v in data_hat)
    m1 = tr.mu1.real
    mr, mi = tr.mu_r, tr.mu_i
    denom = 2.0 * mr * m1 - mi**2 - mr**2 - m1**2
    coef1 = (-(mi**2 + mr**2) * w0 + 2.0 * mr * w1 - w2) / denom
    coef2 = ((2.0 * mr * m1 - m1**2) * w0 - 2.0 * mr * w1 + w2) / denom
    coef3 = (
        m1 * (mr * m1 + mi**2 - mr**2) * w0
        + (mr**2 - mi**2 - m1**2) * w1
        - (mr - m1) * w2
    ) / (mi * denom)
    ert = np.exp(mr * t)
    return complex(
        coef1 * m1 * np.exp(m1 * t)
        + coef2 * (np.cos(mi * t) * mr - np.sin(mi * t) * mi) * ert
        + coef3 * (np.sin(mi * t) * mr + np.cos(mi * t) * mi) * ert
    )
