"""Empirical stand-ins for the abstract contraction constants.

The existence theory proves there are constants C0 (linear/data estimate),
C1 (quadratic Duhamel estimate) and C2 (dilation estimate) making the
smallness threshold (4 C0 C1 lambda^sigma)^{-1} and the lambda selection
rule executable, but fixes no values.  We calibrate them as the smallest
constants making the corresponding inequalities hold over a seeded ensemble
of random octant fields, times a safety factor 2, and persist the result in
a JSON calibration file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import (
    FrequencyGrid,
    ModelParams,
    forward_transform,
    inverse_transform,
    scale_spectrum,
)
from .dispersion import threshold_N0
from .kernels import kernel_table
from .propagator import propagate_linear, duhamel_apply
from .spaces import e_norm, mixed_time_norm, random_band_limited

SAFETY = 2.0


@dataclass(frozen=True)
class CalibrationConstants:
    c0: float
    c1: float
    c2: float
    alpha: float
    s: float
    n: int
    N: int
    L: float
    tau: float
    delta: float
    sigma: float
    b_over_a: float
    seed: int
    trials: int

    def as_dict(self):
        return asdict(self)

    def save(self, path):
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True))

    @staticmethod
    def load(path) -> "CalibrationConstants":
        return CalibrationConstants(**json.loads(Path(path).read_text()))


def _octant_triple(grid, rng, n0, band):
    return tuple(
        random_band_limited(grid, rng, band=band, decay=2.0, octant_R=n0)
        for _ in range(3)
    )


def calibrate_constants(
    params: ModelParams,
    grid: FrequencyGrid,
    alpha: float,
    s: float,
    seed: int = 0,
    trials: int = 12,
    horizon: float = 40.0,
    samples: int = 161,
) -> CalibrationConstants:
    """Ensemble calibration of (C0, C1, C2) at lambda = 1.

    C0: worst ratio of the solution's mixed norm (linear part plus the
    kernel boundary term with its physical coefficient) to the data size.
    C1: worst ratio of the coefficient-weighted quadratic Duhamel term to
    the product of the factors' mixed norms.  C2: worst ratio in the
    dilation inequality at lambda = 2.  All multiplied by the safety factor.
    """
    from .solver import westervelt_nonlinearity  # local: avoids import cycle

    rng = np.random.default_rng(seed)
    sigma = params.sigma
    n0 = threshold_N0(params)
    # keep the band inside half Nyquist so lambda = 2 dilation is representable
    band = grid.dxi * min(grid.N // 3, (grid.N // 2 - 1) // 2)
    kappa = params.nonlinearity_coefficient / params.tau
    ts = np.linspace(0.0, horizon, samples)
    uniq, inv = grid.unique_magnitudes()
    dk2 = kernel_table(ts, uniq, params)["dk2"][:, inv].reshape((len(ts),) + grid.shape)

    r_lin, r_bnd, r_duh, r_scale = 0.0, 0.0, 0.0, 0.0
    for _ in range(trials):
        w = _octant_triple(grid, rng, n0, band)
        sol = propagate_linear(w, params, ts, grid)
        lhs = mixed_time_norm(sol.dpsi_history(), ts, alpha, s + sigma, 2.0, grid)
        rhs = (
            e_norm(w[0], alpha, s + sigma, grid)
            + e_norm(w[1], alpha, s + sigma, grid)
            + e_norm(w[2], alpha, s, grid)
        )
        if rhs > 0:
            r_lin = max(r_lin, lhs / rhs)

        # boundary term: kappa * dK2(t) g against ||g||_{E^alpha_s}
        g = westervelt_nonlinearity(w[1], grid)
        gn = e_norm(g, alpha, s, grid)
        if gn > 0:
            hist = kappa * dk2 * g[None]
            r_bnd = max(
                r_bnd, mixed_time_norm(hist, ts, alpha, s + sigma, 2.0, grid) / gn
            )

        # quadratic Duhamel term
        env = np.exp(-0.2 * ts)
        g1 = w[0][None] * env[(slice(None),) + (None,) * grid.n]
        prod = np.empty_like(g1)
        for j in range(len(ts)):
            a = inverse_transform(grid, g1[j])
            prod[j] = forward_transform(grid, a * a) * grid.dealias_mask
        duh = kappa * duhamel_apply(prod, ts, params, grid)
        x1 = mixed_time_norm(g1, ts, alpha, s + sigma, 2.0, grid)
        if x1 > 0:
            r_duh = max(
                r_duh,
                mixed_time_norm(duh, ts, alpha, s + sigma, 2.0, grid) / x1**2,
            )

        # dilation inequality at lambda = 2
        for w_j, s_j in zip(w, (s + sigma, s + sigma, s)):
            wl = scale_spectrum(grid, w_j, 2)
            denom = (
                2.0 ** (-grid.n / 2.0 + max(s_j, 0.0))
                * 2.0 ** (alpha * 1.0 * n0)
                * e_norm(w_j, alpha, s_j, grid)
            )
            if denom > 0:
                r_scale = max(r_scale, e_norm(wl, alpha, s_j, grid) / denom)

    return CalibrationConstants(
        c0=SAFETY * max(r_lin, r_bnd),
        c1=SAFETY * r_duh,
        c2=SAFETY * max(r_scale, 1e-12),
        alpha=alpha, s=s, n=grid.n, N=grid.N, L=grid.L,
        tau=params.tau, delta=params.delta, sigma=params.sigma,
        b_over_a=params.b_over_a, seed=seed, trials=trials,
    )


_DEFAULT_PATH = Path(__file__).parent / "data" / "calibration_default.json"


def load_default_calibration() -> CalibrationConstants:
    """The shipped calibration (tau=delta=sigma=1, n=1 octant setup)."""
    return CalibrationConstants.load(_DEFAULT_PATH)
