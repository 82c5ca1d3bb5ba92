"""Characteristic cubic of the per-mode ODE: roots, thresholds, asymptotics.

Every mode |xi| of the linearized model evolves under the cubic

    tau mu^3 + mu^2 + (delta+tau) |eta|^(2 sigma) mu + |eta|^(2 sigma) = 0,

with eta = xi / lambda.  Root finding goes through the companion matrix
(batched eigenvalues) followed by Newton polish steps, which stays robust
near discriminant zeros where closed-form branches are delicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ModelParams
from .errors import DiagnosticError, DomainError

RESIDUAL_TOL = 1e-10
VIETA_TOL = 1e-9
SWEEP_CAP = 1.0e4
SAFETY = 1.1


@dataclass(frozen=True)
class RootTriple:
    """Roots of the characteristic cubic at one frequency magnitude.

    mu1 is the distinguished (real in the conjugate regime) root; mu2, mu3
    are the remaining pair ordered so Im mu2 >= Im mu3.  mu_r/mu_i are the
    real/imaginary parts of mu2 with mu_i >= 0.
    """

    xi_mag: float
    mu1: complex
    mu2: complex
    mu3: complex
    regime: str  # 'small_freq' | 'transition' | 'large_freq'
    discriminant: float

    @property
    def mu_r(self) -> float:
        return self.mu2.real

    @property
    def mu_i(self) -> float:
        return abs(self.mu2.imag)

    @property
    def all_roots(self):
        return np.array([self.mu1, self.mu2, self.mu3])

    @property
    def spectral_abscissa(self) -> float:
        return float(max(self.mu1.real, self.mu2.real, self.mu3.real))


def cubic_residual(mu, X, tau, delta):
    """|tau mu^3 + mu^2 + (delta+tau) X mu + X| for root-quality checks."""
    mu = np.asarray(mu, dtype=complex)
    return np.abs(tau * mu**3 + mu**2 + (delta + tau) * np.asarray(X) * mu + np.asarray(X))


def discriminant_poly_coeffs(tau, delta):
    """Coefficients (A3, A2) of Disc(X) = -A3 X^3 + A2 X^2 - 4 X."""
    A3 = 4.0 * tau * (delta + tau) ** 3
    A2 = 18.0 * tau * (delta + tau) + (delta + tau) ** 2 - 27.0 * tau**2
    return A3, A2


def discriminant_of_symbol(X, tau, delta):
    """Exact cubic discriminant as a function of X = |eta|^(2 sigma)."""
    A3, A2 = discriminant_poly_coeffs(tau, delta)
    X = np.asarray(X, dtype=float)
    return -A3 * X**3 + A2 * X**2 - 4.0 * X


def discriminant(xi_mag, params: ModelParams):
    """Discriminant of the cubic at physical frequency magnitude |xi|."""
    return discriminant_of_symbol(params.symbol(xi_mag), params.tau, params.delta)


def roots_batch(X, tau, delta, polish_steps: int = 2):
    """Roots for a batch of symbol values X, shape (M, 3), unordered.

    Batched companion-matrix eigenvalues plus Newton polish.  Exact for
    X == 0 as well (roots 0, 0, -1/tau), though those are confluent and
    callers must not run the eigen-expansion there.
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    M = X.shape[0]
    comp = np.zeros((M, 3, 3))
    comp[:, 0, 1] = 1.0
    comp[:, 1, 2] = 1.0
    comp[:, 2, 0] = -X / tau
    comp[:, 2, 1] = -(delta + tau) * X / tau
    comp[:, 2, 2] = -1.0 / tau
    mu = np.linalg.eigvals(comp).astype(complex)
    for _ in range(polish_steps):
        p = tau * mu**3 + mu**2 + (delta + tau) * X[:, None] * mu + X[:, None]
        dp = 3.0 * tau * mu**2 + 2.0 * mu + (delta + tau) * X[:, None]
        safe = np.abs(dp) > 1e-30
        mu = np.where(safe, mu - p / np.where(safe, dp, 1.0), mu)
    return mu


def _anchored_mu1_index(mu_row, tau, delta):
    """In the all-real band pick mu1 as the root nearest either asymptote."""
    anchors = np.array([-1.0 / tau, -1.0 / (delta + tau)])
    d = np.min(np.abs(mu_row[:, None] - anchors[None, :]), axis=1)
    return int(np.argmin(d))


def classify_roots(mu_row, disc_value, tau, delta):
    """Order one root row into (mu1, mu2, mu3) following the spec rules."""
    mu_row = np.asarray(mu_row, dtype=complex)
    if disc_value < 0:
        im = np.abs(mu_row.imag)
        i1_candidates = np.flatnonzero(im == im.min())
        i1 = int(i1_candidates[np.argmin(mu_row.real[i1_candidates])])
    else:
        i1 = _anchored_mu1_index(mu_row, tau, delta)
    rest = np.delete(mu_row, i1)
    if rest[0].imag >= rest[1].imag:
        mu2, mu3 = rest[0], rest[1]
    else:
        mu2, mu3 = rest[1], rest[0]
    if disc_value >= 0 and mu2.real < mu3.real:
        mu2, mu3 = mu3, mu2
    return complex(mu_row[i1]), complex(mu2), complex(mu3)


def characteristic_roots(xi_mag: float, params: ModelParams) -> RootTriple:
    """Exact root triple at |xi| (eta = xi / lambda handled internally)."""
    X = float(params.symbol(xi_mag))
    mu = roots_batch(np.array([X]), params.tau, params.delta)[0]
    disc = float(discriminant_of_symbol(X, params.tau, params.delta))
    mu1, mu2, mu3 = classify_roots(mu, disc, params.tau, params.delta)
    n0, e0 = thresholds(params)
    eta = xi_mag / params.lam
    if eta >= n0:
        regime = "large_freq"
    elif eta <= e0:
        regime = "small_freq"
    else:
        regime = "transition"
    return RootTriple(float(xi_mag), mu1, mu2, mu3, regime, disc)


def _bisect_sign_change(f, a, b, iters=200):
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise ValueError("no sign change in bracket")
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


@lru_cache(maxsize=256)
def _thresholds_cached(tau, delta, sigma):
    A3, A2 = discriminant_poly_coeffs(tau, delta)
    f = lambda X: float(discriminant_of_symbol(X, tau, delta))

    # Sign-change boundaries of Disc/X = -A3 X^2 + A2 X - 4 (window of three
    # real roots), refined by bisection when the window exists.
    qdisc = A2 * A2 - 16.0 * A3
    x_sign_hi = 0.0
    x_sign_lo = math.inf
    if A2 > 0 and qdisc > 0:
        xm = (A2 - math.sqrt(qdisc)) / (2.0 * A3)
        xp = (A2 + math.sqrt(qdisc)) / (2.0 * A3)
        mid = 0.5 * (xm + xp)
        x_sign_lo = _bisect_sign_change(f, 0.5 * xm, mid)
        x_sign_hi = _bisect_sign_change(f, mid, 2.0 * xp)

    # Dominance scales: where one discriminant term outweighs twice the rest.
    a2 = abs(A2)
    x_dom_hi = (2.0 * a2 + math.sqrt(4.0 * a2 * a2 + 32.0 * A3)) / (2.0 * A3)
    x_dom_lo = (-a2 + math.sqrt(a2 * a2 + 8.0 * A3)) / (2.0 * A3)

    x_hi = max(x_sign_hi, x_dom_hi)
    x_lo = min(x_sign_lo, x_dom_lo)
    n0 = SAFETY * x_hi ** (1.0 / (2.0 * sigma))
    e0 = x_lo ** (1.0 / (2.0 * sigma)) / SAFETY

    # Verification sweep: the discriminant must be strictly negative outside
    # the bracketed band, on a log-spaced sweep up to the cap.
    sweep_hi = np.geomspace(n0, SWEEP_CAP, 512)
    sweep_lo = np.geomspace(min(e0, 1.0) * 1e-6, e0, 512)
    for name, sweep in (("above N0", sweep_hi), ("below eps0", sweep_lo)):
        vals = discriminant_of_symbol(sweep ** (2.0 * sigma), tau, delta)
        if np.any(vals >= 0):
            bad = sweep[vals >= 0]
            raise DiagnosticError(
                f"discriminant sign oscillates {name} for tau={tau}, "
                f"delta={delta}, sigma={sigma}",
                trace={"eta": bad.tolist(), "disc": vals[vals >= 0].tolist()},
            )
    return n0, e0


def thresholds(params: ModelParams):
    """(N0, eps0) in |eta| units; |xi| thresholds are N0*lambda, eps0*lambda."""
    return _thresholds_cached(params.tau, params.delta, params.sigma)


def threshold_N0(params: ModelParams) -> float:
    return thresholds(params)[0]


def threshold_eps0(params: ModelParams) -> float:
    return thresholds(params)[1]


def asymptotic_roots_large(xi_mag: float, params: ModelParams) -> RootTriple:
    """Leading-order triple for |xi| >= N0 * lambda (Prop-style expansion)."""
    n0 = threshold_N0(params)
    if xi_mag < n0 * params.lam:
        raise DomainError(
            f"|xi|={xi_mag} below the large-frequency threshold "
            f"N0*lambda={n0 * params.lam}"
        )
    tau, delta = params.tau, params.delta
    mu1 = complex(-1.0 / (delta + tau))
    mu_i = math.sqrt((delta + tau) / tau) * (xi_mag / params.lam) ** params.sigma
    mu_r = -delta / (2.0 * tau * (delta + tau))
    disc = float(discriminant(xi_mag, params))
    return RootTriple(
        float(xi_mag),
        mu1,
        complex(mu_r, mu_i),
        complex(mu_r, -mu_i),
        "large_freq",
        disc,
    )


def asymptotic_roots_small(xi_mag: float, params: ModelParams) -> RootTriple:
    """Leading-order triple for |xi| <= eps0 (lambda = 1 regime)."""
    if params.lam != 1.0:
        raise DomainError("small-frequency asymptotics are stated for lambda = 1")
    e0 = threshold_eps0(params)
    if xi_mag > e0:
        raise DomainError(
            f"|xi|={xi_mag} above the small-frequency threshold eps0={e0}"
        )
    tau, delta, sigma = params.tau, params.delta, params.sigma
    mu1 = complex(-1.0 / tau)
    mu_i = xi_mag**sigma
    mu_r = -(delta / 2.0) * xi_mag ** (2.0 * sigma)
    disc = float(discriminant(xi_mag, params))
    return RootTriple(
        float(xi_mag),
        mu1,
        complex(mu_r, mu_i),
        complex(mu_r, -mu_i),
        "small_freq",
        disc,
    )


def vieta_residuals(triple: RootTriple, params: ModelParams):
    """Relative residuals of the three Vieta identities."""
    tau, delta = params.tau, params.delta
    X = float(params.symbol(triple.xi_mag))
    mu = triple.all_roots
    s1 = mu.sum()
    s2 = mu[0] * mu[1] + mu[0] * mu[2] + mu[1] * mu[2]
    s3 = mu.prod()
    t1 = -1.0 / tau
    t2 = (delta + tau) * X / tau
    t3 = -X / tau
    r1 = abs(s1 - t1) / max(abs(t1), 1.0)
    r2 = abs(s2 - t2) / max(abs(t2), 1.0)
    r3 = abs(s3 - t3) / max(abs(t3), 1.0)
    return r1, r2, r3


def roots_sweep(xi_mags, params: ModelParams):
    """Root triples along a sweep with proximity matching between points.

    Returns an (M, 3) complex array whose columns follow continuous branches
    (matched greedily by distance from the previous row) plus the per-point
    regimes and discriminants.
    """
    xi_mags = np.asarray(xi_mags, dtype=float)
    X = params.symbol(xi_mags)
    raw = roots_batch(X, params.tau, params.delta)
    disc = discriminant_of_symbol(X, params.tau, params.delta)
    out = np.empty_like(raw)
    trip0 = characteristic_roots(xi_mags[0], params)
    out[0] = trip0.all_roots
    for i in range(1, len(xi_mags)):
        prev = out[i - 1]
        avail = list(raw[i])
        row = np.empty(3, dtype=complex)
        for j in range(3):
            dists = [abs(a - prev[j]) for a in avail]
            pick = int(np.argmin(dists))
            row[j] = avail.pop(pick)
        out[i] = row
    n0, e0 = thresholds(params)
    eta = xi_mags / params.lam
    regimes = np.where(
        eta >= n0, "large_freq", np.where(eta <= e0, "small_freq", "transition")
    )
    return out, regimes, disc
