"""Physical parameters, spectral grids, transforms and field containers.

Discretization: the equation lives on the whole space; we work on the
periodic box [0, L)^n and treat its frequency lattice xi = 2*pi*k/L as a
quadrature of R^n.  All norms downstream are weighted l2 sums with the cell
volume dxi^n, so they approximate the corresponding R^n integrals and stay
consistent as L is refined.

Transform convention: the forward transform is the Riemann-sum
approximation of the unitary continuum Fourier transform,

    fhat(xi_k) = (dx^n / (2*pi)^(n/2)) * sum_j f(x_j) exp(-i xi_k . x_j),

with the matching inverse.  Parseval then holds exactly in the weighted
form  sum |f|^2 dx^n = sum |fhat|^2 dxi^n  (see tests).

Dilation convention: ``spatial_scale`` implements psi_lambda(x) = psi(lambda x)
in the L2-unitary normalization: the coefficient at mode k moves to mode
lambda*k and is multiplied by lambda^(-n/2).  With this factor every
spectral-weight norm reproduces its whole-space scaling law exactly on the
lattice, e.g. ||psi_lambda||_{Hdot^s} = lambda^(s - n/2) ||psi||_{Hdot^s}.
The pointwise-amplitude convention (no factor) differs by lambda^(n/2) and
cannot reproduce whole-space norm scaling on a fixed torus.

Norm computations are only claimed for grid-representable (band-limited)
fields; rougher distributions admitted by the continuum theory have no
faithful lattice image.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ContractError

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    tau: thermal relaxation (> 0); delta: sound diffusivity (> 0);
    b_over_a: nonlinearity ratio B/A (> 0); sigma: fractional-Laplacian
    exponent (> 0); lam: dilation parameter lambda (>= 1).
    """

    tau: float = 1.0
    delta: float = 1.0
    b_over_a: float = 1.0
    sigma: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("tau", "delta", "b_over_a", "sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive real, got {v!r}")
        if not (np.isfinite(self.lam) and self.lam >= 1.0):
            raise ConfigError(f"lam must be >= 1, got {self.lam!r}")

    @property
    def nonlinearity_coefficient(self) -> float:
        """1 + B/(2A); always > 1."""
        return 1.0 + 0.5 * self.b_over_a

    def with_lam(self, lam: float) -> "ModelParams":
        return replace(self, lam=float(lam))

    def symbol(self, xi_mag):
        """Per-mode multiplier |eta|^(2 sigma) with eta = xi / lambda."""
        return (np.asarray(xi_mag, dtype=float) / self.lam) ** (2.0 * self.sigma)


@dataclass(frozen=True)
class FrequencyGrid:
    """Spectral lattice of the periodic box [0, L)^n (FFT mode layout)."""

    n: int
    N: int
    L: float
    dx: float = field(init=False, repr=False)
    dxi: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ConfigError(f"dimension n must be 1, 2 or 3, got {self.n}")
        if self.N % 2 != 0 or not (4 <= self.N <= 1024):
            raise ConfigError(f"N must be even with 4 <= N <= 1024, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"period L must be positive, got {self.L!r}")
        object.__setattr__(self, "dx", self.L / self.N)
        object.__setattr__(self, "dxi", _TWO_PI / self.L)
        k1 = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)
        axes = np.meshgrid(*([k1] * self.n), indexing="ij")
        modes = np.stack(axes, axis=0)  # (n, N, ..., N) integer mode indices
        object.__setattr__(self, "_modes", modes)
        xi = modes.astype(float) * self.dxi
        object.__setattr__(self, "_xi", xi)
        object.__setattr__(self, "magnitudes", np.sqrt((xi**2).sum(axis=0)))
        kcut = self.N // 3
        object.__setattr__(
            self, "dealias_mask", (np.abs(modes) <= kcut).all(axis=0)
        )
        object.__setattr__(self, "_cache", {})

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def mode_vectors(self):
        """Integer mode indices, shape (n,) + grid shape."""
        return self._modes

    @property
    def frequencies(self):
        """Physical frequencies xi = 2 pi k / L, shape (n,) + grid shape."""
        return self._xi

    @property
    def nmodes(self) -> int:
        return self.N**self.n

    def coordinates(self):
        """Physical sample points x_j, shape (n,) + grid shape."""
        x1 = np.arange(self.N) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.n), indexing="ij"), axis=0)

    def octant_mask(self, R: float):
        """Modes in the first octant with |xi|_inf >= R."""
        xi = self._xi
        nonneg = (xi >= 0).all(axis=0)
        return nonneg & (np.abs(xi).max(axis=0) >= R)

    def zeros(self):
        return np.zeros(self.shape, dtype=complex)

    def check_shape(self, arr):
        arr = np.asarray(arr)
        if arr.shape != self.shape:
            raise ContractError(
                f"array shape {arr.shape} does not match grid shape {self.shape}"
            )
        return arr

    def negation_index(self):
        """Fancy index mapping mode k to mode -k (for Hermitian checks)."""
        idx = (-np.arange(self.N)) % self.N
        return np.ix_(*([idx] * self.n))

    def unique_magnitudes(self):
        """Deduplicated |xi| values and the inverse map onto the flat grid."""
        cached = self._cache.get("uniq")
        if cached is None:
            uniq, inv = np.unique(np.round(self.magnitudes.ravel(), 12), return_inverse=True)
            cached = (uniq, inv)
            self._cache["uniq"] = cached
        return cached


def make_grid(n: int, N: int, L: float = _TWO_PI) -> FrequencyGrid:
    """Build the spectral lattice; see FrequencyGrid for validation rules."""
    return FrequencyGrid(n=int(n), N=int(N), L=float(L))


def fractional_laplacian_symbol(grid: FrequencyGrid, sigma: float):
    """|xi|^(2 sigma) per mode; exactly 0 at the zero mode (no regularization)."""
    if not (np.isfinite(sigma) and sigma > 0):
        raise ConfigError(f"sigma must be positive, got {sigma!r}")
    return grid.magnitudes ** (2.0 * sigma)


def forward_transform(grid: FrequencyGrid, f_phys):
    """Physical samples -> spectral coefficients (continuum-unitary scaling)."""
    f = grid.check_shape(f_phys)
    scale = grid.dx**grid.n / _TWO_PI ** (grid.n / 2.0)
    return np.fft.fftn(f) * scale


def inverse_transform(grid: FrequencyGrid, f_hat):
    """Spectral coefficients -> physical samples."""
    fh = grid.check_shape(f_hat)
    scale = grid.N**grid.n * grid.dxi**grid.n / _TWO_PI ** (grid.n / 2.0)
    return np.fft.ifftn(fh) * scale


def l2_norm_phys(grid: FrequencyGrid, f_phys) -> float:
    """Discrete L2(dx) norm of a physical field."""
    f = grid.check_shape(f_phys)
    return float(np.sqrt((np.abs(f) ** 2).sum() * grid.dx**grid.n))


def l2_norm_spec(grid: FrequencyGrid, f_hat) -> float:
    """Discrete L2(dxi) norm of a spectrum (Parseval partner of l2_norm_phys)."""
    fh = grid.check_shape(f_hat)
    return float(np.sqrt((np.abs(fh) ** 2).sum() * grid.dxi**grid.n))


@dataclass
class FieldState:
    """Spectral coefficients of (psi, d_t psi, d_t^2 psi) at one time."""

    psi_hat: np.ndarray
    dpsi_hat: np.ndarray
    ddpsi_hat: np.ndarray
    time: float = 0.0
    real_representation: bool = False

    def validate(self, grid: FrequencyGrid, hermitian_tol: float = 1e-10):
        for arr in (self.psi_hat, self.dpsi_hat, self.ddpsi_hat):
            grid.check_shape(arr)
        if self.time < 0:
            raise ContractError(f"time must be nonnegative, got {self.time}")
        if self.real_representation:
            idx = grid.negation_index()
            for arr in (self.psi_hat, self.dpsi_hat, self.ddpsi_hat):
                dev = np.max(np.abs(np.conj(arr[idx]) - arr))
                scale = max(np.max(np.abs(arr)), 1.0)
                if dev > hermitian_tol * scale:
                    raise ContractError(
                        "real-representation state is not Hermitian-symmetric "
                        f"(deviation {dev:.3e})"
                    )
        return self

    def copy(self) -> "FieldState":
        return FieldState(
            self.psi_hat.copy(),
            self.dpsi_hat.copy(),
            self.ddpsi_hat.copy(),
            self.time,
            self.real_representation,
        )


def hermitian_deviation(grid: FrequencyGrid, f_hat) -> float:
    """max |conj(fhat(-xi)) - fhat(xi)|, 0 for spectra of real fields."""
    fh = grid.check_shape(f_hat)
    return float(np.max(np.abs(np.conj(fh[grid.negation_index()]) - fh)))


def _as_int_lambda(lam) -> int:
    lam_f = float(lam)
    lam_i = int(round(lam_f))
    if abs(lam_f - lam_i) > 1e-12 or lam_i < 1:
        raise ContractError(
            f"scaling parameter lambda={lam!r} is not representable on the "
            "integer mode lattice; choose a positive integer"
        )
    return lam_i


def scale_spectrum(grid: FrequencyGrid, f_hat, lam, rel_tol: float = 1e-13):
    """Spectral image of f(lambda x): mode k -> lambda*k, amplitude lambda^(-n/2).

    Rejects lambda when any non-negligible coefficient would leave the
    representable mode range (relative threshold ``rel_tol``).
    """
    fh = grid.check_shape(f_hat).astype(complex)
    lam_i = _as_int_lambda(lam)
    if lam_i == 1:
        return fh.copy()
    modes = grid.mode_vectors
    lo, hi = -grid.N // 2, grid.N // 2 - 1
    target = modes * lam_i
    ok = ((target >= lo) & (target <= hi)).all(axis=0)
    peak = np.max(np.abs(fh)) if fh.size else 0.0
    if peak > 0 and np.any(np.abs(fh[~ok]) > rel_tol * peak):
        worst = np.max(np.abs(fh[~ok]))
        raise ContractError(
            f"lambda={lam_i} pushes occupied modes past the Nyquist range "
            f"(max |coeff| outside representable band: {worst:.3e}); "
            "use a finer grid or smaller lambda"
        )
    out = grid.zeros()
    src = tuple(m[ok] for m in modes)
    dst = tuple(m[ok] * lam_i % grid.N for m in modes)
    flat_fh = fh[tuple(np.asarray(s) % grid.N for s in src)]
    out[dst] = flat_fh * lam_i ** (-grid.n / 2.0)
    return out


def unscale_spectrum(grid: FrequencyGrid, f_hat, lam, rel_tol: float = 1e-13):
    """Inverse of scale_spectrum: mode lambda*k -> k, amplitude lambda^(n/2).

    Coefficients not sitting on the lambda-sublattice must be negligible.
    """
    fh = grid.check_shape(f_hat).astype(complex)
    lam_i = _as_int_lambda(lam)
    if lam_i == 1:
        return fh.copy()
    modes = grid.mode_vectors
    on_lattice = (modes % lam_i == 0).all(axis=0)
    peak = np.max(np.abs(fh)) if fh.size else 0.0
    if peak > 0 and np.any(np.abs(fh[~on_lattice]) > rel_tol * peak):
        raise ContractError(
            f"spectrum has mass off the lambda={lam_i} sublattice; not an "
            "image of scale_spectrum"
        )
    out = grid.zeros()
    src = tuple(m[on_lattice] % grid.N for m in modes)
    dst = tuple((m[on_lattice] // lam_i) % grid.N for m in modes)
    out[dst] = fh[src] * lam_i ** (grid.n / 2.0)
    return out


def spatial_scale(state: FieldState, grid: FrequencyGrid, lam) -> FieldState:
    """Dilated field state psi_lambda(t, x) = psi(t, lambda x) (see module docs)."""
    state.validate(grid)
    return FieldState(
        scale_spectrum(grid, state.psi_hat, lam),
        scale_spectrum(grid, state.dpsi_hat, lam),
        scale_spectrum(grid, state.ddpsi_hat, lam),
        state.time,
        state.real_representation,
    )
