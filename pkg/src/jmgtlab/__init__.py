"""Fourier-spectral laboratory for the complex-valued fractional
Jordan-Moore-Gibson-Thompson (JMGT) equation of Westervelt type.

Per-mode dispersion analysis of the characteristic cubic, kernel-based
linear propagation, Picard/Duhamel nonlinear solving on the mild form, the
large-data scaling pipeline in rough spectral-weight spaces, and numerical
verification of kernel bounds, functional inequalities and sharp decay
rates.
"""

from .core import (
    FieldState,
    FrequencyGrid,
    ModelParams,
    forward_transform,
    fractional_laplacian_symbol,
    inverse_transform,
    make_grid,
    scale_spectrum,
    spatial_scale,
    unscale_spectrum,
)
from .dispersion import (
    RootTriple,
    asymptotic_roots_large,
    asymptotic_roots_small,
    characteristic_roots,
    discriminant,
    threshold_N0,
    threshold_eps0,
)
from .kernels import (
    KernelTriple,
    check_large_freq_bounds,
    check_small_freq_bounds,
    kernel_eval,
    kernel_table,
    small_freq_representation,
)
from .propagator import (
    LinearSolution,
    duhamel_apply,
    propagate_linear,
    verify_decay_prop_4_3,
    verify_decay_prop_4_4,
    verify_prop_3_2,
)
from .solver import (
    MildSolverConfig,
    NonlinearSolution,
    coupled_nonlinearities,
    method_of_lines_oracle,
    picard_solve,
    scaled_large_data_pipeline,
    verify_theorem_2_2_decay,
    westervelt_nonlinearity,
)
from .spaces import (
    decomposition_e_norm,
    e_norm,
    mixed_time_norm,
    sobolev_norm,
    uniform_decompose,
    y_weighted_norm,
)

__version__ = "0.1.0"
