"""Optimization of nonuniform Fourier sampling schemes for 1D discrete signals."""

from .fourier import (
    Signal,
    canonicalize,
    gram_closed_form,
    gram_partial,
    min_distance,
    nuft_adjoint,
    nuft_adjoint_deriv,
    nuft_forward,
    nuft_matrix,
    torus_dist,
)
from .reconstruct import (
    Reconstructor,
    back_projection,
    pseudo_inverse,
    q_factor,
    reconstruct,
    rr_factor,
    tikhonov,
)
from .objective import (
    BackProjectionPool,
    ObjectiveEval,
    ObjectiveSpec,
    Residual,
    cost,
    cost_gradient,
    cost_gradient_fd,
    cost_terms,
    gradient_decay_bound,
    residual,
)
from .analysis import (
    Certificate,
    CountScaling,
    LandscapeGrid,
    PsdProfile,
    average_psd,
    certify_spurious_minima,
    deviation_constants,
    minimizer_count_scaling,
    scan_landscape,
)
from .optimize import (
    MetricInterp,
    NumericsError,
    OptimizerConfig,
    Trajectory,
    evaluate_scheme,
    run_gd,
    run_lbfgs,
    run_sgd,
    run_var_metric,
)
from .signals import (
    RectangleModel,
    gaussian_bump,
    high_freq_cosine,
    load_dataset,
    low_freq_sine,
    rectangle_dataset,
    save_dataset,
)

__version__ = "0.1.0"
