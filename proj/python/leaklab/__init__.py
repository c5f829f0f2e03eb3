"""Gaussian toy-video laboratory for conditional image leakage."""

from ._core import (  # noqa: F401
    ConfigError,
    DomainError,
    GaussianWorld,
    InsufficientDataError,
    NoiseSchedule,
    NumericalError,
    ScheduleKind,
    ShapeError,
    checkpoint_predict_eps,
    constant_beta,
    estimate_moments,
    gaussian_kl,
    leakage_curve,
    motion_score,
    mu_of_t,
    optimal_init,
    sample,
    sample_beta,
    timenoise_pdf,
    train,
    verify_optimality,
)

__version__ = "0.1.0"
