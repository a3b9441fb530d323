"""Spectral methods, exponential tilting, and heavy-tail diagnostics for
products of random matrices.

The heavy lifting lives in the compiled extension ``ldmatrix._core``; this
package re-exports its public surface.  Results are plain dicts and lists
(no numpy dependency); non-finite numbers (NaN / inf) arrive as ``None``.
"""

from ._core import (
    Ensemble,
    Model,
    NumericalError,
    ValidationError,
    __version__,
    arch2_model,
    cgf_profile,
    check_conditions,
    cumulants,
    edgeworth,
    enum_moment,
    kesten_condition,
    ldp_tail,
    log_mellin,
    lognormal_model,
    lyapunov,
    mc_moment,
    moment_bound_scan,
    rate_function,
    rde_sample,
    run,
    set_worker_threads,
    solve_alpha,
    tail_report,
    worker_threads,
)

__all__ = [
    "Ensemble",
    "Model",
    "NumericalError",
    "ValidationError",
    "__version__",
    "arch2_model",
    "cgf_profile",
    "check_conditions",
    "cumulants",
    "edgeworth",
    "enum_moment",
    "kesten_condition",
    "ldp_tail",
    "log_mellin",
    "lognormal_model",
    "lyapunov",
    "mc_moment",
    "moment_bound_scan",
    "rate_function",
    "rde_sample",
    "run",
    "set_worker_threads",
    "solve_alpha",
    "tail_report",
    "worker_threads",
]
