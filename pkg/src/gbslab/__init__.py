"""Desk-scale Gaussian boson sampling with threshold detectors."""

__version__ = "0.1.0"

from gbslab._backend import BACKEND  # noqa: E402
from gbslab.state import (  # noqa: E402
    ExperimentSpec,
    GaussianState,
    InvalidStateError,
    SourceSpec,
    apply_loss,
    apply_unitary,
    build,
    reduce,
    vacuum,
    with_smss,
    with_thermal,
    with_tmss,
)
from gbslab.kernels import KernelLimitError, hafnian, permanent, torontonian  # noqa: E402
from gbslab.probability import click_probability, full_distribution  # noqa: E402

__all__ = [
    "BACKEND", "ExperimentSpec", "GaussianState", "InvalidStateError", "KernelLimitError",
    "SourceSpec", "apply_loss", "apply_unitary", "build", "click_probability",
    "full_distribution", "hafnian", "permanent", "reduce", "torontonian", "vacuum",
    "with_smss", "with_thermal", "with_tmss",
]
