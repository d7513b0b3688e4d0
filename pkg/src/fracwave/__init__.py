from __future__ import annotations

"""
Top-level package for fracwave.

Spectral-Galerkin simulation of

    ∂²ₜu + γ(−Δ)^α ∂ₜu − Δu + f(u) = g,    α ∈ (0, ½),

on boxes with Dirichlet conditions, together with numerical probes of its
dissipativity, Strichartz, smoothing and attractor properties.

Typical usage
-------------

    import fracwave as fw

    spectrum = fw.build_spectrum(fw.BoxDomain.unit(1), 64)
    u0 = fw.SpectralField.from_modes(spectrum, {(1,): 1.0})
    scenario = fw.Scenario(
        spectrum=spectrum,
        damping=fw.DampingParams(gamma=1.0, alpha=0.25),
        nonlinearity=fw.Nonlinearity.cubic(),
        u0=u0,
        T=10.0,
        dt=0.01,
    )
    traj = fw.integrate(scenario)
    traj.energy_norms()

Modules
-------
- :mod:`fracwave.spectral`   : eigenbasis, transforms, norms, projectors
- :mod:`fracwave.propagator` : exact per-mode linear flow, Duhamel steps
- :mod:`fracwave.semilinear` : nonlinear integrator and paired probes
- :mod:`fracwave.norms`      : mixed norms, fits, smoothing, Strichartz tables
- :mod:`fracwave.attractor`  : ensembles, absorbing sets, squeezing, box counting
- :mod:`fracwave.cli`        : report bundles and the acceptance suite
"""

from .api import package_version
from .exceptions import (
    ConfigLoadError,
    DomainError,
    FracwaveError,
    InsufficientDataError,
    InvalidWindowError,
    NumericalRangeError,
    PairSelectionError,
    RefinementDepthError,
    ResultsIOError,
    SpectrumMismatchError,
    StepFailure,
)
from .propagator import DampingParams, LinearPropagator, LinearState
from .semilinear import Nonlinearity, Scenario, Trajectory, integrate, integrate_many
from .spectral import BoxDomain, SpectralField, Spectrum, build_spectrum

__version__ = package_version()

__all__ = [
    "BoxDomain",
    "Spectrum",
    "SpectralField",
    "build_spectrum",
    "DampingParams",
    "LinearPropagator",
    "LinearState",
    "Nonlinearity",
    "Scenario",
    "Trajectory",
    "integrate",
    "integrate_many",
    "FracwaveError",
    "ConfigLoadError",
    "ResultsIOError",
    "DomainError",
    "SpectrumMismatchError",
    "NumericalRangeError",
    "StepFailure",
    "RefinementDepthError",
    "InvalidWindowError",
    "InsufficientDataError",
    "PairSelectionError",
    "__version__",
]
