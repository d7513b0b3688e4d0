from __future__ import annotations

"""
Dirichlet eigenbasis of boxes and the spectral field machinery.

This module provides the explicit eigenbasis of the Dirichlet Laplacian on
d-dimensional boxes (d = 1, 2, 3):

- `BoxDomain`     : side lengths of the box.
- `Spectrum`      : multi-indices k, eigenvalues λ_k = Σ (k_i π / L_i)², sorted
                    nondecreasingly with lexicographic tie breaks.
- `SpectralField` : coefficients on the modes of a spectrum.
- `GridField`     : values on the oversampled interior collocation grid.

Conventions
-----------
- Eigenfunctions are L²-orthonormal:
  e_k(x) = Π_i sqrt(2/L_i) sin(k_i π x_i / L_i).
- Sobolev norms use the spectral convention ‖u‖²_{H^s} = Σ λ_k^s c_k².
- The grid with oversampling m has M_i = m·N interior points per axis,
  x_j = j L_i / (M_i + 1), j = 1..M_i. The transform pair is the orthonormal
  type-I discrete sine transform along every axis, so grid quadrature with
  weight Π L_i / (M_i + 1) satisfies Parseval exactly for fields on the
  first N modes.

Spectra are immutable once built and can be shared between threads.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from .exceptions import DomainError, SpectrumMismatchError


ModeIndex = Tuple[int, ...]

FRAC_POWER_RANGE = (-1.0, 2.0)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxDomain:
    """
    Box (0, L_1) × ... × (0, L_d) with d ∈ {1, 2, 3}.

    Attributes
    ----------
    lengths:
        Positive side lengths, one per axis.
    """

    lengths: Tuple[float, ...]

    def __post_init__(self) -> None:
        lengths = tuple(float(x) for x in self.lengths)
        if not 1 <= len(lengths) <= 3:
            raise DomainError(f"Box dimension must be 1, 2 or 3, got {len(lengths)}")
        if any(not np.isfinite(x) or x <= 0.0 for x in lengths):
            raise DomainError(f"Box lengths must be positive and finite, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def unit(cls, dims: int) -> "BoxDomain":
        """Unit interval, square or cube."""
        return cls((1.0,) * dims)

    @property
    def dims(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


def check_mode(k: Sequence[int], dims: int) -> ModeIndex:
    """Validate a multi-index: d positive integers."""
    mode = tuple(int(x) for x in k)
    if len(mode) != dims:
        raise SpectrumMismatchError(f"Mode {mode} does not have {dims} components")
    if any(x < 1 for x in mode):
        raise DomainError(f"Mode components must be >= 1, got {mode}")
    return mode


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Truncated Dirichlet spectrum of a box.

    Attributes
    ----------
    domain:
        The box.
    n_per_axis:
        Number of modes kept per axis (count = n_per_axis ** d).
    modes:
        Integer array of shape (count, d), in spectral order.
    eigenvalues:
        λ_k for every mode, nondecreasing.
    tensor_index:
        Flat C-order position of each mode inside the (N,)*d tensor of
        per-axis sine coefficients.
    """

    domain: BoxDomain
    n_per_axis: int
    modes: np.ndarray
    eigenvalues: np.ndarray
    tensor_index: np.ndarray

    @property
    def dims(self) -> int:
        return self.domain.dims

    @property
    def count(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @cached_property
    def sqrt_eigenvalues(self) -> np.ndarray:
        out = np.sqrt(self.eigenvalues)
        out.setflags(write=False)
        return out

    @cached_property
    def _positions(self) -> Dict[ModeIndex, int]:
        return {tuple(int(x) for x in k): i for i, k in enumerate(self.modes)}

    def index_of(self, k: Sequence[int]) -> int:
        """Spectral-order position of the multi-index ``k``."""
        mode = check_mode(k, self.dims)
        try:
            return self._positions[mode]
        except KeyError:
            raise SpectrumMismatchError(
                f"Mode {mode} is outside the truncated spectrum (N={self.n_per_axis})"
            ) from None

    def power(self, s: float) -> np.ndarray:
        """λ_k^s for every mode."""
        return self.eigenvalues ** float(s)

    # -- tensor layout -------------------------------------------------------

    def to_tensor(self, coeffs: np.ndarray) -> np.ndarray:
        """Scatter spectral-order coefficients (..., count) into (..., N, ..., N)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.count:
            raise SpectrumMismatchError(
                f"Expected {self.count} coefficients, got {coeffs.shape[-1]}"
            )
        lead = coeffs.shape[:-1]
        flat = np.empty(lead + (self.count,), dtype=float)
        flat[..., self.tensor_index] = coeffs
        return flat.reshape(lead + (self.n_per_axis,) * self.dims)

    def from_tensor(self, tensor: np.ndarray) -> np.ndarray:
        """Gather (..., N, ..., N) per-axis coefficients into spectral order."""
        lead = tensor.shape[: tensor.ndim - self.dims]
        flat = np.asarray(tensor).reshape(lead + (self.count,))
        return flat[..., self.tensor_index]

    # -- collocation grid ----------------------------------------------------

    def grid_shape(self, oversample: int) -> Tuple[int, ...]:
        return (int(oversample) * self.n_per_axis,) * self.dims

    def grid_axes(self, oversample: int) -> Tuple[np.ndarray, ...]:
        """Interior collocation points per axis: x_j = j L / (M + 1)."""
        M = int(oversample) * self.n_per_axis
        j = np.arange(1, M + 1, dtype=float)
        return tuple(j * L / (M + 1) for L in self.domain.lengths)

    def quadrature_weight(self, oversample: int) -> float:
        M = int(oversample) * self.n_per_axis
        return float(np.prod([L / (M + 1) for L in self.domain.lengths]))

    def _dst_scale(self, oversample: int) -> float:
        M = int(oversample) * self.n_per_axis
        return float(np.prod([np.sqrt((M + 1) / L) for L in self.domain.lengths]))


def build_spectrum(domain: BoxDomain, n_per_axis: int) -> Spectrum:
    """
    Enumerate the first ``n_per_axis`` modes per axis of a box.

    Eigenvalues are exactly Σ_i (k_i π / L_i)²; modes are sorted by eigenvalue
    with ties broken lexicographically on k, which makes the leading projector
    deterministic.

    Parameters
    ----------
    domain:
        The box.
    n_per_axis:
        Modes per axis, at least 1.

    Returns
    -------
    Spectrum
    """
    n = int(n_per_axis)
    if n < 1:
        raise DomainError(f"n_per_axis must be >= 1, got {n_per_axis}")
    d = domain.dims
    lengths = np.asarray(domain.lengths)

    ks = np.indices((n,) * d).reshape(d, -1).T + 1
    lam = ((ks * np.pi / lengths) ** 2).sum(axis=1)
    # degenerate eigenvalues may differ in the last bits depending on the
    # summation order; quantize before sorting so ties are exact
    key = np.round(lam / lam.max(), 12)
    order = np.lexsort(tuple(ks[:, i] for i in reversed(range(d))) + (key,))

    modes = ks[order].astype(np.int64)
    eigenvalues = lam[order]
    tensor_index = order.astype(np.int64)
    for arr in (modes, eigenvalues, tensor_index):
        arr.setflags(write=False)
    return Spectrum(
        domain=domain,
        n_per_axis=n,
        modes=modes,
        eigenvalues=eigenvalues,
        tensor_index=tensor_index,
    )


def required_oversampling(q: float) -> int:
    """
    Grid oversampling that removes aliasing from the degree-(q+1) nonlinearity.

    m = 2 handles q ≤ 3; q ∈ (3, 4) needs m = 3.
    """
    return 2 if q <= 3.0 else 3


def basis_function(domain: BoxDomain, k: Sequence[int], *coords: np.ndarray) -> np.ndarray:
    """
    Evaluate e_k at points given per axis (broadcast together).

    >>> float(basis_function(BoxDomain((1.0,)), (1,), np.array(0.5)))  # doctest: +ELLIPSIS
    1.414...
    """
    mode = check_mode(k, domain.dims)
    if len(coords) != domain.dims:
        raise SpectrumMismatchError(f"Expected {domain.dims} coordinate arrays")
    out = np.ones(np.broadcast(*coords).shape)
    for ki, L, x in zip(mode, domain.lengths, coords):
        out = out * np.sqrt(2.0 / L) * np.sin(ki * np.pi * np.asarray(x) / L)
    return out


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    A function u = Σ c_k e_k on the modes of a spectrum.

    Attributes
    ----------
    spectrum:
        The spectrum the coefficients refer to.
    coeffs:
        One real coefficient per mode, in spectral order.
    """

    spectrum: Spectrum
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.spectrum.count,):
            raise SpectrumMismatchError(
                f"Field has shape {coeffs.shape}, spectrum has {self.spectrum.count} modes"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, spectrum: Spectrum) -> "SpectralField":
        return cls(spectrum, np.zeros(spectrum.count))

    @classmethod
    def from_modes(
        cls, spectrum: Spectrum, values: Mapping[Sequence[int], float]
    ) -> "SpectralField":
        """Build a field from a mapping multi-index → coefficient."""
        coeffs = np.zeros(spectrum.count)
        for k, c in values.items():
            coeffs[spectrum.index_of(k)] = float(c)
        return cls(spectrum, coeffs)

    @classmethod
    def random(
        cls,
        spectrum: Spectrum,
        rng: np.random.Generator,
        *,
        decay: float = 0.0,
        norm: Optional[float] = None,
    ) -> "SpectralField":
        """
        Gaussian coefficients scaled by λ_k^(-decay/2), optionally normalized
        to a given L² norm.
        """
        coeffs = rng.standard_normal(spectrum.count) * spectrum.power(-0.5 * decay)
        if norm is not None:
            size = np.linalg.norm(coeffs)
            if size > 0:
                coeffs = coeffs * (float(norm) / size)
        return cls(spectrum, coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.spectrum, coeffs)

    def norm(self) -> float:
        """L² norm (Parseval)."""
        return float(np.sqrt(np.dot(self.coeffs, self.coeffs)))

    def sobolev_norm(self, s: float) -> float:
        return sobolev_norm(self, s)

    def to_grid(self, oversample: int = 2, *, workers: Optional[int] = None) -> "GridField":
        return to_grid(self, oversample, workers=workers)

    def _check_same(self, other: "SpectralField") -> None:
        if other.spectrum is not self.spectrum:
            raise SpectrumMismatchError("Fields live on different spectra")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)


@dataclass(frozen=True, eq=False)
class GridField:
    """
    Point values on the (m·N)^d interior collocation grid.

    Attributes
    ----------
    spectrum:
        The spectrum whose grid is used.
    oversample:
        Oversampling factor m ≥ 1.
    values:
        Array of shape ``spectrum.grid_shape(oversample)``.
    """

    spectrum: Spectrum
    oversample: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if int(self.oversample) < 1:
            raise DomainError(f"Oversampling must be >= 1, got {self.oversample}")
        values = np.asarray(self.values, dtype=float)
        expected = self.spectrum.grid_shape(self.oversample)
        if values.shape != expected:
            raise SpectrumMismatchError(
                f"Grid has shape {values.shape}, expected {expected}"
            )
        object.__setattr__(self, "values", values)

    @property
    def quadrature_weight(self) -> float:
        return self.spectrum.quadrature_weight(self.oversample)

    def from_grid(self, *, workers: Optional[int] = None) -> SpectralField:
        return from_grid(self, workers=workers)

    def lp_norm(self, p: float) -> float:
        """Grid quadrature L^p norm (p = inf gives the max norm)."""
        return grid_lp_norm(self.values, self.quadrature_weight, p)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def coeffs_to_grid(
    spectrum: Spectrum,
    coeffs: np.ndarray,
    oversample: int = 2,
    *,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Batched inverse transform: coefficients (..., count) → grid values.

    Leading dimensions are treated as a batch; the transform runs over the
    trailing d axes.
    """
    m = int(oversample)
    if m < 1:
        raise DomainError(f"Oversampling must be >= 1, got {oversample}")
    tensor = spectrum.to_tensor(coeffs)
    lead = tensor.shape[: tensor.ndim - spectrum.dims]
    padded = np.zeros(lead + spectrum.grid_shape(m))
    padded[(Ellipsis,) + (slice(0, spectrum.n_per_axis),) * spectrum.dims] = tensor
    axes = tuple(range(-spectrum.dims, 0))
    values = sfft.dstn(padded, type=1, norm="ortho", axes=axes, workers=workers)
    return values * spectrum._dst_scale(m)


def grid_to_coeffs(
    spectrum: Spectrum,
    values: np.ndarray,
    oversample: int = 2,
    *,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Batched forward transform with projection onto the first N modes.

    This is the discrete L² projection: for grid functions it returns the
    coefficients of the modes the spectrum keeps and discards the rest.
    """
    m = int(oversample)
    values = np.asarray(values, dtype=float)
    shape = spectrum.grid_shape(m)
    if values.shape[values.ndim - spectrum.dims:] != shape:
        raise SpectrumMismatchError(
            f"Grid has trailing shape {values.shape[-spectrum.dims:]}, expected {shape}"
        )
    axes = tuple(range(-spectrum.dims, 0))
    full = sfft.dstn(values, type=1, norm="ortho", axes=axes, workers=workers)
    keep = full[(Ellipsis,) + (slice(0, spectrum.n_per_axis),) * spectrum.dims]
    return spectrum.from_tensor(keep / spectrum._dst_scale(m))


def to_grid(
    u: SpectralField, oversample: int = 2, *, workers: Optional[int] = None
) -> GridField:
    """
    Evaluate a field on the m-oversampled collocation grid.

    Parameters
    ----------
    u:
        Field to evaluate.
    oversample:
        Oversampling factor m ≥ 1.
    workers:
        Optional scipy.fft worker count (speed only).
    """
    values = coeffs_to_grid(u.spectrum, u.coeffs, oversample, workers=workers)
    return GridField(u.spectrum, int(oversample), values)


def from_grid(v: GridField, *, workers: Optional[int] = None) -> SpectralField:
    """Project grid values back onto the spectrum (exact inverse of `to_grid`)."""
    coeffs = grid_to_coeffs(v.spectrum, v.values, v.oversample, workers=workers)
    return SpectralField(v.spectrum, coeffs)


def grid_lp_norm(values: np.ndarray, weight: float, p: float) -> float:
    """Rectangle-rule L^p norm of grid values with uniform cell weight."""
    a = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((weight * np.sum(a ** p)) ** (1.0 / p))


def lp_norm(
    u: SpectralField, p: float, oversample: int = 2, *, workers: Optional[int] = None
) -> float:
    """‖u‖_{L^p} by grid quadrature on the m-oversampled grid."""
    return to_grid(u, oversample, workers=workers).lp_norm(p)


# ---------------------------------------------------------------------------
# Spectral operators
# ---------------------------------------------------------------------------


def sobolev_norm(u: SpectralField, s: float) -> float:
    """‖u‖_{H^s} = (Σ λ_k^s c_k²)^{1/2}."""
    w = u.spectrum.power(s)
    return float(np.sqrt(np.dot(w, u.coeffs * u.coeffs)))


def frac_laplacian(u: SpectralField, s: float) -> SpectralField:
    """
    Apply (−Δ)^s: c_k ← λ_k^s c_k.

    ``s`` must lie in [−1, 2], the range used anywhere in the package.
    """
    lo, hi = FRAC_POWER_RANGE
    if not lo <= s <= hi:
        raise DomainError(f"Fractional power must lie in [{lo}, {hi}], got {s}")
    return u.with_coeffs(u.spectrum.power(s) * u.coeffs)


def cluster_mask(spectrum: Spectrum, lam: float) -> np.ndarray:
    """Boolean mask of the modes with √λ_k ∈ [lam, lam + 1)."""
    if lam < 0:
        raise DomainError(f"Cluster window start must be >= 0, got {lam}")
    root = spectrum.sqrt_eigenvalues
    return (root >= lam) & (root < lam + 1.0)


def cluster_projector(u: SpectralField, lam: float) -> SpectralField:
    """Spectral cluster projector P_λ = 1_{√(−Δ) ∈ [λ, λ+1)}."""
    mask = cluster_mask(u.spectrum, lam)
    return u.with_coeffs(np.where(mask, u.coeffs, 0.0))


def transfer_field(u: SpectralField, target: Spectrum) -> SpectralField:
    """
    Re-express ``u`` on another spectrum of the same box, matching modes by
    multi-index. Modes absent from ``target`` are dropped, new modes are 0.
    """
    if target.domain != u.spectrum.domain:
        raise SpectrumMismatchError("Spectra belong to different domains")
    coeffs = np.zeros(target.count)
    n = min(target.n_per_axis, u.spectrum.n_per_axis)
    keep = np.all(u.spectrum.modes <= n, axis=1)
    for k, c in zip(u.spectrum.modes[keep], u.coeffs[keep]):
        coeffs[target.index_of(k)] = c
    return SpectralField(target, coeffs)


def leading_projector(
    u: SpectralField, n: int, *, complement: bool = False
) -> SpectralField:
    """
    Orthoprojector P_N onto the first ``n`` modes in spectral order.

    With ``complement=True`` returns Q_N u = u − P_N u.
    """
    n = int(n)
    if not 0 <= n <= u.spectrum.count:
        raise DomainError(f"Projector size must lie in [0, {u.spectrum.count}], got {n}")
    coeffs = u.coeffs.copy()
    if complement:
        coeffs[:n] = 0.0
    else:
        coeffs[n:] = 0.0
    return u.with_coeffs(coeffs)


__all__ = [
    "BoxDomain",
    "ModeIndex",
    "Spectrum",
    "SpectralField",
    "GridField",
    "build_spectrum",
    "required_oversampling",
    "basis_function",
    "check_mode",
    "coeffs_to_grid",
    "grid_to_coeffs",
    "to_grid",
    "from_grid",
    "grid_lp_norm",
    "lp_norm",
    "sobolev_norm",
    "frac_laplacian",
    "cluster_mask",
    "cluster_projector",
    "leading_projector",
    "transfer_field",
]
