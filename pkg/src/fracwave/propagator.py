from __future__ import annotations

"""
Exact per-mode propagation of the linear fractionally damped wave equation.

Every Dirichlet mode of u'' + γ(−Δ)^α u' − Δu = h evolves as the scalar
oscillator

    c'' + 2σ c' + μ c = h_k(t),      σ = γ μ^α / 2,  μ = λ_k,

whose homogeneous flow is the exact 2×2 matrix exponential of
[[0, 1], [−μ, −2σ]]. With δ = σ² − μ (a quarter of the discriminant
D = γ²μ^{2α} − 4μ) the matrix is

    e^{−σt} (C(t) I + S(t) [[σ, 1], [−μ, −σ]])

with (C, S) = (cos ωt, sin ωt / ω) when underdamped (ω² = −δ),
(cosh κt, sinh κt / κ) when overdamped (κ² = δ) and (1, t) at the critical
point |D| < ε_D·4μ. The overdamped branch is evaluated through its real roots
r₊ = −μ/(σ+κ), r₋ = −(σ+κ) so that nothing overflows or cancels.

Forcing enters through Duhamel's formula; the integral of the exact kernel
against the Lagrange interpolant of h at Gauss–Lobatto nodes is computed once
per step size (product quadrature), so constant forcing is integrated exactly
and smooth forcing with order ≥ 4 for three nodes.

The change of variables v = e^{σt}u turns the damped oscillator into the
undamped one v'' + (μ − σ²)v = 0; `transformed_oscillator` and
`semigroup_frac_heat` expose both halves of that factorization.

Per-mode tables are immutable after construction and safe to share.
"""

from dataclasses import dataclass, field
import logging
from typing import Dict, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DomainError, SpectrumMismatchError
from .spectral import SpectralField, Spectrum


logger = logging.getLogger(__name__)

Branch = Literal["overdamped", "critical", "underdamped"]

OVERDAMPED, CRITICAL, UNDERDAMPED = 0, 1, 2
_BRANCH_NAMES: Dict[int, Branch] = {
    OVERDAMPED: "overdamped",
    CRITICAL: "critical",
    UNDERDAMPED: "underdamped",
}

CRITICAL_TOLERANCE = 1e-9

_GAUSS_POINTS = 16
_MAX_PANELS = 512


# ---------------------------------------------------------------------------
# Parameters and per-mode data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DampingParams:
    """
    Damping coefficient γ > 0 and fractional order α ∈ (0, ½).

    ``strict=False`` relaxes the checks to γ ≥ 0 and α ∈ [0, 1); it exists
    for limiting-case tests (the undamped wave) and is never produced by the
    config layer.
    """

    gamma: float
    alpha: float
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        gamma, alpha = float(self.gamma), float(self.alpha)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha", alpha)
        if self.strict:
            if not gamma > 0.0:
                raise DomainError(f"gamma must be > 0, got {gamma}")
            if not 0.0 < alpha < 0.5:
                raise DomainError(f"alpha must lie in (0, 0.5), got {alpha}")
        else:
            if gamma < 0.0 or not 0.0 <= alpha < 1.0:
                raise DomainError(f"Invalid relaxed damping parameters ({gamma}, {alpha})")

    @classmethod
    def undamped(cls, alpha: float = 0.25) -> "DampingParams":
        """γ = 0: the pure wave equation (limiting case, tests only)."""
        return cls(0.0, alpha, strict=False)

    def decay_rate(self, mu: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """σ(μ) = γ μ^α / 2."""
        return 0.5 * self.gamma * np.power(mu, self.alpha)


@dataclass(frozen=True)
class ModePropagator:
    """
    Closed-form data of one mode c'' + γμ^α c' + μc = 0.

    Attributes
    ----------
    mu:
        Eigenvalue.
    branch:
        "overdamped", "critical" or "underdamped" (sign of D).
    sigma:
        Decay σ = γμ^α/2.
    discriminant:
        D = γ²μ^{2α} − 4μ.
    omega:
        √(μ − γ²μ^{2α}/4) when underdamped, else nan.
    roots:
        (r₊, r₋) when overdamped, (−σ, −σ) when critical, else None.
    """

    mu: float
    branch: Branch
    sigma: float
    discriminant: float
    omega: float = float("nan")
    roots: Optional[Tuple[float, float]] = None

    def matrix(self, t: float) -> np.ndarray:
        """Exact flow matrix exp(t [[0, 1], [−μ, −2σ]])."""
        code = {v: k for k, v in _BRANCH_NAMES.items()}[self.branch]
        kappa = 0.0
        if self.branch == "overdamped":
            kappa = 0.5 * np.sqrt(self.discriminant)
        entries = _flow_entries(
            np.array([self.mu]),
            np.array([self.sigma]),
            np.array([code]),
            np.array([kappa]),
            np.array([0.0 if np.isnan(self.omega) else self.omega]),
            t,
        )
        return np.array([[entries.m11[0], entries.m12[0]], [entries.m21[0], entries.m22[0]]])


def classify_mode(
    mu: float, params: DampingParams, *, eps_d: float = CRITICAL_TOLERANCE
) -> ModePropagator:
    """
    Classify the roots of r² + γμ^α r + μ = 0.

    Parameters
    ----------
    mu:
        Eigenvalue, > 0.
    params:
        Damping parameters.
    eps_d:
        Relative tolerance: |D| < eps_d·4μ is treated as the repeated root.

    Returns
    -------
    ModePropagator
    """
    mu = float(mu)
    if not mu > 0.0:
        raise DomainError(f"Eigenvalue must be > 0, got {mu}")
    sigma = float(params.decay_rate(mu))
    disc = params.gamma ** 2 * mu ** (2.0 * params.alpha) - 4.0 * mu
    if abs(disc) < eps_d * 4.0 * mu:
        return ModePropagator(mu, "critical", sigma, disc, roots=(-sigma, -sigma))
    if disc < 0.0:
        return ModePropagator(mu, "underdamped", sigma, disc, omega=0.5 * np.sqrt(-disc))
    kappa = 0.5 * np.sqrt(disc)
    r_plus = -mu / (sigma + kappa)
    return ModePropagator(mu, "overdamped", sigma, disc, roots=(r_plus, -(sigma + kappa)))


class FlowEntries(NamedTuple):
    """Entries of the per-mode 2×2 flow matrix, each an array over modes."""

    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray


def _flow_entries(
    mu: np.ndarray,
    sigma: np.ndarray,
    branch: np.ndarray,
    kappa: np.ndarray,
    omega: np.ndarray,
    t: float,
) -> FlowEntries:
    t = float(t)
    m11 = np.empty_like(mu)
    m12 = np.empty_like(mu)
    m22 = np.empty_like(mu)

    under = branch == UNDERDAMPED
    if under.any():
        s, w = sigma[under], omega[under]
        damp = np.exp(-s * t)
        cos, sin_w = np.cos(w * t), np.sin(w * t) / w
        m11[under] = damp * (cos + s * sin_w)
        m12[under] = damp * sin_w
        m22[under] = damp * (cos - s * sin_w)

    over = branch == OVERDAMPED
    if over.any():
        s, k, m = sigma[over], kappa[over], mu[over]
        r_plus = -m / (s + k)
        r_minus = -(s + k)
        e_plus = np.exp(r_plus * t)
        e_minus = np.exp(r_minus * t)
        g = e_plus * (-np.expm1(-2.0 * k * t)) / (2.0 * k)
        m12[over] = g
        m11[over] = e_plus - r_plus * g
        m22[over] = e_minus + r_plus * g

    crit = branch == CRITICAL
    if crit.any():
        s = sigma[crit]
        damp = np.exp(-s * t)
        m11[crit] = damp * (1.0 + s * t)
        m12[crit] = damp * t
        m22[crit] = damp * (1.0 - s * t)

    return FlowEntries(m11, m12, -mu * m12, m22)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearState:
    """
    Phase-space point ξ = (u, ∂ₜu) as per-mode pairs (c_k, ċ_k).

    Attributes
    ----------
    position:
        Coefficients c_k of u.
    velocity:
        Coefficients ċ_k of ∂ₜu.
    """

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float)
        vel = np.asarray(self.velocity, dtype=float)
        if pos.ndim != 1 or pos.shape != vel.shape:
            raise SpectrumMismatchError(
                f"Position {pos.shape} and velocity {vel.shape} must be matching 1-D arrays"
            )
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)

    @classmethod
    def zeros(cls, count: int) -> "LinearState":
        return cls(np.zeros(count), np.zeros(count))

    @classmethod
    def from_fields(cls, u0: SpectralField, u1: Optional[SpectralField] = None) -> "LinearState":
        vel = np.zeros_like(u0.coeffs) if u1 is None else u1.coeffs
        return cls(u0.coeffs.copy(), np.array(vel, dtype=float))

    @property
    def count(self) -> int:
        return int(self.position.shape[0])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.velocity)))

    def u(self, spectrum: Spectrum) -> SpectralField:
        return SpectralField(spectrum, self.position)

    def ut(self, spectrum: Spectrum) -> SpectralField:
        return SpectralField(spectrum, self.velocity)

    def __add__(self, other: "LinearState") -> "LinearState":
        return LinearState(self.position + other.position, self.velocity + other.velocity)

    def __sub__(self, other: "LinearState") -> "LinearState":
        return LinearState(self.position - other.position, self.velocity - other.velocity)

    def __mul__(self, scalar: float) -> "LinearState":
        return LinearState(float(scalar) * self.position, float(scalar) * self.velocity)

    __rmul__ = __mul__


def lobatto_nodes(n: int) -> np.ndarray:
    """
    Gauss–Lobatto nodes on [0, 1]: endpoints plus the roots of P'_{n−1}.

    >>> lobatto_nodes(3).tolist()
    [0.0, 0.5, 1.0]
    """
    if n < 3:
        raise DomainError(f"At least 3 Lobatto nodes are required, got {n}")
    interior = np.polynomial.legendre.Legendre.basis(n - 1).deriv().roots()
    x = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    return 0.5 * (x + 1.0)


def _lagrange_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values ℓ_j(x_q) of the Lagrange basis on ``nodes``; shape (len(x), len(nodes))."""
    out = np.ones((x.shape[0], nodes.shape[0]))
    for j, xj in enumerate(nodes):
        for i, xi in enumerate(nodes):
            if i != j:
                out[:, j] *= (x - xi) / (xj - xi)
    return out


# ---------------------------------------------------------------------------
# Propagator
# ---------------------------------------------------------------------------


class LinearPropagator:
    """
    Exact linear flow on every mode of a spectrum.

    Parameters
    ----------
    spectrum:
        Spectrum whose eigenvalues are the μ of the mode oscillators.
    params:
        Damping parameters.
    eps_d:
        Critical-branch tolerance (relative).

    Notes
    -----
    Duhamel product-quadrature weights are cached per (dt, node count); the
    cache is filled lazily and never invalidated because the table itself is
    immutable.
    """

    def __init__(
        self,
        spectrum: Spectrum,
        params: DampingParams,
        *,
        eps_d: float = CRITICAL_TOLERANCE,
    ) -> None:
        self.spectrum = spectrum
        self.params = params
        self.eps_d = float(eps_d)

        mu = spectrum.eigenvalues
        self.mu = mu
        self.sigma = np.asarray(params.decay_rate(mu), dtype=float)
        disc = params.gamma ** 2 * mu ** (2.0 * params.alpha) - 4.0 * mu
        self.discriminant = disc

        branch = np.where(disc < 0.0, UNDERDAMPED, OVERDAMPED)
        branch = np.where(np.abs(disc) < self.eps_d * 4.0 * mu, CRITICAL, branch)
        self.branch = branch.astype(np.int8)
        self.kappa = np.where(self.branch == OVERDAMPED, 0.5 * np.sqrt(np.abs(disc)), 0.0)
        self.omega = np.where(self.branch == UNDERDAMPED, 0.5 * np.sqrt(np.abs(disc)), 0.0)
        for arr in (self.sigma, self.branch, self.kappa, self.omega):
            arr.setflags(write=False)

        self._weights: Dict[Tuple[float, int], Tuple[np.ndarray, np.ndarray]] = {}

    # -- tables --------------------------------------------------------------

    @property
    def count(self) -> int:
        return self.spectrum.count

    def mode(self, index: int) -> ModePropagator:
        """Scalar closed-form data for one mode."""
        return classify_mode(float(self.mu[index]), self.params, eps_d=self.eps_d)

    def branch_names(self) -> Sequence[Branch]:
        return [_BRANCH_NAMES[int(b)] for b in self.branch]

    def mode_matrix(self, t: float) -> FlowEntries:
        """Flow-matrix entries at time ``t`` for every mode."""
        return _flow_entries(self.mu, self.sigma, self.branch, self.kappa, self.omega, t)

    def _check(self, state: LinearState) -> None:
        if state.count != self.count:
            raise SpectrumMismatchError(
                f"State has {state.count} modes, spectrum has {self.count}"
            )

    # -- homogeneous flow ----------------------------------------------------

    def step_homogeneous(self, state: LinearState, dt: float) -> LinearState:
        """
        Apply the exact homogeneous flow for time ``dt`` > 0.

        Satisfies step(dt₁)∘step(dt₂) = step(dt₁ + dt₂) up to roundoff.
        """
        if not dt > 0.0:
            raise DomainError(f"Step size must be > 0, got {dt}")
        self._check(state)
        m = self.mode_matrix(dt)
        return LinearState(
            m.m11 * state.position + m.m12 * state.velocity,
            m.m21 * state.position + m.m22 * state.velocity,
        )

    def mode_energy_dissipation(self, state: LinearState, dt: float) -> np.ndarray:
        """
        Per-mode ∫₀^dt γμ^α ċ(s)² ds along the homogeneous flow.

        Evaluated with composite Gauss–Legendre quadrature fine enough to
        resolve the oscillation; the result closes the exact linear energy
        law E(dt) − E(0) + dissipated = 0 to roundoff.
        """
        self._check(state)
        s, w = self._panel_quadrature(dt)
        total = np.zeros(self.count)
        for sq, wq in zip(s, w):
            m = self.mode_matrix(sq)
            vel = m.m21 * state.position + m.m22 * state.velocity
            total += wq * vel * vel
        return 2.0 * self.sigma * total

    # -- forcing -------------------------------------------------------------

    def _panel_quadrature(self, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        rate = float(np.max(self.omega + self.sigma + self.kappa)) if self.count else 0.0
        panels = int(np.ceil(rate * dt / 2.0)) + 1
        if panels > _MAX_PANELS:
            logger.warning(
                "Duhamel quadrature capped at %d panels (rate*dt=%.3g)", _MAX_PANELS, rate * dt
            )
            panels = _MAX_PANELS
        x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
        edges = np.linspace(0.0, dt, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        return s, ws

    def duhamel_weights(self, dt: float, n_nodes: int = 3) -> Tuple[np.ndarray, np.ndarray]:
        """
        Product-quadrature weights for ∫₀^dt M(dt − s)(0, h(s)) ds.

        Returns
        -------
        (w_pos, w_vel):
            Arrays of shape (n_nodes, count) such that the forced increment
            is Σ_j w_pos[j]·h_j and Σ_j w_vel[j]·h_j for samples h_j at the
            Lobatto nodes ``dt * lobatto_nodes(n_nodes)``.
        """
        key = (float(dt), int(n_nodes))
        cached = self._weights.get(key)
        if cached is not None:
            return cached
        nodes = lobatto_nodes(n_nodes)
        s, ws = self._panel_quadrature(dt)
        basis = _lagrange_basis(nodes, s / dt)
        w_pos = np.zeros((n_nodes, self.count))
        w_vel = np.zeros((n_nodes, self.count))
        for q in range(s.shape[0]):
            m = self.mode_matrix(dt - s[q])
            w_pos += np.outer(ws[q] * basis[q], m.m12)
            w_vel += np.outer(ws[q] * basis[q], m.m22)
        w_pos.setflags(write=False)
        w_vel.setflags(write=False)
        self._weights[key] = (w_pos, w_vel)
        return w_pos, w_vel

    def step_duhamel(
        self,
        state: LinearState,
        forcing: Union[np.ndarray, Sequence[SpectralField]],
        dt: float,
    ) -> LinearState:
        """
        Exact homogeneous step plus the Duhamel integral of the forcing.

        Parameters
        ----------
        state:
            State at the start of the step.
        forcing:
            Samples of h at the Gauss–Lobatto nodes of the step, either an
            array of shape (n, count) or a sequence of n fields; n ≥ 3.
        dt:
            Step size, > 0.
        """
        if isinstance(forcing, np.ndarray):
            samples = np.asarray(forcing, dtype=float)
        else:
            samples = np.stack([f.coeffs for f in forcing])
        if samples.ndim != 2 or samples.shape[1] != self.count or samples.shape[0] < 3:
            raise SpectrumMismatchError(
                f"Forcing samples must have shape (n>=3, {self.count}), got {samples.shape}"
            )
        out = self.step_homogeneous(state, dt)
        w_pos, w_vel = self.duhamel_weights(dt, samples.shape[0])
        return LinearState(
            out.position + np.sum(w_pos * samples, axis=0),
            out.velocity + np.sum(w_vel * samples, axis=0),
        )

    def step_constant(self, state: LinearState, h: np.ndarray, dt: float) -> LinearState:
        """
        Step with time-constant forcing, using the closed-form particular
        solution h/μ: ξ(dt) = M(dt)(ξ − (h/μ, 0)) + (h/μ, 0).
        """
        if not dt > 0.0:
            raise DomainError(f"Step size must be > 0, got {dt}")
        self._check(state)
        h = np.asarray(h, dtype=float)
        m = self.mode_matrix(dt)
        eq = h / self.mu
        pos = state.position - eq
        return LinearState(
            m.m11 * pos + m.m12 * state.velocity + eq,
            m.m21 * pos + m.m22 * state.velocity,
        )

    def equilibrium(self, g: np.ndarray) -> LinearState:
        """Steady state (g_k/μ_k, 0) of the linear problem."""
        return LinearState(np.asarray(g, dtype=float) / self.mu, np.zeros(self.count))

    # -- change of variables -------------------------------------------------

    def semigroup_frac_heat(self, u: SpectralField, t: float) -> SpectralField:
        return semigroup_frac_heat(u, t, self.params)

    def to_transformed(self, state: LinearState) -> LinearState:
        """(u, u') at t = 0 ↦ (v, v') with v = e^{σt}u: v' = u' + σu."""
        self._check(state)
        return LinearState(state.position.copy(), state.velocity + self.sigma * state.position)

    def transformed_oscillator(self, vstate: LinearState, dt: float) -> LinearState:
        """
        Exact flow of v'' + (μ − σ²)v = 0, the transformed equation without
        damping (frequency √(μ − γ²μ^{2α}/4)).
        """
        self._check(vstate)
        t = float(dt)
        v0, w0 = vstate.position, vstate.velocity
        c = np.empty(self.count)
        s = np.empty(self.count)
        sd = np.empty(self.count)  # derivative of s
        cd = np.empty(self.count)  # derivative of c

        under = self.branch == UNDERDAMPED
        w = self.omega[under]
        c[under], s[under] = np.cos(w * t), np.sin(w * t) / w
        cd[under], sd[under] = -w * np.sin(w * t), np.cos(w * t)

        over = self.branch == OVERDAMPED
        k = self.kappa[over]
        c[over], s[over] = np.cosh(k * t), np.sinh(k * t) / k
        cd[over], sd[over] = k * np.sinh(k * t), np.cosh(k * t)

        crit = self.branch == CRITICAL
        c[crit], s[crit] = 1.0, t
        cd[crit], sd[crit] = 0.0, 1.0

        return LinearState(c * v0 + s * w0, cd * v0 + sd * w0)

    def from_transformed(self, vstate: LinearState, t: float) -> LinearState:
        """(v, v') at time t ↦ (u, u') = e^{−σt}(v, v' − σv)."""
        self._check(vstate)
        damp = np.exp(-self.sigma * float(t))
        return LinearState(
            damp * vstate.position,
            damp * (vstate.velocity - self.sigma * vstate.position),
        )

    # -- squeezing oracle ----------------------------------------------------

    def squeezing_bound(self, t: float = 1.0) -> Tuple[float, LinearState]:
        """
        Exact sup over ξ of ‖M(t)ξ‖_{E_α} / ‖ξ‖_E for the linear flow.

        Returns the bound and a unit-E-norm direction attaining it.
        """
        m = self.mode_matrix(t)
        root = np.sqrt(self.mu)
        mats = np.empty((self.count, 2, 2))
        mats[:, 0, 0] = m.m11
        mats[:, 0, 1] = root * m.m12
        mats[:, 1, 0] = m.m21 / root
        mats[:, 1, 1] = m.m22
        _, sv, vh = np.linalg.svd(mats)
        gains = self.mu ** (0.5 * self.params.alpha) * sv[:, 0]
        i = int(np.argmax(gains))
        pos = np.zeros(self.count)
        vel = np.zeros(self.count)
        pos[i] = vh[i, 0, 0] / root[i]
        vel[i] = vh[i, 0, 1]
        return float(gains[i]), LinearState(pos, vel)


def linear_squeezing_bound(
    spectrum: Spectrum, params: DampingParams, t: float = 1.0
) -> Tuple[float, LinearState]:
    """Functional form of :meth:`LinearPropagator.squeezing_bound`."""
    return LinearPropagator(spectrum, params).squeezing_bound(t)


def semigroup_frac_heat(u: SpectralField, t: float, params: DampingParams) -> SpectralField:
    """
    Apply e^{−(γ/2)(−Δ)^α t}: c_k ← e^{−(γ/2)λ_k^α t} c_k.

    A contraction on every H^s; ``t`` must be ≥ 0.
    """
    if t < 0.0:
        raise DomainError(f"Semigroup time must be >= 0, got {t}")
    sigma = params.decay_rate(u.spectrum.eigenvalues)
    return u.with_coeffs(np.exp(-sigma * float(t)) * u.coeffs)


# ---------------------------------------------------------------------------
# Operator A
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorA:
    """
    Integer-frequency surrogate of √(−Δ − (γ²/4)(−Δ)^{2α}).

    Attributes
    ----------
    frequencies:
        a_k = ⌊√(m² − γ²m^{4α}/4)⌋ with m = ⌊√λ_k⌋, clamped at 0.
    split:
        Number of low modes; beyond it consecutive cluster frequencies
        differ by at most 1 (the gap condition of the high-mode analysis).
    """

    frequencies: np.ndarray
    split: int


def _cluster_frequency(m: np.ndarray, params: DampingParams) -> np.ndarray:
    m = m.astype(float)
    rad = m * m - 0.25 * params.gamma ** 2 * m ** (4.0 * params.alpha)
    return np.floor(np.sqrt(np.maximum(rad, 0.0))).astype(np.int64)


def operator_a(
    spectrum: Spectrum, params: DampingParams, *, split: Optional[int] = None
) -> OperatorA:
    """
    Build operator A on a spectrum.

    Parameters
    ----------
    split:
        Low/high split index (number of low modes). Default: the smallest
        index after which the cluster map m ↦ a(m) is nondecreasing with
        increments ≤ 1 over the truncated range.
    """
    m = np.floor(spectrum.sqrt_eigenvalues).astype(np.int64)
    freq = _cluster_frequency(m, params)
    if split is None:
        levels = np.arange(int(m.min()), int(m.max()) + 1)
        a_levels = _cluster_frequency(levels, params)
        steps = np.diff(a_levels)
        bad = np.nonzero((steps < 0) | (steps > 1))[0]
        start_level = int(levels[bad[-1] + 1]) if bad.size else int(levels[0])
        split = int(np.searchsorted(m, start_level, side="left"))
    elif not 0 <= split <= spectrum.count:
        raise DomainError(f"split must lie in [0, {spectrum.count}], got {split}")
    freq.setflags(write=False)
    return OperatorA(frequencies=freq, split=int(split))


def operator_a_frequencies(
    spectrum: Spectrum, params: DampingParams, split: Optional[int] = None
) -> Tuple[np.ndarray, int]:
    """Integer frequencies a_k and the low/high split index."""
    op = operator_a(spectrum, params, split=split)
    return op.frequencies, op.split


def apply_operator_A(
    u: SpectralField,
    t: float,
    operator: OperatorA,
    aux: Optional[SpectralField] = None,
) -> Tuple[SpectralField, SpectralField]:
    """
    Real form of e^{itA}: rotate each (c_k, aux_k) pair by the angle a_k·t.

    The pair represents the complex coefficient c_k + i·aux_k; with integer
    frequencies the action is exactly 2π-periodic in t.

    Returns
    -------
    (real part, imaginary part) as fields.
    """
    if operator.frequencies.shape[0] != u.spectrum.count:
        raise SpectrumMismatchError("Operator A does not match the field's spectrum")
    imag = np.zeros_like(u.coeffs) if aux is None else aux.coeffs
    theta = operator.frequencies * np.mod(float(t), 2.0 * np.pi)
    cos, sin = np.cos(theta), np.sin(theta)
    re = cos * u.coeffs - sin * imag
    im = sin * u.coeffs + cos * imag
    return u.with_coeffs(re), u.with_coeffs(im)


__all__ = [
    "Branch",
    "DampingParams",
    "ModePropagator",
    "FlowEntries",
    "LinearState",
    "LinearPropagator",
    "OperatorA",
    "classify_mode",
    "lobatto_nodes",
    "linear_squeezing_bound",
    "semigroup_frac_heat",
    "operator_a",
    "operator_a_frequencies",
    "apply_operator_A",
]
