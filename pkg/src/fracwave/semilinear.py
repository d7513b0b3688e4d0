from __future__ import annotations

"""
Galerkin solver for the semilinear fractionally damped wave equation

    ∂²ₜu + γ(−Δ)^α ∂ₜu − Δu + f(u) = g      on a box, u = 0 on the boundary.

The linear part is propagated exactly mode by mode (`fracwave.propagator`);
the nonlinearity P_N f(u) is evaluated pseudo-spectrally on the oversampled
grid and enters as Duhamel forcing h = g − P_N f(u).

Time stepping
-------------
One step is an exponential Runge–Kutta method of order two:

1. h₀ = h(uₙ);
2. exponential-Euler predictors with constant forcing h₀ at dt/2 and dt;
3. h re-evaluated at both predicted states;
4. corrector: exact Duhamel quadrature through the three Lobatto samples.

`integrate` advances base windows of length dt. Inside a window a step is
accepted while the continuation inequality holds: with y the L⁵ₜL¹⁰ₓ norm
over the step, σ = q + 1 and C₀ = ‖f(u)‖_{L¹L²} / y^σ, the step is kept if
y ≤ 2ε with ε = ½(1/(2C₀))^{1/(σ−1)}. Otherwise the window is re-run with
halved steps. Samples are only emitted on the base grid, so trajectories of
the same scenario always share their sample times.

Design principles
-----------------
- Scenarios and trajectories are immutable values.
- Several trajectories can be advanced in lockstep (shared refinement
  decisions) so that paired measurements see identical discretizations.
- Diagnostic logging goes through the module logger; nothing here writes
  files.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from .exceptions import (
    DomainError,
    InvalidWindowError,
    NumericalRangeError,
    RefinementDepthError,
    SpectrumMismatchError,
    StepFailure,
)
from .propagator import DampingParams, LinearPropagator, LinearState
from .spectral import (
    SpectralField,
    Spectrum,
    build_spectrum,
    coeffs_to_grid,
    grid_lp_norm,
    grid_to_coeffs,
    required_oversampling,
    transfer_field,
)


logger = logging.getLogger(__name__)

NONLINEARITY_KINDS = ("zero", "odd_power", "cubic_minus_linear", "custom_polynomial")

Q_RANGE = (0.0, 4.0)

DEFAULT_BLOWUP_FACTOR = 1e6
DEFAULT_MAX_REFINEMENT = 8


# ---------------------------------------------------------------------------
# Nonlinearity
# ---------------------------------------------------------------------------


class AssumptionCheck(NamedTuple):
    """Result of :meth:`Nonlinearity.check_assumptions`."""

    growth_constant: float
    min_product: float
    dissipative: bool


@dataclass(frozen=True)
class Nonlinearity:
    """
    Scalar nonlinearity f with growth exponent q ∈ [0, 4).

    Kinds
    -----
    zero
        f ≡ 0.
    odd_power
        f(s) = s|s|^q, so that |f'(s)| = (q+1)|s|^q; ``u³`` is q = 2.
        Requires q ≥ 1 (Lipschitz f).
    cubic_minus_linear
        f(s) = s³ − s, dissipative with M = ¼.
    custom_polynomial
        f(s) = Σ_j a_j s^j with ascending ``coefficients``; q = degree − 1.

    Attributes
    ----------
    kind:
        One of the kinds above.
    q:
        Growth exponent of f'. Ignored (derived) for the polynomial kinds.
    coefficients:
        Ascending coefficients for ``custom_polynomial``.
    M:
        Dissipativity constant: f(s)s ≥ −M is expected.
    """

    kind: str = "zero"
    q: float = 0.0
    coefficients: Tuple[float, ...] = ()
    M: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in NONLINEARITY_KINDS:
            raise DomainError(
                f"Unknown nonlinearity kind {self.kind!r}; expected one of {NONLINEARITY_KINDS}"
            )
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind == "zero":
            q = 0.0
        elif self.kind == "cubic_minus_linear":
            q = 2.0
        elif self.kind == "custom_polynomial":
            poly = Polynomial(coeffs).trim() if coeffs else Polynomial([0.0])
            q = float(max(poly.degree() - 1, 0))
        else:
            q = float(self.q)
            if q < 1.0:
                raise DomainError(f"odd_power needs q >= 1, got {q}")
        lo, hi = Q_RANGE
        if not lo <= q < hi:
            raise DomainError(f"Growth exponent q must lie in [0, 4), got {q}")
        if self.M < 0.0:
            raise DomainError(f"Dissipativity constant M must be >= 0, got {self.M}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "M", float(self.M))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls("zero")

    @classmethod
    def cubic(cls) -> "Nonlinearity":
        return cls("odd_power", q=2.0)

    @classmethod
    def odd_power(cls, q: float) -> "Nonlinearity":
        return cls("odd_power", q=q)

    @classmethod
    def cubic_minus_linear(cls) -> "Nonlinearity":
        return cls("cubic_minus_linear", M=0.25)

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], M: float = 0.0) -> "Nonlinearity":
        return cls("custom_polynomial", coefficients=tuple(coefficients), M=M)

    # -- evaluation ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        if self.kind == "custom_polynomial":
            return not any(self.coefficients)
        return self.kind == "zero"

    @property
    def polynomial_degree(self) -> Optional[int]:
        """Degree of f when it is a polynomial, else None."""
        if self.kind == "zero":
            return 0
        if self.kind == "cubic_minus_linear":
            return 3
        if self.kind == "custom_polynomial":
            return Polynomial(self.coefficients or (0.0,)).trim().degree()
        if float(self.q).is_integer() and int(self.q) % 2 == 0:
            return int(self.q) + 1
        return None

    @property
    def oversampling(self) -> int:
        """
        Smallest grid factor m for which P_N f(u) has no aliasing on
        band-limited input (mN + 1 > (deg + 1)N / 2); non-polynomial kinds use
        `required_oversampling`.
        """
        deg = self.polynomial_degree
        if deg is None:
            return required_oversampling(self.q)
        return max(2, int(np.ceil((deg + 1) / 2.0)))

    def f(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "cubic_minus_linear":
            return s * s * s - s
        if self.kind == "custom_polynomial":
            return Polynomial(self.coefficients or (0.0,))(s)
        if self.q == 2.0:
            return s * s * s
        return s * np.abs(s) ** self.q

    def F(self, s: np.ndarray) -> np.ndarray:
        """Antiderivative F(s) = ∫₀^s f, closed form for every kind."""
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "cubic_minus_linear":
            s2 = s * s
            return 0.25 * s2 * s2 - 0.5 * s2
        if self.kind == "custom_polynomial":
            return Polynomial(self.coefficients or (0.0,)).integ()(s)
        return np.abs(s) ** (self.q + 2.0) / (self.q + 2.0)

    def df(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "cubic_minus_linear":
            return 3.0 * s * s - 1.0
        if self.kind == "custom_polynomial":
            return Polynomial(self.coefficients or (0.0,)).deriv()(s)
        return (self.q + 1.0) * np.abs(s) ** self.q

    def check_assumptions(self, s_max: float = 10.0, samples: int = 4001) -> AssumptionCheck:
        """
        Check growth and dissipativity on the sample grid [−s_max, s_max].

        Returns the smallest C with |f'(s)| ≤ C(1 + |s|^q) on the grid, the
        minimum of f(s)s and whether it stays above −M.
        """
        s = np.linspace(-float(s_max), float(s_max), int(samples))
        growth = np.abs(self.df(s)) / (1.0 + np.abs(s) ** self.q)
        product = self.f(s) * s
        min_product = float(product.min())
        tol = 1e-12 * max(1.0, float(np.abs(product).max()))
        return AssumptionCheck(
            growth_constant=float(growth.max()),
            min_product=min_product,
            dissipative=bool(min_product >= -self.M - tol),
        )


# ---------------------------------------------------------------------------
# Scenario / Trajectory
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Problem data of one Galerkin run.

    Attributes
    ----------
    spectrum, damping, nonlinearity:
        Discretization and equation.
    u0, u1:
        Initial displacement and velocity (``u1`` defaults to 0).
    forcing:
        Time-independent g (defaults to 0).
    T, dt:
        Horizon and base step, T ≥ dt > 0.
    oversample:
        Grid factor m for the nonlinearity; defaults to the dealiasing factor.
    stride:
        Emit every ``stride``-th base step (the last step is always emitted).
    epsilon:
        Fixed continuation threshold; None uses the value derived from the
        measured nonlinear bound on each step.
    blowup_factor:
        A step fails when ‖ξ‖²_E exceeds this factor times the energy scale.
    max_refinement:
        Maximum number of step halvings per window.
    workers:
        scipy.fft worker count (speed only).
    """

    spectrum: Spectrum
    damping: DampingParams
    nonlinearity: Nonlinearity
    u0: SpectralField
    T: float
    dt: float
    u1: Optional[SpectralField] = None
    forcing: Optional[SpectralField] = None
    oversample: Optional[int] = None
    stride: int = 1
    epsilon: Optional[float] = None
    blowup_factor: float = DEFAULT_BLOWUP_FACTOR
    max_refinement: int = DEFAULT_MAX_REFINEMENT
    workers: Optional[int] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for name in ("u0", "u1", "forcing"):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, SpectralField.zeros(self.spectrum))
            elif value.spectrum is not self.spectrum:
                raise SpectrumMismatchError(f"{name} is not defined on the scenario spectrum")
        if not self.dt > 0.0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not self.T >= self.dt:
            raise DomainError(f"T must be >= dt, got T={self.T}, dt={self.dt}")
        if self.oversample is None:
            object.__setattr__(self, "oversample", self.nonlinearity.oversampling)
        elif int(self.oversample) < 1:
            raise DomainError(f"oversample must be >= 1, got {self.oversample}")
        if int(self.stride) < 1:
            raise DomainError(f"stride must be >= 1, got {self.stride}")
        if self.epsilon is not None and not self.epsilon > 0.0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.max_refinement) < 0:
            raise DomainError("max_refinement must be >= 0")
        object.__setattr__(self, "oversample", int(self.oversample))
        object.__setattr__(self, "stride", int(self.stride))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def propagator(self) -> LinearPropagator:
        cached = self.__dict__.get("_propagator")
        if cached is None:
            cached = LinearPropagator(self.spectrum, self.damping)
            self.__dict__["_propagator"] = cached
        return cached

    @property
    def n_steps(self) -> int:
        return max(1, int(np.floor(self.T / self.dt + 1e-9)))

    @property
    def initial_state(self) -> LinearState:
        return LinearState.from_fields(self.u0, self.u1)

    @property
    def quadrature_weight(self) -> float:
        return self.spectrum.quadrature_weight(self.oversample)

    def _share_propagator(self, other: "Scenario") -> "Scenario":
        if other.spectrum is self.spectrum and other.damping == self.damping:
            other.__dict__["_propagator"] = self.propagator
        return other

    def with_changes(self, **changes) -> "Scenario":
        """`dataclasses.replace` that shares the propagator (and its weight cache)."""
        return self._share_propagator(replace(self, **changes))

    def with_initial(
        self, u0: SpectralField, u1: Optional[SpectralField] = None
    ) -> "Scenario":
        return self.with_changes(u0=u0, u1=u1 if u1 is not None else SpectralField.zeros(self.spectrum))

    def with_state(self, state: LinearState) -> "Scenario":
        return self.with_initial(state.u(self.spectrum), state.ut(self.spectrum))

    def energy_scale(self) -> float:
        """max(‖ξ₀‖²_E, ‖g‖²_{H⁻¹}, 1): the reference for the blow-up guard."""
        lam = self.spectrum.eigenvalues
        xi = float(np.dot(lam, self.u0.coeffs ** 2) + np.dot(self.u1.coeffs, self.u1.coeffs))
        g = float(np.dot(self.forcing.coeffs ** 2, 1.0 / lam))
        return max(xi, g, 1.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Sampled solution ξ(tᵢ) = (u(tᵢ), ∂ₜu(tᵢ)).

    Attributes
    ----------
    scenario:
        The scenario that produced the samples.
    times:
        Strictly increasing sample times.
    positions, velocities:
        Arrays of shape (n_samples, count).
    energies:
        Lyapunov energy ℰ at every sample.
    l10:
        Spatial ‖u(tᵢ)‖_{L¹⁰} on the scenario grid.
    refined_windows:
        Number of base windows that needed step halving.
    lyapunov_nonincreasing:
        Whether ℰ never increased across accepted steps, refined sub-steps
        included.
    """

    scenario: Scenario = field(repr=False)
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energies: np.ndarray
    l10: np.ndarray
    refined_windows: int = 0
    lyapunov_nonincreasing: bool = True

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise DomainError("Trajectory needs at least one sample time")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("Trajectory times must be strictly increasing")
        expected = (times.size, self.scenario.spectrum.count)
        for name in ("positions", "velocities"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != expected:
                raise SpectrumMismatchError(f"{name} has shape {arr.shape}, expected {expected}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def spectrum(self) -> Spectrum:
        return self.scenario.spectrum

    def __len__(self) -> int:
        return int(self.times.size)

    def state(self, i: int) -> LinearState:
        return LinearState(self.positions[i].copy(), self.velocities[i].copy())

    @property
    def final_state(self) -> LinearState:
        return self.state(-1)

    def energy_norms(self, s: float = 0.0) -> np.ndarray:
        """‖ξ(tᵢ)‖ in H^{1+s} × H^s for every sample (s = 0 is the E-norm)."""
        lam = self.spectrum.eigenvalues
        pos = np.sum(lam ** (1.0 + s) * self.positions ** 2, axis=1)
        vel = np.sum(lam ** s * self.velocities ** 2, axis=1)
        return np.sqrt(pos + vel)

    def dissipation_rate(self) -> np.ndarray:
        """γ‖(−Δ)^{α/2} ∂ₜu(tᵢ)‖² for every sample."""
        params = self.scenario.damping
        weights = self.spectrum.eigenvalues ** params.alpha
        return params.gamma * np.sum(weights * self.velocities ** 2, axis=1)

    def window(self, a: float, b: float) -> np.ndarray:
        """
        Indices of the samples in [a, b].

        Raises
        ------
        InvalidWindowError
            If the window is reversed or leaves the sampled interval.
        """
        tol = 1e-9 * max(1.0, abs(float(self.times[-1])))
        if b < a or a < self.times[0] - tol or b > self.times[-1] + tol:
            raise InvalidWindowError(
                f"Window [{a}, {b}] is outside [{self.times[0]}, {self.times[-1]}]"
            )
        return np.nonzero((self.times >= a - tol) & (self.times <= b + tol))[0]


# ---------------------------------------------------------------------------
# Nonlinear evaluation
# ---------------------------------------------------------------------------


def _apply_f(nl: Nonlinearity, values: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        out = nl.f(values)
    if not np.all(np.isfinite(out)):
        raise NumericalRangeError("Nonlinearity produced non-finite values")
    return out


def eval_nonlinearity(
    u: SpectralField,
    nl: Nonlinearity,
    oversample: Optional[int] = None,
    *,
    workers: Optional[int] = None,
) -> SpectralField:
    """
    P_N f(u) by grid evaluation and projection.

    Parameters
    ----------
    u:
        Band-limited field.
    nl:
        Nonlinearity.
    oversample:
        Grid factor; defaults to ``nl.oversampling`` (alias-free for
        polynomial f).

    Raises
    ------
    NumericalRangeError
        If f overflows on the grid values.
    """
    if nl.is_zero:
        return SpectralField.zeros(u.spectrum)
    m = nl.oversampling if oversample is None else int(oversample)
    values = coeffs_to_grid(u.spectrum, u.coeffs, m, workers=workers)
    coeffs = grid_to_coeffs(u.spectrum, _apply_f(nl, values), m, workers=workers)
    return u.with_coeffs(coeffs)


def lyapunov_energy(state: LinearState, scenario: Scenario) -> float:
    """
    ℰ(ξ) = ½‖∂ₜu‖² + ½‖∇u‖² + (F(u), 1) − (g, u).

    (F(u), 1) is the grid quadrature on the scenario grid, which is the
    discrete pairing under which the Galerkin system conserves ℰ up to
    damping.
    """
    return _Integrator(scenario).energy(state, None)


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


class _StepRecord(NamedTuple):
    state: LinearState
    grid: np.ndarray
    y: float
    f_norm: float


def continuation_accepts(
    y: float, f_norm: float, q: float, epsilon: Optional[float] = None
) -> Tuple[bool, float]:
    """
    Continuation test for one step.

    The step is accepted when y ≤ 2ε with ε = ½(1/(2C₀))^{1/(σ−1)}. C₀ is
    measured on the step itself, C₀ = ‖f(u)‖_{L¹L²} / y^σ, so y ≤ C₀y^σ + ε
    holds trivially and the test reduces to y ≥ 2‖f(u)‖_{L¹L²}: the
    nonlinear forcing over the step must stay below half the solution's
    L⁵L¹⁰ size. A fixed ``epsilon`` replaces the derived threshold.

    Parameters
    ----------
    y:
        ‖u‖_{L⁵L¹⁰} over the step.
    f_norm:
        ‖f(u)‖_{L¹L²} over the step.
    q:
        Growth exponent; σ = q + 1.
    epsilon:
        Fixed threshold overriding the derived one.

    Returns
    -------
    (accepted, ε)
    """
    sigma = q + 1.0
    if epsilon is not None:
        return bool(y <= 2.0 * epsilon), float(epsilon)
    if sigma <= 1.0 or f_norm == 0.0:
        return True, float("inf")
    if y == 0.0:
        return True, 0.0
    c0 = f_norm / y ** sigma
    eps = 0.5 * (1.0 / (2.0 * c0)) ** (1.0 / (sigma - 1.0))
    return bool(y <= 2.0 * eps), float(eps)


class _Integrator:
    """Stepping kernel bound to one scenario (grid, forcing, thresholds)."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.spectrum = scenario.spectrum
        self.prop = scenario.propagator
        self.nl = scenario.nonlinearity
        self.m = scenario.oversample
        self.weight = scenario.quadrature_weight
        self.g = scenario.forcing.coeffs
        self.threshold = scenario.blowup_factor * scenario.energy_scale()

    def grid(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs_to_grid(self.spectrum, coeffs, self.m, workers=self.scenario.workers)

    def forcing(self, values: np.ndarray) -> Tuple[np.ndarray, float]:
        """h = g − P_N f(u) and ‖P_N f(u)‖."""
        if self.nl.is_zero:
            return self.g, 0.0
        pf = grid_to_coeffs(
            self.spectrum, _apply_f(self.nl, values), self.m, workers=self.scenario.workers
        )
        return self.g - pf, float(np.linalg.norm(pf))

    def energy(self, state: LinearState, values: Optional[np.ndarray]) -> float:
        if values is None:
            values = self.grid(state.position)
        lam = self.spectrum.eigenvalues
        kinetic = 0.5 * float(np.dot(state.velocity, state.velocity))
        elastic = 0.5 * float(np.dot(lam, state.position ** 2))
        potential = self.weight * float(np.sum(self.nl.F(values))) if not self.nl.is_zero else 0.0
        return kinetic + elastic + potential - float(np.dot(self.g, state.position))

    def step(
        self, state: LinearState, values: np.ndarray, dt: float, t0: float = 0.0
    ) -> _StepRecord:
        h0, f0 = self.forcing(values)
        half = self.prop.step_constant(state, h0, 0.5 * dt)
        full = self.prop.step_constant(state, h0, dt)
        g_half = self.grid(half.position)
        g_full = self.grid(full.position)
        h_half, f_half = self.forcing(g_half)
        h_full, f_full = self.forcing(g_full)
        new = self.prop.step_duhamel(state, np.stack([h0, h_half, h_full]), dt)

        window = (t0, t0 + dt)
        if not new.is_finite():
            raise StepFailure("Non-finite state after step", window=window)
        size = float(np.dot(self.spectrum.eigenvalues, new.position ** 2))
        size += float(np.dot(new.velocity, new.velocity))
        if size > self.threshold:
            raise StepFailure(
                f"Energy {size:.3e} exceeds blow-up threshold {self.threshold:.3e}",
                window=window,
            )

        g_end = self.grid(new.position)
        l10 = [grid_lp_norm(v, self.weight, 10.0) for v in (values, g_half, g_end)]
        y = (dt / 6.0 * (l10[0] ** 5 + 4.0 * l10[1] ** 5 + l10[2] ** 5)) ** 0.2
        f_norm = dt / 6.0 * (f0 + 4.0 * f_half + f_full)
        return _StepRecord(new, g_end, y, f_norm)

    def accepts(self, record: _StepRecord) -> bool:
        ok, _ = continuation_accepts(
            record.y, record.f_norm, self.nl.q, self.scenario.epsilon
        )
        return ok


def step(state: LinearState, scenario: Scenario, dt: Optional[float] = None) -> LinearState:
    """
    One exponential RK2 step of the Galerkin system.

    Raises
    ------
    StepFailure
        If the state becomes non-finite or exceeds the blow-up threshold.
    """
    kernel = _Integrator(scenario)
    dt = scenario.dt if dt is None else float(dt)
    if not state.is_finite():
        raise DomainError("step needs a finite state")
    return kernel.step(state, kernel.grid(state.position), dt).state


class _WindowResult(NamedTuple):
    states: List[LinearState]
    grids: List[np.ndarray]
    energies: List[float]
    # per member: ℰ rose on some accepted sub-step
    rises: List[bool]
    depth: int


def _advance_window(
    kernels: Sequence[_Integrator],
    states: List[LinearState],
    grids: List[np.ndarray],
    energies: List[float],
    t0: float,
    dt: float,
    max_depth: int,
) -> _WindowResult:
    """
    Advance every member over [t0, t0 + dt], halving the sub-step until all
    sub-steps pass the blow-up guard and the continuation test. ℰ is
    compared across every accepted sub-step, not only at the window ends.
    """
    depth = 0
    while True:
        n_sub = 2 ** depth
        h = dt / n_sub
        cur_states, cur_grids = list(states), list(grids)
        cur_energies = list(energies)
        rises = [False] * len(kernels)
        ok = True
        try:
            for j in range(n_sub):
                t = t0 + j * h
                for i, kernel in enumerate(kernels):
                    rec = kernel.step(cur_states[i], cur_grids[i], h, t)
                    if not kernel.accepts(rec):
                        ok = False
                        break
                    cur_states[i], cur_grids[i] = rec.state, rec.grid
                    e_new = kernel.energy(rec.state, rec.grid)
                    if e_new > cur_energies[i] + 1e-9 * max(abs(cur_energies[i]), 1.0):
                        rises[i] = True
                    cur_energies[i] = e_new
                if not ok:
                    break
        except StepFailure as exc:
            logger.debug("Step failure in [%g, %g]: %s", t0, t0 + dt, exc)
            ok = False
        if ok:
            return _WindowResult(cur_states, cur_grids, cur_energies, rises, depth)
        depth += 1
        if depth > max_depth:
            raise RefinementDepthError(
                f"Step refinement exceeded depth {max_depth} in window [{t0}, {t0 + dt}] "
                "(blow-up suspected)",
                window=(t0, t0 + dt),
            )
        logger.debug("Refining window [%g, %g] to %d sub-steps", t0, t0 + dt, 2 ** depth)


def integrate_lockstep(scenarios: Sequence[Scenario]) -> List[Trajectory]:
    """
    Integrate several scenarios with shared step-refinement decisions.

    All scenarios must share spectrum, T and dt; a window is refined for all
    members as soon as one member needs it, so paired trajectories see the
    same sequence of step sizes.
    """
    if not scenarios:
        return []
    ref = scenarios[0]
    for sc in scenarios[1:]:
        if sc.spectrum is not ref.spectrum or sc.dt != ref.dt or sc.n_steps != ref.n_steps:
            raise SpectrumMismatchError("Lockstep scenarios must share spectrum, T and dt")

    kernels = [_Integrator(sc) for sc in scenarios]
    states = [sc.initial_state for sc in scenarios]
    if not all(s.is_finite() for s in states):
        raise DomainError("Initial data must be finite")
    grids = [k.grid(s.position) for k, s in zip(kernels, states)]
    energies_now = [k.energy(s, g) for k, s, g in zip(kernels, states, grids)]

    n_steps, stride, dt = ref.n_steps, ref.stride, ref.dt
    n_members = len(scenarios)
    times = [0.0]
    pos = [[s.position] for s in states]
    vel = [[s.velocity] for s in states]
    ener = [[e] for e in energies_now]
    l10 = [[grid_lp_norm(g, k.weight, 10.0)] for g, k in zip(grids, kernels)]
    monotone = [True] * n_members
    refined = 0

    for n in range(n_steps):
        t0 = n * dt
        window = _advance_window(
            kernels, states, grids, energies_now, t0, dt, ref.max_refinement
        )
        states, grids, energies_now = window.states, window.grids, window.energies
        if window.depth:
            refined += 1
        emit = (n + 1) % stride == 0 or n + 1 == n_steps
        for i, kernel in enumerate(kernels):
            if window.rises[i]:
                monotone[i] = False
            if emit:
                pos[i].append(states[i].position)
                vel[i].append(states[i].velocity)
                ener[i].append(energies_now[i])
                l10[i].append(grid_lp_norm(grids[i], kernel.weight, 10.0))
        if emit:
            times.append((n + 1) * dt)

    if refined:
        logger.info("%d of %d windows needed step refinement", refined, n_steps)
    return [
        Trajectory(
            scenario=sc,
            times=np.asarray(times),
            positions=np.asarray(pos[i]),
            velocities=np.asarray(vel[i]),
            energies=np.asarray(ener[i]),
            l10=np.asarray(l10[i]),
            refined_windows=refined,
            lyapunov_nonincreasing=monotone[i],
        )
        for i, sc in enumerate(scenarios)
    ]


def integrate(scenario: Scenario) -> Trajectory:
    """
    Integrate a scenario on [0, n_steps·dt].

    Raises
    ------
    RefinementDepthError
        If a window cannot be advanced within ``max_refinement`` halvings.
    """
    return integrate_lockstep([scenario])[0]


def integrate_many(
    scenarios: Sequence[Scenario], threads: Optional[int] = None
) -> List[Trajectory]:
    """
    Integrate independent scenarios concurrently; results keep input order.
    """
    if threads is not None and threads <= 1:
        return [integrate(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(integrate, scenarios))


def map_concurrently(
    fn: Callable, items: Sequence, threads: Optional[int] = None
) -> list:
    """Ordered `ThreadPoolExecutor.map` with a sequential path for one thread."""
    if threads is not None and threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Paired measurements
# ---------------------------------------------------------------------------


def _energy_norm(spectrum: Spectrum, pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    lam = spectrum.eigenvalues
    return np.sqrt(np.sum(lam * pos ** 2, axis=-1) + np.sum(vel ** 2, axis=-1))


class LipschitzReport(NamedTuple):
    """
    Growth of the separation between two trajectories.

    Attributes
    ----------
    separation:
        ‖ξ₁ − ξ₂‖_E at t = 0.
    ratio_energy:
        sup_t ‖ξ₁(t) − ξ₂(t)‖_E / ‖ξ₁ − ξ₂‖_E.
    ratio_strichartz:
        ‖u₁ − u₂‖_{L⁵(0,T;L¹⁰)} / ‖ξ₁ − ξ₂‖_E.
    growth_exponent:
        Smallest K with ratio(t) ≤ e^{Kt} at every sample (≥ 0).
    """

    separation: float
    ratio_energy: float
    ratio_strichartz: float
    growth_exponent: float


def lipschitz_probe(
    xi1: LinearState, xi2: LinearState, scenario: Scenario, T: Optional[float] = None
) -> LipschitzReport:
    """
    Measure the Lipschitz constant of S_t on [0, T] along one pair of data.

    Zero separation returns zero ratios.
    """
    sc = scenario if T is None else scenario.with_changes(T=float(T))
    spectrum = sc.spectrum
    diff0 = xi1 - xi2
    sep = float(_energy_norm(spectrum, diff0.position, diff0.velocity))
    if sep == 0.0:
        return LipschitzReport(0.0, 0.0, 0.0, 0.0)

    a, b = integrate_lockstep([sc.with_state(xi1), sc.with_state(xi2)])
    dpos = a.positions - b.positions
    dvel = a.velocities - b.velocities
    ratio_t = _energy_norm(spectrum, dpos, dvel) / sep

    values = coeffs_to_grid(spectrum, dpos, sc.oversample, workers=sc.workers)
    weight = sc.quadrature_weight
    l10 = np.array([grid_lp_norm(v, weight, 10.0) for v in values])
    strichartz = float(simpson(l10 ** 5, x=a.times)) ** 0.2 if len(a) > 1 else 0.0

    t = a.times[1:]
    growth = np.log(np.maximum(ratio_t[1:], 1e-300)) / t if t.size else np.zeros(0)
    return LipschitzReport(
        separation=sep,
        ratio_energy=float(ratio_t.max()),
        ratio_strichartz=strichartz / sep,
        growth_exponent=float(max(growth.max(), 0.0)) if growth.size else 0.0,
    )


def galerkin_discrepancy(scenario: Scenario, n_fine: Optional[int] = None) -> float:
    """
    sup_t ‖ξ_N(t) − P_N ξ_{N'}(t)‖_E between the scenario and the same
    problem on N' = ``n_fine`` modes per axis (default 2N).

    Initial data and forcing are transferred to the finer spectrum unchanged.
    """
    coarse = scenario.spectrum
    n_fine = 2 * coarse.n_per_axis if n_fine is None else int(n_fine)
    if n_fine <= coarse.n_per_axis:
        raise DomainError(f"n_fine must exceed {coarse.n_per_axis}, got {n_fine}")
    fine = build_spectrum(coarse.domain, n_fine)
    fine_scenario = Scenario(
        spectrum=fine,
        damping=scenario.damping,
        nonlinearity=scenario.nonlinearity,
        u0=transfer_field(scenario.u0, fine),
        u1=transfer_field(scenario.u1, fine),
        forcing=transfer_field(scenario.forcing, fine),
        T=scenario.T,
        dt=scenario.dt,
        stride=scenario.stride,
        epsilon=scenario.epsilon,
        blowup_factor=scenario.blowup_factor,
        max_refinement=scenario.max_refinement,
        workers=scenario.workers,
    )
    a, b = integrate_many([scenario, fine_scenario], threads=1)
    idx = np.array([fine.index_of(k) for k in coarse.modes])
    dpos = a.positions - b.positions[:, idx]
    dvel = a.velocities - b.velocities[:, idx]
    return float(_energy_norm(coarse, dpos, dvel).max())


__all__ = [
    "NONLINEARITY_KINDS",
    "AssumptionCheck",
    "Nonlinearity",
    "Scenario",
    "Trajectory",
    "LipschitzReport",
    "eval_nonlinearity",
    "lyapunov_energy",
    "continuation_accepts",
    "step",
    "integrate",
    "integrate_lockstep",
    "integrate_many",
    "map_concurrently",
    "lipschitz_probe",
    "galerkin_discrepancy",
]
