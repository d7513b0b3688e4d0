from __future__ import annotations

"""
Norms and estimate diagnostics.

Everything in this module is a pure function of immutable inputs (fields,
states, trajectories):

- energy norms on E = H¹₀ × L², E₁ = H² × H¹₀ and E_α = H^{1+α} × H^α;
- spatial L¹⁰ and mixed L⁵ₜL¹⁰ₓ norms with a refinement guard;
- spectral-cluster quotients ‖P_λu‖_{L⁵} / (λ^{2/5}‖u‖);
- exponential / power-law rate fits (dissipation, smoothing);
- the energy-identity residual and the uniform-in-time Strichartz table.

Fits never raise on degenerate data; they return a `RateFit` whose
``valid`` flag is False. Only fits with too few points are refused.
"""

from dataclasses import dataclass
import logging
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks
from scipy.stats import linregress

from .exceptions import DomainError, InsufficientDataError, InvalidWindowError
from .propagator import DampingParams, LinearPropagator, LinearState
from .semilinear import Scenario, Trajectory, integrate, map_concurrently
from .spectral import (
    SpectralField,
    Spectrum,
    basis_function,
    cluster_mask,
    coeffs_to_grid,
    grid_lp_norm,
)


logger = logging.getLogger(__name__)

NormLevel = Literal["E", "E1", "Ealpha"]

GUARD_TOLERANCE = 0.005
MIN_SMOOTHING_POINTS = 8
_CHUNK = 64


# ---------------------------------------------------------------------------
# Energy norms
# ---------------------------------------------------------------------------


def _level_exponent(level: NormLevel, alpha: Optional[float]) -> float:
    if level == "E":
        return 0.0
    if level == "E1":
        return 1.0
    if level == "Ealpha":
        if alpha is None:
            raise DomainError("The E_alpha norm needs alpha")
        return float(alpha)
    raise DomainError(f"Unknown norm level {level!r}")


def energy_norm(
    state: LinearState,
    spectrum: Spectrum,
    level: NormLevel = "E",
    *,
    alpha: Optional[float] = None,
) -> float:
    """
    √(‖u‖²_{H^{1+s}} + ‖∂ₜu‖²_{H^s}) with s = 0 (E), 1 (E1) or α (Ealpha).
    """
    s = _level_exponent(level, alpha)
    lam = spectrum.eigenvalues
    pos = np.dot(lam ** (1.0 + s), state.position ** 2)
    vel = np.dot(lam ** s, state.velocity ** 2)
    return float(np.sqrt(pos + vel))


# ---------------------------------------------------------------------------
# L¹⁰ and mixed norms
# ---------------------------------------------------------------------------


def _l10_batch(spectrum: Spectrum, positions: np.ndarray, oversample: int) -> np.ndarray:
    weight = spectrum.quadrature_weight(oversample)
    out = np.empty(positions.shape[0])
    for start in range(0, positions.shape[0], _CHUNK):
        block = coeffs_to_grid(spectrum, positions[start:start + _CHUNK], oversample)
        for j, values in enumerate(block):
            out[start + j] = grid_lp_norm(values, weight, 10.0)
    return out


def _relative_change(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def l10_norm(u: SpectralField, oversample: int = 2, *, guard: bool = True) -> float:
    """
    ‖u‖_{L¹⁰} by grid quadrature.

    With ``guard`` the norm is recomputed on the doubled grid; if the two
    values differ by more than 0.5 % a warning is logged and the refined
    value is returned.
    """
    value = _l10_batch(u.spectrum, u.coeffs[None, :], oversample)[0]
    if not guard:
        return float(value)
    refined = _l10_batch(u.spectrum, u.coeffs[None, :], 2 * oversample)[0]
    if _relative_change(value, refined) > GUARD_TOLERANCE:
        logger.warning(
            "L10 quadrature not converged at m=%d (%.3g vs %.3g); using m=%d",
            oversample, value, refined, 2 * oversample,
        )
        return float(refined)
    return float(value)


@dataclass
class MixedNormAccumulator:
    """
    Running L⁵ₜ quadrature of spatial L¹⁰ norms over a window [a, b].

    Nodes are added in increasing order; weights are the composite Simpson
    weights of the stored nodes and sum to the covered length.
    """

    a: float
    b: float

    def __post_init__(self) -> None:
        if self.b < self.a:
            raise InvalidWindowError(f"Reversed window [{self.a}, {self.b}]")
        self._times: List[float] = []
        self._values: List[float] = []

    def add(self, t: float, l10: float) -> None:
        tol = 1e-12 * max(1.0, abs(self.b))
        if t < self.a - tol or t > self.b + tol:
            raise InvalidWindowError(f"Node {t} outside window [{self.a}, {self.b}]")
        if self._times and t <= self._times[-1]:
            raise InvalidWindowError("Nodes must be added in increasing order")
        self._times.append(float(t))
        self._values.append(float(l10))

    @property
    def nodes(self) -> np.ndarray:
        return np.asarray(self._times)

    def weights(self) -> np.ndarray:
        n = len(self._times)
        if n < 2:
            return np.zeros(n)
        return simpson(np.eye(n), x=self.nodes, axis=-1)

    def power_sum(self) -> float:
        """Σ wᵢ ‖u(tᵢ)‖⁵_{L¹⁰}."""
        if len(self._times) < 2:
            return 0.0
        return float(simpson(np.asarray(self._values) ** 5, x=self.nodes))

    def value(self) -> float:
        return max(self.power_sum(), 0.0) ** 0.2


def mixed_norm_L5L10(
    traj: Trajectory,
    window: Optional[Tuple[float, float]] = None,
    *,
    guard: bool = True,
) -> float:
    """
    ‖u‖_{L⁵(a,b; L¹⁰)} from the stored samples of a trajectory.

    Spatial norms come from the trajectory cache; with ``guard`` they are
    recomputed on the doubled grid and the time quadrature is compared with
    the one on every other sample. Violations above 0.5 % are logged; the
    grid-refined value is returned.

    Raises
    ------
    InvalidWindowError
        If the window is not inside the sampled interval.
    """
    a, b = (traj.times[0], traj.times[-1]) if window is None else window
    idx = traj.window(a, b)
    if idx.size < 2 or b == a:
        return 0.0
    acc = MixedNormAccumulator(float(traj.times[idx[0]]), float(traj.times[idx[-1]]))
    for i in idx:
        acc.add(traj.times[i], traj.l10[i])
    value = acc.value()
    if not guard:
        return value

    m = traj.scenario.oversample
    refined_l10 = _l10_batch(traj.spectrum, traj.positions[idx], 2 * m)
    refined = float(simpson(refined_l10 ** 5, x=traj.times[idx])) ** 0.2
    if _relative_change(value, refined) > GUARD_TOLERANCE:
        logger.warning(
            "Mixed norm not converged in space (%.4g vs %.4g); using m=%d", value, refined, 2 * m
        )
        value = refined
    if idx.size >= 5:
        coarse_idx = idx[::2]
        coarse = float(simpson(traj.l10[coarse_idx] ** 5, x=traj.times[coarse_idx])) ** 0.2
        if _relative_change(acc.value(), coarse) > GUARD_TOLERANCE:
            logger.warning(
                "Mixed norm sensitive to sample stride (%.4g vs %.4g)", acc.value(), coarse
            )
    return value


# ---------------------------------------------------------------------------
# Spectral clusters
# ---------------------------------------------------------------------------


class ClusterRow(NamedTuple):
    """
    One row of a cluster sweep.

    ``ceiling`` is the interpolation bound of :func:`cluster_ceiling`;
    ``sobolev_scaling`` is λ^{9/10 − 2/5} = λ^{1/2}, which times the sweep's
    ``sobolev_constant`` gives the Sobolev-embedding ceiling.
    """

    lam: float
    n_modes: int
    quotient: float
    ceiling: float
    sobolev_scaling: float
    empty: bool


class ClusterSweep(NamedTuple):
    """
    Result of :func:`cluster_quotient_sweep`.

    Attributes
    ----------
    rows:
        One row per window start λ.
    constant:
        Global sup of the quotient (the measured cluster constant).
    within_ceiling:
        Whether every quotient is below its rigorous ceiling.
    sobolev_constant:
        C_sob of :func:`sobolev_cluster_constant` for the swept windows.
    within_sobolev:
        Whether every quotient is below λ^{1/2}·C_sob.
    """

    rows: List[ClusterRow]
    constant: float
    within_ceiling: bool
    sobolev_constant: float = float("nan")
    within_sobolev: bool = True


def adversarial_cluster_field(spectrum: Spectrum, lam: float, point: Optional[Sequence[float]] = None) -> SpectralField:
    """
    Σ_{k in window} e_k(x₀) e_k: the field concentrating the window at x₀
    (default x₀ = 0.3·L on every axis).
    """
    mask = cluster_mask(spectrum, lam)
    if point is None:
        point = [0.3 * L for L in spectrum.domain.lengths]
    coeffs = np.zeros(spectrum.count)
    for i in np.nonzero(mask)[0]:
        coords = [np.asarray([x]) for x in point]
        coeffs[i] = float(basis_function(spectrum.domain, spectrum.modes[i], *coords)[0])
    return SpectralField(spectrum, coeffs)


def cluster_ceiling(spectrum: Spectrum, lam: float, n_modes: int) -> float:
    """
    Rigorous bound of the quotient: (n·Π 2/L_i)^{3/10} / λ^{2/5}, from
    ‖P_λu‖_∞ ≤ (n·Π 2/L_i)^{1/2}‖u‖ and L⁵ ≤ L∞^{3/5} L²^{2/5}.
    """
    sup_sq = n_modes * float(np.prod([2.0 / L for L in spectrum.domain.lengths]))
    return sup_sq ** 0.3 / lam ** 0.4


def sobolev_cluster_constant(spectrum: Spectrum, lambdas: Sequence[float]) -> float:
    """
    Embedding constant C_sob with ‖P_λu‖_{L⁵} ≤ C_sob λ^{9/10}‖u‖ on every
    non-empty window of ``lambdas``.

    From ‖P_λu‖_∞ ≤ (n·Π 2/L_i)^{1/2}‖u‖ and L⁵ ≤ L∞^{3/5} L²^{2/5}:
    C_sob = max_λ (n(λ)·Π 2/L_i)^{3/10} / λ^{9/10}. Depends on the mode
    counts only, never on trial fields.
    """
    sup_factor = float(np.prod([2.0 / L for L in spectrum.domain.lengths]))
    best = 0.0
    for lam in lambdas:
        n_modes = int(cluster_mask(spectrum, float(lam)).sum())
        if n_modes:
            best = max(best, (n_modes * sup_factor) ** 0.3 / float(lam) ** 0.9)
    return best


def cluster_quotient_sweep(
    spectrum: Spectrum,
    fields: Sequence[SpectralField],
    lambdas: Sequence[float],
    *,
    oversample: int = 2,
    adversarial: bool = True,
    threads: Optional[int] = None,
) -> ClusterSweep:
    """
    Sweep ‖P_λu‖_{L⁵} / (λ^{2/5}‖u‖) over window starts λ ≥ 1.

    For every λ the quotient is maximized over the trial fields (and the
    adversarial field of the window when ``adversarial``). Empty windows are
    kept as flagged rows with quotient 0.
    """
    for u in fields:
        if u.spectrum is not spectrum:
            raise DomainError("Trial fields must live on the swept spectrum")
    weight = spectrum.quadrature_weight(oversample)
    norms = [u.norm() for u in fields]

    def row(lam: float) -> ClusterRow:
        if lam < 1.0:
            raise DomainError(f"Cluster window start must be >= 1, got {lam}")
        mask = cluster_mask(spectrum, lam)
        n_modes = int(mask.sum())
        scaling = lam ** 0.5
        if n_modes == 0:
            return ClusterRow(lam, 0, 0.0, 0.0, scaling, True)
        trial = [(u.coeffs, n) for u, n in zip(fields, norms) if n > 0.0]
        if adversarial:
            adv = adversarial_cluster_field(spectrum, lam)
            trial.append((adv.coeffs, adv.norm()))
        best = 0.0
        for coeffs, size in trial:
            if size == 0.0:
                continue
            values = coeffs_to_grid(spectrum, np.where(mask, coeffs, 0.0), oversample)
            best = max(best, grid_lp_norm(values, weight, 5.0) / (lam ** 0.4 * size))
        return ClusterRow(lam, n_modes, best, cluster_ceiling(spectrum, lam, n_modes), scaling, False)

    rows = map_concurrently(row, [float(x) for x in lambdas], threads)
    empty = sum(r.empty for r in rows)
    if empty:
        logger.info("%d of %d cluster windows are empty", empty, len(rows))
    constant = max((r.quotient for r in rows), default=0.0)
    within = all(r.quotient <= r.ceiling * (1.0 + 1e-12) for r in rows if not r.empty)
    c_sob = sobolev_cluster_constant(spectrum, [r.lam for r in rows])
    sobolev_ok = all(
        r.quotient <= r.sobolev_scaling * c_sob * (1.0 + 1e-12) for r in rows if not r.empty
    )
    return ClusterSweep(
        rows=list(rows),
        constant=constant,
        within_ceiling=within,
        sobolev_constant=c_sob,
        within_sobolev=sobolev_ok,
    )


# ---------------------------------------------------------------------------
# Rate fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """
    Least-squares fit on log-transformed positive data.

    For exponential fits ``values ≈ prefactor·e^{−exponent·t} + offset``; for
    power laws ``values ≈ prefactor·t^{−exponent}``.

    Attributes
    ----------
    exponent, prefactor:
        Fitted decay exponent and prefactor.
    r_squared:
        Coefficient of determination of the log-linear regression.
    t_min, t_max:
        Range of the data used in the fit.
    n_points:
        Number of points used.
    offset:
        Subtracted long-run level (Q_∞ for dissipation fits).
    valid:
        False for non-decaying or too-short data.
    """

    exponent: float
    prefactor: float
    r_squared: float
    t_min: float
    t_max: float
    n_points: int
    offset: float = 0.0
    valid: bool = True

    @classmethod
    def invalid(cls, n_points: int = 0, t_min: float = float("nan"), t_max: float = float("nan")) -> "RateFit":
        nan = float("nan")
        return cls(nan, nan, nan, t_min, t_max, n_points, valid=False)


def tail_level(values: np.ndarray, fraction: float = 0.1, flatness: float = 0.05) -> Tuple[float, float]:
    """
    Long-run level of a series: mean of the last ``fraction`` when that tail
    is flat (spread ≤ ``flatness``·mean), else 0.

    Returns
    -------
    (level, tail noise)
    """
    n = max(int(np.ceil(fraction * values.size)), 2)
    tail = values[-n:]
    mean = float(tail.mean())
    spread = float(tail.max() - tail.min())
    if mean > 0.0 and spread <= flatness * mean:
        return mean, float(np.abs(tail - mean).max())
    return 0.0, 0.0


def exponential_fit(times: np.ndarray, values: np.ndarray, *, use_peaks: bool = True) -> RateFit:
    """
    Fit values ≈ Q e^{−βt} + Q_∞ by regression of log(peak − Q_∞) on t.

    Local maxima are used when at least three exist (oscillating envelopes);
    otherwise every sample is used. The fit is flagged invalid when β ≤ 0 or
    fewer than three usable points remain.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 3 or not np.any(values > 0.0):
        return RateFit.invalid(int(times.size))
    level, noise = tail_level(values)
    excess = values - level
    idx = np.arange(values.size)
    if use_peaks:
        peaks, _ = find_peaks(excess)
        if peaks.size >= 3:
            idx = peaks
    floor = max(10.0 * noise, 1e-12 * float(np.abs(excess).max()))
    idx = idx[excess[idx] > floor]
    if idx.size < 3:
        return RateFit.invalid(int(idx.size))
    res = linregress(times[idx], np.log(excess[idx]))
    beta = -float(res.slope)
    fit = RateFit(
        exponent=beta,
        prefactor=float(np.exp(res.intercept)),
        r_squared=float(res.rvalue ** 2),
        t_min=float(times[idx[0]]),
        t_max=float(times[idx[-1]]),
        n_points=int(idx.size),
        offset=level,
        valid=bool(beta > 0.0),
    )
    if not fit.valid:
        logger.warning("Envelope does not decay (beta=%.3g); fit flagged invalid", beta)
    return fit


def power_law_fit(times: np.ndarray, values: np.ndarray) -> RateFit:
    """Fit values ≈ C t^{−p} by regression of log values on log t."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (times > 0.0) & (values > 0.0)
    if keep.sum() < MIN_SMOOTHING_POINTS:
        raise InsufficientDataError(
            f"Power-law fit needs at least {MIN_SMOOTHING_POINTS} points, got {int(keep.sum())}"
        )
    res = linregress(np.log(times[keep]), np.log(values[keep]))
    return RateFit(
        exponent=-float(res.slope),
        prefactor=float(np.exp(res.intercept)),
        r_squared=float(res.rvalue ** 2),
        t_min=float(times[keep].min()),
        t_max=float(times[keep].max()),
        n_points=int(keep.sum()),
    )


def dissipation_fit(traj: Trajectory) -> RateFit:
    """Fit the envelope ‖ξ(t)‖_E ≤ Q e^{−βt} + Q_∞ of a trajectory."""
    return exponential_fit(traj.times, traj.energy_norms())


class QTableRow(NamedTuple):
    magnitude: float
    beta: float
    Q: float
    Q_inf: float
    r_squared: float
    valid: bool


def _scale_to_energy(scenario: Scenario, magnitude: float) -> Scenario:
    state = scenario.initial_state
    size = energy_norm(state, scenario.spectrum)
    if size == 0.0:
        raise DomainError("Initial data must be nonzero to be rescaled")
    return scenario.with_state(state * (magnitude / size))


def dissipation_q_table(
    scenario: Scenario,
    magnitudes: Sequence[float] = (0.1, 1.0, 10.0),
    *,
    threads: Optional[int] = None,
) -> Tuple[List[QTableRow], bool]:
    """
    Fitted (β, Q, Q_∞) for the scenario's initial data rescaled to the given
    E-norms, plus whether Q is nondecreasing in the magnitude.
    """
    scenarios = [_scale_to_energy(scenario, float(m)) for m in magnitudes]
    trajs = map_concurrently(integrate, scenarios, threads)
    rows = []
    for m, traj in zip(magnitudes, trajs):
        fit = dissipation_fit(traj)
        rows.append(QTableRow(float(m), fit.exponent, fit.prefactor, fit.offset, fit.r_squared, fit.valid))
    qs = [r.Q for r in rows if r.valid]
    monotone = bool(len(qs) == len(rows) and all(b >= a for a, b in zip(qs, qs[1:])))
    return rows, monotone


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


def semigroup_smoothing_constant(
    gamma: float, alpha: float, t: float, *, method: Literal["closed", "numeric"] = "closed"
) -> float:
    """
    sup_{x>0} x^{1/2} e^{−(γ/2) x^α t}.

    The maximizer is x* = (1/(γαt))^{1/α}, giving (γαte)^{−1/(2α)}, i.e.
    C·t^{−1/(2α)}. ``method="numeric"`` maximizes over log x with
    `scipy.optimize.minimize_scalar` instead.
    """
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    if method == "closed":
        return float((gamma * alpha * t * np.e) ** (-1.0 / (2.0 * alpha)))

    def neg_log(y: float) -> float:
        return -(0.5 * y - 0.5 * gamma * np.exp(alpha * y) * t)

    guess = np.log(1.0 / (gamma * alpha * t)) / alpha
    res = minimize_scalar(neg_log, bracket=(guess - 5.0, guess, guess + 5.0))
    return float(np.exp(-res.fun))


@dataclass(frozen=True)
class SmoothingReport:
    """
    Fitted blow-up exponent p of ‖ξ(t)‖_{E₁} ~ t^{−p} as t → 0.

    Attributes
    ----------
    fit:
        Power-law fit; ``fit.exponent`` is p.
    bound_exponent:
        1/α, the guaranteed rate.
    semigroup_exponent:
        1/(2α), the rate of the fractional heat semigroup.
    within_bound:
        p ≤ 1/α + tolerance.
    times, values:
        The data used.
    """

    fit: RateFit
    bound_exponent: float
    semigroup_exponent: float
    within_bound: bool
    times: np.ndarray
    values: np.ndarray

    @property
    def relative_to_semigroup(self) -> float:
        return abs(self.fit.exponent - self.semigroup_exponent) / self.semigroup_exponent


def default_smoothing_window(spectrum: Spectrum, params: DampingParams) -> Tuple[float, float]:
    """[5/σ_max, 0.25/σ_min]: short enough to precede the slowest decay,
    long enough that the truncation does not cap the E₁ norm."""
    sigma = params.decay_rate(spectrum.eigenvalues)
    return 5.0 / float(sigma[-1]), 0.25 / float(sigma[0])


def smoothing_probe(
    scenario: Scenario,
    times: Optional[Sequence[float]] = None,
    *,
    n_points: int = 16,
    tolerance: float = 0.1,
) -> SmoothingReport:
    """
    Fit the short-time blow-up of ‖ξ_u(t)‖_{E₁} for data in E \\ E₁.

    Linear scenarios are evaluated exactly (mode matrices plus the
    closed-form constant-forcing response) at ``n_points`` log-spaced times
    of the default window; nonlinear ones are integrated and the stored
    samples inside the window are used.

    Raises
    ------
    InsufficientDataError
        If fewer than 8 time points are available.
    """
    spectrum, params = scenario.spectrum, scenario.damping
    alpha = params.alpha
    if scenario.nonlinearity.is_zero:
        if times is None:
            lo, hi = default_smoothing_window(spectrum, params)
            if not hi > lo:
                raise InsufficientDataError(
                    f"Smoothing window is empty ([{lo:.3g}, {hi:.3g}]); increase the mode count"
                )
            times = np.geomspace(lo, hi, int(n_points))
        ts = np.asarray(times, dtype=float)
        prop = scenario.propagator
        xi0 = scenario.initial_state
        g = scenario.forcing.coeffs
        values = np.array(
            [energy_norm(prop.step_constant(xi0, g, t), spectrum, "E1") for t in ts]
        )
    else:
        traj = integrate(scenario)
        lo, hi = (traj.times[1], traj.times[-1]) if times is None else (min(times), max(times))
        keep = (traj.times >= lo) & (traj.times <= hi) & (traj.times > 0.0)
        ts = traj.times[keep]
        values = traj.energy_norms(1.0)[keep]
    if ts.size < MIN_SMOOTHING_POINTS:
        raise InsufficientDataError(
            f"Smoothing fit needs at least {MIN_SMOOTHING_POINTS} times, got {ts.size}"
        )
    fit = power_law_fit(ts, values)
    bound = 1.0 / alpha
    return SmoothingReport(
        fit=fit,
        bound_exponent=bound,
        semigroup_exponent=1.0 / (2.0 * alpha),
        within_bound=bool(fit.exponent <= bound + tolerance * bound),
        times=ts,
        values=values,
    )


# ---------------------------------------------------------------------------
# Energy identity
# ---------------------------------------------------------------------------


def identity_residual(traj: Trajectory, window: Optional[Tuple[float, float]] = None) -> float:
    """
    ℰ(t₂) − ℰ(t₁) + γ∫_{t₁}^{t₂} ‖(−Δ)^{α/2}∂ₜu‖² dt over the stored samples
    (composite Simpson in time). A window of zero length gives 0.
    """
    a, b = (traj.times[0], traj.times[-1]) if window is None else window
    idx = traj.window(a, b)
    if idx.size < 2 or b == a:
        return 0.0
    dissipated = float(simpson(traj.dissipation_rate()[idx], x=traj.times[idx]))
    return float(traj.energies[idx[-1]] - traj.energies[idx[0]] + dissipated)


# ---------------------------------------------------------------------------
# Uniform-in-time Strichartz table
# ---------------------------------------------------------------------------


class StrichartzRow(NamedTuple):
    window: int
    t0: float
    mixed_norm: float
    h1a_integral: float
    envelope: float
    ratio: float
    h1a_ratio: float
    transient: bool


def unit_pulse(t: np.ndarray) -> np.ndarray:
    """Periodic unit-window pulse sin²(πt)."""
    return np.sin(np.pi * np.asarray(t, dtype=float)) ** 2


def strichartz_window_table(
    spectrum: Spectrum,
    params: DampingParams,
    xi0: LinearState,
    profile: SpectralField,
    n_windows: int = 20,
    *,
    steps_per_window: int = 40,
    oversample: int = 2,
    transient_fraction: float = 0.01,
) -> List[StrichartzRow]:
    """
    Per-window L⁵L¹⁰ norms of the linear problem forced by h(t) = sin²(πt)·g.

    Every unit window [j, j+1] reports the mixed norm, the windowed
    ∫‖u‖²_{H^{1+α}}, the envelope ‖ξ₀‖_E e^{−βt} + ∫₀^t e^{−β(t−s)}‖h(s)‖ds
    (β = σ_min, t the window end) and the ratios norm/envelope. Windows where
    the initial-data term is above ``transient_fraction`` of the envelope are
    marked transient.
    """
    if profile.spectrum is not spectrum:
        raise DomainError("Forcing profile must live on the given spectrum")
    if n_windows < 1 or steps_per_window < 2 or steps_per_window % 2:
        raise DomainError("Need n_windows >= 1 and an even steps_per_window >= 2")
    prop = LinearPropagator(spectrum, params)
    dt = 1.0 / steps_per_window
    nodes = dt * np.array([0.0, 0.5, 1.0])
    beta = float(params.decay_rate(spectrum.lambda_min))
    g = profile.coeffs
    g_norm = profile.norm()
    xi_norm = energy_norm(xi0, spectrum)
    lam_1a = spectrum.power(1.0 + params.alpha)

    fine = np.linspace(0.0, 1.0, 8 * steps_per_window + 1)
    state = xi0
    forced = 0.0
    rows: List[StrichartzRow] = []
    for j in range(n_windows):
        t0 = float(j)
        positions = [state.position]
        for n in range(steps_per_window):
            t = t0 + n * dt
            samples = unit_pulse(t + nodes)[:, None] * g[None, :]
            state = prop.step_duhamel(state, samples, dt)
            positions.append(state.position)
        positions = np.asarray(positions)
        times = t0 + dt * np.arange(steps_per_window + 1)
        l10 = _l10_batch(spectrum, positions, oversample)
        mixed = float(simpson(l10 ** 5, x=times)) ** 0.2
        h1a = float(simpson(positions ** 2 @ lam_1a, x=times))

        # ∫₀^{t1} e^{−β(t1−s)}‖h(s)‖ds, accumulated window by window
        s = t0 + fine
        inner = float(simpson(np.exp(-beta * (t0 + 1.0 - s)) * unit_pulse(s), x=s))
        forced = forced * np.exp(-beta) + g_norm * inner
        decaying = xi_norm * np.exp(-beta * (t0 + 1.0))
        envelope = decaying + forced
        ratio = mixed / envelope if envelope > 0.0 else 0.0
        h1a_ratio = h1a / envelope ** 2 if envelope > 0.0 else 0.0
        rows.append(StrichartzRow(
            window=j,
            t0=t0,
            mixed_norm=mixed,
            h1a_integral=h1a,
            envelope=envelope,
            ratio=ratio,
            h1a_ratio=h1a_ratio,
            transient=bool(decaying > transient_fraction * envelope),
        ))
    return rows


def window_ratio_spread(rows: Sequence[StrichartzRow]) -> float:
    """max/min of the norm/envelope ratio over the non-transient windows."""
    ratios = [r.ratio for r in rows if not r.transient and r.ratio > 0.0]
    if not ratios:
        return float("nan")
    return max(ratios) / min(ratios)


__all__ = [
    "NormLevel",
    "energy_norm",
    "l10_norm",
    "MixedNormAccumulator",
    "mixed_norm_L5L10",
    "ClusterRow",
    "ClusterSweep",
    "adversarial_cluster_field",
    "cluster_ceiling",
    "sobolev_cluster_constant",
    "cluster_quotient_sweep",
    "RateFit",
    "tail_level",
    "exponential_fit",
    "power_law_fit",
    "dissipation_fit",
    "QTableRow",
    "dissipation_q_table",
    "semigroup_smoothing_constant",
    "SmoothingReport",
    "default_smoothing_window",
    "smoothing_probe",
    "identity_residual",
    "StrichartzRow",
    "unit_pulse",
    "strichartz_window_table",
    "window_ratio_spread",
]
