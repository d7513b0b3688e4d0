from __future__ import annotations

"""
Acceptance suite run by ``fracwave verify-all``.

Each check builds its own small problem, measures one quantity and compares
it with a threshold:

 1. per-mode propagator against a DOP853 oracle (relative 1e-10)
 2. change-of-variables identity: damped flow = heat factor ∘ oscillator
 3. energy identity residual per unit time and its order under dt/2
 4. dissipation rate of the linear flow against γλ₁^α/2
 5. uniform-in-time Strichartz window ratios
 6. cluster quotients below the interpolation and Sobolev-derived ceilings
 7. smoothing exponent of rough data against 1/(2α) and 1/α
 8. Lipschitz growth ratio stable across separation decades
 9. squeezing constant: ensemble-doubling stability and linear oracle
10. box-counting dimension of synthetic point sets

``quick`` shrinks every problem for smoke runs; quick results are not
acceptance claims.
"""

import logging
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .attractor import (
    SQUEEZE_SEPARATIONS,
    EnsembleRun,
    absorbing_radius,
    box_counting_dimension,
    make_pairs,
    make_rng,
    squeezing_probe,
)
from .logger import BaseLogger, NullLogger
from .norms import (
    SmoothingReport,
    cluster_quotient_sweep,
    dissipation_fit,
    identity_residual,
    smoothing_probe,
    strichartz_window_table,
    window_ratio_spread,
)
from .propagator import DampingParams, LinearPropagator, LinearState, classify_mode
from .semilinear import Nonlinearity, Scenario, integrate, lipschitz_probe
from .spectral import BoxDomain, SpectralField, build_spectrum

logger = logging.getLogger(__name__)


class Criterion(NamedTuple):
    """
    One acceptance row.

    ``passed`` compares ``measured`` with ``threshold`` in the sense stated by
    ``relation`` ("<=", "<" or ">").
    """

    number: int
    name: str
    unit: str
    measured: float
    relation: str
    threshold: float
    passed: bool


def _criterion(number: int, name: str, unit: str, measured: float, relation: str, threshold: float) -> Criterion:
    measured = float(measured)
    if not np.isfinite(measured):
        passed = False
    elif relation == "<=":
        passed = measured <= threshold
    elif relation == "<":
        passed = measured < threshold
    else:
        passed = measured > threshold
    return Criterion(number, name, unit, measured, relation, float(threshold), bool(passed))


# ---------------------------------------------------------------------------
# 1-2: linear propagator
# ---------------------------------------------------------------------------


def _random_modes(rng: np.random.Generator, count: int) -> List[tuple]:
    """(γ, α, μ) triples cycling through overdamped, exactly critical and
    underdamped modes."""
    out = []
    while len(out) < count:
        gamma = float(rng.uniform(0.2, 4.0))
        alpha = float(rng.uniform(0.05, 0.45))
        crit = (gamma ** 2 / 4.0) ** (1.0 / (1.0 - 2.0 * alpha))
        if crit > 1e3:
            continue
        kind = len(out) % 3
        if kind == 0:
            mu = crit * float(rng.uniform(0.05, 0.9))
        elif kind == 1:
            mu = crit
        else:
            lo = max(1.1 * crit, 1.0)
            mu = float(np.exp(rng.uniform(np.log(lo), np.log(max(400.0, 2.0 * lo)))))
        out.append((gamma, alpha, mu))
    return out


def _oracle(mu: float, params: DampingParams, t: float, x0: np.ndarray) -> np.ndarray:
    damping = params.gamma * mu ** params.alpha

    def rhs(_, y):
        return [y[1], -mu * y[0] - damping * y[1]]

    sol = solve_ivp(rhs, (0.0, t), x0, method="DOP853", rtol=1e-13, atol=1e-300)
    return sol.y[:, -1]


def check_propagator_exactness(rng: np.random.Generator, quick: bool = False) -> Criterion:
    """Max relative E-error of the exact 2×2 flow against DOP853."""
    worst = 0.0
    branches = set()
    for gamma, alpha, mu in _random_modes(rng, 21 if quick else 100):
        params = DampingParams(gamma, alpha)
        mode = classify_mode(mu, params)
        branches.add(mode.branch)
        weight = np.array([np.sqrt(mu), 1.0])
        for t in (0.1, 1.0, 10.0):
            M = mode.matrix(t)
            for x0 in (np.array([1.0 / np.sqrt(mu), 0.0]), np.array([0.0, 1.0])):
                ref = _oracle(mu, params, t, x0)
                scale = float(np.linalg.norm(weight * ref))
                if scale == 0.0:
                    continue
                worst = max(worst, float(np.linalg.norm(weight * (M @ x0 - ref))) / scale)
    if len(branches) < 3:
        logger.warning("Propagator check covered only branches %s", sorted(branches))
    return _criterion(1, "propagator_exactness", "relative error", worst, "<=", 1e-10)


def check_change_of_variables(rng: np.random.Generator, quick: bool = False) -> Criterion:
    """step_homogeneous against from_transformed ∘ oscillator ∘ to_transformed."""
    spectrum = build_spectrum(BoxDomain.unit(1), 20 if quick else 100)
    lam = spectrum.eigenvalues
    worst = 0.0
    for gamma, alpha in ((1.0, 0.1), (1.0, 0.25), (2.0, 0.4)):
        prop = LinearPropagator(spectrum, DampingParams(gamma, alpha))
        state = LinearState(
            rng.standard_normal(spectrum.count) / np.sqrt(lam), rng.standard_normal(spectrum.count)
        )
        for t in (0.1, 1.0):
            direct = prop.step_homogeneous(state, t)
            moved = prop.from_transformed(prop.transformed_oscillator(prop.to_transformed(state), t), t)
            num = np.sqrt(lam * (direct.position - moved.position) ** 2 + (direct.velocity - moved.velocity) ** 2)
            den = np.sqrt(lam * direct.position ** 2 + direct.velocity ** 2)
            ok = den > 0.0
            worst = max(worst, float((num[ok] / den[ok]).max()))
    return _criterion(2, "change_of_variables", "relative error", worst, "<=", 1e-10)


# ---------------------------------------------------------------------------
# 3-4: energy law
# ---------------------------------------------------------------------------


def _cubic_scenario(n: int, T: float, dt: float, params: Optional[DampingParams] = None) -> Scenario:
    spectrum = build_spectrum(BoxDomain.unit(1), n)
    u0 = SpectralField.from_modes(spectrum, {(1,): 1.0, (2,): 0.5})
    return Scenario(
        spectrum=spectrum,
        damping=params or DampingParams(1.0, 0.25),
        nonlinearity=Nonlinearity.cubic(),
        u0=u0,
        T=T,
        dt=dt,
    )


def check_energy_identity(quick: bool = False) -> List[Criterion]:
    """Residual per unit time at dt = 0.01 and the observed reduction at dt/2."""
    T = 2.0 if quick else 10.0
    sc = _cubic_scenario(32 if quick else 64, T, 0.01)
    per_time = abs(identity_residual(integrate(sc))) / T
    coarse = sc.with_changes(dt=0.05, T=2.0)
    r1 = abs(identity_residual(integrate(coarse)))
    r2 = abs(identity_residual(integrate(coarse.with_changes(dt=0.025))))
    ratio = r1 / r2 if r2 > 0.0 else float("inf")
    return [
        _criterion(3, "energy_identity_residual", "energy/time", per_time, "<", 1e-6),
        _criterion(3, "energy_identity_order", "residual ratio dt/(dt/2)", ratio, ">", 3.0),
    ]


def check_dissipation(quick: bool = False) -> Criterion:
    """Max relative error of fitted β against γλ₁^α/2 on the unit cube."""
    n = 4 if quick else 8
    spectrum = build_spectrum(BoxDomain.unit(3), n)
    u0 = SpectralField.from_modes(spectrum, {(1, 1, 1): 1.0})
    worst = 0.0
    for gamma, alpha in ((1.0, 0.1), (1.0, 0.25), (2.0, 0.4)):
        params = DampingParams(gamma, alpha)
        sc = Scenario(spectrum, params, Nonlinearity.zero(), u0, T=10.0 if quick else 20.0, dt=0.02)
        fit = dissipation_fit(integrate(sc))
        expected = float(params.decay_rate(spectrum.lambda_min))
        err = abs(fit.exponent - expected) / expected if fit.valid else float("inf")
        worst = max(worst, err)
    return _criterion(4, "dissipation_rate", "relative error", worst, "<=", 0.05)


# ---------------------------------------------------------------------------
# 5-7: norms
# ---------------------------------------------------------------------------


def check_strichartz(quick: bool = False) -> Criterion:
    spectrum = build_spectrum(BoxDomain.unit(1), 16 if quick else 32)
    params = DampingParams(1.0, 0.25)
    xi0 = LinearState.from_fields(SpectralField.from_modes(spectrum, {(1,): 0.1}))
    profile = SpectralField.from_modes(spectrum, {(1,): 1.0, (2,): 0.5})
    rows = strichartz_window_table(spectrum, params, xi0, profile, 10 if quick else 20)
    return _criterion(5, "strichartz_window_spread", "max/min ratio", window_ratio_spread(rows), "<", 3.0)


def check_cluster(rng: np.random.Generator, quick: bool = False) -> List[Criterion]:
    """
    Max quotient over the interpolation ceiling, and over the Sobolev
    ceiling λ^{1/2}·C_sob (the measured constant is reported in the log).
    """
    n = 12 if quick else 24
    spectrum = build_spectrum(BoxDomain.unit(3), n)
    fields = [SpectralField.random(spectrum, rng) for _ in range(2)]
    lambdas = np.arange(1.0, np.floor(n * np.pi))
    sweep = cluster_quotient_sweep(spectrum, fields, lambdas)
    logger.info("Cluster constant %.6g over %d windows (C_sob %.6g)",
                sweep.constant, len(sweep.rows), sweep.sobolev_constant)
    full = [r for r in sweep.rows if not r.empty]
    nan = float("nan")
    worst = max((r.quotient / r.ceiling for r in full), default=nan)
    worst_sob = max((r.quotient / (r.sobolev_scaling * sweep.sobolev_constant) for r in full), default=nan)
    return [
        _criterion(6, "cluster_quotient_over_ceiling", "max quotient/ceiling", worst, "<=", 1.0 + 1e-12),
        _criterion(6, "cluster_quotient_over_sobolev", "max quotient/(lam^1/2 C_sob)", worst_sob, "<=", 1.0 + 1e-12),
    ]


SMOOTHING_ALPHA = 0.25
# c_k ∝ λ_k^{-0.75} is the E-marginal profile (‖ξ₀‖_E diverges only
# logarithmically in N), for which the semigroup predicts p = 1/(2α).
# The steeper-rough profile λ_k^{-0.55} lies outside E in every dimension and
# is only checked against the guaranteed rate p ≤ 1/α.
SEMIGROUP_ROUGH_EXPONENT = -0.75
STEEP_ROUGH_EXPONENT = -0.55


def _rough_smoothing(exponent: float, quick: bool) -> SmoothingReport:
    spectrum = build_spectrum(BoxDomain.unit(1), 2 ** 12 if quick else 2 ** 14)
    u0 = SpectralField(spectrum, spectrum.power(exponent))
    sc = Scenario(spectrum, DampingParams(1.0, SMOOTHING_ALPHA), Nonlinearity.zero(), u0, T=1.0, dt=0.5)
    return smoothing_probe(sc)


def check_smoothing(quick: bool = False) -> List[Criterion]:
    """
    |p − 1/(2α)|·2α for E-marginal rough data (fails if p > 1/α), and the
    fitted p for c_k ∝ λ_k^{−0.55} against 1/α.
    """
    report = _rough_smoothing(SEMIGROUP_ROUGH_EXPONENT, quick)
    measured = report.relative_to_semigroup if report.within_bound else float("inf")
    steep = _rough_smoothing(STEEP_ROUGH_EXPONENT, quick)
    p = steep.fit.exponent if steep.fit.valid else float("inf")
    return [
        _criterion(7, "smoothing_exponent", "relative to 1/(2 alpha)", measured, "<=", 0.15),
        _criterion(7, "smoothing_exponent_steep_rough", "p", p, "<=", steep.bound_exponent),
    ]


# ---------------------------------------------------------------------------
# 8-9: paired trajectories
# ---------------------------------------------------------------------------


def _unit_direction(rng: np.random.Generator, lam: np.ndarray) -> LinearState:
    vec = rng.standard_normal(2 * lam.size)
    vec /= np.linalg.norm(vec)
    return LinearState(vec[0::2] / np.sqrt(lam), vec[1::2])


def check_lipschitz(rng: np.random.Generator, quick: bool = False) -> Criterion:
    """max/min of sup_t ratio over separations 1e-3 .. 1e-6."""
    sc = _cubic_scenario(16 if quick else 32, 2.0 if quick else 5.0, 0.01)
    xi = sc.initial_state
    d = _unit_direction(rng, sc.spectrum.eigenvalues)
    seps = (1e-3, 1e-5) if quick else (1e-3, 1e-4, 1e-5, 1e-6)
    ratios = [lipschitz_probe(xi, xi + d * s, sc).ratio_energy for s in seps]
    return _criterion(8, "lipschitz_decade_spread", "max/min ratio", max(ratios) / min(ratios), "<=", 2.0)


def check_squeezing(seed: int, quick: bool = False, threads: Optional[int] = None) -> List[Criterion]:
    """
    Ensemble-doubling stability of L, and the linear flow against its oracle.

    Pairs start from the ensemble's final states; separations are
    R·(1e−3 .. 1e−6) for the measured absorbing radius R, so every member
    stays in the ball and the sweep spans three decades.
    """
    n_bases = 2 if quick else 13
    sc = _cubic_scenario(16 if quick else 32, 2.0 if quick else 5.0, 0.01)
    Ls = []
    for size in (n_bases, 2 * n_bases):
        ens = EnsembleRun.random(sc, size, seed)
        trajs = ens.run(threads)
        R = absorbing_radius(trajs).radius
        bases = [t.final_state for t in trajs]
        seps = [R * s for s in SQUEEZE_SEPARATIONS]
        pairs = make_pairs(bases, seps, make_rng(seed + 1), sc.spectrum.eigenvalues)
        Ls.append(squeezing_probe(sc, pairs, radius=R, threads=threads).L)
    spread = max(Ls) / min(Ls)

    linear = sc.with_changes(nonlinearity=Nonlinearity.zero(), T=1.0)
    bound, direction = linear.propagator.squeezing_bound(1.0)
    pairs = make_pairs(
        [linear.initial_state], SQUEEZE_SEPARATIONS, make_rng(seed), linear.spectrum.eigenvalues, (direction,)
    )
    measured = squeezing_probe(linear, pairs, threads=threads).L
    return [
        _criterion(9, "squeezing_ensemble_doubling", "max/min L", spread, "<=", 2.0),
        _criterion(9, "squeezing_linear_oracle", "relative error", abs(measured - bound) / bound, "<=", 0.1),
    ]


# ---------------------------------------------------------------------------
# 10: box counting
# ---------------------------------------------------------------------------


def check_box_counting(rng: np.random.Generator, quick: bool = False) -> Criterion:
    """Worst relative deviation over: fixed point (0), circle (1), 2- and 3-cube."""
    fixed = box_counting_dimension(np.tile([0.3, -0.2], (1000, 1)))
    deviations = [abs(fixed.dimension)]
    theta = rng.uniform(0.0, 2.0 * np.pi, 4000)
    circle = box_counting_dimension(np.column_stack([np.cos(theta), np.sin(theta)]))
    deviations.append(abs(circle.dimension - 1.0) / 0.15)
    for p, n in ((2, 10000), (3, 20000 if quick else 50000)):
        cube = box_counting_dimension(rng.uniform(0.0, 1.0, (n, p)))
        deviations.append(abs(cube.dimension - p) / (0.1 * p))
    return _criterion(10, "box_counting_synthetic", "deviation/tolerance", max(deviations), "<=", 1.0)


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------


def run_acceptance(
    seed: int = 0,
    *,
    quick: bool = False,
    threads: Optional[int] = None,
    metrics: Optional[BaseLogger] = None,
) -> List[Criterion]:
    """
    Run every check in order. Each check draws from its own Philox stream
    (seed + criterion number), so results do not depend on which checks ran
    before.
    """
    metrics = metrics or NullLogger()

    def rng(k: int) -> np.random.Generator:
        return make_rng(seed + k)

    checks: Dict[int, Callable[[], object]] = {
        1: lambda: check_propagator_exactness(rng(1), quick),
        2: lambda: check_change_of_variables(rng(2), quick),
        3: lambda: check_energy_identity(quick),
        4: lambda: check_dissipation(quick),
        5: lambda: check_strichartz(quick),
        6: lambda: check_cluster(rng(6), quick),
        7: lambda: check_smoothing(quick),
        8: lambda: check_lipschitz(rng(8), quick),
        9: lambda: check_squeezing(seed + 9, quick, threads),
        10: lambda: check_box_counting(rng(10), quick),
    }
    results: List[Criterion] = []
    for number, check in checks.items():
        logger.info("Acceptance check %d", number)
        out = check()
        rows = out if isinstance(out, list) else [out]
        for row in rows:
            metrics.log_metrics(step=row.number, name=row.name, measured=row.measured, passed=row.passed)
            if not row.passed:
                logger.warning("Acceptance %d (%s) failed: %.6g %s %.6g",
                               row.number, row.name, row.measured, row.relation, row.threshold)
        results.extend(rows)
    return results
