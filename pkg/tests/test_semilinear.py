from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.optimize import brentq

from fracwave.exceptions import DomainError, RefinementDepthError, SpectrumMismatchError, StepFailure
from fracwave.norms import identity_residual
from fracwave.propagator import DampingParams, LinearState
from fracwave.semilinear import (
    Nonlinearity,
    Scenario,
    _advance_window,
    continuation_accepts,
    eval_nonlinearity,
    galerkin_discrepancy,
    integrate,
    integrate_lockstep,
    integrate_many,
    lipschitz_probe,
    lyapunov_energy,
)
from fracwave.spectral import BoxDomain, SpectralField, build_spectrum


def _cubic(n: int = 16, T: float = 1.0, dt: float = 0.01, **kwargs) -> Scenario:
    spectrum = build_spectrum(BoxDomain.unit(1), n)
    u0 = SpectralField.from_modes(spectrum, {(1,): 1.0, (2,): 0.5})
    return Scenario(spectrum, DampingParams(1.0, 0.25), Nonlinearity.cubic(), u0, T=T, dt=dt, **kwargs)


# ---------------------------------------------------------------------------
# Nonlinearity
# ---------------------------------------------------------------------------


def test_nonlinearity_validation() -> None:
    with pytest.raises(DomainError):
        Nonlinearity.odd_power(0.5)
    with pytest.raises(DomainError):
        Nonlinearity.odd_power(4.0)
    with pytest.raises(DomainError):
        Nonlinearity("quintic")
    with pytest.raises(DomainError):
        Nonlinearity.polynomial([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])


def test_nonlinearity_kinds() -> None:
    s = np.linspace(-2.0, 2.0, 9)
    assert np.allclose(Nonlinearity.cubic().f(s), s**3)
    assert np.allclose(Nonlinearity.cubic_minus_linear().F(s), s**4 / 4 - s**2 / 2)
    poly = Nonlinearity.polynomial([0.0, 1.0, 0.0, 2.0])
    assert poly.q == 2.0
    assert poly.polynomial_degree == 3
    assert np.allclose(poly.df(s), 1.0 + 6.0 * s**2)
    assert Nonlinearity.odd_power(1.5).polynomial_degree is None
    assert Nonlinearity.odd_power(3.5).oversampling == 3
    assert Nonlinearity.cubic().oversampling == 2


def test_check_assumptions() -> None:
    check = Nonlinearity.cubic_minus_linear().check_assumptions()
    assert check.dissipative
    assert check.min_product == pytest.approx(-0.25, abs=1e-6)
    assert check.growth_constant <= 3.0 + 1e-12
    focusing = Nonlinearity.polynomial([0.0, 0.0, 0.0, -1.0])
    assert not focusing.check_assumptions().dissipative


def test_cubic_projection_of_first_mode() -> None:
    # (√2 sin πx)³ = (3/2)·e₁ − (1/2)·e₃
    spectrum = build_spectrum(BoxDomain.unit(1), 8)
    u = SpectralField.from_modes(spectrum, {(1,): 1.0})
    out = eval_nonlinearity(u, Nonlinearity.cubic())
    expected = np.zeros(8)
    expected[0], expected[2] = 1.5, -0.5
    assert np.allclose(out.coeffs, expected, atol=1e-13)


def test_zero_nonlinearity_projects_to_zero() -> None:
    spectrum = build_spectrum(BoxDomain.unit(2), 4)
    u = SpectralField.random(spectrum, np.random.default_rng(0))
    assert not np.any(eval_nonlinearity(u, Nonlinearity.zero()).coeffs)


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


def test_scenario_validation() -> None:
    sc = _cubic()
    with pytest.raises(DomainError):
        sc.with_changes(dt=0.0)
    with pytest.raises(DomainError):
        sc.with_changes(T=0.001)
    other = build_spectrum(BoxDomain.unit(1), 16)
    with pytest.raises(SpectrumMismatchError):
        sc.with_changes(u0=SpectralField.zeros(other))


def test_with_changes_shares_propagator() -> None:
    sc = _cubic()
    assert sc.with_changes(T=2.0).propagator is sc.propagator


def test_continuation_accepts() -> None:
    ok, eps = continuation_accepts(0.0, 1.0, 2.0)
    assert ok and eps == 0.0
    ok, eps = continuation_accepts(1.0, 0.0, 2.0)
    assert ok and math.isinf(eps)
    assert continuation_accepts(0.1, 1.0, 2.0, epsilon=0.1)[0]
    assert not continuation_accepts(0.3, 1.0, 2.0, epsilon=0.1)[0]


@pytest.mark.parametrize(
    "q, y, f_norm, accepted",
    [
        (2.0, 1.0, 0.4, True),
        (2.0, 1.0, 0.5, True),
        (2.0, 1.0, 0.6, False),
        (4.0, 0.3, 0.149, True),
        (4.0, 0.3, 0.151, False),
    ],
)
def test_continuation_reduces_to_forcing_bound(q: float, y: float, f_norm: float, accepted: bool) -> None:
    # accepted iff y >= 2 f_norm
    assert continuation_accepts(y, f_norm, q)[0] is accepted


class _BumpKernel:
    """State is the time reached; ℰ spikes at t = 0.5 and ends below its start."""

    def step(self, state, grid, h, t):
        return SimpleNamespace(state=state + h, grid=grid, h=h)

    def accepts(self, rec) -> bool:
        return rec.h < 1.0

    def energy(self, state, grid) -> float:
        return {0.5: 2.0, 1.0: 0.5}.get(state, 1.0)


def test_window_checks_energy_on_every_sub_step() -> None:
    window = _advance_window([_BumpKernel()], [0.0], [None], [1.0], 0.0, 1.0, max_depth=3)
    assert window.depth == 1
    assert window.states == [1.0]
    assert window.energies == [0.5]
    assert window.rises == [True]


def test_window_refinement_depth_is_bounded() -> None:
    with pytest.raises(RefinementDepthError):
        _advance_window([_BumpKernel()], [0.0], [None], [1.0], 0.0, 1.0, max_depth=0)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def test_linear_integration_is_the_exact_flow() -> None:
    spectrum = build_spectrum(BoxDomain.unit(2), 5)
    rng = np.random.default_rng(1)
    u0 = SpectralField.random(spectrum, rng, decay=2.0)
    u1 = SpectralField.random(spectrum, rng)
    sc = Scenario(spectrum, DampingParams(1.0, 0.25), Nonlinearity.zero(), u0, T=1.0, dt=0.1, u1=u1)
    traj = integrate(sc)
    exact = sc.propagator.step_homogeneous(sc.initial_state, 1.0)
    assert len(traj) == 11
    assert np.allclose(traj.final_state.position, exact.position, atol=1e-12)
    assert np.allclose(traj.final_state.velocity, exact.velocity, atol=1e-12)
    assert traj.refined_windows == 0


def test_stride_emits_last_step() -> None:
    traj = integrate(_cubic(T=0.25, dt=0.01, stride=10))
    assert np.allclose(traj.times, [0.0, 0.1, 0.2, 0.25])


def test_single_mode_equilibrium_matches_root() -> None:
    # one mode: π²c + (3/2)c³ = g₁ at rest
    spectrum = build_spectrum(BoxDomain.unit(1), 1)
    g = SpectralField.from_modes(spectrum, {(1,): 10.0})
    sc = Scenario(
        spectrum,
        DampingParams(1.0, 0.25),
        Nonlinearity.cubic(),
        SpectralField.zeros(spectrum),
        T=30.0,
        dt=0.02,
        forcing=g,
        stride=100,
    )
    traj = integrate(sc)
    root = brentq(lambda c: math.pi**2 * c + 1.5 * c**3 - 10.0, 0.0, 10.0)
    assert traj.final_state.position[0] == pytest.approx(root, rel=1e-6)
    assert abs(traj.final_state.velocity[0]) < 1e-6


def test_energy_identity_residual_is_small_and_shrinks() -> None:
    coarse = integrate(_cubic(T=1.0, dt=0.02))
    fine = integrate(_cubic(T=1.0, dt=0.01))
    r_coarse = abs(identity_residual(coarse))
    r_fine = abs(identity_residual(fine))
    assert r_fine < 1e-2 * abs(fine.energies[0])
    assert r_fine < r_coarse


def test_unforced_energy_decays() -> None:
    traj = integrate(_cubic(T=2.0))
    assert traj.energies[-1] < traj.energies[0]
    assert lyapunov_energy(traj.state(0), traj.scenario) == pytest.approx(traj.energies[0])


def test_blow_up_is_reported() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 8)
    focusing = Nonlinearity.polynomial([0.0, 0.0, 0.0, -1.0])
    u0 = SpectralField.from_modes(spectrum, {(1,): 10.0})
    sc = Scenario(spectrum, DampingParams(1.0, 0.25), focusing, u0, T=2.0, dt=0.01, max_refinement=3)
    with pytest.raises(StepFailure) as info:
        integrate(sc)
    assert info.value.window is not None


def test_galerkin_discrepancy_decreases_with_n() -> None:
    coarse = galerkin_discrepancy(_cubic(n=8, T=0.5))
    finer = galerkin_discrepancy(_cubic(n=16, T=0.5))
    assert finer < coarse
    with pytest.raises(DomainError):
        galerkin_discrepancy(_cubic(n=8, T=0.5), n_fine=8)


def test_lockstep_matches_individual_runs() -> None:
    sc = _cubic(T=0.5)
    other = sc.with_initial(sc.u0 * 0.5)
    a, b = integrate_lockstep([sc, other])
    assert np.array_equal(a.positions, integrate(sc).positions)
    assert np.array_equal(b.positions, integrate(other).positions)


def test_lockstep_requires_shared_grid() -> None:
    sc = _cubic(T=0.5)
    with pytest.raises(SpectrumMismatchError):
        integrate_lockstep([sc, sc.with_changes(dt=0.02)])


def test_integrate_many_is_thread_independent() -> None:
    base = _cubic(T=0.2)
    scenarios = [base.with_initial(base.u0 * s) for s in (0.5, 1.0, 1.5)]
    serial = integrate_many(scenarios, threads=1)
    pooled = integrate_many(scenarios, threads=3)
    for a, b in zip(serial, pooled):
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.energies, b.energies)


def test_lipschitz_probe_linear_flow_contracts() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 16)
    rng = np.random.default_rng(3)
    sc = Scenario(spectrum, DampingParams(1.0, 0.25), Nonlinearity.zero(),
                  SpectralField.zeros(spectrum), T=1.0, dt=0.05)
    xi1 = LinearState(rng.standard_normal(16) / spectrum.eigenvalues, rng.standard_normal(16))
    xi2 = xi1 * 0.5
    report = lipschitz_probe(xi1, xi2, sc)
    assert report.ratio_energy <= 1.0 + 1e-12
    assert report.growth_exponent < 1e-12
    assert report.ratio_strichartz > 0.0
    assert lipschitz_probe(xi1, xi1, sc).separation == 0.0
