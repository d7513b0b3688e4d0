from __future__ import annotations

import math

import numpy as np
import pytest

from fracwave.exceptions import DomainError, InsufficientDataError, InvalidWindowError
from fracwave.norms import (
    MixedNormAccumulator,
    cluster_ceiling,
    cluster_quotient_sweep,
    dissipation_q_table,
    energy_norm,
    exponential_fit,
    identity_residual,
    l10_norm,
    mixed_norm_L5L10,
    power_law_fit,
    semigroup_smoothing_constant,
    smoothing_probe,
    sobolev_cluster_constant,
    strichartz_window_table,
    tail_level,
    window_ratio_spread,
)
from fracwave.propagator import DampingParams, LinearState
from fracwave.semilinear import Nonlinearity, Scenario, integrate
from fracwave.spectral import BoxDomain, SpectralField, build_spectrum


def _linear(spectrum, u0, T=1.0, dt=0.01, **kwargs) -> Scenario:
    return Scenario(spectrum, DampingParams(1.0, 0.25), Nonlinearity.zero(), u0, T=T, dt=dt, **kwargs)


# ---------------------------------------------------------------------------
# Energy and L¹⁰ norms
# ---------------------------------------------------------------------------


def test_energy_norm_levels() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 4)
    state = LinearState(np.array([1.0, 0, 0, 0]), np.array([0, 2.0, 0, 0]))
    lam1, lam2 = spectrum.eigenvalues[:2]
    assert energy_norm(state, spectrum) == pytest.approx(math.sqrt(lam1 + 4.0))
    assert energy_norm(state, spectrum, "E1") == pytest.approx(math.sqrt(lam1**2 + 4.0 * lam2))
    expected = math.sqrt(lam1**1.25 + 4.0 * lam2**0.25)
    assert energy_norm(state, spectrum, "Ealpha", alpha=0.25) == pytest.approx(expected)
    with pytest.raises(DomainError):
        energy_norm(state, spectrum, "Ealpha")


def test_l10_norm_wallis() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 32)
    u = SpectralField.from_modes(spectrum, {(1,): 2.0})
    expected = 2.0 * (32.0 * 63.0 / 256.0) ** 0.1
    assert l10_norm(u) == pytest.approx(expected, rel=1e-10)


def test_mixed_norm_accumulator() -> None:
    acc = MixedNormAccumulator(0.0, 2.0)
    for t in np.linspace(0.0, 2.0, 9):
        acc.add(t, 3.0)
    assert acc.weights().sum() == pytest.approx(2.0)
    assert acc.value() == pytest.approx((2.0 * 3.0**5) ** 0.2)
    with pytest.raises(InvalidWindowError):
        acc.add(1.0, 3.0)
    with pytest.raises(InvalidWindowError):
        MixedNormAccumulator(1.0, 0.0)


def test_mixed_norm_of_trajectory() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 16)
    traj = integrate(_linear(spectrum, SpectralField.from_modes(spectrum, {(1,): 1.0})))
    full = mixed_norm_L5L10(traj)
    half = mixed_norm_L5L10(traj, (0.0, 0.5))
    assert 0.0 < half < full
    assert mixed_norm_L5L10(traj, (0.3, 0.3)) == 0.0
    with pytest.raises(InvalidWindowError):
        mixed_norm_L5L10(traj, (0.5, 2.0))


# ---------------------------------------------------------------------------
# Clusters
# ---------------------------------------------------------------------------


def test_cluster_ceiling_formula() -> None:
    spectrum = build_spectrum(BoxDomain((1.0, 2.0)), 4)
    value = cluster_ceiling(spectrum, 16.0, 3)
    assert value == pytest.approx((3 * 2.0 * 1.0) ** 0.3 / 16.0**0.4)


def test_cluster_sweep_within_ceiling() -> None:
    spectrum = build_spectrum(BoxDomain.unit(2), 10)
    rng = np.random.default_rng(8)
    fields = [SpectralField.random(spectrum, rng) for _ in range(2)]
    sweep = cluster_quotient_sweep(spectrum, fields, np.arange(1.0, 31.0), threads=2)
    assert sweep.within_ceiling
    assert sweep.constant > 0.0
    # √λ ≥ √2·π ≈ 4.44, so the windows starting at 1, 2 and 3 are empty
    assert sweep.rows[0].empty and sweep.rows[0].quotient == 0.0
    # (1,2) and (2,1) have √λ = √5·π ∈ [7, 8)
    assert sweep.rows[6].n_modes == 2
    assert all(r.sobolev_scaling == pytest.approx(math.sqrt(r.lam)) for r in sweep.rows)
    assert sweep.within_sobolev
    assert sweep.sobolev_constant == pytest.approx(sobolev_cluster_constant(spectrum, np.arange(1.0, 31.0)))
    for r in sweep.rows:
        assert r.quotient <= r.sobolev_scaling * sweep.sobolev_constant * (1.0 + 1e-12)
        if not r.empty:
            assert r.ceiling <= r.sobolev_scaling * sweep.sobolev_constant * (1.0 + 1e-12)


def test_sobolev_cluster_constant_formula() -> None:
    spectrum = build_spectrum(BoxDomain.unit(2), 10)
    # only (1,2) and (2,1) in [7, 8); Π 2/L_i = 4
    assert sobolev_cluster_constant(spectrum, [7.0]) == pytest.approx(8.0**0.3 / 7.0**0.9)
    assert sobolev_cluster_constant(spectrum, [1.0, 2.0]) == 0.0


def test_cluster_sweep_rejects_small_window() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 8)
    with pytest.raises(DomainError):
        cluster_quotient_sweep(spectrum, [SpectralField.zeros(spectrum)], [0.5])


def test_cluster_sweep_is_thread_independent() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 64)
    u = SpectralField(spectrum, np.ones(spectrum.count))
    a = cluster_quotient_sweep(spectrum, [u], np.arange(1.0, 60.0), threads=1)
    b = cluster_quotient_sweep(spectrum, [u], np.arange(1.0, 60.0), threads=4)
    assert a.rows == b.rows


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


def test_exponential_fit_exact_decay() -> None:
    t = np.linspace(0.0, 10.0, 101)
    fit = exponential_fit(t, 3.0 * np.exp(-0.5 * t))
    assert fit.valid
    assert fit.exponent == pytest.approx(0.5, rel=1e-9)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-9)
    assert fit.offset == 0.0


def test_exponential_fit_flags_growth() -> None:
    t = np.linspace(0.0, 5.0, 51)
    assert not exponential_fit(t, np.exp(0.3 * t)).valid
    assert not exponential_fit(t, np.ones_like(t)).valid
    assert not exponential_fit(t[:2], np.ones(2)).valid


def test_tail_level() -> None:
    flat = np.concatenate([np.linspace(5.0, 1.0, 90), np.full(10, 1.0)])
    assert tail_level(flat)[0] == pytest.approx(1.0)
    assert tail_level(np.linspace(5.0, 1.0, 100))[0] == 0.0


def test_power_law_fit() -> None:
    t = np.geomspace(0.01, 1.0, 12)
    fit = power_law_fit(t, 2.0 * t**-1.5)
    assert fit.exponent == pytest.approx(1.5)
    assert fit.prefactor == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(InsufficientDataError):
        power_law_fit(t[:5], t[:5])


def test_dissipation_table_single_cube_mode() -> None:
    spectrum = build_spectrum(BoxDomain.unit(3), 4)
    u0 = SpectralField.from_modes(spectrum, {(1, 1, 1): 1.0})
    sc = _linear(spectrum, u0, T=20.0, dt=0.02, stride=2)
    rows, monotone = dissipation_q_table(sc, (0.1, 1.0, 10.0), threads=2)
    expected = 0.5 * (3.0 * math.pi**2) ** 0.25
    assert monotone
    for row in rows:
        assert row.valid
        assert row.beta == pytest.approx(expected, rel=0.05)
    assert rows[2].Q / rows[1].Q == pytest.approx(10.0, rel=1e-6)


def test_dissipation_table_rejects_zero_data() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 4)
    sc = _linear(spectrum, SpectralField.zeros(spectrum))
    with pytest.raises(DomainError):
        dissipation_q_table(sc)


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


def test_semigroup_smoothing_constant_closed_form() -> None:
    closed = semigroup_smoothing_constant(1.0, 0.25, 0.1)
    numeric = semigroup_smoothing_constant(1.0, 0.25, 0.1, method="numeric")
    assert numeric == pytest.approx(closed, rel=1e-6)
    with pytest.raises(DomainError):
        semigroup_smoothing_constant(1.0, 0.25, 0.0)


def test_smoothing_rough_data_follows_semigroup_rate() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 2**14)
    u0 = SpectralField(spectrum, spectrum.power(-0.75))
    report = smoothing_probe(_linear(spectrum, u0))
    assert report.semigroup_exponent == 2.0
    assert report.bound_exponent == 4.0
    assert report.within_bound
    assert report.relative_to_semigroup <= 0.15


def test_smoothing_steep_rough_data_stays_within_bound() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 2**14)
    marginal = smoothing_probe(_linear(spectrum, SpectralField(spectrum, spectrum.power(-0.75))))
    steep = smoothing_probe(_linear(spectrum, SpectralField(spectrum, spectrum.power(-0.55))))
    # outside E: blows up faster than the semigroup rate but not faster than 1/α
    assert steep.within_bound
    assert steep.fit.exponent <= steep.bound_exponent
    assert steep.fit.exponent > marginal.fit.exponent + 0.3


def test_smoothing_smooth_data_does_not_blow_up() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 2**10)
    u0 = SpectralField.from_modes(spectrum, {(1,): 1.0})
    report = smoothing_probe(_linear(spectrum, u0))
    assert abs(report.fit.exponent) < 0.5


def test_smoothing_needs_enough_modes() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 64)
    u0 = SpectralField(spectrum, spectrum.power(-0.75))
    with pytest.raises(InsufficientDataError):
        smoothing_probe(_linear(spectrum, u0))


# ---------------------------------------------------------------------------
# Energy identity and Strichartz table
# ---------------------------------------------------------------------------


def test_identity_residual_linear_flow() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 16)
    u0 = SpectralField.from_modes(spectrum, {(1,): 1.0, (3,): 0.2})
    traj = integrate(_linear(spectrum, u0, T=2.0, dt=0.002))
    assert abs(identity_residual(traj)) < 1e-5
    assert identity_residual(traj, (1.0, 1.0)) == 0.0
    with pytest.raises(InvalidWindowError):
        identity_residual(traj, (1.5, 1.0))


def test_strichartz_table_ratios_settle() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 16)
    params = DampingParams(1.0, 0.25)
    xi0 = LinearState.from_fields(SpectralField.from_modes(spectrum, {(1,): 0.1}))
    profile = SpectralField.from_modes(spectrum, {(1,): 1.0, (2,): 0.5})
    rows = strichartz_window_table(spectrum, params, xi0, profile, 10)
    assert [r.window for r in rows] == list(range(10))
    assert rows[0].transient and not rows[-1].transient
    assert all(r.mixed_norm > 0.0 and r.h1a_integral > 0.0 for r in rows)
    assert window_ratio_spread(rows) < 3.0


def test_strichartz_table_validation() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 8)
    other = build_spectrum(BoxDomain.unit(1), 8)
    params = DampingParams(1.0, 0.25)
    xi0 = LinearState.zeros(8)
    with pytest.raises(DomainError):
        strichartz_window_table(spectrum, params, xi0, SpectralField.zeros(other))
    with pytest.raises(DomainError):
        strichartz_window_table(spectrum, params, xi0, SpectralField.zeros(spectrum), steps_per_window=3)


def test_window_ratio_spread_all_transient() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 8)
    xi0 = LinearState.from_fields(SpectralField.from_modes(spectrum, {(1,): 10.0}))
    rows = strichartz_window_table(
        spectrum, DampingParams(1.0, 0.25), xi0, SpectralField.zeros(spectrum), 2
    )
    assert math.isnan(window_ratio_spread(rows))
