from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np
import pytest

from fracwave.attractor import (
    AttractorSample,
    EnsembleRun,
    absorbing_radius,
    attraction_rate,
    box_counting_dimension,
    distance_to_sample,
    energy_coordinates,
    make_pairs,
    SQUEEZE_SEPARATIONS,
    make_rng,
    sample_attractor,
    semigroup_defect,
    separation_span,
    squeezing_decades,
    squeezing_probe,
    time_lipschitz,
)
from fracwave.exceptions import DomainError, InsufficientDataError, PairSelectionError
from fracwave.propagator import DampingParams, LinearState, linear_squeezing_bound
from fracwave.semilinear import Nonlinearity, Scenario
from fracwave.spectral import BoxDomain, SpectralField, build_spectrum


def _scenario(nonlinearity: Nonlinearity, *, n: int = 8, T: float = 5.0, dt: float = 0.05,
              forcing: Optional[dict] = None) -> Scenario:
    spectrum = build_spectrum(BoxDomain.unit(1), n)
    g = SpectralField.from_modes(spectrum, forcing) if forcing else None
    return Scenario(
        spectrum,
        DampingParams(1.0, 0.25),
        nonlinearity,
        SpectralField.zeros(spectrum),
        T=T,
        dt=dt,
        forcing=g,
    )


# ---------------------------------------------------------------------------
# Ensembles and the absorbing ball
# ---------------------------------------------------------------------------


def test_make_rng_is_reproducible() -> None:
    a = make_rng(42).standard_normal(5)
    b = make_rng(42).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(43).standard_normal(5))


def test_energy_coordinates_norm_is_energy_norm() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 4)
    pos, vel = np.array([1.0, 0, 2.0, 0]), np.array([0, 1.0, 0, 0])
    pts = energy_coordinates(pos, vel, spectrum.eigenvalues)
    expected = np.sqrt(spectrum.eigenvalues[0] + 1.0 + 4.0 * spectrum.eigenvalues[2])
    assert np.linalg.norm(pts) == pytest.approx(expected)
    assert pts[0] == pytest.approx(np.pi)


def test_random_ensemble_has_requested_radius() -> None:
    sc = _scenario(Nonlinearity.zero())
    ens = EnsembleRun.random(sc, 5, seed=3, radius=2.0)
    again = EnsembleRun.random(sc, 5, seed=3, radius=2.0)
    lam = sc.spectrum.eigenvalues
    for a, b in zip(ens.initial_data, again.initial_data):
        assert np.array_equal(a.position, b.position)
        assert np.linalg.norm(energy_coordinates(a.position, a.velocity, lam)) == pytest.approx(2.0)
    assert ens.size == 5 and ens.seed == 3


def test_ensemble_trajectory_cache_is_private() -> None:
    sc = _scenario(Nonlinearity.zero(), T=1.0)
    fields = {f.name: f for f in dataclasses.fields(EnsembleRun)}
    cache = fields["_trajectories"]
    assert not cache.init and not cache.repr and not cache.compare
    with pytest.raises(TypeError):
        EnsembleRun(sc, (), _trajectories={})
    ens = EnsembleRun.random(sc, 2, seed=0)
    assert "_trajectories" not in repr(ens)


def test_ensemble_validation() -> None:
    sc = _scenario(Nonlinearity.zero())
    with pytest.raises(DomainError):
        EnsembleRun(sc, (), transient=-1.0)
    with pytest.raises(DomainError):
        EnsembleRun(sc, (LinearState.zeros(3),))
    with pytest.raises(InsufficientDataError):
        EnsembleRun(sc, ()).run()


def test_linear_absorbing_ball_is_invariant() -> None:
    ens = EnsembleRun.random(_scenario(Nonlinearity.zero()), 4, seed=0)
    report = absorbing_radius(ens)
    assert report.radius == pytest.approx(1.05 * report.tail_max)
    assert report.entered.all()
    assert report.positively_invariant
    assert np.all(report.entry_times > 0.0)

    wide = absorbing_radius(ens, radius=10.0)
    assert np.all(wide.entry_times == 0.0)
    assert wide.e1_radius > 0.0


def test_forced_ensemble_enters_ball() -> None:
    sc = _scenario(Nonlinearity.cubic_minus_linear(), T=10.0, forcing={(1,): 5.0})
    ens = EnsembleRun.random(sc, 4, seed=1, radius=3.0)
    report = absorbing_radius(ens, threads=2)
    assert report.entered.all()
    assert report.tail_max > 0.0


# ---------------------------------------------------------------------------
# Squeezing
# ---------------------------------------------------------------------------


def test_squeezing_linear_oracle() -> None:
    sc = _scenario(Nonlinearity.zero(), n=12, T=1.0, dt=0.05)
    bound, direction = linear_squeezing_bound(sc.spectrum, sc.damping, 1.0)
    rng = make_rng(5)
    base = [LinearState.zeros(sc.spectrum.count)]
    worst = make_pairs(base, SQUEEZE_SEPARATIONS, rng, sc.spectrum.eigenvalues, directions=[direction])
    report = squeezing_probe(sc, worst)
    assert report.L == pytest.approx(bound, rel=1e-8)
    assert report.decade_stable

    random_pairs = make_pairs(base * 3, [1e-3, 1e-6], rng, sc.spectrum.eigenvalues)
    assert squeezing_probe(sc, random_pairs, threads=2).L <= bound * (1.0 + 1e-8)


def test_make_pairs_separation() -> None:
    spectrum = build_spectrum(BoxDomain.unit(1), 6)
    lam = spectrum.eigenvalues
    pairs = make_pairs([LinearState.zeros(6)], [1e-2, 1e-5], make_rng(0), lam)
    assert len(pairs) == 2
    for (a, b), s in zip(pairs, [1e-2, 1e-5]):
        d = b - a
        assert np.linalg.norm(energy_coordinates(d.position, d.velocity, lam)) == pytest.approx(s)


def test_squeezing_rejects_degenerate_pairs() -> None:
    sc = _scenario(Nonlinearity.zero(), T=1.0)
    xi = LinearState.zeros(sc.spectrum.count)
    with pytest.raises(DomainError):
        squeezing_probe(sc, [(xi, xi)])
    with pytest.raises(InsufficientDataError):
        squeezing_probe(sc, [])


def test_squeezing_requires_three_decades() -> None:
    sc = _scenario(Nonlinearity.zero(), T=1.0)
    base = [LinearState.zeros(sc.spectrum.count)]
    narrow = make_pairs(base, [1e-4, 1e-5], make_rng(0), sc.spectrum.eigenvalues)
    with pytest.raises(PairSelectionError, match="decades"):
        squeezing_probe(sc, narrow)
    with pytest.raises(ValueError):
        squeezing_probe(sc, narrow)
    # a looser requirement lets the same pairs through
    assert squeezing_probe(sc, narrow, min_decades=1.0).L > 0.0


def test_squeezing_members_must_lie_in_ball() -> None:
    sc = _scenario(Nonlinearity.zero(), T=1.0)
    lam = sc.spectrum.eigenvalues
    velocity = np.zeros(sc.spectrum.count)
    velocity[0] = 5.0
    far = LinearState(np.zeros(sc.spectrum.count), velocity)
    pairs = make_pairs([far], SQUEEZE_SEPARATIONS, make_rng(1), lam)
    with pytest.raises(PairSelectionError, match="absorbing ball"):
        squeezing_probe(sc, pairs, radius=2.0)
    assert squeezing_probe(sc, pairs, radius=6.0).L > 0.0


def test_separation_span() -> None:
    assert separation_span(SQUEEZE_SEPARATIONS) == pytest.approx(3.0)
    assert separation_span([2.0, 2.0]) == 0.0
    assert separation_span([]) == 0.0
    assert separation_span([1.0, -1.0]) == 0.0


def test_squeezing_decades() -> None:
    decades, stable = squeezing_decades(np.array([1.0, 1.5, 3.0]), np.array([1e-3, 1e-4, 1e-5]))
    assert list(decades) == [-5, -4, -3]
    assert decades[-5] == 3.0
    assert not stable
    assert squeezing_decades(np.array([1.0, 1.5]), np.array([1e-3, 1e-4]))[1]


# ---------------------------------------------------------------------------
# Attractor sample and box counting
# ---------------------------------------------------------------------------


def test_sample_attractor_after_transient() -> None:
    sc = _scenario(Nonlinearity.cubic_minus_linear(), T=4.0, forcing={(1,): 5.0})
    ens = EnsembleRun.random(sc, 3, seed=2, transient=3.0, stride=2)
    sample = sample_attractor(ens)
    # samples at t = 3.0, 3.1, ..., 4.0 (every other of 21) per member
    assert sample.size == 3 * 11
    assert sample.points.shape[1] == 2 * sc.spectrum.count
    assert sample.inside_radius
    assert sample.transient == 3.0

    late = EnsembleRun.random(sc, 2, seed=2, transient=10.0)
    with pytest.raises(InsufficientDataError):
        sample_attractor(late)


def test_box_counting_fixed_point() -> None:
    fit = box_counting_dimension(np.ones((1000, 3)))
    assert fit.dimension == 0.0


def test_box_counting_circle() -> None:
    theta = make_rng(0).uniform(0.0, 2.0 * np.pi, 4000)
    points = np.column_stack([np.cos(theta), np.sin(theta)])
    fit = box_counting_dimension(points)
    assert fit.dimension == pytest.approx(1.0, abs=0.15)
    assert len(fit.levels) == 4


@pytest.mark.parametrize("p, n", [(2, 10000), (3, 50000)])
def test_box_counting_uniform_cube(p: int, n: int) -> None:
    points = make_rng(p).uniform(size=(n, p))
    fit = box_counting_dimension(points)
    assert fit.dimension == pytest.approx(p, rel=0.1)


def test_box_counting_projection_and_limits() -> None:
    rng = make_rng(1)
    points = np.column_stack([rng.uniform(size=10000), rng.uniform(size=10000), np.zeros(10000)])
    assert box_counting_dimension(points, dims=2).dimension == pytest.approx(2.0, rel=0.1)
    with pytest.raises(InsufficientDataError):
        box_counting_dimension(points[:999])
    with pytest.raises(DomainError):
        box_counting_dimension(points, dims=4)
    with pytest.raises(InsufficientDataError):
        box_counting_dimension(rng.uniform(size=(1000, 10)))


# ---------------------------------------------------------------------------
# Exponential attraction ingredients
# ---------------------------------------------------------------------------


def test_attraction_ingredients_linear_flow() -> None:
    sc = _scenario(Nonlinearity.zero(), T=4.0)
    ens = EnsembleRun.random(sc, 3, seed=4, transient=2.0)
    trajs = ens.run()
    sample = sample_attractor(ens)
    assert np.all(distance_to_sample(sample.points[:3], sample) == 0.0)
    fit = attraction_rate(trajs, sample)
    assert fit.n_points >= 3
    assert time_lipschitz(trajs) > time_lipschitz(trajs, t_min=2.0) > 0.0


def test_semigroup_defect_linear_flow() -> None:
    sc = _scenario(Nonlinearity.zero(), T=1.0)
    xi = EnsembleRun.random(sc, 1, seed=0).initial_data[0]
    assert semigroup_defect(sc, xi, 0.5, 0.5) < 1e-10


def test_attractor_sample_defaults() -> None:
    sample = AttractorSample(np.zeros((2, 4)))
    assert sample.size == 2
    assert sample.inside_radius
