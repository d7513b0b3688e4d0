from __future__ import annotations

"""
Long-time dynamics diagnostics.

- `EnsembleRun`          : a scenario template plus a seeded family of
                           initial data.
- `absorbing_radius`     : measured radius of the absorbing ball and entry
                           times.
- `squeezing_probe`      : sup ‖S₁ξ₁ − S₁ξ₂‖_{E_α} / ‖ξ₁ − ξ₂‖_E over pairs
                           inside the absorbing ball, separations spanning
                           at least three decades.
- `sample_attractor`     : post-transient snapshots in energy coordinates.
- `box_counting_dimension`: dyadic box counting on a low-mode projection.
- `attraction_rate`, `time_lipschitz`, `semigroup_defect`: the remaining
  ingredients of exponential attraction.

Energy coordinates
------------------
A state (c, ċ) is mapped to the interleaved vector
(√λ₁c₁, ċ₁, √λ₂c₂, ċ₂, ...), whose Euclidean norm is the E-norm. Leading
columns therefore carry the largest scales.

Random initial data come from `numpy.random.Generator(Philox(seed))`: fixed
seeds reproduce ensembles bit for bit on every platform.
"""

from dataclasses import dataclass, field
import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import linregress

from .exceptions import DomainError, InsufficientDataError, PairSelectionError
from .norms import RateFit, exponential_fit
from .propagator import LinearState
from .semilinear import Scenario, Trajectory, integrate, integrate_lockstep, map_concurrently
from .spectral import SpectralField


logger = logging.getLogger(__name__)

MIN_BOX_SAMPLES = 1000
MIN_BOX_LEVELS = 4
MAX_PROJECTION_DIMS = 10
MIN_SQUEEZE_DECADES = 3.0
SQUEEZE_SEPARATIONS = (1e-3, 1e-4, 1e-5, 1e-6)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


def energy_coordinates(positions: np.ndarray, velocities: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """Interleave (√λ_k c_k, ċ_k) by mode; works on (..., count) arrays."""
    positions = np.asarray(positions, dtype=float)
    out = np.empty(positions.shape[:-1] + (2 * positions.shape[-1],))
    out[..., 0::2] = np.sqrt(eigenvalues) * positions
    out[..., 1::2] = velocities
    return out


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnsembleRun:
    """
    Family of trajectories sharing one scenario template.

    Attributes
    ----------
    scenario:
        Template; its initial data are replaced by ``initial_data``.
    initial_data:
        One state per member.
    transient:
        Cutoff T₀ ≥ 0 before which samples are discarded.
    stride:
        Keep every ``stride``-th stored sample after T₀.
    seed:
        Seed the initial data were drawn with (metadata).
    scenario_hash:
        Identifier of the generating configuration (metadata).
    """

    scenario: Scenario
    initial_data: Tuple[LinearState, ...]
    transient: float = 0.0
    stride: int = 1
    seed: Optional[int] = None
    scenario_hash: str = ""
    _trajectories: Dict[str, List[Trajectory]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_data", tuple(self.initial_data))
        if self.transient < 0.0:
            raise DomainError(f"Transient cutoff must be >= 0, got {self.transient}")
        if int(self.stride) < 1:
            raise DomainError(f"stride must be >= 1, got {self.stride}")
        for xi in self.initial_data:
            if xi.count != self.scenario.spectrum.count:
                raise DomainError("Initial data do not match the scenario spectrum")

    @classmethod
    def random(
        cls,
        scenario: Scenario,
        size: int,
        seed: int,
        *,
        radius: float = 1.0,
        decay: float = 2.0,
        transient: float = 0.0,
        stride: int = 1,
        scenario_hash: str = "",
    ) -> "EnsembleRun":
        """
        ``size`` random states of E-norm ``radius``; coefficients decay like
        λ^{−decay/2} before normalization.
        """
        rng = make_rng(seed)
        spectrum = scenario.spectrum
        data = []
        for _ in range(int(size)):
            u0 = SpectralField.random(spectrum, rng, decay=decay + 1.0)
            u1 = SpectralField.random(spectrum, rng, decay=decay)
            state = LinearState(u0.coeffs, u1.coeffs)
            norm = float(np.linalg.norm(energy_coordinates(state.position, state.velocity, spectrum.eigenvalues)))
            data.append(state * (radius / norm) if norm > 0.0 else state)
        return cls(scenario, tuple(data), transient, stride, int(seed), scenario_hash)

    @property
    def size(self) -> int:
        return len(self.initial_data)

    def run(self, threads: Optional[int] = None) -> List[Trajectory]:
        """Integrate every member (cached per ensemble)."""
        if not self.initial_data:
            raise InsufficientDataError("Ensemble is empty")
        cached = self._trajectories.get("all")
        if cached is None:
            scenarios = [self.scenario.with_state(xi) for xi in self.initial_data]
            cached = map_concurrently(integrate, scenarios, threads)
            self._trajectories["all"] = cached
        return cached


# ---------------------------------------------------------------------------
# Absorbing set
# ---------------------------------------------------------------------------


class AbsorbingReport(NamedTuple):
    """
    Attributes
    ----------
    radius:
        Radius R of the absorbing E-ball.
    tail_max:
        Largest E-norm over the final quarter of all trajectories.
    entry_times:
        Per trajectory, the first time after which ‖ξ(t)‖_E ≤ R for good
        (nan if never).
    entered:
        Per trajectory, whether the ball was entered within the horizon.
    e1_radius:
        Largest E₁-norm after entry over all trajectories.
    positively_invariant:
        Whether no trajectory left the ball after its first entry
        (relative tolerance 1e−9).
    """

    radius: float
    tail_max: float
    entry_times: np.ndarray
    entered: np.ndarray
    e1_radius: float
    positively_invariant: bool


def absorbing_radius(
    ensemble: Union[EnsembleRun, Sequence[Trajectory]],
    *,
    radius: Optional[float] = None,
    margin: float = 0.05,
    threads: Optional[int] = None,
) -> AbsorbingReport:
    """
    Measure the absorbing ball of an ensemble.

    With ``radius=None`` the radius is (1 + margin) times the largest E-norm
    seen over the final quarter of the horizon.

    Raises
    ------
    InsufficientDataError
        If the ensemble is empty.
    """
    trajs = ensemble.run(threads) if isinstance(ensemble, EnsembleRun) else list(ensemble)
    if not trajs:
        raise InsufficientDataError("Ensemble is empty")
    norms = [t.energy_norms() for t in trajs]
    tail = []
    for traj, n in zip(trajs, norms):
        start = traj.times[0] + 0.75 * (traj.times[-1] - traj.times[0])
        tail.append(float(n[traj.times >= start].max()))
    tail_max = max(tail)
    R = (1.0 + margin) * tail_max if radius is None else float(radius)

    entry = np.full(len(trajs), np.nan)
    invariant = True
    e1 = 0.0
    for i, (traj, n) in enumerate(zip(trajs, norms)):
        outside = np.nonzero(n > R)[0]
        if outside.size == 0:
            first = 0
        elif outside[-1] + 1 < n.size:
            first = int(outside[-1] + 1)
        else:
            logger.warning("Trajectory %d never enters the ball of radius %.4g", i, R)
            continue
        entry[i] = traj.times[first]
        e1 = max(e1, float(traj.energy_norms(1.0)[first:].max()))
        inside = np.nonzero(n <= R)[0]
        if inside.size and np.any(n[inside[0]:] > R * (1.0 + 1e-9)):
            invariant = False
    return AbsorbingReport(
        radius=R,
        tail_max=tail_max,
        entry_times=entry,
        entered=~np.isnan(entry),
        e1_radius=e1,
        positively_invariant=invariant,
    )


# ---------------------------------------------------------------------------
# Squeezing
# ---------------------------------------------------------------------------


class SqueezingReport(NamedTuple):
    """
    Attributes
    ----------
    L:
        Max ratio over all pairs.
    ratios, separations:
        Per-pair ratio and initial E-separation.
    decade_max:
        Max ratio per separation decade (floor(log10 separation)).
    decade_stable:
        Max/min of ``decade_max`` is at most 2.
    """

    L: float
    ratios: np.ndarray
    separations: np.ndarray
    decade_max: Dict[int, float]
    decade_stable: bool


def make_pairs(
    bases: Sequence[LinearState],
    separations: Sequence[float],
    rng: np.random.Generator,
    eigenvalues: np.ndarray,
    directions: Sequence[LinearState] = (),
) -> List[Tuple[LinearState, LinearState]]:
    """
    Pairs (ξ, ξ + s·d) for every base ξ and separation s; d is a random
    unit-E direction unless explicit ``directions`` are given (cycled).
    """
    root = np.sqrt(eigenvalues)
    pairs = []
    for xi in bases:
        for s in separations:
            if directions:
                d = directions[len(pairs) % len(directions)]
            else:
                vec = rng.standard_normal(2 * xi.count)
                vec /= np.linalg.norm(vec)
                d = LinearState(vec[0::2] / root, vec[1::2])
            e = float(np.linalg.norm(energy_coordinates(d.position, d.velocity, eigenvalues)))
            pairs.append((xi, xi + d * (float(s) / e)))
    return pairs


def squeezing_decades(ratios: np.ndarray, separations: np.ndarray, factor: float = 2.0) -> Tuple[Dict[int, float], bool]:
    """Per-decade max ratio and whether the decades agree within ``factor``."""
    decades: Dict[int, float] = {}
    for r, s in zip(ratios, separations):
        key = int(np.floor(np.log10(s)))
        decades[key] = max(decades.get(key, 0.0), float(r))
    values = [v for v in decades.values() if v > 0.0]
    stable = bool(values) and max(values) <= factor * min(values)
    return dict(sorted(decades.items())), stable


def separation_span(separations: Sequence[float]) -> float:
    """Decades spanned by the separations: log10(max / min)."""
    seps = np.asarray(separations, dtype=float)
    if seps.size == 0 or not np.all(seps > 0.0):
        return 0.0
    return float(np.log10(seps.max() / seps.min()))


def squeezing_probe(
    scenario: Scenario,
    pairs: Sequence[Tuple[LinearState, LinearState]],
    t: float = 1.0,
    *,
    radius: Optional[float] = None,
    min_decades: float = MIN_SQUEEZE_DECADES,
    threads: Optional[int] = None,
) -> SqueezingReport:
    """
    ‖S_tξ₁ − S_tξ₂‖_{E_α} / ‖ξ₁ − ξ₂‖_E over pairs (t = 1 by default).

    Each pair is integrated in lockstep so both members see the same steps.
    Pair separations must span at least ``min_decades`` decades; with a
    ``radius`` every member must lie in the E-ball of that radius (the
    measured absorbing ball).

    Raises
    ------
    DomainError
        For a zero-separation pair.
    PairSelectionError
        If the separations span fewer than ``min_decades`` decades or a
        member lies outside the ball.
    """
    if not pairs:
        raise InsufficientDataError("No pairs given")
    spectrum = scenario.spectrum
    lam = spectrum.eigenvalues
    alpha = scenario.damping.alpha
    sc = scenario.with_changes(T=float(t))

    def e_norm(xi: LinearState) -> float:
        return float(np.sqrt(np.dot(lam, xi.position ** 2) + np.dot(xi.velocity, xi.velocity)))

    separations = [e_norm(a - b) for a, b in pairs]
    if min(separations) == 0.0:
        raise DomainError("Squeezing pairs must have nonzero separation")
    span = separation_span(separations)
    if span < min_decades - 1e-9:
        raise PairSelectionError(
            f"Pair separations span {span:.3g} decades, need at least {min_decades:g}"
        )
    if radius is not None:
        worst = max(max(e_norm(a), e_norm(b)) for a, b in pairs)
        if worst > float(radius) * (1.0 + 1e-9):
            raise PairSelectionError(
                f"Pair member with E-norm {worst:.6g} lies outside the absorbing ball of radius {float(radius):.6g}"
            )

    def ratio(pair: Tuple[LinearState, LinearState]) -> Tuple[float, float]:
        a, b = pair
        sep = e_norm(a - b)
        ta, tb = integrate_lockstep([sc.with_state(a), sc.with_state(b)])
        d = ta.final_state - tb.final_state
        num = np.dot(lam ** (1.0 + alpha), d.position ** 2) + np.dot(lam ** alpha, d.velocity ** 2)
        return float(np.sqrt(num)) / sep, sep

    results = map_concurrently(ratio, list(pairs), threads)
    ratios = np.array([r for r, _ in results])
    seps = np.array([s for _, s in results])
    decades, stable = squeezing_decades(ratios, seps)
    return SqueezingReport(
        L=float(ratios.max()),
        ratios=ratios,
        separations=seps,
        decade_max=decades,
        decade_stable=stable,
    )


# ---------------------------------------------------------------------------
# Attractor sample
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AttractorSample:
    """
    Post-transient snapshots in energy coordinates.

    Attributes
    ----------
    points:
        Array (n_snapshots, 2·count); columns interleaved by mode.
    scenario_hash:
        Identifier of the generating configuration.
    transient:
        Cutoff T₀ used.
    radius:
        Absorbing radius the snapshots were checked against.
    inside_radius:
        Whether every snapshot lies in the ball.
    """

    points: np.ndarray
    scenario_hash: str = ""
    transient: float = 0.0
    radius: float = float("inf")
    inside_radius: bool = True

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def sample_attractor(
    ensemble: EnsembleRun,
    *,
    threads: Optional[int] = None,
    radius: Optional[float] = None,
) -> AttractorSample:
    """
    Collect snapshots with t ≥ T₀ from every ensemble trajectory.

    Raises
    ------
    InsufficientDataError
        If the ensemble is empty or no sample lies after the cutoff.
    """
    trajs = ensemble.run(threads)
    report = absorbing_radius(trajs, radius=radius)
    lam = ensemble.scenario.spectrum.eigenvalues
    blocks = []
    for traj in trajs:
        keep = np.nonzero(traj.times >= ensemble.transient)[0][:: ensemble.stride]
        blocks.append(energy_coordinates(traj.positions[keep], traj.velocities[keep], lam))
    points = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, 2 * lam.size))
    if points.shape[0] == 0:
        raise InsufficientDataError(f"No samples after the transient cutoff {ensemble.transient}")
    norms = np.linalg.norm(points, axis=1)
    inside = bool(np.all(norms <= report.radius * (1.0 + 1e-9)))
    if not inside:
        logger.warning("Attractor sample leaves the absorbing ball of radius %.4g", report.radius)
    return AttractorSample(points, ensemble.scenario_hash, ensemble.transient, report.radius, inside)


# ---------------------------------------------------------------------------
# Box counting
# ---------------------------------------------------------------------------


class DimensionFit(NamedTuple):
    """
    Attributes
    ----------
    dimension:
        Fitted slope of log N_ε against log(1/ε).
    r_squared:
        Regression residual.
    levels:
        Dyadic levels j (ε = 2^{−j}) in the fit window.
    counts:
        Occupied boxes N_ε for every tried level (level → count).
    """

    dimension: float
    r_squared: float
    levels: Tuple[int, ...]
    counts: Dict[int, int]


def box_counting_dimension(
    sample: Union[AttractorSample, np.ndarray],
    dims: Optional[int] = None,
    levels: Optional[Sequence[int]] = None,
    *,
    window: int = MIN_BOX_LEVELS,
) -> DimensionFit:
    """
    Box-counting dimension of the projection onto the leading ``dims``
    coordinates.

    The projection is normalized into [0, 1)^p with a common scale and boxes
    of side ε = 2^{−j} are counted for j in ``levels`` (default 1..16).
    A level is usable while N_ε ≤ n/10; the slope is fitted on the last
    ``window`` usable levels. A sample with zero extent has dimension 0.

    Raises
    ------
    InsufficientDataError
        With fewer than 1000 snapshots or fewer than 4 usable levels.
    """
    points = sample.points if isinstance(sample, AttractorSample) else np.asarray(sample, dtype=float)
    if points.ndim != 2:
        raise DomainError("Sample must be a 2-D array (snapshots × coordinates)")
    n = points.shape[0]
    if n < MIN_BOX_SAMPLES:
        raise InsufficientDataError(f"Box counting needs >= {MIN_BOX_SAMPLES} snapshots, got {n}")
    p = points.shape[1] if dims is None else int(dims)
    if not 1 <= p <= min(MAX_PROJECTION_DIMS, points.shape[1]):
        raise DomainError(f"Projection dims must lie in [1, {min(MAX_PROJECTION_DIMS, points.shape[1])}]")
    proj = points[:, :p]
    lo = proj.min(axis=0)
    extent = float((proj.max(axis=0) - lo).max())
    if extent == 0.0:
        return DimensionFit(0.0, 1.0, (), {})
    unit = (proj - lo) / (extent * (1.0 + 1e-9))

    tried = range(1, 17) if levels is None else [int(j) for j in levels]
    counts: Dict[int, int] = {}
    usable: List[int] = []
    for j in tried:
        boxes = np.floor(unit * 2.0 ** j).astype(np.int64)
        count = int(np.unique(boxes, axis=0).shape[0])
        counts[j] = count
        if count <= n / 10:
            usable.append(j)
    if len(usable) < max(window, MIN_BOX_LEVELS):
        raise InsufficientDataError(
            f"Only {len(usable)} usable box levels (need {max(window, MIN_BOX_LEVELS)})"
        )
    fit_levels = usable[-window:]
    x = np.array(fit_levels, dtype=float) * np.log(2.0)
    y = np.log([counts[j] for j in fit_levels])
    res = linregress(x, y)
    return DimensionFit(float(res.slope), float(res.rvalue ** 2), tuple(fit_levels), counts)


# ---------------------------------------------------------------------------
# Exponential attraction ingredients
# ---------------------------------------------------------------------------


def distance_to_sample(points: np.ndarray, sample: AttractorSample) -> np.ndarray:
    """E-distance of each point (energy coordinates) to the nearest snapshot."""
    return cdist(np.atleast_2d(points), sample.points).min(axis=1)


def attraction_rate(trajectories: Sequence[Trajectory], sample: AttractorSample) -> RateFit:
    """
    Exponential rate of sup_i dist_E(S_tξ_i, sample) over t < T₀.

    Times after the cutoff are excluded since the sample is built from them.
    """
    if not trajectories:
        raise InsufficientDataError("No trajectories given")
    times = trajectories[0].times
    keep = times < sample.transient if sample.transient > 0.0 else np.ones_like(times, dtype=bool)
    worst = np.zeros(int(keep.sum()))
    for traj in trajectories:
        lam = traj.spectrum.eigenvalues
        pts = energy_coordinates(traj.positions[keep], traj.velocities[keep], lam)
        worst = np.maximum(worst, distance_to_sample(pts, sample))
    return exponential_fit(times[keep], worst, use_peaks=False)


def time_lipschitz(trajectories: Sequence[Trajectory], t_min: float = 0.0) -> float:
    """sup ‖ξ(tᵢ₊₁) − ξ(tᵢ)‖_E / (tᵢ₊₁ − tᵢ) over consecutive samples with tᵢ ≥ t_min."""
    best = 0.0
    for traj in trajectories:
        idx = np.nonzero(traj.times >= t_min)[0]
        if idx.size < 2:
            continue
        lam = traj.spectrum.eigenvalues
        pts = energy_coordinates(traj.positions[idx], traj.velocities[idx], lam)
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1) / np.diff(traj.times[idx])
        best = max(best, float(steps.max()))
    return best


def semigroup_defect(scenario: Scenario, xi: LinearState, t: float, s: float) -> float:
    """‖S_{t+s}ξ − S_t S_s ξ‖_E for the numerical flow."""
    sc = scenario.with_state(xi)
    direct = integrate(sc.with_changes(T=float(t) + float(s))).final_state
    mid = integrate(sc.with_changes(T=float(s))).final_state
    composed = integrate(sc.with_state(mid).with_changes(T=float(t))).final_state
    d = direct - composed
    lam = scenario.spectrum.eigenvalues
    return float(np.sqrt(np.dot(lam, d.position ** 2) + np.dot(d.velocity, d.velocity)))


__all__ = [
    "make_rng",
    "energy_coordinates",
    "EnsembleRun",
    "AbsorbingReport",
    "absorbing_radius",
    "SqueezingReport",
    "make_pairs",
    "separation_span",
    "squeezing_decades",
    "squeezing_probe",
    "AttractorSample",
    "sample_attractor",
    "DimensionFit",
    "box_counting_dimension",
    "distance_to_sample",
    "attraction_rate",
    "time_lipschitz",
    "semigroup_defect",
]
