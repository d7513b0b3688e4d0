from __future__ import annotations

"""
Run lifecycle and diagnostic runners for fracwave.

The responsibilities of this module are:

- Orchestrate bundle paths, metadata, config snapshot and logger
  construction (`start_run` / `finish_run`).
- Run one diagnostic on a validated config and write its tables into the
  bundle (`RUNNERS`).
- Delegate numerics to the library modules, disk I/O to :mod:`fracwave.io`
  and table formatting to :mod:`fracwave.tools.export`.

Design principles
-----------------
- Runners only read `ctx.config` and write into `ctx.paths`; every scalar
  result also goes into `ctx.summary` under a ``<diagnostic>.<name>`` key.
- Nothing written depends on the wall clock or on `ctx.threads`.
"""

import logging
import platform
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import scipy

from .attractor import (
    SQUEEZE_SEPARATIONS,
    EnsembleRun,
    absorbing_radius,
    attraction_rate,
    box_counting_dimension,
    make_pairs,
    make_rng,
    sample_attractor,
    squeezing_probe,
    time_lipschitz,
)
from .config import RunConfig
from .core import RunContext, RunMeta, RunPaths
from .exceptions import InsufficientDataError, ResultsIOError
from .ids import generate_run_id
from .io import load_meta, save_meta, snapshot_config
from .logger import BaseLogger, FileLogger, NullLogger
from .norms import (
    cluster_quotient_sweep,
    dissipation_q_table,
    identity_residual,
    smoothing_probe,
    strichartz_window_table,
    window_ratio_spread,
)
from .propagator import linear_squeezing_bound
from .semilinear import integrate
from .spectral import SpectralField
from .tools.export import write_summary, write_table

logger = logging.getLogger(__name__)

DECAY_MAGNITUDES = (0.1, 1.0, 10.0)


def package_version() -> str:
    try:
        return version("fracwave")
    except PackageNotFoundError:  # pragma: no cover - source checkout
        return "0.0.0"


# ---------------------------------------------------------------------------
# Environment snapshot
# ---------------------------------------------------------------------------

def _collect_env_info() -> Dict[str, Any]:
    """
    Coarse runtime snapshot: OS family, architecture, Python, numpy and
    scipy versions. Nothing host- or time-specific.
    """
    return {
        "platform": f"{platform.system()}-{platform.machine()}",
        "python": ".".join(str(x) for x in sys.version_info[:3]),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


# ---------------------------------------------------------------------------
# Logger helpers
# ---------------------------------------------------------------------------


def _build_logger(backend: str, logs_dir: Path, artifacts_dir: Path) -> BaseLogger:
    """
    Construct a metrics logger ("none" → `NullLogger`, "file" → `FileLogger`).

    Raises
    ------
    ValueError
        If an unknown backend is requested.
    """
    backend = backend.lower()
    if backend in ("none", "", "null"):
        return NullLogger()
    if backend == "file":
        return FileLogger(logs_dir=logs_dir, artifacts_dir=artifacts_dir)
    raise ValueError(f"Unsupported logger backend: {backend!r}")


# ---------------------------------------------------------------------------
# Lifecycle
# ---------------------------------------------------------------------------


def start_run(
    config: RunConfig,
    out: Path,
    subcommand: str,
    *,
    logger_backend: str = "file",
    threads: Optional[int] = None,
    source: Optional[Path] = None,
) -> RunContext:
    """
    Create the bundle under ``out`` and return the run context.

    Steps: create directories, snapshot the effective config as
    ``artifacts/config.json``, write an initial ``meta.json`` with status
    "running", and open the metrics logger. The config file the run was
    loaded from (``source``) is copied as ``artifacts/config.source<suffix>``.
    A bundle of a different scenario already under ``out`` is overwritten
    with a warning.
    """
    paths = RunPaths.create(Path(out))
    if (paths.root / "meta.json").exists():
        try:
            previous = load_meta(paths.root)
        except ResultsIOError as e:
            logger.warning("Ignoring unreadable meta.json in %s: %s", paths.root, e)
        else:
            if previous.scenario_hash != config.scenario_hash:
                logger.warning(
                    "Overwriting bundle of scenario %s in %s", previous.scenario_hash, paths.root
                )
    snapshot_config(config.data, paths.artifacts / "config.json")
    meta = RunMeta(
        run_id=generate_run_id(config.data, prefix=subcommand),
        subcommand=subcommand,
        scenario_hash=config.scenario_hash,
        seed=config.seed,
        version=package_version(),
        env=_collect_env_info(),
    )
    save_meta(meta, paths.root)
    metrics = _build_logger(logger_backend, paths.logs, paths.artifacts)
    if source is not None:
        metrics.log_artifact(Path(source), f"config.source{Path(source).suffix}")
    return RunContext(paths=paths, config=config, meta=meta, logger=metrics, threads=threads)


def finish_run(ctx: RunContext, status: str) -> None:
    """
    Write ``summary.txt`` and the final ``meta.json`` and close the logger.
    """
    ctx.meta.status = status
    ctx.meta.outputs = sorted(p.stem for p in ctx.paths.artifacts.glob("*.csv"))
    summary = dict(ctx.summary)
    summary.update(
        run_id=ctx.meta.run_id,
        subcommand=ctx.meta.subcommand,
        scenario_hash=ctx.meta.scenario_hash,
        seed=ctx.meta.seed,
        status=status,
    )
    try:
        write_summary(ctx.paths.summary, summary)
        save_meta(ctx.meta, ctx.paths.root)
    finally:
        ctx.logger.close()


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def run_simulate(ctx: RunContext) -> None:
    """Trajectory table: t, E_norm, E1_norm, cumulative energy-identity residual."""
    scenario = ctx.config.scenario
    traj = integrate(scenario)
    e = traj.energy_norms()
    e1 = traj.energy_norms(1.0)
    t0 = float(traj.times[0])
    residual = np.zeros(len(traj))
    for i in range(1, len(traj)):
        residual[i] = identity_residual(traj, (t0, float(traj.times[i])))
    for i in range(len(traj)):
        ctx.logger.log_metrics(step=i, t=float(traj.times[i]), E_norm=float(e[i]), energy=float(traj.energies[i]))
    write_table(
        ctx.paths.table("simulate"),
        [("t", "time"), ("E_norm", "energy^1/2"), ("E1_norm", "energy^1/2"), ("energy_identity_residual", "energy")],
        zip(traj.times, e, e1, residual),
    )
    horizon = float(traj.times[-1] - t0)
    ctx.summary.update({
        "simulate.final_E_norm": float(e[-1]),
        "simulate.identity_residual_per_time": abs(float(residual[-1])) / horizon if horizon > 0 else 0.0,
        "simulate.lyapunov_nonincreasing": traj.lyapunov_nonincreasing,
        "simulate.refined_windows": traj.refined_windows,
        "simulate.samples": len(traj),
    })


def run_decay_fit(ctx: RunContext) -> None:
    """Fitted (β, Q, Q_∞) for rescaled initial data; linear rate for reference."""
    scenario = ctx.config.scenario
    rows, monotone = dissipation_q_table(scenario, DECAY_MAGNITUDES, threads=ctx.threads)
    for i, r in enumerate(rows):
        ctx.logger.log_metrics(step=i, magnitude=r.magnitude, beta=r.beta, Q=r.Q, Q_inf=r.Q_inf)
    write_table(
        ctx.paths.table("decay-fit"),
        [("magnitude", "energy^1/2"), ("beta", "1/time"), ("Q", "energy^1/2"),
         ("Q_inf", "energy^1/2"), ("r_squared", "1"), ("valid", "")],
        [tuple(r) for r in rows],
    )
    beta_linear = float(scenario.damping.decay_rate(scenario.spectrum.lambda_min))
    unit = [r for r in rows if r.magnitude == 1.0]
    ctx.summary.update({
        "decay.beta": unit[0].beta if unit else float("nan"),
        "decay.beta_linear": beta_linear,
        "decay.Q_monotone": monotone,
        "decay.all_valid": all(r.valid for r in rows),
    })


def _forcing_profile(ctx: RunContext) -> SpectralField:
    scenario = ctx.config.scenario
    if np.any(scenario.forcing.coeffs):
        return scenario.forcing
    coeffs = np.zeros(scenario.spectrum.count)
    coeffs[0] = 1.0
    return SpectralField(scenario.spectrum, coeffs)


def run_strichartz(ctx: RunContext) -> None:
    """Unit-window L⁵L¹⁰ norms of the linear flow under periodic pulses."""
    scenario = ctx.config.scenario
    n_windows = 6 if ctx.config.quick else 20
    rows = strichartz_window_table(
        scenario.spectrum,
        scenario.damping,
        scenario.initial_state,
        _forcing_profile(ctx),
        n_windows,
        oversample=scenario.oversample,
    )
    for r in rows:
        ctx.logger.log_metrics(step=r.window, mixed_norm=r.mixed_norm, envelope=r.envelope, ratio=r.ratio)
    write_table(
        ctx.paths.table("strichartz"),
        [("window", "1"), ("t0", "time"), ("mixed_norm", "L5L10"), ("h1a_integral", "H1+a^2*time"),
         ("envelope", "energy^1/2"), ("ratio", "1"), ("h1a_ratio", "1"), ("transient", "")],
        [tuple(r) for r in rows],
    )
    ctx.summary.update({
        "strichartz.ratio_spread": window_ratio_spread(rows),
        "strichartz.max_ratio": max(r.ratio for r in rows),
        "strichartz.windows": len(rows),
    })


def cluster_windows(config: RunConfig) -> np.ndarray:
    """Window starts λ = 1, 2, ... whose clusters lie inside the truncation."""
    spectrum = config.spectrum
    top = min(spectrum.n_per_axis * np.pi / L for L in spectrum.domain.lengths)
    return np.arange(1.0, np.floor(top))


def run_cluster(ctx: RunContext) -> None:
    """Sweep of ‖P_λu‖_{L⁵}/(λ^{2/5}‖u‖) against the Sobolev ceiling."""
    config = ctx.config
    spectrum = config.spectrum
    rng = make_rng(config.seed)
    fields = [config.scenario.u0] + [SpectralField.random(spectrum, rng) for _ in range(2)]
    lambdas = cluster_windows(config)
    if lambdas.size == 0:
        raise InsufficientDataError("Spectrum too small for a cluster sweep (need sqrt(lambda_max) > 2)")
    sweep = cluster_quotient_sweep(
        spectrum, fields, lambdas, oversample=config.scenario.oversample, threads=ctx.threads
    )
    for i, r in enumerate(sweep.rows):
        ctx.logger.log_metrics(step=i, lam=r.lam, quotient=r.quotient, ceiling=r.ceiling)
    write_table(
        ctx.paths.table("cluster"),
        [("lam", "sqrt-eigenvalue"), ("n_modes", "count"), ("quotient", "1"), ("ceiling", "1"),
         ("sobolev_scaling", "1"), ("empty", "")],
        [tuple(r) for r in sweep.rows],
    )
    ctx.summary.update({
        "cluster.constant": sweep.constant,
        "cluster.within_ceiling": sweep.within_ceiling,
        "cluster.sobolev_constant": sweep.sobolev_constant,
        "cluster.within_sobolev": sweep.within_sobolev,
        "cluster.windows": len(sweep.rows),
    })


def run_smoothing(ctx: RunContext) -> None:
    """Short-time blow-up exponent of ‖ξ(t)‖_{E₁}."""
    try:
        report = smoothing_probe(ctx.config.scenario)
    except InsufficientDataError as e:
        logger.warning("Smoothing fit skipped: %s", e)
        ctx.summary["smoothing.valid"] = False
        return
    write_table(
        ctx.paths.table("smoothing"),
        [("t", "time"), ("E1_norm", "energy^1/2")],
        zip(report.times, report.values),
    )
    ctx.summary.update({
        "smoothing.valid": True,
        "smoothing.exponent": report.fit.exponent,
        "smoothing.r_squared": report.fit.r_squared,
        "smoothing.bound_exponent": report.bound_exponent,
        "smoothing.semigroup_exponent": report.semigroup_exponent,
        "smoothing.within_bound": report.within_bound,
        "smoothing.relative_to_semigroup": report.relative_to_semigroup,
    })


def _ensemble(ctx: RunContext) -> EnsembleRun:
    cached = ctx.cache.get("ensemble")
    if cached is None:
        config = ctx.config
        cached = EnsembleRun.random(
            config.scenario,
            config.ensemble_size,
            config.seed,
            transient=min(config.transient, config.scenario.T),
            scenario_hash=config.scenario_hash,
        )
        ctx.cache["ensemble"] = cached
    return cached


def run_squeeze(ctx: RunContext) -> None:
    """
    Squeezing constant L over pairs based on the ensemble's final states,
    with separations R·(1e−3 .. 1e−6) inside the measured absorbing ball.
    """
    config = ctx.config
    scenario = config.scenario
    ensemble = _ensemble(ctx)
    trajs = ensemble.run(ctx.threads)
    radius = absorbing_radius(trajs).radius
    bases = [t.final_state for t in trajs]
    separations = [radius * s for s in SQUEEZE_SEPARATIONS]
    rng = make_rng(config.seed + 1)
    pairs = make_pairs(bases, separations, rng, scenario.spectrum.eigenvalues)
    report = squeezing_probe(scenario, pairs, 1.0, radius=radius, threads=ctx.threads)
    for i, (r, s) in enumerate(zip(report.ratios, report.separations)):
        ctx.logger.log_metrics(step=i, ratio=float(r), separation=float(s))
    write_table(
        ctx.paths.table("squeeze"),
        [("pair", "1"), ("separation", "energy^1/2"), ("ratio", "1")],
        zip(range(len(pairs)), report.separations, report.ratios),
    )
    ctx.summary.update({
        "squeeze.radius": radius,
        "squeeze.L": report.L,
        "squeeze.decade_stable": report.decade_stable,
        "squeeze.pairs": len(pairs),
    })
    if scenario.nonlinearity.is_zero:
        bound, _ = linear_squeezing_bound(scenario.spectrum, scenario.damping, 1.0)
        ctx.summary["squeeze.linear_bound"] = bound


def run_attractor(ctx: RunContext) -> None:
    """Absorbing ball, attractor sample, box-counting dimension and rates."""
    ensemble = _ensemble(ctx)
    trajs = ensemble.run(ctx.threads)
    absorbing = absorbing_radius(trajs)
    sample = sample_attractor(ensemble, threads=ctx.threads, radius=absorbing.radius)
    write_table(
        ctx.paths.table("attractor-members"),
        [("member", "1"), ("entry_time", "time"), ("entered", "")],
        zip(range(len(trajs)), absorbing.entry_times, absorbing.entered),
    )
    try:
        dims = min(3, sample.points.shape[1])
        fit = box_counting_dimension(sample, dims=dims)
        dimension, dim_valid = fit.dimension, True
        write_table(
            ctx.paths.table("attractor-boxes"),
            [("level", "1"), ("boxes", "count"), ("in_fit", "")],
            [(j, n, j in fit.levels) for j, n in sorted(fit.counts.items())],
        )
    except InsufficientDataError as e:
        logger.warning("Box counting skipped: %s", e)
        dimension, dim_valid = float("nan"), False
    rate = attraction_rate(trajs, sample)
    ctx.summary.update({
        "attractor.radius": absorbing.radius,
        "attractor.e1_radius": absorbing.e1_radius,
        "attractor.positively_invariant": absorbing.positively_invariant,
        "attractor.all_entered": bool(np.all(absorbing.entered)),
        "attractor.samples": sample.size,
        "attractor.inside_radius": sample.inside_radius,
        "attractor.dimension": dimension,
        "attractor.dimension_valid": dim_valid,
        "attractor.attraction_rate": rate.exponent,
        "attractor.attraction_rate_valid": rate.valid,
        "attractor.time_lipschitz": time_lipschitz(trajs, ensemble.transient),
    })


RUNNERS: Dict[str, Callable[[RunContext], None]] = {
    "simulate": run_simulate,
    "decay-fit": run_decay_fit,
    "strichartz": run_strichartz,
    "cluster": run_cluster,
    "smoothing": run_smoothing,
    "squeeze": run_squeeze,
    "attractor": run_attractor,
}


def run_diagnostics(ctx: RunContext, names: List[str]) -> None:
    for name in names:
        logger.info("Running %s", name)
        RUNNERS[name](ctx)
