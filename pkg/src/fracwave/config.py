from __future__ import annotations

"""
Validation of run configurations.

A configuration is a mapping of sections (as returned by
:func:`fracwave.io.load_config`)::

    domain:       dims, lengths, modes_per_axis, oversample
    damping:      gamma, alpha
    nonlinearity: kind, q, coefficients, M
    forcing:      "zero" or {"k1,k2,...": coefficient}
    initial:      generator (modes | random_seeded | rough_decay), modes,
                  amplitude, decay, exponent, velocity_scale
    time:         T, dt, stride
    run:          seed, ensemble_size, outputs, transient, quick

Every section and key is optional; unknown ones are rejected. The result is
a `RunConfig` holding the ready-to-integrate `Scenario` and the *effective*
configuration (all defaults filled in, mode keys normalized), which is what
gets snapshotted and hashed.

Design principles
-----------------
- All validation errors surface as `ConfigLoadError` with the offending
  section and key in the message.
- Numeric strings ("1e-3") are accepted wherever a number is expected, since
  YAML and INI parse them as text.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from .attractor import make_rng
from .exceptions import ConfigLoadError, FracwaveError
from .ids import scenario_hash
from .io import ConfigLike, load_config
from .propagator import DampingParams
from .semilinear import NONLINEARITY_KINDS, Q_RANGE, Nonlinearity, Scenario
from .spectral import BoxDomain, ModeIndex, SpectralField, Spectrum, build_spectrum, check_mode


DIAGNOSTICS = ("simulate", "decay-fit", "strichartz", "cluster", "smoothing", "squeeze", "attractor")
GENERATORS = ("modes", "random_seeded", "rough_decay")

SCHEMA: Dict[str, Tuple[str, ...]] = {
    "domain": ("dims", "lengths", "modes_per_axis", "oversample"),
    "damping": ("gamma", "alpha"),
    "nonlinearity": ("kind", "q", "coefficients", "M"),
    "forcing": (),
    "initial": ("generator", "modes", "amplitude", "decay", "exponent", "velocity_scale"),
    "time": ("T", "dt", "stride"),
    "run": ("seed", "ensemble_size", "outputs", "transient", "quick"),
}

MAX_SEED = 2 ** 64 - 1


# ---------------------------------------------------------------------------
# Scalar coercion
# ---------------------------------------------------------------------------


def _where(section: str, key: str) -> str:
    return f"[{section}] {key}"


def _as_float(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigLoadError(f"{_where(section, key)} must be a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigLoadError(f"{_where(section, key)} must be a number, got {value!r}")
    if not np.isfinite(out):
        raise ConfigLoadError(f"{_where(section, key)} must be finite, got {value!r}")
    return out


def _as_int(section: str, key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigLoadError(f"{_where(section, key)} must be an integer, got {value!r}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str) and value.strip().lstrip("+").isdigit():
        return int(value)
    raise ConfigLoadError(f"{_where(section, key)} must be an integer, got {value!r}")


def _as_bool(section: str, key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in {"true", "false", "yes", "no", "on", "off"}:
        return value.lower() in {"true", "yes", "on"}
    raise ConfigLoadError(f"{_where(section, key)} must be a boolean, got {value!r}")


def _as_list(section: str, key: str, value: Any) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [value]


def _mode_key(section: str, key: Any, dims: int) -> ModeIndex:
    """"1,2" / 3 / [1, 2] → validated multi-index."""
    if isinstance(key, bool):
        raise ConfigLoadError(f"[{section}] invalid mode index {key!r}")
    try:
        if isinstance(key, (int, np.integer)):
            parts = (int(key),)
        elif isinstance(key, str):
            parts = tuple(int(p) for p in key.replace(" ", "").strip("()[]").split(","))
        else:
            parts = tuple(int(p) for p in key)
        return check_mode(parts, dims)
    except (TypeError, ValueError) as e:
        raise ConfigLoadError(f"[{section}] invalid mode index {key!r}: {e}")


def _mode_name(k: ModeIndex) -> str:
    return ",".join(str(x) for x in k)


def _mode_table(section: str, raw: Any, dims: int) -> Dict[ModeIndex, float]:
    if not isinstance(raw, Mapping):
        raise ConfigLoadError(f"[{section}] modes must be a mapping 'k1,k2,..' -> coefficient")
    table: Dict[ModeIndex, float] = {}
    for key, value in raw.items():
        k = _mode_key(section, key, dims)
        if k in table:
            raise ConfigLoadError(f"[{section}] mode {_mode_name(k)} given twice")
        table[k] = _as_float(section, _mode_name(k), value)
    return dict(sorted(table.items()))


def _field_from_table(section: str, spectrum: Spectrum, table: Mapping[ModeIndex, float]) -> SpectralField:
    try:
        return SpectralField.from_modes(spectrum, table)
    except FracwaveError as e:
        raise ConfigLoadError(f"[{section}] {e}")


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


def _sections(raw: Mapping[str, Any]) -> Dict[str, Any]:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigLoadError(f"Unknown config section(s): {', '.join(map(str, unknown))}")
    out: Dict[str, Any] = {}
    for name, keys in SCHEMA.items():
        body = raw.get(name)
        if name == "forcing":
            out[name] = body
            continue
        if body is None:
            body = {}
        if not isinstance(body, Mapping):
            raise ConfigLoadError(f"Section [{name}] must be a mapping, got {type(body).__name__}")
        extra = sorted(str(k) for k in set(body) - set(keys))
        if extra:
            raise ConfigLoadError(f"Unknown key(s) in [{name}]: {', '.join(extra)}")
        out[name] = dict(body)
    return out


def _domain(sec: Mapping[str, Any]) -> Dict[str, Any]:
    dims = _as_int("domain", "dims", sec.get("dims", 1))
    if not 1 <= dims <= 3:
        raise ConfigLoadError(f"[domain] dims must be 1, 2 or 3, got {dims}")
    lengths = sec.get("lengths", [1.0] * dims)
    lengths = [_as_float("domain", "lengths", x) for x in _as_list("domain", "lengths", lengths)]
    if len(lengths) != dims:
        raise ConfigLoadError(f"[domain] lengths must have {dims} entries, got {len(lengths)}")
    if any(x <= 0.0 for x in lengths):
        raise ConfigLoadError(f"[domain] lengths must be > 0, got {lengths}")
    n = _as_int("domain", "modes_per_axis", sec.get("modes_per_axis", 64 if dims == 1 else 8))
    if n < 1:
        raise ConfigLoadError(f"[domain] modes_per_axis must be >= 1, got {n}")
    oversample = sec.get("oversample")
    if oversample is not None:
        oversample = _as_int("domain", "oversample", oversample)
        if oversample < 1:
            raise ConfigLoadError(f"[domain] oversample must be >= 1, got {oversample}")
    return {"dims": dims, "lengths": lengths, "modes_per_axis": n, "oversample": oversample}


def _damping(sec: Mapping[str, Any]) -> Dict[str, Any]:
    gamma = _as_float("damping", "gamma", sec.get("gamma", 1.0))
    alpha = _as_float("damping", "alpha", sec.get("alpha", 0.25))
    if not gamma > 0.0:
        raise ConfigLoadError(f"[damping] gamma must be > 0, got {gamma}")
    if not 0.0 < alpha < 0.5:
        raise ConfigLoadError(f"[damping] alpha must lie in the open interval (0, 0.5), got {alpha}")
    return {"gamma": gamma, "alpha": alpha}


def _nonlinearity(sec: Mapping[str, Any]) -> Dict[str, Any]:
    kind = str(sec.get("kind", "odd_power"))
    if kind not in NONLINEARITY_KINDS:
        raise ConfigLoadError(
            f"[nonlinearity] kind must be one of {', '.join(NONLINEARITY_KINDS)}, got {kind!r}"
        )
    q = _as_float("nonlinearity", "q", sec.get("q", 2.0))
    lo, hi = Q_RANGE
    if not lo <= q < hi:
        raise ConfigLoadError(f"[nonlinearity] q must lie in [0, 4), got {q}")
    coeffs = [_as_float("nonlinearity", "coefficients", c)
              for c in _as_list("nonlinearity", "coefficients", sec.get("coefficients", []))]
    M = _as_float("nonlinearity", "M", sec.get("M", 0.25 if kind == "cubic_minus_linear" else 0.0))
    if kind == "custom_polynomial" and not coeffs:
        raise ConfigLoadError("[nonlinearity] custom_polynomial needs coefficients")
    if kind != "custom_polynomial" and coeffs:
        raise ConfigLoadError(f"[nonlinearity] coefficients are only used by custom_polynomial, not {kind!r}")
    return {"kind": kind, "q": q, "coefficients": coeffs, "M": M}


def _forcing(body: Any, dims: int) -> Any:
    if body is None or body == "zero" or body == {}:
        return "zero"
    if isinstance(body, str):
        raise ConfigLoadError(f"[forcing] must be 'zero' or a mode mapping, got {body!r}")
    table = _mode_table("forcing", body, dims)
    return {_mode_name(k): c for k, c in table.items()}


def _initial(sec: Mapping[str, Any], dims: int) -> Dict[str, Any]:
    generator = str(sec.get("generator", "modes"))
    if generator not in GENERATORS:
        raise ConfigLoadError(f"[initial] generator must be one of {', '.join(GENERATORS)}, got {generator!r}")
    out: Dict[str, Any] = {"generator": generator}
    out["velocity_scale"] = _as_float(
        "initial", "velocity_scale", sec.get("velocity_scale", 1.0 if generator == "random_seeded" else 0.0)
    )
    out["amplitude"] = _as_float("initial", "amplitude", sec.get("amplitude", 1.0))
    if generator == "modes":
        table = _mode_table("initial", sec.get("modes", {"1" if dims == 1 else ",".join("1" * dims): 1.0}), dims)
        out["modes"] = {_mode_name(k): c for k, c in table.items()}
    elif generator == "random_seeded":
        out["decay"] = _as_float("initial", "decay", sec.get("decay", 2.0))
    else:
        # E-marginal default: Σ λ_k·λ_k^{2·exponent} diverges logarithmically
        default = -(0.5 + dims / 4.0)
        out["exponent"] = _as_float("initial", "exponent", sec.get("exponent", default))
    return out


def _time(sec: Mapping[str, Any]) -> Dict[str, Any]:
    T = _as_float("time", "T", sec.get("T", 10.0))
    dt = _as_float("time", "dt", sec.get("dt", 0.01))
    stride = _as_int("time", "stride", sec.get("stride", 1))
    if not dt > 0.0:
        raise ConfigLoadError(f"[time] dt must be > 0, got {dt}")
    if not T >= dt:
        raise ConfigLoadError(f"[time] T must be >= dt, got T={T}, dt={dt}")
    if stride < 1:
        raise ConfigLoadError(f"[time] stride must be >= 1, got {stride}")
    return {"T": T, "dt": dt, "stride": stride}


def _run(sec: Mapping[str, Any], T: float) -> Dict[str, Any]:
    seed = _as_int("run", "seed", sec.get("seed", 0))
    if not 0 <= seed <= MAX_SEED:
        raise ConfigLoadError(f"[run] seed must be an unsigned 64-bit integer, got {seed}")
    size = _as_int("run", "ensemble_size", sec.get("ensemble_size", 8))
    if size < 1:
        raise ConfigLoadError(f"[run] ensemble_size must be >= 1, got {size}")
    outputs = [str(x) for x in _as_list("run", "outputs", sec.get("outputs", ["simulate"]))]
    bad = [x for x in outputs if x not in DIAGNOSTICS]
    if bad:
        raise ConfigLoadError(f"[run] unknown output(s) {bad}; expected names from {', '.join(DIAGNOSTICS)}")
    transient = _as_float("run", "transient", sec.get("transient", 0.25 * T))
    if transient < 0.0:
        raise ConfigLoadError(f"[run] transient must be >= 0, got {transient}")
    quick = _as_bool("run", "quick", sec.get("quick", False))
    return {"seed": seed, "ensemble_size": size, "outputs": outputs, "transient": transient, "quick": quick}


# ---------------------------------------------------------------------------
# Scenario construction
# ---------------------------------------------------------------------------


def _initial_fields(sec: Mapping[str, Any], spectrum: Spectrum, seed: int) -> Tuple[SpectralField, SpectralField]:
    lam = spectrum.eigenvalues
    generator = sec["generator"]
    amp, vscale = sec["amplitude"], sec["velocity_scale"]
    if generator == "random_seeded":
        rng = make_rng(seed)
        u0 = SpectralField.random(spectrum, rng, decay=sec["decay"] + 1.0)
        u1 = SpectralField.random(spectrum, rng, decay=sec["decay"]) * vscale
        size = float(np.sqrt(np.dot(lam, u0.coeffs ** 2) + np.dot(u1.coeffs, u1.coeffs)))
        scale = amp / size if size > 0.0 else 0.0
        return u0 * scale, u1 * scale
    if generator == "modes":
        table = {_mode_key("initial", k, spectrum.dims): c for k, c in sec["modes"].items()}
        u0 = _field_from_table("initial", spectrum, table) * amp
    else:
        u0 = SpectralField(spectrum, amp * spectrum.power(sec["exponent"]))
    u1 = u0.with_coeffs(vscale * np.sqrt(lam) * u0.coeffs)
    return u0, u1


def _build_nonlinearity(sec: Mapping[str, Any]) -> Nonlinearity:
    kind = sec["kind"]
    if kind == "custom_polynomial":
        return Nonlinearity.polynomial(sec["coefficients"], M=sec["M"])
    if kind == "cubic_minus_linear":
        return Nonlinearity("cubic_minus_linear", M=sec["M"])
    if kind == "zero":
        return Nonlinearity.zero()
    return Nonlinearity("odd_power", q=sec["q"], M=sec["M"])


@dataclass(frozen=True, eq=False)
class RunConfig:
    """
    Validated configuration.

    Attributes
    ----------
    data:
        Effective configuration (defaults filled in); snapshotted and hashed.
    scenario:
        Scenario built from the config.
    seed, ensemble_size, outputs, transient, quick:
        Values of the [run] section.
    """

    data: Dict[str, Any]
    scenario: Scenario
    seed: int
    ensemble_size: int
    outputs: Tuple[str, ...]
    transient: float
    quick: bool
    _hash: str = field(default="", repr=False)

    @property
    def scenario_hash(self) -> str:
        return self._hash or scenario_hash(self.data)

    @property
    def spectrum(self) -> Spectrum:
        return self.scenario.spectrum


def parse_config(raw: Mapping[str, Any], *, seed: Optional[int] = None, quick: Optional[bool] = None) -> RunConfig:
    """
    Validate a raw config mapping and build its scenario.

    Parameters
    ----------
    raw:
        Mapping of sections.
    seed:
        Overrides ``[run] seed`` when given.
    quick:
        Overrides ``[run] quick`` when given.

    Raises
    ------
    ConfigLoadError
        For unknown sections/keys and values outside their ranges.
    """
    if not isinstance(raw, Mapping):
        raise ConfigLoadError(f"Config must be a mapping of sections, got {type(raw).__name__}")
    sections = _sections(raw)
    domain = _domain(sections["domain"])
    dims = domain["dims"]
    damping = _damping(sections["damping"])
    nonlin = _nonlinearity(sections["nonlinearity"])
    forcing = _forcing(sections["forcing"], dims)
    initial = _initial(sections["initial"], dims)
    time = _time(sections["time"])
    run_sec = dict(sections["run"])
    if seed is not None:
        run_sec["seed"] = seed
    if quick is not None:
        run_sec["quick"] = quick
    run = _run(run_sec, time["T"])

    try:
        nonlinearity = _build_nonlinearity(nonlin)
        spectrum = build_spectrum(BoxDomain(tuple(domain["lengths"])), domain["modes_per_axis"])
        if domain["oversample"] is None:
            domain["oversample"] = nonlinearity.oversampling
        u0, u1 = _initial_fields(initial, spectrum, run["seed"])
        g = (
            SpectralField.zeros(spectrum) if forcing == "zero"
            else _field_from_table("forcing", spectrum, {_mode_key("forcing", k, dims): c for k, c in forcing.items()})
        )
        scenario = Scenario(
            spectrum=spectrum,
            damping=DampingParams(damping["gamma"], damping["alpha"]),
            nonlinearity=nonlinearity,
            u0=u0,
            u1=u1,
            forcing=g,
            T=time["T"],
            dt=time["dt"],
            oversample=domain["oversample"],
            stride=time["stride"],
        )
    except ConfigLoadError:
        raise
    except FracwaveError as e:
        raise ConfigLoadError(f"Invalid configuration: {e}")

    data = {
        "domain": domain,
        "damping": damping,
        "nonlinearity": nonlin,
        "forcing": forcing,
        "initial": initial,
        "time": time,
        "run": run,
    }
    return RunConfig(
        data=data,
        scenario=scenario,
        seed=run["seed"],
        ensemble_size=run["ensemble_size"],
        outputs=tuple(run["outputs"]),
        transient=run["transient"],
        quick=run["quick"],
        _hash=scenario_hash(data),
    )


def load_run_config(source: ConfigLike, *, seed: Optional[int] = None, quick: Optional[bool] = None) -> RunConfig:
    """`load_config` followed by `parse_config`."""
    return parse_config(load_config(source), seed=seed, quick=quick)


__all__ = [
    "DIAGNOSTICS",
    "GENERATORS",
    "SCHEMA",
    "RunConfig",
    "parse_config",
    "load_run_config",
]
