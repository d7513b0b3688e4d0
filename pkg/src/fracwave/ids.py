from __future__ import annotations

"""
Run ID generation utilities.

The run ID names a report bundle and tags attractor samples. It is derived
from the validated configuration only, so the same config and seed always
give the same ID:

    simulate-3f9a0c1b2d4e
    attractor_3f9a0c1b2d4e_quick

Design notes
------------
- The base ID is the first 12 hex digits of the SHA-256 of the canonical
  JSON form (sorted keys, no whitespace) of the config.
- `link_style="kebab"` joins segments with "-", `"snake"` with "_".
"""

import hashlib
import json
from typing import Any, Literal, Mapping, Optional


LinkStyle = Literal["kebab", "snake"]

HASH_LENGTH = 12


def _link(a: str, b: str, *, style: LinkStyle = "kebab") -> str:
    """
    Link two segments with either '-' (kebab) or '_' (snake).
    """
    if style == "kebab":
        sep = "-"
    elif style == "snake":
        sep = "_"
    else:
        raise ValueError(f"Unsupported link style: {style!r}")
    return f"{a}{sep}{b}"


def canonical_json(config: Mapping[str, Any]) -> str:
    """Sorted-key, whitespace-free JSON; floats use Python's shortest repr."""
    return json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def scenario_hash(config: Mapping[str, Any]) -> str:
    """12-hex-digit SHA-256 digest of the canonical config."""
    digest = hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()
    return digest[:HASH_LENGTH]


def generate_run_id(
    config: Mapping[str, Any],
    *,
    prefix: Optional[str] = None,
    suffix: Optional[str] = None,
    link_style: LinkStyle = "kebab",
) -> str:
    """
    Generate a deterministic run id.

    Parameters
    ----------
    config:
        Validated configuration mapping.
    prefix:
        Optional prefix (the CLI uses the subcommand name).
    suffix:
        Optional suffix.
    link_style:
        How to join prefix/base/suffix. "kebab" (`-`) or "snake" (`_`).
    """
    full = scenario_hash(config)
    if prefix:
        full = _link(prefix, full, style=link_style)
    if suffix:
        full = _link(full, suffix, style=link_style)
    return full
