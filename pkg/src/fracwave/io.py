from __future__ import annotations

"""
Disk I/O utilities for fracwave.

This module centralizes the filesystem operations of the harness:

- Loading configuration files (JSON, YAML, INI)
- Snapshotting the validated configuration
- Saving and loading `meta.json`

Design principles
-----------------
- Keep all pure I/O logic here. No numerics, no logger logic.
- Higher-level orchestration lives in `api.py`; table writers live in
  `tools/export.py`.
- Everything written is JSON with sorted keys and LF line endings, so that
  bundles are byte-identical across runs.
"""

import configparser
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import yaml

from .core import RunMeta
from .exceptions import ConfigLoadError, ResultsIOError


# ---------------------------------------------------------------------------
# Meta I/O
# ---------------------------------------------------------------------------

def save_meta(meta: RunMeta, root: Path) -> None:
    """
    Write `meta.json` to `root`.

    Raises
    ------
    ResultsIOError
        If writing to disk fails.
    """
    path = Path(root) / "meta.json"
    try:
        with path.open("w", encoding="utf-8", newline="\n") as f:
            json.dump(asdict(meta), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
    except Exception as e:
        raise ResultsIOError(f"Failed to write meta.json at {path}: {e}")


def load_meta(root: Path) -> RunMeta:
    """
    Load `meta.json` from `root`.

    Raises
    ------
    ResultsIOError
        If meta.json is missing or cannot be parsed.
    """
    path = Path(root) / "meta.json"
    if not path.exists():
        raise ResultsIOError(f"meta.json not found under {root}")
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
        return RunMeta(**data)
    except Exception as e:
        raise ResultsIOError(f"Failed to load meta.json from {path}: {e}")


# ---------------------------------------------------------------------------
# Config I/O
# ---------------------------------------------------------------------------

ConfigLike = Union[None, Mapping[str, Any], str, Path]


def _load_ini(text: str, path: Path) -> Dict[str, Any]:
    """
    INI sections become nested mappings; every value is parsed as a YAML
    scalar or flow sequence (``lengths = [1.0, 2.0]``, ``quick = true``).
    """
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigLoadError(f"Invalid INI config: {path}: {e}")

    data: Dict[str, Any] = {}
    for section in parser.sections():
        entries: Dict[str, Any] = {}
        for key, raw in parser.items(section):
            try:
                entries[key] = yaml.safe_load(raw) if raw.strip() else None
            except yaml.YAMLError as e:
                raise ConfigLoadError(f"Invalid value for [{section}] {key} in {path}: {e}")
        data[section] = entries
    return data


def load_config(config: ConfigLike) -> Dict[str, Any]:
    """
    Load configuration from one of:

    - None → empty dict
    - Mapping → shallow copy
    - string/path → `.json`, `.yaml`/`.yml` or `.ini`/`.cfg` file

    Raises
    ------
    ConfigLoadError
        If the config source is missing or cannot be parsed.
    """
    if config is None:
        return {}

    if isinstance(config, Mapping):
        return dict(config)

    path = Path(config)
    if not path.exists():
        raise ConfigLoadError(f"Config file does not exist: {path}")

    try:
        text = path.read_text(encoding="utf-8")
    except Exception as e:  # pragma: no cover
        raise ConfigLoadError(f"Failed to read config file: {path}: {e}")

    suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            data = json.loads(text)
        except Exception:
            raise ConfigLoadError(f"Config file is not valid JSON: {path}")
    elif suffix in {".yaml", ".yml"}:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigLoadError(f"Invalid YAML config: {path}: {e}")
    elif suffix in {".ini", ".cfg"}:
        data = _load_ini(text, path)
    else:
        raise ConfigLoadError(f"Unsupported config file type: {path}")

    if not isinstance(data, Mapping):
        raise ConfigLoadError(f"Config must be a mapping of sections: {path}")
    return dict(data)


def snapshot_config(config: Mapping[str, Any], dest: Path) -> None:
    """
    Save the effective config into `dest` (YAML for `.yaml`/`.yml`, JSON
    otherwise), with sorted keys.

    Raises
    ------
    ResultsIOError
        If writing to disk fails.
    """
    dest = Path(dest).resolve()
    try:
        with dest.open("w", encoding="utf-8", newline="\n") as f:
            if dest.suffix.lower() in {".yaml", ".yml"}:
                yaml.safe_dump(dict(config), f, sort_keys=True)
            else:
                json.dump(config, f, indent=2, sort_keys=True, ensure_ascii=False)
                f.write("\n")
    except Exception as e:
        raise ResultsIOError(f"Failed to write config snapshot: {dest}: {e}")
