from __future__ import annotations

"""
Helper utilities for fracwave.

Currently this package exposes:

- :mod:`fracwave.tools.export`: byte-stable CSV and summary writers with
  trailing checksums, plus readers used by tests and scripts.
"""

from .export import read_summary, read_table, verify_checksum, write_summary, write_table

__all__ = [
    "write_table",
    "write_summary",
    "verify_checksum",
    "read_table",
    "read_summary",
]
