"""Deterministic report rendering for the command-line experiments.

Reports must be byte-identical across runs with the same command, seed
and parameters, so everything nondeterministic (wall time, hostnames)
stays out of them; timings go to stderr.  JSON is sorted and indented;
CSV rows carry a fixed field order with full-precision floats.
"""

from __future__ import annotations

import json
import sys

import numpy as np

SCHEMA_VERSION = 1


def build_envelope(command: str, seed: int | None, parameters: dict, results) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "parameters": parameters,
        "results": results,
    }


def _canonical(value):
    """Round-trip floats through repr so JSON output is reproducible."""
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(repr(float(value)))
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def render_json(doc: dict) -> str:
    return json.dumps(_canonical(doc), sort_keys=True, indent=2) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def render_csv(header: list[str], rows: list[list], preamble: dict | None = None) -> str:
    """Rows under a fixed header; envelope fields become '#' comments."""
    lines = []
    if preamble:
        for key in sorted(preamble):
            lines.append(f"# {key}: {_csv_cell(preamble[key])}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_text(text: str, out_path: str | None):
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
