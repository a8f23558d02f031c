"""Run-directory readers: CSV tables with embedded config comments plus
JSON summaries.

Every producer-written CSV starts with two comment lines, the canonical
config JSON and its sha256; the JSON sidecar repeats both.  A view whose
sidecar hash disagrees with its CSV is refused outright, since the two
files then come from different invocations.  All parsing is read-only.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np


class SchemaError(Exception):
    """Artifact present but not matching the published table contract."""


class HashMismatchError(Exception):
    """CSV and JSON in one view embed different config hashes."""


REQUIRED_COLUMNS = {
    "lyapunov": ("T", "m", "n_samples", "lambda1", "stderr", "ci_lo",
                 "ci_hi", "seed"),
    "correlations": ("m", "c_m", "stderr"),
    "mix": ("m", "mix_scale", "grad_norm_l1_cum", "eta_hat_running"),
    "drift": ("center_q", "center_p", "radius", "angle", "q", "p",
              "v_start", "ratio", "stderr", "n", "n_clipped"),
}
VIEWS = tuple(REQUIRED_COLUMNS)


@dataclass(frozen=True)
class ViewData:
    view: str
    csv_path: str
    config: dict
    config_sha256: str
    columns: dict
    n_rows: int
    summary: dict | None


def _parse_table(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    name = os.path.basename(path)
    if len(lines) < 3 or not lines[0].startswith("# config ") \
            or not lines[1].startswith("# config_sha256 "):
        raise SchemaError("%s: expected leading config and config_sha256 "
                          "comment lines" % name)
    try:
        config = json.loads(lines[0][len("# config "):])
    except json.JSONDecodeError as exc:
        raise SchemaError("%s: embedded config is not valid JSON: %s"
                          % (name, exc))
    sha = lines[1].split()[-1]
    header = lines[2].split(",")
    rows = [ln.split(",") for ln in lines[3:]]
    return config, sha, header, rows


def _column_arrays(name, header, rows):
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError("%s: row %d has %d cells, header has %d"
                              % (name, i + 1, len(row), len(header)))
    columns = {}
    for k, col in enumerate(header):
        vals = np.empty(len(rows))
        for i, row in enumerate(rows):
            cell = row[k].strip()
            if not cell:
                vals[i] = math.nan
                continue
            try:
                vals[i] = float(cell)
            except ValueError:
                raise SchemaError("%s: column %s row %d is not numeric: %r"
                                  % (name, col, i + 1, cell))
        columns[col] = vals
    return columns


class RunArtifacts:
    """Lazy per-view loader for one run directory."""

    def __init__(self, run_dir: str):
        if not os.path.isdir(run_dir):
            raise FileNotFoundError("run directory not found: %s" % run_dir)
        self.run_dir = run_dir

    def csv_path(self, view: str) -> str:
        return os.path.join(self.run_dir, view + ".csv")

    def json_path(self, view: str) -> str:
        return os.path.join(self.run_dir, view + ".json")

    def available(self) -> tuple:
        return tuple(v for v in VIEWS if os.path.isfile(self.csv_path(v)))

    def load(self, view: str) -> ViewData:
        if view not in REQUIRED_COLUMNS:
            raise SchemaError("unknown view %r (expected one of %s)"
                              % (view, ", ".join(VIEWS)))
        path = self.csv_path(view)
        if not os.path.isfile(path):
            raise FileNotFoundError("missing artifact: %s" % path)
        config, sha, header, rows = _parse_table(path)
        missing = [c for c in REQUIRED_COLUMNS[view] if c not in header]
        if missing:
            raise SchemaError("%s.csv: missing columns: %s"
                              % (view, ", ".join(missing)))
        columns = _column_arrays(view + ".csv", header, rows)
        summary = None
        jpath = self.json_path(view)
        if os.path.isfile(jpath):
            with open(jpath, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            jsha = doc.get("config_sha256")
            if jsha != sha:
                raise HashMismatchError(
                    "%s: config hash %s in %s.json does not match %s "
                    "embedded in %s.csv" % (view, jsha, view, sha, view))
            summary = doc.get("results")
        return ViewData(view=view, csv_path=path, config=config,
                        config_sha256=sha, columns=columns,
                        n_rows=len(rows), summary=summary)
