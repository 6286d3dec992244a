"""
Run artifacts: streamed CSV series, long-format field CSV, JSON summaries,
the run manifest and the human-readable run log
"""
import csv
import json
import logging
import platform
import subprocess
from datetime import datetime
from importlib import metadata
from pathlib import Path

import numpy as np

from core.spectral_core import XField

logger = logging.getLogger(__name__)

SERIES_COLUMNS = [
    "t", "energy_sq", "dissipation_sq", "cumulative_dissipation", "energy_margin",
    "rho_l2", "u_l2", "theta_l2", "div_u_hm1", "boussinesq_eps", "boussinesq_limit",
    "acoustic_zeta_l2", "q_u_l2", "p_u_l2", "remainder_mean",
    "residual_continuity", "residual_momentum", "residual_energy", "conservation_remainder",
]
NSF_COLUMNS = ["t", "kinetic_energy", "theta_tilde_l2", "div_u_l2", "reference_gap"]
FIELD_COLUMNS = ["t", "quantity", "component", "n1", "n2", "n3", "re", "im"]
TRACKED_PACKAGES = ("numpy", "scipy", "pydantic", "ruamel.yaml")


class SeriesWriter:
    """
    Stream rows to a CSV file as they are produced

    Use as a context manager; rows are dicts keyed by the column names.
    """

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self.rows_written = 0
        self._fh = None
        self._writer = None

    def __enter__(self):
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._fh, fieldnames=self.columns)
        self._writer.writeheader()
        return self

    def write(self, row):
        self._writer.writerow({key: _format(row.get(key, "")) for key in self.columns})
        self.rows_written += 1

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        logger.debug(f"{self.path.name}: {self.rows_written} rows")
        return False


def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def read_series(path):
    """
    Columns of a series CSV as float arrays

    Returns:
        dict: {column: np.ndarray}
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name in columns:
                columns[name].append(float(row[name]) if row[name] != "" else np.nan)
    return {name: np.asarray(values) for name, values in columns.items()}


def field_rows(t, quantity, component, xfield):
    """Long-format rows of the nonzero coefficients of an XField"""
    k = xfield.kx
    for index in zip(*np.nonzero(xfield.coeffs)):
        value = xfield.coeffs[index]
        yield {
            "t": repr(float(t)),
            "quantity": quantity,
            "component": component,
            "n1": int(index[0]) - k,
            "n2": int(index[1]) - k,
            "n3": int(index[2]) - k,
            "re": repr(float(value.real)),
            "im": repr(float(value.imag)),
        }


def read_fields(path, x_radius):
    """
    Rebuild XFields from a long-format field CSV

    Modes outside x_radius are dropped.

    Returns:
        dict: {t: {(quantity, component): XField}}
    """
    k = x_radius - 1
    shape = (2 * k + 1,) * 3
    arrays = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            n = (int(row["n1"]), int(row["n2"]), int(row["n3"]))
            if any(abs(c) > k for c in n) or sum(c * c for c in n) >= x_radius ** 2:
                continue
            key = (row["quantity"], int(row["component"]))
            slot = arrays.setdefault(float(row["t"]), {}).setdefault(key, np.zeros(shape, dtype=complex))
            slot[tuple(c + k for c in n)] = complex(float(row["re"]), float(row["im"]))
    return {
        t: {key: XField(x_radius, coeffs) for key, coeffs in quantities.items()}
        for t, quantities in sorted(arrays.items())
    }


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
    logger.debug(f"JSON saved to {path}")
    return Path(path)


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def package_versions():
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def git_commit():
    """HEAD commit of the working tree, or None outside a git checkout"""
    try:
        return subprocess.check_output(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parents[1],
            text=True,
            stderr=subprocess.DEVNULL,
        ).strip()
    except (OSError, subprocess.CalledProcessError):
        return None


def build_manifest(config, seeds, started, finished, outputs):
    """Provenance record of one run"""
    return {
        "config": config.model_dump(mode="json"),
        "versions": package_versions(),
        "seeds": seeds,
        "started_at": started.isoformat(),
        "finished_at": finished.isoformat(),
        "git_commit": git_commit(),
        "outputs": sorted(str(name) for name in outputs),
    }


class RunLog:
    """Plain-text log kept alongside each run's artifacts"""

    def __init__(self, title):
        self.lines = [f"=== {title} ===", f"Started: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}"]

    def add(self, line=""):
        self.lines.append(line)

    def summary(self, status, **values):
        self.lines.append("")
        self.lines.append("=== Run Summary ===")
        for key, value in values.items():
            self.lines.append(f"{key}: {value}")
        self.lines.append(f"Completed: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        self.lines.append(f"Status: {status}")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.lines))
        return Path(path)
