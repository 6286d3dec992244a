"""
Report Manager Module
Re-analysis of finished runs: the energy report from a series CSV and the
forcing schedule / reference velocity ingested from a fields CSV.
"""
from pathlib import Path
import logging

from .dynamics import KineticParams, energy_report
from .errors import ConfigError
from .hydro import ForcingSchedule

logger = logging.getLogger(__name__)


class _SeriesTrajectory:
    """Duck-typed trajectory over the columns of a series CSV"""

    def __init__(self, columns):
        self.times = columns["t"]
        self.energy_sq = columns["energy_sq"]
        self.dissipation_sq = columns["dissipation_sq"]


class ReportManager:
    """Manages re-analysis of run directories"""

    def __init__(self, config):
        self.config = config
        self.report_log = []

    def _run_params(self, run_path):
        """KineticParams of a run: its summary.json when present, else the config"""
        from config.settings import SUMMARY_FILE
        from utils.series_io import read_json

        summary_file = run_path / SUMMARY_FILE
        if summary_file.exists():
            summary = read_json(summary_file)
            logger.debug(f"Parameters taken from {summary_file}")
            return KineticParams(
                epsilon=summary["epsilon"],
                nu_star=summary["nu_star"],
                kappa=summary["kappa"],
            )
        return self.config.kinetic_params()

    def energy_report(self, series_path, tol=None):
        """
        Recompute the energy-inequality margin from a series CSV

        Args:
            series_path: series.csv of a run (or its run directory)
            tol: violation threshold (default tolerances.tol_energy, then relative)

        Returns:
            EnergyReport (also written as energy_report.json beside the CSV)

        Raises:
            ConfigError: the file is missing or lacks the energy columns
        """
        from config.settings import ENERGY_REPORT_FILE, SERIES_FILE
        from utils.series_io import read_series, write_json

        series_path = Path(series_path)
        if series_path.is_dir():
            series_path = series_path / SERIES_FILE
        if not series_path.exists():
            raise ConfigError(f"Series file not found: {series_path}")

        columns = read_series(series_path)
        missing = {"t", "energy_sq", "dissipation_sq"} - set(columns)
        if missing:
            raise ConfigError(f"{series_path} lacks columns {sorted(missing)}")

        run_path = series_path.parent
        params = self._run_params(run_path)
        tol = tol if tol is not None else self.config.tolerances.tol_energy
        logger.info(f"Re-analysing energy inequality: {series_path} ({columns['t'].size} rows)")
        report = energy_report(_SeriesTrajectory(columns), params, tol)

        write_json(run_path / ENERGY_REPORT_FILE, report.as_dict())
        self.report_log.append(
            f"{'✓' if report.passed else '✗'} {series_path}: min margin {report.min_margin:.3e}"
        )
        return report

    def load_forcing(self, fields_path, x_radius):
        """
        Forcing schedule t -> (force_u, force_theta) from a fields CSV

        Times without any forcing row (all-zero forcing) hold zero fields.

        Returns:
            ForcingSchedule, or None when the file has no recorded times

        Raises:
            ConfigError: the file is missing
        """
        from core.spectral_core import XField
        from utils.series_io import read_fields

        fields = self._read(fields_path, x_radius, read_fields)
        zero = XField.zeros(x_radius)
        samples = []
        for t, quantities in fields.items():
            force_u = tuple(quantities.get(("force_u", i), zero) for i in range(3))
            samples.append((t, force_u, quantities.get(("force_theta", 0), zero)))
        if not samples:
            logger.warning(f"No forcing samples in {fields_path}; running unforced")
            return None
        logger.info(f"✓ Ingested forcing at {len(samples)} times from {fields_path}")
        return ForcingSchedule(samples)

    def load_reference(self, fields_path, x_radius):
        """(t, P u) samples of a kinetic run, for the limit solver's reference gap"""
        from core.spectral_core import XField
        from utils.series_io import read_fields

        fields = self._read(fields_path, x_radius, read_fields)
        zero = XField.zeros(x_radius)
        return [
            (t, tuple(quantities.get(("p_u", i), zero) for i in range(3)))
            for t, quantities in fields.items()
        ]

    def _read(self, fields_path, x_radius, reader):
        from config.settings import FIELDS_FILE

        fields_path = Path(fields_path)
        if fields_path.is_dir():
            fields_path = fields_path / FIELDS_FILE
        if not fields_path.exists():
            raise ConfigError(f"Fields file not found: {fields_path}")
        return reader(fields_path, x_radius)
