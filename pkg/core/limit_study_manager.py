"""
Limit Study Manager Module
Runs an epsilon sweep from identical initial moments and measures the
hydrodynamic-limit diagnostics:

    s1  (int_0^T D^2)^(1/2)
    s2  ||div u||_{L2_t H^-1}
    s3  ||grad(3 sqrt5 rho + 2 theta_c)|| at T
    s4  sup_t ||P u(eps) - P u(eps')|| between consecutive members
    s5  int_0^T sum |mean_x <e R>| dt
"""
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
import logging

import numpy as np
from scipy.integrate import trapezoid

from .errors import RunCancelled
from .hydro import loglog_slope, solenoidal_gap, strictly_decreasing
from .simulation_manager import SimulationManager, sweep_dt

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["eps", "dt", "steps", "s1", "s2", "s3", "s4", "s5_remainder", "energy_margin_min", "energy_pass"]
MONOTONE_KEYS = ("s2", "s3", "s4", "s5_remainder")


def member_metrics(result):
    """s1, s2, s3, s5 and the energy margin of one finished sweep member"""
    series = result.series
    times = np.asarray(series["t"], dtype=float)
    div_sq = np.asarray(series["div_u_hm1"], dtype=float) ** 2
    remainder = np.asarray(series["remainder_mean"], dtype=float)
    return {
        "eps": result.epsilon,
        "dt": result.dt,
        "steps": result.summary["steps"],
        "s1": math.sqrt(max(result.record.cumulative_dissipation[-1], 0.0)),
        "s2": math.sqrt(float(trapezoid(div_sq, times))) if times.size > 1 else 0.0,
        "s3": float(series["boussinesq_limit"][-1]),
        "s4": None,
        "s5_remainder": float(trapezoid(remainder, times)) if times.size > 1 else 0.0,
        "energy_margin_min": result.energy.min_margin,
        "energy_pass": result.energy.passed,
    }


class LimitStudyManager:
    """Manages epsilon sweeps and their convergence report"""

    def __init__(self, config, threads=None):
        self.config = config
        self.threads = threads or 1
        self.study_path = None

    def run_study(self, eps_list=None, out_dir=None, study_name=None, progress_callback=None):
        """
        Run every sweep member to the study horizon and summarize

        Args:
            eps_list: strictly decreasing Knudsen numbers (default study.eps_list)
            out_dir: parent directory of the study
            study_name: study directory name (timestamped when omitted)
            progress_callback: Optional callback(eps, completed, total)

        Returns:
            dict: the convergence report (also written to convergence.json)

        Raises:
            InvariantViolation: a member failed a hard invariant; the rest are cancelled
        """
        from config.settings import (
            CONVERGENCE_FILE,
            DATE_FORMAT,
            RUN_LOG_FILE,
            RUNS_DIR,
            S1_SLOPE_RANGE,
            SWEEP_FILE,
        )
        from utils.series_io import RunLog, SeriesWriter, write_json

        config = self.config
        eps_list = tuple(eps_list or config.study.eps_list)
        if eps_list != tuple(config.study.eps_list):
            # re-validate through the schema (strictly decreasing, >= 2 values)
            config = config.with_overrides([f"study.eps_list={','.join(repr(e) for e in eps_list)}"])
        config = config.with_overrides([f"integrator.t_end={config.study.horizon!r}"])

        base_dir = Path(out_dir) if out_dir else Path(config.outputs.dir or RUNS_DIR)
        study_name = study_name or f"limit_study_{datetime.now().strftime(DATE_FORMAT)}"
        self.study_path = base_dir / study_name
        self.study_path.mkdir(parents=True, exist_ok=True)

        dt = sweep_dt(config, eps_list)
        run_log = RunLog("KineticLimitLab Limit Study Log")
        run_log.add(f"Study: {study_name}")
        run_log.add(f"eps: {list(eps_list)}; horizon {config.study.horizon}; common dt {dt:.4e}")
        run_log.add("")
        logger.info(f"Starting limit study over eps={list(eps_list)} with dt={dt:.4e} on {self.threads} thread(s)")

        cancel_event = threading.Event()
        completed = []

        def run_member(epsilon):
            manager = SimulationManager(config, threads=1)
            try:
                result = manager.run_simulation(
                    run_name=f"eps_{epsilon:g}",
                    out_dir=self.study_path,
                    epsilon=epsilon,
                    dt=dt,
                    cancel_event=cancel_event,
                )
            except Exception:
                cancel_event.set()
                raise
            completed.append(epsilon)
            logger.info(f"✓ Sweep member eps={epsilon:g} finished ({len(completed)}/{len(eps_list)})")
            if progress_callback:
                progress_callback(epsilon, len(completed), len(eps_list))
            return result

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(run_member, epsilon) for epsilon in eps_list]
        errors = [future.exception() for future in futures if future.exception() is not None]
        if errors:
            e = next((error for error in errors if not isinstance(error, RunCancelled)), errors[0])
            error_msg = f"  ✗ Limit study failed: {e}"
            run_log.add(error_msg)
            logger.error(error_msg, exc_info=e)
            run_log.summary("FAILED")
            run_log.save(self.study_path / RUN_LOG_FILE)
            raise e
        results = [future.result() for future in futures]

        rows = [member_metrics(result) for result in results]
        for previous, current, row in zip(results, results[1:], rows[1:]):
            row["s4"] = solenoidal_gap(previous.record.macro_series, current.record.macro_series)

        report = self._report(eps_list, rows, S1_SLOPE_RANGE)

        with SeriesWriter(self.study_path / SWEEP_FILE, SWEEP_COLUMNS) as writer:
            for row in rows:
                writer.write({key: ("" if value is None else value) for key, value in row.items()})
        write_json(self.study_path / CONVERGENCE_FILE, report)

        for row in rows:
            run_log.add(
                f"eps={row['eps']:g}: s1={row['s1']:.4e} s2={row['s2']:.4e} s3={row['s3']:.4e} "
                f"s4={'-' if row['s4'] is None else format(row['s4'], '.4e')} s5={row['s5_remainder']:.4e}"
            )
        run_log.summary(
            "PASS" if report["pass"] else "FAIL",
            **{f"slope {key}": value for key, value in report["slopes"].items()},
        )
        run_log.save(self.study_path / RUN_LOG_FILE)
        logger.info(f"{'✓' if report['pass'] else '✗'} Limit study completed: {self.study_path}")
        return report

    def _report(self, eps_list, rows, s1_range):
        slopes = {}
        for key in ("s1", "s2", "s3", "s5_remainder"):
            slopes[key] = loglog_slope(eps_list, [row[key] for row in rows])
        s4_rows = [row for row in rows if row["s4"] is not None]
        slopes["s4"] = loglog_slope([row["eps"] for row in s4_rows], [row["s4"] for row in s4_rows])

        monotone = {}
        for key in MONOTONE_KEYS:
            values = [row[key] for row in rows if row[key] is not None]
            monotone[key] = strictly_decreasing(values)
            if not monotone[key]:
                logger.warning(f"Sweep diagnostic {key} is not strictly decreasing: {values}")

        s1_values = [row["s1"] for row in rows]
        if all(value == 0.0 for value in s1_values):
            logger.info("All dissipation integrals vanish; slope check is trivially satisfied")
            s1_ok = True
        else:
            low, high = s1_range
            s1_ok = slopes["s1"] is not None and low <= slopes["s1"] <= high
        energy_ok = all(row["energy_pass"] for row in rows)
        if not s1_ok:
            logger.warning(f"s1 slope {slopes['s1']} outside {s1_range}")

        return {
            "per_eps": {
                f"{row['eps']:g}": {
                    key: row[key]
                    for key in ("s1", "s2", "s3", "s4", "s5_remainder", "energy_margin_min")
                }
                for row in rows
            },
            "slopes": slopes,
            "monotone": monotone,
            "s1_slope_range": list(s1_range),
            "dt": rows[0]["dt"] if rows else None,
            "pass": bool(s1_ok and energy_ok),
        }
