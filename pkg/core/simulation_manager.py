"""
Simulation Manager Module
Runs one kinetic trajectory (or one limit-solver trajectory) into a run
directory: streamed series CSV, long-format fields CSV, checkpoints,
energy report, summary, manifest and a plain-text run log.
"""
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
import logging

from scipy import fft as sp_fft

from .closure import build_closure_constants
from .dynamics import capped_dt, energy_report, integrate_trajectory, rhs
from .errors import KineticLabError, NumericalBlowupError, RunCancelled
from .hydro import (
    NsfState,
    extract_moments,
    forcing_terms,
    integrate_nsf,
    step_diagnostics,
    theta_tilde,
)
from .initial_data import load_initial
from .legendre_basis import build_basis
from .projections import helmholtz_project
from .spectral_core import cutoff, vector_l2, x_norm

logger = logging.getLogger(__name__)


@dataclass
class SimulationResult:
    """Everything a caller needs from a finished kinetic run"""

    run_path: Path
    epsilon: float
    dt: float
    final_field: object
    record: object
    energy: object
    series: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


class SimulationManager:
    """Manages kinetic and limit-solver runs and their artifacts"""

    def __init__(self, config, threads=None):
        self.config = config
        self.threads = threads
        self.run_path = None
        self.run_log = None

    def _prepare_run_dir(self, run_name, out_dir, prefix):
        from config.settings import DATE_FORMAT, RUNS_DIR

        base_dir = Path(out_dir) if out_dir else Path(self.config.outputs.dir or RUNS_DIR)
        if not run_name:
            run_name = f"{prefix}_{datetime.now().strftime(DATE_FORMAT)}"
        self.run_path = base_dir / run_name
        self.run_path.mkdir(parents=True, exist_ok=True)
        return run_name

    def _workers(self):
        return sp_fft.set_workers(self.threads or 1)

    def run_simulation(self, run_name=None, out_dir=None, epsilon=None, dt=None,
                       progress_callback=None, cancel_event=None):
        """
        Integrate one kinetic trajectory and write its artifacts

        Args:
            run_name: directory name inside out_dir (timestamped when omitted)
            out_dir: parent directory (config outputs.dir, then RUNS_DIR)
            epsilon: Knudsen number overriding params.epsilon (sweep members)
            dt: step overriding integrator.dt (sweep members share one)
            progress_callback: Optional callback(t, t_end)
            cancel_event: Optional threading.Event; a set event stops the run

        Returns:
            SimulationResult

        Raises:
            InvariantViolation: a hard invariant failed (abort.kll written on blow-up)
        """
        from config.settings import (
            ABORT_CHECKPOINT_FILE,
            ENERGY_REPORT_FILE,
            FIELDS_FILE,
            MANIFEST_FILE,
            RUN_LOG_FILE,
            SERIES_FILE,
            SUMMARY_FILE,
        )
        from utils.checkpoint import save_checkpoint
        from utils.series_io import (
            FIELD_COLUMNS,
            SERIES_COLUMNS,
            RunLog,
            SeriesWriter,
            build_manifest,
            field_rows,
            write_json,
        )

        config = self.config
        epsilon = epsilon or config.params.epsilon
        run_name = self._prepare_run_dir(run_name, out_dir, "simulate")
        started = datetime.now()

        band = config.build_band(epsilon)
        basis = build_basis(band)
        params = config.kinetic_params(epsilon)
        consts = build_closure_constants(basis)
        integrator = config.integrator
        outputs = config.outputs
        step_dt = dt or integrator.dt

        self.run_log = RunLog("KineticLimitLab Simulation Log")
        self.run_log.add(f"Run Name: {run_name}")
        self.run_log.add(f"Location: {self.run_path}")
        self.run_log.add(f"Band: {band}")
        self.run_log.add(f"Parameters: eps={params.epsilon}, nu*={params.nu_star}, kappa={params.kappa:.6g}")
        self.run_log.add(f"Integrator: {integrator.method}, dt={step_dt}, t_end={integrator.t_end}")
        self.run_log.add("")
        logger.info(f"Starting simulation: {run_name} (eps={epsilon}, {band})")

        f0 = load_initial(config, basis)
        initial_energy = x_norm(f0)[1]
        tol_energy = config.tolerances.tol_energy
        self.run_log.add(f"Initial data: {config.initial.preset}, E(f0)={initial_energy:.6e}")

        series = {name: [] for name in SERIES_COLUMNS}
        written = [SERIES_FILE]
        checkpoints = []

        series_path = self.run_path / SERIES_FILE
        fields_path = self.run_path / FIELDS_FILE
        with SeriesWriter(series_path, SERIES_COLUMNS) as series_writer, \
                SeriesWriter(fields_path, FIELD_COLUMNS) as fields_writer:

            def record_step(step, t, f, record):
                if cancel_event is not None and cancel_event.is_set():
                    raise RunCancelled(f"Simulation cancelled at t={t:.4g}")
                is_last = math.isclose(t, integrator.t_end, rel_tol=0.0, abs_tol=1e-9)
                if step % outputs.series_every == 0 or is_last:
                    rhs_f = rhs(f, params, basis)
                    row = {
                        "t": t,
                        "energy_sq": record.energy_sq[-1],
                        "dissipation_sq": record.dissipation_sq[-1],
                        "cumulative_dissipation": record.cumulative_dissipation[-1],
                        "energy_margin": record.margin(params),
                    }
                    row.update(step_diagnostics(f, rhs_f, params, basis, consts, config.tolerances.tol_identity))
                    series_writer.write(row)
                    for name in SERIES_COLUMNS:
                        series[name].append(row[name])
                    if outputs.write_fields:
                        self._write_field_rows(fields_writer, field_rows, t, f, basis, params, consts)
                if outputs.checkpoint_every and step % outputs.checkpoint_every == 0:
                    path = save_checkpoint(f, self.run_path / f"checkpoint_{step:06d}.kll")
                    checkpoints.append(path.name)
                if progress_callback:
                    progress_callback(t, integrator.t_end)

            try:
                with self._workers():
                    final_field, record = integrate_trajectory(
                        f0,
                        params,
                        basis,
                        step_dt,
                        integrator.t_end,
                        method=integrator.method,
                        record_every=outputs.series_every,
                        step_callback=record_step,
                        safety=integrator.dt_safety,
                        quad_dt=integrator.quad_dt,
                        picard_iterations=integrator.picard_iterations,
                    )
            except NumericalBlowupError as e:
                if e.last_good is not None:
                    save_checkpoint(e.last_good, self.run_path / ABORT_CHECKPOINT_FILE)
                    self.run_log.add(f"  ✗ Blow-up near t={e.time}; last finite state in {ABORT_CHECKPOINT_FILE}")
                self._fail(str(e), RUN_LOG_FILE)
                raise
            except KineticLabError as e:
                self._fail(str(e), RUN_LOG_FILE)
                raise

        if outputs.write_fields:
            written.append(FIELDS_FILE)
        else:
            fields_path.unlink(missing_ok=True)
        written.extend(checkpoints)

        report = energy_report(record, params, tol_energy)
        write_json(self.run_path / ENERGY_REPORT_FILE, report.as_dict())
        written.append(ENERGY_REPORT_FILE)
        self.run_log.add(
            f"  {'✓' if report.passed else '✗'} Energy inequality: min margin {report.min_margin:.3e} "
            f"at t={report.worst_time:.4g} ({report.violations} violations)"
        )

        macro = extract_moments(final_field, basis)
        summary = {
            "run_name": run_name,
            "epsilon": params.epsilon,
            "nu_star": params.nu_star,
            "kappa": params.kappa,
            "band": {"n_x": band.x_radius, "n_v": band.v_halfwidth},
            "method": integrator.method,
            "dt": record.times[1] - record.times[0] if len(record) > 1 else step_dt,
            "steps": len(record) - 1,
            "t_end": record.times[-1],
            "initial_energy": initial_energy,
            "final_energy_sq": record.energy_sq[-1],
            "cumulative_dissipation": record.cumulative_dissipation[-1],
            "energy_pass": report.passed,
            "max_identity_residual": max(
                max(series["residual_continuity"], default=0.0),
                max(series["residual_momentum"], default=0.0),
                max(series["residual_energy"], default=0.0),
            ),
            "final_u_l2": vector_l2(macro.u),
        }
        write_json(self.run_path / SUMMARY_FILE, summary)
        written.append(SUMMARY_FILE)

        finished = datetime.now()
        written.extend([MANIFEST_FILE, RUN_LOG_FILE])
        manifest = build_manifest(config, {"initial": config.initial.seed}, started, finished, written)
        write_json(self.run_path / MANIFEST_FILE, manifest)

        self.run_log.summary(
            "SUCCESS" if report.passed else "ENERGY VIOLATION",
            **{"Steps": summary["steps"], "Final E^2": f"{summary['final_energy_sq']:.6e}",
               "Rows written": len(series["t"])},
        )
        self.run_log.save(self.run_path / RUN_LOG_FILE)

        logger.info(f"✓ Simulation completed: {self.run_path}")
        return SimulationResult(
            run_path=self.run_path,
            epsilon=params.epsilon,
            dt=summary["dt"],
            final_field=final_field,
            record=record,
            energy=report,
            series=series,
            summary=summary,
        )

    def _write_field_rows(self, writer, field_rows, t, f, basis, params, consts):
        macro = extract_moments(f, basis)
        solenoidal, _ = helmholtz_project(macro.u)
        forcing = forcing_terms(macro, params)
        mu5 = consts.mu_value(5)
        quantities = [("p_u", i, c) for i, c in enumerate(solenoidal)]
        quantities.append(("theta_tilde", 0, theta_tilde(macro, mu5)))
        quantities.extend(("force_u", i, c) for i, c in enumerate(forcing.u_forcing(params)))
        quantities.append(("force_theta", 0, forcing.theta_forcing(params, mu5)))
        for quantity, component, xfield in quantities:
            for row in field_rows(t, quantity, component, xfield):
                writer.write(row)

    def _fail(self, message, log_name):
        error_msg = f"  ✗ Run failed: {message}"
        self.run_log.add(error_msg)
        logger.error(error_msg, exc_info=True)
        self.run_log.summary("FAILED")
        self.run_log.save(self.run_path / log_name)

    def run_nsf(self, run_name=None, out_dir=None, forcing=None, reference=None, progress_callback=None):
        """
        Run the limit solver from the configured initial moments

        Args:
            forcing: None or a callable t -> (force_u, force_theta)
            reference: optional list of (t, P u) from a kinetic run; the gap
                ||u - P u_kinetic|| is recorded at matching times

        Returns:
            dict: run summary (also written to summary.json)
        """
        from config.settings import MANIFEST_FILE, NSF_SERIES_FILE, RUN_LOG_FILE, SUMMARY_FILE
        from utils.series_io import NSF_COLUMNS, RunLog, SeriesWriter, build_manifest, write_json

        config = self.config
        run_name = self._prepare_run_dir(run_name, out_dir, "nsf")
        started = datetime.now()
        basis = build_basis(config.build_band())
        params = config.kinetic_params()
        consts = build_closure_constants(basis)

        macro0 = extract_moments(load_initial(config, basis), basis)
        state = NsfState.from_macro(macro0, nu=params.nu, mu5=consts.mu_value(5))
        lookup = {round(t, 9): velocity for t, velocity in reference or ()}

        self.run_log = RunLog("KineticLimitLab Limit Solver Log")
        self.run_log.add(f"Run Name: {run_name}")
        self.run_log.add(f"nu={params.nu:.6g}, dt={config.nsf.dt}, t_end={config.nsf.t_end}")
        self.run_log.add(f"Forcing: {'ingested' if forcing is not None else 'none'}")
        self.run_log.add("")
        logger.info(f"Starting limit solver run: {run_name}")

        gaps = []
        series_path = self.run_path / NSF_SERIES_FILE
        with SeriesWriter(series_path, NSF_COLUMNS) as writer:

            def record_step(step, current):
                gap = ""
                kinetic_u = lookup.get(round(current.time, 9))
                if kinetic_u is not None:
                    radius = current.x_radius
                    gap = vector_l2(tuple(a - cutoff(b, radius) for a, b in zip(current.u, kinetic_u)))
                    gaps.append(gap)
                writer.write({
                    "t": current.time,
                    "kinetic_energy": current.kinetic_energy(),
                    "theta_tilde_l2": x_norm(current.theta_tilde)[0],
                    "div_u_l2": current.divergence_norm(),
                    "reference_gap": gap,
                })
                if progress_callback:
                    progress_callback(current.time, config.nsf.t_end)

            try:
                with self._workers():
                    final = integrate_nsf(state, config.nsf.dt, config.nsf.t_end, forcing,
                                          params.kappa, step_callback=record_step)
            except KineticLabError as e:
                self._fail(str(e), RUN_LOG_FILE)
                raise

        summary = {
            "run_name": run_name,
            "nu": params.nu,
            "t_end": final.time,
            "initial_kinetic_energy": state.kinetic_energy(),
            "final_kinetic_energy": final.kinetic_energy(),
            "final_divergence_l2": final.divergence_norm(),
            "forcing": forcing is not None,
            "max_reference_gap": max(gaps) if gaps else None,
        }
        write_json(self.run_path / SUMMARY_FILE, summary)
        outputs = [NSF_SERIES_FILE, SUMMARY_FILE, MANIFEST_FILE, RUN_LOG_FILE]
        manifest = build_manifest(config, {"initial": config.initial.seed}, started, datetime.now(), outputs)
        write_json(self.run_path / MANIFEST_FILE, manifest)

        self.run_log.summary("SUCCESS", **{
            "Final kinetic energy": f"{summary['final_kinetic_energy']:.6e}",
            "Final ||div u||": f"{summary['final_divergence_l2']:.3e}",
        })
        self.run_log.save(self.run_path / RUN_LOG_FILE)
        logger.info(f"✓ Limit solver run completed: {self.run_path}")
        return summary


def sweep_dt(config, eps_list):
    """Common step of an epsilon sweep: the smallest capped dt over its members"""
    steps = []
    for epsilon in eps_list:
        band = config.build_band(epsilon)
        steps.append(capped_dt(config.integrator.dt, config.kinetic_params(epsilon), band,
                               config.integrator.dt_safety))
    return min(steps)
