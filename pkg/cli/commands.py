"""
Command-line surface: argparse subcommands mapped onto the run managers

Exit codes: 0 pass, 1 hard invariant failure, 2 usage or configuration error.
"""
import argparse
import csv
import json
import os
import sys
from datetime import datetime
from pathlib import Path
import logging

from config.settings import (
    APP_NAME,
    APP_VERSION,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_USAGE,
    THREADS_ENV_VAR,
)
from core.errors import (
    BandMismatchError,
    ConfigError,
    InvariantViolation,
    KineticLabError,
    ModeOutOfBandError,
    OracleMismatch,
)

logger = logging.getLogger(__name__)


def _parse_eps_list(text):
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid --eps-list '{text}': {exc}") from None


def _band_radius(minimum):
    def parse(text):
        value = int(text)
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        return value
    return parse


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--override", action="append", default=[], metavar="K=V",
                        help="dotted-path override, repeatable (e.g. params.epsilon=0.1)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV_VAR})")

    parser = argparse.ArgumentParser(prog="kll", description=f"{APP_NAME} v{APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    constants = sub.add_parser("constants", parents=[common], help="basis and closure constants vs their limits")
    constants.add_argument("--n-x", type=_band_radius(1), dest="n_x")
    constants.add_argument("--n-v", type=_band_radius(2), dest="n_v")

    sub.add_parser("verify-closure", parents=[common], help="exact moment oracle over the full closure table")
    sub.add_parser("simulate", parents=[common], help="one kinetic trajectory with reports")

    study = sub.add_parser("limit-study", parents=[common], help="epsilon sweep with slopes")
    study.add_argument("--eps-list", type=_parse_eps_list, dest="eps_list", help="comma-separated, decreasing")

    nsf = sub.add_parser("nsf", parents=[common], help="reference limit-system run")
    nsf.add_argument("--ingest", help="fields.csv (or run directory) to take forcing from")

    energy = sub.add_parser("energy-report", parents=[common], help="re-analyse a series CSV")
    energy.add_argument("series", help="series.csv or a run directory")
    return parser


def resolve_threads(requested):
    """--threads, then $KLL_THREADS, then 1"""
    if requested:
        return max(1, requested)
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={raw!r}")
        return 1


def _output_dir(args, config, prefix):
    from config.settings import DATE_FORMAT, RUNS_DIR

    if args.out:
        path = Path(args.out)
    else:
        path = Path(config.outputs.dir or RUNS_DIR) / f"{prefix}_{datetime.now().strftime(DATE_FORMAT)}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_constants(args, config):
    from config.settings import CONSTANTS_CSV_FILE, CONSTANTS_JSON_FILE, CONSTANTS_TARGET_GAP
    from core.closure import ClosureConstants, build_closure_constants, n_v_for_gap
    from core.legendre_basis import LIMIT_C0, LIMIT_C1, LIMIT_C2, TAIL_SLOPES, build_basis
    from core.spectral_core import Band
    from utils.series_io import write_json

    band = Band(args.n_x or config.band.n_x, args.n_v or config.band.n_v)
    basis = build_basis(band)
    consts = build_closure_constants(basis)

    limits = dict(ClosureConstants.LIMITS, c0=LIMIT_C0, c1=LIMIT_C1, c2=LIMIT_C2)
    slopes = dict(ClosureConstants.TAIL_SLOPES, **TAIL_SLOPES)
    predicted = dict(consts.predicted_gaps(), **basis.predicted_gaps())
    values = {"c0": basis.c0, "c1": basis.c1, "c2": basis.c2}
    values.update(consts.as_dict())
    rows = []
    for name, value in values.items():
        gap = abs(value - limits[name])
        rows.append({
            "name": name,
            "value": value,
            "limit": limits[name],
            "gap": gap,
            "predicted_gap": predicted.get(name),
            "within_target": gap < CONSTANTS_TARGET_GAP,
        })
    misses = [row["name"] for row in rows if not row["within_target"]]
    payload = {
        "band": {"n_x": band.x_radius, "n_v": band.v_halfwidth},
        "sawtooth_tail": basis.sawtooth_tail,
        "target_gap": CONSTANTS_TARGET_GAP,
        "misses": misses,
        "constants": rows,
    }

    out = _output_dir(args, config, "constants")
    write_json(out / CONSTANTS_JSON_FILE, payload)
    with open(out / CONSTANTS_CSV_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(json.dumps(payload, indent=2))

    for name in misses:
        needed = n_v_for_gap(slopes[name], CONSTANTS_TARGET_GAP) if slopes.get(name) else None
        hint = f"; the O(1/N_v) tail needs N_v ~ {needed}" if needed else ""
        logger.warning(f"{name}: gap {abs(values[name] - limits[name]):.3e} above {CONSTANTS_TARGET_GAP:g} "
                       f"on {band}{hint}")
    logger.info(f"✓ Constants on {band} written to {out} ({len(misses)} above target)")
    return EXIT_OK


def cmd_verify_closure(args, config):
    from config.settings import CLOSURE_TABLE_FILE
    from core.moment_oracle import verify_closure_tables

    report = verify_closure_tables(strict=False)
    out = _output_dir(args, config, "verify_closure")
    columns = ["lemma", "symbol", "expected", "computed", "pass", "status", "note"]
    with open(out / CLOSURE_TABLE_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(report.to_records())

    for record in report.to_records():
        print(f"{record['status']:<12} {record['lemma']:<20} {record['symbol']:<40} "
              f"{record['expected']:>20} {record['computed']:>20}")
    if report.failures:
        first = report.failures[0]
        raise OracleMismatch(first.lemma, first.symbol, first.expected, first.computed)
    return EXIT_OK


def cmd_simulate(args, config):
    from core.simulation_manager import SimulationManager

    out = _output_dir(args, config, "simulate")
    manager = SimulationManager(config, threads=resolve_threads(args.threads))
    result = manager.run_simulation(run_name=out.name, out_dir=out.parent)
    if not result.energy.passed:
        logger.critical(f"✗ Energy inequality violated: min margin {result.energy.min_margin:.3e}")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_limit_study(args, config):
    from core.limit_study_manager import LimitStudyManager

    out = _output_dir(args, config, "limit_study")
    manager = LimitStudyManager(config, threads=resolve_threads(args.threads))
    report = manager.run_study(eps_list=args.eps_list, out_dir=out.parent, study_name=out.name)
    print(json.dumps({"slopes": report["slopes"], "monotone": report["monotone"], "pass": report["pass"]}, indent=2))
    return EXIT_OK if report["pass"] else EXIT_INVARIANT


def cmd_nsf(args, config):
    from core.report_manager import ReportManager
    from core.simulation_manager import SimulationManager

    ingest = args.ingest or config.nsf.ingest
    forcing = reference = None
    if ingest:
        x_radius = config.build_band().x_radius
        reports = ReportManager(config)
        forcing = reports.load_forcing(ingest, x_radius)
        reference = reports.load_reference(ingest, x_radius)

    out = _output_dir(args, config, "nsf")
    manager = SimulationManager(config, threads=resolve_threads(args.threads))
    summary = manager.run_nsf(run_name=out.name, out_dir=out.parent, forcing=forcing, reference=reference)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_energy_report(args, config):
    from core.report_manager import ReportManager

    report = ReportManager(config).energy_report(args.series)
    print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK if report.passed else EXIT_INVARIANT


COMMANDS = {
    "constants": cmd_constants,
    "verify-closure": cmd_verify_closure,
    "simulate": cmd_simulate,
    "limit-study": cmd_limit_study,
    "nsf": cmd_nsf,
    "energy-report": cmd_energy_report,
}


def run_cli(argv=None):
    """
    Parse argv, run one subcommand and map its outcome to an exit code

    Returns:
        int: EXIT_OK, EXIT_INVARIANT or EXIT_USAGE
    """
    from utils.run_config import load_config

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        config = load_config(args.config, args.override)
        logger.info(f"Running '{args.command}'")
        return COMMANDS[args.command](args, config)
    except (ConfigError, ModeOutOfBandError, BandMismatchError) as e:
        logger.critical(f"✗ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        logger.critical(f"✗ Invariant '{e.invariant}' violated: {e}", exc_info=True)
        print(f"invariant violated: {e.invariant}: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except KineticLabError as e:
        logger.critical(f"✗ {e}", exc_info=True)
        return EXIT_INVARIANT
