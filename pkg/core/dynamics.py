"""
Time evolution of the band-limited kinetic equation

    df/dt = -(1/eps) Lambda(v . grad_x f) - L f / (eps^2 nu*)
            + (kappa / (eps nu*)) L Lambda(f^2) - (kappa^2 / nu*) Lambda(f^3)

Integrators:
    imex   Strang splitting, exact relaxation exp(-tau L) = P + e^-tau L around
           an explicit RK4 step of the non-stiff terms (default)
    rk4    classical RK4 on the full right-hand side
    picard the integral-equation iteration of the existence argument, used to
           cross-check the steppers
"""
import logging
import math
from dataclasses import dataclass, field
from functools import wraps

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config.settings import (
    DEFAULT_KAPPA,
    DEFAULT_NU_STAR,
    DEFAULT_PICARD_ITERATIONS,
    DEFAULT_QUAD_DT,
    DT_SAFETY,
    PICARD_CONVERGED,
    PICARD_RATIO_EXPECTED,
    PICARD_RATIO_LIMIT,
    PROGRESS_LOG_INTERVAL,
    NU_STAR_PER_NU,
    RK4_IMAG_STABILITY,
    RK4_REAL_STABILITY,
    TOL_ENERGY_RELATIVE,
)
from .errors import NumericalBlowupError, PicardDivergenceError
from .projections import check_band, macro_project, micro_project
from .spectral_core import (
    SpectralField,
    cutoff,
    derivative_x,
    multiply_by_sawtooth,
    product,
    triple_product,
    x_norm,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KineticParams:
    """Knudsen number epsilon, relaxation scale nu*, nonlinearity kappa"""

    epsilon: float
    nu_star: float = DEFAULT_NU_STAR
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        for name in ("epsilon", "nu_star", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def nu(self):
        """Limit viscosity nu = nu*/12"""
        return self.nu_star / NU_STAR_PER_NU

    @property
    def relaxation_rate(self):
        return 1.0 / (self.epsilon ** 2 * self.nu_star)


def ensure_finite(func):
    """
    Decorator for steppers: abort with the last finite state on NaN/inf

    The wrapped function takes the state as its first argument and the
    time step as its second.
    """
    @wraps(func)
    def wrapper(f, dt, *args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            result = func(f, dt, *args, **kwargs)
        if not result.is_finite():
            raise NumericalBlowupError(
                f"non-finite coefficients after {func.__name__} (dt={dt:.3e})",
                last_good=f,
            )
        return result
    return wrapper


def transport(f):
    """Lambda(v . grad_x f) on the band of f"""
    band = f.band
    total = SpectralField.zeros(band)
    for axis in range(3):
        total = total + multiply_by_sawtooth(derivative_x(f, axis), axis, band)
    return total


def rhs_nonstiff(f, params, basis):
    """Transport, quadratic and cubic terms (everything but the linear relaxation)"""
    check_band(f, basis)
    band = f.band
    eps, nu_star, kappa = params.epsilon, params.nu_star, params.kappa
    square = micro_project(product(f, f, band), basis)
    cube = triple_product(f, f, f, band)
    return (-1.0 / eps) * transport(f) + (kappa / (eps * nu_star)) * square - (kappa ** 2 / nu_star) * cube


def rhs(f, params, basis):
    """
    Full time derivative of the truncated equation

    Args:
        f: SpectralField on the simulation band
        params: KineticParams
        basis: BasisSet with the same N_v

    Returns:
        SpectralField: every term alias-free and cut back to the band of f

    Raises:
        BandMismatchError: f and basis disagree on N_v
    """
    relaxation = micro_project(f, basis) * params.relaxation_rate
    return rhs_nonstiff(f, params, basis) - relaxation


def relax(f, tau, basis):
    """exp(-tau L) f = P f + e^-tau L f, exact since L is a projection"""
    return f - (1.0 - math.exp(-tau)) * micro_project(f, basis)


def _rk4(derivative, f, dt):
    k1 = derivative(f)
    k2 = derivative(f + (0.5 * dt) * k1)
    k3 = derivative(f + (0.5 * dt) * k2)
    k4 = derivative(f + dt * k3)
    return f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@ensure_finite
def step_imex(f, dt, params, basis):
    """Strang step: half relaxation, RK4 on the non-stiff part, half relaxation"""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    tau = 0.5 * dt * params.relaxation_rate
    g = relax(f, tau, basis)
    g = _rk4(lambda h: rhs_nonstiff(h, params, basis), g, dt)
    return relax(g, tau, basis)


@ensure_finite
def step_rk4(f, dt, params, basis):
    """Classical RK4 on the full right-hand side; warns above the stiff bound"""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = RK4_REAL_STABILITY / params.relaxation_rate
    if dt > limit:
        logger.warning(f"RK4 dt={dt:.3e} exceeds the relaxation stability bound {limit:.3e}")
    return _rk4(lambda h: rhs(h, params, basis), f, dt)


def homogeneous_decay(f0, t, params):
    """Closed-form solution f0 / sqrt(1 + 2 kappa^2 f0^2 t / nu*) of f' = -(kappa^2/nu*) f^3"""
    return f0 / math.sqrt(1.0 + 2.0 * params.kappa ** 2 * f0 ** 2 * t / params.nu_star)


@dataclass(frozen=True, eq=False)
class PicardResult:
    """Final iterate at T plus the successive-difference history"""

    field: SpectralField
    differences: list
    ratios: list

    @property
    def iterations(self):
        return len(self.differences)

    @property
    def contracting_at_expected_rate(self):
        return all(r <= PICARD_RATIO_EXPECTED for r in self.ratios[1:])


def picard_solve(f0, T, iterations=DEFAULT_PICARD_ITERATIONS, quad_dt=DEFAULT_QUAD_DT, params=None, basis=None):
    """
    Picard iteration g_{j+1}(t) = g_0 + int_0^t rhs(g_j(s)) ds

    The time integral is a cumulative composite trapezoid rule on a uniform
    grid of spacing <= quad_dt. Differences are measured in sup_t ||.||_X.

    The first ratio d_2/d_1 is exempt from the divergence check; only
    ratios[1:] are compared with PICARD_RATIO_LIMIT.

    Args:
        f0: initial field (cut to the basis band)
        T: final time
        iterations: maximum number of iterates
        quad_dt: quadrature resolution
        params: KineticParams
        basis: BasisSet

    Returns:
        PicardResult: g_J(T), differences and ratios

    Raises:
        PicardDivergenceError: any ratio but the first reached PICARD_RATIO_LIMIT
    """
    if T <= 0 or quad_dt <= 0:
        raise ValueError(f"T and quad_dt must be positive (got {T}, {quad_dt})")
    band = basis.band
    g0 = cutoff(f0, band)
    nodes = max(1, math.ceil(T / quad_dt - 1e-12))
    times = np.linspace(0.0, T, nodes + 1)
    current = np.broadcast_to(g0.coeffs, (nodes + 1,) + band.shape).copy()

    differences, ratios = [], []
    for j in range(iterations):
        derivs = np.stack([rhs(SpectralField(band, c), params, basis).coeffs for c in current])
        following = g0.coeffs[None] + cumulative_trapezoid(derivs, times, axis=0, initial=0)
        if not np.all(np.isfinite(following)):
            raise NumericalBlowupError(f"Picard iterate {j + 1} is not finite", last_good=g0)
        diff = max(x_norm(SpectralField(band, a - b))[1] for a, b in zip(following, current))
        current = following
        if differences and differences[-1] > 0:
            ratios.append(diff / differences[-1])
        differences.append(diff)
        logger.debug(f"Picard iterate {j + 1}: sup_t ||g_j+1 - g_j||_X = {diff:.3e}")
        if len(ratios) >= 2 and ratios[-1] >= PICARD_RATIO_LIMIT:
            raise PicardDivergenceError(ratios)
        if diff < PICARD_CONVERGED:
            break

    return PicardResult(field=SpectralField(band, current[-1]), differences=differences, ratios=ratios)


def step_picard(f, dt, params, basis, iterations=DEFAULT_PICARD_ITERATIONS, quad_dt=DEFAULT_QUAD_DT):
    """One step of length dt by Picard iteration, for use as an integrator"""
    return picard_solve(f, dt, iterations, min(quad_dt, dt), params, basis).field


STEPPERS = {
    "imex": step_imex,
    "rk4": step_rk4,
    "picard": step_picard,
}


@dataclass
class TrajectoryRecord:
    """Per-step energy and dissipation plus sparser macro snapshots"""

    times: list = field(default_factory=list)
    energy_sq: list = field(default_factory=list)
    dissipation_sq: list = field(default_factory=list)
    cumulative_dissipation: list = field(default_factory=list)
    macro_series: list = field(default_factory=list)  # (t, MacroState)
    checkpoints: list = field(default_factory=list)  # (t, SpectralField)

    def append(self, t, energy_sq, dissipation_sq):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"times must increase ({t} after {self.times[-1]})")
        if self.times:
            dt = t - self.times[-1]
            total = self.cumulative_dissipation[-1] + 0.5 * dt * (self.dissipation_sq[-1] + dissipation_sq)
        else:
            total = 0.0
        self.times.append(float(t))
        self.energy_sq.append(float(energy_sq))
        self.dissipation_sq.append(float(dissipation_sq))
        self.cumulative_dissipation.append(float(total))

    def margin(self, params, index=-1):
        """E(f0)^2 - E(f)^2 - (1/(eps^2 nu*)) int D^2 at a recorded index"""
        return (
            self.energy_sq[0]
            - self.energy_sq[index]
            - params.relaxation_rate * self.cumulative_dissipation[index]
        )

    def __len__(self):
        return len(self.times)


def energy_and_dissipation(f, basis):
    """(E(f)^2, D(f)^2) with E the X-norm of f and D the X-norm of L f"""
    energy = x_norm(f)[1]
    dissipation = x_norm(micro_project(f, basis))[1]
    return energy ** 2, dissipation ** 2


def capped_dt(dt, params, band, safety=DT_SAFETY):
    """
    dt <= safety * min(eps, transport limit)

    The transport operator has imaginary spectrum bounded by
    (pi / eps) * sum_j |n_j| <= 3 pi kx / eps.
    """
    transport_dt = math.inf if band.kx == 0 else RK4_IMAG_STABILITY * params.epsilon / (3.0 * math.pi * band.kx)
    return min(dt, safety * min(params.epsilon, transport_dt))


def integrate_trajectory(f0, params, basis, dt, t_end, method="imex", record_every=1,
                         checkpoint_every=0, step_callback=None, safety=DT_SAFETY,
                         quad_dt=DEFAULT_QUAD_DT, picard_iterations=DEFAULT_PICARD_ITERATIONS):
    """
    Advance f0 to t_end with a uniform step

    The requested dt is capped by capped_dt and then shrunk so that an
    integer number of steps lands exactly on t_end.

    Args:
        record_every: store a MacroState snapshot every N steps
        checkpoint_every: store the full field every N steps (0 = never)
        step_callback: called as step_callback(step, t, f, record) after every step

    Returns:
        tuple: (final field, TrajectoryRecord)

    Raises:
        NumericalBlowupError: non-finite state; carries the last finite field
    """
    if method not in STEPPERS:
        raise ValueError(f"unknown integrator {method!r}; choose from {sorted(STEPPERS)}")
    if dt <= 0 or t_end < dt:
        raise ValueError(f"need dt > 0 and t_end >= dt (got dt={dt}, t_end={t_end})")

    step_dt = capped_dt(dt, params, basis.band, safety)
    n_steps = max(1, math.ceil(t_end / step_dt - 1e-9))
    step_dt = t_end / n_steps
    if step_dt < dt:
        logger.info(f"dt capped from {dt:.3e} to {step_dt:.3e} ({n_steps} steps)")

    stepper = STEPPERS[method]
    extra = {"iterations": picard_iterations, "quad_dt": quad_dt} if method == "picard" else {}

    f = cutoff(f0, basis.band)
    record = TrajectoryRecord()
    record.append(0.0, *energy_and_dissipation(f, basis))
    record.macro_series.append((0.0, macro_project(f, basis)[0]))
    if checkpoint_every:
        record.checkpoints.append((0.0, f))
    if step_callback:
        step_callback(0, 0.0, f, record)

    for step in range(1, n_steps + 1):
        t = step * step_dt
        try:
            f = stepper(f, step_dt, params, basis, **extra)
        except NumericalBlowupError as exc:
            exc.time = t - step_dt
            logger.error(f"✗ Blow-up at t={t:.4g} (step {step}): {exc}")
            raise
        record.append(t, *energy_and_dissipation(f, basis))
        if step % record_every == 0 or step == n_steps:
            record.macro_series.append((t, macro_project(f, basis)[0]))
        if checkpoint_every and step % checkpoint_every == 0:
            record.checkpoints.append((t, f))
        if step_callback:
            step_callback(step, t, f, record)
        if step % PROGRESS_LOG_INTERVAL == 0:
            logger.info(f"Step {step}/{n_steps}: t={t:.4g} E^2={record.energy_sq[-1]:.6e}")

    logger.info(f"✓ Integrated to t={t_end:.4g} with {method} in {n_steps} steps")
    return f, record


@dataclass(frozen=True)
class EnergyReport:
    """Margin of the global energy inequality along a trajectory"""

    times: np.ndarray
    margin: np.ndarray
    tolerance: float
    initial_energy_sq: float

    @property
    def min_margin(self):
        return float(self.margin.min()) if self.margin.size else 0.0

    @property
    def worst_time(self):
        return float(self.times[int(np.argmin(self.margin))]) if self.margin.size else 0.0

    @property
    def violations(self):
        return int(np.sum(self.margin < -self.tolerance))

    @property
    def passed(self):
        return self.violations == 0

    def as_dict(self):
        return {
            "initial_energy_sq": self.initial_energy_sq,
            "min_margin": self.min_margin,
            "worst_time": self.worst_time,
            "tolerance": self.tolerance,
            "violations": self.violations,
            "pass": self.passed,
        }


def energy_report(traj, params, tol=None):
    """
    Check E(f)^2(t) + (1/(eps^2 nu*)) int_0^t D^2 <= E(f0)^2

    Args:
        traj: TrajectoryRecord (or anything with times, energy_sq, dissipation_sq)
        params: KineticParams
        tol: violation threshold; default TOL_ENERGY_RELATIVE * E(f0)^2

    Returns:
        EnergyReport
    """
    times = np.asarray(traj.times, dtype=float)
    energy_sq = np.asarray(traj.energy_sq, dtype=float)
    dissipation_sq = np.asarray(traj.dissipation_sq, dtype=float)
    if times.size == 0:
        return EnergyReport(times, np.zeros(0), 0.0 if tol is None else tol, 0.0)

    cumulative = cumulative_trapezoid(dissipation_sq, times, initial=0.0)
    margin = energy_sq[0] - energy_sq - params.relaxation_rate * cumulative
    tolerance = TOL_ENERGY_RELATIVE * energy_sq[0] if tol is None else tol
    report = EnergyReport(times=times, margin=margin, tolerance=tolerance, initial_energy_sq=float(energy_sq[0]))
    if report.passed:
        logger.info(f"✓ Energy inequality holds: min margin {report.min_margin:.3e}")
    else:
        logger.warning(f"Energy inequality margin {report.min_margin:.3e} at t={report.worst_time:.4g} "
                       f"below -{tolerance:.3e} ({report.violations} samples)")
    return report
