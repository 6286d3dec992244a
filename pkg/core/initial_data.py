"""
Initial kinetic data lifted from macroscopic moments

    f0 = Lambda(rho0) + Lambda(2 sqrt3 v . u0) + Lambda(6 sqrt5 (|v|^2 - 1/4) theta0)

Presets build (rho0, u0, theta0) on the x-band; explicit modes may add
x-modes to any moment or (n, m) modes to f directly.
"""
import logging
import math

import numpy as np

from .errors import ModeOutOfBandError
from .legendre_basis import LIMIT_C1, LIMIT_C2
from .projections import helmholtz_project
from .spectral_core import SpectralField, XField, outer, x_norm

logger = logging.getLogger(__name__)

# well-prepared data: theta0 = BOUSSINESQ_SLOPE * rho0
BOUSSINESQ_SLOPE = -math.sqrt(5.0) / 2.0

_MACRO_COMPONENTS = ("rho", "u1", "u2", "u3", "theta")


def lift(rho0, u0, theta0, basis):
    """Band-limited f0 from lift-convention moments (rho0, u0, theta0)"""
    v_sq_shifted = basis.v_eps_sq - 0.25
    field = outer(rho0, basis.e0) + outer(theta0, LIMIT_C2 * v_sq_shifted)
    for component, v_eps in zip(u0, basis.v_eps):
        field = field + outer(component, LIMIT_C1 * v_eps)
    return field


def well_prepare(rho0, u0, theta0):
    """
    Remove acoustic content: u0 solenoidal with zero mean, theta0 on the Boussinesq line

    Returns:
        tuple: (rho0, u0, theta0)
    """
    solenoidal, _ = helmholtz_project(u0)
    solenoidal = tuple(c - c.mean().real for c in solenoidal)
    return rho0, solenoidal, BOUSSINESQ_SLOPE * rho0


def _preset_moments(initial, x_radius):
    zero = XField.zeros(x_radius)
    amplitude = initial.amplitude
    rho0, u0, theta0 = zero, [zero, zero, zero], zero

    if initial.preset == "single_mode_shear":
        # u1 = A sin(2 pi x2)
        u0[0] = XField.from_modes(x_radius, {(0, 1, 0): -0.5j * amplitude})
    elif initial.preset == "thermal_bump":
        bump = XField.from_modes(x_radius, {(1, 0, 0): 0.5 * amplitude})
        if initial.well_prepared:
            rho0 = bump
        else:
            theta0 = bump
    elif initial.preset == "homogeneous":
        rho0 = XField.constant(x_radius, amplitude)
    elif initial.preset == "random_seeded":
        rng = np.random.default_rng(initial.seed)
        rho0 = XField.random(x_radius, rng, amplitude)
        u0 = [XField.random(x_radius, rng, amplitude) for _ in range(3)]
        theta0 = XField.random(x_radius, rng, amplitude)
    return rho0, u0, theta0


def _explicit_modes(initial, band):
    """Apply explicit modes; every out-of-band mode is collected before raising"""
    macro_modes = {name: {} for name in _MACRO_COMPONENTS}
    kinetic_modes = {}
    for mode in initial.modes:
        if mode.component == "f":
            key = (tuple(mode.n), tuple(mode.m))
            kinetic_modes[key] = kinetic_modes.get(key, 0) + mode.complex_amplitude
        else:
            key = tuple(mode.n)
            bucket = macro_modes[mode.component]
            bucket[key] = bucket.get(key, 0) + mode.complex_amplitude

    outside = []
    fields = {}
    for name, modes in macro_modes.items():
        try:
            fields[name] = XField.from_modes(band.x_radius, modes)
        except ModeOutOfBandError as exc:
            outside.extend((name, n) for n in exc.modes)
    try:
        kinetic = SpectralField.from_modes(band, kinetic_modes)
    except ModeOutOfBandError as exc:
        outside.extend(("f",) + tuple(mode) for mode in exc.modes)
        kinetic = None
    if outside:
        raise ModeOutOfBandError(outside, band)
    return fields, kinetic


def initial_moments(initial, band):
    """
    Lift-convention moments and any direct kinetic modes of the initial section

    Returns:
        tuple: (rho0, (u1, u2, u3), theta0, kinetic SpectralField or None)
    """
    rho0, u0, theta0 = _preset_moments(initial, band.x_radius)
    kinetic = None
    if initial.modes:
        fields, kinetic = _explicit_modes(initial, band)
        rho0 = rho0 + fields["rho"]
        u0 = [u0[i] + fields[f"u{i + 1}"] for i in range(3)]
        theta0 = theta0 + fields["theta"]
    if initial.well_prepared:
        rho0, u0, theta0 = well_prepare(rho0, tuple(u0), theta0)
    return rho0, tuple(u0), theta0, kinetic


def load_initial(config, basis):
    """
    Initial field of a run

    Args:
        config: RunConfig (its `initial` section is used)
        basis: BasisSet on the run band

    Returns:
        SpectralField: real, band-limited f0

    Raises:
        ModeOutOfBandError: explicit modes the band does not keep, all listed
    """
    band = basis.band
    rho0, u0, theta0, kinetic = initial_moments(config.initial, band)
    f0 = lift(rho0, u0, theta0, basis)
    if kinetic is not None:
        f0 = f0 + kinetic
    residual = f0.reality_residual()
    if residual > 1e-12:
        logger.warning(f"Initial field has reality residual {residual:.2e}; symmetrizing")
        f0 = f0.symmetrized()
    logger.info(f"Initial data '{config.initial.preset}' on {band}: E(f0)={x_norm(f0)[1]:.6e}")
    return f0


def initial_macro(config, basis):
    """MacroState of the initial field, for reference runs of the limit solver"""
    from .projections import macro_project

    return macro_project(load_initial(config, basis), basis)[0]

