"""
Macroscopic / microscopic projections and the Helmholtz split on T^3

P(f) = rho*e0 + u.e1 + theta*e2 is the orthogonal projection of f(x, .)
onto the cutoff Legendre span; L = I - P. The Helmholtz projection keeps
the solenoidal part of a vector field mode by mode; the mean (k = 0) is
solenoidal and stays in the P part.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BandMismatchError
from .spectral_core import XField, outer, v_moment, x_norm, x_wavenumbers

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class MacroState:
    """
    Moments (rho, u, theta) of a kinetic field

    theta is the coefficient against the unit-norm e2. Two other scalings of
    the same temperature appear in the closure relations:

        theta_closure = sqrt(3) * theta   pairing with sum_i e2_i
        theta_lift    = theta / sqrt(3)   coefficient of sum_i e2_i in P(f)
    """

    rho: XField
    u: tuple
    theta: XField

    def __post_init__(self):
        if len(self.u) != 3:
            raise ValueError(f"velocity needs 3 components, got {len(self.u)}")
        radii = {self.rho.x_radius, self.theta.x_radius} | {c.x_radius for c in self.u}
        if len(radii) != 1:
            raise BandMismatchError(f"moments on different x-bands: {sorted(radii)}")

    @classmethod
    def zeros(cls, x_radius):
        zero = XField.zeros(x_radius)
        return cls(zero, (zero, zero, zero), zero)

    @property
    def x_radius(self):
        return self.rho.x_radius

    @property
    def theta_closure(self):
        return SQRT3 * self.theta

    @property
    def theta_lift(self):
        return self.theta / SQRT3

    def components(self):
        return (self.rho,) + tuple(self.u) + (self.theta,)

    def l2_sq(self):
        return sum(x_norm(c)[0] ** 2 for c in self.components())


def check_band(f, basis):
    """Raise BandMismatchError unless f and the basis share N_v"""
    if f.band.v_halfwidth != basis.band.v_halfwidth:
        raise BandMismatchError(
            f"field v-band N_v={f.band.v_halfwidth} does not match basis N_v={basis.band.v_halfwidth}"
        )


def reconstruct(macro, basis):
    """P-part rho*e0 + u.e1 + theta*e2 as a kinetic field"""
    field = outer(macro.rho, basis.e0) + outer(macro.theta, basis.e2)
    for component, e1 in zip(macro.u, basis.e1):
        field = field + outer(component, e1)
    return field


def macro_project(f, basis):
    """
    Macroscopic projection of a kinetic field

    Returns:
        tuple: (MacroState, P(f))

    Raises:
        BandMismatchError: f and basis disagree on N_v
    """
    check_band(f, basis)
    macro = MacroState(
        rho=v_moment(f, basis.e0),
        u=tuple(v_moment(f, e1) for e1 in basis.e1),
        theta=v_moment(f, basis.e2),
    )
    return macro, reconstruct(macro, basis)


def micro_project(f, basis):
    """L(f) = f - P(f)"""
    _, macro_part = macro_project(f, basis)
    return f - macro_part


def helmholtz_project(u):
    """
    Split a vector field into solenoidal and gradient parts

    Returns:
        tuple: (p_part, q_part), each a 3-tuple of XFields with p + q = u
    """
    radius = u[0].x_radius
    k = x_wavenumbers(radius)
    k_sq = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    safe = np.where(k_sq == 0, 1, k_sq)
    dot = sum(component.coeffs * ki for component, ki in zip(u, k)) / safe
    p_part = tuple(XField(radius, component.coeffs - dot * ki) for component, ki in zip(u, k))
    q_part = tuple(component - p for component, p in zip(u, p_part))
    return p_part, q_part
