"""
Cutoff Legendre basis of the velocity box Omega = [-1/2, 1/2]^3

The basis is built from the analytic Fourier coefficients of the sawtooth v
and of v^2, cut to |m| < N_v:

    e0      = 1
    e1_i    = c1 * Lambda(v_i)
    e2_i    = c2 * Lambda(v_i^2) - c0
    e2      = (e2_1 + e2_2 + e2_3) / sqrt(3)

Every quantity the constants need is a separable 1-D Plancherel sum, so the
constants are cheap at any N_v; the 3-D fields are assembled lazily.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from config.settings import TOL_GRAM
from .errors import InvariantViolation
from .spectral_core import TWO_PI, Band, SpectralField, v_inner

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)

# Band -> infinity limits of the normalization constants
LIMIT_C0 = math.sqrt(5.0) / 2.0
LIMIT_C1 = 2.0 * SQRT3
LIMIT_C2 = 6.0 * math.sqrt(5.0)

# ||v||^2 and ||v^2||^2 over [-1/2, 1/2]
POWER_NORM_SQ = {1: 1.0 / 12.0, 2: 1.0 / 80.0}

# First-order gap slopes d|c - c_lim|/d tau in the sawtooth tail tau; c0, c2 only see the O(N^-3) v^2 tail
TAIL_SLOPES = {"c0": 0.0, "c1": 12.0 * SQRT3, "c2": 0.0}


def sawtooth_coeff(m):
    """Fourier coefficient of v on [-1/2, 1/2]: (-1)^m i / (2 pi m), zero at m = 0"""
    m = int(m)
    if m == 0:
        return 0j
    return (-1) ** m * 1j / (TWO_PI * m)


def vsq_coeff(m):
    """Fourier coefficient of v^2 on [-1/2, 1/2]: 1/12 at m = 0, (-1)^m / (2 pi^2 m^2) otherwise"""
    m = int(m)
    if m == 0:
        return complex(1.0 / 12.0)
    return complex((-1) ** m / (2.0 * math.pi ** 2 * m * m))


def _signs(ms):
    return np.where(ms % 2 == 0, 1.0, -1.0)


def sawtooth_coeffs(ms):
    """Vectorized sawtooth_coeff over an integer array"""
    ms = np.asarray(ms, dtype=np.int64)
    safe = np.where(ms == 0, 1, ms)
    return np.where(ms == 0, 0.0, _signs(ms) / (TWO_PI * safe)) * 1j


def vsq_coeffs(ms):
    """Vectorized vsq_coeff over an integer array"""
    ms = np.asarray(ms, dtype=np.int64)
    safe = np.where(ms == 0, 1, ms).astype(float)
    return np.where(ms == 0, 1.0 / 12.0, _signs(ms) / (2.0 * math.pi ** 2 * safe ** 2)).astype(complex)


def inner_1d(a, b):
    """<a b> over [-1/2, 1/2] for centered 1-D coefficient sequences of real functions"""
    return float(np.sum(a * b[::-1]).real)


def truncation_error(n_v, power):
    """
    L2 distance between Lambda(v^power) and v^power on [-1/2, 1/2]

    Computed as the Plancherel tail ||v^s||^2 - sum_{|m|<n_v} |coeff(m)|^2.
    """
    if power not in POWER_NORM_SQ:
        raise ValueError(f"power must be 1 or 2, got {power}")
    ms = np.arange(-(n_v - 1), n_v)
    coeffs = sawtooth_coeffs(ms) if power == 1 else vsq_coeffs(ms)
    tail = POWER_NORM_SQ[power] - float(np.sum(np.abs(coeffs) ** 2))
    return math.sqrt(max(tail, 0.0))


def _axis_field(sequence, axis, v_halfwidth):
    delta = np.zeros_like(sequence)
    delta[v_halfwidth - 1] = 1.0
    factors = [delta, delta, delta]
    factors[axis] = sequence
    return SpectralField.from_v_coeffs(v_halfwidth, np.einsum("i,j,k->ijk", *factors))


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Cutoff Legendre basis on a band; immutable, fields built on first use"""

    band: Band
    s: np.ndarray  # 1-D coefficients of Lambda(v)
    q: np.ndarray  # 1-D coefficients of Lambda(v^2)
    c0: float
    c1: float
    c2: float

    @property
    def vband(self):
        return self.band.v_only()

    @property
    def q0(self):
        return float(self.q[self.band.kv].real)

    @property
    def sawtooth_tail(self):
        """tau = ||v||^2 - ||Lambda v||^2, about 1/(2 pi^2 N_v); sets the O(1/N_v) rate of every constant"""
        return POWER_NORM_SQ[1] - inner_1d(self.s, self.s)

    @cached_property
    def v_eps(self):
        return tuple(_axis_field(self.s, axis, self.band.v_halfwidth) for axis in range(3))

    @cached_property
    def vsq_eps(self):
        return tuple(_axis_field(self.q, axis, self.band.v_halfwidth) for axis in range(3))

    @cached_property
    def v_eps_sq(self):
        """Lambda(|v|^2) = sum_i Lambda(v_i^2)"""
        return self.vsq_eps[0] + self.vsq_eps[1] + self.vsq_eps[2]

    @cached_property
    def e0(self):
        return SpectralField.constant(self.vband, 1.0)

    @cached_property
    def e1(self):
        return tuple(self.c1 * v for v in self.v_eps)

    @cached_property
    def e2_components(self):
        return tuple(self.c2 * vsq - self.c0 for vsq in self.vsq_eps)

    @cached_property
    def e2(self):
        return (self.e2_components[0] + self.e2_components[1] + self.e2_components[2]) / SQRT3

    @property
    def elements(self):
        return (self.e0,) + self.e1 + (self.e2,)

    def gram(self):
        """5x5 Gram matrix of (e0, e1_1, e1_2, e1_3, e2) from the assembled 3-D fields"""
        elements = self.elements
        return np.array([[v_inner(a, b) for b in elements] for a in elements])

    def separable_gram(self):
        """The same Gram matrix from 1-D sums only"""
        s0 = float(self.s[self.band.kv].real)
        s_sq = inner_1d(self.s, self.s)
        q_sq = inner_1d(self.q, self.q)
        s_q = inner_1d(self.s, self.q)
        mean_e2i = self.c2 * self.q0 - self.c0
        diag_e2i = self.c2 ** 2 * q_sq - 2.0 * self.c2 * self.c0 * self.q0 + self.c0 ** 2

        gram = np.eye(5)
        gram[0, 1:4] = gram[1:4, 0] = self.c1 * s0
        gram[0, 4] = gram[4, 0] = SQRT3 * mean_e2i
        block = np.full((3, 3), self.c1 ** 2 * s0 ** 2)
        np.fill_diagonal(block, self.c1 ** 2 * s_sq)
        gram[1:4, 1:4] = block
        cross = self.c1 / SQRT3 * (self.c2 * s_q + 2.0 * self.c2 * s0 * self.q0 - 3.0 * self.c0 * s0)
        gram[1:4, 4] = gram[4, 1:4] = cross
        gram[4, 4] = (3.0 * diag_e2i + 6.0 * mean_e2i ** 2) / 3.0
        return gram

    def limit_gaps(self):
        return {
            "c0": abs(self.c0 - LIMIT_C0),
            "c1": abs(self.c1 - LIMIT_C1),
            "c2": abs(self.c2 - LIMIT_C2),
        }

    def predicted_gaps(self):
        tau = self.sawtooth_tail
        return {name: slope * tau for name, slope in TAIL_SLOPES.items()}


def build_basis(band):
    """
    Construct the cutoff Legendre basis on a band

    Args:
        band: Band with N_v >= 2

    Returns:
        BasisSet: with the Gram identity verified

    Raises:
        ValueError: N_v < 2
        InvariantViolation: singular normalization or Gram residual above TOL_GRAM
    """
    if band.v_halfwidth < 2:
        raise ValueError(f"N_v must be at least 2 to separate v from v^2 (got {band.v_halfwidth})")

    ms = np.arange(-band.kv, band.kv + 1)
    s = sawtooth_coeffs(ms)
    q = vsq_coeffs(ms)

    c1 = 1.0 / math.sqrt(inner_1d(s, s))
    q0 = float(q[band.kv].real)
    det = inner_1d(q, q) - q0 ** 2
    if det <= 0.0:
        raise InvariantViolation("basis_normalization", f"normalization system singular (det={det:.3e})", det)
    c2 = 1.0 / math.sqrt(det)
    c0 = c2 * q0

    basis = BasisSet(band=band, s=s, q=q, c0=c0, c1=c1, c2=c2)
    residual = float(np.max(np.abs(basis.separable_gram() - np.eye(5))))
    if residual > TOL_GRAM:
        raise InvariantViolation("gram_identity", f"Gram residual {residual:.3e} exceeds {TOL_GRAM}", residual)

    logger.debug(f"Basis on {band}: c0={c0:.6f} c1={c1:.6f} c2={c2:.6f} gram residual={residual:.2e}")
    return basis
