"""
Closure constants and kernel-orthogonal tensors

A = v_eps (x) v - (a v_eps^2 + b) I and B = v (v_eps^2 - c) are chosen
orthogonal to the kernel span {1, v_eps, v_eps^2}. Every bracket the
constants need reduces to 1-D Plancherel sums over the analytic sawtooth
and v^2 coefficients.
"""
import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from config.settings import KERNEL_RESIDUAL_LIMIT
from .errors import InvariantViolation
from .legendre_basis import inner_1d, sawtooth_coeffs
from .spectral_core import multiply_by_sawtooth, v_inner

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)
SQRT15 = math.sqrt(15.0)


@dataclass(frozen=True)
class ClosureConstants:
    """Finite-band closure constants with their band -> infinity limits"""

    a_eps: float
    b_eps: float
    det_d: float
    c_eps: float
    c0: float
    c1: float
    c2: float
    mu: tuple = ()
    sawtooth_tail: float = 0.0

    LIMITS: ClassVar[dict] = {
        "a_eps": 1.0 / 3.0,
        "b_eps": 0.0,
        "det_d": 1.0 / 60.0,
        "c_eps": 19.0 / 60.0,
        "mu1": SQRT15 / 45.0,
        "mu2": SQRT3 / 6.0,
        "mu3": SQRT15 / 15.0,
        "mu4": 19.0 / 180.0,
        "mu5": 2.0 * SQRT5 / 5.0,
        "mu6": 15.0 / 19.0,
        "mu7": 19.0 * SQRT3 / 90.0,
    }

    # d|gap|/d tau to first order; det D only sees the O(N^-3) v^2 tail
    TAIL_SLOPES: ClassVar[dict] = {
        "a_eps": 10.0,
        "b_eps": 1.5,
        "det_d": 0.0,
        "c_eps": 1.2,
        "mu1": 8.0 * SQRT15 / 15.0,
        "mu2": SQRT3,
        "mu5": 7.2 * SQRT5,
    }

    def mu_value(self, index):
        """mu_index, 1-based as the constants are conventionally numbered"""
        return self.mu[index - 1]

    def as_dict(self):
        values = {
            "a_eps": self.a_eps,
            "b_eps": self.b_eps,
            "det_d": self.det_d,
            "c_eps": self.c_eps,
        }
        values.update({f"mu{k + 1}": value for k, value in enumerate(self.mu)})
        return values

    def limit_gaps(self):
        return {name: abs(value - self.LIMITS[name]) for name, value in self.as_dict().items()}

    def predicted_gaps(self):
        """First-order gaps slope * tau for the constants with a known tail slope"""
        return {name: slope * self.sawtooth_tail for name, slope in self.TAIL_SLOPES.items()}


def n_v_for_gap(slope, target):
    """Smallest N_v whose first-order gap slope / (2 pi^2 N_v) falls below target"""
    if slope <= 0.0:
        return 2
    return max(2, math.ceil(slope / (2.0 * math.pi ** 2 * target)))


@dataclass(frozen=True, eq=False)
class ClosureTensors:
    """Band-limited A (3x3) and B (3) as v-only fields, plus kernel residuals"""

    A: tuple
    B: tuple
    residuals: dict


def _sawtooth_square(basis):
    """1-D coefficients of Lambda(v^eps * v) on |m| <= kv"""
    kv = basis.band.kv
    ms = np.arange(-kv, kv + 1)
    toeplitz = sawtooth_coeffs(ms[:, None] - ms[None, :])
    return toeplitz @ basis.s


def moment_brackets(basis):
    """
    The scalar brackets behind a, b and c

    Returns:
        dict: v_veps = <v_i v_i^eps> (-> 1/12), veps_v_vsq = <v_i^eps v_i Lambda(v_i^2)>
        (-> 1/80), v_veps_vsq = <v_i v_i^eps v_eps^2> (-> 19/720)
    """
    w = _sawtooth_square(basis)
    w0 = float(w[basis.band.kv].real)
    wq = inner_1d(w, basis.q)
    return {
        "v_veps": w0,
        "veps_v_vsq": wq,
        "v_veps_vsq": wq + 2.0 * w0 * basis.q0,
    }


def compute_ab(basis):
    """
    Solve the 2x2 system fixing a_eps and b_eps

    <A_ii, 1> = 0 and <A_ii, v_eps^2> = 0 give D (a, b) = r with
    D = [[<(v_eps^2)^2>, <v_eps^2>], [<v_eps^2>, 1]].

    Returns:
        tuple: (a_eps, b_eps, det_D)
    """
    brackets = moment_brackets(basis)
    q0 = basis.q0
    q_sq = inner_1d(basis.q, basis.q)
    matrix = np.array([
        [3.0 * q_sq + 6.0 * q0 ** 2, 3.0 * q0],
        [3.0 * q0, 1.0],
    ])
    rhs = np.array([brackets["v_veps_vsq"], brackets["v_veps"]])
    det = float(np.linalg.det(matrix))
    if det <= 0.0:
        raise InvariantViolation("closure_invertibility", f"D is singular (det={det:.3e})", det)
    a_eps, b_eps = np.linalg.solve(matrix, rhs)
    return float(a_eps), float(b_eps), det


def compute_c(basis):
    """c_eps from c <v_i v_i^eps> = <v_i v_i^eps v_eps^2>"""
    brackets = moment_brackets(basis)
    if brackets["v_veps"] <= 0.0:
        raise InvariantViolation("closure_denominator", "<v_i v_i^eps> vanished", brackets["v_veps"])
    return brackets["v_veps_vsq"] / brackets["v_veps"]


def compute_mu(basis, consts):
    """
    The seven mu constants

    mu1 = a c1/c2, mu2 = c1 (3 a c0/c2 + b), mu5 = c2 c - 3 c0,
    mu3 = mu5/c1, mu4 = mu2/c1 + mu1 mu3, mu6 = 1/(1 + 2 sqrt5 mu5/15),
    mu7 = mu2 + mu1 mu5.
    """
    c0, c1, c2 = basis.c0, basis.c1, basis.c2
    mu1 = consts.a_eps * c1 / c2
    mu2 = c1 * (3.0 * consts.a_eps * c0 / c2 + consts.b_eps)
    mu5 = c2 * consts.c_eps - 3.0 * c0
    mu3 = mu5 / c1
    mu4 = mu2 / c1 + mu1 * mu3
    mu6 = 1.0 / (1.0 + 2.0 * SQRT5 * mu5 / 15.0)
    mu7 = mu2 + mu1 * mu5
    return (mu1, mu2, mu3, mu4, mu5, mu6, mu7)


def build_closure_constants(basis):
    """All closure constants of a basis"""
    a_eps, b_eps, det_d = compute_ab(basis)
    consts = ClosureConstants(
        a_eps=a_eps,
        b_eps=b_eps,
        det_d=det_d,
        c_eps=compute_c(basis),
        c0=basis.c0,
        c1=basis.c1,
        c2=basis.c2,
        sawtooth_tail=basis.sawtooth_tail,
    )
    consts = dataclasses.replace(consts, mu=compute_mu(basis, consts))
    logger.debug(f"Closure constants on {basis.band}: {consts.as_dict()}")
    return consts


def build_tensors(basis, consts):
    """
    Assemble Lambda(A) and Lambda(B) and check kernel orthogonality

    Raises:
        InvariantViolation: a kernel residual exceeds KERNEL_RESIDUAL_LIMIT
    """
    vband = basis.vband
    rows = []
    for i in range(3):
        row = []
        for j in range(3):
            entry = multiply_by_sawtooth(basis.v_eps[i], j, vband)
            if i == j:
                entry = entry - consts.a_eps * basis.v_eps_sq - consts.b_eps
            row.append(entry)
        rows.append(tuple(row))
    shifted = basis.v_eps_sq - consts.c_eps
    b_fields = tuple(multiply_by_sawtooth(shifted, i, vband) for i in range(3))

    kernel = (basis.e0,) + basis.v_eps + (basis.v_eps_sq,)
    residuals = {
        "A": max(abs(v_inner(entry, g)) for row in rows for entry in row for g in kernel),
        "B": max(abs(v_inner(entry, g)) for entry in b_fields for g in kernel),
    }
    worst = max(residuals.values())
    if worst > KERNEL_RESIDUAL_LIMIT:
        raise InvariantViolation(
            "kernel_orthogonality",
            f"closure tensors leave the kernel complement (residual {worst:.3e})",
            worst,
        )
    logger.debug(f"Closure tensors on {basis.band}: residuals {residuals}")
    return ClosureTensors(A=tuple(rows), B=b_fields, residuals=residuals)


def nonvanishing_pattern(i, j, k, l):
    """Index patterns for which <Lambda(A)_ij A_kl> can be nonzero"""
    return (
        (i == j and k == l)
        or (i == k and j == l)
        or (i == l and j == k)
    )


def quadruple_brackets(tensors):
    """<Lambda(A)_ij A_kl> for all 81 index quadruples"""
    brackets = np.zeros((3, 3, 3, 3))
    for i, j, k, l in itertools.product(range(3), repeat=4):
        brackets[i, j, k, l] = v_inner(tensors.A[i][j], tensors.A[k][l])
    return brackets
