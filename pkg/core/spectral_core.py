"""
Band-limited Fourier fields on the torus T^3_x times the velocity box Omega_v

Coefficients are stored dense and centered: index k of an axis with
half-extent K sits at position k + K. The x-modes of a SpectralField are
cut by a sphere (|n| < N_x, strict) and masked entries are held as zeros;
the v-modes are cut by a cube (|m_j| < N_v, strict, each j).

All products are alias-free: transforms are padded so that every mode of
the full product band lands on its own grid frequency before truncation.
Axis arguments are 0-based (0, 1, 2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from .errors import BandMismatchError, ModeOutOfBandError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Band:
    """Spherical x-cutoff radius N_x and cubic v-cutoff halfwidth N_v"""

    x_radius: int
    v_halfwidth: int

    def __post_init__(self):
        for name in ("x_radius", "v_halfwidth"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @classmethod
    def from_epsilon(cls, epsilon, gamma):
        """
        Band tied to the Knudsen number: N = ceil(epsilon^-gamma) for both variables

        With the strict cutoff |m_j| < N this keeps exactly the v-modes below
        epsilon^-gamma. In x the sphere radius is rounded up to the integer N.
        N never drops below 2, the smallest band that separates v from v^2.
        """
        if epsilon <= 0 or gamma <= 0:
            raise ValueError(f"epsilon and gamma must be positive (got {epsilon}, {gamma})")
        n = max(2, math.ceil(epsilon ** (-gamma) - 1e-12))
        return cls(n, n)

    @property
    def kx(self):
        return self.x_radius - 1

    @property
    def kv(self):
        return self.v_halfwidth - 1

    @property
    def x_shape(self):
        return (2 * self.kx + 1,) * 3

    @property
    def v_shape(self):
        return (2 * self.kv + 1,) * 3

    @property
    def shape(self):
        return self.x_shape + self.v_shape

    @property
    def halves(self):
        return (self.kx,) * 3 + (self.kv,) * 3

    @cached_property
    def x_mask(self):
        n1, n2, n3 = np.meshgrid(*(np.arange(-self.kx, self.kx + 1),) * 3, indexing="ij")
        return n1 ** 2 + n2 ** 2 + n3 ** 2 < self.x_radius ** 2

    def v_only(self):
        """Band of a function of v alone (only x-mode 0 kept)"""
        return Band(1, self.v_halfwidth)

    def __str__(self):
        return f"Band(N_x={self.x_radius}, N_v={self.v_halfwidth})"


def _x_mask(x_radius):
    return Band(x_radius, 1).x_mask


class _Coefficients:
    """Linear algebra shared by SpectralField and XField"""

    def _layout(self):
        raise NotImplementedError

    def _new(self, coeffs):
        raise NotImplementedError

    def _check(self, other):
        if self._layout() != other._layout():
            raise BandMismatchError(f"cannot combine {self._layout()} with {other._layout()}")

    def _constant_offset(self, value):
        coeffs = self.coeffs.copy()
        coeffs[tuple((n - 1) // 2 for n in coeffs.shape)] += value
        return self._new(coeffs)

    def __add__(self, other):
        if isinstance(other, _Coefficients):
            self._check(other)
            return self._new(self.coeffs + other.coeffs)
        if np.isscalar(other):
            return self._constant_offset(other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, _Coefficients):
            self._check(other)
            return self._new(self.coeffs - other.coeffs)
        if np.isscalar(other):
            return self._constant_offset(-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._new(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._new(self.coeffs / scalar)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.coeffs)))

    def reality_residual(self):
        """max |c(-k) - conj c(k)|, zero for a real-valued function"""
        return float(np.max(np.abs(np.flip(self.coeffs) - np.conj(self.coeffs)), initial=0.0))

    def symmetrized(self):
        """Closest real-valued field (conjugate-symmetric part)"""
        return self._new(0.5 * (self.coeffs + np.conj(np.flip(self.coeffs))))

    def mean(self):
        """Coefficient of the constant mode"""
        return complex(self.coeffs[tuple((n - 1) // 2 for n in self.coeffs.shape)])


@dataclass(frozen=True, eq=False)
class SpectralField(_Coefficients):
    """Coefficients c(n, m) of a real function f(x, v) on a band"""

    band: Band
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.band.shape:
            raise BandMismatchError(
                f"coefficient shape {coeffs.shape} does not match {self.band} {self.band.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def _layout(self):
        return self.band

    def _new(self, coeffs):
        return SpectralField(self.band, coeffs)

    @classmethod
    def zeros(cls, band):
        return cls(band, np.zeros(band.shape, dtype=complex))

    @classmethod
    def constant(cls, band, value):
        return cls.zeros(band)._constant_offset(value)

    @classmethod
    def from_v_coeffs(cls, v_halfwidth, v_coeffs):
        """Function of v alone from a dense centered 3-D coefficient array"""
        v_coeffs = np.asarray(v_coeffs, dtype=complex)
        return cls(Band(1, v_halfwidth), v_coeffs.reshape((1, 1, 1) + v_coeffs.shape))

    @classmethod
    def from_modes(cls, band, modes):
        """
        Real field from {(n, m): amplitude}

        Each entry contributes a*e^{2pi i(n.x + m.v)} plus its complex
        conjugate; the constant mode (0, 0) contributes Re(a).

        Raises:
            ModeOutOfBandError: listing every mode the band does not keep
        """
        coeffs = np.zeros(band.shape, dtype=complex)
        outside = []
        for (n, m), amplitude in modes.items():
            n, m = tuple(int(k) for k in n), tuple(int(k) for k in m)
            if sum(k * k for k in n) >= band.x_radius ** 2 or any(abs(k) >= band.v_halfwidth for k in m):
                outside.append((n, m))
                continue
            index = tuple(k + band.kx for k in n) + tuple(k + band.kv for k in m)
            mirror = tuple(band.kx - k for k in n) + tuple(band.kv - k for k in m)
            if index == mirror:
                coeffs[index] += complex(amplitude).real
            else:
                coeffs[index] += amplitude
                coeffs[mirror] += np.conj(amplitude)
        if outside:
            raise ModeOutOfBandError(outside, band)
        return cls(band, coeffs)

    @classmethod
    def random(cls, band, rng, scale=1.0):
        """Random real band-limited field with Gaussian coefficients"""
        raw = rng.standard_normal(band.shape) + 1j * rng.standard_normal(band.shape)
        raw *= band.x_mask[..., None, None, None]
        return cls(band, scale * raw).symmetrized()

    @property
    def v_coeffs(self):
        """3-D v-coefficients at x-mode 0"""
        k = self.band.kx
        return self.coeffs[k, k, k]


@dataclass(frozen=True, eq=False)
class XField(_Coefficients):
    """Coefficients c(n) of a real function of x alone (density, velocity component, ...)"""

    x_radius: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        expected = Band(self.x_radius, 1).x_shape
        if coeffs.shape != expected:
            raise BandMismatchError(
                f"coefficient shape {coeffs.shape} does not match x-radius {self.x_radius} {expected}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def _layout(self):
        return ("x", self.x_radius)

    def _new(self, coeffs):
        return XField(self.x_radius, coeffs)

    @property
    def kx(self):
        return self.x_radius - 1

    @classmethod
    def zeros(cls, x_radius):
        return cls(x_radius, np.zeros(Band(x_radius, 1).x_shape, dtype=complex))

    @classmethod
    def constant(cls, x_radius, value):
        return cls.zeros(x_radius)._constant_offset(value)

    @classmethod
    def from_modes(cls, x_radius, modes):
        """Real field from {n: amplitude}, conjugate partners added as in SpectralField.from_modes"""
        band = Band(x_radius, 1)
        lifted = {(n, (0, 0, 0)): a for n, a in modes.items()}
        try:
            field = SpectralField.from_modes(band, lifted)
        except ModeOutOfBandError as exc:
            raise ModeOutOfBandError([n for n, _ in exc.modes], f"x-radius {x_radius}") from None
        return cls(x_radius, field.coeffs[..., 0, 0, 0])

    @classmethod
    def random(cls, x_radius, rng, scale=1.0):
        shape = Band(x_radius, 1).x_shape
        raw = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * _x_mask(x_radius)
        return cls(x_radius, scale * raw).symmetrized()


# ---------------------------------------------------------------------------
# dense-array plumbing
# ---------------------------------------------------------------------------

def _halves_of(arr):
    return tuple((n - 1) // 2 for n in arr.shape)


def _resize(arr, halves):
    """Crop or zero-pad each centered axis to the requested half-extent"""
    src = _halves_of(arr)
    crop = tuple(slice(max(s - d, 0), s + min(s, d) + 1) for s, d in zip(src, halves))
    out = arr[crop]
    pad = [(max(d - s, 0),) * 2 for s, d in zip(src, halves)]
    if any(p[0] for p in pad):
        out = np.pad(out, pad)
    return out


def _wrapped_index(half, size):
    return np.arange(-half, half + 1) % size


def _embed(arr, sizes):
    full = np.zeros(sizes, dtype=complex)
    full[np.ix_(*(_wrapped_index(h, m) for h, m in zip(_halves_of(arr), sizes)))] = arr
    return full


def _extract(full, halves):
    return full[np.ix_(*(_wrapped_index(h, m) for h, m in zip(halves, full.shape)))]


def _pointwise_product(arrays, out_halves):
    """Fourier coefficients of the pointwise product of all arrays, exact on out_halves"""
    ndim = len(out_halves)
    halves = [_halves_of(a) for a in arrays]
    sizes = tuple(
        sp_fft.next_fast_len(sum(h[axis] for h in halves) + out_halves[axis] + 1)
        for axis in range(ndim)
    )
    values = None
    for arr in arrays:
        grid = sp_fft.ifftn(_embed(arr, sizes), norm="forward")
        values = grid if values is None else values * grid
    return _extract(sp_fft.fftn(values, norm="forward"), out_halves)


def _out_halves(out):
    if isinstance(out, Band):
        return out.halves
    return (int(out) - 1,) * 3


def _wrap(out, coeffs):
    if isinstance(out, Band):
        return SpectralField(out, coeffs * out.x_mask[..., None, None, None])
    return XField(int(out), coeffs * _x_mask(int(out)))


def _check_kinds(fields, out):
    want = SpectralField if isinstance(out, Band) else XField
    for field in fields:
        if not isinstance(field, want):
            raise TypeError(f"expected {want.__name__} operands for output {out!r}, got {type(field).__name__}")


def _wavenumbers(halves, axis):
    shape = [1] * len(halves)
    shape[axis] = 2 * halves[axis] + 1
    return np.arange(-halves[axis], halves[axis] + 1).reshape(shape)


def x_wavenumbers(x_radius):
    """Integer x-wavenumbers (n1, n2, n3) of an XField layout, broadcastable"""
    halves = (int(x_radius) - 1,) * 3
    return tuple(_wavenumbers(halves, axis) for axis in range(3))


def _x_wavenumber_sq(field):
    halves = _halves_of(field.coeffs)
    return sum(_wavenumbers(halves, axis) ** 2 for axis in range(3))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def cutoff(field, band):
    """Restrict (or zero-extend) a field to another band; idempotent"""
    if isinstance(field, XField):
        return _wrap(int(band), _resize(field.coeffs, _out_halves(int(band))))
    return _wrap(band, _resize(field.coeffs, band.halves))


def cutoff_x(field, x_radius):
    """Spherical x-cutoff only; v-modes untouched"""
    band = Band(x_radius, field.band.v_halfwidth)
    return cutoff(field, band)


def cutoff_v(field, v_halfwidth):
    """Cubic v-cutoff only; x-modes untouched"""
    band = Band(field.band.x_radius, v_halfwidth)
    return cutoff(field, band)


def derivative_x(field, axis):
    """d/dx_axis: coefficient (n, m) times 2*pi*i*n_axis"""
    k = _wavenumbers(_halves_of(field.coeffs), axis)
    return field._new(field.coeffs * (1j * TWO_PI * k))


def product(f, g, out):
    """
    Exact truncated Fourier coefficients of the pointwise product f*g

    Args:
        f, g: both SpectralField (out a Band) or both XField (out an x-radius)
        out: band of the result

    Returns:
        Field on `out` holding every product coefficient inside it
    """
    _check_kinds((f, g), out)
    return _wrap(out, _pointwise_product([f.coeffs, g.coeffs], _out_halves(out)))


def triple_product(f, g, h, out):
    """Exact truncated coefficients of f*g*h from a single padded transform"""
    _check_kinds((f, g, h), out)
    return _wrap(out, _pointwise_product([f.coeffs, g.coeffs, h.coeffs], _out_halves(out)))


def multiply_by_sawtooth(f, axis, out):
    """
    Cutoff of v_axis * f, convolving with the analytic sawtooth coefficients

    Only sawtooth modes |m - m'| <= kv_out + kv_f enter, so the result is
    exact on `out`.
    """
    from .legendre_basis import sawtooth_coeffs

    ko, kf = out.kv, f.band.kv
    toeplitz = sawtooth_coeffs(np.arange(-ko, ko + 1)[:, None] - np.arange(-kf, kf + 1)[None, :])
    v_axis = 3 + axis
    shifted = np.moveaxis(np.tensordot(toeplitz, f.coeffs, axes=([1], [v_axis])), 0, v_axis)
    return _wrap(out, _resize(shifted, out.halves))


def x_norm(field):
    """
    Plancherel norms of a field

    Returns:
        tuple: (L2 norm, H^1_x L^2_v norm), the latter is the energy E(f)
    """
    power = np.abs(field.coeffs) ** 2
    weight = 1.0 + (TWO_PI ** 2) * _x_wavenumber_sq(field)
    return math.sqrt(float(power.sum())), math.sqrt(float((weight * power).sum()))


def hminus1_norm(field):
    """H^-1 norm of an XField via the multiplier (1 + 4 pi^2 |k|^2)^-1/2"""
    power = np.abs(field.coeffs) ** 2
    return math.sqrt(float((power / (1.0 + (TWO_PI ** 2) * _x_wavenumber_sq(field))).sum()))


def v_moment(f, weight):
    """
    Velocity moment: integral over Omega of f * weight, as a function of x

    Raises:
        BandMismatchError: weight has nonzero x-modes
    """
    kw = weight.band.kx
    off_center = weight.coeffs.copy()
    off_center[kw, kw, kw] = 0.0
    if np.any(off_center != 0):
        raise BandMismatchError("velocity weight must not depend on x")
    w = _resize(weight.coeffs[kw, kw, kw], (f.band.kv,) * 3)
    moments = np.tensordot(f.coeffs, w[::-1, ::-1, ::-1], axes=([3, 4, 5], [0, 1, 2]))
    return XField(f.band.x_radius, moments)


def v_inner(f, g):
    """<f g> over Omega for two functions of v alone"""
    return float(v_moment(f, g).coeffs.sum().real)


def outer(xfield, vfield):
    """f(x, v) = a(x) * w(v) for an XField a and a v-only field w"""
    band = Band(xfield.x_radius, vfield.band.v_halfwidth)
    coeffs = xfield.coeffs[..., None, None, None] * vfield.v_coeffs[None, None, None, ...]
    return SpectralField(band, coeffs)


def gradient(scalar):
    return tuple(derivative_x(scalar, axis) for axis in range(3))


def divergence(vector):
    return derivative_x(vector[0], 0) + derivative_x(vector[1], 1) + derivative_x(vector[2], 2)


def laplacian(field):
    return field._new(-(TWO_PI ** 2) * _x_wavenumber_sq(field) * field.coeffs)


def vector_l2(vector):
    return math.sqrt(sum(x_norm(component)[0] ** 2 for component in vector))


def grid_values(field, points):
    """Real values on a uniform grid with `points` nodes per axis (all axes of the field)"""
    sizes = (int(points),) * field.coeffs.ndim
    if any(points < 2 * h + 1 for h in _halves_of(field.coeffs)):
        raise ValueError(f"{points} grid points cannot resolve {field._layout()}")
    return sp_fft.ifftn(_embed(field.coeffs, sizes), norm="forward").real


def lp_norm(field, p, points):
    """Grid-quadrature L^p norm over the unit torus (p may be np.inf)"""
    values = np.abs(grid_values(field, points))
    if np.isinf(p):
        return float(values.max())
    return float(np.mean(values ** p) ** (1.0 / p))


def bernstein_check(h, alpha, p, q, cutoff_radius=None, points=None):
    """
    Bernstein-type inequality for x-functions on T^3

    Checks ||d^alpha Lambda(h)||_q <= 2^3 (2 pi)^k N^(k+3) ||h||_p with
    k = |alpha| and N the cutoff radius.

    Returns:
        tuple: (lhs, bound) from grid-quadrature Lebesgue norms
    """
    radius = cutoff_radius or h.x_radius
    points = points or 4 * (2 * h.kx + 1)
    cut = cutoff(h, radius)
    for axis, order in enumerate(alpha):
        for _ in range(order):
            cut = derivative_x(cut, axis)
    k = sum(alpha)
    lhs = lp_norm(cut, q, points)
    bound = 8.0 * TWO_PI ** k * radius ** (k + 3) * lp_norm(h, p, points)
    logger.debug(f"Bernstein alpha={alpha} p={p} q={q}: {lhs:.4g} <= {bound:.4g}")
    return lhs, bound
