"""Tests for band-limited fields, cutoffs, alias-free products and norms"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.signal import fftconvolve

from core.errors import BandMismatchError, ModeOutOfBandError
from core.spectral_core import (
    TWO_PI,
    Band,
    SpectralField,
    XField,
    bernstein_check,
    cutoff,
    cutoff_v,
    cutoff_x,
    derivative_x,
    divergence,
    grid_values,
    hminus1_norm,
    laplacian,
    multiply_by_sawtooth,
    outer,
    product,
    triple_product,
    v_inner,
    v_moment,
    x_norm,
)


def sine_x1(x_radius, amplitude=1.0):
    """amplitude * sin(2 pi x1)"""
    return XField.from_modes(x_radius, {(1, 0, 0): -0.5j * amplitude})


def direct_convolution(f, g, out):
    """Coefficients of f*g by looping over every pair of modes"""
    result = np.zeros(out.shape, dtype=complex)
    f_half, g_half, out_half = f.band.halves, g.band.halves, out.halves
    for a in np.ndindex(f.coeffs.shape):
        if f.coeffs[a] == 0:
            continue
        for b in np.ndindex(g.coeffs.shape):
            target = tuple(i - fh + j - gh + oh for i, fh, j, gh, oh in zip(a, f_half, b, g_half, out_half))
            if all(0 <= t <= 2 * oh for t, oh in zip(target, out_half)):
                result[target] += f.coeffs[a] * g.coeffs[b]
    return result * out.x_mask[..., None, None, None]


def sawtooth_coefficient(line, m):
    """Coefficient m of v * h(v) on [-1/2, 1/2), h given by centered 1-D coefficients"""
    k = (len(line) - 1) // 2
    modes = np.arange(-k, k + 1)

    def value(v):
        return v * np.dot(line, np.exp(2j * math.pi * modes * v)) * np.exp(-2j * math.pi * m * v)

    re, _ = quad(lambda v: value(v).real, -0.5, 0.5, epsabs=1e-13)
    im, _ = quad(lambda v: value(v).imag, -0.5, 0.5, epsabs=1e-13)
    return complex(re, im)


class TestBand:
    def test_strict_sphere_cutoff(self):
        """|n| < N_x keeps all 27 modes of the unit cube at N_x = 2"""
        assert Band(2, 2).x_mask.sum() == 27
        assert Band(3, 2).x_mask[0, 0, 0] == False  # noqa: E712  (|(-2,-2,-2)|^2 = 12 >= 9)

    def test_rejects_non_positive_radius(self):
        """Zero or fractional radii are refused"""
        with pytest.raises(ValueError, match="positive integer"):
            Band(0, 2)
        with pytest.raises(ValueError, match="positive integer"):
            Band(2, 1.5)

    def test_from_epsilon_never_below_two(self):
        """The epsilon-tied radius is ceil(eps^-gamma) with a floor of 2"""
        assert Band.from_epsilon(0.05, 1.0 / 18.0) == Band(2, 2)
        assert Band.from_epsilon(0.01, 1.0) == Band(100, 100)


class TestConstruction:
    def test_from_modes_adds_conjugate_partner(self, band):
        """A single mode becomes a real field"""
        field = SpectralField.from_modes(band, {((1, 0, 0), (0, 1, 0)): 0.3 + 0.2j})
        assert field.reality_residual() == 0.0
        assert_allclose(x_norm(field)[0], math.sqrt(2) * abs(0.3 + 0.2j))

    def test_from_modes_lists_every_outside_mode(self, band):
        """All offending modes are reported together"""
        modes = {((2, 0, 0), (0, 0, 0)): 1.0, ((0, 0, 0), (0, 0, 2)): 1.0, ((0, 0, 0), (0, 0, 0)): 1.0}
        with pytest.raises(ModeOutOfBandError, match="2 mode") as info:
            SpectralField.from_modes(band, modes)
        assert len(info.value.modes) == 2

    def test_shape_mismatch_raises(self, band):
        with pytest.raises(BandMismatchError):
            SpectralField(band, np.zeros((3, 3, 3)))

    def test_random_field_is_real(self, band, random_field):
        assert random_field(band).reality_residual() < 1e-15

    def test_adding_fields_on_different_bands_raises(self, random_field):
        with pytest.raises(BandMismatchError):
            random_field(Band(2, 2)) + random_field(Band(2, 3))


class TestCutoff:
    def test_idempotent(self, band, random_field):
        """Lambda(Lambda f) = Lambda f"""
        f = random_field(Band(3, 3))
        once = cutoff(f, band)
        assert_allclose(cutoff(once, band).coeffs, once.coeffs, atol=1e-15)

    def test_x_and_v_cutoffs_commute(self, random_field):
        f = random_field(Band(3, 3))
        a = cutoff_v(cutoff_x(f, 2), 2)
        b = cutoff_x(cutoff_v(f, 2), 2)
        assert_allclose(a.coeffs, b.coeffs, atol=1e-15)

    def test_zero_extension_round_trip(self, band, random_field):
        """Extending to a larger band and cutting back is the identity"""
        f = random_field(band)
        assert_allclose(cutoff(cutoff(f, Band(3, 4)), band).coeffs, f.coeffs, atol=1e-15)

    def test_xfield_cutoff_masks_sphere(self, random_xfield):
        g = cutoff(random_xfield(3), 2)
        assert g.x_radius == 2


class TestProducts:
    def test_product_matches_direct_convolution(self, random_xfield):
        """Padded-transform products equal the exact discrete convolution"""
        f, g = random_xfield(2), random_xfield(2)
        expected = fftconvolve(f.coeffs, g.coeffs) * Band(3, 1).x_mask
        assert_allclose(product(f, g, 3).coeffs, expected, atol=1e-13)

    def test_kinetic_product_matches_six_dimensional_sum(self, random_field):
        """Every pair of (n, m) modes summed directly, then masked to the output band"""
        f, g = random_field(Band(2, 2)), random_field(Band(2, 2))
        out = Band(3, 3)
        assert_allclose(product(f, g, out).coeffs, direct_convolution(f, g, out), atol=1e-12)

    def test_triple_product_matches_nested_products(self, random_xfield):
        f, g, h = random_xfield(2), random_xfield(2), random_xfield(2)
        nested = product(product(f, g, 4), h, 2)
        assert_allclose(triple_product(f, g, h, 2).coeffs, nested.coeffs, atol=1e-13)

    def test_kinetic_product_of_constants(self, band):
        f = SpectralField.constant(band, 2.0)
        assert_allclose(product(f, f, band).mean(), 4.0)

    def test_mixed_operands_rejected(self, band, random_xfield):
        with pytest.raises(TypeError, match="expected SpectralField"):
            product(random_xfield(2), SpectralField.zeros(band), band)


class TestDerivatives:
    def test_derivative_of_sine_is_cosine(self):
        """d/dx1 sin(2 pi x1) = 2 pi cos(2 pi x1)"""
        d = derivative_x(sine_x1(2), 0)
        expected = XField.from_modes(2, {(1, 0, 0): math.pi})
        assert_allclose(d.coeffs, expected.coeffs, atol=1e-15)

    def test_laplacian_eigenvalue(self):
        field = sine_x1(2)
        assert_allclose(laplacian(field).coeffs, -(TWO_PI ** 2) * field.coeffs, atol=1e-12)

    def test_divergence_of_gradient_is_laplacian(self, random_xfield):
        phi = random_xfield(3)
        grad = tuple(derivative_x(phi, axis) for axis in range(3))
        assert_allclose(divergence(grad).coeffs, laplacian(phi).coeffs, atol=1e-10)


class TestNorms:
    def test_sine_norms(self):
        """||sin||_L2 = 1/sqrt2 and the H1 weight is 1 + 4 pi^2"""
        l2, h1 = x_norm(sine_x1(2))
        assert_allclose(l2, 1.0 / math.sqrt(2.0))
        assert_allclose(h1, math.sqrt(0.5 * (1.0 + TWO_PI ** 2)))

    def test_hminus1_below_l2(self, random_xfield):
        f = random_xfield(3)
        assert hminus1_norm(f) <= x_norm(f)[0]

    def test_grid_values_of_sine(self):
        values = grid_values(sine_x1(2), 8)
        x = np.arange(8) / 8.0
        assert_allclose(values[:, 0, 0], np.sin(TWO_PI * x), atol=1e-14)


class TestVelocityMoments:
    def test_unit_mass_of_constant(self, basis):
        """<1, 1> over the unit velocity box"""
        assert_allclose(v_inner(basis.e0, basis.e0), 1.0)

    def test_moment_of_outer_product(self, basis):
        a = sine_x1(2, 0.7)
        f = outer(a, basis.e1[0])
        assert_allclose(v_moment(f, basis.e1[0]).coeffs, a.coeffs, atol=1e-13)

    def test_weight_with_x_dependence_rejected(self, band, random_field):
        with pytest.raises(BandMismatchError, match="must not depend on x"):
            v_moment(random_field(band), random_field(band))

    def test_sawtooth_multiplication_builds_lambda_v(self, basis):
        """Lambda(v_i * 1) is the stored Lambda(v_i)"""
        for axis in range(3):
            lam_v = multiply_by_sawtooth(basis.e0, axis, basis.vband)
            assert_allclose(lam_v.coeffs, basis.v_eps[axis].coeffs, atol=1e-15)

    @pytest.mark.parametrize("axis", [0, 2])
    def test_sawtooth_multiplication_matches_quadrature(self, random_field, axis):
        """Each v-line of a random field times v_axis, against quad on [-1/2, 1/2)"""
        f = random_field(Band(1, 3))
        result = np.moveaxis(multiply_by_sawtooth(f, axis, f.band).v_coeffs, axis, 0)
        lines = np.moveaxis(f.v_coeffs, axis, 0)
        kv = f.band.kv
        for q, r in np.ndindex(lines.shape[1:]):
            expected = [sawtooth_coefficient(lines[:, q, r], m) for m in range(-kv, kv + 1)]
            assert_allclose(result[:, q, r], expected, atol=1e-11)


class TestBernstein:
    @pytest.mark.parametrize("alpha", [(0, 0, 0), (1, 0, 0), (0, 0, 1)])
    @pytest.mark.parametrize("p, q", [(1, 2), (2, np.inf)])
    def test_inequality_holds_on_random_fields(self, rng, alpha, p, q):
        """No violations over a batch of random fields"""
        for _ in range(20):
            h = XField.random(3, rng)
            lhs, bound = bernstein_check(h, alpha, p, q)
            assert lhs <= bound
