"""Tests for the cutoff Legendre basis"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from core.legendre_basis import (
    LIMIT_C0,
    LIMIT_C1,
    LIMIT_C2,
    build_basis,
    inner_1d,
    sawtooth_coeff,
    truncation_error,
    vsq_coeff,
)
from core.spectral_core import Band, v_inner


def fourier_coeff(func, m):
    """Reference coefficient of func on [-1/2, 1/2] by adaptive quadrature"""
    re = quad(lambda v: func(v) * math.cos(2 * math.pi * m * v), -0.5, 0.5)[0]
    im = quad(lambda v: -func(v) * math.sin(2 * math.pi * m * v), -0.5, 0.5)[0]
    return complex(re, im)


class TestAnalyticCoefficients:
    @pytest.mark.parametrize("m", [-3, -1, 0, 1, 2, 5])
    def test_sawtooth_against_quadrature(self, m):
        assert_allclose(sawtooth_coeff(m), fourier_coeff(lambda v: v, m), atol=1e-12)

    @pytest.mark.parametrize("m", [-2, 0, 1, 4])
    def test_square_against_quadrature(self, m):
        assert_allclose(vsq_coeff(m), fourier_coeff(lambda v: v * v, m), atol=1e-12)


class TestBasisSet:
    def test_gram_is_identity(self, basis):
        """Assembled 3-D elements are orthonormal to rounding"""
        assert_allclose(basis.gram(), np.eye(5), atol=1e-12)

    def test_separable_gram_agrees_with_assembled(self, wide_basis):
        assert_allclose(wide_basis.separable_gram(), wide_basis.gram(), atol=1e-12)

    def test_e2_components_mean_zero(self, basis):
        for component in basis.e2_components:
            assert abs(v_inner(component, basis.e0)) < 1e-14

    def test_requires_two_v_modes(self):
        """N_v = 1 cannot separate v from v^2"""
        with pytest.raises(ValueError, match="at least 2"):
            build_basis(Band(2, 1))

    def test_normalization_constants_converge(self):
        """Gaps to sqrt5/2, 2 sqrt3 and 6 sqrt5 shrink as N_v doubles"""
        gaps = [build_basis(Band(1, n)).limit_gaps() for n in (16, 32, 64)]
        for name in ("c0", "c1", "c2"):
            assert gaps[0][name] > gaps[1][name] > gaps[2][name]

    def test_c1_gap_is_first_order_in_the_tail(self):
        """c1 = 1/sqrt(1/12 - tau) misses 2 sqrt3 by about 12 sqrt3 tau; c0, c2 only see the v^2 tail"""
        basis = build_basis(Band(1, 64))
        gaps = basis.limit_gaps()
        assert_allclose(gaps["c1"], basis.predicted_gaps()["c1"], rtol=0.02)
        assert gaps["c1"] > 1e-3
        assert gaps["c0"] < 1e-4 and gaps["c2"] < 1e-4

    def test_sawtooth_tail_is_the_plancherel_remainder(self, wide_basis):
        assert_allclose(wide_basis.sawtooth_tail, 1.0 / 12.0 - 1.0 / wide_basis.c1 ** 2, rtol=1e-12)

    def test_limit_values(self):
        assert_allclose((LIMIT_C0, LIMIT_C1, LIMIT_C2), (math.sqrt(5) / 2, 2 * math.sqrt(3), 6 * math.sqrt(5)))


class TestTruncation:
    def test_error_decreases_with_band(self):
        errors = [truncation_error(n, 1) for n in (4, 8, 16)]
        assert errors[0] > errors[1] > errors[2] > 0

    def test_square_converges_faster(self):
        assert truncation_error(16, 2) < truncation_error(16, 1)

    def test_rejects_other_powers(self):
        with pytest.raises(ValueError, match="power must be 1 or 2"):
            truncation_error(4, 3)

    def test_plancherel_norm_of_v(self):
        """sum |s_m|^2 over a wide band approaches ||v||^2 = 1/12"""
        ms = np.arange(-2000, 2001)
        s = np.array([sawtooth_coeff(m) for m in ms])
        assert_allclose(inner_1d(s, np.conj(s)[::-1]), 1.0 / 12.0, rtol=1e-3)
