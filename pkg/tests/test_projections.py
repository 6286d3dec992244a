"""Tests for the macroscopic/microscopic split and the Helmholtz projection"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import BandMismatchError
from core.projections import (
    MacroState,
    helmholtz_project,
    macro_project,
    micro_project,
    reconstruct,
)
from core.spectral_core import (
    Band,
    XField,
    cutoff,
    cutoff_v,
    cutoff_x,
    derivative_x,
    divergence,
    gradient,
    outer,
    x_norm,
)


class TestMacroProjection:
    def test_idempotent(self, basis, band, random_field):
        """P(P f) = P f and L(L f) = L f"""
        for _ in range(20):
            f = random_field(band)
            _, pf = macro_project(f, basis)
            _, ppf = macro_project(pf, basis)
            assert_allclose(ppf.coeffs, pf.coeffs, atol=1e-12)
            lf = micro_project(f, basis)
            assert_allclose(micro_project(lf, basis).coeffs, lf.coeffs, atol=1e-12)

    def test_orthogonal_norm_split(self, basis, band, random_field):
        """||f||^2 = ||P f||^2 + ||L f||^2"""
        f = random_field(band)
        _, pf = macro_project(f, basis)
        lf = f - pf
        assert_allclose(x_norm(f)[0] ** 2, x_norm(pf)[0] ** 2 + x_norm(lf)[0] ** 2, rtol=1e-12)

    def test_commutes_with_x_cutoff(self, basis, random_field):
        """Lambda and P commute"""
        f = random_field(Band(3, 2))
        _, p_then_cut = macro_project(f, basis)
        p_then_cut = cutoff(p_then_cut, basis.band)
        _, cut_then_p = macro_project(cutoff(f, basis.band), basis)
        assert_allclose(p_then_cut.coeffs, cut_then_p.coeffs, atol=1e-12)

    def test_velocity_mode_is_recovered(self, basis):
        """f = e1_1 sin(2 pi x2) has u1 = sin and nothing else"""
        shear = XField.from_modes(2, {(0, 1, 0): -0.5j})
        macro, _ = macro_project(outer(shear, basis.e1[0]), basis)
        assert_allclose(macro.u[0].coeffs, shear.coeffs, atol=1e-12)
        for other in (macro.rho, macro.u[1], macro.u[2], macro.theta):
            assert x_norm(other)[0] < 1e-12

    def test_micro_field_has_no_moments(self, basis, band, random_field):
        macro, _ = macro_project(micro_project(random_field(band), basis), basis)
        assert macro.l2_sq() < 1e-20

    def test_reconstruct_inverts_moments(self, basis, random_xfield):
        macro = MacroState(random_xfield(2), tuple(random_xfield(2) for _ in range(3)), random_xfield(2))
        recovered, _ = macro_project(reconstruct(macro, basis), basis)
        for a, b in zip(recovered.components(), macro.components()):
            assert_allclose(a.coeffs, b.coeffs, atol=1e-12)

    def test_band_mismatch_raises(self, basis, random_field):
        with pytest.raises(BandMismatchError, match="does not match basis"):
            macro_project(random_field(Band(2, 3)), basis)


class TestMacroState:
    def test_temperature_conventions(self, random_xfield):
        theta = random_xfield(2)
        macro = MacroState(XField.zeros(2), (XField.zeros(2),) * 3, theta)
        assert_allclose(macro.theta_closure.coeffs, np.sqrt(3) * theta.coeffs)
        assert_allclose(macro.theta_lift.coeffs, theta.coeffs / np.sqrt(3))

    def test_mixed_radii_rejected(self):
        with pytest.raises(BandMismatchError, match="different x-bands"):
            MacroState(XField.zeros(2), (XField.zeros(2),) * 3, XField.zeros(3))


class TestHelmholtz:
    def test_projection_properties(self, random_xfield):
        """P^2 = P, div P u = 0 and P grad = 0"""
        for _ in range(20):
            u = tuple(random_xfield(3) for _ in range(3))
            p, q = helmholtz_project(u)
            pp, _ = helmholtz_project(p)
            for a, b in zip(pp, p):
                assert_allclose(a.coeffs, b.coeffs, atol=1e-12)
            assert x_norm(divergence(p))[0] < 1e-10
            for a, b, c in zip(p, q, u):
                assert_allclose((a + b).coeffs, c.coeffs, atol=1e-14)

            phi = random_xfield(3)
            p_grad, _ = helmholtz_project(tuple(derivative_x(phi, axis) for axis in range(3)))
            assert max(x_norm(c)[0] for c in p_grad) < 1e-10

    def test_mean_stays_in_solenoidal_part(self):
        """The k = 0 mode is divergence-free and kept by P"""
        constant = (XField.constant(2, 1.5), XField.zeros(2), XField.zeros(2))
        p, q = helmholtz_project(constant)
        assert_allclose(p[0].mean(), 1.5)
        assert x_norm(q[0])[0] == 0.0


STRUCTURAL_SAMPLES = 200


class TestStructuralExactness:
    """Algebraic identities on the smallest band, one random field at a time"""

    @pytest.fixture(scope="class")
    def tensor_fields(self, basis):
        from core.closure import build_closure_constants, build_tensors

        tensors = build_tensors(basis, build_closure_constants(basis))
        return [entry for row in tensors.A for entry in row] + list(tensors.B)

    def test_cutoffs_and_projections(self, basis, band, random_field):
        wide = Band(3, 2)
        for _ in range(STRUCTURAL_SAMPLES):
            g = random_field(wide)
            f = cutoff(g, band)
            assert np.abs(cutoff(f, band).coeffs - f.coeffs).max() <= 1e-12

            x_then_v = cutoff_v(cutoff_x(g, 2), 1)
            v_then_x = cutoff_x(cutoff_v(g, 1), 2)
            assert np.abs(x_then_v.coeffs - v_then_x.coeffs).max() <= 1e-12
            assert np.abs(x_then_v.coeffs - cutoff(g, Band(2, 1)).coeffs).max() <= 1e-12

            _, pg = macro_project(g, basis)
            _, pf = macro_project(f, basis)
            assert np.abs(cutoff(pg, band).coeffs - pf.coeffs).max() <= 1e-12
            _, pf_low = macro_project(cutoff_x(f, 1), basis)
            assert np.abs(cutoff_x(pf, 1).coeffs - pf_low.coeffs).max() <= 1e-12

            _, ppf = macro_project(pf, basis)
            assert np.abs(ppf.coeffs - pf.coeffs).max() <= 1e-12
            lf = micro_project(f, basis)
            assert np.abs(micro_project(lf, basis).coeffs - lf.coeffs).max() <= 1e-12
            split = x_norm(pf)[0] ** 2 + x_norm(lf)[0] ** 2
            assert abs(x_norm(f)[0] ** 2 - split) <= 1e-12 * max(1.0, split)

    def test_helmholtz(self, random_xfield):
        for _ in range(STRUCTURAL_SAMPLES):
            u = tuple(random_xfield(2) for _ in range(3))
            p, _ = helmholtz_project(u)
            pp, _ = helmholtz_project(p)
            assert max(np.abs(a.coeffs - b.coeffs).max() for a, b in zip(pp, p)) <= 1e-12
            assert np.abs(divergence(p).coeffs).max() <= 1e-12
            p_grad, _ = helmholtz_project(gradient(random_xfield(2)))
            assert max(np.abs(c.coeffs).max() for c in p_grad) <= 1e-12

    def test_closure_tensors_stay_microscopic(self, basis, tensor_fields, random_xfield):
        """A and B times any x-profile have no macroscopic part"""
        for _ in range(STRUCTURAL_SAMPLES):
            h = random_xfield(2)
            for entry in tensor_fields:
                f = outer(h, entry)
                _, pf = macro_project(f, basis)
                assert np.abs(pf.coeffs).max() <= 1e-12
