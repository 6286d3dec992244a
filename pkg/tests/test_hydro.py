"""Tests for moment identities, forcing terms, Boussinesq diagnostics and the limit solver"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.closure import build_closure_constants
from core.dynamics import KineticParams, rhs
from core.errors import InvariantViolation
from core.hydro import (
    NSF_CONDUCTIVITY,
    ForcingSchedule,
    NsfState,
    boussinesq_residual,
    conservation_remainders,
    forcing_terms,
    integrate_nsf,
    loglog_slope,
    moment_residuals,
    nsf_step,
    remainder_mean,
    solenoidal_gap,
    step_diagnostics,
    strictly_decreasing,
    theta_tilde,
)
from core.projections import MacroState, helmholtz_project, reconstruct
from core.spectral_core import TWO_PI, XField, divergence, x_norm

SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)


@pytest.fixture
def params():
    return KineticParams(epsilon=0.2)


@pytest.fixture(scope="module")
def consts(basis):
    return build_closure_constants(basis)


def shear(x_radius, amplitude=1.0):
    """u1 = amplitude * sin(2 pi x2)"""
    return XField.from_modes(x_radius, {(0, 1, 0): -0.5j * amplitude})


def constant_macro(x_radius, rho=0.0, u=(0.0, 0.0, 0.0), theta=0.0):
    return MacroState(
        XField.constant(x_radius, rho),
        tuple(XField.constant(x_radius, c) for c in u),
        XField.constant(x_radius, theta),
    )


class TestMomentIdentities:
    def test_random_fields_satisfy_identities(self, band, basis, params, random_field):
        for _ in range(5):
            f = random_field(band, 0.1)
            residuals = moment_residuals(f, rhs(f, params, basis), params, basis)
            assert residuals.worst < 1e-9

    def test_wrong_derivative_is_caught(self, band, basis, params, random_field):
        f = random_field(band, 0.1)
        with pytest.raises(InvariantViolation, match="moment_identity"):
            moment_residuals(f, f, params, basis)


class TestForcing:
    def test_constant_velocity_cube(self, params):
        """Only F1 = (-6/5 + 3) c^3 = 9/5 c^3 survives"""
        c = 0.3
        forcing = forcing_terms(constant_macro(2, u=(c, 0.0, 0.0)), params)
        assert_allclose(forcing.F[0].mean().real, 1.8 * c ** 3, rtol=1e-12)
        for name, value in forcing.norms().items():
            if name != "F":
                assert value < 1e-14, name

    def test_temperature_enters_with_lift_convention(self, params):
        theta = 0.4
        forcing = forcing_terms(constant_macro(2, theta=theta), params)
        lifted = theta / SQRT3
        assert_allclose(forcing.G.mean().real, 171.0 / 7.0 * lifted ** 3, rtol=1e-12)
        assert_allclose(forcing.E.mean().real, 6.0 * SQRT5 / 7.0 * lifted ** 3, rtol=1e-12)

    def test_density_cube(self, params):
        forcing = forcing_terms(constant_macro(2, rho=0.5), params)
        assert_allclose(forcing.E.mean().real, 0.125, rtol=1e-12)
        assert x_norm(forcing.G)[0] < 1e-15

    def test_anomalous_terms_of_a_shear_vanish(self, params):
        """H and J differentiate u_i along x_i, which a shear does not depend on"""
        macro = MacroState(XField.zeros(2), (shear(2), XField.zeros(2), XField.zeros(2)), XField.zeros(2))
        forcing = forcing_terms(macro, params)
        assert forcing.norms()["H"] < 1e-14
        assert forcing.norms()["J"] < 1e-14

    def test_u_forcing_is_solenoidal(self, params, random_xfield):
        macro = MacroState(random_xfield(2), tuple(random_xfield(2) for _ in range(3)), random_xfield(2))
        force_u = forcing_terms(macro, params).u_forcing(params)
        assert x_norm(divergence(force_u))[0] < 1e-10


class TestBoussinesq:
    def test_boussinesq_line_has_zero_limit_residual(self, consts, random_xfield):
        """theta_c = -(3 sqrt5 / 2) rho, i.e. theta = -(sqrt15 / 2) rho"""
        rho = random_xfield(2)
        macro = MacroState(rho, (XField.zeros(2),) * 3, -(math.sqrt(15.0) / 2.0) * rho)
        _, limit_form = boussinesq_residual(macro, consts)
        assert limit_form < 1e-12

    def test_off_line_residual(self, consts):
        rho = XField.from_modes(2, {(1, 0, 0): 0.5})
        macro = MacroState(rho, (XField.zeros(2),) * 3, XField.zeros(2))
        _, limit_form = boussinesq_residual(macro, consts)
        # grad(3 sqrt5 cos(2 pi x1)) has L2 norm 3 sqrt5 * 2 pi / sqrt2
        assert_allclose(limit_form, 3.0 * SQRT5 * TWO_PI / math.sqrt(2.0))

    def test_theta_tilde(self, random_xfield):
        rho, theta = random_xfield(2), random_xfield(2)
        macro = MacroState(rho, (XField.zeros(2),) * 3, theta)
        expected = SQRT3 * theta - (2.0 * SQRT5 / 5.0) * rho
        assert_allclose(theta_tilde(macro).coeffs, expected.coeffs, atol=1e-15)


class TestDiagnostics:
    def test_macroscopic_field_has_no_remainder(self, basis, random_xfield):
        u = tuple(random_xfield(2, 0.1) for _ in range(3))
        macro = MacroState(random_xfield(2, 0.1), u, random_xfield(2, 0.1))
        assert remainder_mean(reconstruct(macro, basis), basis) < 1e-12

    def test_step_diagnostics_columns(self, band, basis, params, consts, random_field):
        f = random_field(band, 0.1)
        row = step_diagnostics(f, rhs(f, params, basis), params, basis, consts)
        assert_allclose(row["p_u_l2"] ** 2 + row["q_u_l2"] ** 2, row["u_l2"] ** 2, rtol=1e-10)
        assert all(np.isfinite(value) for value in row.values())
        assert row["residual_momentum"] < 1e-9

    def test_conservation_remainders_vanish_at_rest(self, band, basis, params, consts, random_field):
        f = 0.0 * random_field(band)
        remainders = conservation_remainders(f, rhs(f, params, basis), params, basis, consts)
        assert remainders.total == 0.0

    def test_conservation_remainder_total(self, band, basis, params, consts, random_field):
        f = random_field(band, 0.1)
        remainders = conservation_remainders(f, rhs(f, params, basis), params, basis, consts)
        parts = (remainders.continuity, remainders.momentum, remainders.energy)
        assert all(np.isfinite(part) and part >= 0.0 for part in parts)
        assert_allclose(remainders.total, sum(parts))
        row = step_diagnostics(f, rhs(f, params, basis), params, basis, consts)
        assert_allclose(row["conservation_remainder"], remainders.total)


class TestStudySummaries:
    def test_loglog_slope(self):
        eps = [0.4, 0.2, 0.1, 0.05]
        assert_allclose(loglog_slope(eps, [e ** 2 for e in eps]), 2.0)
        assert_allclose(loglog_slope(eps, [3.0 * e for e in eps]), 1.0)

    def test_slope_needs_two_positive_values(self):
        assert loglog_slope([0.4, 0.2, 0.1], [0.0, 0.0, 1.0]) is None

    def test_strictly_decreasing(self):
        assert strictly_decreasing([3.0, 2.0, 1.0])
        assert not strictly_decreasing([3.0, 3.0, 1.0])

    def test_solenoidal_gap(self):
        base = MacroState(XField.zeros(2), (shear(2), XField.zeros(2), XField.zeros(2)), XField.zeros(2))
        other = MacroState(XField.zeros(3), (shear(3, 2.0), XField.zeros(3), XField.zeros(3)), XField.zeros(3))
        assert solenoidal_gap([(0.0, base)], [(0.0, base)]) == 0.0
        # ||sin(2 pi x2)||_L2 = 1/sqrt2
        assert_allclose(solenoidal_gap([(0.0, base), (0.1, base)], [(0.1, other)]), 1.0 / math.sqrt(2.0))


class TestLimitSolver:
    def test_shear_decays_at_viscous_rate(self):
        """Kinetic energy of a shear mode decays like exp(-2 nu (2 pi)^2 t)"""
        nu = 1.0 / 12.0
        state = NsfState(u=(shear(2), XField.zeros(2), XField.zeros(2)), theta_tilde=XField.zeros(2), nu=nu)
        final = integrate_nsf(state, 1e-3, 0.1)
        assert_allclose(final.time, 0.1)
        assert_allclose(final.kinetic_energy(), state.kinetic_energy() * math.exp(-2.0 * nu * TWO_PI ** 2 * 0.1),
                        rtol=1e-10)

    def test_temperature_decays_at_conductive_rate(self):
        nu = 1.0 / 12.0
        theta = XField.from_modes(2, {(1, 0, 0): 0.5})
        state = NsfState(u=(XField.zeros(2),) * 3, theta_tilde=theta, nu=nu)
        final = integrate_nsf(state, 1e-3, 0.05)
        rate = NSF_CONDUCTIVITY * nu * TWO_PI ** 2
        assert_allclose(x_norm(final.theta_tilde)[0], x_norm(theta)[0] * math.exp(-rate * 0.05), rtol=1e-10)

    def test_zero_state_stays_zero(self):
        state = NsfState(u=(XField.zeros(2),) * 3, theta_tilde=XField.zeros(2), nu=0.1)
        final = nsf_step(state, 1e-3)
        assert final.kinetic_energy() == 0.0
        assert x_norm(final.theta_tilde)[0] == 0.0

    def test_step_keeps_velocity_divergence_free(self, random_xfield):
        u, _ = helmholtz_project(tuple(random_xfield(3, 0.1) for _ in range(3)))
        state = NsfState(u=u, theta_tilde=random_xfield(3, 0.1), nu=1.0 / 12.0)
        final = nsf_step(state, 1e-3)
        assert final.divergence_norm() < 1e-10

    def test_constant_forcing_accelerates_mean_flow(self):
        push = (XField.constant(2, 1.0), XField.zeros(2), XField.zeros(2))
        schedule = ForcingSchedule([(0.0, push, XField.zeros(2))])
        state = NsfState(u=(XField.zeros(2),) * 3, theta_tilde=XField.zeros(2), nu=0.1)
        final = integrate_nsf(state, 1e-3, 0.01, forcing=schedule)
        assert_allclose(final.u[0].mean().real, 0.01, rtol=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError, match="nu must be positive"):
            NsfState(u=(XField.zeros(2),) * 3, theta_tilde=XField.zeros(2), nu=0.0)
        state = NsfState(u=(XField.zeros(2),) * 3, theta_tilde=XField.zeros(2), nu=0.1)
        with pytest.raises(ValueError, match="dt must be positive"):
            nsf_step(state, -1e-3)


class TestForcingSchedule:
    def test_linear_interpolation_and_hold(self):
        zero = (XField.zeros(2),) * 3
        samples = [(1.0, zero, XField.constant(2, 2.0)), (0.0, zero, XField.constant(2, 0.0))]
        schedule = ForcingSchedule(samples)
        assert_allclose(schedule(0.25)[1].mean().real, 0.5)
        assert_allclose(schedule(-1.0)[1].mean().real, 0.0)
        assert_allclose(schedule(5.0)[1].mean().real, 2.0)

    def test_needs_samples(self):
        with pytest.raises(ValueError, match="at least one sample"):
            ForcingSchedule([])
