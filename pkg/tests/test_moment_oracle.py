"""Tests for exact arithmetic in Q(sqrt3, sqrt5) and the closure coefficient table"""
import math
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose

from core import moment_oracle
from core.errors import OracleMismatch
from core.moment_oracle import (
    DOCUMENTED_DISCREPANCIES,
    Q35Value,
    VPolynomial,
    e1,
    e2_component,
    monomial_moment,
    poly_moment,
    tensor_a,
    tensor_b,
    v,
    verify_closure_tables,
)

SQRT3 = Q35Value.of(1, 3)
SQRT5 = Q35Value.of(1, 5)


class TestQ35Value:
    def test_radical_products(self):
        assert SQRT3 * SQRT5 == Q35Value.of(1, 15)
        assert SQRT3 * Q35Value.of(1, 15) == Q35Value.of(3, 5)
        assert Q35Value.of(1, 15) ** 2 == 15

    def test_inverse(self):
        x = 1 + SQRT5 - Q35Value.of(Fraction(2, 7), 15)
        assert x * x.inverse() == 1
        assert 1 / SQRT3 == Q35Value.of(Fraction(1, 3), 3)

    def test_zero_has_no_inverse(self):
        with pytest.raises(ZeroDivisionError):
            Q35Value().inverse()

    def test_unknown_radical_rejected(self):
        with pytest.raises(ValueError, match="radical must be one of"):
            Q35Value.of(1, 7)

    def test_float_conversion(self):
        assert_allclose(float(Q35Value.of("97/12600", 5)), 97 * math.sqrt(5) / 12600)

    @pytest.mark.parametrize("value, text", [
        (Q35Value.of("97/12600", 5), "97√5/12600"),
        (Q35Value(Fraction(1, 2), -1), "1/2 - √3"),
        (Q35Value.of(-2, 5), "-2√5"),
        (Q35Value(), "0"),
    ])
    def test_string_form(self, value, text):
        assert str(value) == text

    def test_mixing_with_floats_is_refused(self):
        with pytest.raises(TypeError):
            SQRT3 + 0.5


class TestPolynomialMoments:
    def test_monomials(self):
        assert monomial_moment((2, 0, 0)) == Fraction(1, 12)
        assert monomial_moment((2, 2, 0)) == Fraction(1, 144)
        assert monomial_moment((4, 0, 0)) == Fraction(1, 80)
        assert monomial_moment((1, 2, 0)) == 0

    def test_polynomial_arithmetic(self):
        p = (v(0) + 1) ** 2
        assert poly_moment(p) == Fraction(1, 12) + 1
        assert p.degree == 2
        assert (p - p).terms == {}

    def test_limit_basis_is_orthonormal(self):
        assert poly_moment(e1(0) ** 2) == 1
        assert poly_moment(e2_component(0) ** 2) == 1
        assert poly_moment(e1(0) * e2_component(1)) == 0

    def test_tensors_are_kernel_orthogonal(self):
        kernel = [VPolynomial.constant(1), v(0), v(1), v(0) ** 2 + v(1) ** 2 + v(2) ** 2]
        for g in kernel:
            assert poly_moment(tensor_a(0, 0) * g) == 0
            assert poly_moment(tensor_a(0, 1) * g) == 0
        assert poly_moment(tensor_b(0) * v(0)) == 0


class TestClosureTable:
    @pytest.fixture(scope="class")
    def report(self):
        return verify_closure_tables(strict=True)

    def test_table_passes(self, report):
        assert report.ok
        assert not report.failures

    def test_heat_flux_bracket(self, report):
        row = report.row("⟨B_i²⟩")
        assert row.passed
        assert row.computed == Fraction(97, 75600)

    def test_mu6_is_rational(self, report):
        assert report.row("μ6").computed == Fraction(15, 19)

    def test_discrepancies_are_exactly_the_documented_rows(self, report):
        flagged = {(row.lemma, row.symbol) for row in report.discrepancies}
        assert flagged == set(DOCUMENTED_DISCREPANCIES)
        for row in report.discrepancies:
            assert row.as_record()["status"] == "discrepancy"
            assert row.note == DOCUMENTED_DISCREPANCIES[(row.lemma, row.symbol)]

    def test_transport_gradient_coefficient(self, report):
        row = report.row("∇|u|² coefficient", lemma="nonlinear-transport")
        assert row.computed == Fraction(-1, 45)

    def test_records_are_serialisable(self, report):
        record = report.to_records()[0]
        assert set(record) == {"lemma", "symbol", "expected", "computed", "pass", "status", "note"}
        assert isinstance(record["expected"], str)

    def test_unknown_symbol(self, report):
        with pytest.raises(KeyError):
            report.row("no such coefficient")

    def test_strict_mode_raises_on_unregistered_mismatch(self, monkeypatch):
        monkeypatch.setattr(moment_oracle, "DOCUMENTED_DISCREPANCIES", {})
        with pytest.raises(OracleMismatch) as info:
            verify_closure_tables(strict=True)
        assert info.value.invariant.startswith("closure_table:")

    def test_lenient_mode_collects_failures(self, monkeypatch):
        monkeypatch.setattr(moment_oracle, "DOCUMENTED_DISCREPANCIES", {})
        report = verify_closure_tables(strict=False)
        assert len(report.failures) == len(DOCUMENTED_DISCREPANCIES)
        assert not report.ok
