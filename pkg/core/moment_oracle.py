"""
Exact velocity moments over Q(sqrt3, sqrt5)

Every limit coefficient of the closure and of the limit system is a bracket
of a polynomial in v over Omega = [-1/2, 1/2]^3 with coefficients in
Q(sqrt3, sqrt5). This module evaluates those brackets exactly and checks the
whole coefficient table row by row.

Rows whose quoted value differs from the exact recomputation in a known,
explained way are registered in DOCUMENTED_DISCREPANCIES: they are reported
with status "discrepancy" and do not fail the table. Any other mismatch is
a hard failure naming the lemma.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import OracleMismatch

logger = logging.getLogger(__name__)

_RADICALS = (1, 3, 5, 15)


def _radical_product(a, b):
    """sqrt(a) * sqrt(b) = factor * sqrt(radical) for square-free a, b in {1, 3, 5, 15}"""
    g = math.gcd(a, b)
    return g, (a * b) // (g * g)


@dataclass(frozen=True, eq=False)
class Q35Value:
    """q1 + q3 sqrt3 + q5 sqrt5 + q15 sqrt15 with exact rational coordinates"""

    q1: Fraction = Fraction(0)
    q3: Fraction = Fraction(0)
    q5: Fraction = Fraction(0)
    q15: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("q1", "q3", "q5", "q15"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    @classmethod
    def of(cls, value=0, radical=1):
        """value * sqrt(radical), e.g. Q35Value.of('97/12600', 5)"""
        if radical not in _RADICALS:
            raise ValueError(f"radical must be one of {_RADICALS}, got {radical}")
        return cls(**{f"q{radical}": Fraction(value)})

    @classmethod
    def coerce(cls, other):
        if isinstance(other, Q35Value):
            return other
        if isinstance(other, (int, Fraction)):
            return cls(other)
        return None

    @classmethod
    def from_terms(cls, terms):
        return cls(*(terms.get(radical, 0) for radical in _RADICALS))

    def terms(self):
        return {1: self.q1, 3: self.q3, 5: self.q5, 15: self.q15}

    def is_zero(self):
        return not any(self.terms().values())

    def conj3(self):
        """Automorphism sqrt3 -> -sqrt3"""
        return Q35Value(self.q1, -self.q3, self.q5, -self.q15)

    def conj5(self):
        """Automorphism sqrt5 -> -sqrt5"""
        return Q35Value(self.q1, self.q3, -self.q5, -self.q15)

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(sqrt3, sqrt5)")
        half_norm = self * self.conj5()  # in Q(sqrt3)
        norm = half_norm * half_norm.conj3()  # rational
        return (self.conj5() * half_norm.conj3()) / norm.q1

    def __add__(self, other):
        other = Q35Value.coerce(other)
        if other is None:
            return NotImplemented
        mine, theirs = self.terms(), other.terms()
        return Q35Value.from_terms({r: mine[r] + theirs[r] for r in _RADICALS})

    __radd__ = __add__

    def __neg__(self):
        return Q35Value(-self.q1, -self.q3, -self.q5, -self.q15)

    def __sub__(self, other):
        other = Q35Value.coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = Q35Value.coerce(other)
        if other is None:
            return NotImplemented
        result = dict.fromkeys(_RADICALS, Fraction(0))
        for ra, ca in self.terms().items():
            if not ca:
                continue
            for rb, cb in other.terms().items():
                if not cb:
                    continue
                factor, radical = _radical_product(ra, rb)
                result[radical] += factor * ca * cb
        return Q35Value.from_terms(result)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Q35Value.from_terms({r: c / other for r, c in self.terms().items()})
        other = Q35Value.coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Q35Value.coerce(other) * self.inverse()

    def __pow__(self, exponent):
        result = Q35Value(1)
        for _ in range(int(exponent)):
            result = result * self
        return result

    def __eq__(self, other):
        other = Q35Value.coerce(other)
        if other is None:
            return NotImplemented
        return self.terms() == other.terms()

    def __hash__(self):
        return hash(tuple(self.terms().values()))

    def __float__(self):
        return sum(float(c) * math.sqrt(r) for r, c in self.terms().items())

    def __str__(self):
        parts = []
        for radical, coeff in self.terms().items():
            if not coeff:
                continue
            sign = "-" if coeff < 0 else "+"
            num, den = abs(coeff.numerator), coeff.denominator
            if radical == 1:
                body = str(num)
            else:
                body = ("" if num == 1 else str(num)) + f"√{radical}"
            if den != 1:
                body += f"/{den}"
            parts.append((sign, body))
        if not parts:
            return "0"
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Q35Value({self})"


@dataclass(frozen=True, eq=False)
class VPolynomial:
    """Polynomial in (v1, v2, v3): {exponent triple: Q35Value}"""

    terms: dict

    def __post_init__(self):
        cleaned = {}
        for alpha, coeff in self.terms.items():
            coeff = Q35Value.coerce(coeff)
            if not coeff.is_zero():
                cleaned[tuple(int(a) for a in alpha)] = coeff
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def constant(cls, value):
        return cls({(0, 0, 0): Q35Value.coerce(value)})

    @classmethod
    def variable(cls, axis):
        alpha = [0, 0, 0]
        alpha[axis] = 1
        return cls({tuple(alpha): Q35Value(1)})

    @classmethod
    def coerce(cls, other):
        if isinstance(other, VPolynomial):
            return other
        if Q35Value.coerce(other) is not None:
            return cls.constant(other)
        return None

    @property
    def degree(self):
        return max((sum(alpha) for alpha in self.terms), default=0)

    def __add__(self, other):
        other = VPolynomial.coerce(other)
        if other is None:
            return NotImplemented
        merged = dict(self.terms)
        for alpha, coeff in other.terms.items():
            merged[alpha] = merged.get(alpha, Q35Value()) + coeff
        return VPolynomial(merged)

    __radd__ = __add__

    def __neg__(self):
        return VPolynomial({alpha: -coeff for alpha, coeff in self.terms.items()})

    def __sub__(self, other):
        other = VPolynomial.coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = VPolynomial.coerce(other)
        if other is None:
            return NotImplemented
        result = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                alpha = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
                result[alpha] = result.get(alpha, Q35Value()) + ca * cb
        return VPolynomial(result)

    __rmul__ = __mul__

    def __pow__(self, exponent):
        result = VPolynomial.constant(1)
        for _ in range(int(exponent)):
            result = result * self
        return result


def monomial_moment(alpha):
    """Integral of v^alpha over Omega: prod_i (0 if alpha_i odd else 2^-alpha_i / (alpha_i + 1))"""
    result = Fraction(1)
    for power in alpha:
        if power % 2:
            return Fraction(0)
        result *= Fraction(1, 2 ** power * (power + 1))
    return result


def poly_moment(poly):
    """Exact <p> over Omega"""
    total = Q35Value()
    for alpha, coeff in poly.terms.items():
        total = total + coeff * monomial_moment(alpha)
    return total


# ---------------------------------------------------------------------------
# limit objects
# ---------------------------------------------------------------------------

SQRT3 = Q35Value.of(1, 3)
SQRT5 = Q35Value.of(1, 5)
LIMIT_C0 = Q35Value.of(Fraction(1, 2), 5)
LIMIT_C1 = Q35Value.of(2, 3)
LIMIT_C2 = Q35Value.of(6, 5)


def v(axis):
    return VPolynomial.variable(axis)


def speed_sq():
    return v(0) ** 2 + v(1) ** 2 + v(2) ** 2


def e1(axis):
    """2 sqrt3 v_i"""
    return LIMIT_C1 * v(axis)


def e2_component(axis):
    """6 sqrt5 (v_i^2 - 1/12)"""
    return LIMIT_C2 * (v(axis) ** 2 - Fraction(1, 12))


def e2_sum():
    """6 sqrt5 (|v|^2 - 1/4), the sum of the three components"""
    return LIMIT_C2 * (speed_sq() - Fraction(1, 4))


def e2_unit():
    return e2_sum() * SQRT3.inverse()


def tensor_a(i, j):
    """v_i v_j - delta_ij |v|^2 / 3"""
    entry = v(i) * v(j)
    if i == j:
        entry = entry - speed_sq() * Fraction(1, 3)
    return entry


def tensor_b(i):
    """v_i (|v|^2 - 19/60)"""
    return v(i) * (speed_sq() - Fraction(19, 60))


# ---------------------------------------------------------------------------
# coefficient table
# ---------------------------------------------------------------------------

DOCUMENTED_DISCREPANCIES = {
    ("basis", "⟨e2²⟩ (sum of components)"): (
        "the sum e2_1 + e2_2 + e2_3 has squared norm 3; the unit element is the sum over sqrt3"
    ),
    ("nonlinear-transport", "∇|u|² coefficient"): (
        "quoted 2/5 = 12 (1/144 + 19/720) adds the |v|^2/3 correction instead of subtracting it; "
        "the exact value is 12 (1/144 - 19/2160) = -1/45"
    ),
    ("momentum-system", "∇|u|² coefficient (κ = 1)"): (
        "inherits the transport discrepancy: 2 sqrt3 * (-1/45) = -2 sqrt3/45 instead of 4 sqrt3/5"
    ),
    ("cubic-forcing-G", "θ|u|² coefficient"): (
        "3 <e2^2 e1_i^2> = 75/7, the same bracket as the theta^2 u_i term of F; quoted 15/7"
    ),
}


@dataclass(frozen=True)
class ClosureRow:
    lemma: str
    symbol: str
    expected: Q35Value
    computed: Q35Value

    @property
    def passed(self):
        return self.expected == self.computed

    @property
    def note(self):
        if self.passed:
            return ""
        return DOCUMENTED_DISCREPANCIES.get((self.lemma, self.symbol), "unregistered mismatch")

    @property
    def status(self):
        if self.passed:
            return "pass"
        if (self.lemma, self.symbol) in DOCUMENTED_DISCREPANCIES:
            return "discrepancy"
        return "fail"

    def as_record(self):
        return {
            "lemma": self.lemma,
            "symbol": self.symbol,
            "expected": str(self.expected),
            "computed": str(self.computed),
            "pass": self.passed,
            "status": self.status,
            "note": self.note,
        }


@dataclass(frozen=True)
class ClosureReport:
    rows: tuple

    @property
    def failures(self):
        return [row for row in self.rows if row.status == "fail"]

    @property
    def discrepancies(self):
        return [row for row in self.rows if row.status == "discrepancy"]

    @property
    def ok(self):
        return not self.failures

    def row(self, symbol, lemma=None):
        for row in self.rows:
            if row.symbol == symbol and (lemma is None or row.lemma == lemma):
                return row
        raise KeyError(symbol)

    def to_records(self):
        return [row.as_record() for row in self.rows]


def _q(value, radical=1):
    return Q35Value.of(Fraction(value), radical)


def _table_rows():
    rows = []

    def add(lemma, symbol, expected, computed):
        rows.append(ClosureRow(lemma, symbol, Q35Value.coerce(expected), Q35Value.coerce(computed)))

    m = poly_moment
    v0, v1 = v(0), v(1)
    e1i, e1j, e2 = e1(0), e1(1), e2_sum()

    # orthonormality in the limit
    add("basis", "⟨e1_i²⟩", 1, m(e1i ** 2))
    add("basis", "⟨e1_i e1_j⟩", 0, m(e1i * e1j))
    add("basis", "⟨e2_i⟩", 0, m(e2_component(0)))
    add("basis", "⟨e2_i²⟩", 1, m(e2_component(0) ** 2))
    add("basis", "⟨e2_i e2_j⟩", 0, m(e2_component(0) * e2_component(1)))
    add("basis", "⟨e1_i e2⟩", 0, m(e1i * e2))
    add("basis", "⟨e2²⟩ (sum of components)", 1, m(e2 ** 2))
    add("basis", "⟨ê2²⟩ (unit)", 1, m(e2_unit() ** 2))
    add("basis", "c1² = 1/⟨v_i²⟩", LIMIT_C1 * LIMIT_C1, 1 / m(v0 ** 2))
    add("basis", "c2² = 1/(⟨v_i⁴⟩ - ⟨v_i²⟩²)", LIMIT_C2 * LIMIT_C2, 1 / (m(v0 ** 4) - m(v0 ** 2) ** 2))
    add("basis", "c0 = c2 ⟨v_i²⟩", LIMIT_C0, LIMIT_C2 * m(v0 ** 2))

    # a and b
    v4, v2v2, v2 = m(v0 ** 4), m(v0 ** 2 * v1 ** 2), m(v0 ** 2)
    v2_speed = m(v0 ** 2 * speed_sq())
    add("closure-ab", "⟨v_i⁴⟩", _q("1/80"), v4)
    add("closure-ab", "⟨v_i²v_j²⟩", _q("1/144"), v2v2)
    add("closure-ab", "⟨v_i²⟩", _q("1/12"), v2)
    d11, d12 = 3 * v4 + 6 * v2 * v2, 3 * v2
    det_d = d11 - d12 * d12
    a_lim = (v2_speed - d12 * v2) / det_d
    b_lim = v2 - d12 * a_lim
    add("closure-ab", "det D", _q("1/60"), det_d)
    add("closure-ab", "a", _q("1/3"), a_lim)
    add("closure-ab", "b", 0, b_lim)

    # c
    c_lim = v2_speed / v2
    add("closure-c", "⟨v_i²|v|²⟩", _q("19/720"), v2_speed)
    add("closure-c", "c", _q("19/60"), c_lim)

    # viscous term
    c1_sq = LIMIT_C1 * LIMIT_C1
    a11_a11 = m(tensor_a(0, 0) ** 2)
    a11_a22 = m(tensor_a(0, 0) * tensor_a(1, 1))
    a12_a12 = m(tensor_a(0, 1) ** 2)
    second = a11_a11 - a11_a22 - 2 * a12_a12
    add("diffusion", "⟨A_ij A_ij⟩ (Δ bracket)", _q("1/144"), a12_a12)
    add("diffusion", "⟨A_ii A_ii⟩", _q("1/270"), a11_a11)
    add("diffusion", "⟨A_ii A_ss⟩", _q("-1/540"), a11_a22)
    add("diffusion", "∂²ᵢ bracket", _q("-1/120"), second)
    add("diffusion", "Δu coefficient", _q("1/72", 3), LIMIT_C1 * a12_a12)
    add("diffusion", "∂²ᵢuᵢ coefficient", _q("-1/60", 3), LIMIT_C1 * second)
    add("diffusion", "viscosity ν*/12", _q("1/12"), c1_sq * a12_a12)
    add("diffusion", "J coefficient", _q("-1/10"), c1_sq * second)
    add("diffusion", "𝒥 = (ν*/ν) J", _q("-6/5"), 12 * c1_sq * second)

    # nonlinear transport
    quarter_speed = m(speed_sq() ** 2) / 9
    transport_z = 2 * v2v2
    transport_x = v4 - 3 * v2v2
    transport_y = v2v2 - 2 * (v2_speed / 3) + quarter_speed
    add("nonlinear-transport", "∇·(u⊗u) coefficient", _q("1/6"), c1_sq * transport_z)
    add("nonlinear-transport", "∂(uᵢ²) coefficient", _q("-1/10"), c1_sq * transport_x)
    add("nonlinear-transport", "∇|u|² coefficient", _q("2/5"), c1_sq * transport_y)
    add("nonlinear-transport", "θ² coefficient", 0, m(tensor_a(0, 0) * e2 ** 2))
    add("momentum-system", "convection √3κ/3 (κ = 1)", _q("1/3", 3), LIMIT_C1 * transport_z * c1_sq)
    add("momentum-system", "H coefficient √3κ/5 (κ = 1)", _q("1/5", 3), -LIMIT_C1 * transport_x * c1_sq)
    add("momentum-system", "∇|u|² coefficient (κ = 1)", _q("4/5", 3), LIMIT_C1 * transport_y * c1_sq)

    # heat flux
    b_sq = m(tensor_b(0) ** 2)
    add("heat-diffusion", "⟨B_i²⟩", _q("97/75600"), b_sq)
    add("heat-diffusion", "Δθ coefficient", _q("97/12600", 5), LIMIT_C2 * b_sq)
    add("heat-diffusion", "conductivity 97ν*/420", _q("97/420"), LIMIT_C2 * LIMIT_C2 * b_sq)
    advection = 2 * LIMIT_C1 * LIMIT_C2 * b_sq
    add("heat-advection", "div(uθ) coefficient", _q("97/3150", 15), advection)
    add("heat-advection", "advection 97√3κ/105 (κ = 1)", _q("97/105", 3), LIMIT_C2 * advection)

    # cubic forcing tables
    e1i_4 = m(e1i ** 4)
    e1i2_e1j2 = m(e1i ** 2 * e1j ** 2)
    e1i_2 = m(e1i ** 2)
    e1i2_e2_2 = m(e1i ** 2 * e2 ** 2)
    e1i2_e2 = m(e1i ** 2 * e2)
    add("cubic-forcing-F", "⟨e1_i⁴⟩", _q("9/5"), e1i_4)
    add("cubic-forcing-F", "uᵢ³ coefficient", _q("-6/5"), e1i_4 - 3 * e1i2_e1j2)
    add("cubic-forcing-F", "uᵢ|u|² coefficient", 3, 3 * e1i2_e1j2)
    add("cubic-forcing-F", "ρ²uᵢ coefficient", 3, 3 * e1i_2)
    add("cubic-forcing-F", "θ²uᵢ coefficient", _q("75/7"), 3 * e1i2_e2_2)
    add("cubic-forcing-F", "ρθuᵢ coefficient", _q("12/5", 5), 6 * e1i2_e2)

    add("cubic-forcing-G", "⟨e2⁴⟩", _q("171/7"), m(e2 ** 4))
    add("cubic-forcing-G", "ρ³ coefficient", 0, m(e2))
    add("cubic-forcing-G", "ρ|u|² coefficient", _q("6/5", 5), 3 * e1i2_e2)
    add("cubic-forcing-G", "θ|u|² coefficient", _q("15/7"), 3 * e1i2_e2_2)
    add("cubic-forcing-G", "θρ² coefficient", 9, 3 * m(e2 ** 2))
    add("cubic-forcing-G", "ρθ² coefficient", _q("18/7", 5), 3 * m(e2 ** 3))

    add("cubic-forcing-E", "ρ³ coefficient", 1, m(VPolynomial.constant(1)))
    add("cubic-forcing-E", "⟨e2³⟩", _q("6/7", 5), m(e2 ** 3))
    add("cubic-forcing-E", "ρ|u|² coefficient", 3, 3 * e1i_2)
    add("cubic-forcing-E", "θ|u|² coefficient", _q("6/5", 5), 3 * e1i2_e2)
    add("cubic-forcing-E", "ρθ² coefficient", 9, 3 * m(e2 ** 2))

    # mu constants in the limit
    mu1 = a_lim * LIMIT_C1 / LIMIT_C2
    mu2 = LIMIT_C1 * (3 * a_lim * LIMIT_C0 / LIMIT_C2 + b_lim)
    mu5 = LIMIT_C2 * c_lim - 3 * LIMIT_C0
    mu3 = mu5 / LIMIT_C1
    mu4 = mu2 / LIMIT_C1 + mu1 * mu3
    mu6 = (1 + 2 * SQRT5 * mu5 / 15).inverse()
    mu7 = mu2 + mu1 * mu5
    add("mu-limits", "μ1", _q("1/45", 15), mu1)
    add("mu-limits", "μ2", _q("1/6", 3), mu2)
    add("mu-limits", "μ3", _q("1/15", 15), mu3)
    add("mu-limits", "μ4", _q("19/180"), mu4)
    add("mu-limits", "μ5", _q("2/5", 5), mu5)
    add("mu-limits", "μ6", _q("15/19"), mu6)
    add("mu-limits", "μ7", _q("19/90", 3), mu7)

    # Boussinesq relation
    add("boussinesq", "μ2/μ1", _q("3/2", 5), mu2 / mu1)
    add("boussinesq", "2√5 θ̃/ρ on the Boussinesq line", -19, 2 * SQRT5 * (-(mu2 / mu1) - mu5))

    # limit system at nu = nu*/12, kappa = sqrt3
    kappa = SQRT3
    conductivity = LIMIT_C2 * LIMIT_C2 * b_sq
    heat_advection = LIMIT_C2 * advection
    add("limit-system", "κ²/ν* = 1/(4ν)", _q("1/4"), kappa * kappa / 12)
    add("limit-system", "heat diffusion (units of ν*)", _q("97/532"), conductivity * mu6)
    add("limit-system", "heat diffusion (units of ν)", _q("291/133"), 12 * conductivity * mu6)
    add("limit-system", "heat advection", _q("97/35"), kappa * heat_advection)
    add("limit-system", "E forcing ν coefficient", _q("1/10", 5), mu5 * kappa * kappa / 12)
    add("limit-system", "K forcing (κ = 1)", _q("194/525", 15), heat_advection * mu5)
    add("limit-system", "K forcing", _q("194/175", 5), kappa * heat_advection * mu5)
    return rows


def verify_closure_tables(strict=True):
    """
    Recompute every closure and limit-system coefficient exactly

    Args:
        strict: raise on the first unregistered mismatch

    Returns:
        ClosureReport: one row per coefficient

    Raises:
        OracleMismatch: an unregistered row disagrees (strict mode)
    """
    report = ClosureReport(rows=tuple(_table_rows()))
    for row in report.discrepancies:
        logger.warning(f"Documented discrepancy [{row.lemma}] {row.symbol}: "
                       f"quoted {row.expected}, exact {row.computed}")
    for row in report.failures:
        logger.error(f"✗ [{row.lemma}] {row.symbol}: expected {row.expected}, computed {row.computed}")
    if strict and report.failures:
        first = report.failures[0]
        raise OracleMismatch(first.lemma, first.symbol, first.expected, first.computed)
    logger.info(f"✓ Closure table: {len(report.rows)} rows, "
                f"{len(report.discrepancies)} documented discrepancies")
    return report
