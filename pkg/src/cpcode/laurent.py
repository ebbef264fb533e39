"""Exact arithmetic on finite Laurent polynomials in one indeterminate D.

Coefficients are exact rationals (fractions.Fraction), so products and
quotients of code-matrix entries never lose precision.  Every value is
immutable and kept in a canonical form: the zero polynomial is the empty
coefficient tuple with min_exp 0, and any other polynomial has nonzero
first and last coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping


class NotDivisible(ArithmeticError):
    """Polynomial long division left a nonzero remainder."""


def _coerce(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"coefficient must be exact (int/Fraction/str), got {type(value).__name__}")


class LaurentPoly:
    """A finite Laurent polynomial sum_t coeffs[t] * D^(min_exp + t)."""

    __slots__ = ("min_exp", "coeffs")

    def __init__(self, coeffs: Iterable = (), min_exp: int = 0):
        cs = [_coerce(c) for c in coeffs]
        lo = 0
        hi = len(cs)
        while lo < hi and cs[lo] == 0:
            lo += 1
        while hi > lo and cs[hi - 1] == 0:
            hi -= 1
        if lo == hi:
            object.__setattr__(self, "coeffs", ())
            object.__setattr__(self, "min_exp", 0)
        else:
            object.__setattr__(self, "coeffs", tuple(cs[lo:hi]))
            object.__setattr__(self, "min_exp", min_exp + lo)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentPoly is immutable")

    @classmethod
    def from_terms(cls, terms: Mapping[int, object]) -> "LaurentPoly":
        """Build from an {exponent: coefficient} mapping."""
        nz = {e: _coerce(c) for e, c in terms.items() if _coerce(c) != 0}
        if not nz:
            return cls()
        lo = min(nz)
        hi = max(nz)
        return cls([nz.get(e, 0) for e in range(lo, hi + 1)], lo)

    @classmethod
    def monomial(cls, exp: int, coeff=1) -> "LaurentPoly":
        return cls([coeff], exp)

    @classmethod
    def geometric(cls, lo: int, hi: int, step: int = 1) -> "LaurentPoly":
        """D^lo + D^(lo+step) + ... + D^hi."""
        return cls.from_terms({e: 1 for e in range(lo, hi + 1, step)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def max_exp(self) -> int:
        if self.is_zero:
            raise ValueError("zero polynomial has no exponents")
        return self.min_exp + len(self.coeffs) - 1

    def span(self) -> int:
        """Difference between the maximum and the minimum exponent."""
        if self.is_zero:
            raise ValueError("span undefined for the zero polynomial")
        return len(self.coeffs) - 1

    def coefficient(self, exp: int) -> Fraction:
        t = exp - self.min_exp
        if 0 <= t < len(self.coeffs):
            return self.coeffs[t]
        return Fraction(0)

    def terms(self) -> dict[int, Fraction]:
        return {self.min_exp + t: c for t, c in enumerate(self.coeffs) if c != 0}

    def max_abs_coeff(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return max(abs(c) for c in self.coeffs)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "LaurentPoly":
        other = _as_poly(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        lo = min(self.min_exp, other.min_exp)
        hi = max(self.max_exp, other.max_exp)
        out = [Fraction(0)] * (hi - lo + 1)
        for t, c in enumerate(self.coeffs):
            out[self.min_exp + t - lo] += c
        for t, c in enumerate(other.coeffs):
            out[other.min_exp + t - lo] += c
        return LaurentPoly(out, lo)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly([-c for c in self.coeffs], self.min_exp)

    def __sub__(self, other) -> "LaurentPoly":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "LaurentPoly":
        return _as_poly(other) + (-self)

    def __mul__(self, other) -> "LaurentPoly":
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return ZERO
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return LaurentPoly(out, self.min_exp + other.min_exp)

    __rmul__ = __mul__

    def exact_div(self, den: "LaurentPoly") -> "LaurentPoly":
        """Exact quotient; raises NotDivisible when the remainder is nonzero."""
        den = _as_poly(den)
        if den.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero:
            return ZERO
        num = list(self.coeffs)
        div = den.coeffs
        if len(num) < len(div):
            raise NotDivisible(f"({self}) is not divisible by ({den})")
        q = [Fraction(0)] * (len(num) - len(div) + 1)
        lead = div[-1]
        for pos in range(len(q) - 1, -1, -1):
            c = num[pos + len(div) - 1] / lead
            q[pos] = c
            if c != 0:
                for j, d in enumerate(div):
                    num[pos + j] -= c * d
        if any(c != 0 for c in num[: len(div) - 1]):
            raise NotDivisible(f"({self}) is not divisible by ({den})")
        return LaurentPoly(q, self.min_exp - den.min_exp)

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            raise ValueError("negative powers are not representable")
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, x):
        """Evaluate at a numeric point (float, Fraction or complex)."""
        if not self.coeffs:
            return 0 * x
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + (float(c) if isinstance(x, (float, complex)) else c)
        if self.min_exp == 0:
            return acc
        if self.min_exp > 0:
            return acc * x**self.min_exp
        if x == 0:
            raise ZeroDivisionError("evaluation at 0 with negative exponents")
        return acc * x ** self.min_exp

    # -- comparisons / rendering -------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = _as_poly(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.min_exp == other.min_exp and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.min_exp, self.coeffs))

    def __bool__(self):
        return not self.is_zero

    def __repr__(self):
        return f"LaurentPoly({list(self.coeffs)!r}, min_exp={self.min_exp})"

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for t in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[t]
            if c == 0:
                continue
            e = self.min_exp + t
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if e == 0:
                body = str(mag)
            else:
                d = "D" if e == 1 else f"D^{e}"
                body = d if mag == 1 else f"{mag}*{d}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = first_body if first_sign == "+" else f"-{first_body}"
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def _as_poly(value) -> LaurentPoly:
    if isinstance(value, LaurentPoly):
        return value
    return LaurentPoly([_coerce(value)])


ZERO = LaurentPoly()
ONE = LaurentPoly([1])
D = LaurentPoly.monomial(1)
