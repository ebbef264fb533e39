"""Construction of the cross-parity convolutional code matrices.

The code on n worker columns with straggler resilience s = n - k is fixed
by an s x n parity-check matrix H with entries D^(m*j).  The systematic
generator G = [Z | I_k] is obtained by Lagrange-style interpolation at the
points D^(s+i): each parity entry is

    Z[i][j] = - prod_{l != j, 0 <= l < s} (D^(s+i) - D^l) / (D^j - D^l)

and the quotient is always an exact finite polynomial with integer
coefficients (the feed-forward property), which this module asserts rather
than assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .laurent import D, ONE, ZERO, LaurentPoly


class ZeroColumnError(ValueError):
    """A generator column is identically zero; spans are undefined."""


class UnsupportedParams(ValueError):
    """Closed forms only exist for s = 2 and s = 3."""


@dataclass(frozen=True)
class CodeParams:
    """Worker count n and message-stream count k; s = n - k stragglers survivable."""

    n: int
    k: int

    def __post_init__(self):
        if not (1 <= self.k < self.n):
            raise ValueError(f"need 1 <= k < n, got n={self.n} k={self.k}")

    @property
    def s(self) -> int:
        return self.n - self.k


@dataclass(frozen=True)
class PolyMatrix:
    """Dense matrix of Laurent polynomials."""

    entries: tuple[tuple[LaurentPoly, ...], ...]

    @classmethod
    def build(cls, rows: int, cols: int, fn) -> "PolyMatrix":
        return cls(tuple(tuple(fn(i, j) for j in range(cols)) for i in range(rows)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def __getitem__(self, idx) -> LaurentPoly:
        i, j = idx
        return self.entries[i][j]

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix.build(self.cols, self.rows, lambda i, j: self.entries[j][i])

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError(f"dimension mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        def dot(i, j):
            acc = ZERO
            for t in range(self.cols):
                acc = acc + self.entries[i][t] * other.entries[t][j]
            return acc
        return PolyMatrix.build(self.rows, other.cols, dot)

    def is_zero(self) -> bool:
        return all(p.is_zero for row in self.entries for p in row)

    def column(self, j: int) -> tuple[LaurentPoly, ...]:
        return tuple(self.entries[i][j] for i in range(self.rows))

    def __str__(self):
        cells = [[str(p) for p in row] for row in self.entries]
        widths = [max(len(cells[i][j]) for i in range(self.rows)) for j in range(self.cols)]
        lines = []
        for row in cells:
            lines.append("[ " + "   ".join(c.rjust(w) for c, w in zip(row, widths)) + " ]")
        return "\n".join(lines)


def build_parity_check(params: CodeParams) -> PolyMatrix:
    """The s x n matrix with entry (m, j) = D^(m*j); row 0 is all ones."""
    return PolyMatrix.build(params.s, params.n, lambda m, j: LaurentPoly.monomial(m * j))


def parity_block(params: CodeParams) -> PolyMatrix:
    """The k x s block Z of the systematic generator, by exact division.

    Raises NotDivisible if any quotient fails to be a polynomial, which
    would contradict the feed-forward property; integrality of the result
    is asserted for the same reason.
    """
    s, k = params.s, params.k

    def entry(i, j):
        num = ONE
        den = ONE
        for l in range(s):
            if l == j:
                continue
            num = num * (LaurentPoly.monomial(s + i) - LaurentPoly.monomial(l))
            den = den * (LaurentPoly.monomial(j) - LaurentPoly.monomial(l))
        q = num.exact_div(den)
        assert q.is_integral(), f"non-integer coefficients in parity entry ({i},{j}): {q}"
        return -q

    return PolyMatrix.build(k, s, entry)


def parity_entry_closed_form(params: CodeParams, i: int, j: int) -> LaurentPoly:
    """Geometric-series closed form of Z[i][j], defined for s in {2, 3}.

    Serves as an independent cross-check of parity_block and as a fast path
    for large k.
    """
    s = params.s
    if not (0 <= i < params.k and 0 <= j < s):
        raise IndexError(f"entry ({i},{j}) out of range for k={params.k}, s={s}")
    g = LaurentPoly.geometric
    if s == 2:
        if j == 0:
            return g(1, i + 1)
        return -g(0, i + 1)
    if s == 3:
        if j == 0:
            if i % 2 == 0:
                return -(LaurentPoly.monomial(3) * g(0, i, 2) * g(0, i))
            return -(LaurentPoly.monomial(3) * g(0, i + 1) * g(0, i - 1, 2))
        if j == 1:
            return g(0, i + 2) * g(1, i + 1)
        if i % 2 == 0:
            return -(g(0, i + 2) * g(0, i, 2))
        return -(g(0, i + 1, 2) * g(0, i + 1))
    raise UnsupportedParams(f"no closed form for s={s}")


def build_generator(params: CodeParams) -> PolyMatrix:
    """Systematic k x n generator [Z | I_k]."""
    Z = parity_block(params)

    def entry(i, j):
        if j < params.s:
            return Z[i, j]
        return ONE if j - params.s == i else ZERO

    return PolyMatrix.build(params.k, params.n, entry)


def verify_orthogonality(G: PolyMatrix, H: PolyMatrix) -> bool:
    """True iff G @ H^T is exactly the zero matrix."""
    if G.cols != H.cols:
        raise ValueError(f"G has {G.cols} columns but H has {H.cols}")
    return (G @ H.transpose()).is_zero()


def column_spans(M: PolyMatrix) -> tuple[int, ...]:
    """Per column: max exponent minus min exponent over the nonzero entries."""
    spans = []
    for j in range(M.cols):
        col = [p for p in M.column(j) if not p.is_zero]
        if not col:
            raise ZeroColumnError(f"column {j} is identically zero")
        spans.append(max(p.max_exp for p in col) - min(p.min_exp for p in col))
    return tuple(spans)


def max_column_span(M: PolyMatrix) -> int:
    """The memory parameter (called lambda in the glossary): max column span."""
    return max(column_spans(M))


@dataclass(frozen=True)
class CoefficientReport:
    """Coefficient magnitudes of the parity block against the known bounds.

    For s = 2 every coefficient lies in {-1, 0, 1}; for s = 3 the absolute
    values are at most k, with per-column maxima (k-1)//2 + 1, k, k//2 + 1.
    For s >= 4 no bound is claimed, so only the observed maxima are
    recorded and `ok` reflects integrality alone.
    """

    params: CodeParams
    entry_max: tuple[tuple[Fraction, ...], ...]
    integral: bool
    bound: int | None
    column_max: tuple[Fraction, ...]
    expected_column_max: tuple[int, ...] | None
    ok: bool = field(default=False)

    def lines(self) -> list[str]:
        out = [f"integer coefficients: {self.integral}"]
        out.append("observed column maxima: " + " ".join(str(m) for m in self.column_max))
        if self.bound is not None:
            out.append(f"theorem bound |coeff| <= {self.bound}: {'pass' if self.ok else 'FAIL'}")
        if self.expected_column_max is not None:
            out.append("expected column maxima: " + " ".join(str(m) for m in self.expected_column_max))
        return out


def coefficient_report(Z: PolyMatrix, params: CodeParams) -> CoefficientReport:
    entry_max = tuple(tuple(p.max_abs_coeff() for p in row) for row in Z.entries)
    integral = all(p.is_integral() for row in Z.entries for p in row)
    column_max = tuple(max(entry_max[i][j] for i in range(Z.rows)) for j in range(Z.cols))
    s, k = params.s, params.k
    bound = {2: 1, 3: k}.get(s)
    expected = ((k - 1) // 2 + 1, k, k // 2 + 1) if s == 3 else None
    ok = integral and (bound is None or all(m <= bound for m in column_max))
    return CoefficientReport(params, entry_max, integral, bound, column_max, expected, ok)
