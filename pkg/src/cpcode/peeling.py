"""Peeling decoder for the cross-parity code.

Grid rows are global exponents of D, columns are workers.  A constraint
line of slope m and index i joins the cells (i - m*j, j) for all j and
their symbols sum to zero; cells outside a column's occupied range are
structural zeros.  Erased columns are recovered bottom-up by repeatedly
finding a line with exactly one unknown.

The schedule runs in phases: phase p peels (s-1-p)*(t[p+1]-t[p]) rounds,
each round taking one symbol from stragglers t[p], t[p-1], ..., t[0] with
slopes s-1-p, ..., s-1 respectively; a final sweep then cycles through all
stragglers (slope s-1-rank each) until their columns are exhausted.  Rows
below a straggler column's first task are recovered like any other symbol
(they come out as zero), which keeps the per-phase counts aligned with the
closed-form recovery counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .planner import JobPlan, apply_tasks


class NotPeelable(RuntimeError):
    """A constraint line did not contain exactly one unknown symbol."""


class IncompleteDecode(RuntimeError):
    """A required symbol was still unknown when the result was assembled."""


def normalize_stragglers(indices, n: int) -> tuple[int, ...]:
    t = tuple(sorted(indices))
    if len(set(t)) != len(t):
        raise ValueError(f"duplicate straggler indices: {indices}")
    if t and not (0 <= t[0] and t[-1] < n):
        raise ValueError(f"straggler index out of range 0..{n - 1}: {indices}")
    return t


def line_points(n: int, slope: int, line_index: int) -> list[tuple[int, int]]:
    """The n grid coordinates (line_index - slope*j, j) of one constraint line."""
    return [(line_index - slope * j, j) for j in range(n)]


class SymbolGrid:
    """Symbol storage for one decode: vector-valued cells with known flags.

    Column j occupies rows [0, height[j]); rows below a known column's
    offset hold zero vectors, rows at offset+t hold the worker's task-t
    output.  Straggler columns start fully unknown.
    """

    def __init__(self, plan: JobPlan, block_shape, dtype=np.float64):
        self.params = plan.params
        self.offsets = plan.offsets
        self.heights = tuple(plan.height(j) for j in range(plan.params.n))
        self.block_shape = tuple(np.atleast_1d(block_shape))
        self.dtype = dtype
        self.values: list[list] = [[None] * h for h in self.heights]
        self.stragglers: tuple[int, ...] = ()
        self._zero = np.zeros(self.block_shape, dtype=dtype)

    @classmethod
    def from_responses(cls, plan: JobPlan, responses: dict[int, list], stragglers) -> "SymbolGrid":
        """Fill known columns from worker outputs, leaving stragglers unknown."""
        t = normalize_stragglers(stragglers, plan.params.n)
        some = next(iter(responses.values()))
        first = np.asarray(some[0])
        grid = cls(plan, first.shape, dtype=first.dtype)
        grid.stragglers = t
        for j in range(plan.params.n):
            if j in t:
                continue
            if j not in responses:
                raise ValueError(f"worker {j} is not a straggler but sent no response")
            outs = responses[j]
            if len(outs) != len(plan.tasks[j]):
                raise ValueError(f"worker {j} sent {len(outs)} outputs, expected {len(plan.tasks[j])}")
            col = grid.values[j]
            for row in range(plan.offsets[j]):
                col[row] = grid._zero
            for slot, out in enumerate(outs):
                col[plan.offsets[j] + slot] = np.asarray(out)
        return grid

    @classmethod
    def encode(cls, plan: JobPlan, u_blocks: list) -> "SymbolGrid":
        """Fully known grid holding the true symbols for given block products."""
        responses = {j: apply_tasks(plan, j, u_blocks) for j in range(plan.params.n)}
        return cls.from_responses(plan, responses, stragglers=())

    @classmethod
    def from_known(cls, plan: JobPlan, known: dict, stragglers) -> "SymbolGrid":
        """Rebuild a grid from {(row, col): vector}; straggler cells are dropped.

        Every cell of a non-straggler column must be present.
        """
        t = normalize_stragglers(stragglers, plan.params.n)
        first = np.asarray(next(iter(known.values())))
        grid = cls(plan, first.shape, dtype=first.dtype)
        grid.stragglers = t
        for (row, col), value in known.items():
            if col in t:
                continue
            grid.values[col][row] = np.asarray(value)
        for col in range(plan.params.n):
            if col not in t and not grid.column_known(col):
                raise ValueError(f"non-straggler column {col} has missing symbols")
        return grid

    # -- cell access ---------------------------------------------------------

    def in_range(self, row: int, col: int) -> bool:
        return 0 <= row < self.heights[col]

    def is_known(self, row: int, col: int) -> bool:
        return not self.in_range(row, col) or self.values[col][row] is not None

    def symbol(self, row: int, col: int):
        if not self.in_range(row, col):
            return self._zero
        v = self.values[col][row]
        if v is None:
            raise KeyError(f"symbol ({row}, {col}) is unknown")
        return v

    def set_symbol(self, row: int, col: int, value) -> None:
        if self.values[col][row] is not None:
            raise ValueError(f"symbol ({row}, {col}) is already known")
        self.values[col][row] = value

    def next_unknown(self, col: int) -> int | None:
        for row in range(self.heights[col]):
            if self.values[col][row] is None:
                return row
        return None

    def column_known(self, col: int) -> bool:
        return all(v is not None for v in self.values[col])

    def line_residual(self, slope: int, line_index: int):
        """Sum of the known symbols on a line; zero on a valid full grid."""
        acc = self._zero.copy()
        for row, col in line_points(self.params.n, slope, line_index):
            if self.in_range(row, col):
                acc = acc + self.symbol(row, col)
        return acc


def peel_step(grid: SymbolGrid, slope: int, line_index: int) -> tuple[int, int]:
    """Solve the line's single unknown; raises NotPeelable on 0 or >= 2."""
    unknown = None
    acc = None
    for row, col in line_points(grid.params.n, slope, line_index):
        if not grid.in_range(row, col):
            continue
        v = grid.values[col][row]
        if v is None:
            if unknown is not None:
                raise NotPeelable(
                    f"slope {slope} line {line_index} has unknowns at {unknown} and ({row}, {col})"
                )
            unknown = (row, col)
        else:
            acc = v if acc is None else acc + v
    if unknown is None:
        raise NotPeelable(f"slope {slope} line {line_index} has no unknown symbol")
    value = grid._zero if acc is None else -acc
    grid.set_symbol(*unknown, value)
    return unknown


@dataclass
class DecodeTrace:
    """Peeling order plus the per-phase recovery counts."""

    steps: list[tuple[int, int, int, int]] = field(default_factory=list)  # (row, col, slope, line)
    phase_counts: dict[tuple[int, int], int] = field(default_factory=dict)  # (phase, rank) -> count


def phase_recovery_count(phase: int, rank: int, stragglers, s: int) -> int:
    """Closed-form number of symbols recovered from straggler `rank` by the
    end of `phase`, valid for full-size straggler sets and phase < s - 1."""
    t = tuple(stragglers)
    if len(t) != s:
        raise ValueError(f"expected a full straggler set of size {s}")
    if phase >= s - 1:
        raise ValueError(f"phase must be < s - 1, got {phase}")
    if rank > phase:
        return 0
    return sum((s - 1 - i) * (t[i + 1] - t[i]) for i in range(rank, phase + 1))


def intersection_offset(t_u: int, t_v: int, u: int, w: int) -> int:
    """Row shift between where the slope-(s-1-u) and slope-(s-1-w) lines
    through one cell of straggler t_u meet straggler t_v."""
    return -(t_v - t_u) * (u - w)


def decode(grid: SymbolGrid, stragglers, *, full: bool = False) -> DecodeTrace:
    """Recover the erased columns in place and return the peeling trace.

    With full=False the sweep stops once every systematic straggler column
    is known (enough for the matrix-vector product); full=True drains the
    parity columns too, as needed for phase-count instrumentation.
    """
    n, s = grid.params.n, grid.params.s
    t = normalize_stragglers(stragglers, n)
    sp = len(t)
    trace = DecodeTrace()
    if sp == 0:
        return trace
    if sp > s:
        raise NotPeelable(f"{sp} stragglers exceed the resilience s={s}")
    recovered = [0] * sp

    def peel_next(rank: int) -> bool:
        col = t[rank]
        row = grid.next_unknown(col)
        if row is None:
            return False
        slope = sp - 1 - rank
        line = row + slope * col
        peel_step(grid, slope, line)
        trace.steps.append((row, col, slope, line))
        recovered[rank] += 1
        return True

    for phase in range(sp - 1):
        for _ in range((sp - 1 - phase) * (t[phase + 1] - t[phase])):
            for rank in range(phase, -1, -1):
                peel_next(rank)
        for rank in range(sp):
            trace.phase_counts[(phase, rank)] = recovered[rank]

    def done() -> bool:
        if full:
            return all(grid.column_known(c) for c in t)
        return all(grid.column_known(c) for c in t if c >= s)

    while not done():
        progressed = False
        for rank in range(sp - 1, -1, -1):
            progressed |= peel_next(rank)
        if not progressed:
            raise NotPeelable("no straggler column can make progress")
    return trace


def assemble_product(grid: SymbolGrid, plan: JobPlan, rows: int) -> np.ndarray:
    """Concatenate the systematic columns into the length-`rows` product."""
    q = plan.blocks_per_stream
    s = plan.params.s
    pieces = []
    for i in range(plan.params.k):
        col = s + i
        off = plan.offsets[col]
        for r in range(q):
            if not grid.is_known(off + r, col):
                raise IncompleteDecode(f"stream {i} block {r} is still unknown")
            pieces.append(grid.symbol(off + r, col))
    return np.concatenate(pieces)[:rows]
