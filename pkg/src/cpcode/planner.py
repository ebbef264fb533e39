"""Embedding a matrix-vector product into the cross-parity code.

The matrix A is cut into `num_blocks` equal block-rows grouped into k
message streams of q = num_blocks/k blocks each.  Multiplying the stream
polynomials by the generator yields, for every worker, an ordered list of
tasks; each task is a small signed combination of block indices.  Workers
with systematic generator columns receive their stream's blocks verbatim.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .codes import CodeParams, PolyMatrix, build_generator, column_spans


class InfeasibleBudget(ValueError):
    """Storage fraction gamma <= 1/k leaves no room for parity jobs."""


class BadDelta(ValueError):
    """The requested block count is not a positive multiple of k."""


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class StorageBudget:
    """Fraction of A's rows each worker may store."""

    gamma: Fraction

    def __post_init__(self):
        g = Fraction(self.gamma)
        object.__setattr__(self, "gamma", g)
        if not 0 < g <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {g}")


@dataclass(frozen=True)
class Task:
    """One worker job: a signed sum of block-rows, sum(coeff * A[block])."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blocks = [b for b, _ in self.terms]
        if blocks != sorted(set(blocks)):
            raise ValueError("block indices must be strictly increasing")
        if any(c == 0 for _, c in self.terms):
            raise ValueError("zero coefficients are not stored")

    def __str__(self):
        return " ".join(f"{'+' if c > 0 else '-'}{abs(c) if abs(c) != 1 else ''}A{b}" for b, c in self.terms)


@dataclass(frozen=True)
class JobPlan:
    """Per-worker ordered task lists plus the grid geometry they induce.

    Worker j's tasks occupy grid rows offset[j] .. offset[j]+len-1; the
    task at slot t sits on row offset[j] + t.
    """

    params: CodeParams
    num_blocks: int
    offsets: tuple[int, ...]
    tasks: tuple[tuple[Task, ...], ...]
    spans: tuple[int, ...]
    max_span: int

    @property
    def blocks_per_stream(self) -> int:
        return self.num_blocks // self.params.k

    @property
    def worker_lengths(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.tasks)

    def height(self, worker: int) -> int:
        return self.offsets[worker] + len(self.tasks[worker])


def choose_block_count(params: CodeParams, budget: StorageBudget, max_span: int) -> int:
    """Smallest multiple of k with num_blocks >= max_span / (gamma - 1/k)."""
    k = params.k
    slack = budget.gamma - Fraction(1, k)
    if slack <= 0:
        raise InfeasibleBudget(f"gamma={budget.gamma} <= 1/k={Fraction(1, k)}")
    bound = Fraction(max_span) / slack
    mult = -(-bound.numerator // (bound.denominator * k))  # ceil division
    return max(k, k * int(mult))


def build_plan(params: CodeParams, num_blocks: int, generator: PolyMatrix | None = None) -> JobPlan:
    """Expand the stream polynomials through the generator into task lists."""
    k = params.k
    if num_blocks < k or num_blocks % k != 0:
        raise BadDelta(f"num_blocks={num_blocks} must be a positive multiple of k={k}")
    G = build_generator(params) if generator is None else generator
    q = num_blocks // k
    spans = column_spans(G)

    workers = []
    offsets = []
    for j in range(params.n):
        rows: dict[int, Counter] = {}
        for i in range(k):
            for e, c in G[i, j].terms().items():
                assert c.denominator == 1
                for r in range(q):
                    rows.setdefault(e + r, Counter())[i * q + r] += int(c)
        cleaned = {
            row: {b: c for b, c in terms.items() if c != 0}
            for row, terms in rows.items()
        }
        cleaned = {row: terms for row, terms in cleaned.items() if terms}
        offset = min(cleaned)
        length = max(cleaned) - offset + 1
        assert length == q + spans[j], f"worker {j}: {length} tasks != q + span"
        assert all(row in cleaned for row in range(offset, offset + length))
        tasks = tuple(
            Task(tuple(sorted(cleaned[row].items())))
            for row in range(offset, offset + length)
        )
        workers.append(tasks)
        offsets.append(offset)

    return JobPlan(params, num_blocks, tuple(offsets), tuple(workers), spans, max(spans))


def verify_plan(plan: JobPlan) -> bool:
    """Check every slope-m constraint line cancels symbolically.

    For each slope m and line index i the signed block multiset collected
    from grid cells (i - m*j, j) must vanish.
    """
    n, s = plan.params.n, plan.params.s
    top = max(plan.height(j) for j in range(n))
    for m in range(s):
        for i in range(top + m * (n - 1)):
            acc: Counter = Counter()
            for j in range(n):
                row = i - m * j
                t = row - plan.offsets[j]
                if 0 <= t < len(plan.tasks[j]):
                    for b, c in plan.tasks[j][t].terms:
                        acc[b] += c
            if any(c != 0 for c in acc.values()):
                return False
    return True


def validate_storage(plan: JobPlan, budget: StorageBudget) -> bool:
    """True iff the longest task list fits in gamma * num_blocks block-rows."""
    return max(plan.worker_lengths) <= budget.gamma * plan.num_blocks


def split_blocks(A, num_blocks: int) -> list:
    """Partition A into num_blocks equal block-rows, zero-padding the tail."""
    rows = A.shape[0]
    size = -(-rows // num_blocks)
    out = []
    for b in range(num_blocks):
        lo = b * size
        hi = min(lo + size, rows)
        if lo >= rows:
            block = _zeros_like(A, size)
        else:
            block = A[lo:hi]
            if hi - lo < size:
                block = _vstack(A, [block, _zeros_like(A, size - (hi - lo))])
        out.append(block)
    return out


def _zeros_like(A, nrows):
    if sparse.issparse(A):
        return sparse.csr_matrix((nrows, A.shape[1]), dtype=A.dtype)
    return np.zeros((nrows, A.shape[1]), dtype=A.dtype)


def _vstack(A, parts):
    if sparse.issparse(A):
        return sparse.vstack(parts, format="csr")
    return np.vstack(parts)


def materialize(plan: JobPlan, A) -> list[list]:
    """Precombine block-rows so worker j stores exactly its coded submatrices.

    Systematic workers' submatrices are the raw A blocks; parity workers
    store signed sums.  Sparse input stays sparse.
    """
    if A.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {A.shape}")
    blocks = split_blocks(A, plan.num_blocks)
    coded = []
    for worker_tasks in plan.tasks:
        mats = []
        for task in worker_tasks:
            acc = None
            for b, c in task.terms:
                piece = blocks[b] if c == 1 else c * blocks[b]
                acc = piece if acc is None else acc + piece
            if sparse.issparse(acc):
                acc = sparse.csr_matrix(acc)
                acc.eliminate_zeros()
            mats.append(acc)
        coded.append(mats)
    return coded


def apply_tasks(plan: JobPlan, worker: int, u_blocks: list) -> list:
    """Worker outputs expressed over precomputed block products u_b = A_b x."""
    out = []
    for task in plan.tasks[worker]:
        acc = None
        for b, c in task.terms:
            piece = u_blocks[b] if c == 1 else c * u_blocks[b]
            acc = piece if acc is None else acc + piece
        out.append(acc)
    return out


def _zero_fraction(mats) -> float:
    nz = 0
    total = 0
    for m in mats:
        total += m.shape[0] * m.shape[1]
        if sparse.issparse(m):
            nz += m.count_nonzero()
        else:
            nz += int(np.count_nonzero(m))
    return 1.0 - nz / total if total else 1.0


@dataclass(frozen=True)
class SparsityReport:
    """Fraction of zero entries in each worker's stored submatrices."""

    per_worker: tuple[float, ...]
    worst_parity: float
    mean: float


def sparsity_report(plan: JobPlan, A, coded: list[list] | None = None) -> SparsityReport:
    if coded is None:
        coded = materialize(plan, A)
    per_worker = tuple(_zero_fraction(mats) for mats in coded)
    parity = per_worker[: plan.params.s]
    total_cells = [sum(m.shape[0] * m.shape[1] for m in mats) for mats in coded]
    mean = 1.0 - sum((1.0 - f) * c for f, c in zip(per_worker, total_cells)) / sum(total_cells)
    return SparsityReport(per_worker, min(parity), mean)
