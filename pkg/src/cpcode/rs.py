"""Polynomial-evaluation (Reed-Solomon style) baseline scheme.

A is cut into num_blocks block-rows and worker jobs are evaluations of
sum_j A_j z^j at real points z.  Any num_blocks responses determine the
block products through a Vandermonde solve; the conditioning of that
solve, not its speed, is what the baseline exists to measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .planner import split_blocks


class DuplicatePoints(ValueError):
    pass


class SingularSystem(RuntimeError):
    """The selected evaluation points do not determine the blocks."""


def equally_spaced_points(count: int) -> tuple[float, ...]:
    """`count` points evenly spread over [-1, 1], computed exactly.

    Odd counts therefore contain 0.0 exactly.
    """
    if count == 1:
        return (0.0,)
    return tuple(float(Fraction(-1) + Fraction(2 * i, count - 1)) for i in range(count))


@dataclass(frozen=True)
class RSConfig:
    """n workers each holding jobs_per_worker evaluation points."""

    n: int
    num_blocks: int
    jobs_per_worker: int
    points: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.points:
            object.__setattr__(self, "points", equally_spaced_points(self.n * self.jobs_per_worker))
        if len(self.points) != self.n * self.jobs_per_worker:
            raise ValueError(f"need {self.n * self.jobs_per_worker} points, got {len(self.points)}")
        if len(set(self.points)) != len(self.points):
            raise DuplicatePoints(f"evaluation points must be distinct: {self.points}")

    def worker_points(self, worker: int) -> tuple[float, ...]:
        """Strided assignment: worker w gets points w, w+n, w+2n, ..."""
        return self.points[worker :: self.n]

    @property
    def straggler_resilience(self) -> int:
        """Largest s with (n - s) * jobs_per_worker >= num_blocks."""
        return self.n - -(-self.num_blocks // self.jobs_per_worker)


def coded_job(blocks: list, z: float):
    """sum_j A_j z^j over the split blocks."""
    acc = None
    w = 1.0
    for b in blocks:
        piece = b if w == 1.0 else w * b
        acc = piece if acc is None else acc + piece
        w *= z
    if sparse.issparse(acc):
        acc = sparse.csr_matrix(acc)
        acc.eliminate_zeros()
    return acc


def rs_encode(A, cfg: RSConfig) -> list[list]:
    """Per worker, the coded submatrices for its assigned points."""
    blocks = split_blocks(A, cfg.num_blocks)
    return [[coded_job(blocks, z) for z in cfg.worker_points(w)] for w in range(cfg.n)]


def vandermonde(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return np.vander(pts, N=len(pts), increasing=True)


def condition_number(points) -> float:
    """Ratio of extreme singular values of the square Vandermonde matrix."""
    if len(set(points)) != len(points):
        raise DuplicatePoints(f"points must be distinct: {points}")
    sv = np.linalg.svd(vandermonde(points), compute_uv=False)
    return float(sv[0] / sv[-1])


def rs_decode(responses, cfg: RSConfig, rows: int) -> np.ndarray:
    """Solve for the block products from the first num_blocks responses.

    `responses` is an ordered sequence of (point, value-vector) pairs; the
    selection rule is simply arrival order.
    """
    if len(responses) < cfg.num_blocks:
        raise ValueError(f"need {cfg.num_blocks} responses, got {len(responses)}")
    used = list(responses)[: cfg.num_blocks]
    pts = [z for z, _ in used]
    if len(set(pts)) != len(pts):
        raise SingularSystem(f"coincident evaluation points: {pts}")
    V = vandermonde(pts)
    Y = np.stack([np.asarray(y) for _, y in used])
    try:
        U = np.linalg.solve(V, Y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return U.reshape(-1)[:rows]
