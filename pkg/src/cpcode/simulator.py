"""In-process worker-pool simulation with straggler and noise injection.

Workers compute their coded submatrix-vector products concurrently (one
thread each, immutable inputs); completion order is decided by a virtual
clock in which a task costs its nonzero count plus its output length, so
runs are reproducible bit-for-bit from the seed.  Wall-clock measurement
of the kernels is available separately for cost-model checks.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .planner import JobPlan, materialize
from .rs import RSConfig, rs_encode


class UnrecoverablePattern(RuntimeError):
    """More workers failed than the scheme can tolerate."""


def sparse_matvec(M, x) -> np.ndarray:
    """Matrix-vector product; cost proportional to stored nonzeros."""
    out = M @ x
    return np.asarray(out).reshape(-1)


def matrix_nnz(M) -> int:
    if sparse.issparse(M):
        return int(M.nnz)
    return int(np.count_nonzero(M))


def zero_fraction(mats) -> float:
    total = sum(m.shape[0] * m.shape[1] for m in mats)
    nz = sum(matrix_nnz(m) for m in mats)
    return 1.0 - nz / total if total else 1.0


def measure_matvec_seconds(M, x, repeats: int = 5) -> float:
    """Best-of-N wall time of one product, for the nnz/time correlation check."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        sparse_matvec(M, x)
        best = min(best, time.perf_counter() - t0)
    return best


# -- banded test matrices ----------------------------------------------------


def banded_nnz(size: int, half_bandwidth: int) -> int:
    """Nonzeros of a size x size matrix filled on diagonals -b..b."""
    b = half_bandwidth
    return size * (2 * b + 1) - b * (b + 1)


def bandwidth_for_sparsity(size: int, sparsity: float) -> int:
    """Half-bandwidth whose nonzero count best matches the target sparsity."""
    target = (1.0 - sparsity) * size * size
    disc = (2 * size - 1) ** 2 - 4 * (target - size)
    root = ((2 * size - 1) - disc**0.5) / 2 if disc >= 0 else size - 1
    best = None
    for b in {int(np.floor(root)), int(np.ceil(root))}:
        b = min(max(b, 0), size - 1)
        err = abs(banded_nnz(size, b) - target)
        if best is None or err < best[0]:
            best = (err, b)
    return best[1]


def random_banded(size: int, half_bandwidth: int, seed=0) -> sparse.csr_matrix:
    """Standard-normal values on diagonals -b..b, CSR storage."""
    if not 0 <= half_bandwidth < size:
        raise ValueError(f"need 0 <= b < {size}, got {half_bandwidth}")
    rng = np.random.default_rng(seed)
    offsets = list(range(-half_bandwidth, half_bandwidth + 1))
    diags = [rng.standard_normal(size - abs(o)) for o in offsets]
    return sparse.diags(diags, offsets, shape=(size, size), format="csr")


def error_percentage(y, y_hat) -> float:
    """100 * ||y - y_hat|| / ||y|| with the Euclidean norm."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    ref = np.linalg.norm(y)
    if ref == 0:
        raise ValueError("reference vector is zero")
    return float(np.linalg.norm(y - y_hat) / ref * 100.0)


# -- injection models --------------------------------------------------------


@dataclass(frozen=True)
class StragglerPolicy:
    """How workers slow down or fail.

    explicit: the listed workers never respond.
    random-delay: per-worker slowdown factor 1 + Exp(delay_scale).
    fail-stop: each worker independently fails with fail_prob.
    """

    mode: str = "random-delay"
    stragglers: tuple[int, ...] = ()
    delay_scale: float = 0.5
    fail_prob: float = 0.0

    @classmethod
    def none(cls) -> "StragglerPolicy":
        """No failures, no jitter; completion order is set by load alone."""
        return cls(mode="explicit", stragglers=())

    @classmethod
    def explicit(cls, stragglers) -> "StragglerPolicy":
        return cls(mode="explicit", stragglers=tuple(sorted(stragglers)))

    @classmethod
    def random_delay(cls, scale: float = 0.5) -> "StragglerPolicy":
        return cls(mode="random-delay", delay_scale=scale)

    @classmethod
    def fail_stop(cls, prob: float) -> "StragglerPolicy":
        return cls(mode="fail-stop", fail_prob=prob)

    def draw(self, n: int, rng: np.random.Generator) -> tuple[list[bool], list[float]]:
        """Per-worker (failed, slowdown factor)."""
        if self.mode == "explicit":
            failed = [j in self.stragglers for j in range(n)]
            return failed, [1.0] * n
        if self.mode == "random-delay":
            factors = [1.0 + rng.exponential(self.delay_scale) for _ in range(n)]
            return [False] * n, factors
        if self.mode == "fail-stop":
            failed = [bool(rng.random() < self.fail_prob) for _ in range(n)]
            return failed, [1.0] * n
        raise ValueError(f"unknown straggler mode {self.mode!r}")


@dataclass(frozen=True)
class NoiseModel:
    """White Gaussian noise on every task output at a fixed SNR.

    reference="task" scales the noise to each task output's own mean-square
    power; reference="global" uses the mean-square of the exact full
    product instead.
    """

    snr_db: float | None = None
    reference: str = "task"

    def sigma(self, power: float) -> float:
        if self.snr_db is None or power == 0.0:
            return 0.0
        return float(np.sqrt(power * 10.0 ** (-self.snr_db / 10.0)))


@dataclass(frozen=True)
class TaskRecord:
    worker: int
    task_index: int
    start: float
    end: float
    nnz: int


@dataclass
class RunResult:
    scheme: str
    responses: object
    stragglers: tuple[int, ...]
    trace: list[TaskRecord] = field(default_factory=list)
    finish_times: dict[int, float] = field(default_factory=dict)


def _worker_rngs(seed, n: int) -> list[np.random.Generator]:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(c) for c in seed.spawn(n + 1)]


def _compute_outputs(coded, x, noise: NoiseModel, rngs, global_power: float):
    """Run every worker's task list in its own thread."""

    def one(args):
        mats, rng = args
        outs = []
        for M in mats:
            out = sparse_matvec(M, x)
            if noise.snr_db is not None:
                power = global_power if noise.reference == "global" else float(np.mean(out * out))
                sigma = noise.sigma(power)
                if sigma > 0.0:
                    out = out + rng.normal(0.0, sigma, size=out.shape)
            outs.append(out)
        return outs

    with ThreadPoolExecutor(max_workers=max(1, len(coded))) as pool:
        return list(pool.map(one, zip(coded, rngs)))


def _global_power(noise: NoiseModel, A, x) -> float:
    if noise.snr_db is None or noise.reference != "global":
        return 0.0
    y = sparse_matvec(A, x)
    return float(np.mean(y * y))


def run_cp(
    plan: JobPlan,
    A,
    x,
    policy: StragglerPolicy,
    noise: NoiseModel | None = None,
    seed=0,
    coded: list[list] | None = None,
    accept_all: bool = False,
) -> RunResult:
    """Simulate the coded run; the master keeps the fastest k whole columns.

    responses maps accepted worker -> ordered task outputs; the remaining
    workers form the effective straggler set handed to the decoder.
    """
    noise = noise or NoiseModel()
    n, k = plan.params.n, plan.params.k
    if A.shape[1] != len(x):
        raise ValueError(f"A has {A.shape[1]} columns but x has length {len(x)}")
    if coded is None:
        coded = materialize(plan, A)
    rngs = _worker_rngs(seed, n)
    failed, factors = policy.draw(n, rngs[0])
    alive = [j for j in range(n) if not failed[j]]
    if len(alive) < k:
        raise UnrecoverablePattern(f"{n - len(alive)} failures exceed s={plan.params.s}")

    outputs = _compute_outputs(coded, x, noise, rngs[1:], _global_power(noise, A, x))

    trace = []
    finish = {}
    for j in alive:
        t = 0.0
        for idx, M in enumerate(coded[j]):
            cost = (matrix_nnz(M) + M.shape[0]) * factors[j]
            trace.append(TaskRecord(j, idx, t, t + cost, matrix_nnz(M)))
            t += cost
        finish[j] = t

    ranked = sorted(alive, key=lambda j: (finish[j], j))
    accepted = ranked if accept_all else ranked[:k]
    stragglers = tuple(sorted(set(range(n)) - set(accepted)))
    responses = {j: outputs[j] for j in accepted}
    return RunResult("cp", responses, stragglers, trace, finish)


def run_rs(
    cfg: RSConfig,
    A,
    x,
    policy: StragglerPolicy,
    noise: NoiseModel | None = None,
    seed=0,
    coded: list[list] | None = None,
) -> RunResult:
    """Simulate the baseline; collection is at worker granularity.

    Workers ship their jobs_per_worker results when they finish, so the
    master's response stream is ordered by worker completion time and it
    stops once num_blocks responses are in hand (the first
    ceil(num_blocks / jobs_per_worker) complete workers).
    """
    noise = noise or NoiseModel()
    if coded is None:
        coded = rs_encode(A, cfg)
    rngs = _worker_rngs(seed, cfg.n)
    failed, factors = policy.draw(cfg.n, rngs[0])
    alive = [w for w in range(cfg.n) if not failed[w]]
    if len(alive) * cfg.jobs_per_worker < cfg.num_blocks:
        raise UnrecoverablePattern(f"only {len(alive)} workers alive; cannot gather {cfg.num_blocks} responses")

    outputs = _compute_outputs(coded, x, noise, rngs[1:], _global_power(noise, A, x))

    trace = []
    finish = {}
    for w in alive:
        t = 0.0
        for idx, M in enumerate(coded[w]):
            cost = (matrix_nnz(M) + M.shape[0]) * factors[w]
            trace.append(TaskRecord(w, idx, t, t + cost, matrix_nnz(M)))
            t += cost
        finish[w] = t

    responses = []
    used = []
    for w in sorted(alive, key=lambda w: (finish[w], w)):
        if len(responses) >= cfg.num_blocks:
            break
        used.append(w)
        responses.extend(zip(cfg.worker_points(w), outputs[w]))
    responses = responses[: cfg.num_blocks]
    unused = tuple(sorted(set(range(cfg.n)) - set(used)))
    return RunResult("rs", responses, unused, trace, finish)


def run(job, A, x, policy, noise=None, seed=0, **kwargs) -> RunResult:
    if isinstance(job, JobPlan):
        return run_cp(job, A, x, policy, noise, seed, **kwargs)
    if isinstance(job, RSConfig):
        return run_rs(job, A, x, policy, noise, seed, **kwargs)
    raise TypeError(f"expected JobPlan or RSConfig, got {type(job).__name__}")
