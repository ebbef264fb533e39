"""Command-line surface: verify / plan / encode / simulate / decode plus the
noise-robustness and sparsity experiments.

Exit codes: 0 success, 1 infeasible configuration, 2 decode failure,
3 I/O error.  Flags override config-file keys which override defaults.
"""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import codes, experiments, matio, peeling, planner, plots, rs, simulator

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_DECODE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are config problems, not decode failures
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INFEASIBLE)


def load_config(path) -> dict[str, str]:
    """Flat `key = value` text file; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


class Settings:
    """Flags > config file > defaults."""

    def __init__(self, args):
        self.args = args
        self.config = load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, key, default=None, cast=str):
        flag = getattr(self.args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        if key in self.config:
            return cast(self.config[key])
        return default


def _parse_stragglers(text) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(p) for p in text.replace(",", " ").split())


def _policy(settings, default: simulator.StragglerPolicy | None = None) -> simulator.StragglerPolicy:
    stragglers = _parse_stragglers(settings.get("stragglers", ""))
    fail_prob = settings.get("fail-prob", None, float)
    delay = settings.get("delay-scale", None, float)
    if stragglers:
        return simulator.StragglerPolicy.explicit(stragglers)
    if fail_prob is not None:
        return simulator.StragglerPolicy.fail_stop(fail_prob)
    if delay is not None:
        return simulator.StragglerPolicy.random_delay(delay)
    return default or simulator.StragglerPolicy.random_delay()


def _noise(settings) -> simulator.NoiseModel:
    snr = settings.get("snr-db", None, float)
    ref = settings.get("noise-reference", "task")
    return simulator.NoiseModel(snr_db=snr, reference=ref)


def _load_or_generate(settings, rng):
    matrix = settings.get("matrix")
    if matrix:
        A = matio.load_matrix(matrix)
    else:
        rows = settings.get("rows", 400, int)
        cols = settings.get("cols", 300, int)
        sparsity = settings.get("sparsity", None, float)
        if sparsity is not None:
            b = simulator.bandwidth_for_sparsity(rows, sparsity)
            A = simulator.random_banded(rows, b, rng)
        else:
            A = rng.standard_normal((rows, cols))
    vector = settings.get("vector")
    if vector:
        x = matio.read_vector_bin(vector)
    else:
        x = rng.standard_normal(A.shape[1])
    if A.shape[1] != len(x):
        raise ValueError(f"matrix has {A.shape[1]} columns but vector has {len(x)}")
    return A, x


def _cp_plan(settings) -> planner.JobPlan:
    params = codes.CodeParams(settings.get("n", 4, int), settings.get("k", 2, int))
    delta = settings.get("delta", None, int)
    if delta is None:
        gamma = Fraction(settings.get("gamma", "3/4"))
        lam = codes.max_column_span(codes.build_generator(params))
        delta = planner.choose_block_count(params, planner.StorageBudget(gamma), lam)
    return planner.build_plan(params, delta)


# -- subcommands --------------------------------------------------------------


def cmd_verify(settings) -> int:
    n = settings.get("n", 4, int)
    k = settings.get("k", 2, int)
    params = codes.CodeParams(n, k)
    H = codes.build_parity_check(params)
    G = codes.build_generator(params)
    spans = codes.column_spans(G)
    report = codes.coefficient_report(codes.parity_block(params), params)
    ortho = codes.verify_orthogonality(G, H)

    print(f"code CP({n},{k})  s={params.s}")
    print("parity-check matrix H:")
    print(H)
    print("generator matrix G = [Z | I]:")
    print(G)
    print(f"column spans: {' '.join(str(d) for d in spans)}   max span (lambda): {max(spans)}")
    for line in report.lines():
        print(line)
    print(f"G H^T = 0: {ortho}")

    out = settings.get("out")
    if out:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["matrix", "row", "col", "min_exp", "coeffs"])
            for name, M in (("H", H), ("G", G)):
                for i in range(M.rows):
                    for j in range(M.cols):
                        p = M[i, j]
                        w.writerow([name, i, j, p.min_exp, " ".join(str(c) for c in p.coeffs)])
        print(f"wrote {out}")
    if not (ortho and report.ok):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_plan(settings) -> int:
    plan = _cp_plan(settings)
    params = plan.params
    print(
        f"plan CP({params.n},{params.k})  blocks={plan.num_blocks}  "
        f"per-stream={plan.blocks_per_stream}  max-span={plan.max_span}"
    )
    for j in range(params.n):
        kind = "parity" if j < params.s else "systematic"
        print(f"worker {j}  {kind}  offset {plan.offsets[j]}  tasks {len(plan.tasks[j])}")
        for slot, task in enumerate(plan.tasks[j]):
            print(f"  slot {slot}  row {plan.offsets[j] + slot}  {task}")
    out = settings.get("out")
    if out:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["worker", "slot", "block", "coefficient"])
            for j in range(params.n):
                for slot, task in enumerate(plan.tasks[j]):
                    for block, coeff in task.terms:
                        w.writerow([j, slot, block, coeff])
        print(f"wrote {out}")
    return EXIT_OK


def cmd_encode(settings) -> int:
    rng = np.random.default_rng(settings.get("seed", 0, int))
    A, _ = _load_or_generate(settings, rng)
    out_dir = Path(settings.get("out-dir", "encoded"))
    out_dir.mkdir(parents=True, exist_ok=True)
    scheme = settings.get("scheme", "cp")
    rows = []
    if scheme == "cp":
        plan = _cp_plan(settings)
        coded = planner.materialize(plan, A)
        for j, mats in enumerate(coded):
            for slot, M in enumerate(mats):
                name = f"w{j:02d}_t{slot:02d}.bin"
                matio.write_matrix_bin(out_dir / name, M.toarray() if hasattr(M, "toarray") else M)
                rows.append([j, slot, M.shape[0], M.shape[1], simulator.matrix_nnz(M), name])
        header = ["worker", "slot", "rows", "cols", "nnz", "file"]
    elif scheme == "rs":
        cfg = rs.RSConfig(
            settings.get("n", 5, int),
            settings.get("rs-blocks", 5, int),
            settings.get("rs-jobs", 3, int),
        )
        coded = rs.rs_encode(A, cfg)
        for w_, mats in enumerate(coded):
            pts = cfg.worker_points(w_)
            for slot, M in enumerate(mats):
                name = f"w{w_:02d}_t{slot:02d}.bin"
                matio.write_matrix_bin(out_dir / name, M.toarray() if hasattr(M, "toarray") else M)
                rows.append([w_, slot, repr(pts[slot]), M.shape[0], M.shape[1], simulator.matrix_nnz(M), name])
        header = ["worker", "slot", "point", "rows", "cols", "nnz", "file"]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    with open(out_dir / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {len(rows)} coded submatrices to {out_dir}")
    return EXIT_OK


def cmd_simulate(settings) -> int:
    seed = settings.get("seed", 0, int)
    rng = np.random.default_rng(seed)
    A, x = _load_or_generate(settings, rng)
    policy = _policy(settings)
    noise = _noise(settings)
    scheme = settings.get("scheme", "cp")
    y = simulator.sparse_matvec(A, x)

    if scheme == "cp":
        plan = _cp_plan(settings)
        result = simulator.run_cp(plan, A, x, policy, noise, seed)
        grid = peeling.SymbolGrid.from_responses(plan, result.responses, result.stragglers)
        trace = peeling.decode(grid, result.stragglers)
        y_hat = peeling.assemble_product(grid, plan, A.shape[0])
        grid_out = settings.get("grid-out")
        if grid_out:
            full = peeling.SymbolGrid.from_responses(plan, result.responses, result.stragglers)
            matio.write_grid_dump(grid_out, full, Path(grid_out).parent / "grid_values")
        decode_trace = settings.get("decode-trace")
        if decode_trace:
            matio.write_decode_trace_csv(decode_trace, trace)
    elif scheme == "rs":
        cfg = rs.RSConfig(
            settings.get("n", 5, int),
            settings.get("rs-blocks", 5, int),
            settings.get("rs-jobs", 3, int),
        )
        result = simulator.run_rs(cfg, A, x, policy, noise, seed)
        y_hat = rs.rs_decode(result.responses, cfg, A.shape[0])
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    err = simulator.error_percentage(y, y_hat)
    print(f"scheme={scheme} stragglers={list(result.stragglers)} error={err:.6g}%")
    out = settings.get("out")
    if out:
        matio.write_vector_bin(out, y_hat)
        print(f"wrote {out}")
    trace_path = settings.get("trace")
    if trace_path:
        matio.write_trace_csv(trace_path, result.trace)
        print(f"wrote {trace_path}")
    return EXIT_OK


def cmd_decode(settings) -> int:
    plan = _cp_plan(settings)
    grid_path = settings.get("grid")
    if not grid_path:
        raise ValueError("decode requires --grid")
    stragglers = _parse_stragglers(settings.get("stragglers", ""))
    known = matio.read_grid_dump(grid_path, settings.get("grid-dir", Path(grid_path).parent / "grid_values"))
    grid = peeling.SymbolGrid.from_known(plan, known, stragglers)
    trace = peeling.decode(grid, stragglers)
    rows = settings.get("rows", plan.num_blocks * grid.block_shape[0], int)
    y_hat = peeling.assemble_product(grid, plan, rows)
    out = settings.get("out", "decoded.bin")
    matio.write_vector_bin(out, y_hat)
    print(f"decoded {len(trace.steps)} symbols; wrote {out}")
    trace_path = settings.get("trace")
    if trace_path:
        matio.write_decode_trace_csv(trace_path, trace)
        print(f"wrote {trace_path}")
    return EXIT_OK


def _report_outputs(settings, report, default_stem, figure_fn) -> int:
    out = settings.get("out", f"{default_stem}.csv")
    report.to_csv(out)
    print(f"wrote {out}")
    if not settings.get("no-figure", False, bool):
        fig_path = Path(out).with_suffix(".png")
        figure_fn(report, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK


def cmd_snr_sweep(settings) -> int:
    snrs = settings.get("snrs", "60,70,80,90,100,110,120")
    report = experiments.snr_sweep(
        n=settings.get("n", 7, int),
        k=settings.get("k", 4, int),
        gamma=Fraction(settings.get("gamma", "3/10")),
        rows=settings.get("rows", 800, int),
        cols=settings.get("cols", 1000, int),
        snrs=[float(s) for s in str(snrs).split(",")],
        trials=settings.get("trials", 20, int),
        seed=settings.get("seed", 0, int),
        rs_blocks=settings.get("rs-blocks", 10, int),
        rs_jobs=settings.get("rs-jobs", 3, int),
        policy=_policy(settings, default=simulator.StragglerPolicy.none()),
        paper_scale=settings.get("paper-scale", False, bool),
    )
    for row in report.rows:
        print(f"snr={row[0]:g}dB  err_rs={row[1]:.4g}%  err_cp={row[2]:.4g}%")
    return _report_outputs(settings, report, "snr_sweep", plots.save_snr_figure)


def cmd_sparsity_bench(settings) -> int:
    levels = settings.get("levels", "0.70,0.80,0.90,0.95")
    report = experiments.sparsity_bench(
        size=settings.get("size", 2400, int),
        levels=[float(s) for s in str(levels).split(",")],
        n=settings.get("n", 5, int),
        k=settings.get("k", 2, int),
        gamma=Fraction(settings.get("gamma", "3/5")),
        rs_blocks=settings.get("rs-blocks", 5, int),
        rs_jobs=settings.get("rs-jobs", 3, int),
        seed=settings.get("seed", 0, int),
        paper_scale=settings.get("paper-scale", False, bool),
        wall_clock=settings.get("wall-clock", False, bool),
    )
    for row in report.rows:
        print(
            f"sparsity={row[0]:.0%}  max_time_rs={row[2]:.4g}  max_time_cp={row[3]:.4g}  "
            f"rs_sparsity={row[4]:.3f}  cp_worst_parity={row[5]:.3f}"
        )
    return _report_outputs(settings, report, "sparsity_bench", plots.save_sparsity_figure)


# -- wiring -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="cpcode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--out", default=None)
        p.add_argument("--scheme", choices=("cp", "rs"), default=None)
        p.add_argument("--paper-scale", action="store_true", default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--gamma", default=None, help="storage fraction, e.g. 3/4")
        p.add_argument("--delta", type=int, default=None, help="explicit block count override")
        p.add_argument("--rs-blocks", type=int, default=None)
        p.add_argument("--rs-jobs", type=int, default=None)

    p = sub.add_parser("verify", help="print H, G, spans and the coefficient report")
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("plan", help="print / export the per-worker task table")
    common(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("encode", help="write coded submatrices for each worker")
    common(p)
    p.add_argument("--matrix", default=None, help="input matrix (.mtx/.mm or raw .bin)")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--sparsity", type=float, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("simulate", help="run workers, decode, compare to the direct product")
    common(p)
    p.add_argument("--matrix", default=None)
    p.add_argument("--vector", default=None)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--sparsity", type=float, default=None)
    p.add_argument("--stragglers", default=None, help="explicit straggler list, e.g. 2,3")
    p.add_argument("--delay-scale", type=float, default=None)
    p.add_argument("--fail-prob", type=float, default=None)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--noise-reference", choices=("task", "global"), default=None)
    p.add_argument("--trace", default=None, help="write the execution trace CSV here")
    p.add_argument("--grid-out", default=None, help="write a grid dump CSV here")
    p.add_argument("--decode-trace", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("decode", help="peel a grid dump back into the product vector")
    common(p)
    p.add_argument("--grid", default=None, help="grid dump CSV")
    p.add_argument("--grid-dir", default=None, help="directory holding the symbol vectors")
    p.add_argument("--stragglers", default=None)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("snr-sweep", help="error percentage of both schemes across noise levels")
    common(p)
    p.add_argument("--snrs", default=None, help="comma-separated dB values")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--stragglers", default=None)
    p.add_argument("--delay-scale", type=float, default=None)
    p.add_argument("--fail-prob", type=float, default=None)
    p.add_argument("--no-figure", action="store_true", default=None)
    p.set_defaults(fn=cmd_snr_sweep)

    p = sub.add_parser("sparsity-bench", help="worker cost and sparsity on banded matrices")
    common(p)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--levels", default=None, help="comma-separated sparsity levels in (0,1)")
    p.add_argument("--wall-clock", action="store_true", default=None)
    p.add_argument("--no-figure", action="store_true", default=None)
    p.set_defaults(fn=cmd_sparsity_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return args.fn(settings)
    except (OSError, csv.Error) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (
        peeling.NotPeelable,
        peeling.IncompleteDecode,
        simulator.UnrecoverablePattern,
        rs.SingularSystem,
    ) as exc:
        print(f"decode failure: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (ValueError, ArithmeticError) as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
