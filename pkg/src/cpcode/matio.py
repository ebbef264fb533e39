"""File formats: Matrix Market, raw binary matrices/vectors, CSV dumps.

Raw binary matrix: u64 rows, u64 cols (little-endian), then row-major
float64 little-endian data.  Raw binary vector: u64 length header, then
float64 little-endian entries.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
from scipy import io as spio
from scipy import sparse

_HEADER = struct.Struct("<QQ")


def write_matrix_bin(path, A) -> None:
    A = np.asarray(A, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(A.shape[0], A.shape[1]))
        fh.write(np.ascontiguousarray(A).tobytes())


def read_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        rows, cols = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols).astype(np.float64)


def write_vector_bin(path, v) -> None:
    v = np.asarray(v, dtype="<f8").reshape(-1)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", v.size))
        fh.write(v.tobytes())


def read_vector_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (size,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != size:
        raise ValueError(f"{path}: expected {size} values, found {data.size}")
    return data.astype(np.float64)


def write_matrix_mm(path, A) -> None:
    """Matrix Market coordinate format (dense input is sparsified first)."""
    if not sparse.issparse(A):
        A = sparse.coo_matrix(np.asarray(A))
    spio.mmwrite(str(path), A)


def read_matrix_mm(path):
    M = spio.mmread(str(path))
    if sparse.issparse(M):
        return M.tocsr()
    return np.asarray(M)


def load_matrix(path):
    """Dispatch on extension: .mtx/.mm -> Matrix Market, else raw binary."""
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        return read_matrix_mm(path)
    return read_matrix_bin(path)


def save_matrix(path, A) -> None:
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        write_matrix_mm(path, A)
    else:
        write_matrix_bin(path, A)


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["worker", "task_index", "start", "end", "nnz"])
        for rec in trace:
            w.writerow([rec.worker, rec.task_index, repr(rec.start), repr(rec.end), rec.nnz])


def write_decode_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "row", "col", "slope"])
        for step, (row, col, slope, _line) in enumerate(trace.steps):
            w.writerow([step, row, col, slope])


def write_grid_dump(path, grid, directory) -> None:
    """Grid dump CSV (col, row, vector file, known flag) plus vector files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["col", "row", "value_file", "known"])
        for col in range(grid.params.n):
            for row in range(grid.heights[col]):
                known = grid.is_known(row, col)
                ref = ""
                if known:
                    ref = f"sym_c{col}_r{row}.bin"
                    write_vector_bin(directory / ref, np.asarray(grid.symbol(row, col), dtype=float))
                w.writerow([col, row, ref, int(known)])


def read_grid_dump(path, directory) -> dict[tuple[int, int], np.ndarray]:
    """Known symbols of a grid dump as {(row, col): vector}."""
    directory = Path(directory)
    known = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            if int(rec["known"]):
                known[(int(rec["row"]), int(rec["col"]))] = read_vector_bin(directory / rec["value_file"])
    return known
