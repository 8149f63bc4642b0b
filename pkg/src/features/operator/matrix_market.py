import csv
import logging
import os
from typing import Optional

import numpy as np
from scipy import io as scipy_io
from scipy import sparse

from src.core.errors import DomainError, MatrixMarketError
from src.core.grid import GridSpec
from src.features.operator.assembly import SparseOperator

logger = logging.getLogger(__name__)

HEADER_PREFIX = "%%MatrixMarket"


def export_matrix_market(op: SparseOperator, path: str, comment: str = "") -> str:
    """Writes the lower triangle of `op` as a symmetric real coordinate file."""
    lower = sparse.tril(op.to_scipy(), format="coo")
    scipy_io.mmwrite(path, lower, comment=comment, field="real", precision=17, symmetry="symmetric")
    # scipy appends the extension when it is missing
    written = path if path.endswith(".mtx") else f"{path}.mtx"
    logger.info(f"Exported {op.N}x{op.N} operator ({lower.nnz} stored entries) to '{written}'")
    return written


def import_matrix_market(path: str, grid: Optional[GridSpec] = None) -> SparseOperator:
    """
    Reads a symmetric real coordinate Matrix Market file back into band storage.

    Every line is validated so malformed files report the offending line.

    Args:
        path: File to read.
        grid: Grid of the operator; inferred from the dimension when omitted.

    Returns:
        SparseOperator: The operator with both triangles restored.
    """
    rows, cols, values = [], [], []
    size = None
    expected = 0
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise MatrixMarketError(f"cannot open file: {e}", path=path) from e

    with handle:
        header = handle.readline()
        tokens = header.lower().split()
        if len(tokens) != 5 or tokens[0] != HEADER_PREFIX.lower():
            raise MatrixMarketError("missing %%MatrixMarket header", path=path, line=1)
        if tokens[1:4] != ["matrix", "coordinate", "real"] or tokens[4] != "symmetric":
            raise MatrixMarketError(f"unsupported format '{header.strip()}', expected 'matrix coordinate real symmetric'",
                                    path=path, line=1)
        for line_number, line in enumerate(handle, start=2):
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            parts = stripped.split()
            if size is None:
                try:
                    size = tuple(int(p) for p in parts)
                except ValueError:
                    raise MatrixMarketError(f"bad size line '{stripped}'", path=path, line=line_number) from None
                if len(size) != 3 or size[0] != size[1]:
                    raise MatrixMarketError(f"size line must be 'N N nnz' for a square matrix, got '{stripped}'",
                                            path=path, line=line_number)
                expected = size[2]
                continue
            if len(parts) != 3:
                raise MatrixMarketError(f"expected 'row col value', got '{stripped}'", path=path, line=line_number)
            try:
                row, col, value = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
            except ValueError:
                raise MatrixMarketError(f"unparsable entry '{stripped}'", path=path, line=line_number) from None
            if not (0 <= row < size[0] and 0 <= col < size[1]):
                raise MatrixMarketError(f"entry ({row + 1}, {col + 1}) outside a {size[0]}x{size[1]} matrix",
                                        path=path, line=line_number)
            if col > row:
                raise MatrixMarketError(f"upper-triangle entry ({row + 1}, {col + 1}) in a symmetric file",
                                        path=path, line=line_number)
            rows.append(row)
            cols.append(col)
            values.append(value)

    if size is None:
        raise MatrixMarketError("missing size line", path=path)
    if len(values) != expected:
        raise MatrixMarketError(f"size line declares {expected} entries, found {len(values)}", path=path)

    N = size[0]
    if grid is None:
        grid = GridSpec.from_cells(round(N ** (1 / 3)))
    if grid.N != N:
        raise MatrixMarketError(f"dimension {N} is not the cube of a power of two matching the grid", path=path)

    rows_arr, cols_arr, vals_arr = np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(values)
    off = rows_arr != cols_arr
    full = sparse.coo_matrix(
        (np.concatenate([vals_arr, vals_arr[off]]), (np.concatenate([rows_arr, cols_arr[off]]), np.concatenate([cols_arr, rows_arr[off]]))),
        shape=(N, N),
    )
    try:
        op = SparseOperator.from_matrix(full, grid)
    except DomainError as e:
        raise MatrixMarketError(str(e), path=path) from e
    logger.info(f"Imported {N}x{N} operator from '{path}'")
    return op


def lower_triangle_count(op: SparseOperator) -> int:
    return int(sparse.tril(op.to_scipy()).nnz)


# --- Vector CSV ---

def export_vector_csv(x: np.ndarray, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["index", "value"])
        for index, value in enumerate(np.asarray(x, dtype=float)):
            writer.writerow([index, repr(float(value))])
    return path


def import_vector_csv(path: str) -> np.ndarray:
    values = []
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["index", "value"]:
            raise MatrixMarketError(f"expected header 'index,value', got {header!r}", path=path, line=1)
        for line_number, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise MatrixMarketError(f"expected 2 columns, got {len(row)}", path=path, line=line_number)
            try:
                index, value = int(row[0]), float(row[1])
            except ValueError:
                raise MatrixMarketError(f"unparsable row {row!r}", path=path, line=line_number) from None
            if index != len(values):
                raise MatrixMarketError(f"index {index} out of sequence", path=path, line=line_number)
            values.append(value)
    return np.array(values)
