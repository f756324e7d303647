"""Dense bit-packed linear algebra over F2.

Rows are packed little-endian into 64-bit words: column ``j`` lives in word
``j >> 6`` at bit ``j & 63``.  Bits past ``cols`` in the last word of each
row are always zero.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .errors import ShapeError

WORD = 64


def _words(cols: int) -> int:
    return (cols + WORD - 1) // WORD


def _pack(dense: np.ndarray) -> np.ndarray:
    rows, cols = dense.shape
    nwords = _words(cols)
    if rows == 0 or nwords == 0:
        return np.zeros((rows, nwords), dtype=np.uint64)
    packed = np.packbits(dense.astype(np.uint8, copy=False), axis=1, bitorder="little")
    padded = np.zeros((rows, nwords * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64, copy=False)


def _unpack(data: np.ndarray, cols: int) -> np.ndarray:
    rows = data.shape[0]
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    raw = np.ascontiguousarray(data.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little", count=cols)


class BitMatrix:
    """Immutable (by convention) binary matrix with bit-packed rows."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        if data is None:
            data = np.zeros((rows, _words(cols)), dtype=np.uint64)
        elif data.shape != (rows, _words(cols)):
            raise ShapeError(f"data shape {data.shape} does not fit ({rows}, {cols})")
        self.data = data
        self._clear_tail()

    # -- construction ---------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def shift(cls, n: int, power: int = 1) -> BitMatrix:
        """Cyclic shift ``S_n ** power``: row i has its 1 at column (i + power) mod n."""
        dense = np.zeros((n, n), dtype=np.uint8)
        if n:
            dense[np.arange(n), (np.arange(n) + power) % n] = 1
        return cls.from_dense(dense)

    @classmethod
    def from_dense(cls, array) -> BitMatrix:
        dense = np.asarray(array)
        if dense.ndim == 1:
            dense = dense.reshape(1, -1)
        if dense.ndim != 2:
            raise ShapeError(f"expected a 2-d array, got ndim={dense.ndim}")
        dense = (dense.astype(np.int64) & 1).astype(np.uint8)
        return cls(dense.shape[0], dense.shape[1], _pack(dense))

    @classmethod
    def from_supports(cls, supports: Iterable[Iterable[int]], cols: int) -> BitMatrix:
        """Rows given as collections of 0-based column indices."""
        supports = [list(s) for s in supports]
        dense = np.zeros((len(supports), cols), dtype=np.uint8)
        for i, s in enumerate(supports):
            for j in s:
                if not 0 <= j < cols:
                    raise ShapeError(f"column {j} out of range for {cols} columns")
                dense[i, j] ^= 1
        return cls.from_dense(dense)

    @classmethod
    def vstack(cls, mats: Sequence[BitMatrix]) -> BitMatrix:
        if not mats:
            raise ShapeError("vstack of nothing")
        cols = mats[0].cols
        if any(m.cols != cols for m in mats):
            raise ShapeError("vstack column mismatch")
        data = np.concatenate([m.data for m in mats], axis=0)
        return cls(data.shape[0], cols, data)

    @classmethod
    def hstack(cls, mats: Sequence[BitMatrix]) -> BitMatrix:
        if not mats:
            raise ShapeError("hstack of nothing")
        rows = mats[0].rows
        if any(m.rows != rows for m in mats):
            raise ShapeError("hstack row mismatch")
        return cls.from_dense(np.concatenate([m.to_dense() for m in mats], axis=1))

    def _clear_tail(self) -> None:
        rem = self.cols % WORD
        if rem and self.rows:
            self.data[:, -1] &= np.uint64((1 << rem) - 1)

    # -- access -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> np.ndarray:
        return _unpack(self.data, self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        return int((int(self.data[i, j >> 6]) >> (j & 63)) & 1)

    def row(self, i: int) -> BitMatrix:
        return BitMatrix(1, self.cols, self.data[i : i + 1].copy())

    def support(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.to_dense()[i])]

    def supports(self) -> list[list[int]]:
        dense = self.to_dense()
        return [[int(j) for j in np.flatnonzero(r)] for r in dense]

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.data).sum(axis=1).astype(np.int64)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0).astype(np.int64)

    @property
    def T(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    def is_zero(self) -> bool:
        return not self.data.any()

    def copy(self) -> BitMatrix:
        return BitMatrix(self.rows, self.cols, self.data.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __add__(self, other: BitMatrix) -> BitMatrix:
        return add(self, other)

    def __matmul__(self, other: BitMatrix) -> BitMatrix:
        return matmul(self, other)

    def __repr__(self) -> str:
        body = "\n".join(" " + "".join(map(str, r)) for r in self.to_dense())
        return f"BitMatrix({self.rows}x{self.cols})" + ("\n" + body if body else "")


def _as_matrix(v) -> BitMatrix:
    return v if isinstance(v, BitMatrix) else BitMatrix.from_dense(np.asarray(v).reshape(1, -1))


def add(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")
    return BitMatrix(a.rows, a.cols, a.data ^ b.data)


def matmul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    out = np.zeros((a.rows, b.data.shape[1]), dtype=np.uint64)
    dense_a = a.to_dense().astype(bool)
    for i in range(a.rows):
        sel = b.data[dense_a[i]]
        if len(sel):
            out[i] = np.bitwise_xor.reduce(sel, axis=0)
    return BitMatrix(a.rows, b.cols, out)


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    return BitMatrix.from_dense(np.kron(a.to_dense(), b.to_dense()))


def rref(m: BitMatrix, ncols: int | None = None) -> tuple[BitMatrix, list[int]]:
    """Reduced row echelon form; pivots searched in the first ``ncols`` columns.

    Zero rows are dropped, so the result has exactly ``len(pivots)`` rows.
    """
    data = m.data.copy()
    ncols = m.cols if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        if r == m.rows:
            break
        w, b = col >> 6, np.uint64(col & 63)
        bits = ((data[:, w] >> b) & np.uint64(1)).astype(bool)
        cand = np.flatnonzero(bits[r:])
        if not len(cand):
            continue
        p = r + int(cand[0])
        if p != r:
            data[[r, p]] = data[[p, r]]
            bits[[r, p]] = bits[[p, r]]
        bits[r] = False
        if bits.any():
            data[bits] ^= data[r]
        pivots.append(col)
        r += 1
    return BitMatrix(r, m.cols, data[:r].copy()), pivots


def rank(m: BitMatrix) -> int:
    return len(rref(m)[1])


def nullspace(m: BitMatrix) -> BitMatrix:
    """Basis (rows, in RREF) of ``{v : m v^T = 0}``."""
    red, pivots = rref(m)
    free = [c for c in range(m.cols) if c not in set(pivots)]
    dense_red = red.to_dense()
    basis = np.zeros((len(free), m.cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, p in enumerate(pivots):
            basis[k, p] = dense_red[i, f]
    return rref(BitMatrix.from_dense(basis.reshape(len(free), m.cols)))[0]


def rowspace_basis(m: BitMatrix) -> BitMatrix:
    return rref(m)[0]


def intersect_rowspaces(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Basis of rs(a) ∩ rs(b) by the Zassenhaus construction."""
    if a.cols != b.cols:
        raise ShapeError(f"intersect: {a.cols} vs {b.cols} columns")
    n = a.cols
    top = np.concatenate([a.to_dense(), a.to_dense()], axis=1)
    bottom = np.concatenate([b.to_dense(), np.zeros((b.rows, n), dtype=np.uint8)], axis=1)
    stacked = BitMatrix.from_dense(np.concatenate([top, bottom], axis=0).reshape(-1, 2 * n))
    red, pivots = rref(stacked)
    dense = red.to_dense()
    keep = [i for i, p in enumerate(pivots) if p >= n]
    inter = dense[keep, n:].reshape(len(keep), n)
    return rref(BitMatrix.from_dense(inter))[0]


def in_rowspace(v, m: BitMatrix) -> bool:
    v = _as_matrix(v)
    if v.cols != m.cols:
        raise ShapeError(f"in_rowspace: vector length {v.cols} vs {m.cols} columns")
    return RowSpace(m).contains(v.data[0])


class RowSpace:
    """Pre-reduced row space supporting fast membership and reduction of packed rows."""

    def __init__(self, m: BitMatrix):
        red, pivots = rref(m)
        self.cols = m.cols
        self.rows = red.data
        self.pivot_words = np.array([p >> 6 for p in pivots], dtype=np.int64)
        self.pivot_bits = np.array([p & 63 for p in pivots], dtype=np.uint64)
        self.dim = len(pivots)

    def reduce(self, row: np.ndarray) -> np.ndarray:
        row = row.copy()
        for i in range(self.dim):
            if (row[self.pivot_words[i]] >> self.pivot_bits[i]) & np.uint64(1):
                row ^= self.rows[i]
        return row

    def contains(self, row: np.ndarray) -> bool:
        return not self.reduce(row).any()
