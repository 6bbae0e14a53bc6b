"""GF(2) linear algebra on bit-packed matrices, plus erasure decoding.

Rows are packed eight columns per byte (little bit order) so that row
operations are word-level XORs; this keeps Gaussian elimination fast enough
for tight Monte Carlo loops at block lengths of a few thousand.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

#: Erasure marker used in symbol arrays alongside the bits {0, 1}.
ERASED = 2


class InconsistentSystemError(Exception):
    """No assignment satisfies the non-erased equations.

    This cannot happen for observations generated by encoding an actual
    input; it indicates a caller bug or corrupted data, and is deliberately
    distinct from an Ambiguous decode.
    """


class DecodeStatus(Enum):
    UNIQUE = "unique"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of decoding: recovered is present exactly when status is UNIQUE."""

    status: DecodeStatus
    recovered: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.status is DecodeStatus.UNIQUE) != (self.recovered is not None):
            raise ValueError("recovered must be present iff status is UNIQUE")


def pack_rows(dense) -> np.ndarray:
    """Pack a dense 0/1 matrix into per-row little-bitorder bytes."""
    arr = np.asarray(dense, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array")
    return np.packbits(arr, axis=1, bitorder="little")


def unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of pack_rows; returns a (rows, cols) uint8 array."""
    return np.unpackbits(words, axis=1, count=cols, bitorder="little")


class BitMatrix:
    """Dense binary matrix with bit-packed rows.

    Attributes:
        rows: number of rows.
        cols: number of columns.
        words: uint8 array of shape (rows, ceil(cols/8)); bit j of row i
            lives at words[i, j >> 3] bit (j & 7). Padding bits are zero.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        expected = (cols + 7) // 8
        if words.shape != (rows, expected) or words.dtype != np.uint8:
            raise ValueError("packed storage inconsistent with matrix shape")
        self.rows = rows
        self.cols = cols
        self.words = words

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        arr = np.asarray(dense)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        packed = pack_rows(arr)
        return cls(arr.shape[0], arr.shape[1], packed)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, (cols + 7) // 8), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def hstack(cls, left: "BitMatrix", right: "BitMatrix") -> "BitMatrix":
        if left.rows != right.rows:
            raise ValueError("row counts differ")
        dense = np.concatenate([left.to_dense(), right.to_dense()], axis=1)
        return cls.from_dense(dense)

    def to_dense(self) -> np.ndarray:
        return unpack_rows(self.words, self.cols)

    def get(self, i: int, j: int) -> int:
        return int((self.words[i, j >> 3] >> (j & 7)) & 1)

    def column_submatrix(self, columns: Sequence[int]) -> "BitMatrix":
        """Matrix restricted to the given columns, in the given order."""
        return BitMatrix.from_dense(self.to_dense()[:, list(columns)])

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.words, other.words)
        )

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def eliminate(words: np.ndarray, cols: int, pivot_limit: Optional[int] = None) -> list:
    """Reduce packed rows to reduced row-echelon form, in place.

    Args:
        words: packed rows (mutated).
        cols: logical column count of the packed rows.
        pivot_limit: only columns < pivot_limit are eligible as pivots
            (row XORs still span the full width).  Defaults to cols; an
            augmented system passes cols - 1 to keep the RHS passive.

    Returns:
        List of pivot column indices; its length is the GF(2) rank of the
        pivot-eligible column block.
    """
    m = words.shape[0]
    limit = cols if pivot_limit is None else pivot_limit
    pivots = []
    r = 0
    for c in range(limit):
        if r >= m:
            break
        byte, bit = c >> 3, c & 7
        below = (words[r:, byte] >> bit) & 1
        hits = np.nonzero(below)[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
        ones = np.nonzero((words[:, byte] >> bit) & 1)[0]
        ones = ones[ones != r]
        if ones.size:
            words[ones] ^= words[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(m: BitMatrix) -> int:
    """GF(2) row rank via Gaussian elimination on a packed copy."""
    words = m.words.copy()
    return len(eliminate(words, m.cols))


def solve_unique(equations: np.ndarray, rhs: np.ndarray):
    """Solve eq @ x = rhs over GF(2) for x, demanding a unique solution.

    Args:
        equations: (m, n) dense 0/1 array, one equation per row.
        rhs: length-m 0/1 array.

    Returns:
        (DecodeStatus, solution-or-None).  UNIQUE iff the coefficient rank
        equals n.

    Raises:
        InconsistentSystemError: a reduced equation reads 0 = 1.
    """
    m, n = equations.shape
    aug = np.concatenate([equations.astype(np.uint8), rhs.astype(np.uint8)[:, None]], axis=1)
    words = pack_rows(aug)
    pivots = eliminate(words, n + 1, pivot_limit=n)
    r = len(pivots)
    # Rows below the pivot block have zero coefficients; a set RHS bit there
    # means the equations contradict each other.
    rhs_byte, rhs_bit = n >> 3, n & 7
    if r < m and np.any((words[r:, rhs_byte] >> rhs_bit) & 1):
        raise InconsistentSystemError("non-erased equations admit no solution")
    if r < n:
        return DecodeStatus.AMBIGUOUS, None
    x = np.zeros(n, dtype=np.uint8)
    rhs_bits = (words[:r, rhs_byte] >> rhs_bit) & 1
    x[np.asarray(pivots)] = rhs_bits
    return DecodeStatus.UNIQUE, x


@dataclass
class ErasedVector:
    """Length-n symbol vector over {0, 1, ERASED}."""

    symbols: np.ndarray

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int8)
        if self.symbols.ndim != 1:
            raise ValueError("expected a 1-d symbol vector")
        if not np.isin(self.symbols, (0, 1, ERASED)).all():
            raise ValueError("symbols must be 0, 1 or ERASED")

    @classmethod
    def from_bits(cls, bits) -> "ErasedVector":
        return cls(np.asarray(bits, dtype=np.int8))

    @property
    def length(self) -> int:
        return int(self.symbols.shape[0])

    def known_mask(self) -> np.ndarray:
        return self.symbols != ERASED

    def erasure_count(self) -> int:
        return int(np.count_nonzero(self.symbols == ERASED))

    def __str__(self) -> str:
        return "".join("e" if s == ERASED else str(int(s)) for s in self.symbols)


def solve_erased(g: BitMatrix, r: ErasedVector) -> DecodeResult:
    """Recover x from the non-erased coordinates of x^T g.

    Gaussian elimination on the column submatrix G_S selected by the
    non-erased positions S: the decode is UNIQUE iff rank(G_S) equals the
    number of rows of g, otherwise AMBIGUOUS.

    Raises:
        InconsistentSystemError: the observed symbols satisfy no input
            (impossible for honestly generated observations).
    """
    if r.length != g.cols:
        raise ValueError("observation length must equal the column count")
    known = r.known_mask()
    values = r.symbols[known].astype(np.uint8)
    # Equations indexed by observed positions: g[:, s]^T x = r_s.
    equations = g.to_dense()[:, known].T
    status, x = solve_unique(equations, values)
    if status is DecodeStatus.UNIQUE:
        return DecodeResult(DecodeStatus.UNIQUE, x)
    return DecodeResult(DecodeStatus.AMBIGUOUS)
