"""Slow, independent reference implementations used as oracles.

Deliberately written on plain Python lists with element-wise loops so they
share no code or representation with the packed fast paths they check.
"""

from __future__ import annotations


def dense_rank(rows) -> int:
    """GF(2) rank of a list-of-lists 0/1 matrix by textbook elimination."""
    work = [list(int(v) & 1 for v in row) for row in rows]
    if not work:
        return 0
    n_cols = len(work[0])
    rank = 0
    for col in range(n_cols):
        pivot = None
        for r in range(rank, len(work)):
            if work[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for r in range(len(work)):
            if r != rank and work[r][col]:
                for c in range(n_cols):
                    work[r][c] ^= work[rank][c]
        rank += 1
        if rank == len(work):
            break
    return rank


def unique_by_rank(g_dense, known_mask) -> bool:
    """Oracle for the decoder: the decode is unique iff the column
    submatrix selected by the non-erased positions has full row rank."""
    n_rows = len(g_dense)
    columns = [j for j, keep in enumerate(known_mask) if keep]
    sub = [[g_dense[i][j] for j in columns] for i in range(n_rows)]
    return dense_rank(sub) == n_rows
