"""Directed Erdős–Rényi graph ensemble with self-loops.

Adjacency matrices are stored bit-packed (entry (i, j) = 1 means a directed
edge v_i -> v_j); the node count stays in the desk-scale range of a few
thousand, so dense storage is simple and fast enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .bitlinalg import BitMatrix, pack_rows, unpack_rows


@dataclass(frozen=True)
class EnsembleParams:
    """Node count and independent per-ordered-pair connection probability."""

    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one node")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("connection probability must lie in [0, 1]")

    @classmethod
    def from_scheme(cls, n: int, c: float) -> "EnsembleParams":
        """Ensemble with p = c*ln(n)/n (natural log)."""
        p = c * math.log(n) / n
        if p > 1.0:
            raise ValueError(f"c*ln(n)/n = {p:.4f} exceeds 1; n too small for c={c}")
        return cls(n, p)


class GraphTopology:
    """Directed graph over n agents; self-loops permitted."""

    __slots__ = ("n", "_packed", "_dense")

    def __init__(self, n: int, packed: np.ndarray):
        if packed.shape != (n, (n + 7) // 8):
            raise ValueError("packed adjacency inconsistent with node count")
        self.n = n
        self._packed = packed
        self._dense = None

    @classmethod
    def from_dense(cls, adjacency) -> "GraphTopology":
        arr = np.asarray(adjacency, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        return cls(arr.shape[0], pack_rows(arr))

    @classmethod
    def from_edges(cls, n: int, edges) -> "GraphTopology":
        dense = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            dense[i, j] = 1
        return cls(n, pack_rows(dense))

    def dense(self) -> np.ndarray:
        """Dense uint8 adjacency; cached after first call."""
        if self._dense is None:
            self._dense = unpack_rows(self._packed, self.n)
        return self._dense

    def adjacency_matrix(self) -> BitMatrix:
        return BitMatrix(self.n, self.n, self._packed.copy())

    def out_degrees(self) -> np.ndarray:
        return np.bitwise_count(self._packed).sum(axis=1)

    def edges(self) -> list:
        """Edge list as (i, j) pairs in row-major order."""
        rows, cols = np.nonzero(self.dense())
        return list(zip(rows.tolist(), cols.tolist()))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GraphTopology)
            and self.n == other.n
            and np.array_equal(self._packed, other._packed)
        )


def sample_er(params: EnsembleParams, rng: np.random.Generator) -> GraphTopology:
    """Draw a graph: each ordered pair (i, j), including i = j, carries an
    edge independently with probability p. Deterministic given rng state."""
    dense = rng.random((params.n, params.n)) < params.p
    return GraphTopology(params.n, pack_rows(dense))


def edge_count(g: GraphTopology) -> int:
    """Number of ones in the adjacency = sum of out-degrees."""
    return int(np.bitwise_count(g._packed).sum())


def chernoff_edge_tail(params: EnsembleParams) -> float:
    """Tail bound exp(-p^2 n^2 / 2) for Pr(edge_count > 2 p n^2)."""
    return math.exp(-(params.p**2) * params.n**2 / 2.0)


def dump_topology(g: GraphTopology, fh: TextIO) -> None:
    """Write the line-oriented text form: header n, then one 'i j' per edge."""
    fh.write(f"{g.n}\n")
    for i, j in g.edges():
        fh.write(f"{i} {j}\n")


def load_topology(fh: TextIO) -> GraphTopology:
    """Read the format written by dump_topology."""
    header = fh.readline().strip()
    if not header:
        raise ValueError("missing node-count header")
    n = int(header)
    edges = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        i, j = line.split()
        edges.append((int(i), int(j)))
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) outside 0..{n - 1}")
    return GraphTopology.from_edges(n, edges)
