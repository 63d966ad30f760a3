"""Dense bit-packed linear algebra over GF(2).

Matrices are stored row-major as uint64 words (64 columns per word,
little bit order), which makes row elimination a vectorized XOR.  Sparse
row/column adjacency views are derived on demand for peeling and for
building Tanner graphs.  All indices here are 0-based.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

UNIQUE = "unique-solution"
RANK_DEFICIENT = "rank-deficient"


def _pack(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, ceil(cols/64)) uint64 words."""
    dense = np.ascontiguousarray(dense, dtype=np.uint8)
    rows, cols = dense.shape
    nwords = max(1, (cols + 63) // 64)
    padded = np.zeros((rows, nwords * 64), dtype=np.uint8)
    padded[:, :cols] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return bits[:, :cols]


class Gf2Matrix:
    """A binary matrix with packed-word storage.

    Entries are implicitly 0/1; `words` holds the packed bit grid and the
    object is treated as immutable after construction (operations copy).
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        nwords = max(1, (cols + 63) // 64)
        if words.shape != (rows, nwords):
            raise ValueError(f"word grid {words.shape} does not match {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.words = words

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_dense(cls, dense) -> "Gf2Matrix":
        dense = np.atleast_2d(np.asarray(dense))
        if dense.size and not np.isin(dense, (0, 1)).all():
            raise ValueError("entries must be 0/1")
        rows, cols = dense.shape
        return cls(rows, cols, _pack(dense))

    @classmethod
    def from_rows(cls, cols: int, supports) -> "Gf2Matrix":
        """Build from per-row column-index lists (sparse input)."""
        dense = np.zeros((len(supports), cols), dtype=np.uint8)
        for i, sup in enumerate(supports):
            dense[i, np.asarray(sup, dtype=np.int64)] ^= 1
        return cls.from_dense(dense)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        nwords = max(1, (cols + 63) // 64)
        return cls(rows, cols, np.zeros((rows, nwords), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    # -- views ------------------------------------------------------------

    @property
    def dense(self) -> np.ndarray:
        return _unpack(self.words, self.cols)

    def row_supports(self) -> list[np.ndarray]:
        d = self.dense
        return [np.nonzero(d[i])[0].astype(np.int32) for i in range(self.rows)]

    def col_supports(self) -> list[np.ndarray]:
        d = self.dense
        return [np.nonzero(d[:, j])[0].astype(np.int32) for j in range(self.cols)]

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def col_weights(self) -> np.ndarray:
        return self.dense.sum(axis=0, dtype=np.int64)

    def get(self, i: int, j: int) -> int:
        w, b = divmod(j, 64)
        return int((self.words[i, w] >> np.uint64(b)) & np.uint64(1))

    # -- structure ops ----------------------------------------------------

    def transpose(self) -> "Gf2Matrix":
        return Gf2Matrix.from_dense(self.dense.T)

    def take_rows(self, idx) -> "Gf2Matrix":
        idx = np.asarray(idx, dtype=np.int64)
        return Gf2Matrix(len(idx), self.cols, self.words[idx].copy())

    def take_cols(self, idx) -> "Gf2Matrix":
        return Gf2Matrix.from_dense(self.dense[:, np.asarray(idx, dtype=np.int64)])

    @staticmethod
    def vstack(parts: list["Gf2Matrix"]) -> "Gf2Matrix":
        cols = parts[0].cols
        if any(p.cols != cols for p in parts):
            raise ValueError("column mismatch in vstack")
        return Gf2Matrix(sum(p.rows for p in parts), cols,
                         np.vstack([p.words for p in parts]))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Gf2Matrix) and self.rows == other.rows
                and self.cols == other.cols and bool(np.array_equal(self.words, other.words)))

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self):
        return f"Gf2Matrix({self.rows}x{self.cols})"

    # -- arithmetic ---------------------------------------------------------

    def matvec(self, x) -> np.ndarray:
        """Return A @ x over GF(2) as a 0/1 uint8 vector."""
        xw = _pack(np.asarray(x, dtype=np.uint8).reshape(1, -1))
        if xw.shape[1] != self.words.shape[1]:
            raise ValueError("length mismatch")
        acc = np.bitwise_xor.reduce(self.words & xw[0], axis=1)
        return (np.bitwise_count(acc) & 1).astype(np.uint8)

    def matmul(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Return A @ B over GF(2); A selects and XORs rows of B."""
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = np.zeros((self.rows, other.words.shape[1]), dtype=np.uint64)
        for i, sup in enumerate(self.row_supports()):
            if sup.size:
                out[i] = np.bitwise_xor.reduce(other.words[sup], axis=0)
        return Gf2Matrix(self.rows, other.cols, out)


@dataclass
class SolveOutcome:
    """Result of a GF(2) linear solve.

    `solution` is present iff status is unique-solution; `peeling_trace`
    lists (equation, variable) pivots in resolution order when the solve
    went through peeling.
    """

    status: str
    solution: np.ndarray | None = None
    peeling_trace: list[tuple[int, int]] | None = field(default=None)


def _forward_eliminate(words: np.ndarray, cols: int, max_pivot_col: int | None = None,
                       jordan: bool = False) -> list[int]:
    """In-place elimination; returns pivot column list.

    With `jordan` the pivot column is cleared in every other row (reduced
    form), otherwise only below the pivot.
    """
    rows = words.shape[0]
    limit = cols if max_pivot_col is None else max_pivot_col
    pivots: list[int] = []
    r = 0
    one = np.uint64(1)
    for c in range(limit):
        if r == rows:
            break
        w, b = divmod(c, 64)
        bshift = np.uint64(b)
        col = (words[r:, w] >> bshift) & one
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
        if jordan:
            hits = np.nonzero((words[:, w] >> bshift) & one)[0]
            hits = hits[hits != r]
        else:
            hits = r + 1 + np.nonzero((words[r + 1:, w] >> bshift) & one)[0]
        if hits.size:
            words[hits] ^= words[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(m: Gf2Matrix) -> int:
    """GF(2) rank by Gaussian elimination on packed words."""
    work = m.words.copy()
    return len(_forward_eliminate(work, m.cols))


def gaussian_solve(a: Gf2Matrix, c) -> SolveOutcome:
    """Solve a @ z = c by Gauss-Jordan elimination.

    Returns unique-solution iff a has full column rank; rank deficiency is
    a status, not an error.  A full-column-rank yet inconsistent system
    (possible only when rows > cols) raises ValueError.
    """
    c = np.asarray(c, dtype=np.uint8)
    if c.shape != (a.rows,):
        raise ValueError("right-hand side length mismatch")
    aug = np.concatenate([a.dense, c[:, None]], axis=1)
    words = _pack(aug)
    pivots = _forward_eliminate(words, a.cols + 1, max_pivot_col=a.cols, jordan=True)
    if len(pivots) < a.cols:
        return SolveOutcome(RANK_DEFICIENT)
    # Full column rank: every column is a pivot; check remaining rows for
    # consistency (rhs bit set with empty row means no solution exists).
    dense = _unpack(words, a.cols + 1)
    tail = dense[a.cols:]
    if tail.size and (tail[:, -1] & ~tail[:, :-1].any(axis=1)).any():
        raise ValueError("inconsistent system with full column rank")
    z = np.zeros(a.cols, dtype=np.uint8)
    z[pivots] = dense[: len(pivots), -1]
    return SolveOutcome(UNIQUE, solution=z)


def peel_solve(a: Gf2Matrix, c) -> SolveOutcome:
    """Solve by iterative back-substitution (peeling).

    Repeatedly picks the lowest-index equation with exactly one unknown,
    solves it and substitutes.  Succeeds with a peeling trace iff the
    process assigns every variable; a stall reports rank-deficient (for
    max-row-weight-2 systems a stall is equivalent to rank deficiency).
    """
    if a.rows < a.cols:
        raise ValueError("peel_solve needs rows >= cols")
    c = np.asarray(c, dtype=np.uint8)
    if c.shape != (a.rows,):
        raise ValueError("right-hand side length mismatch")
    row_sup = a.row_supports()
    col_sup = a.col_supports()
    acc = c.copy()
    unknowns = np.array([len(s) for s in row_sup], dtype=np.int64)
    assigned = np.full(a.cols, -1, dtype=np.int8)
    heap = [i for i in range(a.rows) if unknowns[i] == 1]
    heapq.heapify(heap)
    trace: list[tuple[int, int]] = []
    n_assigned = 0
    while heap and n_assigned < a.cols:
        row = heapq.heappop(heap)
        if unknowns[row] != 1:
            continue
        (col,) = [j for j in row_sup[row] if assigned[j] < 0]
        val = acc[row]
        assigned[col] = val
        trace.append((row, int(col)))
        n_assigned += 1
        for r in col_sup[col]:
            unknowns[r] -= 1
            if val:
                acc[r] ^= 1
            if unknowns[r] == 1:
                heapq.heappush(heap, int(r))
    if n_assigned < a.cols:
        return SolveOutcome(RANK_DEFICIENT)
    if (acc[unknowns == 0] != 0).any():
        raise ValueError("inconsistent system")
    return SolveOutcome(UNIQUE, solution=assigned.astype(np.uint8), peeling_trace=trace)


def solve_determined(a: Gf2Matrix, c) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable solvability of a @ z = c under Gaussian elimination.

    Returns (determined, values): a variable is determined when its value
    is identical across the whole solution set, i.e. it is a pivot whose
    reduced row touches no free column.  Used as the ML-recoverability
    check on erasure patterns.
    """
    c = np.asarray(c, dtype=np.uint8)
    aug = np.concatenate([a.dense, c[:, None]], axis=1)
    words = _pack(aug)
    pivots = _forward_eliminate(words, a.cols + 1, max_pivot_col=a.cols, jordan=True)
    dense = _unpack(words, a.cols + 1)
    free = np.ones(a.cols, dtype=bool)
    free[pivots] = False
    determined = np.zeros(a.cols, dtype=bool)
    values = np.zeros(a.cols, dtype=np.uint8)
    for r, p in enumerate(pivots):
        if not dense[r, :-1][free].any():
            determined[p] = True
            values[p] = dense[r, -1]
    return determined, values


def inverse(a: Gf2Matrix) -> Gf2Matrix:
    """Inverse of a square full-rank matrix (ValueError otherwise)."""
    if a.rows != a.cols:
        raise ValueError("inverse needs a square matrix")
    aug = np.concatenate([a.dense, np.eye(a.rows, dtype=np.uint8)], axis=1)
    words = _pack(aug)
    pivots = _forward_eliminate(words, 2 * a.cols, max_pivot_col=a.cols, jordan=True)
    if len(pivots) < a.cols:
        raise ValueError("matrix is singular")
    dense = _unpack(words, 2 * a.cols)
    return Gf2Matrix.from_dense(dense[:, a.cols:])
