"""Row-echelon linear algebra over the prime field F_p."""

from __future__ import annotations

import numpy as np


def _inv_mod(x: int, p: int) -> int:
    return pow(int(x), p - 2, p)


def rref(rows: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    mat = np.array(rows, dtype=np.int64) % p
    if mat.ndim == 1:
        mat = mat.reshape(1, -1)
    nrows, ncols = mat.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(mat[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            mat[[r, k]] = mat[[k, r]]
        mat[r] = (mat[r] * _inv_mod(mat[r, c], p)) % p
        others = np.nonzero(mat[:, c])[0]
        for i in others:
            if i != r:
                mat[i] = (mat[i] - mat[i, c] * mat[r]) % p
        pivots.append(c)
        r += 1
    return mat[:r].astype(np.int8), pivots


class FpSubspace:
    """Subspace of F_p^d held in canonical reduced row-echelon form."""

    __slots__ = ("p", "ambient", "rows", "pivots", "_key")

    def __init__(self, p: int, ambient: int, rows=None):
        self.p = p
        self.ambient = ambient
        if rows is None or len(rows) == 0:
            self.rows = np.zeros((0, ambient), dtype=np.int8)
            self.pivots = []
        else:
            self.rows, self.pivots = rref(np.asarray(rows), p)
            if self.rows.shape[1] != ambient:
                raise ValueError("row length does not match ambient dimension")
        self._key = None

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    def key(self) -> bytes:
        if self._key is None:
            self._key = self.rows.tobytes()
        return self._key

    def __eq__(self, other) -> bool:
        return (isinstance(other, FpSubspace) and self.p == other.p
                and self.ambient == other.ambient and self.key() == other.key())

    def __hash__(self) -> int:
        return hash((self.p, self.ambient, self.key()))

    def __repr__(self) -> str:
        return f"FpSubspace(p={self.p}, ambient={self.ambient}, dim={self.dim})"

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        """Residue of vec after elimination against the echelon basis."""
        v = np.asarray(vec, dtype=np.int64) % self.p
        for row, c in zip(self.rows, self.pivots):
            if v[c]:
                v = (v - int(v[c]) * row) % self.p
        return v

    def contains_vector(self, vec) -> bool:
        return not self.reduce(vec).any()

    def contains(self, other: "FpSubspace") -> bool:
        return all(self.contains_vector(r) for r in other.rows)

    def with_vectors(self, vecs) -> "FpSubspace":
        vecs = np.atleast_2d(np.asarray(vecs))
        if self.dim == 0:
            return FpSubspace(self.p, self.ambient, vecs)
        return FpSubspace(self.p, self.ambient,
                          np.vstack([self.rows, vecs % self.p]))

    def sum_with(self, other: "FpSubspace") -> "FpSubspace":
        return self.with_vectors(other.rows) if other.dim else self

    def basis_digits(self) -> list[str]:
        return ["".join(str(int(x)) for x in row) for row in self.rows]


def zero_subspace(p: int, ambient: int) -> FpSubspace:
    return FpSubspace(p, ambient)


def full_space(p: int, ambient: int) -> FpSubspace:
    return FpSubspace(p, ambient, np.eye(ambient, dtype=np.int8))


def matrix_rank(rows, p: int) -> int:
    return rref(np.asarray(rows), p)[0].shape[0]
