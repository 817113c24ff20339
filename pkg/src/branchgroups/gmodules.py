"""F_pG-modules attached to the congruence layers of a tree group.

The m-th layer St_S(m)/St_S(m+1) of the Sylow pro-p group is the
permutation module W_m on the level-m vertices: for x in St(m) the
level-m labels of x^g are those of x permuted by g's vertex action
(labels are abelian).  The generic psi-twisted p-fold direct sum is
implemented as well and is matrix-checked against this shortcut.

The distinguished submodule chain V_j of W_m, indexed by tuples
j in {1..p}^m plus a sentinel (0,p,...,p) for the zero space, is built
by the recursive sandwich construction; its canonical generators make
every basis deterministic.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .linalg import FpSubspace, rref
from .trees import Portrait

IndexTuple = tuple[int, ...]


class GModule:
    """Finite F_pG-module: one invertible action matrix per generator,
    acting on row vectors from the right."""

    def __init__(self, p: int, dim: int, actions: dict[str, np.ndarray]):
        self.p = p
        self.dim = dim
        self.actions = {k: np.asarray(v, dtype=np.int64) % p
                        for k, v in actions.items()}
        for k, mat in self.actions.items():
            if mat.shape != (dim, dim):
                raise ValueError(f"action {k} has shape {mat.shape}")

    def action_list(self) -> list[np.ndarray]:
        return [self.actions[k] for k in sorted(self.actions)]

    def word_matrix(self, word) -> np.ndarray:
        mat = np.eye(self.dim, dtype=np.int64)
        for name, e in word:
            mat = mat @ _matrix_power(self.actions[name], e, self.p) % self.p
        return mat % self.p


def _matrix_inverse(mat: np.ndarray, p: int) -> np.ndarray:
    n = mat.shape[0]
    aug = np.concatenate([mat % p, np.eye(n, dtype=np.int64)], axis=1)
    rows, pivots = rref(aug, p)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular over F_p")
    return rows[:, n:].astype(np.int64)


def _matrix_power(mat: np.ndarray, e: int, p: int) -> np.ndarray:
    if e < 0:
        return _matrix_power(_matrix_inverse(mat, p), -e, p)
    out = np.eye(mat.shape[0], dtype=np.int64)
    base = mat % p
    while e:
        if e & 1:
            out = out @ base % p
        e >>= 1
        if e:
            base = base @ base % p
    return out


def permutation_matrix(perm: np.ndarray) -> np.ndarray:
    n = len(perm)
    mat = np.zeros((n, n), dtype=np.int64)
    mat[np.arange(n), perm] = 1
    return mat


def wm_module(inst, m: int) -> GModule:
    """W_m as the permutation module on level-m vertices: each generator
    acts by its vertex action, (v.g) at u = v at u^(g^-1)."""
    p = inst.p
    if m == 0:
        return GModule(p, 1, {name: np.eye(1) for name in inst.gen_names})
    gens = inst.generators(m)
    actions = {name: permutation_matrix(np.asarray(g.vertex_perm(m)))
               for name, g in zip(inst.gen_names, gens)}
    return GModule(p, p**m, actions)


def twisted_sum(v: GModule, inst) -> GModule:
    """psi-twisted p-fold direct sum: a permutes the p blocks cyclically,
    each directed generator acts block-diagonally through its psi word."""
    p = inst.p
    d = v.dim
    words = inst.psi_words()
    cyc = permutation_matrix((np.arange(p) + 1) % p)  # block i -> block i+1
    actions: dict[str, np.ndarray] = {
        "a": np.kron(cyc, np.eye(d, dtype=np.int64))}
    for name in inst.gen_names:
        if name == "a":
            continue
        blocks = [v.word_matrix(w) for w in words[name]]
        mat = np.zeros((p * d, p * d), dtype=np.int64)
        for c, blk in enumerate(blocks):
            mat[c * d:(c + 1) * d, c * d:(c + 1) * d] = blk
        actions[name] = mat
    return GModule(p, p * d, actions)


def iterated_twisted_sum(inst, m: int) -> GModule:
    mod = wm_module(inst, 0)
    for _ in range(m):
        mod = twisted_sum(mod, inst)
    return mod


# -- the index tuples and the submodule chain ------------------------------


def is_sentinel(j: IndexTuple) -> bool:
    return len(j) >= 1 and j[0] == 0


def check_tuple(j: IndexTuple, p: int) -> IndexTuple:
    j = tuple(int(x) for x in j)
    if is_sentinel(j):
        if j != (0,) + (p,) * (len(j) - 1):
            raise ValueError(f"malformed sentinel {j}")
        return j
    if not j or any(not 1 <= x <= p for x in j):
        raise ValueError(f"tuple {j} not in {{1..{p}}}^m")
    return j


def predecessor(j: IndexTuple, p: int) -> IndexTuple:
    """The predecessor in the lexicographic chain on {1..p}^m, with
    (1,...,1) mapping to the sentinel (0,p,...,p)."""
    j = check_tuple(j, p)
    if is_sentinel(j):
        raise ValueError("the sentinel has no predecessor")
    if len(j) == 1:
        return (j[0] - 1,)
    if j[-1] >= 2:
        return j[:-1] + (j[-1] - 1,)
    return predecessor(j[:-1], p) + (p,)


def tuple_rank(j: IndexTuple, p: int) -> int:
    """Lexicographic rank; (1,...,1) has rank 0, the sentinel rank -1."""
    if is_sentinel(j):
        return -1
    m = len(j)
    return sum((x - 1) * p**(m - 1 - k) for k, x in enumerate(j))


def tuple_from_rank(rank: int, p: int, m: int) -> IndexTuple:
    if rank < 0:
        return (0,) + (p,) * (m - 1)
    digits = []
    for _ in range(m):
        digits.append(rank % p + 1)
        rank //= p
    if rank:
        raise ValueError("rank out of range")
    return tuple(reversed(digits))


@lru_cache(maxsize=None)
def _a_nilpotent_power(p: int, k: int) -> np.ndarray:
    """(A - I)^k for the p-cycle permutation matrix A on level 1."""
    a_mat = permutation_matrix((np.arange(p) + 1) % p)
    return _matrix_power((a_mat - np.eye(p, dtype=np.int64)) % p, k, p)


@lru_cache(maxsize=None)
def canonical_generator(p: int, j: IndexTuple) -> bytes:
    """Canonical cyclic generator w_j of V_j, serialized (cache-friendly)."""
    j = check_tuple(j, p)
    if is_sentinel(j):
        raise ValueError("the zero module has no generator")
    if len(j) == 1:
        vec = _a_nilpotent_power(p, p - j[0])[0] % p
        return vec.astype(np.int8).tobytes()
    w_prefix = np.frombuffer(canonical_generator(p, j[:-1]), dtype=np.int8)
    coeffs = np.frombuffer(canonical_generator(p, (j[-1],)), dtype=np.int8)
    return (np.concatenate([(int(c) * w_prefix) % p for c in coeffs])
            .astype(np.int8).tobytes())


def canonical_generator_vec(p: int, j: IndexTuple) -> np.ndarray:
    return np.frombuffer(canonical_generator(p, j), dtype=np.int8).copy()


@lru_cache(maxsize=None)
def vj_basis(p: int, j: IndexTuple) -> FpSubspace:
    """The chain submodule V_j of W_m (m = len(j)), canonical echelon basis.

    V_j sits between the block sums of V_{j'} and V_{(j')-} and maps onto
    V_{(j_m)} of W_1 in the middle quotient; the construction depends only
    on p, not on the acting group.
    """
    j = check_tuple(j, p)
    m = len(j)
    ambient = p**m
    if is_sentinel(j):
        return FpSubspace(p, ambient)
    if m == 1:
        return FpSubspace(p, p, _a_nilpotent_power(p, p - j[0]))
    lower = vj_basis(p, predecessor(j[:-1], p))
    rows = []
    d = p**(m - 1)
    for i in range(p):
        for row in lower.rows:
            full = np.zeros(ambient, dtype=np.int64)
            full[i * d:(i + 1) * d] = row
            rows.append(full)
    w_prefix = canonical_generator_vec(p, j[:-1])
    for coeff_row in vj_basis(p, (j[-1],)).rows:
        rows.append(np.concatenate(
            [(int(c) * w_prefix) % p for c in coeff_row]))
    return FpSubspace(p, ambient, rows)


# -- closures ---------------------------------------------------------------


def submodule_closure(seed: FpSubspace, mod: GModule) -> FpSubspace:
    """Smallest action-invariant subspace containing the seed."""
    space = seed
    actions = mod.action_list()
    frontier = list(space.rows)
    while frontier:
        new_rows = []
        for row in frontier:
            for mat in actions:
                img = space.reduce(row @ mat % mod.p)
                if img.any():
                    space = space.with_vectors(img)
                    new_rows.append(img)
        frontier = new_rows
    return space


def commutator_subspace(u: FpSubspace, mod: GModule) -> FpSubspace:
    """[U, G]: the span of u(g-1) over basis vectors and generators, closed
    under the action (U must be invariant)."""
    rows = []
    for row in u.rows:
        for mat in mod.action_list():
            rows.append((row @ mat - row) % mod.p)
    seed = FpSubspace(mod.p, u.ambient, rows if rows else None)
    return submodule_closure(seed, mod)


def uniserial_chain(u: FpSubspace, mod: GModule):
    """Chain U > [U,G] > [[U,G],G] > ... > 0.

    Returns (chain, witness): witness is None when every step has
    codimension exactly 1, else a dict describing the offending layer.
    """
    chain = [u]
    while chain[-1].dim > 0:
        nxt = commutator_subspace(chain[-1], mod)
        drop = chain[-1].dim - nxt.dim
        if drop == 0:
            return chain, {"reason": "no descent", "dim": chain[-1].dim}
        chain.append(nxt)
        if drop != 1:
            return chain, {"reason": "layer of codimension > 1",
                           "codim": drop, "upper_dim": chain[-2].dim}
    return chain, None


# -- the R_m computation -----------------------------------------------------


def compute_rm(g_n, m: int) -> dict:
    """R_m data for the group handle g_n: the image U of St(m) in W_m must
    equal a chain module V_j; then R_m is everything below that tuple.

    Returns {"t": dim U, "j_max": tuple, "match": bool, ...}; a failed
    match carries the computed subspace as a falsification witness.
    """
    p = g_n.p
    u = g_n.image_in_wm(m)
    t = u.dim
    if t == 0:
        return {"t": 0, "j_max": tuple_from_rank(-1, p, m), "match": True}
    j_max = tuple_from_rank(t - 1, p, m)
    v = vj_basis(p, j_max)
    if v == u:
        return {"t": t, "j_max": j_max, "match": True}
    return {"t": t, "j_max": j_max, "match": False,
            "witness": {"image_basis": u.basis_digits(),
                        "candidate_basis": v.basis_digits()}}


def rm_tuples(j_max: IndexTuple, p: int) -> list[IndexTuple]:
    """All members of R_m when it matches a chain prefix (small m only)."""
    if is_sentinel(j_max):
        return []
    m = len(j_max)
    return [tuple_from_rank(r, p, m) for r in range(tuple_rank(j_max, p) + 1)]


# -- group <-> module dictionary --------------------------------------------


def layer_representative(g_n, m: int, vec: np.ndarray) -> Portrait:
    """An element of St(m) whose level-m labels equal vec, as a product of
    stabilizer generators (solves a linear system over F_p)."""
    st = g_n.stabilizer(m)
    gens = st.generating_set()
    if not gens:
        raise ValueError("empty stabilizer cannot represent a nonzero vector")
    p = g_n.p
    mat = np.array([g.level_labels(m) for g in gens], dtype=np.int64)
    aug = np.concatenate([mat.T, np.asarray(vec, dtype=np.int64).reshape(-1, 1)],
                         axis=1)
    rows, pivots = rref(aug, p)
    if len(gens) in pivots:
        raise ValueError("vector not in the image of St(m)")
    coeffs = np.zeros(len(gens), dtype=np.int64)
    for r, c in enumerate(pivots):
        coeffs[c] = rows[r, -1]
    out = Portrait.identity(p, g_n.depth)
    for g, c in zip(gens, coeffs):
        if c:
            out = out * g**int(c)
    return out


def layer_preimage(g_n, m: int, space: FpSubspace, name: str = ""):
    """The subgroup N with St(m+1) <= N <= St(m) whose layer image is the
    given invariant subspace: generated by representatives plus St(m+1)."""
    from .engine import Subgroup
    reps = [layer_representative(g_n, m, row) for row in space.rows]
    st_next = g_n.stabilizer(m + 1)
    return Subgroup(g_n.p, g_n.depth, reps + st_next.generating_set(),
                    name=name or f"layer({m},dim{space.dim})")
