"""Brute-force referees that certify the fast paths on small inputs."""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .engine import ResourceGuardError, Subgroup
from .linalg import FpSubspace
from .trees import Portrait


def bfs_enumerate(gens: Sequence[Portrait], cap_exp: int = 12) -> tuple[int, int]:
    """Closure of the generators under composition.

    Returns (element count, order exponent); raises ResourceGuardError as
    soon as the closure exceeds p**cap_exp elements.
    """
    if not gens:
        return 1, 0
    p = gens[0].p
    cap = p**cap_exp
    ident = Portrait.identity(p, gens[0].depth)
    seen = {ident.key(): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g
                k = y.key()
                if k not in seen:
                    if len(seen) >= cap:
                        raise ResourceGuardError(
                            f"BFS closure exceeds p^{cap_exp} elements")
                    seen[k] = y
                    nxt.append(y)
        frontier = nxt
    count = len(seen)
    exp = 0
    while p**exp < count:
        exp += 1
    if p**exp != count:
        raise AssertionError(f"group order {count} is not a power of {p}")
    return count, exp


def closure_of_vector(vec: np.ndarray, actions: Sequence[np.ndarray],
                      p: int) -> FpSubspace:
    """Smallest action-invariant subspace containing vec."""
    dim = len(vec)
    space = FpSubspace(p, dim, [vec])
    frontier = list(space.rows)
    while frontier:
        new_rows = []
        for row in frontier:
            for mat in actions:
                img = space.reduce(row @ mat % p)
                if img.any():
                    space = space.with_vectors(img)
                    new_rows.append(img)
        frontier = new_rows
    return space


def brute_submodules(actions: Sequence[np.ndarray], p: int,
                     cap_count: int = 20000) -> list[FpSubspace]:
    """All closures of single vectors, deduplicated and sorted by dimension.

    When every submodule is cyclic this is the full submodule list
    (excluding the zero space).
    """
    dim = actions[0].shape[0]
    if p**dim > cap_count:
        raise ResourceGuardError(f"p^dim = {p**dim} exceeds cap {cap_count}")
    found: dict[bytes, FpSubspace] = {}
    for coeffs in itertools.product(range(p), repeat=dim):
        if not any(coeffs):
            continue
        vec = np.array(coeffs, dtype=np.int64)
        sp = closure_of_vector(vec, actions, p)
        found.setdefault(sp.key(), sp)
    return sorted(found.values(), key=lambda s: (s.dim, s.key()))


def brute_normal_between(g_n, inst, m: int, cap_dim: int = 6) -> list:
    """All normal subgroups of G_n between St(m+1) and St(m), by brute
    enumeration of the invariant subspaces of the layer image.

    Pulls every invariant subspace back to a subgroup, verifies normality
    by conjugation, and returns the subgroups sorted by order; the chain
    theorem predicts a totally ordered list of t(m)+1 of them.
    """
    from .gmodules import layer_preimage, wm_module
    u = g_n.image_in_wm(m)
    actions = wm_module(inst, m).action_list()
    spaces = brute_invariant_subspaces_within(u, actions, cap_dim=cap_dim)
    out = []
    gens = g_n.generating_set()
    for space in spaces:
        sub = layer_preimage(g_n, m, space)
        for x in sub.generating_set():
            for amb in gens:
                if not sub.contains(x.conjugate(amb)):
                    raise AssertionError(
                        "pullback of an invariant subspace must be normal")
        out.append(sub)
    out.sort(key=lambda s: s.order_exponent)
    return out


def brute_invariant_subspaces_within(space: FpSubspace,
                                     actions: Sequence[np.ndarray],
                                     cap_dim: int = 6) -> list[FpSubspace]:
    """All invariant subspaces of an invariant `space`, by closing every
    vector of the space (cyclic closures) and then summing closures.

    Sound because in the cases this referee is used for, every invariant
    subspace is a sum of cyclic ones (always true) and the vector count
    p^dim is capped.
    """
    p = space.p
    if space.dim > cap_dim:
        raise ResourceGuardError(f"dim {space.dim} exceeds cap {cap_dim}")
    cyclic: dict[bytes, FpSubspace] = {}
    for coeffs in itertools.product(range(p), repeat=space.dim):
        if not any(coeffs):
            continue
        vec = (np.array(coeffs, dtype=np.int64) @ space.rows) % p
        sp = closure_of_vector(vec, actions, p)
        cyclic.setdefault(sp.key(), sp)
    # close the set of cyclic submodules under pairwise sums
    all_spaces: dict[bytes, FpSubspace] = dict(cyclic)
    frontier = list(cyclic.values())
    while frontier:
        nxt = []
        for s in frontier:
            for c in list(cyclic.values()):
                u = s.sum_with(c)
                if u.key() not in all_spaces:
                    all_spaces[u.key()] = u
                    nxt.append(u)
        frontier = nxt
    zero = FpSubspace(p, space.ambient)
    out = [zero] + sorted(all_spaces.values(), key=lambda s: (s.dim, s.key()))
    return out
