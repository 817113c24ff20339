"""Desk-scale verification of the paper-level claims, with structured reports.

Every check runs inside a finite quotient G_n = G/St_G(n).  Inclusion
checks of the form St(m+d) <= [N,G] are interpreted on images there: a
failure falsifies the corresponding statement for the pulled-back
congruence subgroup, while a pass is consistency only; such checks carry
one_sided=True.  Layer indices t(m), module images and generator counts
are exact values of the infinite group whenever n is deep enough, and
are reported two-sided.

Reports are reproducible bit for bit from (spec, depth, seed); timings
are kept out of the payload unless explicitly requested.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog
from .catalog import (BranchType, MultiEGSInstance, SunicInstance, branch_type,
                      evaluate_word, has_csp, is_fabrykowski_gupta, is_ggs,
                      is_torsion, r_dot)
from .engine import (ResourceGuardError, Subgroup, commutator_subgroup,
                     derived_series, frattini_subgroup, group_of,
                     is_regular_branch_over, is_subdirect_in_product,
                     is_super_strongly_fractal, join, lower_central_series,
                     min_generators, normal_closure)
from .gmodules import (compute_rm, layer_preimage, rm_tuples, tuple_rank,
                       uniserial_chain, wm_module)
from .trees import Portrait, assemble, commutator, embed_at_vertex, rooted_a

# -- deterministic rng -------------------------------------------------------

_MASK = (1 << 64) - 1


class SplitMix64:
    """The standard 64-bit mix-and-shift generator; fully portable."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def below(self, n: int) -> int:
        return self.next() % n


# -- reports ------------------------------------------------------------------


@dataclass
class VerificationReport:
    name: str
    group: dict
    depth: int
    status: str                    # pass | fail | skipped
    one_sided: bool = False
    details: dict = field(default_factory=dict)
    witness: dict | None = None
    millis: int = 0

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status,
                "one_sided": self.one_sided, "details": self.details,
                "witness": self.witness, "millis": self.millis}


def _skip(name, inst, depth, reason, **details) -> VerificationReport:
    return VerificationReport(name, inst.spec_dict(), depth, "skipped",
                              details={"reason": reason, **details})


# -- group context ------------------------------------------------------------


class GroupContext:
    """Shared cache of quotients, stabilizers and series for one instance."""

    def __init__(self, inst):
        import threading
        self.inst = inst
        self._quotients: dict[int, Subgroup] = {}
        self._derived: dict[int, Subgroup] = {}
        self._gamma: dict[tuple[int, int], Subgroup] = {}
        self._families: dict[tuple[int, int, int], list] = {}
        self._branch_derived: dict[int, Subgroup | None] = {}
        self._lock = threading.RLock()

    @property
    def p(self) -> int:
        return self.inst.p

    def quotient(self, n: int) -> Subgroup:
        with self._lock:
            if n not in self._quotients:
                self._quotients[n] = group_of(self.inst, n, name=f"G_{n}")
            return self._quotients[n]

    def derived(self, n: int, order: int = 1) -> Subgroup:
        with self._lock:
            key = (n, order)
            if key not in self._derived:
                if order == 1:
                    g = self.quotient(n)
                    self._derived[key] = commutator_subgroup(g, g, g, name="G'")
                else:
                    h = self.derived(n, order - 1)
                    self._derived[key] = commutator_subgroup(
                        h, h, self.quotient(n), name="G" + "'" * order)
            return self._derived[key]

    def gamma(self, k: int, n: int) -> Subgroup:
        """k-th lower central term of the depth-n quotient."""
        if k == 1:
            return self.quotient(n)
        with self._lock:
            key = (k, n)
            if key not in self._gamma:
                prev = self.gamma(k - 1, n)
                g = self.quotient(n)
                self._gamma[key] = commutator_subgroup(prev, g, g, name=f"g{k}")
            return self._gamma[key]

    def branch_derived(self, n: int) -> Subgroup | None:
        """K' for the branching subgroup K at depth n (None if not branch)."""
        with self._lock:
            if n not in self._branch_derived:
                k = branch_subgroup(self, n)
                if k is None:
                    self._branch_derived[n] = None
                else:
                    self._branch_derived[n] = commutator_subgroup(
                        k, k, self.quotient(n), name="K'")
            return self._branch_derived[n]

    def normal_family(self, n: int, seed: int, size: int = 20) -> list["FamilyMember"]:
        with self._lock:
            key = (n, seed, size)
            if key not in self._families:
                self._families[key] = _build_normal_family(self, n, seed, size)
            return self._families[key]


class FamilyMember:
    """A verified-normal subgroup of G_n plus its cached [N, G]."""

    def __init__(self, name: str, subgroup: Subgroup):
        self.name = name
        self.subgroup = subgroup
        self._ng: Subgroup | None = None

    def ng(self, ctx: GroupContext, n: int) -> Subgroup:
        if self._ng is None:
            g = ctx.quotient(n)
            self._ng = commutator_subgroup(self.subgroup, g, g,
                                           name=f"[{self.name},G]")
        return self._ng


def _random_word(rng: SplitMix64, gens: list[Portrait], length: int) -> Portrait:
    p, depth = gens[0].p, gens[0].depth
    out = Portrait.identity(p, depth)
    for _ in range(length):
        g = gens[rng.below(len(gens))]
        if rng.below(2):
            g = g.inverse()
        out = out * g
    return out


def _build_normal_family(ctx: GroupContext, n: int, seed: int,
                         size: int) -> list[FamilyMember]:
    g = ctx.quotient(n)
    members: list[FamilyMember] = [FamilyMember("G", g)]
    for m in range(1, n):
        members.append(FamilyMember(f"St({m})", g.stabilizer(m)))
    for k in (2, 3, 4):
        gam = ctx.gamma(k, n)
        if not gam.is_trivial():
            members.append(FamilyMember(f"gamma{k}", gam))
    for order in (2, 3):
        d = ctx.derived(n, order)
        if not d.is_trivial():
            members.append(FamilyMember("G" + "'" * order, d))
    # chain-layer preimages: one mid-chain layer per level (only when the
    # candidate subspace is action-invariant and inside the actual image)
    from .gmodules import submodule_closure, tuple_from_rank, vj_basis
    for m in range(1, n):
        u = g.image_in_wm(m)
        if u.dim >= 2:
            mid = tuple_from_rank(max(u.dim // 2 - 1, 0), ctx.p, m)
            sub = vj_basis(ctx.p, mid)
            if (u.contains(sub)
                    and submodule_closure(sub, wm_module(ctx.inst, m)) == sub):
                members.append(FamilyMember(
                    f"N_{m}.{sub.dim}", layer_preimage(g, m, sub)))
    rng = SplitMix64(seed)
    gens = g.generating_set()
    previous: Portrait | None = None
    while len(members) < size:
        w = _random_word(rng, gens, 4 + rng.below(5))
        if w.is_identity():
            continue
        idx = len(members)
        members.append(FamilyMember(
            f"ncl{idx}", normal_closure([w], g, name=f"ncl{idx}")))
        if previous is not None and len(members) < size:
            prod = previous * w
            if not prod.is_identity():
                members.append(FamilyMember(
                    f"ncl{idx}x", normal_closure([prod], g, name=f"ncl{idx}x")))
        previous = w
    # verify normality: conjugation-closed under the ambient generators
    for mem in members:
        sub = mem.subgroup
        for x in sub.generating_set():
            for amb in gens:
                if not sub.contains(x.conjugate(amb)):
                    raise AssertionError(f"family member {mem.name} not normal")
    return members


# -- classification helpers ----------------------------------------------------


def csp_offset(inst, n_g: int | None = None) -> tuple[int | None, str]:
    """Effective congruence offset d with St(m+d) <= [N,G], per family."""
    if isinstance(inst, SunicInstance):
        if not inst.is_regular_branch():
            return None, "sunic (2,1) is infinite dihedral, not regular branch"
        if inst.p == 2:
            if n_g is None:
                return None, "n_G required for p=2"
            return inst.r + n_g + 3, "sunic p=2: r+n_G+3"
        return inst.r + 3, "sunic odd p: r+3"
    bt = branch_type(inst)
    if bt is BranchType.OVER_DERIVED:
        if is_fabrykowski_gupta(inst):
            return 2, "fabrykowski-gupta: 2"
        if is_ggs(inst):
            return 3, "ggs over derived: 3"
        return r_dot(inst) + 3, "multi-egs over derived: rdot+3"
    if bt is BranchType.OVER_GAMMA3:
        if is_ggs(inst):
            return 4, "ggs over gamma3: 4"
        return 7, "multi-egs over gamma3: 7"
    return None, f"branch type {bt.value}: no effective offset"


def branch_subgroup(ctx: GroupContext, n: int) -> Subgroup | None:
    """The subgroup K the group regular-branches over, in the depth-n quotient."""
    inst = ctx.inst
    if isinstance(inst, SunicInstance):
        if not inst.is_regular_branch():
            return None
        if inst.p == 2:
            return sunic_k(ctx, n)
        return ctx.derived(n)
    bt = branch_type(inst)
    if bt is BranchType.OVER_DERIVED:
        return ctx.derived(n)
    if bt is BranchType.OVER_GAMMA3:
        return ctx.gamma(3, n)
    return None


def sunic_k(ctx: GroupContext, n: int) -> Subgroup:
    """K = <[a,b_2],...,[a,b_r]>^G for Sunic groups on the binary tree."""
    inst = ctx.inst
    gens = inst.generators(n)
    a = gens[0]
    seeds = [commutator(a, b) for b in gens[2:]]
    return normal_closure(seeds, ctx.quotient(n), name="K")


# -- individual checks ----------------------------------------------------------


def verify_effective_csp(ctx: GroupContext, n: int, seed: int,
                         family_size: int = 20) -> VerificationReport:
    """St(m + d) <= [N, G] over a family of normal subgroups (Thm 1.1 shape,
    with the Sunic offsets for that family)."""
    inst = ctx.inst
    n_g = None
    if isinstance(inst, SunicInstance) and inst.p == 2 and inst.is_regular_branch():
        n_g = compute_n_g(ctx, n)
        if n_g is None:
            return _skip("effective-csp", inst, n,
                         "n_G not determined within this depth")
    offset, offset_label = csp_offset(inst, n_g)
    if offset is None:
        return _skip("effective-csp", inst, n, offset_label)
    g = ctx.quotient(n)
    members = ctx.normal_family(n, seed, family_size)
    results = {}
    witness = None
    status = "pass"
    for mem in members:
        if mem.subgroup.is_trivial():
            results[mem.name] = "skipped: trivial"
            continue
        m = mem.subgroup.max_stab_depth()
        if m + offset > n:
            results[mem.name] = f"skipped: m={m}, depth<{m + offset}"
            continue
        if m + offset == n:
            results[mem.name] = f"pass: m={m}, target St({n}) trivial"
            continue
        ng = mem.ng(ctx, n)
        target = g.stabilizer(m + offset)
        bad = next((x for x in target.generating_set()
                    if not ng.contains(x)), None)
        if bad is not None:
            status = "fail"
            results[mem.name] = f"fail: m={m}"
            witness = {"kind": "non-membership", "member": mem.name, "m": m,
                       "offset": offset, "element": bad.digits(),
                       "subgroup_gens": [x.digits()
                                         for x in ng.generating_set()]}
            break
        results[mem.name] = f"pass: m={m}"
        fallback = _remark_fallback(ctx, n, mem, m)
        if fallback is not None:
            results[mem.name + "/K'-fallback"] = fallback
    return VerificationReport(
        "effective-csp", inst.spec_dict(), n, status, one_sided=True,
        details={"offset": offset, "offset_rule": offset_label,
                 "family_size": len(members), "members": results},
        witness=witness)


def _remark_fallback(ctx: GroupContext, n: int, mem: FamilyMember,
                     m: int) -> str | None:
    """The coarse bound psi_{m+1}^{-1}(K' x ... x K') <= [N,G]; must hold
    whenever the sharper offset clause does."""
    if m + 1 >= n:
        return None
    kprime = ctx.branch_derived(n - m - 1)
    if kprime is None:
        return None
    if kprime.is_trivial():
        return "pass: K' trivial at this depth"
    ng = mem.ng(ctx, n)
    p = ctx.p
    for idx in range(p**(m + 1)):
        from .trees import vertex_from_local_index
        v = vertex_from_local_index(p, m + 1, idx)
        for kg in kprime.generating_set():
            if not ng.contains(embed_at_vertex(kg, v, n)):
                return f"fail at coordinate {idx}"
    return "pass"


def verify_branching(ctx: GroupContext, n: int, seed: int) -> VerificationReport:
    """gamma_3 (resp. gamma_4) coordinate inclusions in psi_{m+1}(St_{[N,G]}(m+1))
    for the two regular-branch cases."""
    inst = ctx.inst
    if not isinstance(inst, MultiEGSInstance):
        return _skip("branching", inst, n, "multi-EGS groups only")
    bt = branch_type(inst)
    if bt is BranchType.OVER_DERIVED:
        gamma_k = 3
    elif bt is BranchType.OVER_GAMMA3:
        gamma_k = 4
    else:
        return _skip("branching", inst, n, f"branch type {bt.value}")
    members = [mem for mem in ctx.normal_family(n, seed)
               if mem.name in ("G", "St(1)")]
    results = {}
    status = "pass"
    witness = None
    for mem in members:
        m = 0 if mem.name == "G" else 1
        if n - m - 1 < 1:
            results[mem.name] = "skipped: depth"
            continue
        gam = ctx.gamma(gamma_k, n - m - 1)
        if gam.is_trivial():
            results[mem.name] = f"pass: gamma_{gamma_k} trivial at depth {n - m - 1}"
            continue
        ng = mem.ng(ctx, n)
        ok = True
        for idx in range(ctx.p**(m + 1)):
            from .trees import vertex_from_local_index
            v = vertex_from_local_index(ctx.p, m + 1, idx)
            for c in gam.generating_set():
                x = embed_at_vertex(c, v, n)
                if not ng.contains(x):
                    ok = False
                    witness = {"member": mem.name, "coordinate": idx,
                               "element": x.digits()}
                    break
            if not ok:
                break
        results[mem.name] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
            break
    return VerificationReport(
        "branching", inst.spec_dict(), n, status, one_sided=True,
        details={"gamma": gamma_k, "members": results}, witness=witness)


def verify_ggs_strong(ctx: GroupContext, n: int, seed: int) -> VerificationReport:
    """GGS-only strengthening: G'' x...x G'' (resp. gamma_3' x...) inside
    psi_m([N,G])."""
    inst = ctx.inst
    if not isinstance(inst, MultiEGSInstance) or not is_ggs(inst):
        return _skip("ggs-strong", inst, n, "GGS groups only")
    bt = branch_type(inst)
    if bt is BranchType.OVER_DERIVED:
        def inner(depth):
            return ctx.derived(depth, 2)
        label = "G''"
    elif bt is BranchType.OVER_GAMMA3:
        def inner(depth):
            gam = ctx.gamma(3, depth)
            return commutator_subgroup(gam, gam, ctx.quotient(depth))
        label = "gamma3'"
    else:
        return _skip("ggs-strong", inst, n, f"branch type {bt.value}")
    results = {}
    status = "pass"
    witness = None
    for mem in ctx.normal_family(n, seed):
        if mem.subgroup.is_trivial() or mem.name.startswith("ncl"):
            continue
        m = mem.subgroup.max_stab_depth()
        if m >= n - 1:
            continue
        k = inner(n - m)
        if k.is_trivial():
            results[mem.name] = f"pass: {label} trivial at depth {n - m}"
            continue
        ng = mem.ng(ctx, n)
        ok = True
        for idx in range(ctx.p**m):
            from .trees import vertex_from_local_index
            v = vertex_from_local_index(ctx.p, m, idx)
            for c in k.generating_set():
                if not ng.contains(embed_at_vertex(c, v, n)):
                    ok = False
                    witness = {"member": mem.name, "coordinate": idx}
                    break
            if not ok:
                break
        results[mem.name] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
            break
    return VerificationReport(
        "ggs-strong", inst.spec_dict(), n, status, one_sided=True,
        details={"inner": label, "members": results}, witness=witness)


def verify_fg_lemma(ctx: GroupContext, n: int, seed: int,
                    samples: int = 3) -> VerificationReport:
    """The Fabrykowski-Gupta structure lemma, all three clauses:
    (a1) G^(m) = St(m); (a2) psi_{m-1}(St(m)) = G' x ... x G';
    (b) the coordinate-link congruence for sampled stabilizer elements.

    These are exact quotient identities, so a failure is two-sided.
    """
    inst = ctx.inst
    if not (isinstance(inst, MultiEGSInstance) and is_fabrykowski_gupta(inst)):
        return _skip("fg-lemma", inst, n, "Fabrykowski-Gupta preset only")
    g = ctx.quotient(n)
    der = derived_series(g)
    details: dict = {}
    witness = None
    status = "pass"
    for m in range(2, n):
        st = g.stabilizer(m)
        ok = (len(der) > m and der[m].order_exponent == st.order_exponent
              and der[m].is_subgroup_of(st))
        details[f"a1:G^({m})=St({m})"] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
            if witness is None:
                dm = der[m] if len(der) > m else der[-1]
                bad = next((x for x in st.generating_set()
                            if not dm.contains(x)), None)
                witness = {
                    "kind": "non-membership",
                    "clause": f"G^({m})=St({m})",
                    "derived_exponent": dm.order_exponent,
                    "stab_exponent": st.order_exponent,
                    "element": bad.digits() if bad is not None else None,
                    "subgroup_gens": [x.digits()
                                      for x in dm.generating_set()]}
    for m in range(2, n):
        details[f"a2:psi(St({m}))=G'x..xG'"] = (
            "pass" if _check_psi_st_product(ctx, n, m) else "fail")
        if details[f"a2:psi(St({m}))=G'x..xG'"] == "fail":
            status = "fail"
    rng = SplitMix64(seed)
    for m in range(1, n - 1):
        st_gens = g.stabilizer(m).generating_set()
        if not st_gens:
            continue
        ok_all = True
        for _ in range(samples):
            x = _random_word(rng, st_gens, 2 + rng.below(3))
            if not _coordinate_link_holds(ctx, n, m, x):
                ok_all = False
                witness = witness or {"clause": f"b:m={m}",
                                      "element": x.digits()}
        details[f"b:coordinate-link m={m}"] = "pass" if ok_all else "fail"
        if not ok_all:
            status = "fail"
    return VerificationReport("fg-lemma", inst.spec_dict(), n, status,
                              one_sided=False, details=details, witness=witness)


def _check_psi_st_product(ctx: GroupContext, n: int, m: int) -> bool:
    """psi_{m-1}(St_G(m)) = G' x ... x G', both inclusions."""
    g = ctx.quotient(n)
    shallow = ctx.derived(n - m + 1)
    st = g.stabilizer(m)
    p = ctx.p
    for x in st.generating_set():
        for idx in range(p**(m - 1)):
            from .trees import vertex_from_local_index
            v = vertex_from_local_index(p, m - 1, idx)
            if not shallow.contains(x.section(v)):
                return False
    for kg in shallow.generating_set():
        from .trees import vertex_from_local_index
        for idx in range(p**(m - 1)):
            v = vertex_from_local_index(p, m - 1, idx)
            if not g.contains(embed_at_vertex(kg, v, n)):
                return False
    return True


def _coordinate_link_holds(ctx: GroupContext, n: int, m: int,
                           x: Portrait) -> bool:
    """phi_v(x) is congruent mod St(2) to psi^-1(a^l(1) b^l(2), ..., a^l(p) b^l(1))
    for some exponent vector l, at every level-(m-1) vertex v."""
    import itertools
    p = ctx.p
    d = n - m + 1            # sections of St(m) at level m-1 live at this depth
    if d < 2:
        return True
    gens = ctx.inst.generators(d - 1)
    a, b = gens[0], gens[1]
    a_pows = [a**k for k in range(p)]
    b_pows = [b**k for k in range(p)]
    candidates = []
    for ell in itertools.product(range(p), repeat=p):
        secs = [a_pows[ell[i]] * b_pows[ell[(i + 1) % p]] for i in range(p)]
        candidates.append(assemble(0, secs))
    from .trees import vertex_from_local_index
    for idx in range(p**(m - 1)):
        v = vertex_from_local_index(p, m - 1, idx)
        sec = x.section(v)
        if not any((sec * cand.inverse()).in_stab(2) for cand in candidates):
            return False
    return True


def verify_chain_theorem(ctx: GroupContext, n: int,
                         levels: list[int] | None = None,
                         normality_cap: int = 6) -> VerificationReport:
    """Layer-by-layer chain certification: the image of St(m) in W_m is a
    chain module V_j, every commutator step drops dimension exactly 1,
    the chain preimages are normal, and the closed forms for t(m) hold
    for non-torsion regular-branch GGS groups."""
    inst = ctx.inst
    hyp = _chain_hypothesis(inst)
    g = ctx.quotient(n)
    if levels is None:
        levels = list(range(1, n))
    details: dict = {}
    status = "pass"
    witness = None
    tvals = {}
    for m in levels:
        mod = wm_module(inst, m)
        u = g.image_in_wm(m)
        tvals[m] = u.dim
        chain, bad_layer = uniserial_chain(u, mod)
        if bad_layer is not None:
            details[f"chain m={m}"] = f"fail: {bad_layer['reason']}"
            status = "fail"
            witness = witness or {"level": m, **bad_layer,
                                  "upper_basis": chain[-2].basis_digits()
                                  if len(chain) >= 2 else []}
            continue
        details[f"chain m={m}"] = f"pass: length {len(chain) - 1}"
        rm = compute_rm(g, m)
        details[f"image=V_j m={m}"] = (
            f"pass: j_max={rm['j_max']}" if rm["match"] else "fail")
        if not rm["match"]:
            status = "fail"
            witness = witness or {"level": m, **rm.get("witness", {})}
        layers = chain if u.dim <= normality_cap else [chain[0],
                                                       chain[len(chain) // 2],
                                                       chain[-1]]
        normal_ok = True
        for space in layers:
            pre = layer_preimage(g, m, space)
            for x in pre.generating_set()[:12]:
                for amb in g.generating_set():
                    if not pre.contains(x.conjugate(amb)):
                        normal_ok = False
        details[f"preimages normal m={m}"] = "pass" if normal_ok else "fail"
        if not normal_ok:
            status = "fail"
    # closed forms and the two index inequalities
    if (isinstance(inst, MultiEGSInstance) and is_ggs(inst)
            and not is_torsion(inst)
            and branch_type(inst) is BranchType.OVER_DERIVED):
        p = ctx.p
        expect = {m: (p if m == 1 else (p - 1) * p**(m - 1)) for m in levels}
        ok = all(tvals[m] == expect[m] for m in levels)
        details["closed-form t(m)"] = "pass" if ok else f"fail: {tvals}"
        if not ok:
            status = "fail"
    else:
        details["closed-form t(m)"] = "skipped: hypothesis (non-torsion branch GGS)"
    if isinstance(inst, MultiEGSInstance):
        for m in levels:
            if m - 1 in tvals:
                if tvals[m] > ctx.p * tvals[m - 1]:
                    details[f"t({m})<=p*t({m - 1})"] = "fail"
                    status = "fail"
            if m + 1 in tvals:
                if tvals[m] > ctx.p * tvals[m + 1]:
                    details[f"t({m})<=p*t({m + 1})"] = "fail"
                    status = "fail"
        details.setdefault("index-inequalities", "pass")
    details["t"] = {str(m): tvals[m] for m in levels}
    details["characteristic"] = "assumed, not checked (out of scope)"
    if not hyp:
        return VerificationReport(
            "chain", inst.spec_dict(), n, "skipped", one_sided=False,
            details={"reason": "outside the chain-theorem hypothesis "
                               "(needs a directed generator with nonzero "
                               "vector sum, or a Sunic group)",
                     "informational": details},
            witness=witness)
    return VerificationReport("chain", inst.spec_dict(), n, status,
                              one_sided=False, details=details, witness=witness)


def _chain_hypothesis(inst) -> bool:
    if isinstance(inst, SunicInstance):
        return True
    return any(sum(vec) % inst.p for _, _, vec in inst.directed)


def verify_width_and_rank(ctx: GroupContext, n: int, seed: int,
                          family_size: int = 20) -> VerificationReport:
    """log_p |N : [N,G]| and the normal-generator count of N over a family,
    against the family-specific bound; FG additionally attains width 2."""
    inst = ctx.inst
    n_g = None
    if isinstance(inst, SunicInstance):
        if not inst.is_regular_branch():
            return _skip("width-rank", inst, n, "sunic (2,1) not regular branch")
        if inst.p == 2:
            n_g = compute_n_g(ctx, n)
            bound = inst.r + n_g + 3
            rule = "sunic p=2: r+n_G+3"
        else:
            bound = inst.r + 3
            rule = "sunic odd: r+3"
    else:
        if is_torsion(inst):
            return _skip("width-rank", inst, n,
                         "torsion multi-EGS outside the width corollary")
        bt = branch_type(inst)
        if bt is BranchType.OVER_DERIVED:
            if is_fabrykowski_gupta(inst):
                bound, rule = 2, "fabrykowski-gupta: 2"
            elif is_ggs(inst):
                bound, rule = 3, "ggs over derived: 3"
            else:
                bound, rule = r_dot(inst) + 3, "multi-egs over derived: rdot+3"
        elif bt is BranchType.OVER_GAMMA3:
            bound, rule = (4, "ggs over gamma3: 4") if is_ggs(inst) \
                else (7, "multi-egs over gamma3: 7")
        else:
            return _skip("width-rank", inst, n, f"branch type {bt.value}")
    g = ctx.quotient(n)
    members = ctx.normal_family(n, seed, family_size)
    results = {}
    status = "pass"
    witness = None
    attained = 0
    for mem in members:
        sub = mem.subgroup
        if sub.is_trivial():
            continue
        ng = mem.ng(ctx, n)
        width = sub.order_exponent - ng.order_exponent
        pth = Subgroup(ctx.p, n,
                       ng.generating_set() + [x**ctx.p for x in sub.generating_set()])
        d_normal = sub.order_exponent - pth.order_exponent
        results[mem.name] = {"width": width, "d": d_normal}
        attained = max(attained, width)
        if width > bound or d_normal > bound:
            status = "fail"
            witness = {"member": mem.name, "width": width, "d": d_normal,
                       "bound": bound}
    details = {"bound": bound, "rule": rule, "members": results,
               "max_width_seen": attained}
    if isinstance(inst, MultiEGSInstance) and is_fabrykowski_gupta(inst):
        g_width = g.order_exponent - ctx.derived(n).order_exponent
        details["attainment(N=G)"] = g_width
        if g_width != 2:
            status = "fail"
            witness = witness or {"attainment": g_width}
    if n_g is not None:
        details["n_G"] = n_g
    return VerificationReport("width-rank", inst.spec_dict(), n, status,
                              one_sided=True, details=details, witness=witness)


def verify_congruence_equiv(ctx: GroupContext, n: int) -> VerificationReport:
    """G and the multi-GGS group on the concatenated vector system have the
    same congruence quotients (mutual containment of generator images)."""
    inst = ctx.inst
    if not isinstance(inst, MultiEGSInstance):
        return _skip("congruence-equiv", inst, n, "multi-EGS groups only")
    if branch_type(inst) is not BranchType.OVER_DERIVED:
        return _skip("congruence-equiv", inst, n,
                     "requires regular branch over the derived subgroup")
    vecs = [tuple(int(x) for x in row) for row in inst.concatenated_vectors()]
    if r_dot(inst) != len(vecs):
        return _skip("congruence-equiv", inst, n,
                     "concatenated system dependent; companion multi-GGS "
                     "group is not defined")
    h_inst = catalog.make_multi_ggs(ctx.p, vecs)
    g = ctx.quotient(n)
    h = group_of(h_inst, n, name="H_n")
    ok = (all(h.contains(x) for x in g.generating_set())
          and all(g.contains(x) for x in h.generating_set()))
    details = {"companion": h_inst.spec_dict(),
               "orders": [g.order_exponent, h.order_exponent]}
    return VerificationReport(
        "congruence-equiv", inst.spec_dict(), n, "pass" if ok else "fail",
        one_sided=False, details=details,
        witness=None if ok else details)


def verify_appb(ctx: GroupContext, n: int) -> VerificationReport:
    """The corrected branch structure for two-or-more-ray symmetric groups:
    B = D*gamma_3 is a branching subgroup, St(5) <= B (depth permitting),
    B <= gamma_3 St(k), and the congruence completion needs 3 generators."""
    inst = ctx.inst
    if not isinstance(inst, MultiEGSInstance) or catalog.appb_shape(inst) is None:
        return _skip("appb", inst, n, "requires the multi-ray single-vector "
                                      "symmetric non-constant shape")
    details: dict = {}
    status = "pass"
    witness = None
    words = catalog.appb_d_words(inst)
    details["d_word_count"] = len(words)
    g = ctx.quotient(n)
    gam3 = ctx.gamma(3, n)
    d_seeds = [evaluate_word(inst, w, n) for w in words]
    d_sub = normal_closure([x for x in d_seeds if not x.is_identity()], g,
                           name="D")
    b_sub = join(d_sub, gam3, name="B")
    # regular branch over B
    shallow_b = join(
        normal_closure([x for x in (evaluate_word(inst, w, n - 1)
                                    for w in words) if not x.is_identity()],
                       ctx.quotient(n - 1)),
        ctx.gamma(3, n - 1))
    rb = is_regular_branch_over(g, ctx.quotient(n - 1), b_sub,
                                shallow_b.generating_set())
    details["regular-branch-over-B"] = "pass" if rb else "fail"
    if not rb:
        status = "fail"
    if n >= 6:
        st5 = g.stabilizer(5)
        ok = all(b_sub.contains(x) for x in st5.generating_set())
        details["St(5)<=B"] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
    else:
        details["St(5)<=B"] = "skipped: needs depth >= 6"
    for k in range(1, n):
        gs = join(gam3, g.stabilizer(k))
        ok = all(gs.contains(x) for x in b_sub.generating_set())
        details[f"B<=gamma3*St({k})"] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
            witness = witness or {"clause": f"B<=gamma3*St({k})"}
    if n >= 3:
        d3 = min_generators(ctx.quotient(3))
        details["min_generators(G_3)"] = d3
        if d3 != 3:
            status = "fail"
            witness = witness or {"clause": "min_generators(G_3)", "value": d3}
    return VerificationReport("appb", inst.spec_dict(), n, status,
                              one_sided=True, details=details, witness=witness)


def compute_n_g(ctx: GroupContext, n: int) -> int | None:
    """Least n' with <a, b_1, ..., b_{r-1}> inside the section of st_K(2...2)
    at the vertex 2...2 of level n' (p = 2 Sunic groups); quotient-level,
    hence one-sided."""
    inst = ctx.inst
    k = sunic_k(ctx, n)
    for cand in range(1, n - 1):
        v = (2,) * cand
        sec = k.section_subgroup(v)
        targets = inst.generators(n - cand)[:inst.r]  # a, b_1..b_{r-1}
        if all(sec.contains(t) for t in targets):
            return cand
    return None


def verify_sunic_suite(ctx: GroupContext, n: int) -> VerificationReport:
    """The appendix facts for Sunic groups: branching subgroup, super strong
    fractality, the R_m pattern, n_G and the stabilizer inclusions."""
    inst = ctx.inst
    if not isinstance(inst, SunicInstance):
        return _skip("sunic", inst, n, "Sunic groups only")
    if not inst.is_regular_branch():
        return _skip("sunic", inst, n,
                     "(p,r)=(2,1) is infinite dihedral, not regular branch")
    details: dict = {}
    status = "pass"
    witness = None
    p, r = inst.p, inst.r
    g = ctx.quotient(n)
    # regular branch over K
    k_n = branch_subgroup(ctx, n)
    k_gens_shallow = branch_subgroup(ctx, n - 1).generating_set()
    rb = is_regular_branch_over(g, ctx.quotient(n - 1), k_n, k_gens_shallow)
    details["regular-branch-over-K"] = "pass" if rb else "fail"
    if not rb:
        status = "fail"
        witness = {"clause": "regular-branch-over-K"}
    # super strongly fractal (depth-capped)
    ssf_depth = min(n, 4)
    quotients = [ctx.quotient(d) for d in range(1, ssf_depth + 1)]
    ssf = is_super_strongly_fractal(quotients)
    details[f"super-strongly-fractal(n<={ssf_depth})"] = "pass" if ssf else "fail"
    if not ssf:
        status = "fail"
    if p == 2 and n >= 3:
        sec = g.stabilizer(2).section_subgroup((2, 2))
        full = ctx.quotient(n - 2)
        ok = sec.equal(full)
        details["phi_22(St(2))=G"] = "pass" if ok else "fail"
        if not ok:
            status = "fail"
    if p % 2 == 1:
        der = ctx.derived(n)
        details["psi(G') subdirect"] = (
            "pass" if is_subdirect_in_product(der, ctx.quotient(n - 1))
            else "fail")
        if details["psi(G') subdirect"] == "fail":
            status = "fail"
    # R_m pattern
    for m in range(1, n):
        rm = compute_rm(g, m)
        t = rm["t"]
        if m <= r:
            ok = t == p**m
            details[f"R_{m}={{1..p}}^{m}"] = "pass" if ok else f"fail: t={t}"
        else:
            ok = t >= (p - 1) * p**(m - 1) and rm["match"]
            details[f"R_{m}>=lower-bound"] = "pass" if ok else f"fail: t={t}"
        if not ok:
            status = "fail"
            witness = witness or {"clause": f"R_{m}", "t": t}
    n_g = None
    if p == 2:
        n_g = compute_n_g(ctx, n)
        details["n_G"] = n_g if n_g is not None else "not found within depth"
    # stabilizer inclusions (depth permitting)
    if p % 2 == 1:
        need = r + 3
        if n > need:
            gpp = ctx.derived(n, 2)
            ok = all(gpp.contains(x)
                     for x in g.stabilizer(need).generating_set())
            details[f"St({need})<=G''"] = "pass" if ok else "fail"
            if not ok:
                status = "fail"
        else:
            details[f"St({r + 3})<=G''"] = "skipped: needs depth > " + str(need)
    elif n_g is not None:
        need = r + n_g + 2
        if n > need:
            kp = commutator_subgroup(k_n, k_n, g)
            ok = all(kp.contains(x)
                     for x in g.stabilizer(need).generating_set())
            details[f"St({need})<=K'"] = "pass" if ok else "fail"
            if not ok:
                status = "fail"
        else:
            details[f"St({need})<=K'"] = f"skipped: needs depth > {need}"
    return VerificationReport("sunic", inst.spec_dict(), n, status,
                              one_sided=True, details=details, witness=witness)


def verify_generator_counts(ctx: GroupContext, n: int | None = None
                            ) -> VerificationReport:
    """d(G/St(n)) = 1 + rdot at n = rdot + 1 for groups that branch over the
    derived subgroup."""
    inst = ctx.inst
    if not isinstance(inst, MultiEGSInstance):
        return _skip("generator-count", inst, n or 0, "multi-EGS groups only")
    if branch_type(inst) is not BranchType.OVER_DERIVED:
        return _skip("generator-count", inst, n or 0,
                     "requires regular branch over the derived subgroup")
    rd = r_dot(inst)
    depth = n if n is not None else rd + 1
    if depth < rd + 1:
        return _skip("generator-count", inst, depth,
                     f"needs depth >= rdot+1 = {rd + 1}")
    d = min_generators(ctx.quotient(depth))
    ok = d == 1 + rd
    return VerificationReport(
        "generator-count", inst.spec_dict(), depth,
        "pass" if ok else "fail", one_sided=False,
        details={"rdot": rd, "min_generators": d, "expected": 1 + rd},
        witness=None if ok else {"min_generators": d, "expected": 1 + rd})


def verify_profinite_distinction(ctx_g: GroupContext, ctx_h: GroupContext
                                 ) -> VerificationReport:
    """Two groups with different numbers of directed generators have
    congruence completions of different abelianized rank."""
    gi, hi = ctx_g.inst, ctx_h.inst
    for inst in (gi, hi):
        if not (isinstance(inst, MultiEGSInstance)
                and branch_type(inst) is BranchType.OVER_DERIVED
                and has_csp(inst)):
            return _skip("profinite-pair", inst, 0,
                         "both groups must branch over the derived subgroup "
                         "and have the congruence subgroup property")
    rg, rh = r_dot(gi), r_dot(hi)
    dg = min_generators(ctx_g.quotient(rg + 1))
    dh = min_generators(ctx_h.quotient(rh + 1))
    ok = (dg == 1 + rg) and (dh == 1 + rh) and dg != dh
    return VerificationReport(
        "profinite-pair", {"G": gi.spec_dict(), "H": hi.spec_dict()},
        max(rg, rh) + 1, "pass" if ok else "fail", one_sided=False,
        details={"rank_G": dg, "rank_H": dh},
        witness=None if ok else {"rank_G": dg, "rank_H": dh})


# -- registry -----------------------------------------------------------------


def default_depth(name: str, inst) -> int:
    p = inst.p
    if name == "effective-csp":
        return 5 if p == 2 else (5 if p == 3 else 3)
    if name in ("branching", "ggs-strong"):
        return 4 if p == 3 else 3
    if name == "fg-lemma":
        return 4
    if name == "chain":
        return 4 if p <= 3 else 3
    if name == "width-rank":
        return 4 if p <= 3 else 3
    if name == "congruence-equiv":
        return 3
    if name == "appb":
        return 4 if p == 3 else 3
    if name == "sunic":
        return 6 if p == 2 else 5
    if name == "generator-count":
        if isinstance(inst, MultiEGSInstance):
            return r_dot(inst) + 1
        return 3
    raise KeyError(name)


CHECKS: dict[str, Callable] = {
    "effective-csp": lambda ctx, n, seed: verify_effective_csp(ctx, n, seed),
    "branching": lambda ctx, n, seed: verify_branching(ctx, n, seed),
    "ggs-strong": lambda ctx, n, seed: verify_ggs_strong(ctx, n, seed),
    "fg-lemma": lambda ctx, n, seed: verify_fg_lemma(ctx, n, seed),
    "chain": lambda ctx, n, seed: verify_chain_theorem(ctx, n),
    "width-rank": lambda ctx, n, seed: verify_width_and_rank(ctx, n, seed),
    "congruence-equiv": lambda ctx, n, seed: verify_congruence_equiv(ctx, n),
    "appb": lambda ctx, n, seed: verify_appb(ctx, n),
    "sunic": lambda ctx, n, seed: verify_sunic_suite(ctx, n),
    "generator-count": lambda ctx, n, seed: verify_generator_counts(ctx, n),
}


def run_check(ctx: GroupContext, name: str, depth: int | None = None,
              seed: int = 0, timings: bool = False) -> VerificationReport:
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
    n = depth if depth is not None else default_depth(name, ctx.inst)
    t0 = time.perf_counter()
    try:
        report = CHECKS[name](ctx, n, seed)
    except ResourceGuardError as exc:
        report = _skip(name, ctx.inst, n, f"resource guard: {exc}")
    if timings:
        report.millis = int((time.perf_counter() - t0) * 1000)
    return report


def run_all(ctx: GroupContext, depth: int | None = None, seed: int = 0,
            timings: bool = False, jobs: int = 1) -> list[VerificationReport]:
    names = sorted(CHECKS)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futs = {name: pool.submit(run_check, ctx, name, depth, seed,
                                      timings) for name in names}
            reports = [futs[name].result() for name in names]
    else:
        reports = [run_check(ctx, name, depth, seed, timings)
                   for name in names]
    return reports
