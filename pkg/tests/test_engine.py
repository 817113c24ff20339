import numpy as np
import pytest

from branchgroups.catalog import (fabrykowski_gupta, gupta_sidki, make_ggs,
                                  make_sunic, preset)
from branchgroups.engine import (Subgroup, commutator_subgroup,
                                 derived_series, frattini_subgroup, group_of,
                                 is_regular_branch_over,
                                 is_subdirect_in_product,
                                 is_super_strongly_fractal, join,
                                 lower_central_series, min_generators,
                                 normal_closure)
from branchgroups.oracle import bfs_enumerate
from branchgroups.trees import Portrait, commutator, rooted_a


# -- orders against the BFS oracle (the oracle is the referee) ---------------

def test_cyclic_group_order():
    assert Subgroup(3, 3, [rooted_a(3, 3)]).order_exponent == 1


@pytest.mark.parametrize("depth,expected", [(1, 1), (2, 4)])
def test_fg_small_orders_match_bfs(depth, expected):
    inst = fabrykowski_gupta(3)
    g = group_of(inst, depth)
    count, exp = bfs_enumerate(inst.generators(depth))
    assert g.order_exponent == exp == expected
    assert count == 3**expected


def test_gs_depth2_matches_bfs():
    inst = gupta_sidki(3)
    g = group_of(inst, 2)
    _, exp = bfs_enumerate(inst.generators(2))
    assert g.order_exponent == exp == 3


def test_grigorchuk_depth3_matches_bfs():
    inst = preset("sunic-grigorchuk")
    g = group_of(inst, 3)
    count, exp = bfs_enumerate(inst.generators(3))
    assert g.order_exponent == exp == 7
    assert count == 128


def test_fg_known_level_dims(fg3_ctx):
    g = fg3_ctx.quotient(4)
    assert g.order_exponent == 28
    assert g.level_dims() == [1, 3, 6, 18]
    # chain consistency: exponent = sum of layer image dimensions
    assert g.order_exponent == sum(g.image_in_wm(m).dim for m in range(4))


# -- membership ----------------------------------------------------------------

def test_b_outside_cyclic():
    inst = fabrykowski_gupta(3)
    b = inst.generators(2)[1]
    assert not Subgroup(3, 2, [rooted_a(3, 2)]).contains(b)


def test_equal_and_subgroup(fg3_ctx):
    g = fg3_ctx.quotient(2)
    assert g.equal(g)
    assert g.stabilizer(1).is_subgroup_of(g)
    assert not g.is_subgroup_of(g.stabilizer(1))


def test_membership_of_random_words(fg3_ctx):
    g = fg3_ctx.quotient(3)
    rng = np.random.default_rng(3)
    gens = g.generating_set()
    x = Portrait.identity(3, 3)
    for _ in range(10):
        x = x * gens[rng.integers(len(gens))]
        assert g.contains(x)


# -- stabilizers -----------------------------------------------------------------

def test_stabilizer_endpoints(fg3_ctx):
    g = fg3_ctx.quotient(2)
    assert g.stabilizer(0) is g
    assert g.stabilizer(2).order_exponent == 0


def test_stab_one_has_index_p(fg3_ctx):
    g = fg3_ctx.quotient(3)
    assert g.order_exponent - g.stabilizer(1).order_exponent == 1


def test_nested_stabilizers(fg3_ctx):
    g = fg3_ctx.quotient(4)
    st2a = g.stabilizer(1).stabilizer(2)
    st2b = g.stabilizer(2)
    assert st2a.order_exponent == st2b.order_exponent
    assert st2a.is_subgroup_of(st2b)


def test_max_stab_depth(fg3_ctx):
    g = fg3_ctx.quotient(4)
    assert g.max_stab_depth() == 0
    assert g.stabilizer(2).max_stab_depth() == 2
    with pytest.raises(ValueError):
        Subgroup(3, 4, []).max_stab_depth()


# -- sections --------------------------------------------------------------------

def test_section_of_root(fg3_ctx):
    g = fg3_ctx.quotient(3)
    assert g.section_subgroup(()) is g


def test_fg_sections_of_stab_are_full(fg3_ctx):
    # super strong fractality at a single vertex
    g = fg3_ctx.quotient(3)
    target = fg3_ctx.quotient(2)
    sec = g.stabilizer(1).section_subgroup((2,))
    assert sec.equal(target)


def test_section_with_base_change():
    # st_H(v) for a subgroup not fixing v requires the path-first chain
    inst = fabrykowski_gupta(3)
    g = group_of(inst, 3)
    sec = g.section_subgroup((1,))
    assert sec.equal(group_of(inst, 2))


def test_grigorchuk_phi22(grigorchuk_ctx):
    g = grigorchuk_ctx.quotient(5)
    sec = g.stabilizer(2).section_subgroup((2, 2))
    assert sec.equal(grigorchuk_ctx.quotient(3))


def test_super_strongly_fractal(fg3_ctx, grigorchuk_ctx):
    assert is_super_strongly_fractal([fg3_ctx.quotient(d) for d in (1, 2, 3, 4)])
    assert is_super_strongly_fractal(
        [grigorchuk_ctx.quotient(d) for d in (1, 2, 3, 4)])
    cyclic = [Subgroup(3, d, [rooted_a(3, d)]) for d in (1, 2)]
    assert not is_super_strongly_fractal(cyclic)


# -- closures and series -----------------------------------------------------------

def test_normal_closure_of_identity(fg3_ctx):
    g = fg3_ctx.quotient(3)
    assert normal_closure([Portrait.identity(3, 3)], g).order_exponent == 0


def test_commutator_index(fg3_ctx):
    # |G : G'| = p^(r+1) = 9
    g = fg3_ctx.quotient(3)
    assert g.order_exponent - fg3_ctx.derived(3).order_exponent == 2


def test_lower_central_layers_small(fg3_ctx):
    g = fg3_ctx.quotient(4)
    series = lower_central_series(g)
    dims = [series[k].order_exponent - series[k + 1].order_exponent
            for k in range(len(series) - 1)]
    assert all(1 <= d <= 2 for d in dims)
    assert series[-1].is_trivial()


def test_gamma3_sits_strictly_above_st2(fg3_ctx):
    # St(2) <= gamma_3 with index p: the element [[a,b],a] lies in gamma_3
    # but moves level-2 vertices (its level-1 labels are (2,2,2)), so the
    # maximal stabilized level of gamma_3 is 1, not 2.
    g = fg3_ctx.quotient(4)
    gamma3 = fg3_ctx.gamma(3, 4)
    st2 = g.stabilizer(2)
    assert st2.is_subgroup_of(gamma3)
    assert gamma3.order_exponent == st2.order_exponent + 1
    a, b = g.generating_set()
    witness = commutator(commutator(a, b), a)
    assert gamma3.contains(witness)
    assert list(witness.level_labels(1)) == [2, 2, 2]
    assert gamma3.max_stab_depth() == 1


def test_derived_vs_lcs(fg3_ctx):
    g = fg3_ctx.quotient(3)
    der = derived_series(g)
    assert der[1].equal(fg3_ctx.gamma(2, 3))


def test_sunic_k_normal_closure(grigorchuk_ctx):
    from branchgroups.suite import sunic_k
    k = sunic_k(grigorchuk_ctx, 4)
    g = grigorchuk_ctx.quotient(4)
    # index of K in the Grigorchuk group is 16
    assert g.order_exponent - k.order_exponent == 4
    for x in k.generating_set():
        for amb in g.generating_set():
            assert k.contains(x.conjugate(amb))


def test_min_generators_basics(fg3_ctx):
    assert min_generators(Subgroup(3, 2, [rooted_a(3, 2)])) == 1
    assert min_generators(fg3_ctx.quotient(2)) == 2


def test_frattini_of_elementary_abelian():
    a = rooted_a(3, 1)
    g = Subgroup(3, 1, [a])
    assert frattini_subgroup(g).order_exponent == 0


# -- structure identities (Prop rank-p and st-in-derived) ---------------------------

def test_rank_p_identities(fg3_ctx):
    g = fg3_ctx.quotient(4)
    st1 = g.stabilizer(1)
    st2 = g.stabilizer(2)
    st1p = commutator_subgroup(st1, st1, g)
    assert st1p.equal(st2)
    # psi^{-1}(G' x G' x G') == St(2)
    from branchgroups.engine import psi_preimage_gens
    shallow = fg3_ctx.derived(3)
    pre = Subgroup(3, 4, psi_preimage_gens(shallow.generating_set(), 1, 4))
    assert pre.equal(st2)


def test_st_rplus1_in_derived(fg3_ctx):
    g = fg3_ctx.quotient(4)
    der = fg3_ctx.derived(4)
    assert g.stabilizer(2).is_subgroup_of(der)


def test_st_rplus1_in_derived_two_rays():
    # the same inclusion for an independent two-vector system: St(3) <= G'
    from branchgroups.catalog import make_multi_ggs
    from branchgroups.suite import GroupContext
    ctx = GroupContext(make_multi_ggs(3, [(1, 0), (0, 1)]))
    g = ctx.quotient(4)
    assert g.stabilizer(3).is_subgroup_of(ctx.derived(4))


# -- branch structure -----------------------------------------------------------

def test_fg_regular_branch_over_derived(fg3_ctx):
    g4, g3 = fg3_ctx.quotient(4), fg3_ctx.quotient(3)
    k4 = fg3_ctx.derived(4)
    k3 = fg3_ctx.derived(3)
    assert is_regular_branch_over(g4, g3, k4, k3.generating_set())


def test_symmetric_p5_not_branch_over_derived():
    from branchgroups.suite import GroupContext
    ctx = GroupContext(make_ggs(5, (0, 1, 1, 0)))
    g3, g2 = ctx.quotient(3), ctx.quotient(2)
    derived3, derived2 = ctx.derived(3), ctx.derived(2)
    assert not is_regular_branch_over(g3, g2, derived3,
                                      derived2.generating_set())
    gamma3 = ctx.gamma(3, 3)
    gamma3_shallow = ctx.gamma(3, 2)
    assert is_regular_branch_over(g3, g2, gamma3,
                                  gamma3_shallow.generating_set())


def test_subdirectness(fg3_ctx):
    assert is_subdirect_in_product(fg3_ctx.derived(3), fg3_ctx.quotient(2))
    triv = Subgroup(3, 3, [])
    assert not is_subdirect_in_product(triv, fg3_ctx.quotient(2))
