import pytest

from domania.basis import (
    catalog_basis,
    catalog_poset,
    enumerate_monotone_maps,
    one_point_basis,
    poset_of_basis,
)
from domania.construct import identity_embedding, verify_embedding
from domania.errors import UnboundParameter
from domania.spfunctor import (
    ConstD,
    Exp,
    Id,
    Prod,
    Sum,
    apply_functor_domain,
    apply_functor_embedding,
    chain_embedding,
    fixed_point_iso,
    inductive_limit_domain,
    omega_chain,
)

O = catalog_basis("two-chain")
RUNNING = Sum(ConstD("A"), Exp("B", Id()))  # X = A + [B -> X]
ENV = {"A": O, "B": O}


def test_identity_functor():
    assert apply_functor_domain(Id(), O, {}) is O


def test_unbound_parameter():
    with pytest.raises(UnboundParameter):
        apply_functor_domain(ConstD("Z"), O, {})


def test_running_example_stage_counts():
    pt = one_point_basis()
    d1 = apply_functor_domain(RUNNING, pt, ENV)
    assert len(d1.tokens()) == 4
    d2 = apply_functor_domain(RUNNING, d1, ENV)
    assert len(d2.tokens()) == 11
    # the function-space share agrees with the monotone-map oracle
    fun_part = len(enumerate_monotone_maps(poset_of_basis(O), poset_of_basis(d1)))
    assert fun_part == 8
    assert len(d2.tokens()) == 1 + len(O.tokens()) + fun_part


def test_omega_chain_counts():
    stages = omega_chain(RUNNING, ENV, 3)
    assert [len(s.basis.tokens()) for s in stages] == [1, 4, 11, 42]
    for s in stages[1:]:
        verify_embedding(s.embed_from_prev)


def test_constant_functor_chain_stabilizes():
    stages = omega_chain(ConstD("A"), {"A": O}, 3)
    assert [len(s.basis.tokens()) for s in stages] == [1, 2, 2, 2]
    for n in (2, 3):
        emb = stages[n].embed_from_prev
        for t in stages[n - 1].basis.tokens().tokens:
            assert emb.fwd(t) == t


def test_identity_functor_chain_is_one_point():
    stages = omega_chain(Id(), {}, 4)
    assert all(len(s.basis.tokens()) == 1 for s in stages)


def test_functor_identity_law():
    stages = omega_chain(RUNNING, ENV, 2)
    d1 = stages[1].basis
    femb = apply_functor_embedding(RUNNING, identity_embedding(d1), ENV)
    for t in stages[2].basis.tokens().tokens:
        assert femb.fwd(t) == t


def test_functor_embedding_injective():
    stages = omega_chain(RUNNING, ENV, 2)
    f01 = stages[1].embed_from_prev
    f12 = apply_functor_embedding(RUNNING, f01, ENV)
    images = [f12.fwd(t) for t in stages[1].basis.tokens().tokens]
    assert len({t.key for t in images}) == 4
    for t in images:
        assert stages[2].basis.has_token(t)


def test_functor_composition_law():
    stages = omega_chain(RUNNING, ENV, 3)
    f01 = stages[1].embed_from_prev
    f12 = stages[2].embed_from_prev
    lhs = apply_functor_embedding(RUNNING, f12.compose(f01), ENV)
    rhs = apply_functor_embedding(RUNNING, f12, ENV).compose(
        apply_functor_embedding(RUNNING, f01, ENV)
    )
    for t in stages[1].basis.tokens().tokens:
        assert lhs.fwd(t) == rhs.fwd(t)


def test_chain_coherence():
    stages = omega_chain(RUNNING, ENV, 3)
    f02 = chain_embedding(stages, 0, 2)
    f01 = chain_embedding(stages, 0, 1)
    f12 = chain_embedding(stages, 1, 2)
    for t in stages[0].basis.tokens().tokens:
        assert f02.fwd(t) == f12.fwd(f01.fwd(t))


def test_limit_of_constant_chain():
    stages = omega_chain(ConstD("A"), {"A": O}, 3)
    lim = inductive_limit_domain(stages)
    toks = lim.tokens()
    assert len(toks) == 2
    assert toks.truncated


def test_limit_canonical_token_count():
    stages = omega_chain(RUNNING, ENV, 3)
    lim = inductive_limit_domain(stages)
    assert len(lim.tokens(2)) == 11
    # stage-3 count frozen from the monotone-map oracle: 1 + |O| + 39 maps O->D2
    assert len(lim.tokens(3)) == 42
    # canonical stage tags are minimal: nothing new is an old image
    for n in range(1, 4):
        for c in lim.new_tokens_at(n):
            stage, inner = lim.decompose(c)
            assert stage == n
            emb = lim.stages[n].embed_from_prev
            assert emb.fwd(emb.proj(inner)) != inner


def test_limit_order_agrees_with_stage_projection():
    stages = omega_chain(RUNNING, ENV, 3)
    lim = inductive_limit_domain(stages)
    toks = list(lim.tokens(2).tokens)
    for p in toks:
        for q in toks:
            i, pt = lim.decompose(p)
            j, qt = lim.decompose(q)
            a = lim.lift_token(i, pt, 3)
            b = lim.lift_token(j, qt, 3)
            assert lim.leq(p, q) == stages[3].basis.leq(a, b)


def test_fixed_point_iso_running_example():
    stages = omega_chain(RUNNING, ENV, 4)
    lim = inductive_limit_domain(stages)
    iso, report = fixed_point_iso(RUNNING, ENV, lim, bound=3)
    assert report.verified
    assert report.token_count == 42
    for t in lim.tokens(3).tokens:
        assert iso.inv(iso.fwd(t)) == t


def test_fixed_point_iso_constant():
    stages = omega_chain(ConstD("A"), {"A": O}, 2)
    lim = inductive_limit_domain(stages)
    iso, report = fixed_point_iso(ConstD("A"), {"A": O}, lim, bound=1)
    assert report.verified
    # constant functor: unfolding is the parameter itself, tokens map onto it
    assert {iso.fwd(t).key for t in lim.tokens(1).tokens} == {
        t.key for t in O.tokens().tokens
    }


def test_fixed_point_iso_one_point():
    stages = omega_chain(Id(), {}, 2)
    lim = inductive_limit_domain(stages)
    iso, report = fixed_point_iso(Id(), {}, lim, bound=1)
    assert report.verified
    assert report.token_count == 1
