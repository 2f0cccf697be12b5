import pytest

from domania.basis import tok
from domania.builtins import flatbool_per, flatnat_per, sierpinski_per, trivial_per
from domania.errors import NotAnAlgebra, TrivialParameter
from domania.ordinals import OMEGA, fin, omega_plus
from domania.per import InjValue, PerMap, SemFn, check_property, is_equiembedding
from domania.perlfp import (
    apply_functor_per,
    counterexample_phi,
    functor_is_trivial,
    mediating_algebra_morphism,
    per_chain_extend,
    stabilization_probe,
)
from domania.spfunctor import ConstD, Exp, Id, Sum

RUNNING = Sum(ConstD("A"), Exp("B", Id()))


def running_env():
    return {"A": sierpinski_per(), "B": sierpinski_per()}


def flatnat_env(nat_bound=8):
    return {"A": sierpinski_per(), "N": flatnat_per(nat_bound)}


FLATNAT_EQ = Sum(ConstD("A"), Exp("N", Id()))


def test_running_chain_class_counts():
    chain = per_chain_extend(RUNNING, running_env(), fin(3))
    counts = []
    for (o, per) in chain.stages[1:]:
        classes, exact = per.classes()
        assert exact
        counts.append(len(classes))
    assert counts == [1, 2, 3]


def test_constant_functor_stabilizes_at_one():
    chain = per_chain_extend(ConstD("A"), {"A": sierpinski_per()}, omega_plus(1), n_finite=3)
    v = stabilization_probe(chain, rank_bound=3)
    assert v.stabilized
    assert v.stage == fin(1)


def test_trivial_functor_every_stage_trivial():
    env = running_env()
    trivial_eq = Exp("B", Id())  # [B -> X] applied to the trivial per stays trivial
    assert functor_is_trivial(trivial_eq, env)
    chain = per_chain_extend(trivial_eq, env, fin(3))
    for (o, per) in chain.stages:
        ts, _ = per.totals()
        assert ts == []
    assert not functor_is_trivial(RUNNING, env)


def test_running_example_stabilizes_at_omega():
    chain = per_chain_extend(RUNNING, running_env(), omega_plus(1), n_finite=5)
    for rank_bound in (1, 2, 3, 4):
        v = stabilization_probe(chain, rank_bound)
        assert v.stabilized
        assert v.stage == OMEGA


def test_chain_stage_pers_preserve_properties():
    chain = per_chain_extend(RUNNING, running_env(), fin(3))
    for (o, per) in chain.stages[1:]:
        for prop in ("convex", "local", "complete"):
            assert check_property(per, prop).holds, (str(o), prop)
        assert getattr(per.flags, prop) in ("yes", "unknown")


def test_chain_links_are_equiembeddings():
    chain = per_chain_extend(RUNNING, running_env(), fin(3))
    for pe in chain.embeddings:
        assert is_equiembedding(pe).ok


def test_counterexample_phi_rank_pattern():
    report = counterexample_phi(sierpinski_per(), bound=5)
    assert report.ranks == {n: n for n in range(6)}
    assert report.total_stages == {n: n + 1 for n in range(6)}
    assert report.equivariant_on_fragment
    assert not report.total_at_finite_stage
    assert isinstance(report.phi, InjValue)
    assert isinstance(report.phi.value, SemFn)


def test_counterexample_phi_flatbool_parameter():
    report = counterexample_phi(flatbool_per(), bound=3)
    assert report.ranks == {n: n for n in range(4)}


def test_counterexample_phi_trivial_parameter():
    with pytest.raises(TrivialParameter):
        counterexample_phi(trivial_per(), bound=2)


def test_flatnat_chain_not_stabilized():
    chain = per_chain_extend(
        FLATNAT_EQ, flatnat_env(8), omega_plus(1), n_finite=6, nat_bound=8
    )
    v = stabilization_probe(chain, rank_bound=4)
    assert v.kind == "witness"
    report = v.witness
    assert report.ranks[3] == 3
    assert isinstance(report.phi, InjValue)


def test_mediating_morphism_identity_family():
    # algebra = the fixed point itself with the fold map: h_n matches the
    # canonical stage inclusion into the limit, token for token
    env = running_env()
    chain = per_chain_extend(RUNNING, env, omega_plus(1), n_finite=4)
    fold = PerMap(
        chain.unfolded[0], chain.per_limit.per, chain.iso.inv, name="fold"
    )
    report = mediating_algebra_morphism(
        RUNNING, env, (chain.per_limit.per, fold), upto=2, bound=2
    )
    assert report.coherent and report.morphism_law_ok
    for n in (0, 1, 2):
        emb = chain.per_limit.limit.stage_embedding(n)
        for t in report.maps[n].emb.source.tokens().tokens:
            assert report.maps[n].emb.fwd(t) == emb.fwd(t)


def test_mediating_morphism_two_step_unrolling():
    # hand-computable direct recursion: h2 sends stage-2 tokens to their
    # canonical limit images
    env = running_env()
    chain = per_chain_extend(RUNNING, env, omega_plus(1), n_finite=4)
    fold = PerMap(chain.unfolded[0], chain.per_limit.per, chain.iso.inv, name="fold")
    report = mediating_algebra_morphism(RUNNING, env, (chain.per_limit.per, fold), upto=2, bound=2)
    h2 = report.maps[2]
    lim = chain.per_limit.limit
    for t in h2.emb.source.tokens().tokens:
        assert h2.emb.fwd(t) == lim.canonical(2, t)


def test_mediating_rejects_non_equivariant_algebra():
    env = running_env()
    chain = per_chain_extend(RUNNING, env, omega_plus(1), n_finite=3)
    lim_carrier = chain.per_limit.limit
    bad = PerMap(
        chain.unfolded[0],
        chain.per_limit.per,
        lambda v: lim_carrier.bottom,
        name="collapse",
    )
    with pytest.raises(NotAnAlgebra):
        mediating_algebra_morphism(RUNNING, env, (chain.per_limit.per, bad), upto=1)


def test_countably_based_trace():
    chain = per_chain_extend(RUNNING, running_env(), fin(2))
    for (o, per) in chain.stages:
        assert per.flags.countably_based in ("yes", "unknown")
        ts = per.carrier.tokens(6)
        assert len(ts.tokens) < 1000


def test_mediating_morphism_unique_on_fragment():
    # exhaustive search over candidate token maps: only the constructed one
    # satisfies the algebra-morphism law on the small instance A + X
    from domania.per import PerMap
    from domania.spfunctor import Sum, ConstD, Id
    import itertools

    expr = Sum(ConstD("A"), Id())
    env = {"A": sierpinski_per()}
    chain = per_chain_extend(expr, env, omega_plus(1), n_finite=3)
    fold = PerMap(chain.unfolded[0], chain.per_limit.per, chain.iso.inv, name="fold")
    report = mediating_algebra_morphism(expr, env, (chain.per_limit.per, fold), upto=1, bound=2)
    assert report.coherent and report.morphism_law_ok
    h1 = report.maps[1]
    d1 = h1.emb.source
    d1_toks = list(d1.tokens().tokens)
    lim = chain.per_limit.limit
    sum_carrier = chain.iso.unfolded
    f12 = chain.per_limit.limit.stages[2].embed_from_prev
    e_frag = list(lim.tokens(2).tokens)

    def law_holds(cand):
        # h = fold . F(h) . f_{1,2} with F(h) acting by cases on the sum
        for t in d1_toks:
            u = f12.fwd(t)
            spl = sum_carrier.split(u)
            if spl is None:
                fh = chain.iso.unfolded.bottom
            else:
                i, x = spl
                fh = (
                    chain.iso.unfolded.inject(0, x)
                    if i == 0
                    else chain.iso.unfolded.inject(1, cand[x.key])
                )
            if cand[t.key] != chain.iso.inv(fh):
                return False
        return True

    # candidate token maps D_1 -> fragment of the limit
    matches = 0
    for values in itertools.product(e_frag, repeat=len(d1_toks)):
        cand = {t.key: v for (t, v) in zip(d1_toks, values)}
        if law_holds(cand):
            matches += 1
            for t in d1_toks:
                assert cand[t.key] == h1.emb.fwd(t)
    assert matches == 1


def test_upwards_closed_preserved_to_limit():
    # stages of a chain with upwards-closed parameters stay upwards-closed,
    # and so does the limit on checked fragments
    chain = per_chain_extend(RUNNING, running_env(), omega_plus(1), n_finite=3)
    for (o, per) in chain.stages:
        if o.is_finite and o.k >= 1:
            assert per.flags.upwards_closed == "yes"
            assert check_property(per, "upwards_closed").holds, str(o)
    v = check_property(chain.per_limit.per, "upwards_closed", 3)
    assert v.status != "fails"
