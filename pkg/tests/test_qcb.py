import itertools

import pytest

from domania.errors import BadParameterPedigree, NotT0, NotWeaklyEquivalent
from domania.qcb import (
    QConst,
    QId,
    QSeqExp,
    QSeqProd,
    QUnion,
    check_fun_coherence,
    check_prod_coherence,
    check_sum_coherence,
    class_topology,
    continuous_maps,
    discrete_space,
    enumerate_ideals,
    fixed_point_independence,
    functorial_representation,
    mk_space,
    qcb_fixed_point,
    quotient_matches_space,
    recovered_pseudobase,
    sierpinski_space,
    standard_representation,
    token_iso_pair,
    validate_pseudobase,
)
from domania.spfunctor import ConstD, Exp, Id, Sum


def sier_pseudobase():
    return [frozenset({"top"}), frozenset({"bot", "top"})]


def test_validate_pseudobase_sierpinski():
    X = sierpinski_space()
    assert validate_pseudobase(X, sier_pseudobase()).ok
    # dropping {top} breaks the convergence clause at top inside {top}
    v = validate_pseudobase(X, [frozenset({"bot", "top"})])
    assert not v.ok and v.clause == "convergence"
    assert v.witness[0] == "top"


def test_all_opens_form_pseudobase():
    for X in (sierpinski_space(), discrete_space(["0", "1"])):
        fam = [u for u in X.opens if u]
        assert validate_pseudobase(X, fam).ok


def test_standard_representation_sierpinski():
    X = sierpinski_space()
    rep = standard_representation(X, sier_pseudobase())
    classes, exact = rep.per.classes()
    assert exact and len(classes) == 2
    # two total ideals in the exhaustive enumeration
    ideals = enumerate_ideals(rep.sets)
    assert len(ideals) == 2
    decoded = {rep.decode[t.key] for t, in
               [(cls[0],) for cls in classes]}
    assert decoded == {"bot", "top"}


def test_standard_representation_discrete():
    X = discrete_space(["0", "1"])
    rep = standard_representation(
        X, [frozenset({"0"}), frozenset({"1"}), frozenset({"0", "1"})]
    )
    ideals = enumerate_ideals(rep.sets)
    assert len(ideals) == 3
    classes, _ = rep.per.classes()
    assert len(classes) == 2
    # the whole-space token decodes to no point in a discrete space
    bot = rep.per.carrier.bottom
    assert rep.decode[bot.key] is None


def test_non_t0_rejected():
    indiscrete = mk_space("blob", ["x", "y"], [[], ["x", "y"]])
    with pytest.raises(NotT0):
        standard_representation(indiscrete, [frozenset({"x", "y"})])


def test_greatest_representative():
    X = sierpinski_space()
    rep = standard_representation(X, sier_pseudobase())
    for x in X.points:
        g = rep.greatest_representative(x)
        assert rep.decode[g.key] == x
        # the greatest representative bounds every representative of x
        for t in rep.per.carrier.tokens().tokens:
            if rep.decode[t.key] == x:
                assert rep.per.carrier.leq(t, g)
                assert rep.per.related(t, g) is True


def test_recovered_pseudobase_sierpinski():
    rep = standard_representation(sierpinski_space(), sier_pseudobase())
    fam = recovered_pseudobase(rep)
    assert set(fam) == {frozenset({"bot", "top"}), frozenset({"top"})}
    assert validate_pseudobase(rep.space, fam).ok


def test_recovered_pseudobase_discrete():
    rep = standard_representation(
        discrete_space(["0", "1"]),
        [frozenset({"0"}), frozenset({"1"}), frozenset({"0", "1"})],
    )
    fam = recovered_pseudobase(rep)
    assert frozenset({"0"}) in fam and frozenset({"1"}) in fam
    assert validate_pseudobase(rep.space, fam).ok


def test_recovered_pseudobase_one_point():
    one = mk_space("pt", ["p"], [[], ["p"]])
    rep = standard_representation(one, [frozenset({"p"})])
    assert recovered_pseudobase(rep) == [frozenset({"p"})]


def test_quotient_topology_matches_space():
    for X, fam in (
        (sierpinski_space(), sier_pseudobase()),
        (
            discrete_space(["0", "1"]),
            [frozenset({"0"}), frozenset({"1"}), frozenset({"0", "1"})],
        ),
    ):
        rep = standard_representation(X, fam)
        assert quotient_matches_space(rep)


def test_unrolling_coherence():
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    fb = standard_representation(
        discrete_space(["tt", "ff"]),
        [frozenset({"tt"}), frozenset({"ff"}), frozenset({"tt", "ff"})],
    )
    assert check_sum_coherence(sier.per, fb.per)
    assert check_prod_coherence(sier.per, fb.per)
    assert check_fun_coherence(sier, sier)
    assert check_fun_coherence(fb, sier)
    assert check_fun_coherence(sier, fb)


def test_continuous_map_counts():
    S = sierpinski_space()
    # monotone maps of the specialisation order bot<=top: 3 of the 4
    assert len(continuous_maps(S, S)) == 3
    D = discrete_space(["0", "1"])
    assert len(continuous_maps(D, D)) == 4
    assert len(continuous_maps(S, D)) == 2


def test_functorial_representation_translation():
    gamma = QUnion(QConst("A"), QSeqExp("B", QId()))
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    expr, env = functorial_representation(gamma, {"A": sier, "B": sier})
    assert expr == Sum(ConstD("A"), Exp("B", Id()))
    assert set(env) == {"A", "B"}


def test_functorial_representation_rejects_bad_pedigree():
    from domania.basis import catalog_basis, tok
    from domania.per import finite_per

    bad = finite_per(catalog_basis("two-chain"), [(tok("top"), tok("top"))])
    with pytest.raises(BadParameterPedigree):
        functorial_representation(QConst("A"), {"A": bad})


def test_qcb_fixed_point_running_example():
    fb = standard_representation(
        discrete_space(["tt", "ff"]),
        [frozenset({"tt"}), frozenset({"ff"}), frozenset({"tt", "ff"})],
    )
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    gamma = QUnion(QConst("FB"), QSeqExp("S", QId()))
    report = qcb_fixed_point(gamma, {"FB": fb, "S": sier}, rank_bound=2)
    assert report.classes_by_rank[1] == 2
    assert sum(report.classes_by_rank.values()) > 2
    assert report.fixed_point_bijection
    assert all(report.coherence.values()), report.coherence
    assert report.pedigree["dense"] == "yes"
    assert report.hausdorff is True  # the positive parameter is discrete


def test_qcb_fixed_point_constant():
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    report = qcb_fixed_point(QConst("S"), {"S": sier}, rank_bound=2)
    assert sum(report.classes_by_rank.values()) == 2
    assert report.fixed_point_bijection
    assert report.hausdorff is False  # Sierpinski is not Hausdorff


def test_independence_identity():
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    F = Sum(ConstD("A"), Exp("B", Id()))
    env = {"A": sier.per, "B": sier.per}
    ident = {k: k for k in ("bot", "top")}
    pairs = {
        ("A", "A"): token_iso_pair(sier.per, sier.per, {
            ("pb", ("bot", "top")): ("pb", ("bot", "top")),
            ("pb", ("top",)): ("pb", ("top",)),
        }),
        ("B", "B"): token_iso_pair(sier.per, sier.per, {
            ("pb", ("bot", "top")): ("pb", ("bot", "top")),
            ("pb", ("top",)): ("pb", ("top",)),
        }),
    }
    report = fixed_point_independence(F, env, F, env, pairs, rank_bound=2)
    assert report.ok
    assert report.class_matching == [(i, i) for i in range(len(report.class_matching))]


def test_independence_relabeled_parameter():
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    relabeled = standard_representation(
        mk_space("sier2", ["lo", "hi"], [[], ["hi"], ["lo", "hi"]]),
        [frozenset({"hi"}), frozenset({"lo", "hi"})],
    )
    F = Sum(ConstD("A"), Exp("B", Id()))
    env_f = {"A": sier.per, "B": sier.per}
    env_g = {"A": relabeled.per, "B": relabeled.per}
    iso = token_iso_pair(sier.per, relabeled.per, {
        ("pb", ("bot", "top")): ("pb", ("hi", "lo")),
        ("pb", ("top",)): ("pb", ("hi",)),
    })
    pairs = {("A", "A"): iso, ("B", "B"): iso}
    report = fixed_point_independence(F, env_f, F, env_g, pairs, rank_bound=2)
    assert report.ok
    assert report.class_matching is not None
    assert len(report.class_matching) >= 2


def test_independence_shape_mismatch():
    sier = standard_representation(sierpinski_space(), sier_pseudobase())
    F = Sum(ConstD("A"), Exp("B", Id()))
    from domania.spfunctor import Prod

    G = Prod(ConstD("A"), Exp("B", Id()))
    with pytest.raises(NotWeaklyEquivalent):
        fixed_point_independence(
            F, {"A": sier.per, "B": sier.per}, G,
            {"A": sier.per, "B": sier.per}, {}, rank_bound=1,
        )
