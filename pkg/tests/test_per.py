import itertools

import pytest

from domania.basis import catalog_basis, one_point_basis, tok
from domania.builtins import flatbool_per, sierpinski_per, trivial_per
from domania.construct import Embedding, identity_embedding
from domania.errors import IncoherentChain, NotTotal, NotUniform
from domania.per import (
    DomainPer,
    PerEmbedding,
    PerMap,
    check_property,
    equi_injective,
    finite_per,
    flags_from_checks,
    image_is_equiembedding_check,
    image_per,
    is_equiembedding,
    is_equivariant,
    limit_per,
    per_construct,
    per_identity,
    prec_check,
    related_to_known,
    uniform_limit_map,
    weak_iso_check,
)

O = catalog_basis("two-chain")
BOT, TOP = tok("bot"), tok("top")


def osier():
    return sierpinski_per()


def test_per_construct_sum_classes():
    s = per_construct("sum", osier(), osier())
    classes, exact = s.classes()
    assert exact
    assert len(classes) == 2
    assert all(len(c) == 1 for c in classes)


def test_per_construct_prod_classes():
    p = per_construct("prod", osier(), osier())
    classes, exact = p.classes()
    assert exact
    assert len(classes) == 1


def test_per_construct_fun_classes():
    f = per_construct("fun", osier(), osier())
    classes, exact = f.classes()
    assert exact
    assert len(classes) == 1
    # the single class holds the two maps sending top to top
    assert len(classes[0]) == 2


def test_constructed_rel_symmetric_transitive():
    for kind in ("sum", "prod", "fun"):
        per = per_construct(kind, osier(), flatbool_per())
        toks = list(per.carrier.tokens().tokens)
        rel = {(a.key, b.key) for a in toks for b in toks if per.related(a, b) is True}
        for (a, b) in rel:
            assert (b, a) in rel
        for (a, b) in rel:
            for (c, d) in rel:
                if b == c:
                    assert (a, d) in rel


def test_osier_properties():
    per = osier()
    for prop in ("convex", "local", "complete", "upwards_closed", "dense"):
        assert check_property(per, prop).holds, prop


def test_vee_per_local_fails_with_witness():
    vee = catalog_basis("vee")
    per = finite_per(vee, [(tok("a"), tok("a")), (tok("a"), tok("b"))])
    v = check_property(per, "local")
    assert v.status == "fails"
    x, cls = v.witness
    assert set(t.key for t in cls) == {"a", "b"}


def test_empty_per_properties_vacuous():
    per = finite_per(O, [])
    for prop in ("weakly_convex", "convex", "local", "complete", "upwards_closed"):
        assert check_property(per, prop).holds, prop
    # dense fails: no token has a total extension
    assert check_property(per, "dense").status == "fails"


def test_flags_agree_with_checks_on_builtins():
    for per in (osier(), flatbool_per()):
        computed = flags_from_checks(per)
        for prop in ("convex", "local", "complete", "upwards_closed", "dense"):
            assert getattr(computed, prop) == getattr(per.flags, prop), prop


def test_prec_check():
    per = osier()
    assert prec_check(per, BOT, TOP)
    assert prec_check(per, TOP, TOP)
    fper = per_construct("fun", osier(), osier())
    fb = fper.carrier
    const_top = fb.make([(BOT, TOP)])
    strict_top = fb.make([(TOP, TOP)])
    assert prec_check(fper, strict_top, const_top)
    with pytest.raises(NotTotal):
        prec_check(per, BOT, BOT)


def test_is_equivariant_and_equi_injective():
    per = osier()
    ok, _ = is_equivariant(lambda v: v, per, per)
    assert ok is True
    ok, _ = equi_injective(lambda v: v, per, per)
    assert ok is True

    const_top = lambda v: TOP
    ok, _ = is_equivariant(const_top, per, per)
    assert ok is True
    ok, _ = equi_injective(const_top, per, per)
    assert ok is True  # one class only, so reflection is vacuous

    s = per_construct("sum", osier(), osier())
    sb = s.carrier

    def swap(v):
        spl = sb.split(v)
        if spl is None:
            return v
        i, x = spl
        return sb.inject(1 - i, x)

    ok, _ = is_equivariant(swap, s, s)
    assert ok is True
    ok, _ = equi_injective(swap, s, s)
    assert ok is True


def test_related_to_known_shortcut():
    per = osier()
    ok, _ = related_to_known(lambda v: v, lambda v: TOP, per, per)
    assert ok is True  # on totals the two maps agree up to the per


def test_is_equiembedding_identity():
    per = osier()
    v = is_equiembedding(PerEmbedding(identity_embedding(O), per, per))
    assert v.ok and not v.unknown


def _embedding_from_keys(src, tgt, mapping):
    fwd_map = {k: tok(v) for (k, v) in mapping.items()}

    def fwd(t):
        return fwd_map[t.key]

    def proj(q):
        below = [p for p in src.tokens().tokens if tgt.leq(fwd(p), q)]
        return src.lub(below) if below else src.bottom

    return Embedding(src, tgt, fwd, proj)


def test_reflection_counterexample_found_by_search():
    """Search all pers on the three-chain for one making the inclusion of
    (O, top~top) fail the reflection clause, then confirm the verdict."""
    three = catalog_basis("three-chain")
    emb = _embedding_from_keys(O, three, {"bot": "bot", "top": "top"})
    src = osier()
    elems = [t.key for t in three.tokens().tokens]
    found = None
    for n_pairs in range(1, 7):
        for gen in itertools.combinations(
            [(a, b) for a in elems for b in elems], n_pairs
        ):
            try:
                tgt = finite_per(three, [(tok(a), tok(b)) for (a, b) in gen])
            except Exception:
                continue
            ok, _ = is_equivariant(emb.fwd, src, tgt)
            if ok is not True:
                continue
            v = is_equiembedding(PerEmbedding(emb, src, tgt))
            if not v.ok and v.clause == "reflection":
                found = (tgt, v)
                break
        if found:
            break
    assert found is not None
    tgt, v = found
    x, y = v.witness
    assert tgt.related(emb.fwd(x), y) is True
    assert src.related(x, emb.proj(y)) is False


def test_inclusion_into_fuller_per_passes():
    per_small = osier()
    per_big = finite_per(O, [(BOT, BOT), (TOP, TOP)])
    v = is_equiembedding(PerEmbedding(identity_embedding(O), per_small, per_big))
    assert v.ok


def test_image_per_of_identity():
    per = osier()
    img = image_per(per_identity(per))
    assert img.related(TOP, TOP) is True
    assert img.related(BOT, BOT) is False
    classes, _ = img.classes()
    assert len(classes) == 1


def test_image_per_of_constant():
    per = osier()
    phi = PerMap(per, per, lambda v: TOP, name="const-top")
    img = image_per(phi)
    classes, _ = img.classes()
    assert len(classes) == 1
    assert image_is_equiembedding_check(phi).ok
    assert image_is_equiembedding_check(per_identity(per)).ok


def test_weak_iso_checks():
    per = osier()
    ok, _ = weak_iso_check(per_identity(per), per_identity(per))
    assert ok is True

    s = per_construct("sum", osier(), osier())
    sb = s.carrier

    def swap(v):
        spl = sb.split(v)
        if spl is None:
            return v
        i, x = spl
        return sb.inject(1 - i, x)

    sw = PerMap(s, s, swap, name="swap")
    ok, _ = weak_iso_check(sw, sw)
    assert ok is True

    # constants between pers with two classes fail the round trip
    c0 = PerMap(s, s, lambda v: sb.inject(0, TOP), name="c0")
    ok, w = weak_iso_check(c0, c0)
    assert ok is False


def _constant_chain(per, n):
    pers = [per] * n
    embs = [
        PerEmbedding(identity_embedding(per.carrier), per, per, name=f"id{i}")
        for i in range(n - 1)
    ]
    return pers, embs


def test_limit_of_constant_chain():
    pers, embs = _constant_chain(osier(), 3)
    pl = limit_per(pers, embs)
    top0 = pl.limit.canonical(0, TOP)
    assert pl.per.related(top0, top0) is True
    assert pl.rank_of(top0) == 0
    classes, _ = pl.per.classes()
    assert len(classes) == 1


def test_incoherent_chain_rejected():
    per_small = osier()
    three = catalog_basis("three-chain")
    # an embedding that is not equivariant: top goes below a non-total
    tgt = finite_per(three, [(tok("top"), tok("top"))])
    emb = _embedding_from_keys(O, three, {"bot": "bot", "top": "mid"})
    with pytest.raises(IncoherentChain):
        limit_per([per_small, tgt], [PerEmbedding(emb, per_small, tgt)])


def test_uniform_limit_map_identity_and_swap():
    s = per_construct("sum", osier(), osier())
    pers, embs = _constant_chain(s, 3)
    pl = limit_per(pers, embs)

    ident = uniform_limit_map([PerMap(s, s, lambda v: v)] * 3, pl, pl)
    t = pl.limit.canonical(0, s.carrier.inject(0, TOP))
    assert ident(t) == t

    sb = s.carrier

    def swap(v):
        spl = sb.split(v)
        if spl is None:
            return v
        i, x = spl
        return sb.inject(1 - i, x)

    fam = [PerMap(s, s, swap, name="swap")] * 3
    phi = uniform_limit_map(fam, pl, pl, chi_family=fam)
    assert phi(t) == pl.limit.canonical(0, sb.inject(1, TOP))


def test_uniform_limit_map_rejects_nonuniform_family():
    s = per_construct("sum", osier(), osier())
    pers, embs = _constant_chain(s, 3)
    pl = limit_per(pers, embs)
    sb = s.carrier

    def swap(v):
        spl = sb.split(v)
        if spl is None:
            return v
        i, x = spl
        return sb.inject(1 - i, x)

    fam = [
        PerMap(s, s, lambda v: v),
        PerMap(s, s, lambda v: v),
        PerMap(s, s, swap),
    ]
    with pytest.raises(NotUniform) as ei:
        uniform_limit_map(fam, pl, pl)
    assert ei.value.stage == 2
