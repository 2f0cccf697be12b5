import itertools

import pytest

from domania.basis import (
    FlatNatBasis,
    catalog_basis,
    catalog_names,
    catalog_poset,
    check_domain_axioms,
    enumerate_monotone_maps,
    mk_finite_basis,
    one_point_basis,
    poset_of_basis,
    tok,
)
from domania.errors import (
    NoLeastElement,
    NotAntisymmetric,
    NotConsistentlyComplete,
    UnknownToken,
)


def test_sierpinski_two_tokens():
    b = mk_finite_basis(["bot", "top"], [("bot", "top")], name="O")
    assert len(b.tokens()) == 2
    assert b.bottom == tok("bot")
    assert b.leq(tok("bot"), tok("top"))
    assert not b.leq(tok("top"), tok("bot"))


def test_vee_inconsistent_arms():
    b = mk_finite_basis(["bot", "a", "b"], [("bot", "a"), ("bot", "b")])
    assert not b.cons((tok("a"), tok("b")))
    assert b.cons((tok("bot"), tok("a")))


def test_two_maximal_upper_bounds_rejected():
    # a,b below both c and d, with c,d incomparable: {a,b} consistent, no lub
    with pytest.raises(NotConsistentlyComplete) as ei:
        mk_finite_basis(
            ["bot", "a", "b", "c", "d"],
            [
                ("bot", "a"),
                ("bot", "b"),
                ("a", "c"),
                ("b", "c"),
                ("a", "d"),
                ("b", "d"),
            ],
        )
    assert ei.value.witness is not None


def test_cycle_rejected():
    with pytest.raises(NotAntisymmetric):
        mk_finite_basis(["x", "y"], [("x", "y"), ("y", "x")])


def test_no_least_rejected():
    with pytest.raises(NoLeastElement):
        mk_finite_basis(["x", "y"], [])


def test_axiom_report_catalog():
    for name in catalog_names():
        rep = check_domain_axioms(catalog_basis(name))
        assert rep.all_pass, (name, [e.name for e in rep.entries if not e.ok])
        assert not rep.bounded


class _BrokenLub:
    """Delegates to a real basis but reports a non-least upper bound."""

    def __init__(self, inner, top):
        self._inner = inner
        self._top = top
        self.name = inner.name + "!"
        self.finite = True

    def __getattr__(self, attr):
        return getattr(self._inner, attr)

    @property
    def bottom(self):
        return self._inner.bottom

    def lub(self, ts):
        ts = list(ts)
        if len(ts) >= 2 and any(t != self.bottom for t in ts):
            return self._top
        return self._inner.lub(ts)


def test_axiom_report_detects_bad_lub():
    base = catalog_basis("three-chain")
    broken = _BrokenLub(base, tok("top"))
    rep = check_domain_axioms(broken)
    assert not rep.all_pass
    assert any(e.name == "LubNotLeast" and not e.ok for e in rep.entries)
    bad = next(e for e in rep.entries if e.name == "LubNotLeast")
    assert bad.witness is not None


def test_axiom_report_bounded_on_staged_basis():
    rep = check_domain_axioms(FlatNatBasis(), bound=50)
    assert rep.all_pass
    assert rep.bounded


def test_monotone_map_counts():
    o = catalog_poset("two-chain")
    assert len(enumerate_monotone_maps(o, o)) == 3
    pt = catalog_poset("one-point")
    for name in catalog_names():
        p = catalog_poset(name)
        assert len(enumerate_monotone_maps(pt, p)) == len(p.elements)
    vee = catalog_poset("vee")
    assert len(enumerate_monotone_maps(o, vee)) == 5


def test_monotone_maps_each_listed_once():
    o = catalog_poset("two-chain")
    maps = enumerate_monotone_maps(o, catalog_poset("three-chain"))
    seen = {tuple(sorted(m.items())) for m in maps}
    assert len(seen) == len(maps) == 6


def test_up_sets():
    o = catalog_basis("two-chain")
    assert set(o.up_set(tok("bot")).tokens) == {tok("bot"), tok("top")}
    assert set(o.up_set(tok("top")).tokens) == {tok("top")}
    vee = catalog_basis("vee")
    assert set(vee.up_set(tok("bot")).tokens) == {tok("bot"), tok("a"), tok("b")}
    with pytest.raises(UnknownToken):
        o.up_set(tok("zap"))


def test_lub_union_compatibility():
    # lub(S u T) = lub({lub(S)} u T) for consistent combinations, exhaustively
    for name in catalog_names():
        b = catalog_basis(name)
        toks = list(b.tokens().tokens)
        subsets = [c for r in range(1, 3) for c in itertools.combinations(toks, r)]
        for s in subsets:
            if not b.cons(s):
                continue
            for t in subsets:
                union = list(s) + list(t)
                if not b.cons(union):
                    continue
                assert b.lub(union) == b.lub([b.lub(s)] + list(t))


def test_flatnat_queries():
    n = FlatNatBasis()
    assert n.leq(n.bottom, n.nat(3))
    assert not n.leq(n.nat(2), n.nat(3))
    assert n.cons((n.bottom, n.nat(1)))
    assert not n.cons((n.nat(0), n.nat(1)))
    ts = n.tokens(5)
    assert ts.truncated and len(ts) == 6


def test_poset_of_basis_round_trip():
    b = catalog_basis("diamond")
    p = poset_of_basis(b)
    assert len(p.elements) == 4
    assert p.leq("a", "top") and not p.leq("a", "b")


def test_one_point():
    b = one_point_basis()
    assert len(b.tokens()) == 1
    assert b.cons(b.tokens().tokens)
