"""Strictly positive operation ASTs, their action on bases and embeddings,
omega-chains, inductive limits, and the fixed-point order isomorphism."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .basis import Basis, Token, TokenSet, tok
from .construct import (
    Embedding,
    embed_map,
    fun_basis,
    identity_embedding,
    prod_basis,
    sum_basis,
)
from .errors import IsoFailure, UnboundParameter
from .ordinals import Ordinal, fin


# ---------------------------------------------------------------------------
# AST


class FunctorExpr:
    pass


@dataclass(frozen=True)
class Id(FunctorExpr):
    def __str__(self):
        return "X"


@dataclass(frozen=True)
class ConstD(FunctorExpr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Sum(FunctorExpr):
    left: FunctorExpr
    right: FunctorExpr

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Prod(FunctorExpr):
    left: FunctorExpr
    right: FunctorExpr

    def __str__(self):
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class Exp(FunctorExpr):
    param: str
    body: FunctorExpr

    def __str__(self):
        return f"[{self.param} -> {self.body}]"


def validate_functor(expr: FunctorExpr, env: Dict[str, object]):
    """Names must resolve; exponent positions must be constant parameters."""
    if isinstance(expr, Id):
        return
    if isinstance(expr, ConstD):
        if expr.name not in env:
            raise UnboundParameter(f"unbound parameter {expr.name!r}")
        return
    if isinstance(expr, (Sum, Prod)):
        validate_functor(expr.left, env)
        validate_functor(expr.right, env)
        return
    if isinstance(expr, Exp):
        if expr.param not in env:
            raise UnboundParameter(f"unbound exponent parameter {expr.param!r}")
        validate_functor(expr.body, env)
        return
    raise TypeError(f"not a functor expression: {expr!r}")


def contains_id(expr: FunctorExpr) -> bool:
    if isinstance(expr, Id):
        return True
    if isinstance(expr, (Sum, Prod)):
        return contains_id(expr.left) or contains_id(expr.right)
    if isinstance(expr, Exp):
        return contains_id(expr.body)
    return False


# ---------------------------------------------------------------------------
# action on bases and embeddings


def apply_functor_domain(expr: FunctorExpr, D: Basis, env: Dict[str, Basis]) -> Basis:
    validate_functor(expr, env)
    return _apply_domain(expr, D, env)


def _apply_domain(expr, D, env):
    if isinstance(expr, Id):
        return D
    if isinstance(expr, ConstD):
        return env[expr.name]
    if isinstance(expr, Sum):
        return sum_basis(_apply_domain(expr.left, D, env), _apply_domain(expr.right, D, env))
    if isinstance(expr, Prod):
        return prod_basis(_apply_domain(expr.left, D, env), _apply_domain(expr.right, D, env))
    if isinstance(expr, Exp):
        return fun_basis(env[expr.param], _apply_domain(expr.body, D, env))
    raise TypeError(expr)


def apply_functor_embedding(
    expr: FunctorExpr, f: Embedding, env: Dict[str, Basis]
) -> Embedding:
    validate_functor(expr, env)
    return _apply_embedding(expr, f, env)


def _apply_embedding(expr, f, env):
    if isinstance(expr, Id):
        return f
    if isinstance(expr, ConstD):
        return identity_embedding(env[expr.name])
    if isinstance(expr, Sum):
        return embed_map(
            "sum", _apply_embedding(expr.left, f, env), _apply_embedding(expr.right, f, env)
        )
    if isinstance(expr, Prod):
        return embed_map(
            "prod", _apply_embedding(expr.left, f, env), _apply_embedding(expr.right, f, env)
        )
    if isinstance(expr, Exp):
        return embed_map(
            "exp_fixed", env[expr.param], _apply_embedding(expr.body, f, env)
        )
    raise TypeError(expr)


# ---------------------------------------------------------------------------
# omega-chains


@dataclass
class ChainStage:
    index: Ordinal
    basis: Basis
    embed_from_prev: Optional[Embedding]  # None at stage 0


def omega_chain(expr: FunctorExpr, env: Dict[str, Basis], n_max: int) -> List[ChainStage]:
    """Stages D_0 .. D_{n_max}; D_0 is the one-point basis."""
    from .basis import one_point_basis

    validate_functor(expr, env)
    d0 = one_point_basis("D0")
    stages = [ChainStage(fin(0), d0, None)]
    for n in range(1, n_max + 1):
        prev = stages[-1]
        nxt = apply_functor_domain(expr, prev.basis, env)
        if n == 1:
            emb = Embedding(
                prev.basis, nxt, lambda t, b=nxt: b.bottom, lambda t, b=prev.basis: b.bottom,
                name="f01",
            )
        else:
            emb = apply_functor_embedding(expr, prev.embed_from_prev, env)
        stages.append(ChainStage(fin(n), nxt, emb))
    return stages


def chain_embedding(stages: List[ChainStage], i: int, j: int) -> Embedding:
    """f_{i,j} composed along the chain; i <= j."""
    emb = identity_embedding(stages[i].basis)
    for k in range(i + 1, j + 1):
        emb = stages[k].embed_from_prev.compose(emb)
    return emb


# ---------------------------------------------------------------------------
# inductive limit


class LimitBasis(Basis):
    """Limit of an omega-chain; a token is tagged with the least stage at
    which it occurs as an embedding image."""

    finite = False

    def __init__(self, stages: List[ChainStage], name=None):
        self.stages = stages
        self.name = name or "limit"
        self._canon_cache = {}
        self._leq_cache = {}
        self._lub_cache = {}
        self._cons_cache = {}
        self._stage_emb_cache = {}
        self._bottom = self.canonical(0, stages[0].basis.bottom)

    # stage arithmetic -----------------------------------------------------
    def lift_token(self, n: int, t: Token, m: int) -> Token:
        """Image of stage-n token t at stage m >= n."""
        for k in range(n + 1, m + 1):
            t = self.stages[k].embed_from_prev.fwd(t)
        return t

    def drop_token(self, n: int, t: Token, m: int) -> Token:
        """Projection of stage-n token t down to stage m <= n."""
        for k in range(n, m, -1):
            t = self.stages[k].embed_from_prev.proj(t)
        return t

    def canonical(self, n: int, t: Token) -> Token:
        """Tag t (a stage-n token) with its least stage of occurrence."""
        key = (n, t.key)
        if key in self._canon_cache:
            return self._canon_cache[key]
        m, u = n, t
        while m > 0:
            emb = self.stages[m].embed_from_prev
            down = emb.proj(u)
            if emb.fwd(down) != u:
                break
            u, m = down, m - 1
        out = tok(("lim", m, u.key))
        self._canon_cache[key] = out
        return out

    def decompose(self, t: Token) -> Tuple[int, Token]:
        _, n, key = t.key
        return n, tok(key)

    def max_stage(self) -> int:
        return len(self.stages) - 1

    def at_common_stage(self, p: Token, q: Token):
        i, pt = self.decompose(p)
        j, qt = self.decompose(q)
        k = max(i, j)
        return self.lift_token(i, pt, k), self.lift_token(j, qt, k), k

    # basis interface ------------------------------------------------------
    @property
    def bottom(self):
        return self._bottom

    def has_token(self, t):
        k = t.key
        if not (isinstance(k, tuple) and len(k) == 3 and k[0] == "lim"):
            return False
        return k[1] <= self.max_stage()

    def leq(self, p, q):
        key = (p.key, q.key)
        if key not in self._leq_cache:
            pt, qt, k = self.at_common_stage(p, q)
            self._leq_cache[key] = self.stages[k].basis.leq(pt, qt)
        return self._leq_cache[key]

    def cons(self, ts):
        ts = list(ts)
        if not ts:
            return True
        key = frozenset(t.key for t in ts)
        if key not in self._cons_cache:
            parts = [self.decompose(t) for t in ts]
            k = max(i for (i, _) in parts)
            lifted = [self.lift_token(i, t, k) for (i, t) in parts]
            self._cons_cache[key] = self.stages[k].basis.cons(lifted)
        return self._cons_cache[key]

    def lub(self, ts):
        ts = list(ts)
        if not ts:
            return self._bottom
        key = frozenset(t.key for t in ts)
        if key not in self._lub_cache:
            parts = [self.decompose(t) for t in ts]
            k = max(i for (i, _) in parts)
            lifted = [self.lift_token(i, t, k) for (i, t) in parts]
            self._lub_cache[key] = self.canonical(k, self.stages[k].basis.lub(lifted))
        return self._lub_cache[key]

    def tokens(self, bound=None):
        b = self.max_stage() if bound is None else min(bound, self.max_stage())
        out = []
        seen = set()
        for n in range(b + 1):
            stage_bound = None if self.stages[n].basis.finite else bound
            for t in self.stages[n].basis.tokens(stage_bound).tokens:
                c = self.canonical(n, t)
                if c.key not in seen:
                    seen.add(c.key)
                    out.append(c)
        return TokenSet(tuple(out), True)

    def new_tokens_at(self, n: int, bound=None):
        """Canonical tokens whose minimal stage is exactly n."""
        out = []
        stage_bound = None if self.stages[n].basis.finite else bound
        for t in self.stages[n].basis.tokens(stage_bound).tokens:
            c = self.canonical(n, t)
            if c.key[1] == n:
                out.append(c)
        return out

    def stage_embedding(self, n: int) -> Embedding:
        if n in self._stage_emb_cache:
            return self._stage_emb_cache[n]

        def fwd(t):
            return self.canonical(n, t)

        def proj(t):
            m, inner = self.decompose(t)
            if m <= n:
                return self.lift_token(m, inner, n)
            return self.drop_token(m, inner, n)

        emb = Embedding(self.stages[n].basis, self, fwd, proj, name=f"f{n},lim")
        self._stage_emb_cache[n] = emb
        return emb


def inductive_limit_domain(stages: List[ChainStage]) -> LimitBasis:
    return LimitBasis(stages)


# ---------------------------------------------------------------------------
# fixed-point isomorphism D_omega ~ F(D_omega)


@dataclass
class IsoReport:
    bound: int
    verified: bool
    token_count: int
    witness: object = None


class FixedPointIso:
    """Canonical token bijection between a limit and its one-step unfolding."""

    def __init__(self, expr: FunctorExpr, env: Dict[str, Basis], limit: LimitBasis):
        self.expr = expr
        self.env = env
        self.limit = limit
        self.unfolded = apply_functor_domain(expr, limit, env)
        self._femb_cache: Dict[int, Embedding] = {}
        self._fwd_cache: Dict[object, Token] = {}
        self._inv_cache: Dict[object, Token] = {}

    def _femb(self, n: int) -> Embedding:
        # F applied to the stage embedding D_n -> limit
        if n not in self._femb_cache:
            self._femb_cache[n] = apply_functor_embedding(
                self.expr, self.limit.stage_embedding(n), self.env
            )
        return self._femb_cache[n]

    def fwd(self, t: Token) -> Token:
        if t.key not in self._fwd_cache:
            n, inner = self.limit.decompose(t)
            if n == 0:
                self._fwd_cache[t.key] = self.unfolded.bottom
            else:
                self._fwd_cache[t.key] = self._femb(n - 1).fwd(inner)
        return self._fwd_cache[t.key]

    def inv(self, t: Token) -> Token:
        if t.key not in self._inv_cache:
            m = self._leaf_stage(t)
            inner = self._femb(m).proj(t)
            if self._femb(m).fwd(inner) != t:
                raise IsoFailure(
                    "token is not an image of any built stage", witness=t
                )
            self._inv_cache[t.key] = self.limit.canonical(m + 1, inner)
        return self._inv_cache[t.key]

    def _leaf_stage(self, t: Token) -> int:
        """Largest canonical stage of a limit token occurring inside t."""
        best = 0

        def walk(key):
            nonlocal best
            if isinstance(key, tuple):
                if key and key[0] == "lim":
                    best = max(best, key[1])
                    return
                for part in key:
                    walk(part)
            elif isinstance(key, frozenset):
                for part in key:
                    walk(part)

        walk(t.key)
        cap = self.limit.max_stage() - 1
        return min(best, cap)

    def as_embedding(self) -> Embedding:
        return Embedding(self.limit, self.unfolded, self.fwd, self.inv, name="unfold")

    def inverse_embedding(self) -> Embedding:
        return Embedding(self.unfolded, self.limit, self.inv, self.fwd, name="fold")

    def verify(self, bound: int) -> IsoReport:
        toks = self.limit.tokens(bound).tokens
        images = {}
        for t in toks:
            u = self.fwd(t)
            if u.key in images:
                return IsoReport(bound, False, len(toks), witness=(images[u.key], t))
            images[u.key] = t
            if self.inv(u) != t:
                return IsoReport(bound, False, len(toks), witness=t)
        for p in toks:
            for q in toks:
                if self.limit.leq(p, q) != self.unfolded.leq(self.fwd(p), self.fwd(q)):
                    return IsoReport(bound, False, len(toks), witness=(p, q))
        # the image of the stage-b fragment is exactly F applied to stage b-1;
        # only decidable when the stage enumerates completely
        stage_b = self.limit.stages[bound].basis if bound >= 1 else None
        if stage_b is not None and stage_b.finite:
            expected = {
                self._femb(bound - 1).fwd(t).key for t in stage_b.tokens().tokens
            }
            got = {self.fwd(t).key for t in toks}
            if got != expected:
                return IsoReport(
                    bound, False, len(toks), witness=got.symmetric_difference(expected)
                )
        return IsoReport(bound, True, len(toks))


def fixed_point_iso(
    expr: FunctorExpr, env: Dict[str, Basis], limit: LimitBasis, bound: int
) -> Tuple[FixedPointIso, IsoReport]:
    iso = FixedPointIso(expr, env, limit)
    report = iso.verify(bound)
    if not report.verified:
        raise IsoFailure(
            f"fixed-point correspondence failed at bound {bound}", witness=report.witness
        )
    return iso, report
