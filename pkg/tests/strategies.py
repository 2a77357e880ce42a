"""Hypothesis strategies mirroring :mod:`flipkit.gen`."""

from __future__ import annotations

from typing import Optional

from hypothesis import strategies as st

from flipkit.ans import HEAD_BITS, HEAD_MIN, Message
from flipkit.gen import INT_RANGE, MAX_DEPTH, mentions_type, subst_type, type_vars, ground_types
from flipkit.syntax import (
    Branch,
    CtorDecl,
    DataDecl,
    ExternDecl,
    FApp,
    FFlip,
    FlipDef,
    FlipSig,
    FRef,
    IndexedSig,
    Param,
    PCon,
    PPair,
    Program,
    PVar,
    Step,
    TCon,
    TPair,
    TVar,
    TypeExpr,
)
from flipkit.values import Con, Int, Msg, Pair


def value_strategy(program: Program, ty: TypeExpr, depth: int = MAX_DEPTH,
                   tvars: Optional[dict[str, TypeExpr]] = None) -> st.SearchStrategy:
    """Hypothesis strategy for values of ``ty``."""
    tvars = tvars or {}
    if isinstance(ty, TVar):
        ty = tvars.get(ty.name, TCon("Int"))
    if isinstance(ty, TPair):
        return st.builds(Pair, value_strategy(program, ty.left, depth - 1, tvars),
                         value_strategy(program, ty.right, depth - 1, tvars))
    if ty.name == "Int":
        return st.integers(*INT_RANGE).map(Int)
    if ty.name == "Msg":
        return message_strategy().map(Msg)
    data = program.datas[ty.name]
    ctors = data.ctors
    if depth <= 0:
        ctors = tuple(c for c in ctors if not any(mentions_type(a, data.name) for a in c.args)) \
            or ctors
    env = dict(zip(data.tparams, ty.args))
    options = []
    for c in ctors:
        args = [value_strategy(program, subst_type(a, env), depth - 1, tvars) for a in c.args]
        options.append(st.tuples(*args).map(lambda xs, name=c.name: Con(name, tuple(xs))))
    return st.one_of(options)


def typed_value_strategy(program: Program, ty: TypeExpr) -> st.SearchStrategy:
    """Values of ``ty`` with its type variables drawn from :func:`ground_types`."""
    names = list(dict.fromkeys(type_vars(ty)))
    pool = ground_types(program)
    if not names:
        return value_strategy(program, ty)
    return st.tuples(*[st.sampled_from(pool) for _ in names]).flatmap(
        lambda gs: value_strategy(program, ty, tvars=dict(zip(names, gs))))


@st.composite
def message_strategy(draw, max_words: int = 4) -> Message:
    n = draw(st.integers(0, max_words))
    lo = 0 if n == 0 else HEAD_MIN
    head = draw(st.one_of(st.integers(HEAD_MIN, HEAD_MIN << 12),
                          st.integers(lo, (1 << HEAD_BITS) - 1)))
    words = draw(st.lists(st.integers(0, (1 << 32) - 1), min_size=n, max_size=n))
    return Message.from_words(head, words)


# -- syntax trees --------------------------------------------------------------

# fixed pools keep generation cheap; they include primes, digits and near-keywords
lower_ident = st.sampled_from(["a", "b", "x", "y'", "zs", "f2", "go", "flipper", "datum",
                               "externs", "msg", "qzx", "aB3"])
upper_ident = st.sampled_from(["A", "B", "Left", "Right", "Nil", "Cons", "T1", "Msgs", "Int",
                               "Either", "Bit", "Node", "Zz", "Q", "Leaf", "Pt", "C0", "C1",
                               "Just", "None2", "Red", "Blue", "Tip", "Fork", "W"])


def type_strategy(depth: int = 3) -> st.SearchStrategy:
    leaf = st.one_of(lower_ident.map(TVar), upper_ident.map(lambda n: TCon(n)))
    if depth <= 0:
        return leaf
    sub = type_strategy(depth - 1)
    return st.one_of(
        leaf,
        st.builds(lambda n, args: TCon(n, tuple(args)), upper_ident, st.lists(sub, max_size=2)),
        st.builds(TPair, sub, sub),
    )


def _pattern_shape(depth: int) -> st.SearchStrategy:
    leaf = st.just(PVar("_"))
    if depth <= 0:
        return leaf
    sub = _pattern_shape(depth - 1)
    return st.one_of(
        leaf,
        st.builds(lambda c, args: PCon(c, tuple(args)), upper_ident, st.lists(sub, max_size=2)),
        st.builds(PPair, sub, sub),
    )


def _number_vars(p, counter):
    if isinstance(p, PVar):
        counter[0] += 1
        return PVar(f"v{counter[0]}")
    if isinstance(p, PPair):
        return PPair(_number_vars(p.left, counter), _number_vars(p.right, counter))
    return PCon(p.ctor, tuple(_number_vars(a, counter) for a in p.args))


def pattern_strategy(depth: int = 3) -> st.SearchStrategy:
    """Patterns whose variables are pairwise distinct."""
    return _pattern_shape(depth).map(lambda p: _number_vars(p, [0]))


def fexpr_strategy(depth: int = 3) -> st.SearchStrategy:
    leaf = lower_ident.map(FRef)
    if depth <= 0:
        return leaf
    sub = fexpr_strategy(depth - 1)
    return st.one_of(leaf, st.builds(FApp, sub, sub), st.builds(FFlip, sub))


def branch_strategy() -> st.SearchStrategy:
    step = st.builds(Step, pattern_strategy(2), fexpr_strategy(2), pattern_strategy(2))
    return st.builds(lambda lhs, steps, rhs: Branch(lhs, tuple(steps), rhs),
                     pattern_strategy(), st.lists(step, max_size=3), pattern_strategy())


def param_strategy() -> st.SearchStrategy:
    ty = type_strategy(2)
    sig = st.one_of(st.builds(FlipSig, ty, ty), st.builds(IndexedSig, ty, ty, ty))
    return st.builds(Param, lower_ident, sig)


@st.composite
def program_strategy(draw):
    """Syntactically valid programs with unique top-level and constructor names."""
    n = draw(st.integers(0, 5))
    names = draw(st.lists(lower_ident, min_size=n, max_size=n, unique=True))
    uppers = draw(st.lists(upper_ident, min_size=4 * n + 1, max_size=4 * n + 1, unique=True))
    uppers = [u for u in uppers if u != "Int"]  # builtin types cannot be redeclared
    type_names, ctor_names = uppers[:n], iter(uppers[n:])
    decls = []
    for name, tname in zip(names, type_names):
        kind = draw(st.sampled_from(["data", "extern", "flip"]))
        if kind == "data":
            tparams = draw(st.lists(lower_ident, max_size=2, unique=True))
            ctors = tuple(CtorDecl(next(ctor_names), tuple(draw(st.lists(type_strategy(2),
                                                                            max_size=2))))
                          for _ in range(draw(st.integers(1, 3))))
            decls.append(DataDecl(tname, tuple(tparams), ctors))
        elif kind == "extern":
            decls.append(ExternDecl(name, draw(type_strategy()), draw(type_strategy())))
        else:
            params = draw(st.lists(param_strategy(), max_size=2, unique_by=lambda p: p.name))
            branches = draw(st.lists(branch_strategy(), min_size=1, max_size=3))
            decls.append(FlipDef(name, tuple(params), draw(type_strategy()), draw(type_strategy()),
                                 tuple(branches)))
    return Program(tuple(decls))
