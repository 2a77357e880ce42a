"""Random well-typed values, for property tests and the self-test.

Type variables are instantiated per sample with a random ground type, so a
polymorphic definition gets exercised at Int, pairs and declared data types.
"""

from __future__ import annotations

import random

from .ans import HEAD_BITS, HEAD_MIN, Message
from .syntax import Program, TCon, TPair, TVar, TypeExpr
from .values import Con, Int, Msg, Pair, Value

MAX_DEPTH = 6
INT_RANGE = (-1000, 1000)


def random_message(rng: random.Random, max_words: int = 4) -> Message:
    n = rng.randint(0, max_words)
    if n == 0 and rng.random() < 0.5:
        head = rng.randrange(HEAD_MIN, HEAD_MIN << 12)  # near-initial messages
    else:
        head = rng.randrange(HEAD_MIN, 1 << HEAD_BITS)
    return Message.from_words(head, [rng.getrandbits(32) for _ in range(n)])


def mentions_type(t: TypeExpr, name: str) -> bool:
    if isinstance(t, TCon):
        return t.name == name or any(mentions_type(a, name) for a in t.args)
    if isinstance(t, TPair):
        return mentions_type(t.left, name) or mentions_type(t.right, name)
    return False


def subst_type(t: TypeExpr, env: dict[str, TypeExpr]) -> TypeExpr:
    if isinstance(t, TVar):
        return env.get(t.name, t)
    if isinstance(t, TCon):
        return TCon(t.name, tuple(subst_type(a, env) for a in t.args))
    return TPair(subst_type(t.left, env), subst_type(t.right, env))


def ground_types(program: Program) -> list[TypeExpr]:
    """Ground types used to instantiate type variables, nested two levels deep."""
    base: list[TypeExpr] = [TCon("Int"), TPair(TCon("Int"), TCon("Int"))]
    for d in program.datas.values():
        base.append(TCon(d.name, tuple(TCon("Int") for _ in d.tparams)))
    nested: list[TypeExpr] = [TPair(base[-1], base[1])]
    for d in program.datas.values():
        nested.append(TCon(d.name, tuple(base[(i + 1) % len(base)]
                                         for i in range(len(d.tparams)))))
    return base + nested


def type_vars(t: TypeExpr) -> list[str]:
    if isinstance(t, TVar):
        return [t.name]
    if isinstance(t, TCon):
        return [v for a in t.args for v in type_vars(a)]
    return type_vars(t.left) + type_vars(t.right)


def instantiate(program: Program, types: list[TypeExpr], rng: random.Random) -> list[TypeExpr]:
    """Replace type variables (consistently across ``types``) by random ground types."""
    pool = ground_types(program)
    env: dict[str, TypeExpr] = {}
    for t in types:
        for v in type_vars(t):
            if v not in env:
                env[v] = rng.choice(pool)
    return [subst_type(t, env) for t in types]


def random_value(program: Program, ty: TypeExpr, rng: random.Random,
                 depth: int = MAX_DEPTH) -> Value:
    """A random value of ground type ``ty`` (type variables are read as Int)."""
    if isinstance(ty, TVar):
        ty = TCon("Int")
    if isinstance(ty, TPair):
        return Pair(random_value(program, ty.left, rng, depth - 1),
                    random_value(program, ty.right, rng, depth - 1))
    if ty.name == "Int":
        return Int(rng.randint(*INT_RANGE))
    if ty.name == "Msg":
        return Msg(random_message(rng))
    data = program.datas[ty.name]
    ctors = data.ctors
    if depth <= 0:
        flat = [c for c in ctors if not any(mentions_type(a, data.name) for a in c.args)]
        ctors = flat or ctors
    c = rng.choice(ctors)
    env = dict(zip(data.tparams, ty.args))
    return Con(c.name, tuple(random_value(program, subst_type(a, env), rng, depth - 1)
                             for a in c.args))
