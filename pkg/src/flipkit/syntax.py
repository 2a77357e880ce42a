"""Abstract syntax of the Flipper language.

All nodes are frozen dataclasses. Source spans are carried along for
diagnostics but excluded from equality, so two trees that differ only in
layout compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

RESERVED = frozenset({"data", "flip", "extern", "Msg"})
BUILTIN_TYPES = frozenset({"Msg", "Int"})


@dataclass(frozen=True)
class Span:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOSPAN = Span()


def _span() -> Span:
    return field(default=NOSPAN, compare=False, repr=False)


# -- types -----------------------------------------------------------------


@dataclass(frozen=True)
class TVar:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class TCon:
    """Named type application; also covers the builtins ``Msg`` and ``Int``."""

    name: str
    args: tuple["TypeExpr", ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class TPair:
    left: "TypeExpr"
    right: "TypeExpr"
    span: Span = _span()


TypeExpr = Union[TVar, TCon, TPair]


# -- patterns --------------------------------------------------------------


@dataclass(frozen=True)
class PVar:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class PCon:
    ctor: str
    args: tuple["Pattern", ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class PPair:
    left: "Pattern"
    right: "Pattern"
    span: Span = _span()


Pattern = Union[PVar, PCon, PPair]


def pattern_vars(p: Pattern) -> Iterator[PVar]:
    """Variable occurrences of ``p``, left to right."""
    if isinstance(p, PVar):
        yield p
    elif isinstance(p, PCon):
        for a in p.args:
            yield from pattern_vars(a)
    else:
        yield from pattern_vars(p.left)
        yield from pattern_vars(p.right)


# -- flippable expressions -------------------------------------------------


@dataclass(frozen=True)
class FRef:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class FApp:
    head: "FExpr"
    arg: "FExpr"
    span: Span = _span()


@dataclass(frozen=True)
class FFlip:
    inner: "FExpr"
    span: Span = _span()


FExpr = Union[FRef, FApp, FFlip]


def flipped(e: FExpr) -> FExpr:
    """Wrap ``e`` in ``flip``, cancelling an existing outer ``flip``."""
    if isinstance(e, FFlip):
        return e.inner
    return FFlip(e, span=e.span)


def spine(e: FExpr) -> tuple[FExpr, list[FExpr]]:
    """Split an application into its head and argument list."""
    args: list[FExpr] = []
    while isinstance(e, FApp):
        args.append(e.arg)
        e = e.head
    args.reverse()
    return e, args


# -- definitions -----------------------------------------------------------


@dataclass(frozen=True)
class Step:
    out_pattern: Pattern
    fexpr: FExpr
    in_pattern: Pattern
    span: Span = _span()


@dataclass(frozen=True)
class Branch:
    lhs: Pattern
    steps: tuple[Step, ...]
    rhs: Pattern
    span: Span = _span()


@dataclass(frozen=True)
class FlipSig:
    domain: TypeExpr
    codomain: TypeExpr


@dataclass(frozen=True)
class IndexedSig:
    index: TypeExpr
    domain: TypeExpr
    codomain: TypeExpr


ParamSig = Union[FlipSig, IndexedSig]


@dataclass(frozen=True)
class Param:
    name: str
    sig: ParamSig
    span: Span = _span()


@dataclass(frozen=True)
class ReversedMark:
    original: str
    reversed: bool = True


@dataclass(frozen=True)
class FlipDef:
    name: str
    params: tuple[Param, ...]
    domain: TypeExpr
    codomain: TypeExpr
    branches: tuple[Branch, ...]
    span: Span = _span()
    mark: Optional[ReversedMark] = field(default=None, compare=False)


@dataclass(frozen=True)
class CtorDecl:
    name: str
    args: tuple[TypeExpr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class DataDecl:
    name: str
    tparams: tuple[str, ...]
    ctors: tuple[CtorDecl, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ExternDecl:
    name: str
    domain: TypeExpr
    codomain: TypeExpr
    span: Span = _span()


Decl = Union[DataDecl, ExternDecl, FlipDef]


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...] = ()

    @property
    def datas(self) -> dict[str, DataDecl]:
        return {d.name: d for d in self.decls if isinstance(d, DataDecl)}

    @property
    def externs(self) -> dict[str, ExternDecl]:
        return {d.name: d for d in self.decls if isinstance(d, ExternDecl)}

    @property
    def flips(self) -> dict[str, FlipDef]:
        return {d.name: d for d in self.decls if isinstance(d, FlipDef)}

    def ctor_table(self) -> dict[str, tuple[DataDecl, CtorDecl]]:
        table = {}
        for d in self.decls:
            if isinstance(d, DataDecl):
                for c in d.ctors:
                    table[c.name] = (d, c)
        return table

    def merged(self, other: "Program") -> "Program":
        return Program(self.decls + other.decls)

    def replace_flip(self, d: FlipDef) -> "Program":
        return Program(tuple(d if isinstance(x, FlipDef) and x.name == d.name else x
                             for x in self.decls))
