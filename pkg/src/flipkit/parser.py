"""Lexer and recursive-descent parser for ``.flp`` sources."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable

from .syntax import (
    RESERVED,
    Branch,
    CtorDecl,
    DataDecl,
    ExternDecl,
    FApp,
    FExpr,
    FFlip,
    FlipDef,
    FlipSig,
    FRef,
    IndexedSig,
    Param,
    ParamSig,
    Pattern,
    PCon,
    PPair,
    Program,
    PVar,
    Span,
    Step,
    TCon,
    TPair,
    TVar,
    TypeExpr,
    pattern_vars,
)


class ParseError(Exception):
    def __init__(self, message: str, span: Span, expected: Iterable[str] = ()):
        self.span = span
        self.expected = tuple(expected)
        detail = message
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        self.detail = detail
        super().__init__(f"{span.line}:{span.col}: {detail}")


@dataclass(frozen=True)
class Token:
    kind: str  # LOWER, UPPER, INT, SYM, KW, EOF
    text: str
    span: Span


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym><->|->|[<>(),;{}=|:\[\]])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        s = m.group()
        if m.lastgroup == "ident":
            if s == "_" or s.startswith("_"):
                raise ParseError("wildcard patterns are not allowed", span)
            if s in RESERVED and s != "Msg":
                kind = "KW"
            elif s[0].isupper():
                kind = "UPPER"
            else:
                kind = "LOWER"
            tokens.append(Token(kind, s, span))
        elif m.lastgroup == "int":
            tokens.append(Token("INT", s, span))
        elif m.lastgroup == "sym":
            tokens.append(Token("SYM", s, span))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", Span(line, pos - line_start + 1)))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("SYM", "KW") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self._describe(self.tok)}", [repr(text)])
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.fail(f"unexpected {self._describe(self.tok)}", [what])
        return self.advance()

    def fail(self, message: str, expected: Iterable[str] = ()):
        raise ParseError(message, self.tok.span, expected)

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of input" if t.kind == "EOF" else repr(t.text)

    # -- program

    def program(self) -> Program:
        decls = []
        seen: dict[str, Span] = {}
        ctors: set[str] = set()
        while self.tok.kind != "EOF":
            if self.at("data"):
                d = self.datadecl()
                for c in d.ctors:
                    if c.name in ctors:
                        raise ParseError(f"duplicate constructor {c.name}", c.span)
                    ctors.add(c.name)
            elif self.at("extern"):
                d = self.externdecl()
            elif self.at("flip"):
                d = self.flipdecl()
            else:
                self.fail(f"unexpected {self._describe(self.tok)}", ["'data'", "'extern'", "'flip'"])
            if d.name in seen:
                raise ParseError(f"duplicate top-level name {d.name}", d.span)
            seen[d.name] = d.span
            decls.append(d)
        return Program(tuple(decls))

    def datadecl(self) -> DataDecl:
        start = self.expect("data").span
        name = self.expect_kind("UPPER", "type name").text
        if name in ("Msg", "Int"):
            raise ParseError(f"cannot redefine builtin type {name}", start)
        tparams = []
        while self.tok.kind == "LOWER":
            tparams.append(self.advance().text)
        self.expect("=")
        ctors = [self.ctor()]
        while self.at("|"):
            self.advance()
            ctors.append(self.ctor())
        return DataDecl(name, tuple(tparams), tuple(ctors), span=start)

    def ctor(self) -> CtorDecl:
        t = self.expect_kind("UPPER", "constructor name")
        if t.text in RESERVED:
            raise ParseError(f"reserved word {t.text} used as constructor", t.span)
        args = []
        while self.tok.kind in ("LOWER", "UPPER") or self.at("("):
            args.append(self.atomtype())
        return CtorDecl(t.text, tuple(args), span=t.span)

    def externdecl(self) -> ExternDecl:
        start = self.expect("extern").span
        name = self.expect_kind("LOWER", "extern name").text
        self.expect(":")
        dom = self.type_()
        self.expect("<->")
        cod = self.type_()
        return ExternDecl(name, dom, cod, span=start)

    def flipdecl(self) -> FlipDef:
        self.expect("flip")
        nt = self.expect_kind("LOWER", "definition name")
        params = []
        while self.at("("):
            params.append(self.param())
        self.expect(":")
        dom = self.type_()
        self.expect("<->")
        cod = self.type_()
        self.expect("=")
        self.expect("{")
        branches = [self.branch()]
        while self.at(";"):
            self.advance()
            branches.append(self.branch())
        self.expect("}")
        return FlipDef(nt.text, tuple(params), dom, cod, tuple(branches), span=nt.span)

    def param(self) -> Param:
        self.expect("(")
        t = self.expect_kind("LOWER", "parameter name")
        self.expect(":")
        sig = self.psig()
        self.expect(")")
        return Param(t.text, sig, span=t.span)

    def psig(self) -> ParamSig:
        first = self.type_()
        if self.at("->"):
            self.advance()
            dom = self.type_()
            self.expect("<->")
            return IndexedSig(first, dom, self.type_())
        self.expect("<->")
        return FlipSig(first, self.type_())

    # -- types

    def type_(self) -> TypeExpr:
        span = self.tok.span
        atoms = [self.atomtype()]
        while self.tok.kind in ("LOWER", "UPPER") or self.at("("):
            atoms.append(self.atomtype())
        if len(atoms) == 1:
            return atoms[0]
        head = atoms[0]
        if not isinstance(head, TCon) or head.args:
            raise ParseError("only named types can be applied to arguments", span)
        return TCon(head.name, tuple(atoms[1:]), span=head.span)

    def atomtype(self) -> TypeExpr:
        t = self.tok
        if t.kind == "LOWER":
            self.advance()
            return TVar(t.text, span=t.span)
        if t.kind == "UPPER":
            self.advance()
            return TCon(t.text, (), span=t.span)
        if self.at("("):
            self.advance()
            inner = self.type_()
            if self.at(","):
                self.advance()
                right = self.type_()
                self.expect(")")
                return TPair(inner, right, span=t.span)
            self.expect(")")
            return inner
        self.fail(f"unexpected {self._describe(t)}", ["type"])

    # -- branches and patterns

    def branch(self) -> Branch:
        span = self.tok.span
        lhs = self.binding_pattern()
        self.expect("<->")
        steps = []
        while True:
            p = self.pattern()
            if not self.at("<"):
                return Branch(lhs, tuple(steps), p, span=span)
            sspan = self.advance().span
            f = self.fexpr()
            self.expect(">")
            q = self.binding_pattern()
            self.expect("<->")
            steps.append(Step(p, f, q, span=sspan))

    def binding_pattern(self) -> Pattern:
        p = self.pattern()
        seen = set()
        for v in pattern_vars(p):
            if v.name in seen:
                raise ParseError(f"variable {v.name} bound twice in one pattern", v.span)
            seen.add(v.name)
        return p

    def pattern(self) -> Pattern:
        t = self.tok
        if t.kind == "LOWER":
            self.advance()
            return PVar(t.text, span=t.span)
        if t.kind == "UPPER":
            self.advance()
            return PCon(t.text, (), span=t.span)
        if self.at("("):
            self.advance()
            if self.tok.kind == "UPPER":
                c = self.advance()
                args = []
                while self.tok.kind in ("LOWER", "UPPER") or self.at("("):
                    args.append(self.pattern())
                left: Pattern = PCon(c.text, tuple(args), span=c.span)
            else:
                left = self.pattern()
            if self.at(","):
                self.advance()
                right = self.pattern()
                self.expect(")")
                return PPair(left, right, span=t.span)
            self.expect(")")
            return left
        self.fail(f"unexpected {self._describe(t)}", ["pattern"])

    # -- flippable expressions

    def fexpr(self) -> FExpr:
        e = self.fatom()
        while self.tok.kind == "LOWER" or self.at("(") or self.at("flip"):
            a = self.fatom()
            e = FApp(e, a, span=e.span)
        return e

    def fatom(self) -> FExpr:
        t = self.tok
        if t.kind == "LOWER":
            self.advance()
            return FRef(t.text, span=t.span)
        if self.at("flip"):
            self.advance()
            return FFlip(self.fatom(), span=t.span)
        if self.at("("):
            self.advance()
            e = self.fexpr()
            self.expect(")")
            return e
        self.fail(f"unexpected {self._describe(t)}", ["flippable expression"])

    def finish(self, result):
        if self.tok.kind != "EOF":
            self.fail(f"unexpected {self._describe(self.tok)}", ["end of input"])
        return result


def _parse_with(text: str, rule: Callable[[Parser], object]):
    p = Parser(text)
    return p.finish(rule(p))


def parse_program(text: str) -> Program:
    """Parse a whole ``.flp`` source into a :class:`Program`."""
    return _parse_with(text, Parser.program)


def parse_fexpr(text: str) -> FExpr:
    return _parse_with(text, Parser.fexpr)


def parse_type(text: str) -> TypeExpr:
    return _parse_with(text, Parser.type_)


def parse_pattern(text: str) -> Pattern:
    return _parse_with(text, Parser.pattern)
