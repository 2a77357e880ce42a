"""Runtime values and their literal syntax.

Literals reuse the pattern syntax, extended with integers for ``Int`` and
``[msg HEAD w1 w2 ...]`` for coder messages (tail words bottom to top).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from .parser import ParseError, Parser


@dataclass(frozen=True)
class Con:
    ctor: str
    args: tuple["Value", ...] = ()


@dataclass(frozen=True)
class Pair:
    left: "Value"
    right: "Value"


@dataclass(frozen=True)
class Opaque:
    """Host value the language can bind but never destructure."""

    tag: str  # "Int" or "Msg"
    payload: Any


Value = Union[Con, Pair, Opaque]


def Int(n: int) -> Opaque:
    return Opaque("Int", int(n))


def Msg(m) -> Opaque:
    return Opaque("Msg", m)


def render_value(v: Value) -> str:
    if isinstance(v, Pair):
        return f"({render_value(v.left)} , {render_value(v.right)})"
    if isinstance(v, Con):
        if not v.args:
            return v.ctor
        return "(" + " ".join([v.ctor] + [render_value(a) for a in v.args]) + ")"
    if v.tag == "Int":
        return str(v.payload)
    m = v.payload
    return "[msg " + " ".join(str(w) for w in [m.head, *m.tail_words()]) + "]"


class _ValueParser(Parser):
    def value(self) -> Value:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Int(int(t.text))
        if t.kind == "UPPER":
            self.advance()
            return Con(t.text)
        if self.at("["):
            return self.message()
        if self.at("("):
            self.advance()
            if self.tok.kind == "UPPER":
                c = self.advance().text
                args = []
                while self.tok.kind in ("UPPER", "INT") or self.at("(") or self.at("["):
                    args.append(self.value())
                left: Value = Con(c, tuple(args))
            else:
                left = self.value()
            if self.at(","):
                self.advance()
                right = self.value()
                self.expect(")")
                return Pair(left, right)
            self.expect(")")
            return left
        self.fail(f"unexpected {self._describe(t)}", ["value"])

    def message(self) -> Value:
        from .ans import Message

        self.expect("[")
        if not (self.tok.kind == "LOWER" and self.tok.text == "msg"):
            self.fail("unexpected token", ["'msg'"])
        self.advance()
        words = []
        while self.tok.kind == "INT":
            words.append(int(self.advance().text))
        self.expect("]")
        if not words:
            self.fail("message literal needs a head", ["integer"])
        try:
            return Msg(Message.from_words(words[0], words[1:]))
        except ValueError as e:
            raise ParseError(str(e), self.tok.span) from None


def parse_value(text: str) -> Value:
    p = _ValueParser(text)
    return p.finish(p.value())
