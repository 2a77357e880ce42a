"""Streaming rANS over quantized categorical distributions.

The coder state is a :class:`Message`: a 64-bit head plus a stack of 32-bit
words. Encoding pushes a symbol, decoding pops it; the two are exact
inverses on valid messages, which is what lets a decoder run on a fresh
message and "borrow" bits for bits-back coding.
"""

from __future__ import annotations

import math
import struct
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bijection import Bijection
from .values import Int, Msg, Opaque, Pair, Value

WORD_BITS = 32
HEAD_BITS = 64
HEAD_MIN = 1 << WORD_BITS  # head stays >= this while the tail is nonempty
WORD_MASK = (1 << WORD_BITS) - 1
MAX_PRECISION = 16


class Message:
    """Immutable coder state. The tail is a cons list, so push/pop are O(1)."""

    __slots__ = ("head", "_tail", "_len")

    def __init__(self, head: int, tail: Optional[tuple] = None, length: int = 0):
        self.head = head
        self._tail = tail
        self._len = length

    @classmethod
    def from_words(cls, head: int, words: Sequence[int] = ()) -> "Message":
        """Build a message from a head and tail words listed bottom to top."""
        tail = None
        for w in words:
            if not 0 <= w <= WORD_MASK:
                raise ValueError(f"tail word {w} out of 32-bit range")
            tail = (w, tail)
        m = cls(head, tail, len(words))
        m.validate()
        return m

    def validate(self) -> None:
        if not 0 <= self.head < 1 << HEAD_BITS:
            raise ValueError(f"head {self.head} out of 64-bit range")
        if self._len and self.head < HEAD_MIN:
            raise ValueError("head must be >= 2^32 while the tail is nonempty")

    @property
    def tail_length(self) -> int:
        return self._len

    def tail_words(self) -> list[int]:
        """Tail words from bottom of the stack to top."""
        out = []
        node = self._tail
        while node is not None:
            out.append(node[0])
            node = node[1]
        out.reverse()
        return out

    def push(self, word: int) -> "Message":
        return Message(self.head, (word, self._tail), self._len + 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Message):
            return NotImplemented
        if self.head != other.head or self._len != other._len:
            return False
        a, b = self._tail, other._tail
        while a is not None:
            if a is b:
                return True
            if a[0] != b[0]:
                return False
            a, b = a[1], b[1]
        return True

    def __hash__(self) -> int:
        return hash((self.head, self._len, self._tail[0] if self._tail else None))

    def __repr__(self) -> str:
        return f"Message(head={self.head}, tail_length={self._len})"


def msg_init() -> Message:
    return Message(HEAD_MIN)


def msg_bits(m: Message) -> int:
    """Size of the message in bits: full tail words plus the head's bit length."""
    return WORD_BITS * m.tail_length + m.head.bit_length()


@dataclass(frozen=True)
class CategoricalTable:
    precision: int
    freqs: tuple[int, ...]
    cdf: tuple[int, ...] = field(init=False, default=())

    def __post_init__(self):
        freqs = tuple(int(f) for f in self.freqs)
        object.__setattr__(self, "freqs", freqs)
        if not 1 <= self.precision <= MAX_PRECISION:
            raise ValueError(f"precision must be in [1, {MAX_PRECISION}], got {self.precision}")
        if not freqs:
            raise ValueError("table needs at least one symbol")
        if any(f < 1 for f in freqs):
            raise ValueError("every frequency must be >= 1")
        if sum(freqs) != 1 << self.precision:
            raise ValueError(f"frequencies sum to {sum(freqs)}, expected 2^{self.precision}")
        cdf = [0]
        for f in freqs[:-1]:
            cdf.append(cdf[-1] + f)
        object.__setattr__(self, "cdf", tuple(cdf))

    @property
    def n(self) -> int:
        return len(self.freqs)

    def probs(self) -> list[float]:
        total = 1 << self.precision
        return [f / total for f in self.freqs]

    def entropy(self) -> float:
        return -sum(p * math.log2(p) for p in self.probs())

    def symbol_at(self, m: int) -> int:
        return bisect_right(self.cdf, m) - 1

    @classmethod
    def from_probs(cls, probs: Sequence[float], precision: int) -> "CategoricalTable":
        """Quantize ``probs`` to integer frequencies summing to 2^precision."""
        total = 1 << precision
        n = len(probs)
        if n > total:
            raise ValueError("more symbols than quantization levels")
        s = float(sum(probs))
        freqs = [1 + int(p / s * (total - n)) for p in probs]
        # hand leftover mass to the largest entries, one unit at a time
        order = sorted(range(n), key=lambda i: -probs[i])
        k = 0
        while sum(freqs) < total:
            freqs[order[k % n]] += 1
            k += 1
        return cls(precision, tuple(freqs))


def rans_encode(m: Message, s: int, t: CategoricalTable) -> Message:
    if not 0 <= s < t.n:
        raise ValueError(f"symbol {s} out of range for a table of {t.n} symbols")
    f, c, r = t.freqs[s], t.cdf[s], t.precision
    head, tail, length = m.head, m._tail, m._len
    bound = f << (HEAD_BITS - r)
    while head >= bound:
        tail = (head & WORD_MASK, tail)
        length += 1
        head >>= WORD_BITS
    head = ((head // f) << r) + head % f + c
    assert head < 1 << HEAD_BITS and (length == 0 or head >= HEAD_MIN)
    return Message(head, tail, length)


def rans_decode(m: Message, t: CategoricalTable) -> tuple[Message, int]:
    r = t.precision
    head, tail, length = m.head, m._tail, m._len
    low = head & ((1 << r) - 1)
    s = t.symbol_at(low)
    head = t.freqs[s] * (head >> r) + low - t.cdf[s]
    while head < HEAD_MIN and tail is not None:
        head = (head << WORD_BITS) | tail[0]
        tail = tail[1]
        length -= 1
    assert head < 1 << HEAD_BITS and (length == 0 or head >= HEAD_MIN)
    return Message(head, tail, length), s


# -- encoders as bijections ----------------------------------------------------


def make_encoder(t: CategoricalTable, symbols: Optional[Sequence[Value]] = None,
                 name: str = "encoder") -> Bijection:
    """Bijection ``(Msg , X) <-> Msg`` coding X with table ``t``.

    ``symbols[i]`` is the runtime value for symbol index ``i``; by default
    symbol ``i`` is ``Int(i)``.
    """
    if symbols is None:
        symbols = [Int(i) for i in range(t.n)]
    symbols = tuple(symbols)
    if len(symbols) != t.n:
        raise ValueError(f"descriptor lists {len(symbols)} symbols, table has {t.n}")
    index = {v: i for i, v in enumerate(symbols)}
    if len(index) != len(symbols):
        raise ValueError("symbol descriptor is not injective")

    def forward(v: Value) -> Value:
        if not (isinstance(v, Pair) and isinstance(v.left, Opaque) and v.left.tag == "Msg"):
            raise TypeError(f"{name}: expected (Msg , symbol), got {v!r}")
        try:
            s = index[v.right]
        except KeyError:
            raise ValueError(f"{name}: value {v.right!r} is not a symbol of this table") from None
        return Msg(rans_encode(v.left.payload, s, t))

    def backward(v: Value) -> Value:
        if not (isinstance(v, Opaque) and v.tag == "Msg"):
            raise TypeError(f"{name}: expected Msg, got {v!r}")
        m, s = rans_decode(v.payload, t)
        return Pair(Msg(m), symbols[s])

    return Bijection(forward, backward, name)


def Vec(items: Sequence[Value]) -> Opaque:
    return Opaque("Vec", tuple(items))


def encode_list(e: Bijection, n: int) -> Bijection:
    """Fold an encoder over a list of exactly ``n`` elements.

    Elements are pushed last-to-first so that popping yields them in order.
    """

    def forward(v: Value) -> Value:
        m, items = v.left, v.right.payload
        if len(items) != n:
            raise ValueError(f"list has length {len(items)}, expected {n}")
        for x in reversed(items):
            m = e.forward(Pair(m, x))
        return m

    def backward(m: Value) -> Value:
        items = []
        for _ in range(n):
            p = e.backward(m)
            m = p.left
            items.append(p.right)
        return Pair(m, Vec(items))

    return Bijection(forward, backward, f"list {n} of {e.name}")


# -- serialization ----------------------------------------------------------------

MSG_MAGIC = b"FLPM"
MSG_VERSION = 1
_MSG_HEADER = struct.Struct(">4sBQI")


def serialize_message(m: Message) -> bytes:
    words = m.tail_words()
    return _MSG_HEADER.pack(MSG_MAGIC, MSG_VERSION, m.head, len(words)) + \
        struct.pack(f">{len(words)}I", *words)


def deserialize_message(data: bytes) -> Message:
    """Inverse of :func:`serialize_message`; the input must be consumed exactly."""
    if len(data) < _MSG_HEADER.size:
        raise ValueError("truncated message header")
    magic, version, head, n = _MSG_HEADER.unpack_from(data)
    if magic != MSG_MAGIC:
        raise ValueError(f"bad message magic {magic!r}")
    if version != MSG_VERSION:
        raise ValueError(f"unsupported message version {version}")
    body = data[_MSG_HEADER.size:]
    if len(body) != 4 * n:
        raise ValueError(f"message declares {n} tail words but carries {len(body)} bytes")
    return Message.from_words(head, struct.unpack(f">{n}I", body))
