from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class Bijection:
    """A pair of mutually inverse procedures over runtime values.

    ``backward(forward(v)) == v`` on the declared domain and
    ``forward(backward(w)) == w`` on the declared codomain are obligations
    of whoever builds one; property tests check them.
    """

    forward: Callable
    backward: Callable
    name: str = "<bijection>"

    def flip(self) -> "Bijection":
        name = self.name[5:] if self.name.startswith("flip ") else "flip " + self.name
        return Bijection(self.backward, self.forward, name)

    def then(self, other: "Bijection") -> "Bijection":
        f1, f2, b1, b2 = self.forward, other.forward, self.backward, other.backward
        return Bijection(lambda v: f2(f1(v)), lambda w: b1(b2(w)),
                         f"{self.name} ; {other.name}")
