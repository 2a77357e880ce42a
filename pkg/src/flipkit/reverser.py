"""Source-to-source reversal: read each branch backwards, flipping every step."""

from __future__ import annotations

from dataclasses import replace

from .syntax import Branch, FlipDef, ReversedMark, Step, flipped


def reverse_step(st: Step) -> Step:
    return Step(st.in_pattern, flipped(st.fexpr), st.out_pattern, span=st.span)


def reverse_branch(b: Branch) -> Branch:
    steps = tuple(reverse_step(st) for st in reversed(b.steps))
    return Branch(b.rhs, steps, b.lhs, span=b.span)


def reverse_flippable(d: FlipDef) -> FlipDef:
    """The definition of signature ``B <-> A`` obtained from ``A <-> B``.

    Names are kept, so references to other definitions (including ``d``
    itself) still mean the originals.
    """
    if d.mark is not None and d.mark.reversed:
        mark = None
    else:
        mark = ReversedMark(d.name)
    return replace(d, domain=d.codomain, codomain=d.domain,
                   branches=tuple(reverse_branch(b) for b in d.branches), mark=mark)
