"""Canonical pretty-printer; output always reparses to an equal tree."""

from __future__ import annotations

from .syntax import (
    Branch,
    DataDecl,
    ExternDecl,
    FExpr,
    FFlip,
    FlipDef,
    FlipSig,
    FRef,
    Param,
    Pattern,
    PPair,
    Program,
    PVar,
    TPair,
    TVar,
    TypeExpr,
)

INDENT = "    "


def render_type(t: TypeExpr, atomic: bool = False) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TPair):
        return f"({render_type(t.left)} , {render_type(t.right)})"
    if not t.args:
        return t.name
    s = " ".join([t.name] + [render_type(a, atomic=True) for a in t.args])
    return f"({s})" if atomic else s


def render_pattern(p: Pattern) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PPair):
        return f"({render_pattern(p.left)} , {render_pattern(p.right)})"
    return "(" + " ".join([p.ctor] + [render_pattern(a) for a in p.args]) + ")"


def render_fexpr(e: FExpr, atomic: bool = False) -> str:
    if isinstance(e, FRef):
        return e.name
    if isinstance(e, FFlip):
        s = "flip " + render_fexpr(e.inner, atomic=True)
    else:
        s = render_fexpr(e.head) + " " + render_fexpr(e.arg, atomic=True)
    return f"({s})" if atomic else s


def render_branch(b: Branch) -> str:
    parts = [render_pattern(b.lhs)]
    for st in b.steps:
        parts.append(f"{render_pattern(st.out_pattern)} < {render_fexpr(st.fexpr)} > "
                     f"{render_pattern(st.in_pattern)}")
    parts.append(render_pattern(b.rhs))
    return " <-> ".join(parts)


def _render_param(p: Param) -> str:
    sig = p.sig
    if isinstance(sig, FlipSig):
        body = f"{render_type(sig.domain)} <-> {render_type(sig.codomain)}"
    else:
        body = (f"{render_type(sig.index)} -> {render_type(sig.domain)} <-> "
                f"{render_type(sig.codomain)}")
    return f"({p.name} : {body})"


def render_flipdef(d: FlipDef) -> str:
    head = " ".join(["flip", d.name] + [_render_param(p) for p in d.params])
    head += f" : {render_type(d.domain)} <-> {render_type(d.codomain)} ="
    if len(d.branches) == 1:
        return f"{head} {{ {render_branch(d.branches[0])} }}"
    body = ";\n".join(INDENT + render_branch(b) for b in d.branches)
    return f"{head} {{\n{body}\n}}"


def render_decl(d) -> str:
    if isinstance(d, DataDecl):
        ctors = " | ".join(
            " ".join([c.name] + [render_type(a, atomic=True) for a in c.args]) for c in d.ctors
        )
        return " ".join(["data", d.name, *d.tparams, "=", ctors])
    if isinstance(d, ExternDecl):
        return f"extern {d.name} : {render_type(d.domain)} <-> {render_type(d.codomain)}"
    return render_flipdef(d)


def render(program: Program) -> str:
    """Render a whole program, one blank line between declarations."""
    return "\n\n".join(render_decl(d) for d in program.decls) + "\n"
