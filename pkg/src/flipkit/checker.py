"""Static reversibility checks for Flipper programs.

A program that passes :func:`check_program` can be run in both directions:
every bound variable is consumed exactly once, references inside ``< ... >``
stay within the window between binding and consumption, and the branch
patterns partition both the domain and the codomain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .syntax import (
    BUILTIN_TYPES,
    NOSPAN,
    Branch,
    DataDecl,
    FExpr,
    FFlip,
    FlipDef,
    FlipSig,
    FRef,
    IndexedSig,
    Pattern,
    PCon,
    PPair,
    Program,
    PVar,
    Span,
    TCon,
    TPair,
    TVar,
    TypeExpr,
    pattern_vars,
    spine,
)
from .printer import render_pattern, render_type


class Kind(str, Enum):
    NonlinearUse = "NonlinearUse"
    UnusedVariable = "UnusedVariable"
    OutOfWindowReference = "OutOfWindowReference"
    OverlappingPatterns = "OverlappingPatterns"
    NonExhaustivePatterns = "NonExhaustivePatterns"
    RebindBeforeConsume = "RebindBeforeConsume"
    TypeMismatch = "TypeMismatch"
    UnknownName = "UnknownName"
    ArityMismatch = "ArityMismatch"


LINEARITY_KINDS = frozenset({Kind.NonlinearUse, Kind.UnusedVariable, Kind.RebindBeforeConsume})
TYPE_KINDS = frozenset({Kind.TypeMismatch, Kind.UnknownName, Kind.ArityMismatch})


@dataclass(frozen=True)
class CheckError:
    kind: Kind
    span: Span
    detail: str

    def sort_key(self):
        return (self.span.line, self.span.col, self.kind.value, self.detail)

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.kind.value}: {self.detail}"


class CheckFailed(Exception):
    def __init__(self, errors: list[CheckError]):
        self.errors = errors
        super().__init__("\n".join(e.format() for e in errors))


# -- internal type representation ------------------------------------------


@dataclass(eq=False)
class Meta:
    """Unification variable."""

    id: int


Ty = Union[TVar, TCon, TPair, Meta]


@dataclass(frozen=True)
class FlipT:
    domain: Ty
    codomain: Ty


@dataclass(frozen=True)
class IdxT:
    index: Ty
    domain: Ty
    codomain: Ty


@dataclass(frozen=True)
class FunT:
    params: tuple[Union[FlipT, IdxT], ...]
    result: FlipT


FTy = Union[FlipT, IdxT, FunT]


class _Mismatch(Exception):
    pass


class Unifier:
    def __init__(self):
        self.subst: dict[int, Ty] = {}
        self._ids = itertools.count()

    def fresh(self) -> Meta:
        return Meta(next(self._ids))

    def resolve(self, t: Ty) -> Ty:
        while isinstance(t, Meta) and t.id in self.subst:
            t = self.subst[t.id]
        return t

    def zonk(self, t: Ty) -> Ty:
        t = self.resolve(t)
        if isinstance(t, TCon):
            return TCon(t.name, tuple(self.zonk(a) for a in t.args))
        if isinstance(t, TPair):
            return TPair(self.zonk(t.left), self.zonk(t.right))
        return t

    def _occurs(self, m: Meta, t: Ty) -> bool:
        t = self.resolve(t)
        if isinstance(t, Meta):
            return t.id == m.id
        if isinstance(t, TCon):
            return any(self._occurs(m, a) for a in t.args)
        if isinstance(t, TPair):
            return self._occurs(m, t.left) or self._occurs(m, t.right)
        return False

    def unify(self, a: Ty, b: Ty) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, Meta) or isinstance(b, Meta):
            if isinstance(a, Meta) and isinstance(b, Meta) and a.id == b.id:
                return
            m, t = (a, b) if isinstance(a, Meta) else (b, a)
            if self._occurs(m, t):
                raise _Mismatch
            self.subst[m.id] = t
            return
        if isinstance(a, TVar) and isinstance(b, TVar) and a.name == b.name:
            return
        if isinstance(a, TCon) and isinstance(b, TCon) and a.name == b.name \
                and len(a.args) == len(b.args):
            for x, y in zip(a.args, b.args):
                self.unify(x, y)
            return
        if isinstance(a, TPair) and isinstance(b, TPair):
            self.unify(a.left, b.left)
            self.unify(a.right, b.right)
            return
        raise _Mismatch

    def unify_f(self, a: FTy, b: FTy) -> None:
        if isinstance(a, FlipT) and isinstance(b, FlipT):
            self.unify(a.domain, b.domain)
            self.unify(a.codomain, b.codomain)
        elif isinstance(a, IdxT) and isinstance(b, IdxT):
            self.unify(a.index, b.index)
            self.unify(a.domain, b.domain)
            self.unify(a.codomain, b.codomain)
        else:
            raise _Mismatch

    def show(self, t: Ty) -> str:
        t = self.zonk(t)
        return render_type(_metas_to_vars(t))


def _metas_to_vars(t: Ty) -> TypeExpr:
    if isinstance(t, Meta):
        return TVar(f"?{t.id}")
    if isinstance(t, TCon):
        return TCon(t.name, tuple(_metas_to_vars(a) for a in t.args))
    if isinstance(t, TPair):
        return TPair(_metas_to_vars(t.left), _metas_to_vars(t.right))
    return t


def _subst_vars(t: TypeExpr, env: dict[str, Ty]) -> Ty:
    if isinstance(t, TVar):
        return env.get(t.name, t)
    if isinstance(t, TCon):
        return TCon(t.name, tuple(_subst_vars(a, env) for a in t.args))
    return TPair(_subst_vars(t.left, env), _subst_vars(t.right, env))


def type_vars(t: TypeExpr) -> list[str]:
    if isinstance(t, TVar):
        return [t.name]
    if isinstance(t, TCon):
        return [v for a in t.args for v in type_vars(a)]
    return type_vars(t.left) + type_vars(t.right)


def sig_of(d: FlipDef) -> FTy:
    """Signature of a definition as a flippable type (rigid type variables)."""
    result = FlipT(d.domain, d.codomain)
    if not d.params:
        return result
    return FunT(tuple(param_type(p.sig) for p in d.params), result)


def param_type(sig) -> Union[FlipT, IdxT]:
    if isinstance(sig, FlipSig):
        return FlipT(sig.domain, sig.codomain)
    return IdxT(sig.index, sig.domain, sig.codomain)


def _ftype_vars(t: FTy) -> list[str]:
    if isinstance(t, FlipT):
        return type_vars(t.domain) + type_vars(t.codomain)
    if isinstance(t, IdxT):
        return type_vars(t.index) + type_vars(t.domain) + type_vars(t.codomain)
    return [v for p in t.params for v in _ftype_vars(p)] + _ftype_vars(t.result)


def _subst_f(t: FTy, env: dict[str, Ty]) -> FTy:
    if isinstance(t, FlipT):
        return FlipT(_subst_vars(t.domain, env), _subst_vars(t.codomain, env))
    if isinstance(t, IdxT):
        return IdxT(_subst_vars(t.index, env), _subst_vars(t.domain, env),
                    _subst_vars(t.codomain, env))
    return FunT(tuple(_subst_f(p, env) for p in t.params), _subst_f(t.result, env))


def flip_type(t: FTy) -> FTy:
    if isinstance(t, FlipT):
        return FlipT(t.codomain, t.domain)
    if isinstance(t, IdxT):
        return IdxT(t.index, t.codomain, t.domain)
    return FunT(t.params, flip_type(t.result))


# -- results ----------------------------------------------------------------

LHS = 0  # site index of the branch lhs; step i is site i; rhs is len(steps) + 1


@dataclass
class VarUsage:
    name: str
    bind_site: int
    consume_sites: list[int] = field(default_factory=list)
    ref_sites: list[int] = field(default_factory=list)
    span: Span = NOSPAN


@dataclass
class BranchInfo:
    usage: list[VarUsage]
    # per step: how the head of the fexpr resolved ("param", "flip" or "extern")
    targets: list[Optional[str]]
    var_types: dict[tuple[str, int], TypeExpr]


@dataclass
class DefInfo:
    defn: FlipDef
    branches: list[BranchInfo]
    errors: list[CheckError]


@dataclass
class CheckedProgram:
    program: Program
    defs: dict[str, DefInfo]

    def __getitem__(self, name: str) -> FlipDef:
        return self.program.flips[name]


# -- the checker -------------------------------------------------------------


class _DefChecker:
    """Checks one definition against its surrounding program."""

    def __init__(self, program: Program, defn: FlipDef):
        self.program = program
        self.defn = defn
        self.datas = program.datas
        self.ctors = program.ctor_table()
        self.flips = program.flips
        self.externs = program.externs
        self.params = {p.name: p for p in defn.params}
        self.errors: list[CheckError] = []
        self.u = Unifier()

    def err(self, kind: Kind, span: Span, detail: str) -> None:
        self.errors.append(CheckError(kind, span, f"{self.defn.name}: {detail}"))

    # -- signatures

    def check_signature(self) -> bool:
        ok = True
        seen = set()
        for p in self.defn.params:
            if p.name in seen:
                self.err(Kind.NonlinearUse, p.span, f"parameter {p.name} declared twice")
                ok = False
            seen.add(p.name)
            sig = p.sig
            types = [sig.domain, sig.codomain] + ([sig.index] if isinstance(sig, IndexedSig) else [])
            for t in types:
                ok &= self.check_type_expr(t, None, p.span)
        ok &= self.check_type_expr(self.defn.domain, None, self.defn.span)
        ok &= self.check_type_expr(self.defn.codomain, None, self.defn.span)
        return ok

    def check_type_expr(self, t: TypeExpr, tparams: Optional[set[str]], span: Span) -> bool:
        return check_type_expr(self.program, t, tparams, span, self.err)

    # -- fexpr typing

    def instantiate(self, t: FTy) -> FTy:
        names = dict.fromkeys(_ftype_vars(t))
        return _subst_f(t, {n: self.u.fresh() for n in names})

    def lookup_flippable(self, ref: FRef) -> tuple[Optional[FTy], Optional[str]]:
        if ref.name in self.params:
            return param_type(self.params[ref.name].sig), "param"
        if ref.name in self.flips:
            return self.instantiate(sig_of(self.flips[ref.name])), "flip"
        if ref.name in self.externs:
            e = self.externs[ref.name]
            return self.instantiate(FlipT(e.domain, e.codomain)), "extern"
        return None, None

    def type_fexpr(self, e: FExpr, scope: "_Scope") -> tuple[Optional[FTy], Optional[str]]:
        if isinstance(e, FRef):
            t, target = self.lookup_flippable(e)
            if t is None:
                self.err(Kind.UnknownName, e.span, f"unknown flippable {e.name}")
            return t, target
        if isinstance(e, FFlip):
            t, target = self.type_fexpr(e.inner, scope)
            return (flip_type(t) if t is not None else None), target
        head, args = spine(e)
        t, target = self.type_fexpr(head, scope)
        if t is None:
            for a in args:
                if not (isinstance(a, FRef) and scope.is_value_var(a.name)):
                    self.type_fexpr(a, scope)
                else:
                    scope.reference(a)
            return None, target
        for a in args:
            t = self.apply(t, a, scope)
            if t is None:
                return None, target
        return t, target

    def apply(self, t: FTy, arg: FExpr, scope: "_Scope") -> Optional[FTy]:
        if isinstance(t, IdxT):
            if not (isinstance(arg, FRef) and scope.is_value_var(arg.name)):
                if isinstance(arg, FRef) and self.lookup_flippable(arg)[0] is None:
                    self.err(Kind.UnknownName, arg.span, f"unknown variable {arg.name}")
                else:
                    self.err(Kind.TypeMismatch, arg.span,
                             "indexed flippable must be applied to a variable")
                return None
            vt = scope.reference(arg)
            if vt is not None:
                try:
                    self.u.unify(vt, t.index)
                except _Mismatch:
                    self.err(Kind.TypeMismatch, arg.span,
                             f"index {arg.name} has type {self.u.show(vt)}, "
                             f"expected {self.u.show(t.index)}")
            return FlipT(t.domain, t.codomain)
        if isinstance(t, FunT):
            expected, rest = t.params[0], t.params[1:]
            if isinstance(arg, FRef) and scope.is_value_var(arg.name):
                self.err(Kind.TypeMismatch, arg.span,
                         f"value variable {arg.name} passed where a flippable is expected")
                return FunT(rest, t.result) if rest else t.result
            at, _ = self.type_fexpr(arg, scope)
            if at is not None:
                if isinstance(at, FunT):
                    self.err(Kind.ArityMismatch, arg.span,
                             "partially applied flippable passed as an argument")
                else:
                    try:
                        self.u.unify_f(at, expected)
                    except _Mismatch:
                        self.err(Kind.TypeMismatch, arg.span, "argument signature mismatch")
            return FunT(rest, t.result) if rest else t.result
        self.err(Kind.ArityMismatch, arg.span, "flippable applied to too many arguments")
        return None

    # -- patterns

    def bind_pattern(self, p: Pattern, ty: Ty, out: dict[str, tuple[PVar, Ty]]) -> None:
        """Type a pattern in binding position, collecting its variables."""
        if isinstance(p, PVar):
            out[p.name] = (p, ty)
            return
        for sub, sub_ty in self.destructure(p, ty):
            self.bind_pattern(sub, sub_ty, out)

    def build_pattern(self, p: Pattern, ty: Ty, scope: "_Scope", site: int) -> None:
        """Type a pattern in consuming position, consuming its variables."""
        if isinstance(p, PVar):
            vt = scope.consume(p, site)
            if vt is not None:
                try:
                    self.u.unify(vt, ty)
                except _Mismatch:
                    self.err(Kind.TypeMismatch, p.span,
                             f"{p.name} has type {self.u.show(vt)}, expected {self.u.show(ty)}")
            return
        for sub, sub_ty in self.destructure(p, ty):
            self.build_pattern(sub, sub_ty, scope, site)

    def destructure(self, p: Pattern, ty: Ty) -> list[tuple[Pattern, Ty]]:
        if isinstance(p, PPair):
            l, r = self.u.fresh(), self.u.fresh()
            try:
                self.u.unify(ty, TPair(l, r))
            except _Mismatch:
                self.err(Kind.TypeMismatch, p.span,
                         f"pair pattern against type {self.u.show(ty)}")
            return [(p.left, l), (p.right, r)]
        entry = self.ctors.get(p.ctor)
        if entry is None:
            self.err(Kind.UnknownName, p.span, f"unknown constructor {p.ctor}")
            return [(a, self.u.fresh()) for a in p.args]
        data, ctor = entry
        metas = {v: self.u.fresh() for v in data.tparams}
        try:
            self.u.unify(ty, TCon(data.name, tuple(metas[v] for v in data.tparams)))
        except _Mismatch:
            self.err(Kind.TypeMismatch, p.span,
                     f"constructor {p.ctor} of {data.name} against type {self.u.show(ty)}")
        if len(p.args) != len(ctor.args):
            self.err(Kind.ArityMismatch, p.span,
                     f"constructor {p.ctor} takes {len(ctor.args)} argument(s), got {len(p.args)}")
            return [(a, self.u.fresh()) for a in p.args]
        return [(a, _subst_vars(t, metas)) for a, t in zip(p.args, ctor.args)]

    # -- branches

    def check_branch(self, b: Branch) -> BranchInfo:
        scope = _Scope(self, b)
        n = len(b.steps)
        binds: dict[str, tuple[PVar, Ty]] = {}
        self.bind_pattern(b.lhs, self.defn.domain, binds)
        scope.bind_all(binds, LHS)
        targets = []
        for i, st in enumerate(b.steps, start=1):
            scope.begin_step(i, st)
            ft, target = self.type_fexpr(st.fexpr, scope)
            targets.append(target)
            if isinstance(ft, FunT):
                self.err(Kind.ArityMismatch, st.fexpr.span,
                         f"flippable expects {len(ft.params)} more argument(s)")
                ft = None
            if isinstance(ft, IdxT):
                self.err(Kind.ArityMismatch, st.fexpr.span,
                         "indexed flippable used without an index")
                ft = None
            dom = ft.domain if ft is not None else self.u.fresh()
            cod = ft.codomain if ft is not None else self.u.fresh()
            self.build_pattern(st.out_pattern, dom, scope, i)
            binds = {}
            self.bind_pattern(st.in_pattern, cod, binds)
            scope.bind_all(binds, i)
        self.build_pattern(b.rhs, self.defn.codomain, scope, n + 1)
        scope.finish()
        var_types = {(v.name, v.bind_site): render_type(_metas_to_vars(self.u.zonk(t)))
                     for v, t in scope.types}
        return BranchInfo(scope.usage, targets, var_types)

    def run(self) -> DefInfo:
        infos = []
        if self.check_signature():
            for b in self.defn.branches:
                infos.append(self.check_branch(b))
        for side in ("input", "output"):
            self.errors.extend(check_partition_patterns(
                self.program, [b.lhs if side == "input" else b.rhs for b in self.defn.branches],
                self.defn.name, side))
        return DefInfo(self.defn, infos, self.errors)


class _Scope:
    """Linear environment for one branch: tracks binding, consumption, references."""

    def __init__(self, checker: _DefChecker, branch: Branch):
        self.c = checker
        self.live: dict[str, tuple[VarUsage, Ty]] = {}
        self.dead: dict[str, VarUsage] = {}
        self.usage: list[VarUsage] = []
        self.types: list[tuple[VarUsage, Ty]] = []
        self.site = LHS
        self.consumed_here: set[str] = set()
        self.step_refs: set[str] = set()
        names = {v.name for v in pattern_vars(branch.lhs)}
        for st in branch.steps:
            names |= {v.name for v in pattern_vars(st.in_pattern)}
            names |= {v.name for v in pattern_vars(st.out_pattern)}
        names |= {v.name for v in pattern_vars(branch.rhs)}
        self.value_names = names

    def is_value_var(self, name: str) -> bool:
        return name in self.value_names

    def bind_all(self, binds: dict[str, tuple[PVar, Ty]], site: int) -> None:
        for name, (pv, ty) in binds.items():
            if name in self.live:
                self.c.err(Kind.RebindBeforeConsume, pv.span,
                           f"{name} rebound while an earlier binding is still live")
                # the shadowed binding is reported here and not again as unused
                self.dead[name] = self.live.pop(name)[0]
            use = VarUsage(name, site, span=pv.span)
            self.live[name] = (use, ty)
            self.usage.append(use)
            self.types.append((use, ty))

    def begin_step(self, i: int, st) -> None:
        self.site = i
        self.consumed_here = {v.name for v in pattern_vars(st.out_pattern)}

    def reference(self, ref: FRef) -> Optional[Ty]:
        entry = self.live.get(ref.name)
        if entry is None or ref.name in self.consumed_here:
            self.c.err(Kind.OutOfWindowReference, ref.span,
                       f"{ref.name} referenced at step {self.site} outside its "
                       "bind-to-consume window")
            if entry is None:
                return None
        use, ty = entry
        use.ref_sites.append(self.site)
        return ty

    def consume(self, pv: PVar, site: int) -> Optional[Ty]:
        entry = self.live.pop(pv.name, None)
        if entry is not None:
            use, ty = entry
            use.consume_sites.append(site)
            self.dead[pv.name] = use
            return ty
        if pv.name in self.dead:
            use = self.dead[pv.name]
            use.consume_sites.append(site)
            self.c.err(Kind.NonlinearUse, pv.span, f"{pv.name} used more than once")
        else:
            self.c.err(Kind.UnknownName, pv.span, f"unbound variable {pv.name}")
        return None

    def finish(self) -> None:
        for name, (use, _) in self.live.items():
            self.c.err(Kind.UnusedVariable, use.span, f"{name} is bound but never used")


def check_type_expr(program: Program, t: TypeExpr, tparams: Optional[set[str]],
                    span: Span, err) -> bool:
    """Check that named types exist with the right arity.

    ``tparams`` restricts the allowed type variables (data declarations);
    ``None`` admits any type variable (signatures are implicitly polymorphic).
    """
    sp = t.span if t.span != NOSPAN else span
    if isinstance(t, TVar):
        if tparams is not None and t.name not in tparams:
            err(Kind.UnknownName, sp, f"unknown type variable {t.name}")
            return False
        return True
    if isinstance(t, TPair):
        return (check_type_expr(program, t.left, tparams, span, err)
                & check_type_expr(program, t.right, tparams, span, err))
    ok = True
    if t.name in BUILTIN_TYPES:
        if t.args:
            err(Kind.ArityMismatch, sp, f"builtin type {t.name} takes no arguments")
            ok = False
    else:
        d = program.datas.get(t.name)
        if d is None:
            err(Kind.UnknownName, sp, f"unknown type {t.name}")
            ok = False
        elif len(d.tparams) != len(t.args):
            err(Kind.ArityMismatch, sp,
                f"type {t.name} takes {len(d.tparams)} argument(s), got {len(t.args)}")
            ok = False
    for a in t.args:
        ok &= check_type_expr(program, a, tparams, span, err)
    return ok


# -- partition analysis --------------------------------------------------------

WILD = PVar("_")


def _overlap(p: Pattern, q: Pattern) -> bool:
    if isinstance(p, PVar) or isinstance(q, PVar):
        return True
    if isinstance(p, PPair) and isinstance(q, PPair):
        return _overlap(p.left, q.left) and _overlap(p.right, q.right)
    if isinstance(p, PCon) and isinstance(q, PCon):
        return p.ctor == q.ctor and len(p.args) == len(q.args) and \
            all(_overlap(a, b) for a, b in zip(p.args, q.args))
    return False


class _Incoherent(Exception):
    """Patterns mix shapes in one column; typing reports the real problem."""


def _missing(rows: list[list[Pattern]], arity: int, ctors) -> Optional[list[Pattern]]:
    """Return a vector of patterns matched by no row, or None if the rows cover."""
    if arity == 0:
        return None if rows else []
    heads = [r[0] for r in rows if not isinstance(r[0], PVar)]
    if not heads:
        rest = _missing([r[1:] for r in rows], arity - 1, ctors)
        return None if rest is None else [WILD] + rest
    if all(isinstance(h, PPair) for h in heads):
        spec = []
        for r in rows:
            h = r[0]
            spec.append(([h.left, h.right] if isinstance(h, PPair) else [WILD, WILD]) + r[1:])
        w = _missing(spec, arity + 1, ctors)
        return None if w is None else [PPair(w[0], w[1])] + w[2:]
    if not all(isinstance(h, PCon) for h in heads):
        raise _Incoherent
    datas = {ctors[h.ctor][0].name for h in heads if h.ctor in ctors}
    if len(datas) != 1 or any(h.ctor not in ctors for h in heads):
        raise _Incoherent
    data = ctors[heads[0].ctor][0]
    present = {h.ctor for h in heads}
    for c in data.ctors:
        if c.name not in present:
            continue
        k = len(c.args)
        spec = []
        for r in rows:
            h = r[0]
            if isinstance(h, PVar):
                spec.append([WILD] * k + r[1:])
            elif h.ctor == c.name:
                if len(h.args) != k:
                    raise _Incoherent
                spec.append(list(h.args) + r[1:])
        w = _missing(spec, arity - 1 + k, ctors)
        if w is not None:
            return [PCon(c.name, tuple(w[:k]))] + w[k:]
    absent = [c for c in data.ctors if c.name not in present]
    if not absent:
        return None
    rest = _missing([r[1:] for r in rows if isinstance(r[0], PVar)], arity - 1, ctors)
    if rest is None:
        return None
    c = absent[0]
    return [PCon(c.name, (WILD,) * len(c.args))] + rest


def check_partition_patterns(program: Program, patterns: list[Pattern], defname: str,
                             side: str) -> list[CheckError]:
    errors = []
    for (i, p), (j, q) in itertools.combinations(enumerate(patterns), 2):
        if _overlap(p, q):
            errors.append(CheckError(
                Kind.OverlappingPatterns, q.span,
                f"{defname}: {side} patterns of branches {i + 1} and {j + 1} overlap: "
                f"{render_pattern(p)} and {render_pattern(q)}"))
    try:
        w = _missing([[p] for p in patterns], 1, program.ctor_table())
    except _Incoherent:
        return errors
    if w is not None:
        span = patterns[0].span if patterns else NOSPAN
        errors.append(CheckError(
            Kind.NonExhaustivePatterns, span,
            f"{defname}: {side} patterns miss {render_pattern(w[0])}"))
    return errors


# -- public entry points -------------------------------------------------------


def _check_decls(program: Program) -> list[CheckError]:
    errors: list[CheckError] = []

    def err(kind, span, detail):
        errors.append(CheckError(kind, span, detail))

    for d in program.decls:
        if isinstance(d, DataDecl):
            if len(set(d.tparams)) != len(d.tparams):
                err(Kind.NonlinearUse, d.span, f"{d.name}: repeated type parameter")
            for c in d.ctors:
                for a in c.args:
                    check_type_expr(program, a, set(d.tparams), c.span, err)
        elif not isinstance(d, FlipDef):
            check_type_expr(program, d.domain, None, d.span, err)
            check_type_expr(program, d.codomain, None, d.span, err)
    return errors


def check_flipdef(program: Program, defn: FlipDef) -> DefInfo:
    """Run every per-definition rule for ``defn`` in the context of ``program``."""
    return _DefChecker(program, defn).run()


def check_program(program: Program) -> CheckedProgram:
    """Check all declarations; raise :class:`CheckFailed` with every error found."""
    errors = _check_decls(program)
    defs = {}
    for d in program.decls:
        if isinstance(d, FlipDef):
            info = check_flipdef(program, d)
            errors.extend(info.errors)
            defs[d.name] = info
    if errors:
        raise CheckFailed(sorted(set(errors), key=CheckError.sort_key))
    return CheckedProgram(program, defs)


def collect_errors(program: Program) -> list[CheckError]:
    try:
        check_program(program)
    except CheckFailed as e:
        return e.errors
    return []


def _filtered(program: Program, defn: FlipDef, kinds) -> list[CheckError]:
    info = check_flipdef(program, defn)
    return sorted((e for e in info.errors if e.kind in kinds), key=CheckError.sort_key)


def check_types(program: Program, defn: FlipDef) -> list[CheckError]:
    return _filtered(program, defn, TYPE_KINDS)


def check_linearity(program: Program, defn: FlipDef) -> list[list[VarUsage]]:
    """Per-branch usage tables; raises :class:`CheckFailed` on linearity errors."""
    info = check_flipdef(program, defn)
    errs = [e for e in info.errors if e.kind in LINEARITY_KINDS]
    if errs:
        raise CheckFailed(sorted(errs, key=CheckError.sort_key))
    return [b.usage for b in info.branches]


def check_scope_windows(program: Program, defn: FlipDef) -> list[CheckError]:
    return _filtered(program, defn, {Kind.OutOfWindowReference})


def check_partition(program: Program, defn: FlipDef, side: str) -> list[CheckError]:
    if side not in ("input", "output"):
        raise ValueError(f"side must be 'input' or 'output', not {side!r}")
    pats = [b.lhs if side == "input" else b.rhs for b in defn.branches]
    return check_partition_patterns(program, pats, defn.name, side)


def check_fexpr(program: Program, e: FExpr) -> FlipT:
    """Type a closed flippable expression such as ``compose pairSwp pairSwp``."""
    dummy = FlipDef("<expr>", (), TVar("a"), TVar("a"), (Branch(PVar("x"), (), PVar("x")),))
    c = _DefChecker(program, dummy)
    scope = _Scope(c, dummy.branches[0])
    scope.value_names = set()
    t, _ = c.type_fexpr(e, scope)
    if isinstance(t, (FunT, IdxT)):
        c.err(Kind.ArityMismatch, e.span, "expression is not a fully applied flippable")
    if c.errors:
        raise CheckFailed(sorted(c.errors, key=CheckError.sort_key))
    dom, cod = _metas_to_vars(c.u.zonk(t.domain)), _metas_to_vars(c.u.zonk(t.codomain))
    # rename leftover variables to a, b, c, ... in order of appearance
    names = dict.fromkeys(type_vars(dom) + type_vars(cod))
    env = {v: TVar(chr(ord("a") + i) if i < 26 else f"t{i}") for i, v in enumerate(names)}
    return FlipT(_subst_vars(dom, env), _subst_vars(cod, env))
