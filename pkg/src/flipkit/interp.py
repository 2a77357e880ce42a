"""Bidirectional interpreter for checked Flipper programs.

Forward evaluation runs a branch top to bottom; backward evaluation selects
the branch by its right-hand side and runs the steps in reverse order with
every sub-flippable flipped. Host bijections (the rANS coder) enter through
the extern registry or as parameter bindings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from .bijection import Bijection
from .checker import CheckedProgram, check_fexpr
from .parser import parse_fexpr
from .syntax import (
    FExpr,
    FFlip,
    FlipDef,
    FRef,
    Pattern,
    PPair,
    PVar,
    TPair,
    TVar,
    TypeExpr,
    spine,
)
from .values import Con, Pair, Value, render_value

DEFAULT_STEP_BUDGET = 10**7


class RuntimeFault(Exception):
    """Evaluation reached a state a checked program should never reach."""


class StepBudgetExceeded(RuntimeFault):
    pass


class RegistrationError(ValueError):
    pass


# -- pattern matching -------------------------------------------------------------


def match_pattern(p: Pattern, v: Value) -> Optional[dict[str, Value]]:
    """Bindings produced by matching ``v`` against ``p``, or None on mismatch."""
    out: dict[str, Value] = {}
    return out if _match(p, v, out) else None


def _match(p: Pattern, v: Value, out: dict) -> bool:
    if isinstance(p, PVar):
        out[p.name] = v
        return True
    if isinstance(p, PPair):
        return isinstance(v, Pair) and _match(p.left, v.left, out) and _match(p.right, v.right, out)
    if not isinstance(v, Con) or v.ctor != p.ctor or len(v.args) != len(p.args):
        return False
    return all(_match(a, b, out) for a, b in zip(p.args, v.args))


class Frame:
    """Linear variable frame: reading a binding consumes it."""

    def __init__(self):
        self.live: dict[str, Value] = {}
        self.consumed: set[str] = set()

    def bind(self, bindings: dict[str, Value]) -> None:
        for name, v in bindings.items():
            if name in self.live:
                raise RuntimeFault(f"{name} rebound while still live")
            self.consumed.discard(name)
            self.live[name] = v

    def take(self, name: str) -> Value:
        try:
            v = self.live.pop(name)
        except KeyError:
            state = "already consumed" if name in self.consumed else "unbound"
            raise RuntimeFault(f"variable {name} is {state}") from None
        self.consumed.add(name)
        return v

    def peek(self, name: str) -> Value:
        try:
            return self.live[name]
        except KeyError:
            raise RuntimeFault(f"reference to {name} outside its live window") from None


def build_pattern(p: Pattern, frame: Frame) -> Value:
    """Construct the value described by ``p``, consuming its variables."""
    if isinstance(p, PVar):
        return frame.take(p.name)
    if isinstance(p, PPair):
        return Pair(build_pattern(p.left, frame), build_pattern(p.right, frame))
    return Con(p.ctor, tuple(build_pattern(a, frame) for a in p.args))


# -- runtime flippables -----------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """Value-indexed family of bijections, the runtime form of ``i -> a <-> b``."""

    member: Callable[[Value], Bijection]
    flipped: bool = False
    name: str = "<family>"

    def at(self, index: Value) -> Bijection:
        b = self.member(index)
        return b.flip() if self.flipped else b

    def flip(self) -> "Family":
        return replace(self, flipped=not self.flipped)


@dataclass(frozen=True)
class Partial:
    """A parameterised definition with some of its flippable arguments supplied."""

    defn: FlipDef
    args: tuple = ()
    flipped: bool = False

    def flip(self) -> "Partial":
        return replace(self, flipped=not self.flipped)


Flippable = Union[Bijection, Family, Partial]


@dataclass
class _Budget:
    remaining: int

    def tick(self) -> None:
        self.remaining -= 1
        if self.remaining < 0:
            raise StepBudgetExceeded("step budget exhausted (possible non-termination)")


def _alpha_key(dom: TypeExpr, cod: TypeExpr) -> tuple:
    names: dict[str, int] = {}

    def go(t):
        if isinstance(t, TVar):
            return ("v", names.setdefault(t.name, len(names)))
        if isinstance(t, TPair):
            return ("p", go(t.left), go(t.right))
        return ("c", t.name, tuple(go(a) for a in t.args))

    return go(dom), go(cod)


@dataclass
class Env:
    """Runtime context: checked program, extern registry, parameter bindings."""

    program: CheckedProgram
    externs: dict[str, Bijection] = field(default_factory=dict)
    params: dict[str, Flippable] = field(default_factory=dict)
    step_budget: int = DEFAULT_STEP_BUDGET
    debug: bool = __debug__

    def register_external(self, name: str, bij: Bijection, domain: TypeExpr,
                          codomain: TypeExpr) -> "Env":
        """Return a new Env with ``bij`` bound to the extern declaration ``name``."""
        decl = self.program.program.externs.get(name)
        if decl is None:
            raise RegistrationError(f"{name} is not declared extern")
        if name in self.externs:
            raise RegistrationError(f"{name} is already registered")
        if _alpha_key(domain, codomain) != _alpha_key(decl.domain, decl.codomain):
            raise RegistrationError(f"signature mismatch for extern {name}")
        return replace(self, externs={**self.externs, name: bij})

    def with_params(self, **params: Flippable) -> "Env":
        return replace(self, params={**self.params, **params})


class _Machine:
    """One top-level evaluation; owns the step budget."""

    def __init__(self, env: Env):
        self.env = env
        self.flips = env.program.program.flips
        self.budget = _Budget(env.step_budget)
        self.depth = 0

    def resolve(self, e: FExpr, params: dict, frame: Optional[Frame]) -> Flippable:
        if isinstance(e, FRef):
            if e.name in params:
                return params[e.name]
            if e.name in self.flips:
                d = self.flips[e.name]
                return self.closure(d, {}) if not d.params else Partial(d)
            if e.name in self.env.externs:
                return self.env.externs[e.name]
            if e.name in self.env.program.program.externs:
                raise RuntimeFault(f"extern {e.name} has no registered implementation")
            raise RuntimeFault(f"unknown flippable {e.name}")
        if isinstance(e, FFlip):
            return self.resolve(e.inner, params, frame).flip()
        head, args = spine(e)
        f = self.resolve(head, params, frame)
        for a in args:
            f = self.apply(f, a, params, frame)
        return f

    def apply(self, f: Flippable, arg: FExpr, params: dict, frame: Optional[Frame]) -> Flippable:
        if isinstance(f, Family):
            if not isinstance(arg, FRef) or frame is None:
                raise RuntimeFault("indexed flippable needs a variable index")
            return f.at(frame.peek(arg.name))
        if isinstance(f, Partial):
            args = f.args + (self.resolve(arg, params, frame),)
            if len(args) < len(f.defn.params):
                return replace(f, args=args)
            bound = {p.name: a for p, a in zip(f.defn.params, args)}
            b = self.closure(f.defn, bound)
            return b.flip() if f.flipped else b
        raise RuntimeFault("flippable applied to too many arguments")

    def closure(self, d: FlipDef, params: dict) -> Bijection:
        return Bijection(lambda v: self.run(d, params, v, True),
                         lambda v: self.run(d, params, v, False), d.name)

    def run(self, d: FlipDef, params: dict, value: Value, forward: bool) -> Value:
        if self.depth == 0:
            # each outermost call gets a fresh budget
            self.budget = _Budget(self.env.step_budget)
        self.depth += 1
        try:
            return self._run(d, params, value, forward)
        finally:
            self.depth -= 1

    def _run(self, d: FlipDef, params: dict, value: Value, forward: bool) -> Value:
        self.budget.tick()
        chosen = None
        for b in d.branches:
            bindings = match_pattern(b.lhs if forward else b.rhs, value)
            if bindings is None:
                continue
            if chosen is None:
                chosen = (b, bindings)
                if not self.env.debug:
                    break
            else:
                raise RuntimeFault(f"{d.name}: value {render_value(value)} matches two branches")
        if chosen is None:
            raise RuntimeFault(f"{d.name}: no branch matches {render_value(value)}")
        b, bindings = chosen
        frame = Frame()
        frame.bind(bindings)
        if forward:
            steps = [(st.out_pattern, st.fexpr, st.in_pattern) for st in b.steps]
            end = b.rhs
        else:
            steps = [(st.in_pattern, st.fexpr, st.out_pattern) for st in reversed(b.steps)]
            end = b.lhs
        for out_p, fexpr, in_p in steps:
            self.budget.tick()
            f = self.resolve(fexpr, params, frame)
            if not isinstance(f, Bijection):
                raise RuntimeFault(f"{d.name}: step flippable is not fully applied")
            arg = build_pattern(out_p, frame)
            result = f.forward(arg) if forward else f.backward(arg)
            got = match_pattern(in_p, result)
            if got is None:
                raise RuntimeFault(f"{d.name}: result {render_value(result)} does not match")
            frame.bind(got)
        out = build_pattern(end, frame)
        if self.env.debug and frame.live:
            raise RuntimeFault(f"{d.name}: branch ended with live bindings {sorted(frame.live)}")
        return out


def resolve_fexpr(e: Union[FExpr, str], env: Env, frame: Optional[Frame] = None) -> Flippable:
    """Resolve a flippable expression to a bijection (or family/partial)."""
    if isinstance(e, str):
        e = parse_fexpr(e)
    return _Machine(env).resolve(e, env.params, frame)


def _call(checked: CheckedProgram, defname: str, value: Value, env: Optional[Env],
          forward: bool) -> Value:
    env = env or Env(checked)
    d = checked.program.flips.get(defname)
    if d is None:
        raise RuntimeFault(f"unknown definition {defname}")
    return run_def(d, value, env, forward)


def run_def(d: FlipDef, value: Value, env: Env, forward: bool = True) -> Value:
    """Evaluate ``d`` (which need not be part of the program) in ``env``."""
    missing = [p.name for p in d.params if p.name not in env.params]
    if missing:
        raise RuntimeFault(f"{d.name}: no binding for parameter(s) {', '.join(missing)}")
    params = {p.name: env.params[p.name] for p in d.params}
    m = _Machine(env)
    try:
        return m.run(d, params, value, forward)
    except RecursionError:
        raise RuntimeFault(f"{d.name}: recursion too deep") from None


def eval_forward(checked: CheckedProgram, defname: str, value: Value,
                 env: Optional[Env] = None) -> Value:
    return _call(checked, defname, value, env, True)


def eval_backward(checked: CheckedProgram, defname: str, value: Value,
                  env: Optional[Env] = None) -> Value:
    return _call(checked, defname, value, env, False)


def compile_fexpr(checked: CheckedProgram, text: str, env: Optional[Env] = None) -> Bijection:
    """Type-check and resolve a closed expression such as ``compose pairSwp idF``."""
    e = parse_fexpr(text)
    check_fexpr(checked.program, e)
    f = resolve_fexpr(e, env or Env(checked))
    if not isinstance(f, Bijection):
        raise RuntimeFault(f"{text} is not a fully applied flippable")
    return f
