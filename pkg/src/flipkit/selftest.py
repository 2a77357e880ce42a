"""Randomized conformance harness behind ``flipkit selftest``.

Each check returns a :class:`Result`; a failing check carries the first
counterexample rendered as a value literal.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable, Optional

from . import ans
from .ans import CategoricalTable, msg_bits, msg_init, rans_decode, rans_encode
from .bbans import (
    LatentModel,
    dsl_codec,
    host_codec,
    load_demo_model,
    negative_elbo,
)
from .checker import CheckedProgram, check_flipdef
from .gen import instantiate, random_message, random_value
from .interp import Env, Family, resolve_fexpr, run_def
from .parser import parse_program, parse_type
from .reverser import reverse_flippable
from .stdlib import load_stdlib, stdlib_program
from .syntax import FlipDef, TypeExpr
from .values import Con, Int, Msg, Pair, Value, render_value

DEFAULT_CASES = 1000
DEFAULT_RATE_N = 100_000


@dataclass
class Result:
    name: str
    passed: bool
    cases: int
    seconds: float = 0.0
    counterexample: Optional[str] = None
    detail: str = ""


@dataclass
class Subject:
    """A definition together with the parameter bindings needed to run it."""

    name: str
    defn: FlipDef
    env: Env
    domain: TypeExpr
    codomain: TypeExpr
    sample_domain: Optional[Callable[[random.Random], Value]] = None
    sample_codomain: Optional[Callable[[random.Random], Value]] = None

    def forward(self, v: Value) -> Value:
        return run_def(self.defn, v, self.env, True)

    def backward(self, v: Value) -> Value:
        return run_def(self.defn, v, self.env, False)

    def sample(self, side: str, rng: random.Random) -> Value:
        custom = self.sample_domain if side == "domain" else self.sample_codomain
        if custom is not None:
            return custom(rng)
        program = self.env.program.program
        ty, = instantiate(program, [self.domain if side == "domain" else self.codomain], rng)
        return random_value(program, ty, rng)


MUTANT_SUMSWP = """
flip sumSwp : Either a b <-> Either b a = {
    (Left x) <-> (Right x);
    (Right y) <-> (Right y)
}
"""


def mutated_stdlib() -> CheckedProgram:
    """The stdlib with a broken ``sumSwp``, deliberately left unchecked."""
    bad = parse_program(MUTANT_SUMSWP).flips["sumSwp"]
    return CheckedProgram(stdlib_program().replace_flip(bad), {})


def _choose_family(checked: CheckedProgram) -> Family:
    env = Env(checked)
    swap, ident = resolve_fexpr("sumSwp", env), resolve_fexpr("idF", env)
    return Family(lambda i: swap if isinstance(i, Con) and i.ctor == "Left" else ident,
                  name="choose")


def shift_family() -> Family:
    from .bijection import Bijection

    def member(i):
        k = i.payload
        return Bijection(lambda v: Int(v.payload + k), lambda v: Int(v.payload - k), f"+{k}")

    return Family(member, name="shift")


def stdlib_subjects(checked: Optional[CheckedProgram] = None,
                    model: Optional[LatentModel] = None) -> list[Subject]:
    """Every stdlib definition, with concrete arguments for the parameterised ones."""
    checked = checked or load_stdlib()
    model = model or load_demo_model()
    flips = checked.program.flips
    env = Env(checked, debug=True)
    subjects = []
    for name in ("idF", "pairSwp", "sumSwp", "assocP"):
        d = flips[name]
        subjects.append(Subject(name, d, env, d.domain, d.codomain))

    compose = flips["compose"]
    for f, g, dom, cod in [
        ("pairSwp", "pairSwp", "(a , b)", "(a , b)"),
        ("sumSwp", "sumSwp", "Either a b", "Either a b"),
        ("idF", "assocP", "((a , b) , c)", "(a , (b , c))"),
        ("assocP", "flip assocP", "((a , b) , c)", "((a , b) , c)"),
        ("pairSwp", "compose pairSwp idF", "(a , b)", "(a , b)"),
    ]:
        e = env.with_params(f=resolve_fexpr(f, env), g=resolve_fexpr(g, env))
        subjects.append(Subject(f"compose[{f}; {g}]", compose, e,
                                parse_type(dom), parse_type(cod)))

    uncurry = flips["uncurryF"]
    subjects.append(Subject("uncurryF[shift]", uncurry, env.with_params(f=shift_family()),
                            parse_type("(Int , Int)"), parse_type("(Int , Int)")))
    either = "(Either Int Int , Either Int Int)"
    subjects.append(Subject("uncurryF[choose]", uncurry,
                            env.with_params(f=_choose_family(checked)),
                            parse_type(either), parse_type(either)))

    from .bbans import likelihood_family, posterior_family, prior_encoder

    bb_env = env.with_params(pz=prior_encoder(model), pxz=likelihood_family(model),
                             qzx=posterior_family(model))
    d = flips["bbAns"]
    subjects.append(Subject(
        "bbAns[demo]", d, bb_env, d.domain, d.codomain,
        sample_domain=lambda rng: Pair(Msg(random_message(rng)), Int(rng.randrange(model.V))),
        sample_codomain=lambda rng: Msg(random_message(rng)),
    ))
    return subjects


def _timed(fn):
    def wrapper(*args, **kwargs) -> Result:
        t0 = time.perf_counter()
        r = fn(*args, **kwargs)
        r.seconds = time.perf_counter() - t0
        return r

    return wrapper


def _roundtrip(subject: Subject, cases: int, rng: random.Random, side: str,
               there: Callable, back: Callable, label: str) -> Result:
    name = f"{label} {subject.name}"
    for i in range(cases):
        v = subject.sample(side, rng)
        try:
            ok = back(there(v)) == v
        except Exception as e:  # a fault on a valid input is a failure too
            return Result(name, False, i + 1, counterexample=render_value(v), detail=repr(e))
        if not ok:
            return Result(name, False, i + 1, counterexample=render_value(v))
    return Result(name, True, cases)


@_timed
def check_prfa(subject: Subject, cases: int, rng: random.Random) -> Result:
    """backward(forward(v)) == v on generated domain values."""
    return _roundtrip(subject, cases, rng, "domain", subject.forward, subject.backward, "prfa")


@_timed
def check_prfb(subject: Subject, cases: int, rng: random.Random) -> Result:
    """forward(backward(w)) == w on generated codomain values."""
    return _roundtrip(subject, cases, rng, "codomain", subject.backward, subject.forward, "prfb")


@_timed
def check_reverser(subject: Subject, cases: int, rng: random.Random) -> Result:
    """Involution, checker closure, and forward(reverse d) == backward(d)."""
    name = f"reverse {subject.name}"
    d = subject.defn
    rev = reverse_flippable(d)
    if reverse_flippable(rev) != d:
        return Result(name, False, 0, detail="reverse is not an involution")
    errs = check_flipdef(subject.env.program.program, rev).errors
    if errs:
        return Result(name, False, 0, detail=errs[0].format())
    for i in range(cases):
        w = subject.sample("codomain", rng)
        try:
            ok = run_def(rev, w, subject.env, True) == subject.backward(w)
        except Exception as e:
            return Result(name, False, i + 1, counterexample=render_value(w), detail=repr(e))
        if not ok:
            return Result(name, False, i + 1, counterexample=render_value(w))
    return Result(name, True, cases)


@_timed
def check_ans_exhaustive(span: int = 4096) -> Result:
    """Both inverse laws for r=2, freqs=[1,3] over every head in [2^32, 2^32+span)."""
    t = CategoricalTable(2, (1, 3))
    count = 0
    for head in range(ans.HEAD_MIN, ans.HEAD_MIN + span):
        m = ans.Message(head)
        for s in range(t.n):
            count += 1
            m2, s2 = rans_decode(rans_encode(m, s, t), t)
            if m2 != m or s2 != s:
                return Result("ans exhaustive", False, count,
                              counterexample=f"({render_value(Msg(m))} , {s})")
        count += 1
        m2, s2 = rans_decode(m, t)
        if rans_encode(m2, s2, t) != m:
            return Result("ans exhaustive", False, count, counterexample=render_value(Msg(m)))
    return Result("ans exhaustive", True, count)


def exact_type_sample(t: CategoricalTable, n: int, rng: random.Random) -> list[int]:
    """A shuffled sequence whose symbol counts are exactly n * freq / 2^r."""
    total = 1 << t.precision
    if n % total and any((n * f) % total for f in t.freqs):
        raise ValueError("n does not split exactly by this table")
    xs = [s for s, f in enumerate(t.freqs) for _ in range(n * f // total)]
    rng.shuffle(xs)
    return xs


def coded_rate(t: CategoricalTable, xs: list[int]) -> float:
    m = msg_init()
    for x in xs:
        m = rans_encode(m, x, t)
    return (msg_bits(m) - msg_bits(msg_init())) / len(xs)


@_timed
def check_dyadic_rate(rng: random.Random, n: int = DEFAULT_RATE_N) -> Result:
    t = CategoricalTable(12, (2048, 1024, 512, 512))
    h = t.entropy()
    rate = coded_rate(t, exact_type_sample(t, n, rng))
    ok = h <= rate <= h + 0.001 + 64 / n
    return Result("dyadic rate", ok, n, detail=f"{rate:.6f} bits/sym, H = {h:.6f}")


def bbans_rate(codec, model: LatentModel, xs: list[int]) -> float:
    c = Msg(msg_init())
    for x in reversed(xs):
        c = codec.forward(Pair(c, Int(x)))
    return (msg_bits(c.payload) - msg_bits(msg_init())) / len(xs)


def sample_marginal(model: LatentModel, n: int, rng: random.Random) -> list[int]:
    return rng.choices(range(model.V), weights=model.marginal(), k=n)


@_timed
def check_bbans_rate(rng: random.Random, n: int = DEFAULT_RATE_N,
                     model: Optional[LatentModel] = None) -> Result:
    model = model or load_demo_model()
    xs = sample_marginal(model, n, rng)
    rate = bbans_rate(host_codec(model), model, xs)
    pred = negative_elbo(model, xs)
    ok = abs(rate - pred) <= 0.05
    return Result("bb-ans rate", ok, n, detail=f"{rate:.4f} bits/sym, -ELBO = {pred:.4f}")


@_timed
def check_host_dsl_agreement(rng: random.Random, cases: int = DEFAULT_CASES,
                             model: Optional[LatentModel] = None) -> Result:
    model = model or load_demo_model()
    host, dsl = host_codec(model), dsl_codec(model)
    for i in range(cases):
        v = Pair(Msg(random_message(rng)), Int(rng.randrange(model.V)))
        if host.forward(v) != dsl.forward(v):
            return Result("host/dsl agreement", False, i + 1, counterexample=render_value(v))
    return Result("host/dsl agreement", True, cases)


def run_selftest(seed: int = 0, cases: int = DEFAULT_CASES, rate_n: int = DEFAULT_RATE_N,
                 mutant: bool = False) -> list[Result]:
    rng = random.Random(seed)
    checked = mutated_stdlib() if mutant else load_stdlib()
    subjects = stdlib_subjects(checked)
    if mutant:
        for s in subjects:
            s.env.debug = False
    results = []
    for s in subjects:
        results.append(check_prfa(s, cases, rng))
        results.append(check_prfb(s, cases, rng))
    if not mutant:
        for s in subjects:
            results.append(check_reverser(s, cases, rng))
    results.append(check_ans_exhaustive())
    results.append(check_dyadic_rate(rng, rate_n))
    results.append(check_bbans_rate(rng, rate_n))
    results.append(check_host_dsl_agreement(rng, cases))
    return results


def format_table(results: list[Result]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  cases    time  detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = r.detail
        if r.counterexample is not None:
            extra = f"counterexample: {r.counterexample} {extra}".rstrip()
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.cases:>5}  {r.seconds:5.2f}s  {extra}")
    return "\n".join(lines)
