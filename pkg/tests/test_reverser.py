import random
from pathlib import Path

import pytest

from flipkit.checker import check_flipdef
from flipkit.gen import instantiate, random_value
from flipkit.interp import Env, run_def
from flipkit.parser import parse_program
from flipkit.printer import render_flipdef
from flipkit.reverser import reverse_branch, reverse_flippable
from flipkit.selftest import stdlib_subjects
from flipkit.stdlib import load_stdlib
from flipkit.syntax import FFlip, FRef, ReversedMark

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def stdlib_def(name):
    return load_stdlib().program.flips[name]


def body(d):
    return render_flipdef(d).split(" = ", 1)[1]


def test_pairswp_swaps_patterns():
    assert body(reverse_flippable(stdlib_def("pairSwp"))) == "{ (y , x) <-> (x , y) }"


def test_identity_is_self_reverse():
    d = stdlib_def("idF")
    assert body(reverse_flippable(d)) == body(d)


def test_compose_rotation():
    r = reverse_flippable(stdlib_def("compose"))
    assert body(r) == "{ z <-> z < flip g > y <-> y < flip f > x <-> x }"


def test_uncurry_rotation():
    r = reverse_flippable(stdlib_def("uncurryF"))
    assert body(r) == "{ (x , z) <-> z < flip (f x) > y <-> (x , y) }"


def test_bbans_first_reversed_step_decodes_with_pz():
    (b,) = reverse_flippable(stdlib_def("bbAns")).branches
    first = b.steps[0]
    assert first.fexpr == FFlip(FRef("pz"))
    assert body(reverse_flippable(stdlib_def("bbAns"))).startswith(
        "{ c <-> c < flip pz > (c , zv) <-> ")


def test_flip_flip_simplified():
    (b,) = reverse_flippable(stdlib_def("bbAns")).branches
    assert all(not (isinstance(s.fexpr, FFlip) and isinstance(s.fexpr.inner, FFlip))
               for s in b.steps)
    assert b.steps[-1].fexpr.__class__.__name__ == "FApp"  # flip (qzx xv) became qzx xv


def test_zero_step_branch():
    (b,) = stdlib_def("assocP").branches
    r = reverse_branch(b)
    assert (r.lhs, r.steps, r.rhs) == (b.rhs, (), b.lhs)


def test_signature_swapped_and_branch_order_kept():
    d = stdlib_def("sumSwp")
    r = reverse_flippable(d)
    assert (r.domain, r.codomain) == (d.codomain, d.domain)
    assert [x.rhs for x in r.branches] == [x.lhs for x in d.branches]


def test_mark_round_trip():
    d = stdlib_def("pairSwp")
    r = reverse_flippable(d)
    assert r.mark == ReversedMark("pairSwp", True) and r.name == d.name
    rr = reverse_flippable(r)
    assert rr.mark is None and rr == d


def all_defs():
    defs = list(load_stdlib().program.flips.values())
    for path in sorted((FIXTURES / "check").glob("*.flp")):
        defs.extend(parse_program(path.read_text()).flips.values())
    return defs


@pytest.mark.parametrize("d", all_defs(), ids=lambda d: d.name)
def test_involution(d):
    assert reverse_flippable(reverse_flippable(d)) == d


@pytest.mark.parametrize("name", ["idF", "pairSwp", "sumSwp", "assocP", "compose", "uncurryF",
                                  "bbAns"])
def test_golden(name):
    expected = (GOLDEN / f"{name}.reversed.flp").read_text().strip()
    assert render_flipdef(reverse_flippable(stdlib_def(name))) == expected


@pytest.mark.parametrize("name", ["idF", "pairSwp", "sumSwp", "assocP", "compose", "uncurryF",
                                  "bbAns"])
def test_checker_closure(name):
    program = load_stdlib().program
    assert check_flipdef(program, reverse_flippable(stdlib_def(name))).errors == []


@pytest.mark.parametrize("subject", stdlib_subjects(), ids=lambda s: s.name)
def test_semantic_agreement(subject):
    rng = random.Random(7)
    rev = reverse_flippable(subject.defn)
    for _ in range(200):
        w = subject.sample("codomain", rng)
        assert run_def(rev, w, subject.env, True) == subject.backward(w)
        v = subject.sample("domain", rng)
        assert run_def(rev, v, subject.env, False) == subject.forward(v)


def test_agreement_on_generated_values():
    checked = load_stdlib()
    env = Env(checked)
    rng = random.Random(3)
    d = checked.program.flips["assocP"]
    rev = reverse_flippable(d)
    for _ in range(200):
        (ty,) = instantiate(checked.program, [d.codomain], rng)
        w = random_value(checked.program, ty, rng)
        assert run_def(rev, w, env) == run_def(d, w, env, forward=False)
