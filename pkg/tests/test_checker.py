from pathlib import Path

import pytest

from flipkit.checker import (
    CheckFailed,
    Kind,
    check_fexpr,
    check_linearity,
    check_partition,
    check_program,
    check_scope_windows,
    check_types,
    collect_errors,
)
from flipkit.parser import parse_fexpr, parse_program, parse_type
from flipkit.stdlib import source_text, stdlib_program

FIXTURES = Path(__file__).parent / "fixtures" / "check"
EITHER = "data Either a b = Left a | Right b\n"

BBANS = ("flip bbAns (pz : (Msg , z) <-> Msg) (pxz : z -> (Msg , x) <-> Msg) "
         "(qzx : x -> (Msg , z) <-> Msg) : (Msg , x) <-> Msg = "
         "{ (c , xv) <-> c < flip (qzx xv) > (c , zv) <-> (c , xv) < pxz zv > c "
         "<-> (c , zv) < pz > c <-> c }")
PAIRSWP = "flip pairSwp : (a , b) <-> (b , a) = { (x , y) <-> (y , x) }"
SUMSWP = EITHER + ("flip sumSwp : Either a b <-> Either b a = "
                   "{ (Left x) <-> (Right x) ; (Right y) <-> (Left y) }")
COMPOSE = "flip compose (f : a <-> b) (g : b <-> c) : a <-> c = " \
          "{ x <-> x < f > y <-> y < g > z <-> z }"
UNCURRY = "flip uncurryF (f : a -> b <-> c) : (a , b) <-> (a , c) = " \
          "{ (x , y) <-> y < f x > z <-> (x , z) }"


def errors_of(src):
    return collect_errors(parse_program(src))


def kinds_of(src):
    return [e.kind for e in errors_of(src)]


def fixture(kind: Kind) -> Path:
    snake = "".join("_" + c.lower() if c.isupper() else c for c in kind.value).lstrip("_")
    return FIXTURES / f"{snake}.flp"


@pytest.mark.parametrize("kind", list(Kind), ids=lambda k: k.value)
def test_fixture_triggers_exactly_its_kind(kind):
    errs = collect_errors(parse_program(fixture(kind).read_text()))
    assert [e.kind for e in errs] == [kind]


def test_every_kind_has_a_fixture():
    assert len(Kind) == 9
    assert {p.name for p in FIXTURES.glob("*.flp")} == {fixture(k).name for k in Kind}


@pytest.mark.parametrize("src", [PAIRSWP, SUMSWP, COMPOSE, UNCURRY, BBANS],
                         ids=["pairSwp", "sumSwp", "compose", "uncurry", "bbAns"])
def test_reference_programs_accepted(src):
    assert errors_of(src) == []


def test_shipped_stdlib_accepted():
    check_program(stdlib_program())


def test_dup_and_drop():
    assert kinds_of("flip dup : a <-> (a , a) = { x <-> (x , x) }") == [Kind.NonlinearUse]
    (e,) = errors_of("flip drop : (a , b) <-> a = { (x , y) <-> x }")
    assert e.kind is Kind.UnusedVariable and "y" in e.detail


def test_all_errors_reported_in_span_order():
    src = ("flip dup : a <-> (a , a) = { x <-> (x , x) }\n"
           "flip drop : (a , b) <-> a = { (x , y) <-> x }\n")
    errs = errors_of(src)
    assert [e.kind for e in errs] == [Kind.NonlinearUse, Kind.UnusedVariable]
    assert errs == errors_of(src)  # deterministic


def test_bbans_usage_table():
    p = parse_program(BBANS)
    table = check_linearity(p, p.flips["bbAns"])[0]
    xv = [u for u in table if u.name == "xv"]
    assert len(xv) == 1
    assert (xv[0].bind_site, xv[0].ref_sites, xv[0].consume_sites) == (0, [1], [2])
    # c is rebound at every step, each binding consumed exactly once
    cs = [u for u in table if u.name == "c"]
    assert [(u.bind_site, u.consume_sites) for u in cs] == [(0, [1]), (1, [2]), (2, [3]), (3, [4])]


def test_compose_usage_table():
    p = parse_program(COMPOSE)
    table = check_linearity(p, p.flips["compose"])[0]
    assert [(u.name, u.bind_site, u.consume_sites) for u in table] == \
        [("x", 0, [1]), ("y", 1, [2]), ("z", 2, [3])]


def test_rebind_after_consume_accepted():
    src = ("flip r (e : (a , b) <-> (a , b)) : (a , b) <-> (a , b) = "
           "{ (m , x) <-> (m , x) < e > (m , z) <-> (m , z) }")
    assert errors_of(src) == []


def test_rebind_before_consume_rejected():
    src = "flip rb (f : a <-> a) : (a , a) <-> a = { (x , y) <-> y < f > x <-> x }"
    assert kinds_of(src) == [Kind.RebindBeforeConsume]


def test_uncurry_window_accepted():
    p = parse_program(UNCURRY)
    assert check_scope_windows(p, p.flips["uncurryF"]) == []


def test_reference_at_consume_site():
    src = "flip h (g : a -> a <-> a) : a <-> a = { x <-> x < g x > y <-> y }"
    assert kinds_of(src) == [Kind.OutOfWindowReference]


def test_reference_before_binding():
    src = ("flip k (f : b -> a <-> b) : (a , c) <-> (b , c) = "
           "{ (p , q) <-> p < f r > r <-> (r , q) }")
    p = parse_program(src)
    errs = check_scope_windows(p, p.flips["k"])
    assert [e.kind for e in errs] == [Kind.OutOfWindowReference]
    assert "r" in errs[0].detail


def test_sumswp_partitions_both_sides():
    p = parse_program(SUMSWP)
    for side in ("input", "output"):
        assert check_partition(p, p.flips["sumSwp"], side) == []


def test_two_left_outputs_overlap():
    src = EITHER + ("flip two : Either a a <-> Either a a = "
                    "{ (Left x) <-> (Left x) ; (Right y) <-> (Left y) }")
    p = parse_program(src)
    kinds = [e.kind for e in check_partition(p, p.flips["two"], "output")]
    assert Kind.OverlappingPatterns in kinds
    assert check_partition(p, p.flips["two"], "input") == []


def test_missing_right_witness():
    src = EITHER + "flip ne : a <-> Either a b = { x <-> (Left x) }"
    p = parse_program(src)
    (e,) = check_partition(p, p.flips["ne"], "output")
    assert e.kind is Kind.NonExhaustivePatterns and "(Right _)" in e.detail


def test_input_side_is_partitioned_too():
    src = EITHER + "flip ni : Either a a <-> a = { (Left x) <-> x }"
    p = parse_program(src)
    (e,) = check_partition(p, p.flips["ni"], "input")
    assert e.kind is Kind.NonExhaustivePatterns


def test_nested_partition():
    ok = EITHER + ("flip n : Either (Either a b) c <-> Either a (Either b c) = {\n"
                   "(Left (Left x)) <-> (Left x);\n"
                   "(Left (Right y)) <-> (Right (Left y));\n"
                   "(Right z) <-> (Right (Right z)) }")
    assert errors_of(ok) == []
    gap = ok.replace("(Left (Right y)) <-> (Right (Left y));\n", "")
    errs = errors_of(gap)
    assert Kind.NonExhaustivePatterns in [e.kind for e in errs]
    assert any("(Left (Right _))" in e.detail for e in errs)


def test_opaque_types_admit_only_variables():
    src = EITHER + "flip o : Int <-> Int = { (Left x) <-> x }"
    assert Kind.TypeMismatch in kinds_of(src)


def test_compose_step_types():
    p = parse_program(COMPOSE)
    info = check_program(p).defs["compose"].branches[0]
    assert info.var_types[("x", 0)] == "a"
    assert info.var_types[("y", 1)] == "b"
    assert info.var_types[("z", 2)] == "c"
    assert info.targets == ["param", "param"]


def test_flip_used_at_reversed_type():
    src = "flip fl (f : a <-> b) : b <-> a = { y <-> y < flip (f) > x <-> x }"
    assert errors_of(src) == []


def test_pair_into_sumswp():
    src = SUMSWP + "\nflip tm : (a , b) <-> Either b a = { p <-> p < sumSwp > q <-> q }"
    p = parse_program(src)
    assert [e.kind for e in check_types(p, p.flips["tm"])] == [Kind.TypeMismatch]


@pytest.mark.parametrize("src,kind", [
    ("flip u : Foo <-> Foo = { x <-> x }", Kind.UnknownName),
    (EITHER + "flip u : Either a <-> Either a = { x <-> x }", Kind.ArityMismatch),
    ("flip u (f : a <-> a) : a <-> a = { x <-> x < f y > z <-> z }", Kind.ArityMismatch),
    (COMPOSE + "\nflip u : a <-> a = { x <-> x < compose > y <-> y }", Kind.ArityMismatch),
    (UNCURRY + "\nflip u (g : a <-> a) : a <-> a = { x <-> x < uncurryF g > y <-> y }",
     Kind.TypeMismatch),
    ("flip u : a <-> a = { x <-> y }", Kind.UnknownName),
    (EITHER + "flip u : a <-> Either a a = { x <-> (Lft x) }", Kind.UnknownName),
])
def test_type_level_errors(src, kind):
    assert kind in kinds_of(src)


def test_parametric_signature_is_rigid():
    # swapping two type variables is not an identity
    assert Kind.TypeMismatch in kinds_of("flip w : (a , b) <-> (b , a) = { p <-> p }")


def test_check_fexpr_closed_expression():
    p = stdlib_program()
    t = check_fexpr(p, parse_fexpr("compose pairSwp pairSwp"))
    assert t.domain == parse_type("(a , b)") and t.codomain == parse_type("(a , b)")
    with pytest.raises(CheckFailed):
        check_fexpr(p, parse_fexpr("compose pairSwp sumSwp"))


def test_bbans_source_matches_shipped_file():
    shipped = parse_program(source_text("bbans.flp")).flips["bbAns"]
    assert shipped == parse_program(BBANS).flips["bbAns"]
