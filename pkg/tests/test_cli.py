import json
import random
import re
from pathlib import Path

import pytest

from flipkit.ans import msg_init
from flipkit.bbans import load_demo_model
from flipkit.cli import main
from flipkit.container import Container

HERE = Path(__file__).parent
STDLIB = Path(__file__).parents[1] / "src" / "flipkit" / "stdlib"
CORE = str(STDLIB / "core.flp")
DIAG = re.compile(r"^[^:]+:\d+:\d+: [A-Za-z]+: .+$")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_stdlib_quiet(capsys):
    assert run(capsys, "check", CORE, STDLIB / "bbans.flp") == (0, "", "")


def test_check_nonlinear(capsys):
    code, out, _ = run(capsys, "check", HERE / "fixtures" / "check" / "nonlinear_use.flp")
    lines = out.splitlines()
    assert code == 1 and len(lines) == 1
    assert DIAG.match(lines[0]) and ": NonlinearUse: " in lines[0]


def test_check_syntax_error(capsys, tmp_path):
    f = tmp_path / "bad.flp"
    f.write_text("flip x : a <-> a = x <-> x")
    code, out, _ = run(capsys, "check", f)
    assert code == 1 and DIAG.match(out.strip()) and "SyntaxError" in out


def test_check_missing_file(capsys):
    assert run(capsys, "check", "/nonexistent/x.flp")[0] == 2


def test_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "run", CORE, "idF")[0] == 2  # --input is required


def test_reverse(capsys):
    code, out, _ = run(capsys, "reverse", CORE, "pairSwp")
    assert code == 0 and out.strip().endswith("= { (y , x) <-> (x , y) }")
    code, out, _ = run(capsys, "reverse", CORE, "idF")
    assert out.strip() == "flip idF : a <-> a = { x <-> x }"
    code, out, _ = run(capsys, "reverse", CORE, "compose")
    assert out.strip() == (HERE / "golden" / "compose.reversed.flp").read_text().strip()
    assert run(capsys, "reverse", CORE, "nothing")[0] == 1


def test_run(capsys):
    assert run(capsys, "run", CORE, "sumSwp", "--input", "(Left 7)")[:2] == (0, "(Right 7)\n")
    assert run(capsys, "run", CORE, "sumSwp", "--dir", "bwd", "--input", "(Right 7)")[:2] == \
        (0, "(Left 7)\n")
    assert run(capsys, "run", CORE, "compose pairSwp assocP", "--input",
               "(3 , (1 , 2))")[:2] == (0, "(1 , (2 , 3))\n")


@pytest.mark.parametrize("argv", [
    ["sumSwp", "--input", "(1 , 2)"],            # no branch matches
    ["sumSwp", "--input", "(Left"],              # bad literal
    ["compose pairSwp sumSwp", "--input", "1"],  # ill-typed expression
    ["compose", "--input", "1"],                 # partially applied
])
def test_run_failures(capsys, argv):
    assert run(capsys, "run", CORE, *argv)[0] == 1


def test_global_flags_either_side(capsys):
    assert run(capsys, "--no-stdlib", "run", CORE, "idF", "--input", "1")[0] == 0
    deep = ["compose pairSwp pairSwp", "--input", "(1 , 2)"]
    assert run(capsys, "run", CORE, *deep)[0] == 0
    assert run(capsys, "run", "--step-budget", "1", CORE, *deep)[0] == 1
    assert run(capsys, "--step-budget", "1", "run", CORE, *deep)[0] == 1


def test_no_stdlib(capsys, tmp_path):
    f = tmp_path / "use.flp"
    f.write_text("flip w : (a , b) <-> (b , a) = { p <-> p < pairSwp > q <-> q }")
    assert run(capsys, "check", f)[0] == 0
    code, out, _ = run(capsys, "check", "--no-stdlib", f)
    assert code == 1 and "UnknownName" in out


# -- compression --------------------------------------------------------------------


def symbols_file(path, xs):
    path.write_text("".join(f"{x}\n" for x in xs))
    return path


def round_trip(capsys, tmp_path, src, model="demo", engine="dsl"):
    box, back = tmp_path / "c.flpc", tmp_path / "back"
    code, out, _ = run(capsys, "compress", model, src, box, "--engine", engine)
    assert code == 0
    assert run(capsys, "decompress", model, box, back, "--engine", engine)[0] == 0
    assert back.read_bytes() == src.read_bytes()
    return box.read_bytes(), out


def test_empty_input(capsys, tmp_path):
    data, out = round_trip(capsys, tmp_path, symbols_file(tmp_path / "e.txt", []))
    box = Container.from_bytes(data)
    assert box.count == 0 and box.message == msg_init()
    assert "symbols: 0" in out


def test_one_symbol(capsys, tmp_path):
    data, _ = round_trip(capsys, tmp_path, symbols_file(tmp_path / "one.txt", [6]))
    assert Container.from_bytes(data).count == 1


def test_corpus_and_report(capsys, tmp_path):
    m = load_demo_model()
    xs = random.Random(4).choices(range(8), m.marginal(), k=5000)
    src = symbols_file(tmp_path / "c.txt", xs)
    data, out = round_trip(capsys, tmp_path, src)
    fields = dict(line.split(": ", 1) for line in out.splitlines())
    assert int(fields["symbols"]) == 5000
    assert abs(float(fields["bits/symbol"]) - float(fields["predicted (negative ELBO)"])) <= 0.05
    # host engine and a second run produce the same bytes
    assert round_trip(capsys, tmp_path, src, engine="host")[0] == data
    assert round_trip(capsys, tmp_path, src)[0] == data


def test_byte_model(capsys, tmp_path):
    model = {"precision": 12, "prior": [2048, 2048],
             "likelihood": [[16] * 256, [24] * 128 + [8] * 128],
             "posterior": [[2048, 2048]] * 256}
    mpath = tmp_path / "bytes.json"
    mpath.write_text(json.dumps(model))
    src = tmp_path / "blob.bin"
    src.write_bytes(bytes(random.Random(0).randrange(256) for _ in range(3000)) + b"\x00\xff")
    round_trip(capsys, tmp_path, src, model=mpath)


def test_wrong_model_refused(capsys, tmp_path):
    box = tmp_path / "c.flpc"
    run(capsys, "compress", "demo", symbols_file(tmp_path / "s.txt", [1, 2, 3]), box)
    d = load_demo_model().to_json()
    d["prior"] = [2048, 1024, 512, 512]
    other = tmp_path / "other.json"
    other.write_text(json.dumps(d))
    code, out, _ = run(capsys, "decompress", other, box, tmp_path / "out")
    assert code == 1 and "hash mismatch" in out
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("damage,needle", [
    (lambda b: b"XXXX" + b[4:], "format error"),
    (lambda b: b[:20], "truncated"),
    (lambda b: b[:-4], "format error"),
])
def test_damaged_container(capsys, tmp_path, damage, needle):
    box = tmp_path / "c.flpc"
    run(capsys, "compress", "demo", symbols_file(tmp_path / "s.txt", [1, 2, 3] * 50), box)
    box.write_bytes(damage(box.read_bytes()))
    code, out, _ = run(capsys, "decompress", "demo", box, tmp_path / "out")
    assert code == 1 and needle in out


def test_invalid_symbol(capsys, tmp_path):
    src = symbols_file(tmp_path / "s.txt", [1, 8])
    code, out, _ = run(capsys, "compress", "demo", src, tmp_path / "c")
    assert code == 1 and "invalid symbol 8" in out


def test_missing_input(capsys, tmp_path):
    assert run(capsys, "compress", "demo", tmp_path / "nope", tmp_path / "c")[0] == 2
    assert run(capsys, "compress", tmp_path / "nope.json", tmp_path / "x", tmp_path / "c")[0] == 2


# -- selftest -----------------------------------------------------------------------


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--cases", "100", "--rate-n", "8192")
    assert code == 0 and "all" in out and "FAIL" not in out


def test_selftest_catches_mutation(capsys):
    code, out, _ = run(capsys, "selftest", "--mutant", "--cases", "100", "--rate-n", "8192")
    assert code == 1
    last = out.strip().splitlines()[-1]
    assert last.startswith("FAILED:") and "counterexample: (" in last
