"""``flipkit`` command line: check, reverse, run, compress, decompress, selftest.

Exit codes: 0 success, 1 domain failure, 2 I/O or usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .ans import msg_bits, msg_init
from .bbans import (
    LatentModel,
    ModelError,
    demo_model_path,
    dsl_codec,
    host_codec,
    load_model,
    negative_elbo,
)
from .checker import CheckFailed, check_program
from .container import Container, ContainerError
from .interp import DEFAULT_STEP_BUDGET, Env, RuntimeFault, compile_fexpr
from .parser import ParseError, parse_program
from .printer import render_flipdef
from .reverser import reverse_flippable
from .stdlib import SOURCES, source_text
from .syntax import Program
from .values import Int, Msg, Pair, parse_value, render_value

log = logging.getLogger("flipkit")

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


@dataclass
class CliConfig:
    stdlib: bool = True
    step_budget: int = DEFAULT_STEP_BUDGET
    seed: int = 0
    verbosity: int = 0


class _Failure(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        super().__init__(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise _Failure(EXIT_IO, f"{path}: {e}") from None


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise _Failure(EXIT_IO, f"{path}: {e}") from None


def _write_bytes(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise _Failure(EXIT_IO, f"{path}: {e}") from None


def _load_program(path: str, text: str, cfg: CliConfig) -> Program:
    """Parse ``text``, prefixed by the stdlib unless disabled.

    A file whose text is one of the stdlib sources is not loaded twice.
    """
    try:
        user = parse_program(text)
    except ParseError as e:
        raise _Failure(EXIT_FAIL, f"{path}:{e.span.line}:{e.span.col}: SyntaxError: {e.detail}")
    if not cfg.stdlib:
        return user
    decls = ()
    for fn in SOURCES:
        if source_text(fn) != text:
            decls += parse_program(source_text(fn)).decls
    ours = {d.name: d for d in decls}
    kept = []
    for d in user.decls:
        if d.name not in ours:
            kept.append(d)
        elif ours[d.name] != d:
            # an identical re-declaration is harmless; a different one is a clash
            raise _Failure(EXIT_FAIL, f"{path}:{d.span.line}:{d.span.col}: SyntaxError: "
                                      f"{d.name} clashes with a stdlib name (use --no-stdlib)")
    return Program(decls + tuple(kept))


def _checked(path: str, cfg: CliConfig):
    program = _load_program(path, _read_text(path), cfg)
    try:
        return check_program(program)
    except CheckFailed as e:
        raise _Failure(EXIT_FAIL, "\n".join(err.format(path) for err in e.errors)) from None


def cmd_check(files: list[str], cfg: CliConfig) -> int:
    code = EXIT_OK
    for path in files:
        try:
            _checked(path, cfg)
            log.info("%s: ok", path)
        except _Failure as f:
            print(f, file=sys.stdout if f.code == EXIT_FAIL else sys.stderr)
            code = max(code, f.code)
    return code


def cmd_reverse(path: str, defname: str, cfg: CliConfig) -> int:
    checked = _checked(path, cfg)
    d = checked.program.flips.get(defname)
    if d is None:
        raise _Failure(EXIT_FAIL, f"unknown definition {defname}")
    print(render_flipdef(reverse_flippable(d)))
    return EXIT_OK


def cmd_run(path: str, expr: str, direction: str, literal: str, cfg: CliConfig) -> int:
    checked = _checked(path, cfg)
    env = Env(checked, step_budget=cfg.step_budget)
    try:
        value = parse_value(literal)
    except ParseError as e:
        raise _Failure(EXIT_FAIL, f"--input: {e}") from None
    try:
        bij = compile_fexpr(checked, expr, env)
    except (ParseError, CheckFailed, RuntimeFault) as e:
        raise _Failure(EXIT_FAIL, f"{expr}: {e}") from None
    try:
        out = bij.forward(value) if direction == "fwd" else bij.backward(value)
    except RuntimeFault as e:
        raise _Failure(EXIT_FAIL, f"runtime fault: {e}") from None
    print(render_value(out))
    return EXIT_OK


# -- compression ----------------------------------------------------------------------


def _model(spec: str) -> LatentModel:
    path = demo_model_path() if spec == "demo" else Path(spec)
    try:
        return load_model(path)
    except OSError as e:
        raise _Failure(EXIT_IO, f"{spec}: {e}") from None
    except ModelError as e:
        raise _Failure(EXIT_FAIL, f"{spec}: invalid model: {e}") from None


def decode_symbols(data: bytes, model: LatentModel) -> list[int]:
    """Input bytes map 1:1 to symbols when V = 256; otherwise a whitespace-separated list."""
    if model.V == 256:
        return list(data)
    try:
        xs = [int(tok) for tok in data.decode("ascii").split()]
    except (UnicodeDecodeError, ValueError):
        raise _Failure(EXIT_FAIL, "symbols file must hold whitespace-separated integers") from None
    bad = [x for x in xs if not 0 <= x < model.V]
    if bad:
        raise _Failure(EXIT_FAIL, f"invalid symbol {bad[0]} for a model with V = {model.V}")
    return xs


def encode_symbols(xs: list[int], model: LatentModel) -> bytes:
    if model.V == 256:
        return bytes(xs)
    return "".join(f"{x}\n" for x in xs).encode("ascii")


def _codec(model: LatentModel, engine: str, cfg: CliConfig):
    if engine == "host":
        return host_codec(model)
    from .stdlib import load_stdlib

    return dsl_codec(model, Env(load_stdlib(), step_budget=cfg.step_budget, debug=False))


def compress_symbols(model: LatentModel, xs: list[int], engine: str = "dsl",
                     cfg: Optional[CliConfig] = None) -> Container:
    codec = _codec(model, engine, cfg or CliConfig())
    c = Msg(msg_init())
    for x in reversed(xs):
        c = codec.forward(Pair(c, Int(x)))
    return Container(model.hash(), len(xs), c.payload)


def decompress_container(model: LatentModel, box: Container, engine: str = "dsl",
                         cfg: Optional[CliConfig] = None) -> list[int]:
    if box.model_hash != model.hash():
        raise _Failure(EXIT_FAIL, "model hash mismatch: container was written with another model")
    codec = _codec(model, engine, cfg or CliConfig())
    c = Msg(box.message)
    xs = []
    for _ in range(box.count):
        p = codec.backward(c)
        c = p.left
        x = p.right.payload
        if not 0 <= x < model.V:
            raise _Failure(EXIT_FAIL, "corrupt payload: decoded an invalid symbol")
        xs.append(x)
    if c.payload != msg_init():
        raise _Failure(EXIT_FAIL, "corrupt payload: residual message is not the initial message")
    return xs


def cmd_compress(model_spec: str, src: str, dst: str, engine: str, cfg: CliConfig) -> int:
    model = _model(model_spec)
    data = _read_bytes(src)
    xs = decode_symbols(data, model)
    t0 = time.perf_counter()
    box = compress_symbols(model, xs, engine, cfg)
    _write_bytes(dst, box.to_bytes())
    bits = msg_bits(box.message) - msg_bits(msg_init())
    n = len(xs)
    print(f"symbols: {n}")
    print(f"payload bits: {bits}")
    if n:
        print(f"bits/symbol: {bits / n:.4f}")
        print(f"predicted (negative ELBO): {negative_elbo(model, xs):.4f}")
    log.info("compressed in %.2fs", time.perf_counter() - t0)
    return EXIT_OK


def cmd_decompress(model_spec: str, src: str, dst: str, engine: str, cfg: CliConfig) -> int:
    model = _model(model_spec)
    try:
        box = Container.from_bytes(_read_bytes(src))
    except ContainerError as e:
        raise _Failure(EXIT_FAIL, f"{src}: format error: {e}") from None
    xs = decompress_container(model, box, engine, cfg)
    _write_bytes(dst, encode_symbols(xs, model))
    return EXIT_OK


def cmd_selftest(cfg: CliConfig, cases: int, rate_n: int, mutant: bool) -> int:
    from .selftest import format_table, run_selftest

    results = run_selftest(cfg.seed, cases=cases, rate_n=rate_n, mutant=mutant)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    if failed:
        first = failed[0]
        print(f"FAILED: {first.name}; first counterexample: {first.counterexample or first.detail}")
        return EXIT_FAIL
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand.

    The copy attached to subcommands has suppressed defaults so it does not
    overwrite a value given before the subcommand.
    """
    def d(value):
        return argparse.SUPPRESS if suppress else value

    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--no-stdlib", action="store_true", default=d(False),
                   help="do not auto-load stdlib/*.flp")
    g.add_argument("--step-budget", type=int, default=d(DEFAULT_STEP_BUDGET),
                   help=f"interpreter step limit per call (default {DEFAULT_STEP_BUDGET})")
    g.add_argument("--seed", type=int, default=d(0), help="seed for randomized tests")
    g.add_argument("-v", "--verbose", action="count", default=d(0))
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    p = argparse.ArgumentParser(prog="flipkit", parents=[_global_flags(suppress=False)],
                                description="Reversible Flipper programs and bits-back ANS.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="statically check .flp files")
    s.add_argument("files", nargs="+")

    s = sub.add_parser("reverse", parents=[common], help="print the reversed definition")
    s.add_argument("file")
    s.add_argument("defname")

    s = sub.add_parser("run", parents=[common], help="evaluate a flippable on a value")
    s.add_argument("file")
    s.add_argument("defname", help="definition name or closed expression, e.g. 'compose f g'")
    s.add_argument("--dir", choices=("fwd", "bwd"), default="fwd")
    s.add_argument("--input", required=True, help="value literal, e.g. '(1 , (Left 2))'")

    for name, what in (("compress", "input symbols"), ("decompress", "container")):
        s = sub.add_parser(name, parents=[common], help=f"{name} with bits-back ANS")
        s.add_argument("model", help="model JSON file, or 'demo' for the bundled model")
        s.add_argument("input", help=what)
        s.add_argument("output")
        s.add_argument("--engine", choices=("dsl", "host"), default="dsl",
                       help="interpreted bbAns program (default) or host composition")

    s = sub.add_parser("selftest", parents=[common], help="run the randomized conformance suite")
    s.add_argument("--cases", type=int, default=1000)
    s.add_argument("--rate-n", type=int, default=100_000)
    s.add_argument("--mutant", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_IO if e.code else EXIT_OK
    cfg = CliConfig(stdlib=not args.no_stdlib, step_budget=args.step_budget, seed=args.seed,
                    verbosity=args.verbose)
    logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbosity, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "check":
            return cmd_check(args.files, cfg)
        if args.command == "reverse":
            return cmd_reverse(args.file, args.defname, cfg)
        if args.command == "run":
            return cmd_run(args.file, args.defname, args.dir, args.input, cfg)
        if args.command == "compress":
            return cmd_compress(args.model, args.input, args.output, args.engine, cfg)
        if args.command == "decompress":
            return cmd_decompress(args.model, args.input, args.output, args.engine, cfg)
        return cmd_selftest(cfg, args.cases, args.rate_n, args.mutant)
    except _Failure as f:
        if str(f):
            print(f, file=sys.stderr if f.code == EXIT_IO else sys.stdout)
        return f.code


if __name__ == "__main__":
    sys.exit(main())
