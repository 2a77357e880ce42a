"""The combinators shipped with flipkit, as ``.flp`` sources."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..checker import CheckedProgram, check_program
from ..parser import parse_program
from ..printer import render_type
from ..syntax import FlipDef, Program

SOURCES = ("core.flp", "bbans.flp")


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    source: str
    signature: str


def source_text(filename: str) -> str:
    return resources.files(__name__).joinpath(filename).read_text(encoding="utf-8")


def stdlib_program() -> Program:
    decls = ()
    for fn in SOURCES:
        decls += parse_program(source_text(fn)).decls
    return Program(decls)


@lru_cache(maxsize=None)
def load_stdlib() -> CheckedProgram:
    return check_program(stdlib_program())


def manifest() -> list[ManifestEntry]:
    out = []
    for fn in SOURCES:
        for d in parse_program(source_text(fn)).decls:
            if isinstance(d, FlipDef):
                out.append(ManifestEntry(d.name, fn, f"{render_type(d.domain)} <-> "
                                                     f"{render_type(d.codomain)}"))
    return out
