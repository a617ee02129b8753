"""Bundled MiniWhile programs used by the test and acceptance suites."""

from __future__ import annotations

from importlib import resources

from relsem.lang import ast as A
from relsem.lang import parse_program


def names() -> list[str]:
    return sorted(p.name[:-3] for p in resources.files(__name__).iterdir() if p.name.endswith(".mw"))


def path(name: str) -> str:
    return str(resources.files(__name__) / f"{name}.mw")


def source(name: str) -> str:
    return (resources.files(__name__) / f"{name}.mw").read_text()


def load(name: str) -> A.Program:
    return parse_program(source(name))
