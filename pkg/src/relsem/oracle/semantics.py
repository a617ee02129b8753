"""Integer bounds, truncated arithmetic and computable theory functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from relsem import formula as F


class EvaluationError(Exception):
    """A formula cannot be evaluated (unbound symbol, runaway recursion)."""


class UnsupportedTheory(EvaluationError):
    """A theory function has no axiom usable as a computation rule."""


@dataclass(frozen=True)
class Bounds:
    """The machine integers ``[min_int, max_int]``; quantifiers range over them too."""

    min_int: int = -(2**31)
    max_int: int = 2**31 - 1

    def __post_init__(self):
        if not self.min_int <= -1 < 1 <= self.max_int:
            raise ValueError("bounds must contain -1, 0 and 1")

    @classmethod
    def symmetric(cls, dom: int) -> "Bounds":
        return cls(-dom, dom)

    @property
    def values(self) -> range:
        return range(self.min_int, self.max_int + 1)

    def contains(self, v: int) -> bool:
        return self.min_int <= v <= self.max_int


def tdiv(a: int, b: int) -> int:
    """Division rounding toward zero; ``a / 0`` is 0 (it is never defined anyway)."""
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def tmod(a: int, b: int) -> int:
    return a - b * tdiv(a, b)


ARITH: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": tdiv,
    "%": tmod,
}

COMPARE: dict[str, Callable[[int, int], bool]] = {
    "=": lambda a, b: a == b,
    "/=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


# ------------------------------------------------------------ theories

MAX_DEPTH = 20000


@dataclass(frozen=True)
class Rule:
    """``fn(params) := body`` where body is a nest of IFs ending in defining equations."""

    fn: str
    params: tuple[str, ...]
    body: F.Formula
    predicate: bool


def _defines(f: F.Formula, fn: str, params: tuple[str, ...]) -> bool:
    target = tuple(F.lvar(p) for p in params)
    if isinstance(f, F.IfF):
        return _defines(f.then, fn, params) and _defines(f.else_, fn, params)
    if isinstance(f, F.Cmp) and f.op == "=":
        return any(isinstance(s, F.App) and s.fn == fn and s.args == target for s in (f.left, f.right))
    if isinstance(f, F.Iff):
        return any(isinstance(s, F.Pred) and s.fn == fn and s.args == target for s in (f.left, f.right))
    return False


def _head(f: F.Formula) -> Optional[str]:
    while isinstance(f, F.IfF):
        f = f.then
    if isinstance(f, F.Cmp):
        for s in (f.left, f.right):
            if isinstance(s, F.App):
                return s.fn
    if isinstance(f, F.Iff):
        for s in (f.left, f.right):
            if isinstance(s, F.Pred):
                return s.fn
    return None


def orient(axiom: F.Formula) -> Optional[Rule]:
    """Read ``FORALL(xs): IF g THEN f(xs) = a ELSE f(xs) = b ENDIF`` as a rule.

    Returns None when the axiom does not have that shape.
    """
    params: tuple[str, ...] = ()
    body = axiom
    while isinstance(body, F.Quant) and body.kind == "forall":
        params += body.names
        body = body.body
    fn = _head(body)
    if fn is None or len(set(params)) != len(params):
        return None
    if not _defines(body, fn, params):
        return None
    return Rule(fn, params, body, isinstance(_leaf(body), F.Iff))


def _leaf(f: F.Formula) -> F.Formula:
    while isinstance(f, F.IfF):
        f = f.then
    return f


class Theory:
    """Computation rules read off a program's axioms."""

    def __init__(self, axioms: Iterable[F.Formula] = ()):
        self.rules: dict[str, Rule] = {}
        for ax in axioms:
            r = orient(ax)
            if r is not None and r.fn not in self.rules:
                self.rules[r.fn] = r

    @classmethod
    def of_program(cls, program) -> "Theory":
        return cls(a.formula for a in program.axioms())

    def has_rule(self, fn: str) -> bool:
        return fn in self.rules
