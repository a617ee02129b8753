"""MiniWhile program AST.

Spans take no part in equality, so structurally identical programs compare
equal regardless of layout. Use ``id()`` when a node's identity matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from relsem.formula import Formula, Term


@dataclass(frozen=True, order=True)
class Span:
    line: int  # 1-based
    col: int  # 1-based
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"

    def covers_line(self, line: int) -> bool:
        return self.line <= line <= self.end_line


NO_SPAN = Span(0, 0, 0, 0)


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False)


# ----------------------------------------------------------- expressions


@dataclass(frozen=True)
class IntE:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolE:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class VarE:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class LimitE:
    """``MIN_INT`` or ``MAX_INT``."""

    which: str
    span: Span = _span()


@dataclass(frozen=True)
class UnaryE:
    op: str  # "-" | "!"
    arg: Expr
    span: Span = _span()


@dataclass(frozen=True)
class BinaryE:
    op: str  # + - * / % == != < <= > >= && ||
    left: Expr
    right: Expr
    span: Span = _span()


Expr = Union[IntE, BoolE, VarE, LimitE, UnaryE, BinaryE]

ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


# ------------------------------------------------------------- commands


@dataclass(frozen=True)
class Skip:
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class VarBlock:
    name: str
    body: Command
    span: Span = _span()


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command
    span: Span = _span()


@dataclass(frozen=True)
class IfThen:
    cond: Expr
    then: Command
    span: Span = _span()


@dataclass(frozen=True)
class IfThenElse:
    cond: Expr
    then: Command
    else_: Command
    span: Span = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    invariant: Optional[Formula]
    measure: Optional[Term]
    body: Command
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    target: str
    method: str
    args: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    expr: Expr
    span: Span = _span()


Command = Union[Skip, Assign, VarBlock, Seq, IfThen, IfThenElse, While, Call, Return]

RESULT = "result"


# ----------------------------------------------------- declarations


@dataclass(frozen=True)
class FunDecl:
    name: str
    arg_sorts: tuple[str, ...]
    result_sort: str
    span: Span = _span()


@dataclass(frozen=True)
class Axiom:
    name: str
    formula: Formula
    span: Span = _span()


@dataclass(frozen=True)
class TheoryDecl:
    name: str
    functions: tuple[FunDecl, ...]
    axioms: tuple[Axiom, ...]
    span: Span = _span()


@dataclass(frozen=True)
class IOExample:
    """Concrete input/output pair; ``legal`` is False for counterexamples."""

    inputs: tuple[tuple[str, int], ...]
    outputs: tuple[tuple[str, int], ...]
    legal: bool
    span: Span = _span()


@dataclass(frozen=True)
class Contract:
    requires: Formula
    ensures: Formula
    diverges: Formula
    assignable: frozenset[str] = frozenset()
    examples: tuple[IOExample, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[str, ...]
    body: Command
    contract: Contract
    span: Span = _span()


@dataclass(frozen=True)
class Program:
    theories: tuple[TheoryDecl, ...]
    methods: tuple[MethodDecl, ...]

    def method(self, name: str) -> MethodDecl:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def signature(self) -> dict[str, FunDecl]:
        return {f.name: f for t in self.theories for f in t.functions}

    def axioms(self) -> list[Axiom]:
        return [a for t in self.theories for a in t.axioms]


# ------------------------------------------------------------ traversal


def sub_commands(c: Command) -> tuple[Command, ...]:
    if isinstance(c, VarBlock):
        return (c.body,)
    if isinstance(c, Seq):
        return (c.first, c.second)
    if isinstance(c, IfThen):
        return (c.then,)
    if isinstance(c, IfThenElse):
        return (c.then, c.else_)
    if isinstance(c, While):
        return (c.body,)
    return ()


def walk_commands(c: Command) -> Iterator[Command]:
    """Pre-order traversal."""
    yield c
    for s in sub_commands(c):
        yield from walk_commands(s)


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, VarE):
        return {e.name}
    if isinstance(e, UnaryE):
        return expr_vars(e.arg)
    if isinstance(e, BinaryE):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


def assigned_vars(c: Command) -> set[str]:
    """Variables syntactically assigned by ``c`` (locals included)."""
    out: set[str] = set()
    for n in walk_commands(c):
        if isinstance(n, Assign):
            out.add(n.target)
        elif isinstance(n, Call):
            out.add(n.target)
        elif isinstance(n, Return):
            out.add(RESULT)
    return out


def command_vars(c: Command) -> set[str]:
    """Every program variable mentioned by ``c`` or its annotations, minus its own locals."""
    from relsem.formula import free_vars

    out: set[str] = set()
    local: set[str] = set()
    for n in walk_commands(c):
        if isinstance(n, Assign):
            out.add(n.target)
            out |= expr_vars(n.expr)
        elif isinstance(n, VarBlock):
            local.add(n.name)
        elif isinstance(n, (IfThen, IfThenElse)):
            out |= expr_vars(n.cond)
        elif isinstance(n, While):
            out |= expr_vars(n.cond)
            for ann in (n.invariant, n.measure):
                if ann is not None:
                    out |= {v.name for v in free_vars(ann) if v.tag != "log"}
        elif isinstance(n, Call):
            out.add(n.target)
            for a in n.args:
                out |= expr_vars(a)
        elif isinstance(n, Return):
            out.add(RESULT)
            out |= expr_vars(n.expr)
    return out - local


def calls_in(c: Command) -> set[str]:
    return {n.method for n in walk_commands(c) if isinstance(n, Call)}


def has_loop(c: Command) -> bool:
    return any(isinstance(n, While) for n in walk_commands(c))
