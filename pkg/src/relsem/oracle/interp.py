"""Big-step interpreter for MiniWhile with traps and a fuel budget."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

from relsem import formula as F
from relsem.lang import ast as A
from relsem.oracle.evaluate import Evaluator, state_env
from relsem.oracle.semantics import ARITH, Bounds, Theory

Store = dict  # str -> int

OVERFLOW = "overflow"
DIV_BY_ZERO = "div-by-zero"
PRECONDITION = "precondition"


@dataclass(frozen=True)
class Terminated:
    store: Mapping[str, int]


@dataclass(frozen=True)
class Trap:
    reason: str
    span: A.Span


@dataclass(frozen=True)
class FuelExhausted:
    pass


Outcome = Union[Terminated, Trap, FuelExhausted]


class _TrapSignal(Exception):
    def __init__(self, reason: str, span: A.Span):
        self.reason = reason
        self.span = span


class _OutOfFuel(Exception):
    pass


def eval_expr(e: A.Expr, store: Mapping[str, int], bounds: Bounds) -> Union[int, bool]:
    """Value of ``e``; raises ``_TrapSignal`` on overflow or division by zero."""
    if isinstance(e, (A.IntE, A.BoolE)):
        return e.value
    if isinstance(e, A.VarE):
        return store[e.name]
    if isinstance(e, A.LimitE):
        return bounds.min_int if e.which == F.MIN_INT_NAME else bounds.max_int
    if isinstance(e, A.UnaryE):
        v = eval_expr(e.arg, store, bounds)
        if e.op == "!":
            return not v
        return _checked(-v, bounds, e.span)
    if isinstance(e, A.BinaryE):
        if e.op == "&&":
            return bool(eval_expr(e.left, store, bounds)) and bool(eval_expr(e.right, store, bounds))
        if e.op == "||":
            return bool(eval_expr(e.left, store, bounds)) or bool(eval_expr(e.right, store, bounds))
        a, b = eval_expr(e.left, store, bounds), eval_expr(e.right, store, bounds)
        if e.op in A.CMP_OPS:
            return {
                "==": a == b,
                "!=": a != b,
                "<": a < b,
                "<=": a <= b,
                ">": a > b,
                ">=": a >= b,
            }[e.op]
        if e.op in ("/", "%") and b == 0:
            raise _TrapSignal(DIV_BY_ZERO, e.span)
        return _checked(ARITH[e.op](a, b), bounds, e.span)
    raise TypeError(e)


def _checked(v: int, bounds: Bounds, span: A.Span) -> int:
    if not bounds.contains(v):
        raise _TrapSignal(OVERFLOW, span)
    return v


def try_eval_expr(e: A.Expr, store: Mapping[str, int], bounds: Bounds) -> Optional[Union[int, bool]]:
    """Value of ``e``, or None when evaluation traps."""
    try:
        return eval_expr(e, store, bounds)
    except _TrapSignal:
        return None


class Interpreter:
    """Runs commands of one program; calls execute the callee's body."""

    def __init__(
        self,
        program: Optional[A.Program] = None,
        bounds: Bounds = Bounds(),
        evaluator: Optional[Evaluator] = None,
    ):
        self.program = program
        self.bounds = bounds
        theory = Theory.of_program(program) if program is not None else Theory()
        self.evaluator = evaluator or Evaluator(bounds, theory)
        self._fuel = 0

    def execute(self, c: A.Command, store: Mapping[str, int], fuel: int = 10_000) -> Outcome:
        self._fuel = fuel
        s = dict(store)
        try:
            self._run(c, s)
        except _TrapSignal as t:
            return Trap(t.reason, t.span)
        except _OutOfFuel:
            return FuelExhausted()
        return Terminated(s)

    def run_method(self, name: str, args: Mapping[str, int], fuel: int = 10_000) -> Outcome:
        m = self.program.method(name)
        store = {p: args[p] for p in m.params}
        store[A.RESULT] = 0
        return self.execute(m.body, store, fuel)

    def _tick(self) -> None:
        if self._fuel <= 0:
            raise _OutOfFuel()
        self._fuel -= 1

    def _expr(self, e: A.Expr, s: Store):
        return eval_expr(e, s, self.bounds)

    def _run(self, c: A.Command, s: Store) -> None:
        if isinstance(c, A.Skip):
            self._tick()
        elif isinstance(c, A.Assign):
            self._tick()
            s[c.target] = self._expr(c.expr, s)
        elif isinstance(c, A.Return):
            self._tick()
            s[A.RESULT] = self._expr(c.expr, s)
        elif isinstance(c, A.VarBlock):
            # locals start at 0; an outer binding of the same name is restored afterwards
            saved = s.get(c.name)
            had = c.name in s
            s[c.name] = 0
            try:
                self._run(c.body, s)
            finally:
                if had:
                    s[c.name] = saved
                else:
                    s.pop(c.name, None)
        elif isinstance(c, A.Seq):
            self._run(c.first, s)
            self._run(c.second, s)
        elif isinstance(c, A.IfThen):
            self._tick()
            if self._expr(c.cond, s):
                self._run(c.then, s)
        elif isinstance(c, A.IfThenElse):
            self._tick()
            self._run(c.then if self._expr(c.cond, s) else c.else_, s)
        elif isinstance(c, A.While):
            while True:
                self._tick()
                if not self._expr(c.cond, s):
                    break
                self._run(c.body, s)
        elif isinstance(c, A.Call):
            self._tick()
            s[c.target] = self._call(c, s)
        else:
            raise TypeError(c)

    def _call(self, c: A.Call, s: Store) -> int:
        if self.program is None:
            raise ValueError("calls need a program")
        m = self.program.method(c.method)
        args = [self._expr(a, s) for a in c.args]
        inner = dict(zip(m.params, args))
        if not self.evaluator.holds(m.contract.requires, state_env(pre=inner)):
            raise _TrapSignal(PRECONDITION, c.span)
        inner[A.RESULT] = 0
        self._run(m.body, inner)
        return inner[A.RESULT]


def execute(
    c: A.Command,
    store: Mapping[str, int],
    fuel: int = 10_000,
    program: Optional[A.Program] = None,
    bounds: Bounds = Bounds(),
) -> Outcome:
    """Run ``c`` from ``store``; deterministic, one fuel unit per statement and loop test."""
    return Interpreter(program, bounds).execute(c, store, fuel)
