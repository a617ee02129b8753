"""Translation of program expressions into terms/formulas with definedness.

``translate_expr(e)`` returns the logical meaning of ``e`` over pre-state
variables together with the condition under which evaluating ``e`` does
not trap: arithmetic results must lie in ``[MIN_INT, MAX_INT]``, divisors
must be nonzero, and ``&&``/``||`` only require their right operand to be
defined when it is actually evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from relsem import formula as F
from relsem.lang import ast as A

_CMP = {"==": "=", "!=": "/=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


@dataclass(frozen=True)
class ExprTranslation:
    result: Union[F.Term, F.Formula]
    defined: F.Formula


def _and(a: F.Formula, b: F.Formula) -> F.Formula:
    # keep `defined` readable: literal true never needs to be conjoined
    if a == F.TRUE:
        return b
    if b == F.TRUE:
        return a
    return F.And((a, b))


def translate_expr(e: A.Expr) -> ExprTranslation:
    if isinstance(e, A.IntE):
        return ExprTranslation(F.IntLit(e.value), F.TRUE)
    if isinstance(e, A.BoolE):
        return ExprTranslation(F.BoolLit(e.value), F.TRUE)
    if isinstance(e, A.VarE):
        return ExprTranslation(F.pre(e.name), F.TRUE)
    if isinstance(e, A.LimitE):
        return ExprTranslation(F.App(e.which), F.TRUE)
    if isinstance(e, A.UnaryE):
        sub = translate_expr(e.arg)
        if e.op == "!":
            return ExprTranslation(F.Not(sub.result), sub.defined)
        t = F.Neg(sub.result)
        return ExprTranslation(t, _and(sub.defined, F.in_range(t)))
    if isinstance(e, A.BinaryE):
        lt, rt = translate_expr(e.left), translate_expr(e.right)
        if e.op in _CMP:
            return ExprTranslation(F.Cmp(_CMP[e.op], lt.result, rt.result), _and(lt.defined, rt.defined))
        if e.op == "&&":
            right_ok = rt.defined if rt.defined == F.TRUE else F.Implies(lt.result, rt.defined)
            return ExprTranslation(F.And((lt.result, rt.result)), _and(lt.defined, right_ok))
        if e.op == "||":
            right_ok = rt.defined if rt.defined == F.TRUE else F.Implies(F.Not(lt.result), rt.defined)
            return ExprTranslation(F.Or((lt.result, rt.result)), _and(lt.defined, right_ok))
        t = F.BinOp(e.op, lt.result, rt.result)
        d = _and(lt.defined, rt.defined)
        if e.op in ("/", "%"):
            d = _and(d, F.Cmp("/=", rt.result, F.IntLit(0)))
        return ExprTranslation(t, _and(d, F.in_range(t)))
    raise TypeError(e)
