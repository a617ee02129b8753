"""Seeded random formulas and expressions for property tests and the acceptance run."""

from __future__ import annotations

import itertools
import random

from relsem import formula as F
from relsem.lang import ast as A

STATE_VARS = (F.pre("x"), F.pre("y"), F.post("x"))
BINDERS = ("u", "v")

CMP_OPS = ("=", "/=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/", "%")


class FormulaGen:
    """Formulas over at most three state variables.

    Quantifiers bind ``int`` variables, at most ``max_quants`` deep so that
    exhaustive evaluation stays cheap. Binder names are reused, which makes
    shadowing common.
    """

    def __init__(self, rng: random.Random, variables=STATE_VARS, max_quants: int = 2):
        self.rng = rng
        self.variables = tuple(variables)
        self.max_quants = max_quants

    def formula(self, depth: int = 6, bound: tuple = ()) -> F.Formula:
        r = self.rng
        if depth <= 1:
            return self._atom(1, bound)
        k = r.randrange(10)
        d = depth - 1
        if k < 2:
            return self._atom(d, bound)
        if k == 2:
            return F.Not(self.formula(d, bound))
        if k == 3:
            return F.And(tuple(self.formula(d, bound) for _ in range(r.randint(2, 3))))
        if k == 4:
            return F.Or(tuple(self.formula(d, bound) for _ in range(r.randint(2, 3))))
        if k == 5:
            return F.Implies(self.formula(d, bound), self.formula(d, bound))
        if k == 6:
            return F.Iff(self.formula(d, bound), self.formula(d, bound))
        if k == 7:
            return F.IfF(self.formula(d, bound), self.formula(d, bound), self.formula(d, bound))
        if len(bound) < self.max_quants:
            name = r.choice(BINDERS)
            kind = r.choice(("forall", "exists"))
            return F.Quant(kind, ((name, F.MACHINE_SORT),), self.formula(d, bound + (name,)))
        return self._atom(d, bound)

    def _atom(self, depth: int, bound: tuple) -> F.Formula:
        r = self.rng
        k = r.randrange(8)
        if k == 0:
            return F.BoolLit(r.random() < 0.5)
        d = min(depth, 3)
        return F.Cmp(r.choice(CMP_OPS), self.term(d, bound), self.term(d, bound))

    def term(self, depth: int = 3, bound: tuple = ()) -> F.Term:
        r = self.rng
        if depth <= 1 or r.random() < 0.35:
            k = r.randrange(6)
            if k < 2:
                return F.IntLit(r.randint(-3, 3))
            if k == 2 and bound:
                return F.lvar(r.choice(bound))
            if k == 3:
                return r.choice((F.MIN_INT, F.MAX_INT))
            return r.choice(self.variables)
        d = depth - 1
        k = r.randrange(6)
        if k == 0:
            return F.Neg(self.term(d, bound))
        if k == 1:
            return F.Ite(self._atom(d, bound), self.term(d, bound), self.term(d, bound))
        return F.BinOp(r.choice(ARITH_OPS), self.term(d, bound), self.term(d, bound))


def random_formulas(seed: int, count: int, depth: int = 6) -> list[F.Formula]:
    g = FormulaGen(random.Random(seed))
    return [g.formula(depth) for _ in range(count)]


def depth(n: F.Node) -> int:
    kids = F.children(n)
    return 1 + max((depth(k) for k in kids if F.is_formula(k)), default=0) if F.is_formula(n) else 0


def stores(variables, values):
    """Every assignment of ``values`` to ``variables``, as evaluator environments."""
    variables = list(variables)
    for vals in itertools.product(values, repeat=len(variables)):
        yield dict(zip(variables, vals))


def truth_table(ev, f: F.Formula, variables=STATE_VARS) -> tuple:
    return tuple(ev.holds(f, env) for env in stores(variables, ev.values))


class ExprGen:
    """Well-typed MiniWhile expressions over the variables ``a`` and ``b``."""

    def __init__(self, rng: random.Random, names=("a", "b")):
        self.rng = rng
        self.names = names

    def int_expr(self, depth: int = 3):
        r = self.rng
        if depth <= 1 or r.random() < 0.3:
            k = r.randrange(5)
            if k == 0:
                return A.IntE(r.randint(0, 3))
            if k == 1:
                return A.LimitE(r.choice((F.MIN_INT_NAME, F.MAX_INT_NAME)))
            return A.VarE(r.choice(self.names))
        if r.random() < 0.15:
            return A.UnaryE("-", self.int_expr(depth - 1))
        return A.BinaryE(r.choice(A.ARITH_OPS), self.int_expr(depth - 1), self.int_expr(depth - 1))

    def bool_expr(self, depth: int = 3):
        r = self.rng
        k = r.randrange(6)
        if depth <= 1 or k < 2:
            return A.BinaryE(r.choice(A.CMP_OPS), self.int_expr(depth), self.int_expr(depth))
        if k == 2:
            return A.UnaryE("!", self.bool_expr(depth - 1))
        if k == 3:
            return A.BoolE(r.random() < 0.5)
        return A.BinaryE(r.choice(A.BOOL_OPS), self.bool_expr(depth - 1), self.bool_expr(depth - 1))
