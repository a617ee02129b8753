from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from gen import ExprGen
from relsem import formula as F
from relsem.exprsem import translate_expr
from relsem.lang import parse_expr
from relsem.oracle import Bounds, Evaluator, state_env, try_eval_expr

B3 = Bounds.symmetric(3)
EV3 = Evaluator(B3)


def _range(t):
    return [F.Cmp("<=", F.MIN_INT, t), F.Cmp("<=", t, F.MAX_INT)]


def test_increment():
    tr = translate_expr(parse_expr("x + 1"))
    t = F.BinOp("+", F.pre("x"), F.IntLit(1))
    assert tr.result == t
    assert tr.defined == F.And(tuple(_range(t)))


def test_division_needs_nonzero_divisor():
    tr = translate_expr(parse_expr("x / y"))
    t = F.BinOp("/", F.pre("x"), F.pre("y"))
    assert tr.result == t
    assert tr.defined == F.And((F.Cmp("/=", F.pre("y"), F.IntLit(0)), F.And(tuple(_range(t)))))


def test_literal_is_always_defined():
    tr = translate_expr(parse_expr("5"))
    assert tr == type(tr)(F.IntLit(5), F.TRUE)


def test_short_circuit_guards_right_operand():
    tr = translate_expr(parse_expr("x != 0 && 10 / x > 1"))
    assert isinstance(tr.defined, F.Implies)
    assert tr.defined.left == F.Cmp("/=", F.pre("x"), F.IntLit(0))


def test_overflow_definedness_matches_traps():
    # s = s+i overflows exactly when the definedness condition fails
    e = parse_expr("s + i")
    tr = translate_expr(e)
    for s in B3.values:
        for i in B3.values:
            env = state_env(pre={"s": s, "i": i})
            assert EV3.holds(tr.defined, env) == (try_eval_expr(e, {"s": s, "i": i}, B3) is not None)


def _agrees(e):
    tr = translate_expr(e)
    for a in B3.values:
        for b in B3.values:
            store = {"a": a, "b": b}
            env = state_env(pre=store)
            got = try_eval_expr(e, store, B3)
            assert EV3.holds(tr.defined, env) == (got is not None), (e, store)
            if got is not None:
                if F.is_formula(tr.result):
                    assert EV3.holds(tr.result, env) == got
                else:
                    assert EV3.value(tr.result, env) == got


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_int_expressions_agree_with_interpreter(rng):
    _agrees(ExprGen(rng).int_expr(4))


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_bool_expressions_agree_with_interpreter(rng):
    _agrees(ExprGen(rng).bool_expr(3))
