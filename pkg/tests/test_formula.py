from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from gen import FormulaGen, stores
from relsem import corpus
from relsem import formula as F
from relsem.lang import ast as A
from relsem.lang import parse_formula
from relsem.oracle import Bounds, Evaluator

EV4 = Evaluator(Bounds.symmetric(4))

formulas = st.builds(lambda r: FormulaGen(r).formula(5), st.randoms(use_true_random=False))


def test_substitute_renames_state_variables():
    f = parse_formula("x$1 = x$0 + 1")
    g = F.substitute(f, {F.pre("x"): F.lvar("x0"), F.post("x"): F.lvar("x1")})
    assert g == F.Cmp("=", F.lvar("x1"), F.BinOp("+", F.lvar("x0"), F.IntLit(1)))


def test_empty_substitution_is_identity():
    f = parse_formula("FORALL(a: int): a < x$0 OR x$1 = 2")
    assert F.substitute(f, {}) == f


def test_substitution_avoids_capture():
    f = parse_formula("EXISTS(y: INT): y = x$0")
    g = F.substitute(f, {F.pre("x"): F.lvar("y")})
    assert isinstance(g, F.Quant) and g.names[0] != "y"
    assert F.free_vars(g) == {F.lvar("y")}
    # same truth table as the intended meaning, y = y with y free: always true
    want = F.exists(["w"], F.Cmp("=", F.lvar("w"), F.lvar("y")), F.INT_SORT)
    for env in stores([F.lvar("y")], EV4.values):
        assert EV4.holds(g, env) == EV4.holds(want, env)


@settings(max_examples=60, deadline=None)
@given(formulas, st.sampled_from([F.pre("x"), F.pre("y"), F.post("x")]), st.integers(-4, 4))
def test_substitution_commutes_with_evaluation(f, x, k):
    # f[x := k + u] evaluated at u equals f evaluated at x = k + u, even when u is a binder name
    t = F.BinOp("+", F.IntLit(k), F.lvar("u"))
    g = F.substitute(f, {x: t})
    others = [v for v in (F.pre("x"), F.pre("y"), F.post("x")) if v != x]
    for env in stores(others + [F.lvar("u")], range(-2, 3)):
        env2 = dict(env)
        env2[x] = k + env[F.lvar("u")]
        if not -4 <= env2[x] <= 4:
            continue
        assert EV4.holds(g, env) == EV4.holds(f, env2)


def test_free_vars():
    assert F.free_vars(parse_formula("x$1 = x$0 + 1")) == {F.pre("x"), F.post("x")}
    assert F.free_vars(parse_formula("EXISTS(y: INT): y = x$0")) == {F.pre("x")}


def test_free_vars_of_loop_invariant():
    (loop,) = [c for c in A.walk_commands(corpus.load("sum").methods[0].body) if isinstance(c, A.While)]
    assert F.free_vars(loop.invariant) == {F.pre("n"), F.pre("i"), F.pre("s")}


def test_render_styles():
    f = parse_formula("x$1 = x$0 + 1")
    assert F.render(f) == "x$1 = x$0 + 1"
    assert F.render(f, "raw") == "(x$1 = (x$0 + 1))"


def test_render_conditional_formula():
    f = parse_formula("IF n$0 < 0 THEN result$1 = -1 ELSE result$1 = sum(1, n$0) ENDIF")
    assert F.render(f) == "IF n$0 < 0 THEN result$1 = -1 ELSE result$1 = sum(1, n$0) ENDIF"


def test_render_parse_render_fixpoint_on_100_formulas():
    g = FormulaGen(random.Random(100))
    for _ in range(100):
        f = g.formula(6)
        for style in ("pretty", "raw"):
            text = F.render(f, style)
            assert parse_formula(text) == f, text
            assert F.render(parse_formula(text), style) == text


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_json_round_trip(f):
    assert F.from_json(F.to_json(f)) == f


def test_fresh_names_are_deterministic_after_reset():
    F.reset_fresh()
    a = [F.fresh_name() for _ in range(3)]
    F.reset_fresh()
    assert [F.fresh_name() for _ in range(3)] == a == ["v#1", "v#2", "v#3"]
