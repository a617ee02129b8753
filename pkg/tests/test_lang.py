from __future__ import annotations

import pytest

from relsem import corpus
from relsem import formula as F
from relsem.lang import ParseError, parse_command, parse_formula, parse_program, render_program, typecheck
from relsem.lang import ast as A


def _loops(c):
    return [n for n in A.walk_commands(c) if isinstance(n, A.While)]


def test_sum_listing_parses():
    p = corpus.load("sum")
    assert len(p.methods) == 1 and len(p.theories) == 1
    (loop,) = _loops(p.methods[0].body)
    assert loop.invariant is not None and loop.measure is not None
    # "invariant VAR n < Base.MAX_INT ..." becomes a pre-state comparison with MAX_INT
    first = loop.invariant.args[0]
    assert first == F.Cmp("<", F.pre("n"), F.MAX_INT)


def test_sum_theory_declares_binary_function():
    (th,) = corpus.load("sum").theories
    assert [(f.name, f.arg_sorts, f.result_sort) for f in th.functions] == [("sum", ("INT", "INT"), "INT")]


def test_identity_method_has_trivial_body():
    for text in ("method id(n){ return n; }", "static int id(int n) { return n; }"):
        (m,) = parse_program(text).methods
        assert m.params == ("n",)
        assert m.body == A.Return(A.VarE("n"))


def test_missing_expression_is_a_syntax_error_at_next_token():
    with pytest.raises(ParseError, match=r"^1:5: .*';'"):
        parse_command("x = ;")


@pytest.mark.parametrize("name", corpus.names())
def test_corpus_typechecks(name):
    assert typecheck(corpus.load(name)) == []


def test_wrong_arity_is_reported():
    src = corpus.source("sum").replace("sum(1, VAR i-1)", "sum(1)")
    (d,) = typecheck(parse_program(src))
    assert "arity" in d.message and "'sum'" in d.message


def test_undeclared_variable_in_invariant():
    src = corpus.source("sum").replace("VAR s = sum", "VAR z = sum")
    (d,) = typecheck(parse_program(src))
    assert "undeclared variable 'z'" in d.message
    assert d.span.line == 28


@pytest.mark.parametrize(
    "text, needle",
    [
        ("static int f(int x) { x = 1; return x; }", "not assignable"),
        ("static int f(int x) { int y; y = x; return y; int z; }", "last statement"),
        ("static int f(int result) { return result; }", "reserved"),
        ("static int f(int x) { return q; }", "undeclared variable 'q'"),
    ],
)
def test_structural_errors(text, needle):
    msgs = [d.message for d in typecheck(parse_program(text))]
    assert any(needle in m for m in msgs), msgs


@pytest.mark.parametrize("name", corpus.names())
def test_render_parse_fixpoint(name):
    text = render_program(corpus.load(name))
    again = parse_program(text)
    assert render_program(again) == text
    assert typecheck(again) == []


def test_contract_conventions():
    # a bare variable in ensures is its pre-state value; result is the return value
    f = parse_formula("result = VAR x + 1", mode="pre", result=True)
    assert F.free_vars(f) == {F.post("result"), F.pre("x")}
