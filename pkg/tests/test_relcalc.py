from __future__ import annotations

import pytest

from gen import stores
from relsem import corpus
from relsem import formula as F
from relsem.lang import ast as A
from relsem.lang import parse_command, parse_formula, parse_program
from relsem.oracle import Bounds, Evaluator, Interpreter, Terminated, Theory
from relsem.relcalc import (
    Calculus,
    build_semantic_model,
    derive_call_relation,
    derive_relation,
    derive_termination,
    post_of,
    pre_of,
)
from relsem.simplify import simplify
from relsem.vcgen import check_with_oracle, gen_tasks

EV7 = Evaluator(Bounds.symmetric(7))


def _equiv(ev, f, g):
    return ev.valid(F.Iff(f, g))


def _sum():
    p = corpus.load("sum")
    m = p.methods[0]
    (loop,) = [c for c in A.walk_commands(m.body) if isinstance(c, A.While)]
    return p, m, loop, Evaluator(Bounds.symmetric(7), Theory.of_program(p))


def test_assignment():
    j = derive_relation(parse_command("x = x+1;"))
    assert j.relation == parse_formula("x$1 = x$0 + 1")
    assert j.frame == {"x"}
    assert j.global_condition == F.TRUE
    assert j.precondition == parse_formula("MIN_INT <= x$0 + 1 AND x$0 + 1 <= MAX_INT")


def test_sequence():
    F.reset_fresh()
    j = derive_relation(parse_command("{ x = x+1; x = x*2; }"))
    assert F.render(j.relation) == "EXISTS(v#1): v#1 = x$0 + 1 AND x$1 = v#1 * 2"
    assert j.frame == {"x"}
    # truth-table equality with x$1 = (x$0+1)*2 over [-8, 7]
    ev = Evaluator(Bounds(-8, 7))
    assert _equiv(ev, j.relation, parse_formula("x$1 = (x$0 + 1) * 2"))


def test_sum_loop_relation_core():
    p, m, loop, ev = _sum()
    rel = simplify(Calculus(p).relation(loop).relation)
    assert ev.valid(F.Implies(rel, parse_formula("i$1 = n$0 + 1 AND s$1 = sum(1, i$1 - 1)")))


def test_assignment_termination():
    t = derive_termination(parse_command("x = 7;"))
    assert (t.condition, t.global_condition) == (F.TRUE, F.TRUE)


def test_sum_loop_termination():
    p, m, loop, ev = _sum()
    t = Calculus(p).termination(loop)
    assert _equiv(ev, t.condition, parse_formula("n$0 - i$0 >= -1"))
    assert ev.valid(t.global_condition)


def test_loop_free_conditional_terminates():
    assert derive_termination(parse_command("if (x < 0) x = 0-x;")).condition == F.TRUE


def test_pre_of_assignment():
    j = derive_relation(parse_command("x = x+1;"))
    f = pre_of(j, parse_formula("x$0 > 0"))
    assert isinstance(f, F.Quant) and f.kind == "forall"
    assert _equiv(EV7, f, parse_formula("x$0 + 1 > 0"))


@pytest.mark.parametrize("name", ["abs", "swap", "divmod", "nested"])
def test_pre_of_true_is_true(name):
    p = corpus.load(name)
    calc = Calculus(p)
    ev = Evaluator(Bounds.symmetric(3), Theory.of_program(p))
    for m in p.methods:
        for c in A.walk_commands(m.body):
            assert ev.valid(calc.pre(calc.relation(c), F.TRUE))


def test_pre_of_sum_loop_holds_under_loop_precondition():
    p, m, loop, ev = _sum()
    calc = Calculus(p)
    j = calc.relation(loop)
    f = calc.pre(j, parse_formula("s$0 = sum(1, n$0)"))
    assert ev.valid(F.Implies(j.precondition, f))


def test_post_of_assignment():
    j = derive_relation(parse_command("x = x+1;"))
    f = post_of(j, parse_formula("x$0 = 5"))
    assert isinstance(f, F.Quant) and f.kind == "exists"
    assert _equiv(EV7, f, parse_formula("x$0 = 6"))


def test_post_of_false_is_false():
    for text in ("x = x+1;", "{ x = x*2; y = x; }", "if (x < y) x = y; else y = x;"):
        j = derive_relation(parse_command(text))
        assert EV7.valid(F.Not(post_of(j, F.FALSE)))


def test_post_of_abs_step():
    j = derive_relation(parse_command("if (x < 0) x = 0-x;"))
    assert _equiv(EV7, post_of(j, F.TRUE), parse_formula("x$0 >= 0"))


SUM_CALLEE = """
theory Sum {
  sum: (INT, INT) -> INT;
  sumaxiom: AXIOM FORALL(m: INT, n: INT):
    IF n < m THEN sum(m, n) = 0 ELSE sum(m, n) = n + sum(m, n-1) ENDIF;
}
static int sum_m(int n) /*@
  requires 0 <= VAR n AND VAR n < Base.MAX_INT AND sum(1, VAR n) <= Base.MAX_INT;
  ensures result = sum(1, VAR n);
@*/
{
  int s = 0;
  int i = 1;
  while (i <= n) /*@
    invariant VAR n < Base.MAX_INT AND sum(1, VAR n) <= Base.MAX_INT
          AND 1 <= VAR i AND VAR i <= VAR n+1 AND VAR s = sum(1, VAR i-1);
    decreases VAR n - VAR i + 1;
  @*/
  {
    s = s+i;
    i = i+1;
  }
  return s;
}
"""


def test_call_relation_from_contract():
    p = parse_program(SUM_CALLEE)
    m = p.method("sum_m")
    ev = Evaluator(Bounds.symmetric(7), Theory.of_program(p))
    assert all(check_with_oracle(t, 7, ev.theory) == "valid" for t in gen_tasks(m, program=p))
    j = derive_call_relation(m, "y", (A.VarE("n"),))
    assert j.relation == parse_formula("y$1 = sum(1, n$0)")
    assert j.frame == {"y"}
    run = Interpreter(p, ev.bounds, ev)
    checked = 0
    for n in ev.bounds.values:
        if not ev.holds(j.precondition, {F.pre("n"): n}):
            continue
        out = run.run_method("sum_m", {"n": n})
        assert isinstance(out, Terminated)
        assert ev.holds(j.relation, {F.pre("n"): n, F.post("y"): out.store["result"]})
        checked += 1
    assert checked == 4  # n = 0..3; sum(1, 4) = 10 exceeds MAX_INT = 7


def _callee(requires: str, ensures: str) -> A.MethodDecl:
    src = f"static int f(int a) /*@ requires {requires}; ensures {ensures}; @*/ {{ return a; }}"
    return parse_program(src).methods[0]


def test_call_with_false_requires_is_never_permitted():
    j = derive_call_relation(_callee("FALSE", "TRUE"), "y", (A.VarE("x"),))
    assert EV7.valid(F.Not(j.precondition))


def test_call_with_true_ensures_leaves_target_free():
    j = derive_call_relation(_callee("TRUE", "TRUE"), "y", (A.VarE("x"),))
    assert j.relation == F.TRUE and j.frame == {"y"}


def test_sum_model_else_branch():
    p, m, loop, ev = _sum()
    model = build_semantic_model(m, p)
    ite = next(n for n in model.nodes if n.kind == "IfThenElse")
    # the whole body, restricted to the else branch, returns sum(1, n)
    body = model.body.rel.relation
    assert ev.valid(F.Implies(F.And((m.contract.requires, parse_formula("n$0 >= 0"), body)),
                              parse_formula("result$1 = sum(1, n$0)")))
    els = model.node(ite.path + (1,))
    assert ev.valid(F.Implies(F.And((parse_formula("n$0 >= 0"), els.knowledge, els.rel.relation)),
                              parse_formula("s$1 = sum(1, n$0)")))


def test_knowledge_in_then_branch():
    p, m, loop, ev = _sum()
    model = build_semantic_model(m, p)
    ite = next(n for n in model.nodes if n.kind == "IfThenElse")
    then = model.node(ite.path + (0,))
    assert isinstance(then.command, A.Assign) and then.command.target == "s"
    assert ev.valid(F.Implies(then.knowledge, parse_formula("n$0 < 0")))


def test_single_statement_knowledge_is_requires():
    src = "static int g(int x) /*@ requires VAR x > 2; @*/ { return x; }"
    (m,) = parse_program(src).methods
    model = build_semantic_model(m)
    assert model.body.knowledge_raw == m.contract.requires


def test_frame_monotonicity():
    c = parse_command("{ x = 1; { int t; t = x; y = t; } }")
    seq = derive_relation(c)
    assert seq.frame == {"x", "y"}
    block = c.second
    assert derive_relation(block).frame == derive_relation(block.body).frame - {"t"}


@pytest.mark.parametrize("name", ["sum", "maxcall", "nested"])
def test_derivation_is_deterministic(name):
    p = corpus.load(name)

    def run():
        F.reset_fresh()
        return [build_semantic_model(m, p).to_json() for m in p.methods]

    assert run() == run()


def test_relation_holds_on_execution_of_small_commands():
    # statement 1 on a few loop-free commands, checked directly
    ev = Evaluator(Bounds.symmetric(4))
    run = Interpreter(A.Program((), ()), ev.bounds, ev)
    for text in ("{ x = x+y; y = x-y; x = x-y; }", "if (x < y) x = y; else y = x;", "x = x / (y*y+1);"):
        c = parse_command(text)
        j = derive_relation(c)
        for env in stores([F.pre("x"), F.pre("y")], ev.values):
            s = {v.name: k for v, k in env.items()}
            if not ev.holds(j.precondition, env):
                continue
            out = run.execute(c, s)
            assert isinstance(out, Terminated)
            post = {F.post(x): out.store[x] for x in ("x", "y")}
            assert ev.holds(j.relation, {**env, **post})
