from __future__ import annotations

import pytest

from relsem import corpus
from relsem import formula as F
from relsem.lang import ast as A
from relsem.lang import parse_formula
from relsem.oracle import Bounds, Evaluator, Theory
from relsem.relcalc import build_semantic_model
from relsem.simplify import SimplifyConfig
from relsem.vcgen import (
    FALSIFIED,
    LOOP_CATEGORIES,
    VALID,
    VerificationTask,
    check_with_oracle,
    count_by_category,
    gen_tasks,
    program_tasks,
)


def _tasks(name):
    p = corpus.load(name)
    return p, {t.id: t for t in program_tasks(p)}


def test_sum_postcondition_task():
    p, ts = _tasks("sum")
    t = ts["sum:13:1:Postcondition"]
    hyps = dict(t.hypotheses)
    assert hyps["requires"] == parse_formula("n$0 < MAX_INT")
    ev = Evaluator(Bounds.symmetric(7), Theory.of_program(p))
    # the hypothesis is the body relation: it pins result to sum(1, n) for n >= 0
    assert ev.valid(F.Implies(F.And((hyps["relation"], parse_formula("n$0 >= 0"))),
                              parse_formula("result$1 = sum(1, n$0)")))
    assert t.goal == p.methods[0].contract.ensures
    assert check_with_oracle(t, 7, ev.theory) == VALID


def test_sum_spec_nontrivial_holds_in_each_case():
    p, ts = _tasks("sum")
    t = ts["sum:13:1:SpecNontrivial"]
    ev = Evaluator(Bounds.symmetric(7), Theory.of_program(p))
    # n < 0, n >= 0, and the case a prover without the axiom has to consider:
    # a sum that happens to equal -1
    for case in ("n$0 < 0", "n$0 >= 0 AND sum(1, n$0) /= -1", "n$0 >= 0 AND sum(1, n$0) = -1"):
        assert ev.valid(F.Implies(parse_formula(case), t.formula()))


def test_loop_free_method_has_no_loop_tasks():
    for name in ("abs", "max", "swap", "calls"):
        _, ts = _tasks(name)
        assert not any(t.category in LOOP_CATEGORIES for t in ts.values())


def test_original_contract_overflows():
    p, ts = _tasks("sum")
    t = ts["sum:35:7:Precondition:1"]
    assert t.description.startswith("Assign")
    assert t.goal == parse_formula("MIN_INT <= s$0 + i$0 AND s$0 + i$0 <= MAX_INT")
    assert check_with_oracle(t, 7, Theory.of_program(p)) == FALSIFIED
    # the witness is a reachable loop state with n = 4: s = 6, i = 4 gives 10 > 7
    assert t.model == {"i$0": 4, "n$0": 4, "s$0": 6}


def test_strengthened_contract_is_valid():
    p, ts = _tasks("sum_fixed")
    th = Theory.of_program(p)
    assert {check_with_oracle(t, 7, th) for t in ts.values()} == {VALID}


def test_goal_true_is_valid():
    t = VerificationTask("m:1:1:Postcondition", "m", "Postcondition", F.TRUE)
    assert check_with_oracle(t, 3) == VALID and t.status == VALID and t.model is None


@pytest.mark.parametrize("name", corpus.names())
def test_task_suite_shape(name):
    p = corpus.load(name)
    for m in p.methods:
        ts = gen_tasks(m, program=p)
        n = count_by_category(ts)
        loops = sum(isinstance(c, A.While) for c in A.walk_commands(m.body))
        assert n.get("Postcondition") == 1
        assert n.get("Termination") == 1
        assert n.get("SpecNontrivial", 0) + n.get("SpecSatisfiable", 0) == 2
        for cat in LOOP_CATEGORIES:
            assert n.get(cat, 0) == loops
        model = build_semantic_model(m, p)
        assert n.get("Precondition", 0) == sum(x.rel_simplified.precondition != F.TRUE for x in model.nodes)


def test_task_ids_are_deterministic_and_unique():
    p = corpus.load("maxcall")
    a = [t.id for t in program_tasks(p)]
    b = [t.id for t in program_tasks(p)]
    assert a == b and len(set(a)) == len(a)


def test_examples_become_tasks():
    p, ts = _tasks("maxcall")
    cats = count_by_category(ts.values())
    assert cats.get("ExampleLegal", 0) >= 1 and cats.get("ExampleIllegal", 0) >= 1
    th = Theory.of_program(p)
    for t in ts.values():
        if t.category.startswith("Example"):
            assert check_with_oracle(t, 7, th) == VALID


def test_unsimplified_tasks_agree():
    p = corpus.load("sum")
    th = Theory.of_program(p)
    raw = program_tasks(p, SimplifyConfig(rules=frozenset()))
    simp = program_tasks(p)
    assert [t.id for t in raw] == [t.id for t in simp]
    for a, b in zip(raw, simp):
        assert check_with_oracle(a, 5, th) == check_with_oracle(b, 5, th), a.id


def test_task_json():
    _, ts = _tasks("countdown")
    d = ts["countdown:2:1:Postcondition"].to_json()
    assert d["category"] == "Postcondition"
    assert F.from_json(d["goal"]["formula"]) == parse_formula("result$1 = 0")
