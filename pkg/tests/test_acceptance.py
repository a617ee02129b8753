"""The eight acceptance criteria, each with its time budget.

Run under pytest for one test per criterion plus a PASS/FAIL summary line
each, or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import sys
import time
from dataclasses import dataclass
from typing import Callable

import pytest

from gen import FormulaGen, truth_table
from mutants import MUTANTS
from relsem import corpus
from relsem import formula as F
from relsem.cli import main as cli_main
from relsem.lang import ast as A
from relsem.lang import parse_formula
from relsem.oracle import Bounds, Evaluator, Theory
from relsem.oracle.soundness import check_soundness
from relsem.relcalc import Calculus, build_semantic_model
from relsem.simplify import simplify
from relsem.vcgen import (
    FALSIFIED,
    LOOP_CATEGORIES,
    POSTCONDITION,
    SPEC_NONTRIVIAL,
    SPEC_SATISFIABLE,
    TERMINATION,
    VALID,
    check_with_oracle,
    count_by_category,
    gen_tasks,
    program_tasks,
)


@dataclass
class Outcome:
    ok: bool
    detail: str


RESULTS: dict[int, tuple[Outcome, float]] = {}


def _budget(seconds: float) -> Callable:
    def wrap(fn):
        fn.budget = seconds
        return fn

    return wrap


# ---------------------------------------------------------------- 1


@_budget(1.0)
def criterion_1() -> Outcome:
    import contextlib
    import io
    import json

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(["translate", "-c", "x = x+1;", "--format", "json"])
    data = json.loads(buf.getvalue())
    rel = parse_formula(data["relation"]["simplified"])
    ok = code == 0 and rel == parse_formula("x$1 = x$0 + 1") and data["frame"] == ["x"]
    return Outcome(ok, f"relation {F.render(rel)}, frame {{{', '.join(data['frame'])}}}")


# ---------------------------------------------------------------- 2


@_budget(30.0)
def criterion_2() -> Outcome:
    p = corpus.load("sum")
    (m,) = p.methods
    ev = Evaluator(Bounds.symmetric(7), Theory.of_program(p))
    calc = Calculus(p)
    (loop,) = [c for c in A.walk_commands(m.body) if isinstance(c, A.While)]
    j = calc.relation(loop)
    inv_post = F.substitute(loop.invariant, {F.pre(x): F.post(x) for x in j.frame})
    want = F.conj(parse_formula("i$1 = n$0 + 1 AND s$1 = sum(1, i$1 - 1)"), inv_post)
    rel_ok = ev.valid(F.Iff(simplify(j.relation), want))

    term = simplify(calc.termination(loop).condition)
    term_ok = ev.valid(F.Iff(term, parse_formula("n$0 - i$0 >= -1")))

    model = build_semantic_model(m, p, calculus=calc)
    ite = next(n for n in model.nodes if n.kind == "IfThenElse")
    els = model.node(ite.path + (1,))
    # the else branch ends in `s` holding the sum, which the method then returns
    else_ok = ev.valid(F.Implies(
        F.And((parse_formula("n$0 >= 0"), els.knowledge, els.rel.relation)),
        parse_formula("s$1 = sum(1, n$0)"),
    ))
    body_ok = ev.valid(F.Implies(
        F.And((m.contract.requires, parse_formula("n$0 >= 0"), model.body.rel.relation)),
        parse_formula("result$1 = sum(1, n$0)"),
    ))
    ok = rel_ok and term_ok and else_ok and body_ok
    return Outcome(ok, f"relation {rel_ok}, termination {term_ok}, else branch {else_ok and body_ok}")


# ---------------------------------------------------------------- 3


@_budget(30.0)
def criterion_3() -> Outcome:
    p = corpus.load("sum")
    tasks = {t.id: t for t in program_tasks(p)}
    t = tasks["sum:35:7:Precondition:1"]
    falsified = check_with_oracle(t, 7, Theory.of_program(p)) == FALSIFIED and bool(t.model)
    fixed = corpus.load("sum_fixed")
    ev = Evaluator(Bounds.symmetric(7), Theory.of_program(fixed))
    statuses = [check_with_oracle(u, evaluator=ev) for u in program_tasks(fixed)]
    ok = falsified and all(s == VALID for s in statuses)
    return Outcome(ok, f"s = s+i witness {t.model}, sum_fixed {statuses.count(VALID)}/{len(statuses)} valid")


# ---------------------------------------------------------------- 4


@_budget(120.0)
def criterion_4() -> Outcome:
    names = corpus.names()
    bad = []
    for name in names:
        r = check_soundness(corpus.load(name), dom=7, fuel=10_000)
        if not r.ok:
            bad.append(f"{name}: {r.violations[0]}")
    caught = 0
    for mu in MUTANTS:
        r = check_soundness(corpus.load(mu.program), dom=7, fuel=10_000, calculus=mu.calculus)
        caught += bool(r.violations)
    ok = len(names) >= 20 and not bad and len(MUTANTS) >= 5 and caught == len(MUTANTS)
    detail = f"{len(names)} programs, {len(bad)} with violations, {caught}/{len(MUTANTS)} mutants caught"
    return Outcome(ok, detail + ("; " + "; ".join(bad) if bad else ""))


# ---------------------------------------------------------------- 5


@_budget(60.0)
def criterion_5() -> Outcome:
    names = corpus.names()
    bad = [n for n in names if not check_soundness(corpus.load(n), dom=7, checks=("pre", "post")).ok]
    return Outcome(not bad, f"{len(names) - len(bad)}/{len(names)} programs satisfy the pre/post statement")


# ---------------------------------------------------------------- 6


@_budget(60.0)
def criterion_6() -> Outcome:
    ev = Evaluator(Bounds.symmetric(4))
    g = FormulaGen(random.Random(2024))
    mismatches = 0
    for _ in range(1000):
        f = g.formula(6)
        if truth_table(ev, f) != truth_table(ev, simplify(f)):
            mismatches += 1
    return Outcome(mismatches == 0, f"{mismatches} of 1000 formulas changed meaning")


# ---------------------------------------------------------------- 7


@_budget(60.0)
def criterion_7() -> Outcome:
    p = corpus.load("sum_fixed")
    (m,) = p.methods
    spec = [t for t in gen_tasks(m, program=p) if t.category in (SPEC_NONTRIVIAL, SPEC_SATISFIABLE)]
    oracle = [check_with_oracle(t, 7, Theory.of_program(p)) for t in spec]
    ok = len(spec) == 2 and all(s == VALID for s in oracle)
    detail = f"oracle {oracle}"
    from relsem.smt import Mode, check_task, solver_available

    if solver_available():
        fresh = [t for t in gen_tasks(m, program=p) if t.category in (SPEC_NONTRIVIAL, SPEC_SATISFIABLE)]
        smt = [check_task(t, timeout=20, theories=p.theories, mode=Mode.bounded_to(7)) for t in fresh]
        ok = ok and all(s == VALID for s in smt)
        detail += f", bounded SMT {smt}"
    else:
        detail += ", bounded SMT skipped (no solver)"
    return Outcome(ok, detail)


# ---------------------------------------------------------------- 8


@_budget(60.0)
def criterion_8() -> Outcome:
    wrong = []
    methods = 0
    for name in corpus.names():
        p = corpus.load(name)
        for m in p.methods:
            methods += 1
            counts = count_by_category(gen_tasks(m, program=p))
            loops = sum(isinstance(c, A.While) for c in A.walk_commands(m.body))
            want = {POSTCONDITION: 1, TERMINATION: 1, SPEC_NONTRIVIAL: 1, SPEC_SATISFIABLE: 1}
            want.update({cat: loops for cat in LOOP_CATEGORIES})
            if any(counts.get(k, 0) != v for k, v in want.items()):
                wrong.append(f"{name}.{m.name}")
    return Outcome(not wrong, f"{methods - len(wrong)}/{methods} methods have the expected task shape")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 9)}


def run_criterion(n: int) -> tuple[Outcome, float]:
    fn = CRITERIA[n]
    start = time.perf_counter()
    outcome = fn()
    elapsed = time.perf_counter() - start
    if elapsed > fn.budget:
        outcome = Outcome(False, f"{outcome.detail}; took {elapsed:.1f} s, budget {fn.budget:.0f} s")
    RESULTS[n] = (outcome, elapsed)
    return outcome, elapsed


def summary_line(n: int) -> str:
    outcome, elapsed = RESULTS[n]
    verdict = "PASS" if outcome.ok else "FAIL"
    return f"criterion {n}: {verdict} ({elapsed:.1f} s) {outcome.detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    outcome, _ = run_criterion(n)
    assert outcome.ok, summary_line(n)


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        run_criterion(n)
        print(summary_line(n), flush=True)
    sys.exit(0 if all(o.ok for o, _ in RESULTS.values()) else 1)
