from __future__ import annotations

import re
import shlex
import sys

import pytest

from relsem import corpus
from relsem import formula as F
from relsem.oracle import Theory
from relsem.smt import (
    Mode,
    SolverError,
    check_task,
    check_tasks,
    emit_smtlib,
    parse_model,
    parse_sexprs,
    run_solver,
    script_name,
    solver_available,
)
from relsem.vcgen import FALSIFIED, SOLVER_TIMEOUT, UNKNOWN, VALID, VerificationTask, check_with_oracle, program_tasks

needs_z3 = pytest.mark.skipif(not solver_available(), reason="z3 not installed")


def _tasks(name):
    p = corpus.load(name)
    return p, {t.id: t for t in program_tasks(p)}


def _fake(output: str) -> str:
    """A solver command that ignores its input and prints ``output``."""
    return f"{shlex.quote(sys.executable)} -c {shlex.quote(f'import sys; sys.stdin.read(); print({output!r})')}"


def test_unbounded_postcondition_script():
    p, ts = _tasks("sum")
    text = emit_smtlib(ts["sum:13:1:Postcondition"], p.theories, Mode.unbounded())
    assert "(declare-const MIN_INT Int)" in text and "(assert (<= MIN_INT (- 1) 0 1 MAX_INT))" in text
    assert ":named |axiom sumaxiom|" in text
    assert ":pattern ((|sum| |m| |n|))" in text
    assert ":named |hyp 0 requires|" in text and ":named |hyp 1 relation|" in text
    assert "(assert (! (not (ite (< |n$0| 0)" in text
    assert text.rstrip().endswith("(check-sat)\n(get-model)\n(exit)".rstrip())


def test_bounded_script_fixes_limits_and_defines_sum():
    p, ts = _tasks("sum")
    text = emit_smtlib(ts["sum:13:1:Postcondition"], p.theories, Mode.bounded_to(7))
    assert "(set-logic ALL)" in text and "define-funs-rec" in text
    assert "MIN_INT" not in text and "(<= (- 7) |n$0| 7)" in text


def test_true_goal_script():
    t = VerificationTask("m:1:1:Postcondition", "m", "Postcondition", F.TRUE)
    text = emit_smtlib(t)
    assert "(assert (! (not true) :named |negated goal|))" in text
    assert "(set-logic UFNIA)" in text


def test_emission_is_deterministic():
    p = corpus.load("maxcall")
    a = [emit_smtlib(t, p.theories) for t in program_tasks(p)]
    b = [emit_smtlib(t, p.theories) for t in program_tasks(p)]
    assert a == b


def test_every_symbol_is_declared_before_use():
    p, ts = _tasks("sum")
    for t in ts.values():
        for mode in (Mode.bounded_to(7), Mode.unbounded()):
            declared = {"tdiv", "tmod", "MIN_INT", "MAX_INT"} if not mode.bounded else {"tdiv", "tmod"}
            for line in emit_smtlib(t, p.theories, mode).splitlines():
                for sym in _symbols(line):
                    if line.startswith(("(declare-", "(define-")) and sym not in declared:
                        declared.add(sym)
                        continue
                    if sym.startswith(("hyp ", "axiom ", "negated goal")):
                        continue
                    assert sym in declared or _bound_in(line, sym), (t.id, sym, line)


def _symbols(line):
    return re.findall(r"\|([^|]*)\|", line)


def _bound_in(line, sym):
    return f"((|{sym}| Int)" in line or f"(|{sym}| Int)" in line


def test_parse_sexprs_and_model():
    text = '(\n (define-fun |n$0| () Int 4)\n (define-fun |s$0| () Int (- 6))\n (define-fun sum ((x!0 Int)) Int 0)\n)'
    (model,) = parse_sexprs(text)
    assert parse_model(model, {"n$0", "s$0", "i$0"}) == {"n$0": 4, "s$0": -6}
    assert parse_sexprs('(a "b ""c""" |d e|)') == [["a", '"b ""c"""', "|d e|"]]


def test_zero_timeout():
    t = VerificationTask("m:1:1:Postcondition", "m", "Postcondition", F.TRUE)
    assert check_task(t, solver=_fake("unsat"), timeout=0) == SOLVER_TIMEOUT
    assert t.status == SOLVER_TIMEOUT


def test_verdict_mapping_with_stand_in_solver():
    t = VerificationTask("m:1:1:Postcondition", "m", "Postcondition", F.Cmp("=", F.pre("x"), F.IntLit(1)))
    assert check_task(t, solver=_fake("unsat")) == VALID
    assert check_task(t, solver=_fake("sat\n((define-fun |x$0| () Int (- 2)))")) == FALSIFIED
    assert t.model == {"x$0": -2}
    assert check_task(t, solver=_fake("unknown")) == UNKNOWN
    assert check_task(t, solver=_fake("timeout")) == SOLVER_TIMEOUT


def test_solver_crash_is_an_infrastructure_error():
    t = VerificationTask("m:1:1:Postcondition", "m", "Postcondition", F.TRUE)
    with pytest.raises(SolverError):
        check_task(t, solver=_fake("(error \"line 1: boom\")"))
    with pytest.raises(SolverError):
        check_task(t, solver="/nonexistent/solver {file}")
    assert t.status == "unknown"


def test_file_template(tmp_path):
    path = tmp_path / "x.smt2"
    res = run_solver("(check-sat)\n", solver=f"{shlex.quote(sys.executable)} -c 'import sys; print(open(sys.argv[1]).read().strip() == \"(check-sat)\" and \"unsat\" or \"sat\")' {{file}}", path=str(path))
    assert res.status == VALID and path.read_text() == "(check-sat)\n"


def test_script_names_are_file_safe():
    _, ts = _tasks("sum")
    assert script_name(ts["sum:35:7:Precondition:1"]) == "sum_35_7_Precondition_1.smt2"


@needs_z3
def test_postcondition_is_unsat_in_both_modes():
    p, ts = _tasks("sum")
    for mode in (Mode.bounded_to(7), Mode.unbounded()):
        assert check_task(ts["sum:13:1:Postcondition"], timeout=20, theories=p.theories, mode=mode) == VALID


@needs_z3
def test_overflow_countermodel():
    p, ts = _tasks("sum")
    t = ts["sum:35:7:Precondition:1"]
    assert check_task(t, timeout=20, theories=p.theories, mode=Mode.bounded_to(7)) == FALSIFIED
    assert set(t.model) == {"i$0", "n$0", "s$0"}
    assert t.model["s$0"] + t.model["i$0"] > 7


@needs_z3
@pytest.mark.parametrize("name", ["sum", "sum_fixed", "maxcall", "division", "abs", "diverge"])
def test_solver_agrees_with_oracle_in_bounded_mode(name, tmp_path):
    p = corpus.load(name)
    th = Theory.of_program(p)
    tasks = program_tasks(p)
    want = [check_with_oracle(t, 4, th) for t in tasks]
    got = check_tasks(tasks, timeout=30, theories=p.theories, mode=Mode.bounded_to(4), out_dir=str(tmp_path))
    assert got == want
    assert len(list(tmp_path.glob("*.smt2"))) == len(tasks)
