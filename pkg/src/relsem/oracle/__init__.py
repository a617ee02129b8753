"""Finite-domain ground truth: interpreter, formula evaluator, soundness checks."""

from relsem.oracle.evaluate import Evaluator, eval_formula, naive_holds, state_env
from relsem.oracle.interp import (
    FuelExhausted,
    Interpreter,
    Outcome,
    Terminated,
    Trap,
    eval_expr,
    execute,
    try_eval_expr,
)
from relsem.oracle.semantics import Bounds, EvaluationError, Theory, UnsupportedTheory, tdiv, tmod

__all__ = [
    "Bounds",
    "EvaluationError",
    "Evaluator",
    "FuelExhausted",
    "Interpreter",
    "Outcome",
    "Terminated",
    "Theory",
    "Trap",
    "UnsupportedTheory",
    "eval_expr",
    "eval_formula",
    "execute",
    "naive_holds",
    "state_env",
    "tdiv",
    "tmod",
    "try_eval_expr",
]
