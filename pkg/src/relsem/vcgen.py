"""Verification tasks for a method, and their desk-scale discharge by the oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from relsem import formula as F
from relsem.exprsem import translate_expr
from relsem.lang import ast as A
from relsem.oracle.evaluate import Evaluator
from relsem.oracle.semantics import Bounds, Theory
from relsem.relcalc import Calculus, SemanticModel, build_semantic_model
from relsem.simplify import DEFAULT, SimplifyConfig, simplify

POSTCONDITION = "Postcondition"
TERMINATION = "Termination"
PRECONDITION = "Precondition"
LOOP_INVARIANT = "LoopInvariant"
LOOP_BODY_TERMINATES = "LoopBodyTerminates"
LOOP_MEASURE_WELL_FORMED = "LoopMeasureWellFormed"
LOOP_MEASURE_DECREASED = "LoopMeasureDecreased"
GLOBAL_SIDE_CONDITION = "GlobalSideCondition"
EFFECTS_REPORT = "EffectsReport"
SPEC_NONTRIVIAL = "SpecNontrivial"
SPEC_SATISFIABLE = "SpecSatisfiable"
EXAMPLE_LEGAL = "ExampleLegal"
EXAMPLE_ILLEGAL = "ExampleIllegal"

CATEGORIES = (
    EFFECTS_REPORT,
    POSTCONDITION,
    TERMINATION,
    PRECONDITION,
    LOOP_INVARIANT,
    LOOP_BODY_TERMINATES,
    LOOP_MEASURE_WELL_FORMED,
    LOOP_MEASURE_DECREASED,
    GLOBAL_SIDE_CONDITION,
    SPEC_NONTRIVIAL,
    SPEC_SATISFIABLE,
    EXAMPLE_LEGAL,
    EXAMPLE_ILLEGAL,
)
LOOP_CATEGORIES = (LOOP_INVARIANT, LOOP_BODY_TERMINATES, LOOP_MEASURE_WELL_FORMED, LOOP_MEASURE_DECREASED)

UNKNOWN = "unknown"
VALID = "valid"
FALSIFIED = "falsified"
SOLVER_TIMEOUT = "solver-timeout"


@dataclass
class VerificationTask:
    """One proof obligation: the hypotheses imply the goal for all values of
    the free variables (``x$0``, ``x$1`` and free logical ones alike)."""

    id: str
    method: str
    category: str
    goal: F.Formula
    hypotheses: tuple = ()  # (name, Formula) pairs
    span: A.Span = A.NO_SPAN
    description: str = ""
    status: str = UNKNOWN
    model: Optional[dict] = None

    def formula(self) -> F.Formula:
        hyps = [h for _, h in self.hypotheses if h != F.TRUE]
        if not hyps:
            return self.goal
        return F.Implies(F.conj(*hyps), self.goal)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "method": self.method,
            "category": self.category,
            "span": {"line": self.span.line, "col": self.span.col},
            "description": self.description,
            "hypotheses": [{"name": n, "text": F.render(h), "formula": F.to_json(h)} for n, h in self.hypotheses],
            "goal": {"text": F.render(self.goal), "formula": F.to_json(self.goal)},
            "status": self.status,
            "model": self.model,
        }


class _Builder:
    def __init__(self, m: A.MethodDecl, cfg: SimplifyConfig):
        self.m = m
        self.cfg = cfg
        self.tasks: list[VerificationTask] = []
        self.seen: dict[str, int] = {}

    def add(self, category: str, span: A.Span, goal, hypotheses=(), description: str = "") -> None:
        base = f"{self.m.name}:{span.line}:{span.col}:{category}"
        n = self.seen.get(base, 0)
        self.seen[base] = n + 1
        tid = base if n == 0 else f"{base}:{n}"
        hyps = tuple((name, simplify(h, self.cfg)) for name, h in hypotheses)
        self.tasks.append(
            VerificationTask(tid, self.m.name, category, simplify(goal, self.cfg), hyps, span, description)
        )


def _conjuncts(f: F.Formula) -> list[F.Formula]:
    if isinstance(f, F.And):
        out = []
        for a in f.args:
            out.extend(_conjuncts(a))
        return out
    return [] if f == F.TRUE else [f]


def gen_tasks(
    m: A.MethodDecl,
    model: Optional[SemanticModel] = None,
    program: Optional[A.Program] = None,
    cfg: SimplifyConfig = DEFAULT,
    calculus: Optional[Calculus] = None,
) -> list[VerificationTask]:
    calc = calculus or Calculus(program)
    model = model or build_semantic_model(m, program, cfg, calc)
    b = _Builder(m, cfg)
    ct = m.contract
    p, q, d = ct.requires, ct.ensures, ct.diverges
    body = model.body
    span = m.span
    method_vars = frozenset(m.params) | {A.RESULT}

    allowed = ct.assignable | {A.RESULT} | model.locals
    excess = sorted(body.rel.frame - allowed)
    b.add(
        EFFECTS_REPORT,
        span,
        F.FALSE if excess else F.TRUE,
        description=(
            f"modifies {', '.join(excess)} outside the assignable set" if excess else
            f"modifies only {', '.join(sorted(body.rel.frame)) or 'nothing'}"
        ),
    )

    relation = calc.extend(body.rel_simplified, method_vars).relation
    b.add(POSTCONDITION, span, q, (("requires", p), ("relation", relation)), "precondition and body relation imply the postcondition")
    b.add(
        TERMINATION,
        span,
        body.term_simplified.condition,
        (("requires", p), ("not diverges", F.Not(d))),
        "the body terminates whenever it is not allowed to diverge",
    )

    for n in model.nodes:
        if n.rel_simplified.precondition != F.TRUE:
            b.add(
                PRECONDITION,
                n.span,
                n.rel_simplified.precondition,
                (("knowledge", n.knowledge),),
                f"{n.kind} can be executed without a runtime error",
            )

    for n in model.nodes:
        if isinstance(n.command, A.While):
            _loop_tasks(b, calc, n, model)

    for source in (body.rel.global_condition, body.term.global_condition):
        for g in _conjuncts(source):
            b.add(GLOBAL_SIDE_CONDITION, span, g, (), "state-independent side condition")

    outs = {F.post(A.RESULT): F.lvar(A.RESULT)}
    q_out = F.substitute(q, outs)
    b.add(
        SPEC_NONTRIVIAL,
        span,
        F.exists([A.RESULT], F.Not(q_out)),
        (("requires", p),),
        "the postcondition does not admit every possible output",
    )
    b.add(
        SPEC_SATISFIABLE,
        span,
        F.exists([A.RESULT], q_out),
        (("requires", p),),
        "the postcondition allows some output",
    )

    for ex in ct.examples:
        ins = {F.pre(x): F.IntLit(v) for x, v in ex.inputs}
        out_map = {F.post(A.RESULT if x == A.RESULT else x): F.IntLit(v) for x, v in ex.outputs}
        pi = F.substitute(p, ins)
        qi = F.substitute(F.substitute(q, out_map), ins)
        text = ", ".join(f"{x} = {v}" for x, v in ex.inputs + ex.outputs)
        if ex.legal:
            b.add(EXAMPLE_LEGAL, ex.span, F.conj(pi, qi), (), f"example {text} is allowed")
        else:
            b.add(EXAMPLE_ILLEGAL, ex.span, F.conj(pi, F.Not(qi)), (), f"example {text} is rejected")
    return b.tasks


def _loop_tasks(b: _Builder, calc: Calculus, n, model: SemanticModel) -> None:
    """The four loop obligations over three states: loop entry x (fresh
    logical variables), an iteration's start y (``$0``) and end z (``$1``)."""
    c: A.While = n.command
    body = model.of(c.body)
    xs = sorted(n.rel.frame)
    entry = {F.pre(x): F.lvar(F.fresh_name(x)) for x in xs}
    k_x = F.substitute(n.knowledge, entry)
    inv_y = c.invariant
    fe_y = translate_expr(c.cond).result
    step = body.rel_simplified.relation
    to_post = {F.pre(x): F.post(x) for x in xs}
    inv_z = F.substitute(c.invariant, to_post)
    t_y, t_z = c.measure, F.substitute(c.measure, to_post)
    iteration = (("entry knowledge", k_x), ("invariant", inv_y), ("condition", fe_y))
    after = iteration + (("body relation", step),)
    b.add(LOOP_INVARIANT, c.span, inv_z, after, "the body preserves the invariant")
    b.add(LOOP_BODY_TERMINATES, c.span, body.term_simplified.condition, iteration, "the body terminates")
    b.add(LOOP_MEASURE_WELL_FORMED, c.span, F.Cmp("<=", F.IntLit(0), t_z), after, "the measure stays non-negative")
    b.add(LOOP_MEASURE_DECREASED, c.span, F.Cmp("<", t_z, t_y), after, "the body decreases the measure")


# ------------------------------------------------------------- checking


def check_with_oracle(
    t: VerificationTask,
    dom: int = 7,
    theory: Optional[Theory] = None,
    bounds: Optional[Bounds] = None,
    evaluator: Optional[Evaluator] = None,
) -> str:
    """Decide ``t`` by enumerating every free variable over ``[-dom, dom]``.

    The status (and a countermodel when falsified) is written back into ``t``.
    """
    ev = evaluator or Evaluator(bounds or Bounds.symmetric(dom), theory)
    cex = ev.counterexample(t.formula())
    if cex is None:
        t.status, t.model = VALID, None
    else:
        t.status = FALSIFIED
        t.model = {F.var_text(v): val for v, val in sorted(cex.items(), key=lambda kv: (kv[0].tag, kv[0].name))}
    return t.status


def program_tasks(
    program: A.Program, cfg: SimplifyConfig = DEFAULT, calculus: Optional[Calculus] = None
) -> list[VerificationTask]:
    calc = calculus or Calculus(program)
    out: list[VerificationTask] = []
    for m in program.methods:
        out.extend(gen_tasks(m, None, program, cfg, calc))
    return out


def count_by_category(tasks: Iterable[VerificationTask]) -> dict[str, int]:
    out: dict[str, int] = {}
    for t in tasks:
        out[t.category] = out.get(t.category, 0) + 1
    return out
