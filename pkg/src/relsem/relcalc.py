"""The relational calculus: transition relations, termination conditions,
pre/post transformers and the per-node semantic model of a method.

Every rule is a method of ``Calculus`` so that variants (for instance the
deliberately broken ones used to test the soundness checker) can override
a single rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from relsem import formula as F
from relsem.exprsem import translate_expr
from relsem.lang import ast as A
from relsem.lang.printer import render_command
from relsem.simplify import DEFAULT, SimplifyConfig, simplify


class DerivationError(Exception):
    def __init__(self, message: str, span: A.Span = A.NO_SPAN):
        super().__init__(message)
        self.span = span


@dataclass(frozen=True)
class RelJudgment:
    relation: F.Formula
    frame: frozenset
    global_condition: F.Formula = F.TRUE
    precondition: F.Formula = F.TRUE

    def map(self, fn) -> "RelJudgment":
        return RelJudgment(fn(self.relation), self.frame, fn(self.global_condition), fn(self.precondition))


@dataclass(frozen=True)
class TermJudgment:
    condition: F.Formula
    global_condition: F.Formula = F.TRUE

    def map(self, fn) -> "TermJudgment":
        return TermJudgment(fn(self.condition), fn(self.global_condition))


def _all(*fs: F.Formula) -> F.Formula:
    """Conjunction that leaves out literal TRUE parts."""
    return F.conj(*[f for f in fs if f != F.TRUE])


def _fresh(xs: Iterable[str]) -> list[str]:
    return [F.fresh_name() for _ in xs]


def _rename(f: F.Node, xs: list[str], ys: list[str], src: str) -> F.Node:
    """``f[ys/xs_src]``: replace the ``src``-tagged xs by logical ys."""
    return F.substitute(f, {F.Var(x, src): F.lvar(y) for x, y in zip(xs, ys)})


def close_state(f: F.Formula, keep: Iterable[str] = ()) -> F.Formula:
    """Universally close ``f`` over its free pre-state variables (except ``keep``)."""
    keep = set(keep)
    names = sorted({v.name for v in F.free_vars(f) if v.tag == F.PRE and v.name not in keep})
    if not names:
        return f
    avoid = {v.name for v in F.free_vars(f) if v.tag == F.LOG}
    fresh = [x if x not in avoid else F.fresh_name() for x in names]
    return F.forall(fresh, _rename(f, names, fresh, F.PRE))


class Calculus:
    """Syntax-directed derivation of relation and termination judgments."""

    def __init__(self, program: Optional[A.Program] = None):
        self.program = program
        self._rel: dict[int, tuple[A.Command, RelJudgment]] = {}
        self._term: dict[int, tuple[A.Command, TermJudgment]] = {}

    # ------------------------------------------------------------ dispatch

    def relation(self, c: A.Command) -> RelJudgment:
        hit = self._rel.get(id(c))
        if hit is not None and hit[0] is c:
            return hit[1]
        rule = getattr(self, "rel_" + type(c).__name__.lower(), None)
        if rule is None:
            raise TypeError(c)
        j = rule(c)
        self._rel[id(c)] = (c, j)
        return j

    def termination(self, c: A.Command) -> TermJudgment:
        hit = self._term.get(id(c))
        if hit is not None and hit[0] is c:
            return hit[1]
        rule = getattr(self, "term_" + type(c).__name__.lower(), None)
        if rule is None:
            raise TypeError(c)
        j = rule(c)
        self._term[id(c)] = (c, j)
        return j

    # ------------------------------------------------------------ helpers

    def extend(self, j: RelJudgment, frame: Iterable[str]) -> RelJudgment:
        """Frame extension: add ``x$1 = x$0`` for every x newly in the frame."""
        frame = frozenset(frame)
        extra = frame - j.frame
        if not extra:
            return j
        return replace(j, relation=_all(j.relation, *F.frame_eq(extra)), frame=frame | j.frame)

    def pre(self, j: RelJudgment, fq: F.Formula) -> F.Formula:
        """States from which every ``j``-successor satisfies ``fq`` (read at the successor)."""
        xs = sorted(j.frame)
        ys = _fresh(xs)
        body = F.Implies(_rename(j.relation, xs, ys, F.POST), _rename(fq, xs, ys, F.PRE))
        return F.forall(ys, body)

    def post(self, j: RelJudgment, fp: F.Formula) -> F.Formula:
        """States reachable by ``j`` from some state satisfying ``fp``."""
        xs = sorted(j.frame)
        ys = _fresh(xs)
        mapping = {F.pre(x): F.lvar(y) for x, y in zip(xs, ys)}
        mapping.update({F.post(x): F.pre(x) for x in xs})
        return F.exists(ys, _all(_rename(fp, xs, ys, F.PRE), F.substitute(j.relation, mapping)))

    def method(self, name: str, span: A.Span = A.NO_SPAN) -> A.MethodDecl:
        if self.program is None:
            raise DerivationError(f"unknown method '{name}'", span)
        try:
            return self.program.method(name)
        except KeyError:
            raise DerivationError(f"unknown method '{name}'", span) from None

    # ---------------------------------------------------- transition rules

    def rel_skip(self, c: A.Skip) -> RelJudgment:
        return RelJudgment(F.TRUE, frozenset())

    def rel_assign(self, c: A.Assign) -> RelJudgment:
        tr = translate_expr(c.expr)
        return RelJudgment(F.Cmp("=", F.post(c.target), tr.result), frozenset({c.target}), F.TRUE, tr.defined)

    def rel_return(self, c: A.Return) -> RelJudgment:
        return self.rel_assign(A.Assign(A.RESULT, c.expr, c.span))

    def rel_varblock(self, c: A.VarBlock) -> RelJudgment:
        j = self.relation(c.body)
        x0, x1 = F.fresh_name(), F.fresh_name()
        f = F.exists(
            [x0, x1],
            F.substitute(j.relation, {F.pre(c.name): F.lvar(x0), F.post(c.name): F.lvar(x1)}),
        )
        h = j.precondition
        if F.pre(c.name) in F.free_vars(h):
            h = F.forall([x0], F.substitute(h, {F.pre(c.name): F.lvar(x0)}))
        return RelJudgment(f, j.frame - {c.name}, j.global_condition, h)

    def rel_seq(self, c: A.Seq) -> RelJudgment:
        j1, j2 = self.relation(c.first), self.relation(c.second)
        xs = sorted(j1.frame | j2.frame)
        e1, e2 = self.extend(j1, xs), self.extend(j2, xs)
        ys = _fresh(xs)
        f = F.exists(ys, _all(_rename(e1.relation, xs, ys, F.POST), _rename(e2.relation, xs, ys, F.PRE)))
        h = _all(j1.precondition, self.seq_pre(j1, j2.precondition))
        return RelJudgment(f, frozenset(xs), _all(j1.global_condition, j2.global_condition), h)

    def seq_pre(self, j1: RelJudgment, h2: F.Formula) -> F.Formula:
        return F.TRUE if h2 == F.TRUE else self.pre(j1, h2)

    def rel_ifthen(self, c: A.IfThen) -> RelJudgment:
        e = translate_expr(c.cond)
        j = self.relation(c.then)
        f = F.IfF(e.result, j.relation, F.conj(*F.frame_eq(j.frame)))
        h = _all(e.defined, F.TRUE if j.precondition == F.TRUE else F.Implies(e.result, j.precondition))
        return RelJudgment(f, j.frame, j.global_condition, h)

    def rel_ifthenelse(self, c: A.IfThenElse) -> RelJudgment:
        e = translate_expr(c.cond)
        j1, j2 = self.relation(c.then), self.relation(c.else_)
        xs = j1.frame | j2.frame
        e1, e2 = self.extend(j1, xs), self.extend(j2, xs)
        f = F.IfF(e.result, e1.relation, e2.relation)
        hb = F.TRUE if j1.precondition == j2.precondition == F.TRUE else F.IfF(e.result, j1.precondition, j2.precondition)
        g = _all(j1.global_condition, j2.global_condition)
        return RelJudgment(f, xs, g, _all(e.defined, hb))

    def rel_while(self, c: A.While) -> RelJudgment:
        if c.invariant is None or c.measure is None:
            raise DerivationError("loop needs both 'invariant' and 'decreases' annotations", c.span)
        e = translate_expr(c.cond)
        body = self.relation(c.body)
        xs = sorted(body.frame)
        to_post = {F.pre(x): F.post(x) for x in xs}
        f = _all(F.substitute(c.invariant, to_post), self.loop_exit(F.substitute(e.result, to_post)))
        g = _all(body.global_condition, self.loop_preservation(c, body))
        return RelJudgment(f, frozenset(xs), g, self.loop_precondition(c, body))

    def loop_exit(self, cond_at_post: F.Formula) -> F.Formula:
        return F.Not(cond_at_post)

    def _states(self, c: A.While, body: RelJudgment):
        """Invariant, condition and body relation over fresh pre-iteration ys / post-iteration zs."""
        xs = sorted(body.frame)
        ys, zs = _fresh(xs), _fresh(xs)
        e = translate_expr(c.cond)
        inv_y = _rename(c.invariant, xs, ys, F.PRE)
        fe_y = _rename(e.result, xs, ys, F.PRE)
        step = F.substitute(
            body.relation,
            {**{F.pre(x): F.lvar(y) for x, y in zip(xs, ys)}, **{F.post(x): F.lvar(z) for x, z in zip(xs, zs)}},
        )
        inv_z = _rename(c.invariant, xs, zs, F.PRE)
        return xs, ys, zs, inv_y, fe_y, step, inv_z

    def loop_preservation(self, c: A.While, body: RelJudgment) -> F.Formula:
        xs, ys, zs, inv_y, fe_y, step, inv_z = self._states(c, body)
        return close_state(F.forall(ys + zs, F.Implies(_all(inv_y, fe_y, step), inv_z)))

    def loop_precondition(self, c: A.While, body: RelJudgment) -> F.Formula:
        """Invariant on entry, and at every invariant state the condition and
        (when it holds) the body are defined."""
        e = translate_expr(c.cond)
        xs = sorted(body.frame)
        ys = _fresh(xs)
        inv_y = _rename(c.invariant, xs, ys, F.PRE)
        he_y = _rename(e.defined, xs, ys, F.PRE)
        fe_y = _rename(e.result, xs, ys, F.PRE)
        hc_y = _rename(body.precondition, xs, ys, F.PRE)
        step_ok = F.TRUE if hc_y == F.TRUE else F.Implies(fe_y, hc_y)
        every = _all(he_y, step_ok)
        iter_ok = F.TRUE if every == F.TRUE else F.forall(ys, F.Implies(inv_y, every))
        return _all(e.defined, c.invariant, iter_ok)

    def rel_call(self, c: A.Call) -> RelJudgment:
        return derive_call_relation(self.method(c.method, c.span), c.target, c.args)

    # ---------------------------------------------------- termination rules

    def term_skip(self, c) -> TermJudgment:
        return TermJudgment(F.TRUE)

    term_assign = term_skip
    term_return = term_skip

    def term_call(self, c: A.Call) -> TermJudgment:
        m = self.method(c.method, c.span)
        d = m.contract.diverges
        if d == F.FALSE:
            return TermJudgment(F.TRUE)
        return TermJudgment(F.Not(F.substitute(d, _arg_map(m, c.args))))

    def term_varblock(self, c: A.VarBlock) -> TermJudgment:
        t = self.termination(c.body)
        cond = t.condition
        if F.pre(c.name) in F.free_vars(cond):
            x0 = F.fresh_name()
            cond = F.forall([x0], F.substitute(cond, {F.pre(c.name): F.lvar(x0)}))
        return TermJudgment(cond, t.global_condition)

    def term_seq(self, c: A.Seq) -> TermJudgment:
        t1, t2 = self.termination(c.first), self.termination(c.second)
        j1 = self.relation(c.first)
        second = F.TRUE if t2.condition == F.TRUE else self.pre(j1, t2.condition)
        return TermJudgment(_all(t1.condition, second), _all(t1.global_condition, t2.global_condition))

    def term_ifthen(self, c: A.IfThen) -> TermJudgment:
        e = translate_expr(c.cond)
        t = self.termination(c.then)
        cond = F.TRUE if t.condition == F.TRUE else F.Implies(e.result, t.condition)
        return TermJudgment(cond, t.global_condition)

    def term_ifthenelse(self, c: A.IfThenElse) -> TermJudgment:
        e = translate_expr(c.cond)
        t1, t2 = self.termination(c.then), self.termination(c.else_)
        if t1.condition == t2.condition == F.TRUE:
            cond = F.TRUE
        else:
            cond = F.IfF(e.result, t1.condition, t2.condition)
        return TermJudgment(cond, _all(t1.global_condition, t2.global_condition))

    def term_while(self, c: A.While) -> TermJudgment:
        if c.invariant is None or c.measure is None:
            raise DerivationError("loop needs both 'invariant' and 'decreases' annotations", c.span)
        body = self.relation(c.body)
        bt = self.termination(c.body)
        xs, ys, zs, inv_y, fe_y, step, _ = self._states(c, body)
        t_y = _rename(c.measure, xs, ys, F.PRE)
        t_z = _rename(c.measure, xs, zs, F.PRE)
        body_ok = F.TRUE
        if bt.condition != F.TRUE:
            body_ok = close_state(F.forall(ys, F.Implies(_all(inv_y, fe_y), _rename(bt.condition, xs, ys, F.PRE))))
        decrease = close_state(
            F.forall(
                ys + zs,
                F.Implies(_all(inv_y, fe_y, step), F.And((F.Cmp("<=", F.IntLit(0), t_z), F.Cmp("<", t_z, t_y)))),
            )
        )
        g = _all(bt.global_condition, body_ok, decrease)
        return TermJudgment(F.Cmp(">=", c.measure, F.IntLit(0)), g)


def _arg_map(m: A.MethodDecl, args: Iterable[A.Expr]) -> dict:
    return {F.pre(p): translate_expr(a).result for p, a in zip(m.params, args)}


def derive_call_relation(m: A.MethodDecl, target: str, args: tuple) -> RelJudgment:
    """Relation of ``target = m(args)`` read off m's contract."""
    if len(args) != len(m.params):
        raise DerivationError(f"arity mismatch calling '{m.name}'")
    defined = [translate_expr(a).defined for a in args]
    mapping = _arg_map(m, args)
    h = _all(*defined, F.substitute(m.contract.requires, mapping))
    mapping[F.post(A.RESULT)] = F.post(target)
    f = F.substitute(m.contract.ensures, mapping)
    return RelJudgment(f, frozenset({target}), F.TRUE, h)


def derive_relation(c: A.Command, program: Optional[A.Program] = None) -> RelJudgment:
    return Calculus(program).relation(c)


def derive_termination(c: A.Command, program: Optional[A.Program] = None) -> TermJudgment:
    return Calculus(program).termination(c)


def pre_of(j: RelJudgment, fq: F.Formula) -> F.Formula:
    return Calculus().pre(j, fq)


def post_of(j: RelJudgment, fp: F.Formula) -> F.Formula:
    return Calculus().post(j, fp)


# --------------------------------------------------------- semantic model


@dataclass(frozen=True)
class NodeSemantics:
    path: tuple
    command: A.Command
    rel: RelJudgment
    term: TermJudgment
    knowledge: F.Formula
    rel_simplified: RelJudgment
    term_simplified: TermJudgment
    knowledge_raw: F.Formula

    @property
    def span(self) -> A.Span:
        return self.command.span

    @property
    def kind(self) -> str:
        return type(self.command).__name__

    @property
    def effects(self) -> frozenset:
        return self.rel.frame


@dataclass(frozen=True)
class SemanticModel:
    method: A.MethodDecl
    nodes: tuple
    locals: frozenset = field(default_factory=frozenset)

    @property
    def body(self) -> NodeSemantics:
        return self.nodes[0]

    def node(self, path: tuple) -> NodeSemantics:
        for n in self.nodes:
            if n.path == tuple(path):
                return n
        raise KeyError(path)

    def of(self, c: A.Command) -> NodeSemantics:
        for n in self.nodes:
            if n.command is c:
                return n
        raise KeyError(c)

    def innermost_at(self, line: int) -> Optional[NodeSemantics]:
        """Deepest node whose span covers ``line`` (Seq/VarBlock glue is skipped)."""
        best = None
        for n in self.nodes:
            if n.span == A.NO_SPAN or not n.span.covers_line(line):
                continue
            if best is None or len(n.path) > len(best.path):
                best = n
        return best

    def to_json(self) -> dict:
        return {
            "method": self.method.name,
            "locals": sorted(self.locals),
            "nodes": [_node_json(n) for n in self.nodes],
        }


def _formula_pair(raw: F.Formula, simp: F.Formula) -> dict:
    return {"raw": F.render(raw), "simplified": F.render(simp), "formula": F.to_json(simp)}


def _node_json(n: NodeSemantics) -> dict:
    s = n.span
    return {
        "path": list(n.path),
        "kind": n.kind,
        "span": {"line": s.line, "col": s.col, "end_line": s.end_line, "end_col": s.end_col},
        "command": render_command(n.command).splitlines()[0] if n.kind != "Seq" else "",
        "frame": sorted(n.rel.frame),
        "relation": _formula_pair(n.rel.relation, n.rel_simplified.relation),
        "global_condition": _formula_pair(n.rel.global_condition, n.rel_simplified.global_condition),
        "precondition": _formula_pair(n.rel.precondition, n.rel_simplified.precondition),
        "termination": _formula_pair(n.term.condition, n.term_simplified.condition),
        "termination_global_condition": _formula_pair(n.term.global_condition, n.term_simplified.global_condition),
        "knowledge": _formula_pair(n.knowledge_raw, n.knowledge),
    }


def build_semantic_model(
    m: A.MethodDecl,
    program: Optional[A.Program] = None,
    cfg: SimplifyConfig = DEFAULT,
    calculus: Optional[Calculus] = None,
) -> SemanticModel:
    calc = calculus or Calculus(program)
    simp = lambda f: simplify(f, cfg)  # noqa: E731
    nodes: list[NodeSemantics] = []
    local_names: set[str] = set()

    def visit(c: A.Command, path: tuple, k_raw: F.Formula) -> None:
        k = simp(k_raw)
        rel, term = calc.relation(c), calc.termination(c)
        nodes.append(NodeSemantics(path, c, rel, term, k, rel.map(simp), term.map(simp), k_raw))
        if isinstance(c, A.VarBlock):
            local_names.add(c.name)
            visit(c.body, path + (0,), k)
        elif isinstance(c, A.Seq):
            visit(c.first, path + (0,), k)
            visit(c.second, path + (1,), calc.post(calc.relation(c.first), k))
        elif isinstance(c, (A.IfThen, A.IfThenElse)):
            fe = translate_expr(c.cond).result
            visit(c.then, path + (0,), _all(k, fe))
            if isinstance(c, A.IfThenElse):
                visit(c.else_, path + (1,), _all(k, F.Not(fe)))
        elif isinstance(c, A.While):
            xs = sorted(rel.frame)
            x0s = _fresh(xs)
            fe = translate_expr(c.cond).result
            entry = F.exists(x0s, _all(_rename(k, xs, x0s, F.PRE), c.invariant, fe))
            visit(c.body, path + (0,), entry)

    visit(m.body, (), m.contract.requires)
    return SemanticModel(m, tuple(nodes), frozenset(local_names))
