"""Executable soundness checks for the calculus.

For every command node of every method, all stores over the node's
variables are enumerated. The derived judgments are compared with what the
interpreter actually does:

* ``relation``: a run from a state satisfying ``h`` ends in a state related
  by ``f_r``, leaves every variable outside the frame alone and never traps;
* ``termination``: under ``g_c``, ``h`` and ``f_c`` the run finishes within
  the fuel budget;
* ``pre`` / ``post``: ``h ∧ PRE(fq) ∧ f_r ⇒ fq'`` and
  ``h ∧ fp ∧ f_r ⇒ POST(fp)'`` for a fixed family of conditions;
* ``exit`` (loops) and ``exact`` (loop- and call-free nodes): the relation is
  not weaker than it needs to be. Dropping a conjunct is a sound weakening,
  so these precision checks are what notice it.

Nodes whose state-independent condition ``g`` is not valid are reported as
vacuous rather than checked.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from relsem import formula as F
from relsem.lang import ast as A
from relsem.oracle.evaluate import Evaluator, state_env
from relsem.oracle.interp import FuelExhausted, Interpreter, Terminated, Trap
from relsem.oracle.semantics import Bounds, Theory

STATE_CAP = 250_000

ALL_CHECKS = ("relation", "termination", "pre", "post", "exit", "exact")


class StateSpaceTooLarge(Exception):
    pass


@dataclass(frozen=True)
class Violation:
    method: str
    path: tuple
    span: A.Span
    kind: str
    pre: dict
    post: Optional[dict]
    detail: str

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "path": list(self.path),
            "line": self.span.line,
            "col": self.span.col,
            "kind": self.kind,
            "pre": self.pre,
            "post": self.post,
            "detail": self.detail,
        }

    def __str__(self) -> str:
        where = f"{self.method}:{self.span.line}:{self.span.col}"
        post = "" if self.post is None else f" -> {self.post}"
        return f"{where}: {self.kind}: {self.detail} at {self.pre}{post}"


@dataclass
class SoundnessReport:
    dom: int
    fuel: int
    violations: list = field(default_factory=list)
    vacuous: list = field(default_factory=list)  # (method, path, span, which)
    nodes: int = 0
    stores: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_text(self) -> str:
        lines = [
            f"checked {self.nodes} node(s), {self.stores} store(s) at dom={self.dom}, fuel={self.fuel}",
        ]
        for m, path, span, which in self.vacuous:
            lines.append(f"info: {m}:{span.line}:{span.col}: {which} is not valid; node skipped")
        for v in self.violations:
            lines.append(f"violation: {v}")
        lines.append("OK" if self.ok else f"{len(self.violations)} violation(s)")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "dom": self.dom,
            "fuel": self.fuel,
            "nodes": self.nodes,
            "stores": self.stores,
            "ok": self.ok,
            "violations": [v.to_json() for v in self.violations],
            "vacuous": [
                {"method": m, "path": list(p), "line": s.line, "col": s.col, "condition": w}
                for m, p, s, w in self.vacuous
            ],
        }


def conditions(names: Iterable[str]) -> list[F.Formula]:
    """The fixed family of state conditions used for the pre/post checks."""
    names = sorted(names)
    out: list[F.Formula] = []
    for x in names:
        out.append(F.Cmp(">=", F.pre(x), F.IntLit(0)))
        out.append(F.Cmp("<", F.pre(x), F.IntLit(2)))
    for x, y in itertools.combinations(names, 2):
        out.append(F.Cmp("=", F.pre(x), F.pre(y)))
        out.append(F.Cmp("<=", F.pre(x), F.pre(y)))
    return out


def _paths(c: A.Command, path: tuple = ()):
    yield path, c
    for i, s in enumerate(A.sub_commands(c)):
        yield from _paths(s, path + (i,))


def _state_names(*fs: F.Formula) -> set[str]:
    out: set[str] = set()
    for f in fs:
        out |= {v.name for v in F.free_vars(f) if v.tag in (F.PRE, F.POST)}
    return out


def _exact_eligible(c: A.Command) -> bool:
    return not any(isinstance(n, (A.While, A.Call)) for n in A.walk_commands(c))


def _to_post(f: F.Formula, names: Iterable[str]) -> F.Formula:
    return F.substitute(f, {F.pre(x): F.post(x) for x in names})


class _Projected:
    """Per-store queries memoized on the store's projection to the free
    pre-state variables of the formula; most formulas read few of them.
    Stores are value tuples aligned with ``names``."""

    def __init__(self, ev: Evaluator, names: list[str]):
        self.ev = ev
        self.index = {x: i for i, x in enumerate(names)}
        self.entries: dict[int, tuple] = {}

    def _entry(self, f: F.Formula) -> tuple:
        e = self.entries.get(id(f))
        if e is None or e[0] is not f:
            fv = sorted(v.name for v in F.free_vars(f) if v.tag == F.PRE)
            idx = [self.index[x] for x in fv]
            get = operator.itemgetter(*idx) if idx else (lambda vals: ())
            e = self.entries[id(f)] = (f, get, {}, fv, idx, {})
        return e

    def _env(self, e: tuple, vals: tuple) -> dict:
        return {F.pre(x): vals[i] for x, i in zip(e[3], e[4])}

    def holds(self, f: F.Formula, vals: tuple) -> bool:
        e = self._entry(f)
        key = e[1](vals)
        hit = e[2].get(key)
        if hit is None:
            hit = e[2][key] = self.ev.holds(f, self._env(e, vals))
        return hit

    def successors(self, rel: F.Formula, over: list, vals: tuple) -> list:
        e = self._entry(rel)
        key = e[1](vals)
        hit = e[5].get(key)
        if hit is None:
            hit = e[5][key] = sorted(self.ev.solutions(rel, over, self._env(e, vals)))
        return hit


def check_soundness(
    program: A.Program,
    dom: int = 7,
    fuel: int = 10_000,
    calculus: Optional[Callable] = None,
    methods: Optional[Iterable[str]] = None,
    checks: Iterable[str] = ALL_CHECKS,
    cap: int = STATE_CAP,
) -> SoundnessReport:
    """Check the derived judgments of ``program`` against its execution.

    ``calculus`` is a factory taking the program (``Calculus`` by default);
    pass a subclass to check a variant of the rules.
    """
    from relsem.relcalc import Calculus

    checks = set(checks)
    bounds = Bounds.symmetric(dom)
    ev = Evaluator(bounds, Theory.of_program(program))
    interp = Interpreter(program, bounds, ev)
    calc = (calculus or Calculus)(program)
    report = SoundnessReport(dom, fuel)
    wanted = set(methods) if methods is not None else None
    for m in program.methods:
        if wanted is not None and m.name not in wanted:
            continue
        for path, c in _paths(m.body):
            _check_node(report, m, path, c, calc, ev, interp, fuel, checks, cap)
    return report


def _check_node(report, m, path, c, calc, ev: Evaluator, interp: Interpreter, fuel, checks, cap) -> None:
    from relsem.simplify import simplify

    j = calc.relation(c)
    t = calc.termination(c)
    names = sorted(A.command_vars(c) | _state_names(j.relation, j.precondition, t.condition))
    # before the final return, result still holds its initial 0
    domains = [(0,) if x == A.RESULT else ev.values for x in names]
    size = 1
    for d in domains:
        size *= len(d)
    if size > cap:
        raise StateSpaceTooLarge(
            f"{m.name}:{c.span}: {size} stores over {', '.join(names)}; use a smaller dom"
        )
    report.nodes += 1
    if not ev.valid(j.global_condition):
        report.vacuous.append((m.name, path, c.span, "global condition"))
        return
    gc_ok = ev.valid(t.global_condition)
    if not gc_ok and "termination" in checks:
        report.vacuous.append((m.name, path, c.span, "termination side condition"))
    frame = sorted(j.frame)
    outside = [x for x in names if x not in j.frame]
    exact = "exact" in checks and bool(frame) and _exact_eligible(c)

    def violate(kind: str, pre: dict, post: Optional[dict], detail: str) -> None:
        report.violations.append(Violation(m.name, path, c.span, kind, pre, post, detail))

    # Statement 3 and the precision check work on the successor set of each
    # store. They read simplified formulas, which drop dead pre-state values
    # and so make the per-projection memo effective.
    rel = simplify(j.relation)
    frame_post = [F.post(x) for x in frame]
    pres = [(fq, simplify(calc.pre(j, fq))) for fq in conditions(names)] if "pre" in checks else []
    posts = [(fp, simplify(calc.post(j, fp))) for fp in conditions(names)] if "post" in checks else []
    need_succ = exact or pres or posts

    q = _Projected(ev, names)
    frame_idx = [names.index(x) for x in frame]
    for vals in itertools.product(*domains):
        s = dict(zip(names, vals))
        report.stores += 1
        if not q.holds(j.precondition, vals):
            continue
        out = interp.execute(c, s, fuel)
        if isinstance(out, Trap):
            if "relation" in checks:
                violate("trap", s, None, f"{out.reason} although the precondition holds")
            continue
        if isinstance(out, FuelExhausted):
            if "termination" in checks and gc_ok and q.holds(t.condition, vals):
                violate("termination", s, None, "no termination within the fuel budget")
            continue
        assert isinstance(out, Terminated)
        s2 = {x: out.store[x] for x in names}
        if "relation" in checks:
            env2 = state_env(pre=s, post=s2)
            if not ev.holds(j.relation, env2):
                violate("relation", s, s2, "the transition is not described by the relation")
            changed = [x for x in outside if s2[x] != s[x]]
            if changed:
                violate("frame", s, s2, f"{', '.join(changed)} changed outside the frame")
        if not need_succ:
            continue
        succ = q.successors(rel, frame_post, vals)
        if exact:
            actual = tuple(s2[x] for x in frame)
            others = [row for row in succ if row != actual]
            if others:
                alt = dict(s2)
                alt.update(zip(frame, others[0]))
                violate("exact", s, alt, "the relation admits a state the command cannot reach")
        states = []
        for row in succ:
            st = list(vals)
            for i, v in zip(frame_idx, row):
                st[i] = v
            states.append(tuple(st))
        for fq, pre_fq in pres:
            bad = next((st for st in states if not q.holds(fq, st)), None)
            if bad is not None and q.holds(pre_fq, vals):
                violate("pre", s, dict(zip(names, bad)), f"PRE of {F.render(fq)} does not guarantee it")
        for fp, post_fp in posts:
            if not q.holds(fp, vals):
                continue
            bad = next((st for st in states if not q.holds(post_fp, st)), None)
            if bad is not None:
                violate("post", s, dict(zip(names, bad)), f"POST of {F.render(fp)} misses a successor")

    if "exit" in checks and isinstance(c, A.While):
        from relsem.exprsem import translate_expr

        fe = _to_post(translate_expr(c.cond).result, frame)
        cex = ev.counterexample(F.Implies(F.And((j.precondition, j.relation)), F.Not(fe)))
        if cex is not None:
            pre, post = _split(cex)
            violate("exit", pre, post, "the relation allows a state in which the loop would continue")


def _split(model: dict) -> tuple[dict, dict]:
    pre = {v.name: x for v, x in model.items() if v.tag == F.PRE}
    post = {v.name: x for v, x in model.items() if v.tag == F.POST}
    return dict(sorted(pre.items())), dict(sorted(post.items()))
