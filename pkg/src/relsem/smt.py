"""SMT-LIB 2 emission for verification tasks and an external solver driver.

A task is valid when ``hypotheses ∧ ¬goal`` is unsatisfiable. Program
variables become integer constants named like their rendering (``|x$0|``,
``|x$1|``) and are constrained to the machine range.

Two modes exist. ``bounded`` fixes MIN_INT/MAX_INT to numerals and lets
every quantifier range over the machine integers, which is exactly the
finite-domain reading of the oracle, so both must agree. ``unbounded``
keeps MIN_INT/MAX_INT symbolic and only restricts machine-sorted binders.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from relsem import formula as F
from relsem.lang import ast as A
from relsem.oracle.semantics import orient
from relsem.vcgen import FALSIFIED, SOLVER_TIMEOUT, UNKNOWN, VALID, VerificationTask

DEFAULT_SOLVER = "z3 -smt2 {file}"


class SolverError(Exception):
    """The solver crashed or printed something other than a verdict."""


@dataclass(frozen=True)
class Mode:
    bounded: bool
    min_int: int = 0
    max_int: int = 0

    @classmethod
    def bounded_to(cls, dom: int) -> "Mode":
        return cls(True, -dom, dom)

    @classmethod
    def unbounded(cls) -> "Mode":
        return cls(False)

    def __str__(self) -> str:
        return f"bounded [{self.min_int}, {self.max_int}]" if self.bounded else "unbounded"


# ------------------------------------------------------------- emission

_PRELUDE = """\
(define-fun tdiv ((a Int) (b Int)) Int
  (ite (= b 0) 0
    (ite (= (>= a 0) (> b 0)) (div (abs a) (abs b)) (- (div (abs a) (abs b))))))
(define-fun tmod ((a Int) (b Int)) Int
  (ite (= b 0) a (- a (* b (tdiv a b)))))"""

_ARITH = {"+": "+", "-": "-", "*": "*", "/": "tdiv", "%": "tmod"}
_CMP = {"=": "=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def symbol(name: str) -> str:
    return f"|{name}|"


def _num(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


class _Emitter:
    def __init__(self, mode: Mode):
        self.mode = mode

    def bound(self) -> tuple[str, str]:
        if self.mode.bounded:
            return _num(self.mode.min_int), _num(self.mode.max_int)
        return "MIN_INT", "MAX_INT"

    def in_range(self, sym: str) -> str:
        lo, hi = self.bound()
        return f"(<= {lo} {sym} {hi})"

    def term(self, t: F.Term, scope: dict[str, str]) -> str:
        if isinstance(t, F.IntLit):
            return _num(t.value)
        if isinstance(t, F.Var):
            if t.tag == F.LOG and t.name in scope:
                return scope[t.name]
            return symbol(F.var_text(t))
        if isinstance(t, F.Neg):
            return f"(- {self.term(t.arg, scope)})"
        if isinstance(t, F.BinOp):
            return f"({_ARITH[t.op]} {self.term(t.left, scope)} {self.term(t.right, scope)})"
        if isinstance(t, F.Ite):
            return f"(ite {self.formula(t.cond, scope)} {self.term(t.then, scope)} {self.term(t.else_, scope)})"
        if isinstance(t, F.App):
            if not t.args and t.fn in (F.MIN_INT_NAME, F.MAX_INT_NAME):
                lo, hi = self.bound()
                return lo if t.fn == F.MIN_INT_NAME else hi
            return self._app(t.fn, t.args, scope)
        raise TypeError(f"not a term: {t!r}")

    def _app(self, fn: str, args: tuple, scope) -> str:
        if not args:
            return symbol(fn)
        return f"({symbol(fn)} {' '.join(self.term(a, scope) for a in args)})"

    def formula(self, f: F.Formula, scope: dict[str, str]) -> str:
        if isinstance(f, F.BoolLit):
            return "true" if f.value else "false"
        if isinstance(f, F.Cmp):
            a, b = self.term(f.left, scope), self.term(f.right, scope)
            if f.op == "/=":
                return f"(not (= {a} {b}))"
            return f"({_CMP[f.op]} {a} {b})"
        if isinstance(f, F.Pred):
            return self._app(f.fn, f.args, scope)
        if isinstance(f, F.Not):
            return f"(not {self.formula(f.arg, scope)})"
        if isinstance(f, (F.And, F.Or)):
            if not f.args:
                return "true" if isinstance(f, F.And) else "false"
            op = "and" if isinstance(f, F.And) else "or"
            return f"({op} {' '.join(self.formula(a, scope) for a in f.args)})"
        if isinstance(f, F.Implies):
            return f"(=> {self.formula(f.left, scope)} {self.formula(f.right, scope)})"
        if isinstance(f, F.Iff):
            return f"(= {self.formula(f.left, scope)} {self.formula(f.right, scope)})"
        if isinstance(f, F.IfF):
            return f"(ite {self.formula(f.cond, scope)} {self.formula(f.then, scope)} {self.formula(f.else_, scope)})"
        if isinstance(f, F.Quant):
            return self._quant(f, scope)
        raise TypeError(f"not a formula: {f!r}")

    def _quant(self, f: F.Quant, scope: dict[str, str]) -> str:
        inner = dict(scope)
        decls, guards = [], []
        for name, sort in f.binders:
            # binder symbols carry the scope depth, so shadowing is harmless
            sym = symbol(f"{name}!{len(scope)}")
            inner[name] = sym
            decls.append(f"({sym} Int)")
            if self.mode.bounded or sort == F.MACHINE_SORT:
                guards.append(self.in_range(sym))
        body = self.formula(f.body, inner)
        if guards:
            g = guards[0] if len(guards) == 1 else f"(and {' '.join(guards)})"
            body = f"(and {g} {body})" if f.kind == "exists" else f"(=> {g} {body})"
        return f"({f.kind} ({' '.join(decls)}) {body})"

    def axiom(self, ax: A.Axiom) -> str:
        """Axioms are stated over all integers, matching the way the oracle
        computes theory functions; an orientable axiom gets its defined
        application as the instantiation pattern."""
        params: list[str] = []
        body = ax.formula
        while isinstance(body, F.Quant) and body.kind == "forall":
            params += body.names
            body = body.body
        if not params:
            return f"(assert (! {self.formula(body, {})} :named {symbol('axiom ' + ax.name)}))"
        scope = {p: symbol(p) for p in params}
        text = self.formula(body, scope)
        rule = orient(ax.formula)
        if rule is not None:
            head = self._app(rule.fn, tuple(F.lvar(p) for p in rule.params), scope)
            text = f"(! {text} :pattern ({head}))"
        decls = " ".join(f"({scope[p]} Int)" for p in dict.fromkeys(params))
        return f"(assert (! (forall ({decls}) {text}) :named {symbol('axiom ' + ax.name)}))"

    def definitions(self, rules: list) -> list[str]:
        """Orientable axioms as one ``define-funs-rec`` block."""
        if not rules:
            return []
        heads, bodies = [], []
        for r in rules:
            scope = {p: symbol(p) for p in r.params}
            args = " ".join(f"({scope[p]} Int)" for p in r.params)
            result = "Bool" if r.predicate else "Int"
            heads.append(f"({symbol(r.fn)} ({args}) {result})")
            bodies.append(self._rule_body(r, r.body, scope))
        return [f"(define-funs-rec ({' '.join(heads)})\n  ({' '.join(bodies)}))"]

    def _rule_body(self, r, f: F.Formula, scope) -> str:
        if isinstance(f, F.IfF):
            return f"(ite {self.formula(f.cond, scope)} {self._rule_body(r, f.then, scope)} {self._rule_body(r, f.else_, scope)})"
        own = tuple(F.lvar(p) for p in r.params)
        target = F.Pred(r.fn, own) if r.predicate else F.App(r.fn, own)
        other = f.right if f.left == target else f.left
        return self.formula(other, scope) if r.predicate else self.term(other, scope)


def _declared_functions(fs: Iterable[F.Formula], signature: dict[str, A.FunDecl]) -> list[str]:
    used: dict[str, tuple[int, bool]] = {}
    for f in fs:
        for name, arity, is_pred in F.functions_used(f):
            if name in (F.MIN_INT_NAME, F.MAX_INT_NAME) and arity == 0:
                continue
            used[name] = (arity, is_pred)
    out = []
    for name in sorted(used):
        arity, is_pred = used[name]
        decl = signature.get(name)
        result = "Bool" if is_pred or (decl is not None and decl.result_sort == "BOOL") else "Int"
        out.append(f"(declare-fun {symbol(name)} ({' '.join(['Int'] * arity)}) {result})")
    return out


def emit_smtlib(
    t: VerificationTask,
    theories: Sequence[A.TheoryDecl] = (),
    mode: Mode = Mode.bounded_to(7),
) -> str:
    """A self-contained script that is unsat exactly when ``t`` is valid."""
    e = _Emitter(mode)
    signature = {fd.name: fd for th in theories for fd in th.functions}
    axioms = [ax for th in theories for ax in th.axioms]
    hyps = [(n, h) for n, h in t.hypotheses if h != F.TRUE]
    everything = [t.goal] + [h for _, h in hyps] + [ax.formula for ax in axioms]

    lines = [f"; task {t.id} ({t.category}), {mode}", "(set-option :produce-models true)"]
    if not mode.bounded:
        lines += [
            "(declare-const MIN_INT Int)",
            "(declare-const MAX_INT Int)",
            "(assert (<= MIN_INT (- 1) 0 1 MAX_INT))",
        ]
    # bounded mode computes orientable theory functions by their recursive
    # definition, as the oracle does; everything else is an asserted axiom
    rules = []
    if mode.bounded:
        kept = []
        for ax in axioms:
            r = orient(ax.formula)
            if r is not None and all(r.fn != q.fn for q in rules):
                rules.append(r)
            else:
                kept.append(ax)
        axioms = kept
    # recursive definitions are outside UFNIA
    lines.insert(1, "(set-logic ALL)" if rules else "(set-logic UFNIA)")
    lines.append(_PRELUDE)
    defined = {r.fn for r in rules}
    lines += [d for d in _declared_functions(everything, signature) if d.split()[1][1:-1] not in defined]
    lines += e.definitions(rules)
    free = set()
    for f in [t.goal] + [h for _, h in hyps]:
        free |= F.free_vars(f)
    for v in sorted(free, key=lambda v: (v.tag, v.name)):
        sym = symbol(F.var_text(v))
        lines.append(f"(declare-const {sym} Int)")
        lines.append(f"(assert {e.in_range(sym)})")
    for ax in axioms:
        lines.append(e.axiom(ax))
    for i, (name, h) in enumerate(hyps):
        lines.append(f"(assert (! {e.formula(h, {})} :named {symbol(f'hyp {i} {name}')}))")
    lines.append(f"(assert (! (not {e.formula(t.goal, {})}) :named |negated goal|))")
    lines += ["(check-sat)", "(get-model)", "(exit)"]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- models

_TOKEN = re.compile(r'\s*(?:(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|"]+))')


def parse_sexprs(text: str) -> list:
    """Parse s-expressions into nested lists of atoms (strings)."""
    stack: list[list] = [[]]
    pos = 0
    text = re.sub(r";[^\n]*", "", text)
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SolverError("unbalanced parenthesis in solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(m.group(3) or m.group(4) or m.group(5))
    if text[pos:].strip():
        raise SolverError(f"cannot read solver output near {text[pos:pos + 20]!r}")
    if len(stack) != 1:
        raise SolverError("unbalanced parenthesis in solver output")
    return stack[0]


def _int_value(x) -> Optional[int]:
    if isinstance(x, str) and re.fullmatch(r"-?\d+", x):
        return int(x)
    if isinstance(x, list) and len(x) == 2 and x[0] == "-":
        v = _int_value(x[1])
        return None if v is None else -v
    return None


def parse_model(sexpr, wanted: Iterable[str]) -> dict[str, int]:
    """Constant definitions from a ``get-model`` answer, keyed by rendered
    variable name (``x$0``) and restricted to ``wanted``."""
    wanted = set(wanted)
    defs = sexpr[1:] if sexpr and sexpr[0] == "model" else sexpr
    out: dict[str, int] = {}
    for d in defs:
        if not (isinstance(d, list) and len(d) == 5 and d[0] == "define-fun" and d[2] == []):
            continue
        name = d[1][1:-1] if d[1].startswith("|") else d[1]
        v = _int_value(d[4])
        if name in wanted and v is not None:
            out[name] = v
    return dict(sorted(out.items()))


# --------------------------------------------------------------- solver


@dataclass
class SolverResult:
    status: str
    model: Optional[dict]
    output: str


def run_solver(script: str, solver: str = DEFAULT_SOLVER, timeout: float = 10.0, path: Optional[str] = None) -> SolverResult:
    """Run ``solver`` on ``script``. ``{file}`` in the template is replaced by
    a script file (``path`` or a temporary one); without it the script goes to stdin."""
    argv_template = shlex.split(solver)
    if not argv_template:
        raise SolverError("empty solver command")
    uses_file = any("{file}" in a for a in argv_template)
    tmp = None
    if uses_file and path is None:
        fd, tmp = tempfile.mkstemp(suffix=".smt2")
        os.close(fd)
        path = tmp
    try:
        if path is not None:
            with open(path, "w") as fh:
                fh.write(script)
        argv = [a.replace("{file}", path or "") for a in argv_template]
        if timeout <= 0:
            return SolverResult(SOLVER_TIMEOUT, None, "")
        try:
            proc = subprocess.run(
                argv,
                input=None if uses_file else script,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return SolverResult(SOLVER_TIMEOUT, None, "")
        except OSError as exc:
            raise SolverError(f"cannot run solver '{argv[0]}': {exc}") from None
    finally:
        if tmp is not None:
            os.unlink(tmp)
    return _verdict(proc.stdout, proc.stderr, proc.returncode)


def _verdict(out: str, err: str, code: int) -> SolverResult:
    lines = out.strip().splitlines()
    head = lines[0].strip() if lines else ""
    if head == "unsat":
        return SolverResult(VALID, None, out)
    if head == "sat":
        rest = parse_sexprs("\n".join(lines[1:]))
        return SolverResult(FALSIFIED, rest[0] if rest else [], out)
    if head in ("timeout", "unknown"):
        return SolverResult(SOLVER_TIMEOUT if head == "timeout" else UNKNOWN, None, out)
    detail = (out + err).strip().splitlines()
    raise SolverError(f"solver exited with {code}: {detail[0] if detail else 'no output'}")


def check_task(
    t: VerificationTask,
    solver: str = DEFAULT_SOLVER,
    timeout: float = 10.0,
    theories: Sequence[A.TheoryDecl] = (),
    mode: Mode = Mode.bounded_to(7),
    path: Optional[str] = None,
) -> str:
    """Discharge ``t`` with an external solver; status and countermodel are
    written back into the task. Raises SolverError on solver failure."""
    res = run_solver(emit_smtlib(t, theories, mode), solver, timeout, path)
    t.status = res.status
    t.model = None
    if res.status == FALSIFIED:
        names = {F.var_text(v) for v in F.free_vars(t.formula())}
        t.model = parse_model(res.model, names)
    return t.status


def check_tasks(
    tasks: Sequence[VerificationTask],
    solver: str = DEFAULT_SOLVER,
    timeout: float = 10.0,
    theories: Sequence[A.TheoryDecl] = (),
    mode: Mode = Mode.bounded_to(7),
    out_dir: Optional[str] = None,
    jobs: int = 4,
) -> list[str]:
    """Check tasks on a small worker pool, one solver process per task."""

    def one(t: VerificationTask) -> str:
        path = None if out_dir is None else os.path.join(out_dir, script_name(t))
        return check_task(t, solver, timeout, theories, mode, path)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(one, tasks))


def script_name(t: VerificationTask) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", t.id) + ".smt2"


def solver_available(solver: str = DEFAULT_SOLVER) -> bool:
    import shutil

    argv = shlex.split(solver)
    return bool(argv) and shutil.which(argv[0]) is not None
