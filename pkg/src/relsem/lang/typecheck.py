from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from relsem import formula as F
from relsem.lang import ast as A


@dataclass(frozen=True, order=True)
class Diagnostic:
    span: A.Span
    message: str

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.message}"


class _Checker:
    def __init__(self, program: A.Program):
        self.p = program
        self.diags: list[Diagnostic] = []
        self.sig: dict[str, A.FunDecl] = {}
        self.methods: dict[str, A.MethodDecl] = {}

    def report(self, span: A.Span, message: str) -> None:
        self.diags.append(Diagnostic(span, message))

    # ----------------------------------------------------------- formulas

    def check_formula(
        self,
        f: F.Node,
        span: A.Span,
        pre_ok: Iterable[str],
        post_ok: Iterable[str] = (),
        what: str = "formula",
    ) -> None:
        pre_ok, post_ok = set(pre_ok), set(post_ok)
        for v in sorted(F.free_vars(f), key=lambda v: (v.tag, v.name)):
            if v.tag == F.PRE and v.name not in pre_ok:
                self.report(span, f"undeclared variable '{v.name}' in {what}")
            elif v.tag == F.POST and v.name not in post_ok:
                self.report(span, f"post-state variable '{v.name}' not allowed in {what}")
            elif v.tag == F.LOG:
                self.report(span, f"undeclared variable '{v.name}' in {what}")
        for name, arity, is_pred in sorted(F.functions_used(f)):
            if name in (F.MIN_INT_NAME, F.MAX_INT_NAME):
                if arity or is_pred:
                    self.report(span, f"'{name}' is a constant")
                continue
            decl = self.sig.get(name)
            if decl is None:
                self.report(span, f"unknown function '{name}' in {what}")
                continue
            if len(decl.arg_sorts) != arity:
                self.report(
                    span,
                    f"arity mismatch: '{name}' expects {len(decl.arg_sorts)} "
                    f"argument(s), got {arity}",
                )
            if is_pred and decl.result_sort != "BOOL":
                self.report(span, f"'{name}' is not a predicate")
            if not is_pred and decl.result_sort == "BOOL":
                self.report(span, f"predicate '{name}' used as a term")
            if any(s != "INT" for s in decl.arg_sorts):
                self.report(span, f"'{name}' must take INT arguments")

    # -------------------------------------------------------- expressions

    def expr_sort(self, e: A.Expr, scope: set[str]) -> Optional[str]:
        if isinstance(e, (A.IntE, A.LimitE)):
            return "int"
        if isinstance(e, A.BoolE):
            return "bool"
        if isinstance(e, A.VarE):
            if e.name not in scope:
                self.report(e.span, f"undeclared variable '{e.name}'")
            return "int"
        if isinstance(e, A.UnaryE):
            s = self.expr_sort(e.arg, scope)
            want = "int" if e.op == "-" else "bool"
            if s is not None and s != want:
                self.report(e.span, f"operator '{e.op}' expects {want}")
            return want
        if isinstance(e, A.BinaryE):
            ls, rs = self.expr_sort(e.left, scope), self.expr_sort(e.right, scope)
            want = "bool" if e.op in A.BOOL_OPS else "int"
            for s in (ls, rs):
                if s is not None and s != want:
                    self.report(e.span, f"operator '{e.op}' expects {want} operands")
                    break
            return "bool" if e.op in A.BOOL_OPS or e.op in A.CMP_OPS else "int"
        raise TypeError(e)

    def want(self, e: A.Expr, scope: set[str], sort: str, what: str) -> None:
        s = self.expr_sort(e, scope)
        if s is not None and s != sort:
            self.report(e.span, f"{what} must be {'boolean' if sort == 'bool' else 'an integer'}")

    # ----------------------------------------------------------- commands

    def check_command(self, c: A.Command, scope: set[str], m: A.MethodDecl, final: bool) -> None:
        writable = lambda x: x not in m.params or x in m.contract.assignable  # noqa: E731
        if isinstance(c, A.Skip):
            return
        if isinstance(c, A.Assign):
            if c.target not in scope:
                self.report(c.span, f"undeclared variable '{c.target}'")
            elif not writable(c.target):
                self.report(c.span, f"parameter '{c.target}' is not assignable")
            self.want(c.expr, scope, "int", "assigned value")
        elif isinstance(c, A.Return):
            if not final:
                self.report(c.span, "'return' must be the last statement of the method body")
            self.want(c.expr, scope, "int", "returned value")
        elif isinstance(c, A.VarBlock):
            if c.name in scope:
                self.report(c.span, f"variable '{c.name}' is already declared")
            if c.name in self.sig or c.name == A.RESULT:
                self.report(c.span, f"variable '{c.name}' shadows a reserved name")
            self.check_command(c.body, scope | {c.name}, m, final)
        elif isinstance(c, A.Seq):
            self.check_command(c.first, scope, m, False)
            self.check_command(c.second, scope, m, final)
        elif isinstance(c, A.IfThen):
            self.want(c.cond, scope, "bool", "condition")
            self.check_command(c.then, scope, m, False)
        elif isinstance(c, A.IfThenElse):
            self.want(c.cond, scope, "bool", "condition")
            self.check_command(c.then, scope, m, False)
            self.check_command(c.else_, scope, m, False)
        elif isinstance(c, A.While):
            self.want(c.cond, scope, "bool", "loop condition")
            if c.invariant is None or c.measure is None:
                self.report(c.span, "loop needs both 'invariant' and 'decreases' annotations")
            if c.invariant is not None:
                self.check_formula(c.invariant, c.span, scope, what="invariant")
            if c.measure is not None:
                self.check_formula(c.measure, c.span, scope, what="termination term")
            self.check_command(c.body, scope, m, False)
        elif isinstance(c, A.Call):
            if c.target not in scope:
                self.report(c.span, f"undeclared variable '{c.target}'")
            elif not writable(c.target):
                self.report(c.span, f"parameter '{c.target}' is not assignable")
            callee = self.methods.get(c.method)
            if callee is None:
                self.report(c.span, f"unknown method '{c.method}'")
            elif len(callee.params) != len(c.args):
                self.report(
                    c.span,
                    f"arity mismatch: '{c.method}' expects {len(callee.params)} "
                    f"argument(s), got {len(c.args)}",
                )
            for a in c.args:
                self.want(a, scope, "int", "argument")
        else:
            raise TypeError(c)

    # ------------------------------------------------------------ program

    def run(self) -> list[Diagnostic]:
        for t in self.p.theories:
            for f in t.functions:
                if f.name in self.sig or f.name in (F.MIN_INT_NAME, F.MAX_INT_NAME):
                    self.report(f.span, f"duplicate theory symbol '{f.name}'")
                self.sig[f.name] = f
        for t in self.p.theories:
            for ax in t.axioms:
                self.check_formula(ax.formula, ax.span, (), what=f"axiom '{ax.name}'")
        for m in self.p.methods:
            if m.name in self.methods:
                self.report(m.span, f"duplicate method '{m.name}'")
            else:
                self.methods[m.name] = m
        for m in self.p.methods:
            self.check_method(m)
        self.check_call_graph()
        return sorted(set(self.diags))

    def check_method(self, m: A.MethodDecl) -> None:
        params = set(m.params)
        if len(params) != len(m.params):
            self.report(m.span, f"duplicate parameter in '{m.name}'")
        for x in m.params:
            if x in self.sig or x == A.RESULT:
                self.report(m.span, f"parameter '{x}' shadows a reserved name")
        ct = m.contract
        span = ct.span if ct.span != A.NO_SPAN else m.span
        self.check_formula(ct.requires, span, params, what="requires clause")
        self.check_formula(ct.diverges, span, params, what="diverges clause")
        self.check_formula(ct.ensures, span, params, {A.RESULT}, what="ensures clause")
        for x in ct.assignable - params:
            self.report(span, f"assignable '{x}' is not a parameter")
        for ex in ct.examples:
            outs_ok = {A.RESULT} | ct.assignable
            for name, _ in ex.inputs:
                if name not in params:
                    self.report(ex.span, f"example input '{name}' is not a parameter")
            for name, _ in ex.outputs:
                if name not in outs_ok:
                    self.report(ex.span, f"example output '{name}' is not an output")
        returns = [c for c in A.walk_commands(m.body) if isinstance(c, A.Return)]
        if len(returns) != 1:
            self.report(m.span, f"method '{m.name}' must end in exactly one 'return'")
        self.check_command(m.body, params, m, True)

    def check_call_graph(self) -> None:
        graph = {name: A.calls_in(m.body) & set(self.methods) for name, m in self.methods.items()}
        state: dict[str, int] = {}

        def visit(n: str) -> bool:
            state[n] = 1
            for k in sorted(graph[n]):
                if state.get(k) == 1 or (state.get(k) is None and visit(k)):
                    return True
            state[n] = 2
            return False

        for name in sorted(graph):
            if state.get(name) is None and visit(name):
                self.report(self.methods[name].span, f"recursive call cycle through '{name}'")
                return


def typecheck(program: A.Program) -> list[Diagnostic]:
    """All diagnostics for ``program``, sorted by position; empty when well-formed."""
    return _Checker(program).run()
