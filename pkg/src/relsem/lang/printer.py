"""Render MiniWhile ASTs back to source text (parse/render/parse is a fixpoint)."""

from __future__ import annotations

from relsem import formula as F
from relsem.lang import ast as A

_EXPR_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}


def render_expr(e: A.Expr, ctx: int = 0) -> str:
    if isinstance(e, A.IntE):
        return str(e.value) if e.value >= 0 or ctx < 7 else f"({e.value})"
    if isinstance(e, A.BoolE):
        return "true" if e.value else "false"
    if isinstance(e, A.VarE):
        return e.name
    if isinstance(e, A.LimitE):
        return e.which
    if isinstance(e, A.UnaryE):
        text = f"{e.op}{render_expr(e.arg, 7)}"
        return f"({text})" if ctx > 7 else text
    if isinstance(e, A.BinaryE):
        p = _EXPR_PREC[e.op]
        # comparisons do not chain, so both operands bind tighter
        lp = p + 1 if p in (3, 4) else p
        text = f"{render_expr(e.left, lp)} {e.op} {render_expr(e.right, p + 1)}"
        return f"({text})" if p < ctx else text
    raise TypeError(e)


def _ann(f) -> str:
    # annotations read bare identifiers as pre-state values
    text = F.render(f)
    return text.replace("$0", "")


def _items(c: A.Command, indent: str) -> list[str]:
    if isinstance(c, A.Seq):
        return [_stmt(c.first, indent)] + _items(c.second, indent)
    if isinstance(c, A.VarBlock):
        return [f"{indent}int {c.name};"] + _items(c.body, indent)
    if isinstance(c, A.Skip):
        return []
    return [_stmt(c, indent)]


def _block(c: A.Command, indent: str) -> str:
    inner = _items(c, indent + "  ")
    if not inner:
        return "{ }"
    return "{\n" + "\n".join(inner) + f"\n{indent}}}"


def _stmt(c: A.Command, indent: str) -> str:
    if isinstance(c, A.Assign):
        return f"{indent}{c.target} = {render_expr(c.expr)};"
    if isinstance(c, A.Call):
        return f"{indent}{c.target} = {c.method}({', '.join(render_expr(a) for a in c.args)});"
    if isinstance(c, A.Return):
        return f"{indent}return {render_expr(c.expr)};"
    if isinstance(c, A.IfThen):
        return f"{indent}if ({render_expr(c.cond)}) {_block(c.then, indent)}"
    if isinstance(c, A.IfThenElse):
        return (
            f"{indent}if ({render_expr(c.cond)}) {_block(c.then, indent)}"
            f" else {_block(c.else_, indent)}"
        )
    if isinstance(c, A.While):
        ann = ""
        if c.invariant is not None:
            ann = f" /*@ invariant {_ann(c.invariant)};"
            if c.measure is not None:
                ann += f" decreases {_ann(c.measure)};"
            ann += " @*/"
        return f"{indent}while ({render_expr(c.cond)}){ann} {_block(c.body, indent)}"
    return f"{indent}{_block(c, indent)}"


def render_command(c: A.Command) -> str:
    return _stmt(c, "")


def _ensures(f) -> str:
    return F.render(f).replace("$0", "").replace(f"{A.RESULT}$1", A.RESULT)


def render_method(m: A.MethodDecl) -> str:
    ct = m.contract
    clauses = [f"requires {_ann(ct.requires)};", f"ensures {_ensures(ct.ensures)};"]
    if ct.diverges != F.FALSE:
        clauses.append(f"diverges {_ann(ct.diverges)};")
    if ct.assignable:
        clauses.append(f"assignable {', '.join(sorted(ct.assignable))};")
    for ex in ct.examples:
        kw = "example" if ex.legal else "counterexample"
        ins = ", ".join(f"{k} = {v}" for k, v in ex.inputs)
        outs = ", ".join(f"{k} = {v}" for k, v in ex.outputs)
        clauses.append(f"{kw} input {ins} output {outs};")
    contract = "/*@\n" + "".join(f"  {c}\n" for c in clauses) + "@*/"
    return f"method {m.name}({', '.join(m.params)}) {contract}\n{_block(m.body, '')}"


def render_theory(t: A.TheoryDecl) -> str:
    lines = [f"theory {t.name} {{"]
    for f in t.functions:
        if f.arg_sorts:
            lines.append(f"  {f.name}: ({', '.join(f.arg_sorts)}) -> {f.result_sort};")
        else:
            lines.append(f"  {f.name}: {f.result_sort};")
    for a in t.axioms:
        lines.append(f"  {a.name}: AXIOM {F.render(a.formula)};")
    lines.append("}")
    return "\n".join(lines)


def render_program(p: A.Program) -> str:
    parts = [render_theory(t) for t in p.theories] + [render_method(m) for m in p.methods]
    return "\n\n".join(parts) + "\n"
