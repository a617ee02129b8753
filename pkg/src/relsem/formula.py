"""Two-state formula IR.

Terms are integer valued, formulas are boolean valued. A program variable
``x`` occurs in a formula either as its pre-state value (``Var("x", PRE)``,
rendered ``x$0``) or as its post-state value (``Var("x", POST)``, rendered
``x$1``). Quantifier-bound and environment variables carry the ``LOG`` tag.

Quantifiers bind variables of sort ``int`` (the machine integers between
``MIN_INT`` and ``MAX_INT``) or ``INT`` (mathematical integers).
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

PRE = "pre"
POST = "post"
LOG = "log"

INT_SORT = "INT"
MACHINE_SORT = "int"

MIN_INT_NAME = "MIN_INT"
MAX_INT_NAME = "MAX_INT"


# ---------------------------------------------------------------- terms


@dataclass(frozen=True, slots=True)
class IntLit:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    tag: str = LOG


@dataclass(frozen=True, slots=True)
class Neg:
    arg: Term


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # + - * / %
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Ite:
    cond: Formula
    then: Term
    else_: Term


@dataclass(frozen=True, slots=True)
class App:
    fn: str
    args: tuple[Term, ...] = ()


Term = Union[IntLit, Var, Neg, BinOp, Ite, App]

MIN_INT = App(MIN_INT_NAME)
MAX_INT = App(MAX_INT_NAME)


# ------------------------------------------------------------- formulas


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str  # = /= < <= > >=
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Pred:
    fn: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True, slots=True)
class Not:
    arg: Formula


@dataclass(frozen=True, slots=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class IfF:
    cond: Formula
    then: Formula
    else_: Formula


@dataclass(frozen=True, slots=True)
class Quant:
    kind: str  # "forall" | "exists"
    binders: tuple[tuple[str, str], ...]  # (name, sort)
    body: Formula

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.binders)


Formula = Union[BoolLit, Cmp, Pred, Not, And, Or, Implies, Iff, IfF, Quant]
Node = Union[Term, Formula]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

TERM_TYPES = (IntLit, Var, Neg, BinOp, Ite, App)
FORMULA_TYPES = (BoolLit, Cmp, Pred, Not, And, Or, Implies, Iff, IfF, Quant)

NEGATED_CMP = {"=": "/=", "/=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
FLIPPED_CMP = {"=": "=", "/=": "/=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def pre(name: str) -> Var:
    return Var(name, PRE)


def post(name: str) -> Var:
    return Var(name, POST)


def lvar(name: str) -> Var:
    return Var(name, LOG)


def conj(*fs: Formula) -> Formula:
    """Plain conjunction; no simplification beyond the 0/1-ary cases."""
    if not fs:
        return TRUE
    if len(fs) == 1:
        return fs[0]
    return And(tuple(fs))


def disj(*fs: Formula) -> Formula:
    if not fs:
        return FALSE
    if len(fs) == 1:
        return fs[0]
    return Or(tuple(fs))


def exists(names: Iterable[str], body: Formula, sort: str = MACHINE_SORT) -> Formula:
    names = tuple(names)
    if not names:
        return body
    return Quant("exists", tuple((n, sort) for n in names), body)


def forall(names: Iterable[str], body: Formula, sort: str = MACHINE_SORT) -> Formula:
    names = tuple(names)
    if not names:
        return body
    return Quant("forall", tuple((n, sort) for n in names), body)


def in_range(t: Term) -> Formula:
    return And((Cmp("<=", MIN_INT, t), Cmp("<=", t, MAX_INT)))


def frame_eq(names: Iterable[str]) -> list[Formula]:
    """``x$1 = x$0`` for every name, in sorted order."""
    return [Cmp("=", post(x), pre(x)) for x in sorted(names)]


def is_formula(n: object) -> bool:
    return isinstance(n, FORMULA_TYPES)


def is_term(n: object) -> bool:
    return isinstance(n, TERM_TYPES)


# ----------------------------------------------------------- fresh names


class _Fresh(threading.local):
    def __init__(self) -> None:
        self.counter = itertools.count(1)


_fresh = _Fresh()


def fresh_name(prefix: str = "v") -> str:
    """Return a name ``prefix#k`` that no user identifier can spell."""
    return f"{prefix}#{next(_fresh.counter)}"


def reset_fresh(start: int = 1) -> None:
    _fresh.counter = itertools.count(start)


# ------------------------------------------------------------ traversal


def children(n: Node) -> tuple[Node, ...]:
    if isinstance(n, (IntLit, Var, BoolLit)):
        return ()
    if isinstance(n, Neg):
        return (n.arg,)
    if isinstance(n, (BinOp, Cmp, Implies, Iff)):
        return (n.left, n.right)
    if isinstance(n, (Ite, IfF)):
        return (n.cond, n.then, n.else_)
    if isinstance(n, (App, Pred)):
        return n.args
    if isinstance(n, Not):
        return (n.arg,)
    if isinstance(n, (And, Or)):
        return n.args
    if isinstance(n, Quant):
        return (n.body,)
    raise TypeError(f"not a formula node: {n!r}")


def size(n: Node) -> int:
    return 1 + sum(size(c) for c in children(n))


def free_vars(n: Node) -> frozenset[Var]:
    """Pre-, post- and free logical variables of ``n``."""
    out: set[Var] = set()
    _free(n, frozenset(), out)
    return frozenset(out)


def _free(n: Node, bound: frozenset[str], out: set[Var]) -> None:
    if isinstance(n, Var):
        if n.tag != LOG or n.name not in bound:
            out.add(n)
        return
    if isinstance(n, Quant):
        _free(n.body, bound | set(n.names), out)
        return
    for c in children(n):
        _free(c, bound, out)


def functions_used(n: Node) -> set[tuple[str, int, bool]]:
    """(name, arity, is_predicate) of every application in ``n``."""
    out: set[tuple[str, int, bool]] = set()

    def walk(m: Node) -> None:
        if isinstance(m, App):
            out.add((m.fn, len(m.args), False))
        elif isinstance(m, Pred):
            out.add((m.fn, len(m.args), True))
        for c in children(m):
            walk(c)

    walk(n)
    return out


def bound_names(n: Node) -> set[str]:
    out: set[str] = set()

    def walk(m: Node) -> None:
        if isinstance(m, Quant):
            out.update(m.names)
        for c in children(m):
            walk(c)

    walk(n)
    return out


# --------------------------------------------------------- substitution


def substitute(n: Node, mapping: Mapping[Var, Term]) -> Node:
    """Simultaneous capture-avoiding substitution of terms for variables.

    Keys are variables (any tag). A binder is renamed to a fresh name when
    it would capture a free variable of a replacement term that is actually
    inserted below it.
    """
    if not mapping:
        return n
    return _subst(n, dict(mapping))


def _subst(n: Node, m: dict[Var, Term]) -> Node:
    if isinstance(n, Var):
        return m.get(n, n)
    if isinstance(n, (IntLit, BoolLit)):
        return n
    if isinstance(n, Neg):
        return Neg(_subst(n.arg, m))
    if isinstance(n, BinOp):
        return BinOp(n.op, _subst(n.left, m), _subst(n.right, m))
    if isinstance(n, Cmp):
        return Cmp(n.op, _subst(n.left, m), _subst(n.right, m))
    if isinstance(n, Ite):
        return Ite(_subst(n.cond, m), _subst(n.then, m), _subst(n.else_, m))
    if isinstance(n, IfF):
        return IfF(_subst(n.cond, m), _subst(n.then, m), _subst(n.else_, m))
    if isinstance(n, App):
        return App(n.fn, tuple(_subst(a, m) for a in n.args))
    if isinstance(n, Pred):
        return Pred(n.fn, tuple(_subst(a, m) for a in n.args))
    if isinstance(n, Not):
        return Not(_subst(n.arg, m))
    if isinstance(n, And):
        return And(tuple(_subst(a, m) for a in n.args))
    if isinstance(n, Or):
        return Or(tuple(_subst(a, m) for a in n.args))
    if isinstance(n, Implies):
        return Implies(_subst(n.left, m), _subst(n.right, m))
    if isinstance(n, Iff):
        return Iff(_subst(n.left, m), _subst(n.right, m))
    if isinstance(n, Quant):
        names = set(n.names)
        inner = {k: v for k, v in m.items() if not (k.tag == LOG and k.name in names)}
        if not inner:
            return n
        body_free = free_vars(n.body)
        inner = {k: v for k, v in inner.items() if k in body_free}
        if not inner:
            return n
        captured: set[str] = set()
        for v in inner.values():
            captured |= {x.name for x in free_vars(v) if x.tag == LOG}
        binders = []
        for name, sort in n.binders:
            if name in captured:
                new = fresh_name()
                inner[Var(name, LOG)] = Var(new, LOG)
                binders.append((new, sort))
            else:
                binders.append((name, sort))
        return Quant(n.kind, tuple(binders), _subst(n.body, inner))
    raise TypeError(f"not a formula node: {n!r}")


def rename_tag(n: Node, names: Iterable[str], src: str, dst: str) -> Node:
    """Replace ``x`` tagged ``src`` by ``x`` tagged ``dst`` for the given names."""
    return substitute(n, {Var(x, src): Var(x, dst) for x in names})


# ------------------------------------------------------------ rendering

_PREC = {
    "iff": 1,
    "implies": 2,
    "or": 3,
    "and": 4,
    "not": 5,
    "cmp": 6,
    "add": 7,
    "mul": 8,
    "neg": 9,
    "atom": 10,
}
_BIN_PREC = {"+": 7, "-": 7, "*": 8, "/": 8, "%": 8}


def var_text(v: Var) -> str:
    if v.tag == PRE:
        return f"{v.name}$0"
    if v.tag == POST:
        return f"{v.name}$1"
    return v.name


def render(n: Node, style: str = "pretty") -> str:
    """Render to the textual formula syntax.

    ``pretty`` omits redundant parentheses; ``raw`` parenthesizes every
    compound subterm. Both are accepted by ``lang.parse_formula``.
    """
    if style not in ("pretty", "raw"):
        raise ValueError(f"unknown style {style!r}")
    return _render(n, 0, style == "raw")


def _wrap(text: str, prec: int, ctx: int, full: bool) -> str:
    if full and prec < _PREC["atom"]:
        return f"({text})"
    return f"({text})" if prec < ctx else text


def _binders_text(binders: tuple[tuple[str, str], ...]) -> str:
    return ", ".join(n if s == MACHINE_SORT else f"{n}: {s}" for n, s in binders)


def _render(n: Node, ctx: int, full: bool) -> str:
    r = lambda m, c: _render(m, c, full)  # noqa: E731
    if isinstance(n, IntLit):
        return str(n.value) if n.value >= 0 or ctx < _PREC["neg"] else f"({n.value})"
    if isinstance(n, Var):
        return var_text(n)
    if isinstance(n, App):
        if not n.args:
            return n.fn
        return f"{n.fn}({', '.join(r(a, 0) for a in n.args)})"
    if isinstance(n, Pred):
        if not n.args:
            return n.fn
        return f"{n.fn}({', '.join(r(a, 0) for a in n.args)})"
    if isinstance(n, BoolLit):
        return "TRUE" if n.value else "FALSE"
    if isinstance(n, Neg):
        # "-2" would read back as a literal
        arg = f"({n.arg.value})" if isinstance(n.arg, IntLit) else r(n.arg, _PREC["neg"])
        return _wrap(f"-{arg}", _PREC["neg"], ctx, full)
    if isinstance(n, BinOp):
        p = _BIN_PREC[n.op]
        return _wrap(f"{r(n.left, p)} {n.op} {r(n.right, p + 1)}", p, ctx, full)
    if isinstance(n, (Ite, IfF)):
        return f"IF {r(n.cond, 0)} THEN {r(n.then, 0)} ELSE {r(n.else_, 0)} ENDIF"
    if isinstance(n, Cmp):
        p = _PREC["cmp"]
        return _wrap(f"{r(n.left, p + 1)} {n.op} {r(n.right, p + 1)}", p, ctx, full)
    if isinstance(n, Not):
        p = _PREC["not"]
        return _wrap(f"NOT {r(n.arg, p)}", p, ctx, full)
    if isinstance(n, (And, Or)):
        p = _PREC["and"] if isinstance(n, And) else _PREC["or"]
        word = " AND " if isinstance(n, And) else " OR "
        return _wrap(word.join(r(a, p + 1) for a in n.args), p, ctx, full)
    if isinstance(n, Implies):
        p = _PREC["implies"]
        return _wrap(f"{r(n.left, p + 1)} => {r(n.right, p)}", p, ctx, full)
    if isinstance(n, Iff):
        p = _PREC["iff"]
        return _wrap(f"{r(n.left, p + 1)} <=> {r(n.right, p + 1)}", p, ctx, full)
    if isinstance(n, Quant):
        word = "FORALL" if n.kind == "forall" else "EXISTS"
        text = f"{word}({_binders_text(n.binders)}): {r(n.body, 0)}"
        return f"({text})" if ctx > 0 or full else text
    raise TypeError(f"not a formula node: {n!r}")


# ---------------------------------------------------------------- JSON


def to_json(n: Node) -> dict:
    if isinstance(n, IntLit):
        return {"kind": "int", "value": n.value}
    if isinstance(n, Var):
        return {"kind": "var", "name": n.name, "tag": n.tag}
    if isinstance(n, Neg):
        return {"kind": "neg", "arg": to_json(n.arg)}
    if isinstance(n, BinOp):
        return {"kind": "binop", "op": n.op, "left": to_json(n.left), "right": to_json(n.right)}
    if isinstance(n, Ite):
        return {"kind": "ite", "cond": to_json(n.cond), "then": to_json(n.then), "else": to_json(n.else_)}
    if isinstance(n, App):
        return {"kind": "app", "fn": n.fn, "args": [to_json(a) for a in n.args]}
    if isinstance(n, BoolLit):
        return {"kind": "bool", "value": n.value}
    if isinstance(n, Cmp):
        return {"kind": "cmp", "op": n.op, "left": to_json(n.left), "right": to_json(n.right)}
    if isinstance(n, Pred):
        return {"kind": "pred", "fn": n.fn, "args": [to_json(a) for a in n.args]}
    if isinstance(n, Not):
        return {"kind": "not", "arg": to_json(n.arg)}
    if isinstance(n, (And, Or)):
        return {"kind": "and" if isinstance(n, And) else "or", "args": [to_json(a) for a in n.args]}
    if isinstance(n, (Implies, Iff)):
        kind = "implies" if isinstance(n, Implies) else "iff"
        return {"kind": kind, "left": to_json(n.left), "right": to_json(n.right)}
    if isinstance(n, IfF):
        return {"kind": "if", "cond": to_json(n.cond), "then": to_json(n.then), "else": to_json(n.else_)}
    if isinstance(n, Quant):
        return {
            "kind": n.kind,
            "binders": [{"name": a, "sort": s} for a, s in n.binders],
            "body": to_json(n.body),
        }
    raise TypeError(f"not a formula node: {n!r}")


def from_json(d: dict) -> Node:
    k = d["kind"]
    if k == "int":
        return IntLit(d["value"])
    if k == "var":
        return Var(d["name"], d["tag"])
    if k == "neg":
        return Neg(from_json(d["arg"]))
    if k == "binop":
        return BinOp(d["op"], from_json(d["left"]), from_json(d["right"]))
    if k == "ite":
        return Ite(from_json(d["cond"]), from_json(d["then"]), from_json(d["else"]))
    if k == "app":
        return App(d["fn"], tuple(from_json(a) for a in d["args"]))
    if k == "bool":
        return BoolLit(d["value"])
    if k == "cmp":
        return Cmp(d["op"], from_json(d["left"]), from_json(d["right"]))
    if k == "pred":
        return Pred(d["fn"], tuple(from_json(a) for a in d["args"]))
    if k == "not":
        return Not(from_json(d["arg"]))
    if k == "and":
        return And(tuple(from_json(a) for a in d["args"]))
    if k == "or":
        return Or(tuple(from_json(a) for a in d["args"]))
    if k == "implies":
        return Implies(from_json(d["left"]), from_json(d["right"]))
    if k == "iff":
        return Iff(from_json(d["left"]), from_json(d["right"]))
    if k == "if":
        return IfF(from_json(d["cond"]), from_json(d["then"]), from_json(d["else"]))
    if k in ("forall", "exists"):
        binders = tuple((b["name"], b["sort"]) for b in d["binders"])
        return Quant(k, binders, from_json(d["body"]))
    raise ValueError(f"unknown formula kind {k!r}")
