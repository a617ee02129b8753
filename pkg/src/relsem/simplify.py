"""Equivalence-preserving formula simplification.

Rules are named so they can be switched individually:

``onepoint``
    ``EXISTS v: v = t AND p`` becomes ``p[t/v]`` (and dually for FORALL with
    an implication or disjunction). Machine-sorted binders range over
    ``[MIN_INT, MAX_INT]``, so unless ``t`` is known to lie in that range a
    guard ``MIN_INT <= t AND t <= MAX_INT`` takes the equation's place.
``flatten``
    nested AND/OR and same-kind quantifier blocks are merged, curried
    implications are uncurried.
``quantifiers``
    existentials are pulled out of conjunctions and out of antecedents
    (becoming universals) so that ``onepoint`` can see their equations.
``unused``
    binders that do not occur in the body are dropped.
``bool``
    literal absorption, double negation, negated comparisons, duplicate and
    complementary conjuncts.
``ite``
    conditionals with a literal condition or identical branches collapse.
``arith``
    ``x+0``, ``x*1``, ``x*0``, ground arithmetic and offset folding
    ``(x+1)-1 -> x``.
``interval``
    within a conjunction, bounds on ``a - b`` for the same variables are
    intersected; a single point becomes ``a = b + k``, an empty range FALSE.
``frame``
    ``x$1 = x$0`` conjuncts are grouped at the end of a conjunction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from relsem import formula as F
from relsem.oracle.semantics import ARITH, COMPARE

ALL_RULES = (
    "onepoint",
    "flatten",
    "quantifiers",
    "unused",
    "bool",
    "ite",
    "arith",
    "interval",
    "frame",
)


@dataclass(frozen=True)
class SimplifyConfig:
    max_passes: int = 25
    rules: frozenset = frozenset(ALL_RULES)

    def __post_init__(self):
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        unknown = set(self.rules) - set(ALL_RULES)
        if unknown:
            raise ValueError(f"unknown simplifier rule(s): {', '.join(sorted(unknown))}")

    @classmethod
    def parse(cls, text: str) -> "SimplifyConfig":
        """Build from a comma-separated rule list such as ``"onepoint,bool"``."""
        names = frozenset(x.strip() for x in text.split(",") if x.strip())
        return cls(rules=names)

    def without(self, *names: str) -> "SimplifyConfig":
        return SimplifyConfig(self.max_passes, self.rules - set(names))


DEFAULT = SimplifyConfig()
NOTHING = SimplifyConfig(rules=frozenset())


def simplify(f: F.Formula, cfg: SimplifyConfig = DEFAULT) -> F.Formula:
    """Rewrite ``f`` to a fixpoint of the enabled rules (at most ``cfg.max_passes`` passes)."""
    if not cfg.rules:
        return f
    s = _Simplifier(cfg)
    for _ in range(cfg.max_passes):
        g = s.formula(f, {})
        if g == f:
            return g
        f = g
    return f


def simplify_term(t: F.Term, cfg: SimplifyConfig = DEFAULT) -> F.Term:
    if not cfg.rules:
        return t
    return _Simplifier(cfg).term(t, {})


def negate(f: F.Formula) -> F.Formula:
    """Negation that never grows the formula: flips literals and comparisons."""
    if isinstance(f, F.BoolLit):
        return F.BoolLit(not f.value)
    if isinstance(f, F.Not):
        return f.arg
    if isinstance(f, F.Cmp):
        return F.Cmp(F.NEGATED_CMP[f.op], f.left, f.right)
    return F.Not(f)


def _conjuncts(f: F.Formula) -> list[F.Formula]:
    return list(f.args) if isinstance(f, F.And) else [f]


def _offset(t: F.Term) -> Optional[tuple[F.Var, int]]:
    if isinstance(t, F.Var):
        return t, 0
    if isinstance(t, F.BinOp) and t.op in "+-":
        if isinstance(t.left, F.Var) and isinstance(t.right, F.IntLit):
            return t.left, t.right.value if t.op == "+" else -t.right.value
        if t.op == "+" and isinstance(t.left, F.IntLit) and isinstance(t.right, F.Var):
            return t.right, t.left.value
    return None


def _plus(t: F.Term, k: int) -> F.Term:
    if k == 0:
        return t
    if k > 0:
        return F.BinOp("+", t, F.IntLit(k))
    return F.BinOp("-", t, F.IntLit(-k))


def _span(t: F.Term) -> Optional[tuple]:
    # what is known about a term without knowing the bounds: MIN_INT <= -1, 1 <= MAX_INT
    if isinstance(t, F.IntLit):
        return t.value, t.value
    if t == F.MIN_INT:
        return None, -1
    if t == F.MAX_INT:
        return 1, None
    return None


def _decide(op: str, a: F.Term, b: F.Term) -> Optional[bool]:
    """Decide a comparison between bounds and small literals, if possible."""
    if not (a in (F.MIN_INT, F.MAX_INT) or b in (F.MIN_INT, F.MAX_INT)):
        return None
    sa, sb = _span(a), _span(b)
    if sa is None or sb is None:
        return None
    (alo, ahi), (blo, bhi) = sa, sb
    lt = ahi is not None and blo is not None and ahi < blo  # a < b for sure
    gt = alo is not None and bhi is not None and alo > bhi
    if op in ("<", "<=") and lt or op in (">", ">=") and gt or op == "/=" and (lt or gt):
        return True
    if op in (">", ">=") and lt or op in ("<", "<=") and gt or op == "=" and (lt or gt):
        return False
    return None


def _is_frame_eq(f: F.Formula) -> Optional[str]:
    if isinstance(f, F.Cmp) and f.op == "=":
        a, b = f.left, f.right
        if isinstance(a, F.Var) and isinstance(b, F.Var) and a.name == b.name:
            if {a.tag, b.tag} == {F.PRE, F.POST}:
                return a.name
    return None


class _Simplifier:
    def __init__(self, cfg: SimplifyConfig):
        self.on = cfg.rules.__contains__

    # -------------------------------------------------------------- terms

    def term(self, t: F.Term, scope: dict) -> F.Term:
        if isinstance(t, (F.IntLit, F.Var)):
            return t
        if isinstance(t, F.Neg):
            a = self.term(t.arg, scope)
            if self.on("arith"):
                if isinstance(a, F.IntLit):
                    return F.IntLit(-a.value)
                if isinstance(a, F.Neg):
                    return a.arg
            return F.Neg(a)
        if isinstance(t, F.BinOp):
            a, b = self.term(t.left, scope), self.term(t.right, scope)
            return self._arith(t.op, a, b) if self.on("arith") else F.BinOp(t.op, a, b)
        if isinstance(t, F.Ite):
            c = self.formula(t.cond, scope)
            a, b = self.term(t.then, scope), self.term(t.else_, scope)
            if self.on("ite"):
                if isinstance(c, F.BoolLit):
                    return a if c.value else b
                if a == b:
                    return a
            return F.Ite(c, a, b)
        if isinstance(t, F.App):
            return F.App(t.fn, tuple(self.term(x, scope) for x in t.args))
        raise TypeError(t)

    @staticmethod
    def _arith(op: str, a: F.Term, b: F.Term) -> F.Term:
        la, lb = isinstance(a, F.IntLit), isinstance(b, F.IntLit)
        if la and lb:
            return F.IntLit(ARITH[op](a.value, b.value))
        zero, one = F.IntLit(0), F.IntLit(1)
        if op == "+":
            if b == zero:
                return a
            if a == zero:
                return b
        elif op == "-":
            if b == zero:
                return a
        elif op == "*":
            if a == zero or b == zero:
                return zero
            if b == one:
                return a
            if a == one:
                return b
        elif op == "/" and b == one:
            return a
        if op in "+-" and lb and isinstance(a, F.BinOp) and a.op in "+-" and isinstance(a.right, F.IntLit):
            k = (a.right.value if a.op == "+" else -a.right.value) + (b.value if op == "+" else -b.value)
            return _plus(a.left, k)
        return F.BinOp(op, a, b)

    # ----------------------------------------------------------- formulas

    def formula(self, f: F.Formula, scope: dict) -> F.Formula:
        on = self.on
        if isinstance(f, F.BoolLit):
            return f
        if isinstance(f, F.Cmp):
            a, b = self.term(f.left, scope), self.term(f.right, scope)
            if on("bool"):
                if isinstance(a, F.IntLit) and isinstance(b, F.IntLit):
                    return F.BoolLit(COMPARE[f.op](a.value, b.value))
                if a == b:
                    return F.BoolLit(f.op in ("=", "<=", ">="))
                known = _decide(f.op, a, b)
                if known is not None:
                    return F.BoolLit(known)
            return F.Cmp(f.op, a, b)
        if isinstance(f, F.Pred):
            return F.Pred(f.fn, tuple(self.term(x, scope) for x in f.args))
        if isinstance(f, F.Not):
            a = self.formula(f.arg, scope)
            if on("bool"):
                if isinstance(a, (F.BoolLit, F.Not, F.Cmp)):
                    return negate(a)
                if isinstance(a, (F.And, F.Or)) and all(isinstance(x, (F.BoolLit, F.Not, F.Cmp)) for x in a.args):
                    kids = [negate(x) for x in a.args]
                    return self._or(kids) if isinstance(a, F.And) else self._and(kids, scope)
            return F.Not(a)
        if isinstance(f, F.And):
            return self._and([self.formula(x, scope) for x in f.args], scope)
        if isinstance(f, F.Or):
            return self._or([self.formula(x, scope) for x in f.args])
        if isinstance(f, F.Implies):
            return self._implies(self.formula(f.left, scope), self.formula(f.right, scope), scope)
        if isinstance(f, F.Iff):
            a, b = self.formula(f.left, scope), self.formula(f.right, scope)
            if on("bool"):
                if a == b:
                    return F.TRUE
                for x, y in ((a, b), (b, a)):
                    if isinstance(x, F.BoolLit):
                        return y if x.value else negate(y)
            return F.Iff(a, b)
        if isinstance(f, F.IfF):
            c = self.formula(f.cond, scope)
            a, b = self.formula(f.then, scope), self.formula(f.else_, scope)
            if on("ite"):
                if isinstance(c, F.BoolLit):
                    return a if c.value else b
                if a == b:
                    return a
                if isinstance(a, F.BoolLit) and isinstance(b, F.BoolLit):
                    return c if a.value else negate(c)
            return F.IfF(c, a, b)
        if isinstance(f, F.Quant):
            inner = dict(scope)
            inner.update(f.binders)
            return self._quant(f.kind, f.binders, self.formula(f.body, inner), scope)
        raise TypeError(f)

    # connectives

    def _and(self, kids: list[F.Formula], scope: dict) -> F.Formula:
        on = self.on
        if on("flatten"):
            flat: list[F.Formula] = []
            for k in kids:
                flat.extend(k.args if isinstance(k, F.And) else [k])
            kids = flat
        if on("bool"):
            seen: set = set()
            out = []
            for k in kids:
                if k == F.FALSE:
                    return F.FALSE
                if k == F.TRUE or k in seen:
                    continue
                seen.add(k)
                out.append(k)
            if any(negate(k) in seen for k in out if isinstance(k, (F.Cmp, F.Not))):
                return F.FALSE
            kids = out
        if on("quantifiers") and any(isinstance(k, F.Quant) and k.kind == "exists" for k in kids):
            return self._pull_exists(kids, scope)
        if on("interval"):
            kids = self._interval(kids)
            if F.FALSE in kids:
                return F.FALSE
        if on("frame"):
            frame = sorted({n for n in map(_is_frame_eq, kids) if n is not None})
            if frame:
                kids = [k for k in kids if _is_frame_eq(k) is None] + F.frame_eq(frame)
        return F.conj(*kids)

    def _or(self, kids: list[F.Formula]) -> F.Formula:
        if self.on("flatten"):
            flat: list[F.Formula] = []
            for k in kids:
                flat.extend(k.args if isinstance(k, F.Or) else [k])
            kids = flat
        if self.on("bool"):
            seen: set = set()
            out = []
            for k in kids:
                if k == F.TRUE:
                    return F.TRUE
                if k == F.FALSE or k in seen:
                    continue
                seen.add(k)
                out.append(k)
            if any(negate(k) in seen for k in out if isinstance(k, (F.Cmp, F.Not))):
                return F.TRUE
            kids = out
        return F.disj(*kids)

    def _implies(self, a: F.Formula, b: F.Formula, scope: dict) -> F.Formula:
        on = self.on
        if on("bool"):
            if a == F.TRUE:
                return b
            if a == F.FALSE or b == F.TRUE or a == b:
                return F.TRUE
            if b == F.FALSE:
                return negate(a)
        if on("flatten") and isinstance(b, F.Implies):
            return self._implies(self._and([a, b.left], scope), b.right, scope)
        if on("quantifiers"):
            if isinstance(a, F.Quant) and a.kind == "exists":
                binders, body = self._rename_apart(a.binders, a.body, F.free_vars(b))
                inner = dict(scope)
                inner.update(binders)
                return self._quant("forall", binders, self._implies(body, b, inner), scope)
            if isinstance(b, F.Quant) and b.kind == "forall":
                binders, body = self._rename_apart(b.binders, b.body, F.free_vars(a))
                inner = dict(scope)
                inner.update(binders)
                return self._quant("forall", binders, self._implies(a, body, inner), scope)
        return F.Implies(a, b)

    # quantifiers

    @staticmethod
    def _rename_apart(binders, body, avoid: Iterable[F.Var], taken: set = frozenset()):
        avoid_names = {v.name for v in avoid if v.tag == F.LOG} | set(taken)
        out, mapping = [], {}
        for name, sort in binders:
            if name in avoid_names:
                new = F.fresh_name()
                mapping[F.lvar(name)] = F.lvar(new)
                out.append((new, sort))
            else:
                out.append((name, sort))
        return tuple(out), F.substitute(body, mapping) if mapping else body

    def _pull_exists(self, kids: list[F.Formula], scope: dict) -> F.Formula:
        plain = [k for k in kids if not (isinstance(k, F.Quant) and k.kind == "exists")]
        avoid = set()
        for k in plain:
            avoid |= F.free_vars(k)
        binders: list = []
        bodies: list[F.Formula] = []
        for k in kids:
            if isinstance(k, F.Quant) and k.kind == "exists":
                others = set()
                for j in kids:
                    if j is not k:
                        others |= F.free_vars(j)
                bs, body = self._rename_apart(k.binders, k.body, others, {n for n, _ in binders})
                binders.extend(bs)
                bodies.append(body)
        inner = dict(scope)
        inner.update(binders)
        body = self._and(plain + bodies, inner)
        return self._quant("exists", tuple(binders), body, scope)

    def _quant(self, kind: str, binders, body: F.Formula, scope: dict) -> F.Formula:
        on = self.on
        binders = tuple(binders)
        if on("unused"):
            used = {v.name for v in F.free_vars(body) if v.tag == F.LOG}
            binders = tuple(b for b in binders if b[0] in used)
        if not binders:
            return body
        if on("bool") and isinstance(body, F.BoolLit):
            return body
        if on("flatten") and isinstance(body, F.Quant) and body.kind == kind:
            names = {n for n, _ in binders}
            if not names & set(body.names):
                return self._quant(kind, binders + body.binders, body.body, scope)
        if on("onepoint"):
            out = self._onepoint(kind, binders, body, scope)
            if out is not None:
                return out
        return F.Quant(kind, binders, body)

    def _needs_guard(self, t: F.Term, sort: str, scope: dict) -> bool:
        if sort == F.INT_SORT:
            return False
        if isinstance(t, F.Var):
            return t.tag == F.LOG and scope.get(t.name) == F.INT_SORT
        if isinstance(t, F.IntLit):
            return not -1 <= t.value <= 1
        return t not in (F.MIN_INT, F.MAX_INT)

    def _find_eq(self, binders, atoms: list[F.Formula], op: str):
        for name, sort in binders:
            v = F.lvar(name)
            for i, a in enumerate(atoms):
                if isinstance(a, F.Cmp) and a.op == op:
                    for x, t in ((a.left, a.right), (a.right, a.left)):
                        if x == v and v not in F.free_vars(t):
                            return name, sort, i, t
        return None

    def _onepoint(self, kind: str, binders, body: F.Formula, scope: dict) -> Optional[F.Formula]:
        inner = dict(scope)
        inner.update(binders)
        if kind == "exists":
            atoms = _conjuncts(body)
            hit = self._find_eq(binders, atoms, "=")
            if hit is None:
                return self._push_into_if(kind, binders, body, scope)
            name, sort, i, t = hit
            guard = [F.in_range(t)] if self._needs_guard(t, sort, inner) else []
            rest = atoms[:i] + guard + atoms[i + 1 :]
            new_body = F.substitute(F.conj(*rest), {F.lvar(name): t})
        else:
            if isinstance(body, F.Implies):
                atoms = _conjuncts(body.left)
                hit = self._find_eq(binders, atoms, "=")
                if hit is None:
                    return self._push_into_if(kind, binders, body, scope)
                name, sort, i, t = hit
                guard = [F.in_range(t)] if self._needs_guard(t, sort, inner) else []
                rest = atoms[:i] + guard + atoms[i + 1 :]
                new_body = F.substitute(F.Implies(F.conj(*rest), body.right), {F.lvar(name): t})
            else:
                atoms = list(body.args) if isinstance(body, F.Or) else [body]
                hit = self._find_eq(binders, atoms, "/=")
                if hit is None:
                    return self._push_into_if(kind, binders, body, scope)
                name, sort, i, t = hit
                rest = F.disj(*(atoms[:i] + atoms[i + 1 :]))
                if self._needs_guard(t, sort, inner):
                    rest = F.Implies(F.in_range(t), rest)
                new_body = F.substitute(rest, {F.lvar(name): t})
        remaining = tuple(b for b in binders if b[0] != name)
        still = dict(scope)
        still.update(remaining)
        return self._quant(kind, remaining, self.formula(new_body, still), scope)

    def _push_into_if(self, kind: str, binders, body: F.Formula, scope: dict) -> Optional[F.Formula]:
        # EXISTS xs: IF c THEN a ELSE b, with c free of xs, splits into the branches
        # when that lets an equation eliminate a binder in one of them.
        if not isinstance(body, F.IfF):
            return None
        names = {n for n, _ in binders}
        if any(v.tag == F.LOG and v.name in names for v in F.free_vars(body.cond)):
            return None
        def helps(branch: F.Formula) -> bool:
            if kind == "exists":
                return self._find_eq(binders, _conjuncts(branch), "=") is not None
            if isinstance(branch, F.Implies):
                return self._find_eq(binders, _conjuncts(branch.left), "=") is not None
            atoms = list(branch.args) if isinstance(branch, F.Or) else [branch]
            return self._find_eq(binders, atoms, "/=") is not None

        if not (helps(body.then) or helps(body.else_)):
            return None
        a = self._quant(kind, binders, body.then, scope)
        b = self._quant(kind, binders, body.else_, scope)
        return F.IfF(body.cond, a, b)

    # conjunction-local rules

    def _interval(self, kids: list[F.Formula]) -> list[F.Formula]:
        groups: dict[tuple, list] = {}
        for i, k in enumerate(kids):
            if not (isinstance(k, F.Cmp) and k.op != "/="):
                continue
            a, b = _offset(k.left), _offset(k.right)
            if a is None or b is None or a[0] == b[0]:
                continue
            (x, kx), (y, ky) = a, b
            c = ky - kx  # x - y op c
            lo, hi = {
                "=": (c, c),
                "<=": (None, c),
                "<": (None, c - 1),
                ">=": (c, None),
                ">": (c + 1, None),
            }[k.op]
            if (y, x) in groups:
                x, y = y, x
                lo, hi = (None if hi is None else -hi), (None if lo is None else -lo)
            groups.setdefault((x, y), []).append((i, lo, hi))
        drop: set[int] = set()
        out = list(kids)
        for (x, y), members in groups.items():
            if len(members) < 2:
                continue
            los = [m[1] for m in members if m[1] is not None]
            his = [m[2] for m in members if m[2] is not None]
            lo = max(los) if los else None
            hi = min(his) if his else None
            if lo is not None and hi is not None:
                if lo > hi:
                    return [F.FALSE]
                if lo == hi:
                    first = members[0][0]
                    out[first] = F.Cmp("=", x, _plus(y, lo))
                    drop |= {m[0] for m in members[1:]}
        return _bounds([k for i, k in enumerate(out) if i not in drop])


def _constant(t: F.Term) -> Optional[tuple]:
    """``t`` as (base, c) meaning base + c, with base None for a literal."""
    if isinstance(t, F.IntLit):
        return None, t.value
    if t in (F.MIN_INT, F.MAX_INT):
        return t, 0
    if isinstance(t, F.BinOp) and t.op in "+-" and t.left in (F.MIN_INT, F.MAX_INT) and isinstance(t.right, F.IntLit):
        return t.left, t.right.value if t.op == "+" else -t.right.value
    return None


def _at_least(p: tuple, q: tuple) -> bool:
    """base_p + c_p >= base_q + c_q for all admissible bounds."""
    (bp, cp), (bq, cq) = p, q
    if bp == bq:
        return cp >= cq
    lo = cp if bp is None else (cp + 1 if bp == F.MAX_INT else None)
    hi = cq if bq is None else (cq - 1 if bq == F.MIN_INT else None)
    return lo is not None and hi is not None and lo >= hi


def _bounds(kids: list[F.Formula]) -> list[F.Formula]:
    """Drop constant bounds on a variable implied by another one."""
    found: dict[F.Var, list] = {}
    for i, k in enumerate(kids):
        if not (isinstance(k, F.Cmp) and k.op in ("<", "<=", ">", ">=")):
            continue
        op, v, c = k.op, _offset(k.left), _constant(k.right)
        if v is None or c is None:
            op, v, c = F.FLIPPED_CMP[op], _offset(k.right), _constant(k.left)
        if v is None or c is None:
            continue
        (x, kx), (base, kc) = v, c
        bound = (base, kc - kx)  # x op base + kc - kx
        if op == "<":
            op, bound = "<=", (base, bound[1] - 1)
        elif op == ">":
            op, bound = ">=", (base, bound[1] + 1)
        found.setdefault(x, []).append((i, op == ">=", bound))
    drop: set[int] = set()
    out = list(kids)
    for x, bs in found.items():
        for lower in (True, False):
            mine = [(i, b) for i, low, b in bs if low == lower]
            for i, b in mine:
                for j, other in mine:
                    if j == i or j in drop:
                        continue
                    stronger = _at_least(other, b) if lower else _at_least(b, other)
                    weaker = _at_least(b, other) if lower else _at_least(other, b)
                    if stronger and (not weaker or j < i):
                        drop.add(i)
                        break
        lits = [(i, low, b[1]) for i, low, b in bs if b[0] is None and i not in drop]
        los = [(c, i) for i, low, c in lits if low]
        his = [(c, i) for i, low, c in lits if not low]
        if los and his:
            (lo, i), (hi, j) = max(los), min(his)
            if lo > hi:
                return [F.FALSE]
            if lo == hi:
                out[i] = F.Cmp("=", x, F.IntLit(lo))
                drop.add(j)
    return [k for i, k in enumerate(out) if i not in drop]
