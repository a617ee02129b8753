"""Finite-domain formula evaluation.

Two evaluators share one semantics: quantified variables (of either sort)
range over the machine integers of the configured ``Bounds``, terms are
unbounded Python integers, and theory functions are computed by unrolling
their axioms.

``naive_holds`` is a direct transcription of that semantics and serves as
the reference. ``Evaluator`` compiles formulas to closures and searches for
witnesses with equality propagation, which makes it fast enough to check
whole programs; it is tested against the reference.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping, Optional, Sequence

from relsem import formula as F
from relsem.oracle.semantics import (
    ARITH,
    COMPARE,
    MAX_DEPTH,
    Bounds,
    EvaluationError,
    Theory,
    UnsupportedTheory,
)

Env = dict  # variable id -> int | bool


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low

_OR_NEG = {"and": "or", "or": "and", "exists": "forall", "forall": "exists"}


# Compiled nodes identify variables by small integers; ``fv`` is a bitmask.


class _Node:
    __slots__ = ("kind", "kids", "fv", "fn", "data", "neg")

    def __init__(self, kind: str, kids: tuple, fv: int, fn: Callable, data=None):
        self.kind = kind
        self.kids = kids
        self.fv = fv
        self.fn = fn
        self.data = data
        self.neg: Optional[_Node] = None


class _Term:
    __slots__ = ("fn", "fv", "var")

    def __init__(self, fn: Callable, fv: int, var: Optional[int] = None):
        self.fn = fn
        self.fv = fv
        self.var = var


def _union(parts: Iterable[int]) -> int:
    out = 0
    for p in parts:
        out |= p
    return out


class Evaluator:
    """Compiling evaluator with witness search over ``bounds.values``."""

    def __init__(self, bounds: Bounds = Bounds.symmetric(7), theory: Optional[Theory] = None):
        self.bounds = bounds
        self.theory = theory or Theory()
        self.values = bounds.values
        self._cache: dict[int, tuple[F.Node, object]] = {}
        self._memo: dict[tuple, object] = {}
        self._rules: dict[str, tuple[tuple[F.Var, ...], Callable]] = {}
        self._depth = 0
        self._serial = itertools.count()
        self._ids: dict[F.Var, int] = {}
        self._vars: list[F.Var] = []

    # ---------------------------------------------------------- public API

    def holds(self, f: F.Formula, env: Optional[Mapping[F.Var, int]] = None) -> bool:
        c = self._compiled(f)
        env, mask = self._env(env)
        self._check_bound(c.fv, mask)
        return bool(self._run(c.fn, env))

    def value(self, t: F.Term, env: Optional[Mapping[F.Var, int]] = None) -> int:
        c = self._compiled(t)
        env, mask = self._env(env)
        self._check_bound(c.fv, mask)
        return self._run(c.fn, env)

    def find(
        self, f: F.Formula, env: Optional[Mapping[F.Var, int]] = None
    ) -> Optional[dict[F.Var, int]]:
        """A binding of the free variables of ``f`` outside ``env`` that satisfies it."""
        c = self._compiled(f)
        env, mask = self._env(env)
        pending = c.fv & ~mask
        out = self._run(lambda e: self._solve(pending, [c], e), env)
        if out is None:
            return None
        return {self._vars[i]: out.get(i, 0) for i in _bits(pending)}

    def solutions(
        self,
        f: F.Formula,
        over: Sequence[F.Var],
        env: Optional[Mapping[F.Var, int]] = None,
        limit: Optional[int] = None,
    ) -> set[tuple[int, ...]]:
        """The distinct values of ``over`` in the models of ``f`` that extend ``env``."""
        c = self._compiled(f)
        env, mask = self._env(env)
        ids = [self._id(v) for v in over]
        pending = c.fv & ~mask
        found: set[tuple[int, ...]] = set()

        def accept(e: Env) -> bool:
            found.add(tuple(e.get(i, 0) for i in ids))
            return limit is not None and len(found) >= limit

        self._run(lambda e: self._solve(pending, [c], e, accept), env)
        # variables ``f`` does not mention are unconstrained
        free = [k for k, i in enumerate(ids) if not (c.fv >> i) & 1 and i not in env]
        if not free:
            return found
        out: set[tuple[int, ...]] = set()
        for row in found:
            for vals in itertools.product(self.values, repeat=len(free)):
                r = list(row)
                for k, v in zip(free, vals):
                    r[k] = v
                out.add(tuple(r))
        return out

    def counterexample(
        self, f: F.Formula, env: Optional[Mapping[F.Var, int]] = None
    ) -> Optional[dict[F.Var, int]]:
        """None when ``f`` holds for every binding of its free variables, else a witness."""
        return self.find(F.Not(f), env)

    def valid(self, f: F.Formula, env: Optional[Mapping[F.Var, int]] = None) -> bool:
        return self.counterexample(f, env) is None

    def call(self, fn: str, args: tuple[int, ...]) -> object:
        key = (fn, args)
        if key in self._memo:
            return self._memo[key]
        params, body = self._rule(fn)
        if len(params) != len(args):
            raise EvaluationError(f"arity mismatch calling '{fn}'")
        self._depth += 1
        try:
            if self._depth > MAX_DEPTH:
                raise EvaluationError(f"recursion too deep evaluating '{fn}'")
            out = body(dict(zip(params, args)))
        finally:
            self._depth -= 1
        self._memo[key] = out
        return out

    # ----------------------------------------------------------- plumbing

    def _id(self, v: F.Var) -> int:
        i = self._ids.get(v)
        if i is None:
            i = self._ids[v] = len(self._vars)
            self._vars.append(v)
        return i

    def _env(self, env: Optional[Mapping[F.Var, int]]) -> tuple[Env, int]:
        out: Env = {}
        mask = 0
        for v, val in (env or {}).items():
            i = self._id(v)
            out[i] = val
            mask |= 1 << i
        return out, mask

    def _run(self, fn: Callable, env: Env):
        try:
            return fn(env)
        except KeyError as e:
            v = e.args[0]
            name = F.var_text(self._vars[v]) if isinstance(v, int) else str(v)
            raise EvaluationError(f"unbound symbol '{name}'") from None
        except RecursionError:
            raise EvaluationError("recursion too deep while evaluating") from None

    def _check_bound(self, fv: int, mask: int) -> None:
        missing = sorted(F.var_text(self._vars[i]) for i in _bits(fv & ~mask))
        if missing:
            raise EvaluationError(f"unbound symbol '{missing[0]}'")

    def _compiled(self, n: F.Node):
        hit = self._cache.get(id(n))
        if hit is not None and hit[0] is n:
            return hit[1]
        c = self._formula(n, {}) if F.is_formula(n) else self._term(n, {})
        self._cache[id(n)] = (n, c)
        return c

    def _rule(self, fn: str):
        hit = self._rules.get(fn)
        if hit is not None:
            return hit
        rule = self.theory.rules.get(fn)
        if rule is None:
            raise UnsupportedTheory(f"no computation rule for '{fn}'")
        params = tuple(F.lvar(f"{p}@{fn}") for p in rule.params)
        scope = {p: v for p, v in zip(rule.params, params)}
        ids = tuple(self._id(v) for v in params)

        def build(f: F.Formula) -> Callable:
            if isinstance(f, F.IfF):
                cond, a, b = self._formula(f.cond, scope).fn, build(f.then), build(f.else_)
                return lambda env: a(env) if cond(env) else b(env)
            own = tuple(F.lvar(p) for p in rule.params)
            target = F.App(fn, own) if not rule.predicate else F.Pred(fn, own)
            other = f.right if f.left == target else f.left
            return (self._formula(other, scope) if rule.predicate else self._term(other, scope)).fn

        hit = (ids, build(rule.body))
        self._rules[fn] = hit
        return hit

    # ------------------------------------------------------------ compile

    def _term(self, t: F.Term, scope: dict[str, F.Var]) -> _Term:
        if isinstance(t, F.IntLit):
            v = t.value
            return _Term(lambda env: v, 0)
        if isinstance(t, F.Var):
            key = self._id(scope.get(t.name, t) if t.tag == F.LOG else t)
            return _Term(lambda env: env[key], 1 << key, key)
        if isinstance(t, F.Neg):
            a = self._term(t.arg, scope)
            af = a.fn
            return _Term(lambda env: -af(env), a.fv)
        if isinstance(t, F.BinOp):
            a, b = self._term(t.left, scope), self._term(t.right, scope)
            op, af, bf = ARITH[t.op], a.fn, b.fn
            return _Term(lambda env: op(af(env), bf(env)), a.fv | b.fv)
        if isinstance(t, F.Ite):
            c = self._formula(t.cond, scope)
            a, b = self._term(t.then, scope), self._term(t.else_, scope)
            cf, af, bf = c.fn, a.fn, b.fn
            return _Term(lambda env: af(env) if cf(env) else bf(env), c.fv | a.fv | b.fv)
        if isinstance(t, F.App):
            if t.fn == F.MIN_INT_NAME and not t.args:
                lo = self.bounds.min_int
                return _Term(lambda env: lo, 0)
            if t.fn == F.MAX_INT_NAME and not t.args:
                hi = self.bounds.max_int
                return _Term(lambda env: hi, 0)
            return self._apply(t.fn, t.args, scope)
        raise TypeError(f"not a term: {t!r}")

    def _apply(self, name: str, args: tuple, scope) -> _Term:
        cs = [self._term(a, scope) for a in args]
        fns = tuple(c.fn for c in cs)
        call = self.call
        return _Term(lambda env: call(name, tuple(f(env) for f in fns)), _union(c.fv for c in cs))

    def _formula(self, f: F.Formula, scope: dict[str, F.Var]) -> _Node:
        if isinstance(f, F.BoolLit):
            v = f.value
            return _Node("bool", (), 0, lambda env: v, v)
        if isinstance(f, F.Cmp):
            return self._cmp(f.op, self._term(f.left, scope), self._term(f.right, scope))
        if isinstance(f, F.Pred):
            t = self._apply(f.fn, f.args, scope)
            return _Node("pred", (), t.fv, t.fn)
        if isinstance(f, F.Not):
            return self._neg(self._formula(f.arg, scope))
        if isinstance(f, (F.And, F.Or)):
            kids = tuple(self._formula(a, scope) for a in f.args)
            return self._junction("and" if isinstance(f, F.And) else "or", kids)
        if isinstance(f, F.Implies):
            a, b = self._formula(f.left, scope), self._formula(f.right, scope)
            return self._implies(a, b)
        if isinstance(f, F.Iff):
            a, b = self._formula(f.left, scope), self._formula(f.right, scope)
            return self._iff(a, b)
        if isinstance(f, F.IfF):
            c, a, b = (self._formula(x, scope) for x in (f.cond, f.then, f.else_))
            return self._if(c, a, b)
        if isinstance(f, F.Quant):
            inner = dict(scope)
            keys = []
            for name in f.names:
                # unique internal names: lifted binders can never clash
                key = F.lvar(f"{name}@{next(self._serial)}")
                inner[name] = key
                keys.append(self._id(key))
            return self._quant(f.kind, tuple(keys), self._formula(f.body, inner))
        raise TypeError(f"not a formula: {f!r}")

    # node constructors, shared by compilation and negation

    def _cmp(self, op: str, a: _Term, b: _Term) -> _Node:
        test, af, bf = COMPARE[op], a.fn, b.fn
        return _Node("cmp", (), a.fv | b.fv, lambda env: test(af(env), bf(env)), (op, a, b))

    def _junction(self, kind: str, kids: tuple) -> _Node:
        fns = tuple(k.fn for k in kids)
        if kind == "and":
            fn = lambda env: all(g(env) for g in fns)  # noqa: E731
        else:
            fn = lambda env: any(g(env) for g in fns)  # noqa: E731
        return _Node(kind, kids, _union(k.fv for k in kids), fn)

    def _implies(self, a: _Node, b: _Node) -> _Node:
        af, bf = a.fn, b.fn
        return _Node("implies", (a, b), a.fv | b.fv, lambda env: (not af(env)) or bf(env))

    def _iff(self, a: _Node, b: _Node) -> _Node:
        af, bf = a.fn, b.fn
        return _Node("iff", (a, b), a.fv | b.fv, lambda env: bool(af(env)) == bool(bf(env)))

    def _if(self, c: _Node, a: _Node, b: _Node) -> _Node:
        cf, af, bf = c.fn, a.fn, b.fn
        return _Node("if", (c, a, b), c.fv | a.fv | b.fv, lambda env: af(env) if cf(env) else bf(env))

    def _quant(self, kind: str, keys: tuple, body: _Node) -> _Node:
        pending = _union(1 << k for k in keys)
        solve = self._solve
        if kind == "exists":
            fn = lambda env: solve(pending, [body], env) is not None  # noqa: E731
        else:
            fn = lambda env: solve(pending, [self._neg(body)], env) is None  # noqa: E731
        return _Node(kind, (body,), body.fv & ~pending, fn, keys)

    def _neg(self, c: _Node) -> _Node:
        if c.neg is not None:
            return c.neg
        k = c.kind
        if k == "bool":
            n = _Node("bool", (), 0, (lambda env: False) if c.data else (lambda env: True), not c.data)
        elif k == "cmp":
            op, a, b = c.data
            n = self._cmp(F.NEGATED_CMP[op], a, b)
        elif k == "pred":
            fn = c.fn
            n = _Node("not", (c,), c.fv, lambda env: not fn(env))
        elif k == "not":
            n = c.kids[0]
        elif k in ("and", "or"):
            n = self._junction(_OR_NEG[k], tuple(self._neg(x) for x in c.kids))
        elif k == "implies":
            n = self._junction("and", (c.kids[0], self._neg(c.kids[1])))
        elif k == "iff":
            n = self._iff(c.kids[0], self._neg(c.kids[1]))
        elif k == "if":
            n = self._if(c.kids[0], self._neg(c.kids[1]), self._neg(c.kids[2]))
        elif k in ("exists", "forall"):
            n = self._quant(_OR_NEG[k], c.data, self._neg(c.kids[0]))
        else:
            raise AssertionError(k)
        c.neg = n
        n.neg = c
        return n

    # ------------------------------------------------------------- search

    def _solve(self, pending: int, goals: list, env: Env, accept: Optional[Callable] = None) -> Optional[Env]:
        """Extend ``env`` over ``pending`` so every goal holds, or return None.

        ``accept`` may reject a complete solution to make the search go on.
        """
        work = list(goals)
        keep: list[_Node] = []
        while work:
            g = work.pop()
            if not (g.fv & pending):
                if not g.fn(env):
                    return None
                continue
            k = g.kind
            if k == "and":
                work.extend(g.kids)
                continue
            if k == "if":
                c = g.kids[0]
                if not (c.fv & pending):
                    work.append(g.kids[1] if c.fn(env) else g.kids[2])
                    continue
            elif k == "implies":
                a = g.kids[0]
                if not (a.fv & pending):
                    if a.fn(env):
                        work.append(g.kids[1])
                    continue
            elif k == "exists":
                pending |= _union(1 << x for x in g.data)
                work.append(g.kids[0])
                continue
            keep.append(g)
        if not keep:
            return env if accept is None or accept(env) else None
        for g in keep:
            if g.kind == "cmp" and g.data[0] == "=":
                _, a, b = g.data
                for x, t in ((a, b), (b, a)):
                    if x.var is not None and x.fv & pending and not (t.fv & pending):
                        v = t.fn(env)
                        if not self.bounds.contains(v):
                            return None
                        env2 = dict(env)
                        env2[x.var] = v
                        return self._solve(pending & ~x.fv, keep, env2, accept)
        for i, g in enumerate(keep):
            alts = self._alternatives(g)
            if alts is not None:
                others = keep[:i] + keep[i + 1 :]
                for alt in alts:
                    out = self._solve(pending, others + alt, env, accept)
                    if out is not None:
                        return out
                return None
        var = self._pick(pending, keep)
        rest = pending & ~(1 << var)
        for v in self.values:
            env2 = dict(env)
            env2[var] = v
            out = self._solve(rest, keep, env2, accept)
            if out is not None:
                return out
        return None

    def _alternatives(self, g: _Node) -> Optional[list[list[_Node]]]:
        k = g.kind
        if k == "or":
            return [[x] for x in g.kids]
        if k == "if":
            c, a, b = g.kids
            return [[c, a], [self._neg(c), b]]
        if k == "implies":
            return [[self._neg(g.kids[0])], [g.kids[1]]]
        if k == "iff":
            a, b = g.kids
            return [[a, b], [self._neg(a), self._neg(b)]]
        return None

    @staticmethod
    def _pick(pending: int, goals: list[_Node]) -> int:
        # finish the goal closest to being decided first
        best, count = 0, None
        for g in goals:
            mine = g.fv & pending
            if mine:
                n = mine.bit_count()
                if count is None or n < count:
                    best, count = mine, n
        pool = best or pending
        return (pool & -pool).bit_length() - 1


# ------------------------------------------------------------ reference


def naive_holds(
    f: F.Formula,
    env: Mapping[F.Var, int],
    bounds: Bounds = Bounds.symmetric(7),
    theory: Optional[Theory] = None,
) -> bool:
    """Evaluate ``f`` by literal enumeration of every quantifier."""
    return bool(_Naive(bounds, theory or Theory()).run(f, dict(env)))


class _Naive:
    def __init__(self, bounds: Bounds, theory: Theory):
        self.bounds = bounds
        self.theory = theory
        self.memo: dict[tuple, object] = {}
        self.depth = 0

    def run(self, n: F.Node, env: Env):
        ev = self.run
        if isinstance(n, (F.IntLit, F.BoolLit)):
            return n.value
        if isinstance(n, F.Var):
            if n not in env:
                raise EvaluationError(f"unbound symbol '{F.var_text(n)}'")
            return env[n]
        if isinstance(n, F.Neg):
            return -ev(n.arg, env)
        if isinstance(n, F.BinOp):
            return ARITH[n.op](ev(n.left, env), ev(n.right, env))
        if isinstance(n, (F.Ite, F.IfF)):
            return ev(n.then, env) if ev(n.cond, env) else ev(n.else_, env)
        if isinstance(n, (F.App, F.Pred)):
            if n.fn == F.MIN_INT_NAME and not n.args:
                return self.bounds.min_int
            if n.fn == F.MAX_INT_NAME and not n.args:
                return self.bounds.max_int
            return self.call(n.fn, tuple(ev(a, env) for a in n.args))
        if isinstance(n, F.Cmp):
            return COMPARE[n.op](ev(n.left, env), ev(n.right, env))
        if isinstance(n, F.Not):
            return not ev(n.arg, env)
        if isinstance(n, F.And):
            return all(ev(a, env) for a in n.args)
        if isinstance(n, F.Or):
            return any(ev(a, env) for a in n.args)
        if isinstance(n, F.Implies):
            return (not ev(n.left, env)) or ev(n.right, env)
        if isinstance(n, F.Iff):
            return bool(ev(n.left, env)) == bool(ev(n.right, env))
        if isinstance(n, F.Quant):
            keys = [F.lvar(x) for x in n.names]
            results = []
            for vals in itertools.product(self.bounds.values, repeat=len(keys)):
                inner = dict(env)
                inner.update(zip(keys, vals))
                results.append(bool(ev(n.body, inner)))
            return any(results) if n.kind == "exists" else all(results)
        raise TypeError(n)

    def call(self, fn: str, args: tuple[int, ...]):
        key = (fn, args)
        if key in self.memo:
            return self.memo[key]
        rule = self.theory.rules.get(fn)
        if rule is None:
            raise UnsupportedTheory(f"no computation rule for '{fn}'")
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise EvaluationError(f"recursion too deep evaluating '{fn}'")
        env = {F.lvar(p): a for p, a in zip(rule.params, args)}
        target = (F.Pred if rule.predicate else F.App)(fn, tuple(F.lvar(p) for p in rule.params))
        body = rule.body
        while isinstance(body, F.IfF):
            body = body.then if self.run(body.cond, env) else body.else_
        other = body.right if body.left == target else body.left
        out = self.run(other, env)
        self.depth -= 1
        self.memo[key] = out
        return out


# ---------------------------------------------------------------- stores


def state_env(
    pre: Optional[Mapping[str, int]] = None,
    post: Optional[Mapping[str, int]] = None,
    env: Optional[Mapping[str, int]] = None,
) -> dict[F.Var, int]:
    out: dict[F.Var, int] = {}
    for tag, store in ((F.PRE, pre), (F.POST, post), (F.LOG, env)):
        for name, v in (store or {}).items():
            out[F.Var(name, tag)] = v
    return out


def eval_formula(
    f: F.Formula,
    pre: Optional[Mapping[str, int]] = None,
    post: Optional[Mapping[str, int]] = None,
    env: Optional[Mapping[str, int]] = None,
    dom: int = 7,
    theory: Optional[Theory] = None,
    bounds: Optional[Bounds] = None,
) -> bool:
    """Truth of ``f`` with ``x$0`` read from ``pre`` and ``x$1`` from ``post``.

    Quantifiers range over ``[-dom, dom]`` unless explicit ``bounds`` are given.
    """
    ev = Evaluator(bounds or Bounds.symmetric(dom), theory)
    return ev.holds(f, state_env(pre, post, env))
