"""Recursive-descent parser for MiniWhile programs and the formula syntax."""

from __future__ import annotations

from typing import Optional

from relsem import formula as F
from relsem.lang import ast as A
from relsem.lang.lexer import ParseError, Token, tokenize

FORMULA_KEYWORDS = {
    "TRUE", "FALSE", "NOT", "AND", "OR", "IF", "THEN", "ELSE", "ENDIF",
    "FORALL", "EXISTS", "VAR", "AXIOM",
}
PROGRAM_KEYWORDS = {
    "int", "if", "else", "while", "return", "static", "method", "theory",
    "true", "false",
}
CLAUSES = {"requires", "ensures", "diverges", "assignable", "example", "counterexample"}
LOOP_CLAUSES = {"invariant", "decreases"}
SORTS = {"INT": F.INT_SORT, "BOOL": "BOOL", "int": F.MACHINE_SORT}
_CMP = {"=": "=", "/=": "/=", "!=": "/=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class Parser:
    def __init__(self, text: str, allow_fresh: bool = False, constants: Optional[set[str]] = None):
        self.toks = tokenize(text, allow_fresh=allow_fresh)
        self.pos = 0
        # nullary theory symbols, resolved to applications rather than variables
        self.constants: set[str] = set(constants or ())
        self.mode = "pre"
        self.result_ok = False

    # ------------------------------------------------------------ tokens

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "IDENT") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {what}")
        return self.advance()

    def error(self, message: str, tok: Optional[Token] = None):
        t = tok or self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.col)

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "IDENT" or t.text in PROGRAM_KEYWORDS or "$" in t.text:
            self.error(f"expected {what}")
        return self.advance()

    def span_from(self, start: Token) -> A.Span:
        end = self.toks[self.pos - 1] if self.pos > 0 else start
        return A.Span(start.line, start.col, end.end_line, end.end_col)

    # ----------------------------------------------------------- program

    def program(self) -> A.Program:
        theories, methods = [], []
        while self.tok.kind != "EOF":
            if self.at("theory"):
                theories.append(self.theory())
            elif self.at("method") or self.at("static") or self.at("int"):
                methods.append(self.method())
            else:
                self.error("expected 'theory' or a method declaration")
        return A.Program(tuple(theories), tuple(methods))

    def theory(self) -> A.TheoryDecl:
        start = self.expect("theory")
        name = "theory"
        if self.tok.kind == "IDENT" and not self.at("{"):
            name = self.advance().text
        self.expect("{")
        funs, axioms = [], []
        while not self.at("}"):
            dstart = self.tok
            dname = self.ident("theory symbol")
            self.expect(":")
            if self.accept("AXIOM"):
                self.mode, self.result_ok = "logical", False
                f = self.formula()
                self.expect(";")
                axioms.append(A.Axiom(dname.text, f, self.span_from(dstart)))
                continue
            if self.accept("("):
                sorts = [self.sort()]
                while self.accept(","):
                    sorts.append(self.sort())
                self.expect(")")
                self.expect("->")
            else:
                sorts = []
            res = self.sort()
            self.expect(";")
            funs.append(A.FunDecl(dname.text, tuple(sorts), res, self.span_from(dstart)))
            if not sorts:
                self.constants.add(dname.text)
        self.expect("}")
        return A.TheoryDecl(name, tuple(funs), tuple(axioms), self.span_from(start))

    def sort(self) -> str:
        t = self.tok
        if t.kind == "IDENT" and t.text in ("INT", "BOOL"):
            self.advance()
            return t.text
        self.error("expected sort INT or BOOL")

    def method(self) -> A.MethodDecl:
        start = self.tok
        typed = False
        if self.accept("method") is None:
            self.accept("static")
            self.expect("int")
            typed = True
        name = self.ident("method name").text
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            while True:
                if typed or self.at("int"):
                    self.expect("int")
                params.append(self.ident("parameter name").text)
                if not self.accept(","):
                    break
        self.expect(")")
        contract = self.contract(set(params))
        if not self.at("{"):
            self.error("expected method body")
        body = self.block()
        return A.MethodDecl(name, tuple(params), body, contract, self.span_from(start))

    def contract(self, params: set[str]) -> A.Contract:
        requires, ensures, diverges = [], [], []
        assignable: set[str] = set()
        examples: list[A.IOExample] = []
        if self.tok.kind != "ANN_OPEN":
            return A.Contract(F.TRUE, F.TRUE, F.FALSE)
        start = self.advance()
        while self.tok.kind != "ANN_CLOSE":
            kw = self.tok
            if kw.text in LOOP_CLAUSES:
                self.error(f"'{kw.text}' is only allowed on a while loop")
            if kw.kind != "IDENT" or kw.text not in CLAUSES:
                self.error("expected a contract clause")
            self.advance()
            if kw.text == "assignable":
                assignable.add(self.ident().text)
                while self.accept(","):
                    assignable.add(self.ident().text)
            elif kw.text in ("example", "counterexample"):
                examples.append(self.io_example(kw))
                continue
            else:
                self.mode, self.result_ok = "pre", kw.text == "ensures"
                f = self.formula()
                {"requires": requires, "ensures": ensures, "diverges": diverges}[kw.text].append(f)
            self.expect(";")
        self.advance()
        return A.Contract(
            F.conj(*_flat(requires, F.And)) if requires else F.TRUE,
            F.conj(*_flat(ensures, F.And)) if ensures else F.TRUE,
            F.disj(*_flat(diverges, F.Or)) if diverges else F.FALSE,
            frozenset(assignable),
            tuple(examples),
            self.span_from(start),
        )

    def io_example(self, kw: Token) -> A.IOExample:
        def bindings() -> tuple[tuple[str, int], ...]:
            out = []
            while True:
                name = self.ident().text
                self.expect("=")
                neg = self.accept("-") is not None
                val = int(self.expect_kind("INT", "integer").text)
                out.append((name, -val if neg else val))
                if not self.accept(","):
                    return tuple(out)

        self.expect("input")
        ins = bindings()
        self.expect("output")
        outs = bindings()
        self.expect(";")
        return A.IOExample(ins, outs, kw.text == "example", self.span_from(kw))

    # --------------------------------------------------------- statements

    def block(self) -> A.Command:
        start = self.expect("{")
        items: list[tuple] = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.error("expected '}'")
            if self.at("int"):
                dstart = self.advance()
                name = self.ident("variable name").text
                init = None
                if self.accept("="):
                    init = self.expr()
                self.expect(";")
                items.append(("decl", name, init, self.span_from(dstart)))
            else:
                items.append(("stmt", self.statement()))
        end = self.advance()
        return self._build(items, A.Span(start.line, start.col, end.end_line, end.end_col))

    def _build(self, items: list[tuple], block_span: A.Span) -> A.Command:
        if not items:
            return A.Skip(block_span)
        head, rest = items[0], items[1:]
        if head[0] == "decl":
            _, name, init, dspan = head
            span = A.Span(dspan.line, dspan.col, block_span.end_line, block_span.end_col)
            tail = self._build(rest, block_span) if rest else None
            if init is not None:
                assign = A.Assign(name, init, dspan)
                body = assign if tail is None else A.Seq(assign, tail, span)
            else:
                body = tail if tail is not None else A.Skip(dspan)
            return A.VarBlock(name, body, span)
        stmt = head[1]
        if not rest:
            return stmt
        tail = self._build(rest, block_span)
        return A.Seq(stmt, tail, A.Span(stmt.span.line, stmt.span.col, tail.span.end_line, tail.span.end_col))

    def statement(self) -> A.Command:
        start = self.tok
        if self.at("{"):
            return self.block()
        if self.tok.kind == "ANN_OPEN":
            self.error("annotation not allowed here")
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.statement()
            if self.accept("else"):
                other = self.statement()
                return A.IfThenElse(cond, then, other, self.span_from(start))
            return A.IfThen(cond, then, self.span_from(start))
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            inv, measure = self.loop_annotation()
            body = self.statement()
            return A.While(cond, inv, measure, body, self.span_from(start))
        if self.accept("return"):
            e = self.expr()
            self.expect(";")
            return A.Return(e, self.span_from(start))
        target = self.ident("statement").text
        self.expect("=")
        if self.tok.kind == "IDENT" and self.peek().text == "(" and self.peek().kind == "OP":
            name = self.ident("method name").text
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
            self.expect(")")
            self.expect(";")
            return A.Call(target, name, tuple(args), self.span_from(start))
        e = self.expr()
        self.expect(";")
        return A.Assign(target, e, self.span_from(start))

    def loop_annotation(self) -> tuple[Optional[F.Formula], Optional[F.Term]]:
        if self.tok.kind != "ANN_OPEN":
            return None, None
        self.advance()
        inv = measure = None
        self.mode, self.result_ok = "pre", False
        invs = []
        while self.at("invariant"):
            self.advance()
            invs.append(self.formula())
            self.expect(";")
        if invs:
            inv = F.conj(*_flat(invs, F.And))
        if self.at("decreases"):
            if inv is None:
                self.error("'decreases' requires a preceding 'invariant'")
            self.advance()
            measure = self.term()
            self.expect(";")
        if self.tok.kind != "ANN_CLOSE":
            if self.tok.kind == "IDENT" and self.tok.text in CLAUSES:
                self.error(f"'{self.tok.text}' is not allowed on a loop")
            self.error("expected 'invariant', 'decreases' or '@*/'")
        self.advance()
        return inv, measure

    # -------------------------------------------------------- expressions

    def expr(self) -> A.Expr:
        return self._bin_left(self._and_expr, ("||",))

    def _and_expr(self) -> A.Expr:
        return self._bin_left(self._eq_expr, ("&&",))

    def _eq_expr(self) -> A.Expr:
        return self._bin_once(self._rel_expr, ("==", "!="))

    def _rel_expr(self) -> A.Expr:
        return self._bin_once(self._add_expr, ("<", "<=", ">", ">="))

    def _add_expr(self) -> A.Expr:
        return self._bin_left(self._mul_expr, ("+", "-"))

    def _mul_expr(self) -> A.Expr:
        return self._bin_left(self._unary_expr, ("*", "/", "%"))

    def _bin_left(self, sub, ops) -> A.Expr:
        start = self.tok
        left = sub()
        while self.tok.kind == "OP" and self.tok.text in ops:
            op = self.advance().text
            right = sub()
            left = A.BinaryE(op, left, right, self.span_from(start))
        return left

    def _bin_once(self, sub, ops) -> A.Expr:
        start = self.tok
        left = sub()
        if self.tok.kind == "OP" and self.tok.text in ops:
            op = self.advance().text
            right = sub()
            left = A.BinaryE(op, left, right, self.span_from(start))
        return left

    def _unary_expr(self) -> A.Expr:
        start = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "INT":
                return A.IntE(-int(self.advance().text), self.span_from(start))
            return A.UnaryE("-", self._unary_expr(), self.span_from(start))
        if self.at("!"):
            self.advance()
            return A.UnaryE("!", self._unary_expr(), self.span_from(start))
        return self._primary_expr()

    def _primary_expr(self) -> A.Expr:
        start = self.tok
        if start.kind == "INT":
            self.advance()
            return A.IntE(int(start.text), self.span_from(start))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("true"):
            return A.BoolE(True, self.span_from(start))
        if self.accept("false"):
            return A.BoolE(False, self.span_from(start))
        if self.at("Base") and self.peek().text == ".":
            self.advance()
            self.advance()
        if self.at("MIN_INT") or self.at("MAX_INT"):
            return A.LimitE(self.advance().text, self.span_from(start))
        name = self.ident("expression")
        return A.VarE(name.text, self.span_from(start))

    # ----------------------------------------------------------- formulas

    def formula(self, bound: frozenset[str] = frozenset()) -> F.Formula:
        return self._as_formula(self._iff(bound), self.tok)

    def term(self, bound: frozenset[str] = frozenset()) -> F.Term:
        start = self.tok
        return self._as_term(self._iff(bound), start)

    def _as_formula(self, n, tok: Token) -> F.Formula:
        if isinstance(n, F.App):
            return F.Pred(n.fn, n.args)
        if not F.is_formula(n):
            self.error("expected a formula, not a term", tok)
        return n

    def _as_term(self, n, tok: Token) -> F.Term:
        if not F.is_term(n):
            self.error("expected a term, not a formula", tok)
        return n

    def _iff(self, b):
        start = self.tok
        left = self._implies(b)
        while self.accept("<=>"):
            right = self._implies(b)
            left = F.Iff(self._as_formula(left, start), self._as_formula(right, start))
        return left

    def _implies(self, b):
        start = self.tok
        left = self._or(b)
        if self.accept("=>"):
            right = self._implies(b)
            return F.Implies(self._as_formula(left, start), self._as_formula(right, start))
        return left

    def _or(self, b):
        start = self.tok
        args = [self._and(b)]
        while self.accept("OR"):
            args.append(self._and(b))
        if len(args) == 1:
            return args[0]
        return F.Or(tuple(self._as_formula(a, start) for a in args))

    def _and(self, b):
        start = self.tok
        args = [self._not(b)]
        while self.accept("AND"):
            args.append(self._not(b))
        if len(args) == 1:
            return args[0]
        return F.And(tuple(self._as_formula(a, start) for a in args))

    def _not(self, b):
        start = self.tok
        if self.accept("NOT"):
            return F.Not(self._as_formula(self._not(b), start))
        return self._cmp(b)

    def _cmp(self, b):
        start = self.tok
        left = self._add(b)
        if self.tok.kind == "OP" and self.tok.text in _CMP:
            op = _CMP[self.advance().text]
            right = self._add(b)
            return F.Cmp(op, self._as_term(left, start), self._as_term(right, start))
        return left

    def _add(self, b):
        start = self.tok
        left = self._mul(b)
        while self.tok.kind == "OP" and self.tok.text in ("+", "-"):
            op = self.advance().text
            right = self._mul(b)
            left = F.BinOp(op, self._as_term(left, start), self._as_term(right, start))
        return left

    def _mul(self, b):
        start = self.tok
        left = self._unary(b)
        while self.tok.kind == "OP" and self.tok.text in ("*", "/", "%"):
            op = self.advance().text
            right = self._unary(b)
            left = F.BinOp(op, self._as_term(left, start), self._as_term(right, start))
        return left

    def _unary(self, b):
        start = self.tok
        if self.accept("-"):
            if self.tok.kind == "INT":
                return F.IntLit(-int(self.advance().text))
            return F.Neg(self._as_term(self._unary(b), start))
        return self._primary(b)

    def _primary(self, b):
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return F.IntLit(int(t.text))
        if self.accept("("):
            n = self._iff(b)
            self.expect(")")
            return n
        if self.accept("TRUE"):
            return F.TRUE
        if self.accept("FALSE"):
            return F.FALSE
        if self.accept("IF"):
            cond = self.formula(b)
            self.expect("THEN")
            then = self._iff(b)
            self.expect("ELSE")
            other = self._iff(b)
            self.expect("ENDIF")
            if F.is_formula(then) or F.is_formula(other):
                return F.IfF(cond, self._as_formula(then, t), self._as_formula(other, t))
            return F.Ite(cond, then, other)
        if t.text in ("FORALL", "EXISTS") and t.kind == "IDENT":
            self.advance()
            self.expect("(")
            binders = [self._binder()]
            while self.accept(","):
                binders.append(self._binder())
            self.expect(")")
            self.expect(":")
            names = {n for n, _ in binders}
            body = self.formula(b | names)
            return F.Quant("forall" if t.text == "FORALL" else "exists", tuple(binders), body)
        if self.accept("VAR"):
            name = self.ident("program variable").text
            return F.pre(name)
        if self.at("Base") and self.peek().text == ".":
            self.advance()
            self.advance()
            t = self.tok
        if t.kind != "IDENT" or t.text in FORMULA_KEYWORDS:
            self.error("expected a formula")
        self.advance()
        name = t.text
        if self.accept("("):
            args = [self.term(b)]
            while self.accept(","):
                args.append(self.term(b))
            self.expect(")")
            return F.App(name, tuple(args))
        if name.endswith("$0"):
            return F.pre(name[:-2])
        if name.endswith("$1"):
            return F.post(name[:-2])
        if name in b:
            return F.lvar(name)
        if name in (F.MIN_INT_NAME, F.MAX_INT_NAME) or name in self.constants:
            return F.App(name)
        if name == A.RESULT and self.result_ok:
            return F.post(name)
        if self.mode == "pre":
            return F.pre(name)
        return F.lvar(name)

    def _binder(self) -> tuple[str, str]:
        name = self.tok
        if name.kind != "IDENT" or name.text in FORMULA_KEYWORDS or "$" in name.text:
            self.error("expected a bound variable")
        self.advance()
        sort = F.MACHINE_SORT
        if self.accept(":"):
            s = self.tok
            if s.kind != "IDENT" or s.text not in SORTS:
                self.error("expected sort")
            self.advance()
            sort = SORTS[s.text]
        return name.text, sort


def _flat(fs: list, kind: type) -> list:
    out = []
    for f in fs:
        out.extend(f.args if isinstance(f, kind) else (f,))
    return out


def parse_program(text: str) -> A.Program:
    """Parse MiniWhile source text. Raises ``ParseError`` with line/column."""
    return Parser(text).program()


def parse_command(text: str) -> A.Command:
    """Parse a single statement (or block)."""
    p = Parser(text)
    c = p.statement()
    if p.tok.kind != "EOF":
        p.error("expected end of input")
    return c


def parse_expr(text: str) -> A.Expr:
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error("expected end of input")
    return e


def parse_formula(text: str, mode: str = "logical", constants=(), result: bool = False) -> F.Formula:
    """Parse the textual formula syntax produced by ``formula.render``.

    ``mode`` decides what a bare free identifier means: ``"logical"`` (a
    logical variable) or ``"pre"`` (the pre-state value of that program
    variable, as in contract annotations).
    """
    p = Parser(text, allow_fresh=True, constants=set(constants))
    p.mode, p.result_ok = mode, result
    f = p.formula()
    if p.tok.kind != "EOF":
        p.error("expected end of formula")
    return f


def parse_term(text: str, mode: str = "logical", constants=()) -> F.Term:
    p = Parser(text, allow_fresh=True, constants=set(constants))
    p.mode = mode
    t = p.term()
    if p.tok.kind != "EOF":
        p.error("expected end of term")
    return t
