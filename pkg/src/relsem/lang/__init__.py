"""MiniWhile front end: parsing, typechecking and rendering."""

from relsem.lang.ast import Program, MethodDecl, TheoryDecl, Contract, Span
from relsem.lang.lexer import ParseError
from relsem.lang.parser import parse_command, parse_expr, parse_formula, parse_program, parse_term
from relsem.lang.printer import render_command, render_program
from relsem.lang.typecheck import Diagnostic, typecheck

__all__ = [
    "Program", "MethodDecl", "TheoryDecl", "Contract", "Span", "ParseError",
    "parse_command", "parse_expr", "parse_formula", "parse_program", "parse_term",
    "render_command", "render_program", "Diagnostic", "typecheck",
]
