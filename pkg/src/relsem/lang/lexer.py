from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # INT IDENT OP ANN_OPEN ANN_CLOSE EOF
    text: str
    line: int
    col: int
    end_line: int
    end_col: int


_OPS = [
    "<=>", "=>", "->", "==", "!=", "/=", "<=", ">=", "&&", "||",
    "<", ">", "=", "+", "-", "*", "/", "%", "!", "(", ")", "{", "}",
    ",", ";", ":", ".",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<ann_open>/\*@)
  | (?P<ann_close>@\*/)
  | (?P<comment>//[^\n]*|/\*(?!@)(?:.|\n)*?\*/)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\#[0-9]+)?(?:\$[01])?)
  | (?P<op>"""
    + "|".join(re.escape(o) for o in _OPS)
    + r""")
    """,
    re.VERBOSE,
)


def tokenize(text: str, allow_fresh: bool = False) -> list[Token]:
    """Split ``text`` into tokens; ``allow_fresh`` admits ``v#k`` names."""
    tokens: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        end_line = line + chunk.count("\n")
        end_col = (len(chunk) - chunk.rfind("\n")) if "\n" in chunk else col + len(chunk)
        if kind == "ident" and "#" in chunk and not allow_fresh:
            raise ParseError(f"identifier {chunk!r} may not contain '#'", line, col)
        if kind not in ("ws", "comment"):
            tokens.append(
                Token(
                    {"int": "INT", "ident": "IDENT", "op": "OP",
                     "ann_open": "ANN_OPEN", "ann_close": "ANN_CLOSE"}[kind],
                    chunk, line, col, end_line, end_col - 1,
                )
            )
        line, col, pos = end_line, end_col, m.end()
    tokens.append(Token("EOF", "", line, col, line, col))
    return tokens
