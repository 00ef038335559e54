"""Concrete text grammar for terms, with an exact round-tripping printer.

    ndterm   := summand ('+' summand)*          (left-nested)
    summand  := '0' | action '.' patom | '(' ndterm ')'
    patom    := 'D' '(' ndterm ')' | '(' pterm ')'
    pterm    := patom ('+[' rational ']' pterm)?   (right-associative)
    rational := integer '/' positive-integer
    action   := [a-z][a-z0-9_]*                 ('tau' is the silent action)

Choice weights outside (0,1) are rejected at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .rat import ZERO, ONE, rat
from .terms import (
    Action,
    Dirac,
    NdTerm,
    PChoice,
    Prefix,
    PTerm,
    Sum,
    Zero,
    ZERO_TERM,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int, token: str):
        super().__init__(f"{message} at {line}:{column} (token {token!r})")
        self.line = line
        self.column = column
        self.token = token


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<PLUSSQ>\+\[)
  | (?P<PLUS>\+)
  | (?P<LPAR>\()
  | (?P<RPAR>\))
  | (?P<RSQ>\])
  | (?P<DOT>\.)
  | (?P<SLASH>/)
  | (?P<DIRAC>D)
  | (?P<INT>\d+)
  | (?P<IDENT>[a-z][a-z0-9_]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character", line, col, text[pos])
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "WS":
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("EOF", "<eof>", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str) -> ParseError:
        tok = self.current
        return ParseError(message, tok.line, tok.column, tok.text)

    def accept(self, kind: str):
        if self.current.kind == kind:
            tok = self.current
            self.pos += 1
            return tok
        return None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.accept(kind)
        if tok is None:
            raise self.error(f"expected {what}")
        return tok

    def parse_ndterm(self) -> NdTerm:
        term = self.parse_summand()
        while self.accept("PLUS"):
            term = Sum(term, self.parse_summand())
        return term

    def parse_summand(self) -> NdTerm:
        if self.current.kind == "INT" and self.current.text == "0":
            self.pos += 1
            return ZERO_TERM
        if self.current.kind == "IDENT":
            name = self.accept("IDENT").text
            self.expect("DOT", "'.' after action")
            return Prefix(Action(name), self.parse_patom())
        if self.accept("LPAR"):
            term = self.parse_ndterm()
            self.expect("RPAR", "')'")
            return term
        raise self.error("expected '0', an action prefix, or '('")

    def parse_patom(self) -> PTerm:
        if self.accept("DIRAC"):
            self.expect("LPAR", "'(' after 'D'")
            body = self.parse_ndterm()
            self.expect("RPAR", "')'")
            return Dirac(body)
        if self.accept("LPAR"):
            term = self.parse_pterm()
            self.expect("RPAR", "')'")
            return term
        raise self.error("expected 'D(' or '('")

    def parse_pterm(self) -> PTerm:
        left = self.parse_patom()
        if self.accept("PLUSSQ"):
            weight = self.parse_rational()
            self.expect("RSQ", "']'")
            if not (ZERO < weight < ONE):
                raise self.error(f"choice weight {weight} outside (0,1)")
            right = self.parse_pterm()
            return PChoice(left, weight, right)
        return left

    def parse_rational(self):
        num = self.expect("INT", "an integer numerator")
        self.expect("SLASH", "'/'")
        den = self.expect("INT", "a positive denominator")
        if int(den.text) == 0:
            raise self.error("zero denominator")
        return rat(int(num.text), int(den.text))

    def finish(self, term):
        if self.current.kind != "EOF":
            raise self.error("trailing input")
        return term


def parse_nd(text: str) -> NdTerm:
    p = _Parser(text)
    return p.finish(p.parse_ndterm())


def parse_p(text: str) -> PTerm:
    p = _Parser(text)
    return p.finish(p.parse_pterm())


def parse_term(text: str):
    """Parse either sort; non-deterministic terms are tried first."""
    try:
        return parse_nd(text)
    except ParseError as nd_err:
        try:
            return parse_p(text)
        except ParseError:
            raise nd_err from None


def print_nd(term: NdTerm) -> str:
    if isinstance(term, Zero):
        return "0"
    if isinstance(term, Prefix):
        return f"{term.action.name}.{_print_patom(term.body)}"
    if isinstance(term, Sum):
        left = print_nd(term.left)
        right = print_nd(term.right)
        if isinstance(term.right, Sum):
            right = f"({right})"
        return f"{left} + {right}"
    raise TypeError(f"not an NdTerm: {term!r}")


def _print_patom(p: PTerm) -> str:
    if isinstance(p, Dirac):
        return f"D({print_nd(p.body)})"
    return f"({print_p(p)})"


def print_p(p: PTerm) -> str:
    if isinstance(p, Dirac):
        return f"D({print_nd(p.body)})"
    if isinstance(p, PChoice):
        w = p.weight
        return f"{_print_patom(p.left)} +[{w.numerator}/{w.denominator}] {print_p(p.right)}"
    raise TypeError(f"not a PTerm: {p!r}")


def print_term(term) -> str:
    if isinstance(term, NdTerm):
        return print_nd(term)
    if isinstance(term, PTerm):
        return print_p(term)
    raise TypeError(f"not a term: {term!r}")
