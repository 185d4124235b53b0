"""Tokenizer and recursive-descent parser shared by the spec language and the formula language."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable

from . import fo
from .terms import Call, Constant, Term


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    severity: str
    message: str
    file: str = "<input>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "op", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<op>\|->|~>|->|!=|[(){},;/.&|!=\[\]<>*])
  | (?P<id>[A-Za-z0-9_$'][A-Za-z0-9_$']*)
    """,
    re.VERBOSE,
)


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    out: list[Token] = []
    line, col, i = 1, 1, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError([Diagnostic(line, col, "error", f"unexpected character {text[i]!r}", file)])
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("op", "id"):
                out.append(Token(kind, chunk, line, col))
            col += len(chunk)
        i = m.end()
    out.append(Token("eof", "", line, col))
    return out


class Parser:
    """Base parser: terms, facts and first-order formulas.

    `is_constant` decides whether a bare identifier in a formula is a constant or a variable.
    """

    KEYWORDS = frozenset({"exists", "forall", "true", "false"})

    def __init__(self, text: str, file: str = "<input>", is_constant: Callable[[str], bool] | None = None):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self.is_constant = is_constant or (lambda name: False)

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError([Diagnostic(t.line, t.col, "error", message, self.file)])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected '{text}' but found '{got}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "id":
            got = self.tok.text or "end of input"
            raise self.error(f"expected {what} but found '{got}'")
        return self.advance()

    def pos(self) -> tuple[int, int]:
        return (self.tok.line, self.tok.col)

    # -- terms
    def ground_term(self) -> Term:
        name = self.ident("term").text
        if self.accept("("):
            args: list[Term] = []
            if not self.at(")"):
                args.append(self.ground_term())
                while self.accept(","):
                    args.append(self.ground_term())
            self.expect(")")
            return Call(name, tuple(args))
        return Constant(name)

    def fact(self) -> fo.Fact:
        name = self.ident("relation name").text
        args: list[Term] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.ground_term())
                while self.accept(","):
                    args.append(self.ground_term())
            self.expect(")")
        return fo.Fact(name, tuple(args))

    def arg(self) -> fo.Arg:
        t = self.ident("variable or constant")
        if self.at("("):
            raise self.error("function terms are not allowed inside formulas", t)
        return Constant(t.text) if self.is_constant(t.text) else fo.Var(t.text)

    def var_list(self) -> tuple[fo.Var, ...]:
        vs = [fo.Var(self.ident("variable").text)]
        while self.accept(","):
            vs.append(fo.Var(self.ident("variable").text))
        return tuple(vs)

    # -- formulas (precedence: -> < | < & < unary)
    def formula(self) -> object:
        left = self.disjunction()
        if self.accept("->"):
            right = self.formula()
            return self.make_implies(left, right)
        return left

    def disjunction(self) -> object:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else self.make_or(parts)

    def conjunction(self) -> object:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else self.make_and(parts)

    def unary(self) -> object:
        if self.accept("!"):
            return self.make_not(self.unary())
        if self.at("exists") or self.at("forall"):
            kind = self.advance().text
            vs = self.var_list()
            self.expect(".")
            body = self.formula()
            return self.make_quant(kind, vs, body)
        return self.primary()

    def primary(self) -> object:
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.accept("true"):
            return fo.TrueF()
        if self.accept("false"):
            return fo.FalseF()
        if self.tok.kind != "id":
            got = self.tok.text or "end of input"
            raise self.error(f"expected a formula but found '{got}'")
        if self.peek().text == "(":
            name = self.advance().text
            self.expect("(")
            args: list[fo.Arg] = []
            if not self.at(")"):
                args.append(self.arg())
                while self.accept(","):
                    args.append(self.arg())
            self.expect(")")
            return fo.Atom(name, tuple(args))
        if self.peek().text in ("=", "!="):
            left = self.arg()
            op = self.advance().text
            right = self.arg()
            eq = fo.Eq(left, right)
            return eq if op == "=" else fo.Not(eq)
        return self.bare_identifier()

    def bare_identifier(self) -> object:
        t = self.advance()
        raise self.error(f"'{t.text}' is not a formula (relation atoms need parentheses)", t)

    # -- node builders (overridden by the formula language)
    def make_and(self, parts: list) -> object:
        return fo.conj(parts)

    def make_or(self, parts: list) -> object:
        return fo.disj(parts)

    def make_not(self, body: object) -> object:
        return fo.Not(body)

    def make_implies(self, left: object, right: object) -> object:
        return fo.Implies(left, right)

    def make_quant(self, kind: str, vs: tuple[fo.Var, ...], body: object) -> object:
        return fo.Exists(vs, body) if kind == "exists" else fo.Forall(vs, body)

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected '{self.tok.text}' after end of input")


def parse_formula(text: str, constants: Iterable[str] = ()) -> fo.Formula:
    names = set(constants)
    p = Parser(text, is_constant=names.__contains__)
    f = p.formula()
    p.done()
    return f


def parse_term(text: str) -> Term:
    p = Parser(text)
    t = p.ground_term()
    p.done()
    return t


def parse_fact(text: str) -> fo.Fact:
    p = Parser(text)
    f = p.fact()
    p.done()
    return f


def parse_instance(text: str) -> fo.Instance:
    """Comma-separated ground facts, e.g. ``P(a), Q(a, f(a))``."""
    p = Parser(text)
    facts = []
    if p.tok.kind != "eof":
        facts.append(p.fact())
        while p.accept(","):
            facts.append(p.fact())
    p.done()
    return fo.Instance(facts)
