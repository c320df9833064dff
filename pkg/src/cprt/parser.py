"""Parser for the loop-program source format.

Grammar (UTF-8, ``#`` starts a line comment)::

    program  ::= "vars" ident ("," ident)* NEWLINE
                 "while" linexpr ">" INT "{" stmt+ "}"
    linexpr  ::= term (("+"|"-") term)*
    term     ::= INT "*" ident | ident | INT
    stmt     ::= "inc"   "(" INT ("," INT)* ")" "[" RAT "]" ";"
               | "reset" "(" INT ("," INT)* ")" "[" RAT "]" ";"
    RAT      ::= INT | INT "/" INT

Newlines are significant only after the vars declaration.  Guards written
with ``>=`` are rewritten to ``> b-1``; constant terms in the guard are
folded into the bound.  The parsed program is validated before it is
returned.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError
from .program import Branch, CpProgram, Reset, validate

__all__ = ["parse_program"]

_TOKEN_RE = re.compile(
    r"""
    (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<ws>[^\S\n]+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|[-+*/,;(){}\[\]>])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"vars", "while", "inc", "reset"}


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.text!r})"


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident" and text in _KEYWORDS:
            kind = text
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, text, line, col))
        if kind == "newline":
            line += 1
            col = 1
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.skip_newlines = False

    def peek(self) -> _Token:
        pos = self.pos
        while self.skip_newlines and self.tokens[pos].kind == "newline":
            pos += 1
        return self.tokens[pos]

    def next(self) -> _Token:
        tok = self.peek()
        while self.tokens[self.pos] is not tok:
            self.pos += 1
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        want = text if text is not None else kind
        if tok.kind != kind or (text is not None and tok.text != text):
            found = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want!r}, found {found!r}", tok.line, tok.col, expected=want)
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def integer(self) -> int:
        neg = self.accept("op", "-") is not None
        tok = self.expect("int")
        value = int(tok.text)
        return -value if neg else value

    def rational(self) -> Fraction:
        num = self.integer()
        if self.accept("op", "/"):
            den = self.integer()
            if den == 0:
                tok = self.peek()
                raise ParseError("zero denominator", tok.line, tok.col)
            return Fraction(num, den)
        return Fraction(num)

    def int_vector(self) -> tuple[int, ...]:
        self.expect("op", "(")
        values = [self.integer()]
        while self.accept("op", ","):
            values.append(self.integer())
        self.expect("op", ")")
        return tuple(values)

    def linexpr(self, var_names: tuple[str, ...]) -> tuple[list[int], int]:
        """Collect per-variable coefficients; constant terms fold into the bound."""
        coeffs = [0] * len(var_names)
        constant = 0
        index = {name: i for i, name in enumerate(var_names)}

        def term(sign: int) -> None:
            nonlocal constant
            tok = self.peek()
            if tok.kind == "int":
                value = int(self.next().text)
                if self.accept("op", "*"):
                    ident = self.expect("ident")
                    if ident.text not in index:
                        raise ParseError(f"undeclared variable {ident.text!r}", ident.line, ident.col)
                    coeffs[index[ident.text]] += sign * value
                else:
                    constant += sign * value
            elif tok.kind == "ident":
                ident = self.next()
                if ident.text not in index:
                    raise ParseError(f"undeclared variable {ident.text!r}", ident.line, ident.col)
                coeffs[index[ident.text]] += sign
            else:
                raise ParseError(
                    f"expected term, found {tok.text!r}", tok.line, tok.col, expected="term"
                )

        term(-1 if self.accept("op", "-") else 1)
        while True:
            if self.accept("op", "+"):
                term(1)
            elif self.accept("op", "-"):
                term(-1)
            else:
                break
        return coeffs, constant

    def program(self) -> CpProgram:
        while self.accept("newline"):
            pass
        self.expect("vars")
        names = [self.expect("ident").text]
        while self.accept("op", ","):
            names.append(self.expect("ident").text)
        var_names = tuple(names)
        self.expect("newline")
        self.skip_newlines = True

        self.expect("while")
        coeffs, constant = self.linexpr(var_names)
        if self.accept("op", ">="):
            strict = False
        else:
            self.expect("op", ">")
            strict = True
        bound = self.integer() - constant
        if not strict:
            bound -= 1
        self.expect("op", "{")

        branches: list[Branch] = []
        reset: Reset | None = None
        while True:
            if self.accept("inc"):
                delta = self.int_vector()
                self.expect("op", "[")
                prob = self.rational()
                self.expect("op", "]")
                self.expect("op", ";")
                branches.append(Branch(delta=delta, prob=prob))
            elif (tok := self.peek()).kind == "reset":
                self.next()
                if reset is not None:
                    raise ParseError("at most one reset statement is allowed", tok.line, tok.col)
                target = self.int_vector()
                self.expect("op", "[")
                prob = self.rational()
                self.expect("op", "]")
                self.expect("op", ";")
                reset = Reset(target=target, prob=prob)
            else:
                break
        if not branches and reset is None:
            tok = self.peek()
            raise ParseError("loop body must contain at least one statement", tok.line, tok.col,
                             expected="inc or reset")
        self.expect("op", "}")
        self.expect("eof")
        return CpProgram(
            var_names=var_names,
            guard_a=tuple(coeffs),
            guard_b=bound,
            branches=tuple(branches),
            reset=reset,
        )


def parse_program(source: str) -> CpProgram:
    """Parse and validate a program; raises ParseError or ValidationError."""
    prog = _Parser(_tokenize(source)).program()
    validate(prog)
    return prog
