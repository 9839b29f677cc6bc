"""Textual expression language for index sets, with round-trip printing.

Grammar (whitespace-insensitive):

    top      := family | setexpr | compose
    family   := '[' setexpr ';' setexpr ';' setexpr ']'
    compose  := 'compose' '(' family ';' family ';' number ';' number ')'
    setexpr  := term (('+' (number | lattice)) | ('-' number))*
    term     := '{' [point (',' point)*] '}' | 'Empty' | lattice | point
              | 'u' '(' setexpr ';' setexpr ')'
              | 'eu' '(' setexpr ';' setexpr ')'
    lattice  := [number '*'] ('N0' | 'Theta' '(' number ')')
    point    := '(' cnum ',' integer ')'
    cnum     := real [('+'|'-') real 'i'] | real 'i'

`+ number` shifts every exponent; `+ lattice` attaches the step lattice to
every current point (a generator set).  `u` is union, `eu` extended union;
`compose(F1; F2; alpha; n)` applies the double-space composition law.
The printer emits a canonical form that parses back to the same set.
"""

from __future__ import annotations

import re
from typing import List, Optional, Tuple, Union

from .indexset import (
    EMPTY,
    DoubleFamily,
    Generator,
    IndexSet,
    compose_indexsets,
    extended_union,
)

__all__ = ["parse", "format_value", "format_set", "format_family", "ParseError"]

_DEFAULT_HEIGHT = 40.0


class ParseError(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[{}()\[\],;+\-*]))"
)


def _tokenize(text: str) -> List[str]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"bad character at {pos}: {text[pos:pos+10]!r}")
        tokens.append(m.group(m.lastgroup))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: List[str]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, tok: str):
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    # -- numbers -----------------------------------------------------------
    def number(self) -> float:
        sign = 1.0
        while self.peek() in ("+", "-"):
            if self.next() == "-":
                sign = -sign
        tok = self.next()
        try:
            return sign * float(tok)
        except ValueError:
            raise ParseError(f"expected a number, got {tok!r}") from None

    def cnum(self) -> complex:
        sign = 1.0
        while self.peek() in ("+", "-"):
            if self.next() == "-":
                sign = -sign
        tok = self.next()
        if tok == "i":
            return complex(0.0, sign)
        try:
            mag = float(tok)
        except ValueError:
            raise ParseError(f"expected a number, got {tok!r}") from None
        if self.peek() == "i":
            self.next()
            return complex(0.0, sign * mag)
        if self.peek() in ("+", "-"):
            save = self.i
            op = self.next()
            s2 = 1.0 if op == "+" else -1.0
            if self.peek() == "i":
                self.next()
                return complex(sign * mag, s2)
            nxt = self.peek()
            if nxt is not None and re.fullmatch(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?", nxt):
                imag = float(self.next())
                if self.peek() == "i":
                    self.next()
                    return complex(sign * mag, s2 * imag)
            self.i = save  # not a complex literal; leave for the shift parser
        return complex(sign * mag, 0.0)

    # -- grammar -----------------------------------------------------------
    def point(self) -> Tuple[complex, int]:
        self.expect("(")
        s = self.cnum()
        self.expect(",")
        p = self.number()
        if p != int(p) or p < 0:
            raise ParseError(f"log power must be a nonnegative integer, got {p}")
        self.expect(")")
        return s, int(p)

    def lattice(self) -> Tuple[str, float, Optional[float]]:
        """Returns (kind, scale, alpha)."""
        scale = 1.0
        tok = self.peek()
        if tok is not None and re.fullmatch(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?", tok):
            scale = float(self.next())
            self.expect("*")
        ident = self.next()
        if ident == "N0":
            return "n0", scale, None
        if ident == "Theta":
            self.expect("(")
            alpha = self.number()
            self.expect(")")
            return "theta", scale, alpha
        raise ParseError(f"expected N0 or Theta(...), got {ident!r}")

    def _is_lattice_ahead(self) -> bool:
        tok = self.peek()
        if tok in ("N0", "Theta"):
            return True
        if tok is not None and re.fullmatch(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?", tok):
            return self.i + 1 < len(self.toks) and self.toks[self.i + 1] == "*"
        return False

    def term(self) -> IndexSet:
        tok = self.peek()
        if tok == "{":
            self.next()
            pts = []
            if self.peek() != "}":
                pts.append(self.point())
                while self.peek() == ",":
                    self.next()
                    pts.append(self.point())
            self.expect("}")
            return IndexSet.from_points(pts)
        if tok == "Empty":
            self.next()
            return EMPTY
        if self._is_lattice_ahead():
            kind, scale, alpha = self.lattice()
            return IndexSet(gens=(Generator(0.0, 0, kind, scale, alpha),))
        if tok in ("u", "eu"):
            op = self.next()
            self.expect("(")
            left = self.setexpr()
            self.expect(";")
            right = self.setexpr()
            self.expect(")")
            if op == "u":
                return left.union(right)
            return extended_union(left, right, height=_height_if_needed(left, right))
        if tok == "(":
            s, p = self.point()
            return IndexSet.from_points([(s, p)])
        # bare number as a single exponent
        val = self.cnum()
        return IndexSet.from_points([(val, 0)])

    def setexpr(self) -> IndexSet:
        acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.next()
            if op == "+" and self._is_lattice_ahead():
                kind, scale, alpha = self.lattice()
                gens = tuple(
                    Generator(s, p, kind, scale, alpha) for s, p in acc.points
                ) + acc.gens
                if not acc.points and not gens:
                    raise ParseError("cannot attach a lattice to an empty set")
                acc = IndexSet(points=(), gens=gens, truncation=acc.truncation)
            else:
                shift = self.cnum() if op == "+" else -self.number()
                acc = acc.shift(shift)
        return acc

    def family(self) -> DoubleFamily:
        self.expect("[")
        e10 = self.setexpr()
        self.expect(";")
        e01 = self.setexpr()
        self.expect(";")
        e11 = self.setexpr()
        self.expect("]")
        return DoubleFamily(b10=e10, b01=e01, b11=e11)

    def top(self) -> Union[IndexSet, DoubleFamily]:
        if self.peek() == "[":
            out = self.family()
        elif self.peek() == "compose":
            self.next()
            self.expect("(")
            f1 = self.family()
            self.expect(";")
            f2 = self.family()
            self.expect(";")
            alpha = self.number()
            self.expect(";")
            n = self.number()
            self.expect(")")
            out = compose_indexsets(f1, f2, alpha, int(n), height=_DEFAULT_HEIGHT)
        else:
            out = self.setexpr()
        if self.peek() is not None:
            raise ParseError(f"trailing input at token {self.i}: {self.peek()!r}")
        return out


def _height_if_needed(left: IndexSet, right: IndexSet) -> Optional[float]:
    infinite = (not left.is_finite) or (not right.is_finite)
    return _DEFAULT_HEIGHT if infinite else None


def parse(text: str) -> Union[IndexSet, DoubleFamily]:
    return _Parser(_tokenize(text)).top()


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_cnum(z: complex) -> str:
    if z.imag == 0.0:
        return _fmt_real(z.real)
    if z.real == 0.0:
        return f"{_fmt_real(z.imag)}i"
    op = "+" if z.imag > 0 else "-"
    return f"{_fmt_real(z.real)}{op}{_fmt_real(abs(z.imag))}i"


def _fmt_lattice(g: Generator) -> str:
    body = "N0" if g.kind == "n0" else f"Theta({_fmt_real(g.alpha)})"
    if g.scale != 1.0:
        body = f"{_fmt_real(g.scale)}*{body}"
    return f"({_fmt_cnum(g.base)},{g.p})+{body}"


def format_set(E: IndexSet) -> str:
    if E.is_empty:
        return "Empty"
    parts = []
    if E.points:
        inner = ",".join(f"({_fmt_cnum(s)},{p})" for s, p in E.points)
        parts.append("{" + inner + "}")
    parts.extend(_fmt_lattice(g) for g in sorted(E.gens, key=lambda g: (g.base.real, g.base.imag, g.p)))
    out = parts[0]
    for nxt in parts[1:]:
        out = f"u({out};{nxt})"
    return out


def format_family(F: DoubleFamily) -> str:
    return f"[{format_set(F.b10)};{format_set(F.b01)};{format_set(F.b11)}]"


def format_value(v: Union[IndexSet, DoubleFamily]) -> str:
    return format_family(v) if isinstance(v, DoubleFamily) else format_set(v)
