"""Text formats for polynomials.

Dense form
    ``(c0,c1,...,cD)``: ascending coefficients, e.g. ``(1,0,1)`` is t^2 + 1.

Human form
    an expression in the variable ``t`` built from integers, ``+ - * ^`` and
    parentheses.  Juxtaposition multiplies: ``2t``, ``t(t+2)`` and
    ``3(t+1)^2`` are all accepted.  ``x`` is accepted as an alias for ``t``.

Factored form
    ``[sign*][content*][f1^m1;f2^m2;...]`` where each ``fi`` is a dense or
    human polynomial.  A multiplicity suffix ``^m`` is only recognised after
    a parenthesised factor, so ``(t^2+1)^2`` has multiplicity 2 while a bare
    ``t^2`` is the single factor t^2.  Omitted sign and content default to 1.
    Example: ``-1*3*[t;(t+2)^2]`` is -3 t (t+2)^2.
"""

from __future__ import annotations

import re

from psmooth.errors import ParseError
from psmooth.polycore.poly import Poly

_DENSE = re.compile(r"^\(\s*-?\d+(\s*,\s*-?\d+)*\s*\)$")
_TOKEN = re.compile(r"\s*(?:(\d+)|([tx])|(\*\*|[-+*^()]))")


def _tokenize(s: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    s = s.rstrip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            if s[pos:].strip().startswith("/"):
                raise ParseError(f"rational coefficients are not supported in {s!r}; multiply through by a common denominator")
            raise ParseError(f"unexpected character {s[pos:].strip()[:1]!r} in {s!r}")
        num, var, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif var is not None:
            out.append(("var", var))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    # expr   := ['+'|'-'] term (('+'|'-') term)*
    # term   := factor (['*'] factor)*
    # factor := atom ['^' num]
    # atom   := num | var | '(' expr ')'

    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v = self.take()
        if v != value:
            raise ParseError(f"expected {value!r} in {self.text!r}")

    def parse(self) -> Poly:
        if not self.toks:
            raise ParseError("empty polynomial")
        p = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input in {self.text!r}")
        return p

    def expr(self) -> Poly:
        sign = 1
        if self.peek() in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        acc = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> Poly:
        acc = self.factor()
        while True:
            kind, v = self.peek()
            if v == "*":
                self.take()
                acc = acc * self.factor()
            elif kind in ("num", "var") or v == "(":
                acc = acc * self.factor()
            else:
                return acc

    def factor(self) -> Poly:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, v = self.take()
            if kind != "num":
                raise ParseError(f"exponent must be a nonnegative integer in {self.text!r}")
            base = base ** int(v)
        return base

    def atom(self) -> Poly:
        kind, v = self.take()
        if kind == "num":
            return Poly.const(int(v))
        if kind == "var":
            return Poly((0, 1))
        if v == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError(f"unexpected token {v!r} in {self.text!r}")


def parse_poly(text: str) -> Poly:
    """Parse dense or human polynomial text."""
    s = text.strip()
    if _DENSE.match(s):
        return Poly(int(c) for c in s[1:-1].split(","))
    return _Parser(s).parse()


def _split_top(s: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


_MULT = re.compile(r"^(\(.*\))\s*\^\s*(\d+)$")


def parse_factor(text: str) -> tuple[Poly, int]:
    s = text.strip()
    m = _MULT.match(s)
    if m and _balanced(m.group(1)):
        mult = int(m.group(2))
        if mult < 1:
            raise ParseError(f"multiplicity must be positive in {s!r}")
        return parse_poly(m.group(1)), mult
    return parse_poly(s), 1


def _balanced(s: str) -> bool:
    # "(t+1)^2" vs "(t)*(t+1)^2": the outer parens must enclose everything
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i < len(s) - 1:
            return False
    return depth == 0


def parse_factored_parts(text: str) -> tuple[int, int, list[tuple[Poly, int]]]:
    """Split factored text into (sign, content, [(factor, mult), ...]) without
    validating the factors."""
    s = text.strip()
    lb = s.find("[")
    if lb < 0 or not s.endswith("]"):
        raise ParseError(f"factored form must end with a bracketed factor list: {text!r}")
    prefix = s[:lb].strip()
    body = s[lb + 1 : -1]
    sign, content = 1, 1
    if prefix:
        if not prefix.endswith("*"):
            raise ParseError(f"expected '*' before the factor list in {text!r}")
        fields = [f.strip() for f in prefix[:-1].split("*")]
        try:
            nums = [int(f) for f in fields]
        except ValueError:
            raise ParseError(f"sign and content must be integers in {text!r}") from None
        if len(nums) == 2:
            sign, content = nums
        elif len(nums) == 1:
            (v,) = nums
            if v in (1, -1):
                sign = v
            else:
                sign, content = (1 if v > 0 else -1), abs(v)
        else:
            raise ParseError(f"too many prefix fields in {text!r}")
        if sign not in (1, -1):
            raise ParseError(f"sign must be +1 or -1, got {sign}")
        if content < 1:
            raise ParseError(f"content must be a positive integer, got {content}")
    factors = [parse_factor(f) for f in _split_top(body, ";") if f.strip()]
    return sign, content, factors
