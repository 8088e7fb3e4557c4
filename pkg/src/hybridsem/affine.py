"""Affine expressions and constraints over named rational symbols.

Grammar for the textual form used in system and relation files:

    expr ::= term (("+" | "-") term)*
    term ::= rational "*" name | rational | name
    rational ::= integer | integer "/" integer

Names are variable names, "t" for time, or the endpoint symbols
B_c, E_c, B_a, E_a.  Constraints are two expressions joined by one of
=, <=, >=, <, >.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError
from .time_core import Q

__all__ = ["LinExpr", "AffineConstraint", "parse_expr", "parse_constraint"]

ENDPOINT_SYMBOLS = ("B_c", "E_c", "B_a", "E_a")


@dataclass(frozen=True)
class LinExpr:
    coefs: tuple  # sorted (symbol, Fraction) pairs, zero coefs dropped
    const: Fraction

    @staticmethod
    def make(coefs=None, const=0) -> "LinExpr":
        coefs = coefs or {}
        items = tuple(sorted((k, Q(v)) for k, v in coefs.items() if Q(v) != 0))
        return LinExpr(items, Q(const))

    @staticmethod
    def constant(c) -> "LinExpr":
        return LinExpr((), Q(c))

    @staticmethod
    def var(name, coef=1) -> "LinExpr":
        return LinExpr.make({name: coef})

    def symbols(self) -> set:
        return {k for k, _ in self.coefs}

    def eval(self, env) -> Fraction:
        total = self.const
        for k, v in self.coefs:
            total += v * Q(env[k])
        return total

    def subst(self, env) -> "LinExpr":
        """Replace symbols found in env (symbol -> LinExpr or rational)."""
        coefs: dict = {}
        const = self.const
        for k, v in self.coefs:
            if k not in env:
                coefs[k] = coefs.get(k, Q(0)) + v
                continue
            rep = env[k]
            if isinstance(rep, LinExpr):
                const += v * rep.const
                for k2, v2 in rep.coefs:
                    coefs[k2] = coefs.get(k2, Q(0)) + v * v2
            else:
                const += v * Q(rep)
        return LinExpr.make(coefs, const)

    def plus(self, other: "LinExpr") -> "LinExpr":
        coefs = dict(self.coefs)
        for k, v in other.coefs:
            coefs[k] = coefs.get(k, Q(0)) + v
        return LinExpr.make(coefs, self.const + other.const)

    def scaled(self, factor) -> "LinExpr":
        factor = Q(factor)
        return LinExpr.make({k: v * factor for k, v in self.coefs}, self.const * factor)

    def minus(self, other: "LinExpr") -> "LinExpr":
        return self.plus(other.scaled(-1))

    def __repr__(self):
        parts = [f"{v}*{k}" for k, v in self.coefs]
        parts.append(str(self.const))
        return " + ".join(parts)


@dataclass(frozen=True)
class AffineConstraint:
    """lhs OP 0 with OP in =, <=, >=, <, >."""

    lhs: LinExpr
    op: str

    def symbols(self) -> set:
        return self.lhs.symbols()

    def holds(self, env) -> bool:
        v = self.lhs.eval(env)
        return self.check_value(v)

    def check_value(self, v) -> bool:
        if self.op == "=":
            return v == 0
        if self.op == "<=":
            return v <= 0
        if self.op == ">=":
            return v >= 0
        if self.op == "<":
            return v < 0
        return v > 0

    def subst(self, env) -> "AffineConstraint":
        return AffineConstraint(self.lhs.subst(env), self.op)

    def __repr__(self):
        return f"{self.lhs!r} {self.op} 0"


_TERM_RE = re.compile(
    r"^\s*(?:(?P<coef>-?\d+(?:/\d+)?)\s*\*\s*(?P<var>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<num>-?\d+(?:/\d+)?)"
    r"|(?P<bare>[A-Za-z_][A-Za-z0-9_]*))\s*$"
)


def parse_expr(text: str) -> LinExpr:
    # split into signed terms at top level
    stripped = text.strip()
    if not stripped:
        raise ParseError(f"empty expression: {text!r}")
    chunks = re.split(r"(?<![*/+\-])\s*([+-])\s*", stripped)
    if chunks[0] == "":
        chunks = chunks[1:]  # leading sign
    terms = []
    sign = 1
    for chunk in chunks:
        if chunk == "+":
            sign = 1
            continue
        if chunk == "-":
            sign = -1
            continue
        terms.append((sign, chunk))
        sign = 1
    coefs: dict = {}
    const = Q(0)
    for sign, chunk in terms:
        m = _TERM_RE.match(chunk)
        if not m:
            raise ParseError(f"bad term {chunk!r} in {text!r}")
        if m.group("var"):
            coefs[m.group("var")] = coefs.get(m.group("var"), Q(0)) + sign * Q(m.group("coef"))
        elif m.group("bare"):
            coefs[m.group("bare")] = coefs.get(m.group("bare"), Q(0)) + sign
        else:
            const += sign * Q(m.group("num"))
    return LinExpr.make(coefs, const)


def parse_constraint(text: str) -> AffineConstraint:
    for op in ("<=", ">=", "=", "<", ">"):
        if op in text:
            left, right = text.split(op, 1)
            return AffineConstraint(parse_expr(left).minus(parse_expr(right)), op)
    raise ParseError(f"no comparison operator in {text!r}")
