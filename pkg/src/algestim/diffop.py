"""The noncommutative ring of linear differential operators in d/ds with
rational-function coefficients, and formal expressions in a signal symbol.

Operators are stored in normal form with all derivatives pushed to the right,
so each order appears at most once and equality is structural. Composition
expands through the commutation rule D*r(s) = r(s)*D + r'(s).

SExpr models elements of the module spanned by the signal image x and the
constant 1: a sum of coefficients times s-derivatives of x plus a known
rational part. Differentiation acts by the product rule on the signal terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exactalg import RatFunc


def _merge(terms: dict[int, RatFunc], order: int, coeff: RatFunc) -> None:
    if order in terms:
        coeff = terms[order] + coeff
    if coeff:
        terms[order] = coeff
    else:
        terms.pop(order, None)


@dataclass(frozen=True)
class DiffOp:
    """Sum of coeff * d^order/ds^order terms, orders strictly increasing."""

    terms: tuple[tuple[RatFunc, int], ...]

    @classmethod
    def from_dict(cls, terms: dict[int, RatFunc]) -> "DiffOp":
        items = tuple(sorted(((c, o) for o, c in terms.items() if c), key=lambda t: t[1]))
        return cls(items)

    @classmethod
    def zero(cls) -> "DiffOp":
        return cls(())

    @classmethod
    def identity(cls) -> "DiffOp":
        return cls(((RatFunc.one(), 0),))

    @classmethod
    def d(cls, order: int = 1) -> "DiffOp":
        """The pure derivative d^order/ds^order."""
        if order < 0:
            raise ValueError("negative derivative order")
        return cls(((RatFunc.one(), order),))

    @classmethod
    def coeff(cls, c) -> "DiffOp":
        """Multiplication operator by a rational function (order 0)."""
        c = c if isinstance(c, RatFunc) else RatFunc(c)
        return cls(((c, 0),)) if c else cls.zero()

    @property
    def order(self) -> int:
        return self.terms[-1][1] if self.terms else -1

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        acc = {o: c for c, o in self.terms}
        for c, o in other.terms:
            _merge(acc, o, c)
        return DiffOp.from_dict(acc)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def __neg__(self) -> "DiffOp":
        return DiffOp(tuple((-c, o) for c, o in self.terms))

    def scale(self, c) -> "DiffOp":
        c = c if isinstance(c, RatFunc) else RatFunc(c)
        if not c:
            return DiffOp.zero()
        return DiffOp(tuple((c * a, o) for a, o in self.terms))

    def __mul__(self, other: "DiffOp") -> "DiffOp":
        """Operator composition (self applied after other)."""
        if not isinstance(other, DiffOp):
            return NotImplemented
        acc: dict[int, RatFunc] = {}
        # d^alpha . other, built incrementally for ascending alpha
        shifted = {o: c for c, o in other.terms}
        alpha = 0
        for a, order in self.terms:
            while alpha < order:
                nxt: dict[int, RatFunc] = {}
                for o, c in shifted.items():
                    _merge(nxt, o, c.deriv())
                    _merge(nxt, o + 1, c)
                shifted = nxt
                alpha += 1
            for o, c in shifted.items():
                _merge(acc, o, a * c)
        return DiffOp.from_dict(acc)

    def apply_rat(self, f: RatFunc) -> RatFunc:
        """Apply to a rational function: sum of coeff * f^(order)."""
        out = RatFunc.zero()
        derivs = f
        last = 0
        for c, order in self.terms:
            for _ in range(order - last):
                derivs = derivs.deriv()
            last = order
            out = out + c * derivs
        return out

    def apply(self, e: "SExpr") -> "SExpr":
        """Apply to a formal expression in the signal symbol."""
        out = SExpr.zero()
        cur = e
        last = 0
        for c, order in self.terms:
            for _ in range(order - last):
                cur = cur.deriv()
            last = order
            out = out + cur.scale(c)
        return out

    def format(self, var: str = "s", numeric: bool = False) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, o in reversed(self.terms):
            d = "" if o == 0 else f"d/d{var}" if o == 1 else f"d^{o}/d{var}^{o}"
            cs = c.format(var, numeric)
            if not d:
                parts.append(cs)
            elif c == RatFunc.one():
                parts.append(d)
            else:
                parts.append(f"({cs})*{d}")
        return " + ".join(parts)

    def __str__(self) -> str:
        return self.format()


@dataclass(frozen=True)
class SExpr:
    """Element of span(1, x, x', ...): signal terms plus a known rational part.

    signal holds (coefficient, derivative order of x) pairs with strictly
    increasing orders and no zero coefficients.
    """

    signal: tuple[tuple[RatFunc, int], ...]
    known: RatFunc

    @classmethod
    def build(cls, signal: dict[int, RatFunc], known: RatFunc | None = None) -> "SExpr":
        items = tuple(sorted(((c, o) for o, c in signal.items() if c), key=lambda t: t[1]))
        return cls(items, known if known is not None else RatFunc.zero())

    @classmethod
    def zero(cls) -> "SExpr":
        return cls((), RatFunc.zero())

    @classmethod
    def from_known(cls, f) -> "SExpr":
        f = f if isinstance(f, RatFunc) else RatFunc(f)
        return cls((), f)

    @classmethod
    def signal_term(cls, coeff, order: int = 0) -> "SExpr":
        coeff = coeff if isinstance(coeff, RatFunc) else RatFunc(coeff)
        if not coeff:
            return cls.zero()
        return cls(((coeff, order),), RatFunc.zero())

    def __bool__(self) -> bool:
        return bool(self.signal) or bool(self.known)

    @property
    def max_order(self) -> int:
        return self.signal[-1][1] if self.signal else -1

    def __add__(self, other: "SExpr") -> "SExpr":
        if not isinstance(other, SExpr):
            return NotImplemented
        acc = {o: c for c, o in self.signal}
        for c, o in other.signal:
            _merge(acc, o, c)
        return SExpr.build(acc, self.known + other.known)

    def __sub__(self, other: "SExpr") -> "SExpr":
        return self + (-other)

    def __neg__(self) -> "SExpr":
        return SExpr(tuple((-c, o) for c, o in self.signal), -self.known)

    def scale(self, c) -> "SExpr":
        c = c if isinstance(c, RatFunc) else RatFunc(c)
        if not c:
            return SExpr.zero()
        return SExpr(tuple((c * a, o) for a, o in self.signal), c * self.known)

    def deriv(self) -> "SExpr":
        """d/ds: product rule on signal terms, plain derivative on the known part."""
        acc: dict[int, RatFunc] = {}
        for c, o in self.signal:
            _merge(acc, o, c.deriv())
            _merge(acc, o + 1, c)
        return SExpr.build(acc, self.known.deriv())

    def substitute(self, derivs: Sequence[RatFunc]) -> RatFunc:
        """Replace x^(k) by derivs[k] and collapse to a rational function."""
        out = self.known
        for c, o in self.signal:
            if o >= len(derivs):
                raise ValueError(f"missing derivative of order {o}")
            out = out + c * derivs[o]
        return out

    def format(self, var: str = "s", numeric: bool = False, sig: str = "x") -> str:
        if not self:
            return "0"
        parts = []
        for c, o in self.signal:
            name = sig if o == 0 else f"{sig}'" if o == 1 else f"{sig}''" if o == 2 else f"{sig}^({o})"
            cs = c.format(var, numeric)
            parts.append(name if c == RatFunc.one() else f"({cs})*{name}")
        if self.known:
            parts.append(self.known.format(var, numeric))
        return " + ".join(parts)

    def __str__(self) -> str:
        return self.format()
