"""Exact arithmetic over the rationals: univariate polynomials and rational
functions in one indeterminate.

Everything is built on fractions.Fraction, so results are exact and canonical:
polynomials never store trailing zero coefficients, rational functions are
kept coprime with a monic denominator so structural equality is semantic
equality. Polynomial gcds run on primitive integer coefficient sequences via
the subresultant remainder sequence, which keeps intermediate coefficients
from blowing up.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as _igcd
from math import lcm as _ilcm
from typing import Iterable, Union

Scalar = Union[int, Fraction]


class PoleError(ArithmeticError):
    """A rational function was evaluated at a root of its denominator."""


def _frac(x: Scalar) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact scalar, got {type(x).__name__}")


def _trim(coeffs: list) -> None:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()


def _prem(f: list[int], g: list[int]) -> list[int]:
    """Pseudo-remainder of integer polynomials: lc(g)^(deg f - deg g + 1) * f mod g."""
    n = len(g) - 1
    lead = g[-1]
    r = list(f)
    e = len(f) - len(g) + 1
    while True:
        _trim(r)
        if len(r) - 1 < n:
            break
        c = r[-1]
        shift = len(r) - len(g)
        r = [lead * x for x in r]
        for i, gc in enumerate(g):
            r[i + shift] -= c * gc
        e -= 1
    if e > 0 and r:
        scale = lead ** e
        r = [x * scale for x in r]
    return r


def _int_primitive(coeffs: list[int]) -> list[int]:
    content = 0
    for c in coeffs:
        content = _igcd(content, abs(c))
    if content > 1:
        coeffs = [c // content for c in coeffs]
    if coeffs and coeffs[-1] < 0:
        coeffs = [-c for c in coeffs]
    return coeffs


def _subresultant_gcd(a: list[int], b: list[int]) -> list[int]:
    """Gcd of primitive integer polynomials via the subresultant PRS."""
    if len(a) < len(b):
        a, b = b, a
    g, h = 1, 1
    while True:
        delta = (len(a) - 1) - (len(b) - 1)
        r = _prem(a, b)
        if not r:
            return _int_primitive(b)
        if len(r) == 1:
            return [1]
        div = g * h ** delta
        a, b = b, [c // div for c in r]
        g = a[-1]
        if delta == 0:
            pass
        elif delta == 1:
            h = abs(g)
        else:
            h = abs(g ** delta // h ** (delta - 1))


class Poly:
    """Dense univariate polynomial with Fraction coefficients, constant term first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        cs = [_frac(c) for c in coeffs]
        _trim(cs)
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def zero(cls) -> "Poly":
        return cls()

    @classmethod
    def one(cls) -> "Poly":
        return cls((1,))

    @classmethod
    def const(cls, c: Scalar) -> "Poly":
        return cls((c,))

    @classmethod
    def monomial(cls, power: int, coeff: Scalar = 1) -> "Poly":
        if power < 0:
            raise ValueError("monomial power must be nonnegative")
        return cls((0,) * power + (coeff,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lc(self) -> Fraction:
        if not self.coeffs:
            return Fraction(0)
        return self.coeffs[-1]

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Poly", self.coeffs))

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Poly(out)

    __radd__ = __add__

    def __sub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        if not self.coeffs or not other.coeffs:
            return Poly.zero()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative polynomial power")
        result = Poly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Scalar) -> "Poly":
        c = _frac(c)
        return Poly(tuple(c * a for a in self.coeffs))

    def shift(self, k: int) -> "Poly":
        """Multiply by the k-th power of the indeterminate, k >= 0."""
        if k < 0:
            raise ValueError("negative shift")
        if not self.coeffs:
            return self
        return Poly((Fraction(0),) * k + self.coeffs)

    def __divmod__(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if not isinstance(other, Poly):
            return NotImplemented
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dn = other.degree
        lead = other.lc
        quot = [Fraction(0)] * max(len(rem) - dn, 0)
        while len(rem) - 1 >= dn and rem:
            _trim(rem)
            if not rem or len(rem) - 1 < dn:
                break
            c = rem[-1] / lead
            k = len(rem) - 1 - dn
            quot[k] = c
            for i, oc in enumerate(other.coeffs):
                rem[i + k] -= c * oc
        return Poly(quot), Poly(rem)

    def __floordiv__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[1]

    def __call__(self, x: Scalar) -> Fraction:
        x = _frac(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self) -> "Poly":
        return Poly(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def monic(self) -> "Poly":
        if not self.coeffs or self.lc == 1:
            return self
        return self.scale(1 / self.lc)

    def _int_coeffs(self) -> list[int]:
        den = 1
        for c in self.coeffs:
            den = _ilcm(den, c.denominator)
        return _int_primitive([int(c * den) for c in self.coeffs])

    @staticmethod
    def gcd(p: "Poly", q: "Poly") -> "Poly":
        """Monic gcd; gcd(0, 0) is 0."""
        if not p:
            return q.monic()
        if not q:
            return p.monic()
        if p.degree == 0 or q.degree == 0:
            return Poly.one()
        return Poly(_subresultant_gcd(p._int_coeffs(), q._int_coeffs())).monic()

    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other)
        return NotImplemented

    def format(self, var: str = "s", numeric: bool = False) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            cs = f"{float(c):.6g}" if numeric else str(c)
            if i == 0:
                parts.append(cs)
            else:
                v = var if i == 1 else f"{var}^{i}"
                parts.append(v if c == 1 else f"-{v}" if c == -1 else f"{cs}*{v}")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Poly({list(self.coeffs)!r})"

    def __str__(self) -> str:
        return self.format()


class RatFunc:
    """Rational function num/den, always coprime with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = self._to_poly(num)
        den = Poly.one() if den is None else self._to_poly(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            den = Poly.one()
        else:
            g = Poly.gcd(num, den)
            if g.degree > 0:
                num, den = num // g, den // g
            lc = den.lc
            if lc != 1:
                num, den = num.scale(1 / lc), den.scale(1 / lc)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RatFunc is immutable")

    @staticmethod
    def _to_poly(x) -> Poly:
        if isinstance(x, Poly):
            return x
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot build RatFunc from {type(x).__name__}")

    @classmethod
    def zero(cls) -> "RatFunc":
        return cls(0)

    @classmethod
    def one(cls) -> "RatFunc":
        return cls(1)

    @classmethod
    def const(cls, c: Scalar) -> "RatFunc":
        return cls(c)

    @classmethod
    def monomial(cls, power: int, coeff: Scalar = 1) -> "RatFunc":
        """coeff times the power-th power of the indeterminate; power may be negative."""
        if power >= 0:
            return cls(Poly.monomial(power, coeff))
        return cls(Poly.const(coeff), Poly.monomial(-power))

    def __bool__(self) -> bool:
        return bool(self.num)

    def __eq__(self, other) -> bool:
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction, Poly)):
            return self == RatFunc(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("RatFunc", self.num.coeffs, self.den.coeffs))

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def _coerce(self, other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, (int, Fraction, Poly)):
            return RatFunc(other)
        return NotImplemented

    def __add__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other:
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RatFunc":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def deriv(self) -> "RatFunc":
        return RatFunc(
            self.num.deriv() * self.den - self.num * self.den.deriv(),
            self.den * self.den,
        )

    def __call__(self, x: Scalar) -> Fraction:
        x = _frac(x)
        d = self.den(x)
        if d == 0:
            raise PoleError(f"pole at {x}")
        return self.num(x) / d

    @property
    def is_const(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def as_fraction(self) -> Fraction:
        if not self.is_const:
            raise ValueError("not a constant rational function")
        if not self.num:
            return Fraction(0)
        return self.num.coeffs[0]

    def laurent_terms(self) -> list[tuple[int, Fraction]]:
        """Decompose into monomial terms (power, coefficient).

        Requires the denominator to be a power of the indeterminate; raises
        ValueError otherwise.
        """
        d = self.den
        if any(c != 0 for c in d.coeffs[:-1]):
            raise ValueError("denominator is not a monomial")
        shift = d.degree
        return [(i - shift, c) for i, c in enumerate(self.num.coeffs) if c != 0]

    def max_power(self) -> int:
        """Largest monomial power; only defined for Laurent-form functions."""
        terms = self.laurent_terms()
        if not terms:
            raise ValueError("zero function has no power")
        return max(p for p, _ in terms)

    def format(self, var: str = "s", numeric: bool = False) -> str:
        try:
            terms = self.laurent_terms()
        except ValueError:
            n = self.num.format(var, numeric)
            if self.den.degree == 0:
                return n
            return f"({n})/({self.den.format(var, numeric)})"
        if not terms:
            return "0"
        parts = []
        for p, c in sorted(terms, key=lambda t: -t[0]):
            cs = f"{float(c):.6g}" if numeric else str(c)
            if p == 0:
                parts.append(cs)
            else:
                v = var if p == 1 else f"{var}^{p}"
                parts.append(v if c == 1 else f"-{v}" if c == -1 else f"{cs}*{v}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"RatFunc({self.num!r}, {self.den!r})"

    def __str__(self) -> str:
        return self.format()
