"""Identifiability analysis of operational identities.

Builds the square derivative matrix whose xi-th row applies d^xi/ds^xi to the
identity's monomials, checks its exact rank against the expected value N + M,
and extracts the linear system satisfied by the estimated parameters.

Rank over the differential field is decided by specialization: the formal
signal symbol is replaced through a derivative closure (every x^(j) rewritten
over the finite basis 1, x, ..., x^(n-1) using the identity itself), basis
symbols and the evaluation point are drawn as random rationals, and the
resulting exact matrix is eliminated fraction-free.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

from .diffop import DiffOp, SExpr
from .exactalg import Poly, RatFunc
from .sigmodel import SignalModel, default_witness, identity_params, identity_polynomials

__all__ = [
    "SExprMatrix",
    "SLinearSystem",
    "DerivativeClosure",
    "IdentifiabilityError",
    "WitnessError",
    "build_m",
    "rank_m",
    "derive_linear_system",
    "derivation_report",
]


class IdentifiabilityError(RuntimeError):
    """The requested parameter set is not linearly identifiable within budget."""


class WitnessError(RuntimeError):
    """All randomized evaluation points hit poles; retry budget exhausted."""


@dataclass(frozen=True)
class SExprMatrix:
    entries: tuple[tuple[SExpr, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def entry(self, i: int, j: int) -> SExpr:
        return self.entries[i][j]


@dataclass(frozen=True)
class SLinearSystem:
    """A theta = B with entries in span(1, x, x', ...)."""

    a: tuple[tuple[SExpr, ...], ...]
    b: tuple[SExpr, ...]
    theta_names: tuple[str, ...]
    xi_rows: tuple[int, ...]
    annihilation_order: int

    @property
    def size(self) -> int:
        return len(self.theta_names)


class DerivativeClosure:
    """Rewrites every s-derivative of the signal symbol over a finite basis.

    For an identity sum_nu P_nu(s) x^(nu) = Q(s) with top order n, each x^(j)
    equals a vector of rational functions against the basis (1, x, ..., x^(n-1));
    x^(n) itself is eliminated through the identity and higher orders follow by
    differentiating the rewriting. For n = 0 the image is fully rational and the
    basis is just (1).
    """

    def __init__(self, p_map: Mapping[int, Poly], q: Poly):
        n = max(p_map)
        if not p_map[n]:
            raise ValueError("vanishing leading coefficient")
        self.order = n
        lead = RatFunc(p_map[n])
        # x^(n) = (Q - sum_{nu<n} P_nu x^(nu)) / P_n
        top = [RatFunc(q) / lead]
        for nu in range(n):
            pol = p_map.get(nu)
            top.append(-RatFunc(pol) / lead if pol else RatFunc.zero())
        self._vectors: list[list[RatFunc]] = [
            [RatFunc.one() if i == j + 1 else RatFunc.zero() for i in range(n + 1)]
            for j in range(n)
        ]
        self._vectors.append(top)

    @classmethod
    def from_model(cls, model: SignalModel, params: Mapping[str, Fraction]) -> "DerivativeClosure":
        p_map, q = identity_polynomials(model, params)
        return cls(p_map, q)

    def vector(self, j: int) -> list[RatFunc]:
        """Coordinates of x^(j) against (1, x, ..., x^(order-1))."""
        while len(self._vectors) <= j:
            last = self._vectors[-1]
            n = self.order
            top = self._vectors[n]
            # d/ds [v0 + sum_i v_i x^(i-1)] = v0' + sum_i (v_i' x^(i-1) + v_i x^(i))
            nxt = [c.deriv() for c in last]
            for i in range(1, n):
                nxt[i + 1] = nxt[i + 1] + last[i]
            if n >= 1 and last[n]:
                for k in range(n + 1):
                    nxt[k] = nxt[k] + last[n] * top[k]
            self._vectors.append(nxt)
        return self._vectors[j]

    def expr_coords(self, e: SExpr) -> list[RatFunc]:
        """Coordinates of an SExpr against (1, x, ..., x^(order-1))."""
        out = [e.known] + [RatFunc.zero()] * self.order
        for c, nu in e.signal:
            vec = self.vector(nu)
            for i in range(self.order + 1):
                out[i] = out[i] + c * vec[i]
        return out


# ---------------------------------------------------------------------------
# exact linear algebra

def _bareiss(rows: list[list[Fraction]]) -> tuple[int, Fraction]:
    """Fraction-free elimination; returns (rank, determinant-if-square-else-0)."""
    if not rows:
        return 0, Fraction(0)
    m, n = len(rows), len(rows[0])
    # clear denominators row by row
    mat: list[list[int]] = []
    scale = Fraction(1)
    for r in rows:
        den = 1
        for c in r:
            den = lcm(den, c.denominator)
        scale *= den
        mat.append([int(c * den) for c in r])
    rank = 0
    sign = 1
    prev = 1
    row = 0
    for col in range(n):
        piv = None
        for r in range(row, m):
            if mat[r][col]:
                piv = r
                break
        if piv is None:
            continue
        if piv != row:
            mat[row], mat[piv] = mat[piv], mat[row]
            sign = -sign
        for r in range(row + 1, m):
            for c in range(col + 1, n):
                mat[r][c] = (mat[r][c] * mat[row][col] - mat[r][col] * mat[row][c]) // prev
            mat[r][col] = 0
        prev = mat[row][col]
        row += 1
        rank += 1
        if row == m:
            break
    det = Fraction(0)
    if m == n and rank == n:
        det = Fraction(sign * prev) / scale
    return rank, det


def _random_point(rnd: random.Random) -> Fraction:
    return Fraction(rnd.randint(1, 60), rnd.randint(1, 12))


def _specialize(coords: Sequence[list[RatFunc]], s0: Fraction,
                basis_vals: Sequence[Fraction]) -> list[Fraction]:
    out = []
    for vec in coords:
        acc = Fraction(0)
        for c, b in zip(vec, basis_vals):
            if c:
                acc += c(s0) * b
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# public operations

def build_m(model: SignalModel) -> SExprMatrix:
    """Derivative matrix of order N + M + 1: row xi applies d^xi/ds^xi to each monomial."""
    cols: list[SExpr] = []
    for t in model.a_terms:
        cols.append(SExpr.signal_term(RatFunc(Poly.monomial(t.s_power)), t.deriv_order))
    for t in model.b_terms:
        cols.append(SExpr.from_known(RatFunc(Poly.monomial(t.s_power))))
    size = len(cols)
    rows = []
    current = cols
    for xi in range(size):
        if xi > 0:
            current = [e.deriv() for e in current]
        rows.append(tuple(current))
    return SExprMatrix(tuple(rows))


def rank_m(matrix: SExprMatrix, closure: DerivativeClosure,
           *, seed: int = 0, samples: int = 3) -> int:
    """Exact rank after substituting the closure, maximized over random rational points."""
    rnd = random.Random(seed)
    coords = [[closure.expr_coords(e) for e in row] for row in matrix.entries]
    best = 0
    done = 0
    attempts = 0
    while done < samples:
        attempts += 1
        if attempts > 12 * samples:
            raise WitnessError("all evaluation points hit poles")
        s0 = _random_point(rnd)
        basis = [Fraction(1)] + [
            Fraction(rnd.randint(1, 97), rnd.randint(1, 13)) for _ in range(closure.order)
        ]
        try:
            rows = [_specialize(row, s0, basis) for row in coords]
        except ZeroDivisionError:
            continue
        rank, _ = _bareiss(rows)
        best = max(best, rank)
        done += 1
    return best


def _det_is_nonzero(rows: list[list[SExpr]], closure: DerivativeClosure,
                    rnd: random.Random, tries: int = 3) -> bool:
    coords = [[closure.expr_coords(e) for e in row] for row in rows]
    checked = 0
    attempts = 0
    while checked < tries:
        attempts += 1
        if attempts > 12 * tries:
            raise WitnessError("all evaluation points hit poles")
        s0 = _random_point(rnd)
        basis = [Fraction(1)] + [
            Fraction(rnd.randint(1, 97), rnd.randint(1, 13)) for _ in range(closure.order)
        ]
        try:
            vals = [_specialize(row, s0, basis) for row in coords]
        except ZeroDivisionError:
            continue
        _, det = _bareiss(vals)
        if det != 0:
            return True
        checked += 1
    return False


def _identity_parts(model: SignalModel) -> tuple[SExpr, dict[str, SExpr]]:
    """Split the identity into a known part and per-parameter coefficient expressions."""
    known = SExpr.zero()
    per_param: dict[str, SExpr] = {name: SExpr.zero() for name in model.param_names}
    for t in model.a_terms:
        mono = SExpr.signal_term(RatFunc(Poly.monomial(t.s_power)), t.deriv_order)
        if t.coeff.const:
            known = known + mono.scale(RatFunc.const(t.coeff.const))
        for name, c in t.coeff.terms:
            per_param[name] = per_param[name] + mono.scale(RatFunc.const(c))
    for t in model.b_terms:
        mono = SExpr.from_known(RatFunc(Poly.monomial(t.s_power)))
        if t.coeff.const:
            known = known - mono.scale(RatFunc.const(t.coeff.const))
        for name, c in t.coeff.terms:
            per_param[name] = per_param[name] - mono.scale(RatFunc.const(c))
    return known, per_param


def _row_sign(row: Sequence[SExpr]) -> int:
    for e in row:
        for c, _ in e.signal:
            return 1 if c.num.lc > 0 else -1
        if e.known:
            return 1 if e.known.num.lc > 0 else -1
    return 1


def derive_linear_system(model: SignalModel, *,
                         witness: Mapping[str, float] | None = None,
                         seed: int = 0, extra_rows: int = 4) -> SLinearSystem:
    """Extract the linear system A theta = B for the estimated parameters.

    Applies ascending s-derivatives to the identity. Nuisance parameters must
    multiply pure polynomial terms; enough derivatives are taken first to
    annihilate them. The first square row selection with a nonvanishing
    determinant (witnessed on a generic specialization) wins; the search is
    deterministic for fixed inputs.
    """
    import itertools

    known, per_param = _identity_parts(model)
    theta = model.estimated
    rho = len(theta)

    anni = 0
    for name in model.nuisance:
        g = per_param[name]
        if g.signal:
            raise IdentifiabilityError(
                f"nuisance parameter {name} multiplies signal terms; cannot annihilate"
            )
        deg = g.known.num.degree
        if g.known.den.degree > 0:
            raise IdentifiabilityError(
                f"nuisance parameter {name} has non-polynomial coefficient"
            )
        anni = max(anni, deg + 1)

    params = identity_params(model, witness if witness is not None else default_witness(model))
    closure = DerivativeClosure.from_model(model, params)
    rnd = random.Random(seed)

    n_candidates = rho + extra_rows
    a_rows: list[list[SExpr]] = []
    b_rows: list[SExpr] = []
    cur_known = known
    cur_params = {n: per_param[n] for n in theta}
    for xi in range(anni + n_candidates):
        if xi > 0:
            cur_known = cur_known.deriv()
            cur_params = {n: e.deriv() for n, e in cur_params.items()}
        if xi < anni:
            continue
        a_rows.append([cur_params[n] for n in theta])
        b_rows.append(-cur_known)

    chosen: tuple[int, ...] | None = None
    for combo in itertools.combinations(range(n_candidates), rho):
        if _det_is_nonzero([a_rows[i] for i in combo], closure, rnd):
            chosen = combo
            break
    if chosen is None:
        raise IdentifiabilityError(
            f"no {rho}-row selection within {n_candidates} derivative rows "
            "has a nonvanishing determinant"
        )

    a_out: list[tuple[SExpr, ...]] = []
    b_out: list[SExpr] = []
    for i in chosen:
        row = a_rows[i]
        flip = _row_sign(row)
        if flip < 0:
            row = [-e for e in row]
            b_out.append(-b_rows[i])
        else:
            b_out.append(b_rows[i])
        a_out.append(tuple(row))
    return SLinearSystem(
        a=tuple(a_out),
        b=tuple(b_out),
        theta_names=theta,
        xi_rows=tuple(anni + i for i in chosen),
        annihilation_order=anni,
    )


def system_residual(sys: SLinearSystem, closure: DerivativeClosure,
                    theta_values: Mapping[str, Fraction],
                    *, points: int = 5, seed: int = 0) -> float:
    """Max |A theta - B| over random points with the true solution substituted."""
    rnd = random.Random(seed)
    worst = Fraction(0)
    done = 0
    attempts = 0
    while done < points:
        attempts += 1
        if attempts > 20 * points:
            raise WitnessError("all evaluation points hit poles")
        s0 = _random_point(rnd)
        basis = [Fraction(1)] + [
            Fraction(rnd.randint(1, 97), rnd.randint(1, 13)) for _ in range(closure.order)
        ]
        try:
            for i in range(sys.size):
                acc = Fraction(0)
                for j, name in enumerate(sys.theta_names):
                    coords = closure.expr_coords(sys.a[i][j])
                    acc += theta_values[name] * _specialize([coords], s0, basis)[0]
                coords = closure.expr_coords(sys.b[i])
                acc -= _specialize([coords], s0, basis)[0]
                worst = max(worst, abs(acc))
        except ZeroDivisionError:
            continue
        done += 1
    return float(worst)


def derivation_report(model: SignalModel, sys: SLinearSystem,
                      rank: int | None = None) -> str:
    """Human-readable account of the derivation."""
    lines = [
        f"model kind: {model.kind}",
        f"identity: {model.describe()}",
        f"coefficient counts: N = {model.n_a}, M = {model.n_b}",
        f"derivative matrix: order {model.n_a + model.n_b + 1}",
    ]
    if rank is not None:
        lines.append(f"rank: {rank} (expected N + M = {model.n_a + model.n_b})")
    lines.append(f"unknowns: {', '.join(sys.theta_names)}")
    if sys.annihilation_order:
        lines.append(
            f"annihilation: d^{sys.annihilation_order}/ds^{sys.annihilation_order} "
            f"applied first to remove {', '.join(model.nuisance)}"
        )
    lines.append("equations:")
    for i, xi in enumerate(sys.xi_rows):
        lhs = " + ".join(
            f"[{sys.a[i][j].format(numeric=True)}]*{name}"
            for j, name in enumerate(sys.theta_names)
            if sys.a[i][j]
        )
        lines.append(f"  [xi={xi}]  {lhs or '0'} = {sys.b[i].format(numeric=True)}")
    return "\n".join(lines)
