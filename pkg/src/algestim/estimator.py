"""Compilation of strict linear systems into integral-kernel estimators.

The operational convention is fixed globally: multiplication by 1/s is one
time-domain integration from 0, d/ds is multiplication by -t. Concretely,

    s^-k * x^(nu)  ->  integral_0^t (t-tau)^(k-1)/(k-1)! * (-tau)^nu * y(tau) dtau
    s^-k * 1       ->  t^(k-1)/(k-1)!

where y is the measured signal. A system is strict when every monomial power
of s is <= -1; strictness guarantees the time realization is derivative-free.
Quadrature is composite trapezoid on the uniform grid (Simpson opt-in).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .diffop import SExpr
from .exactalg import Poly, RatFunc
from .identify import SLinearSystem
from .sigmodel import SampledSignal

__all__ = [
    "KernelTerm",
    "CompiledEstimator",
    "EstimateResult",
    "BoundEstimator",
    "WindowError",
    "StrictnessError",
    "strictify",
    "compile_estimator",
    "kernel_eval",
    "estimate",
    "sliding_estimate",
    "known_entry_polys",
    "divisor_polynomial",
    "reduced_divisor_polynomial",
    "estimator_to_dict",
    "estimator_from_dict",
]

DEFAULT_DIVISOR_FLOOR = 1e-9


class WindowError(ValueError):
    """Estimation window outside the sampled range."""


class StrictnessError(RuntimeError):
    """A non-strict monomial survived into compilation."""


@dataclass(frozen=True)
class KernelTerm:
    """One monomial of a compiled entry.

    c * s^-k applied to x^(nu) ("signal") or to 1 ("one", nu must be 0).
    """

    c: Fraction
    k: int
    nu: int
    applies_to: str

    def __post_init__(self):
        if self.k < 1:
            raise StrictnessError(f"integration order must be >= 1, got {self.k}")
        if self.applies_to not in ("signal", "one"):
            raise ValueError(f"bad applies_to {self.applies_to!r}")
        if self.applies_to == "one" and self.nu != 0:
            raise ValueError("known terms cannot carry signal derivatives")


@dataclass(frozen=True)
class CompiledEstimator:
    a_entries: tuple[tuple[tuple[KernelTerm, ...], ...], ...]
    b_entries: tuple[tuple[KernelTerm, ...], ...]
    theta_names: tuple[str, ...]
    divisor_floor: float = DEFAULT_DIVISOR_FLOOR

    @property
    def size(self) -> int:
        return len(self.theta_names)

    def with_floor(self, floor: float) -> "CompiledEstimator":
        return replace(self, divisor_floor=float(floor))


@dataclass(frozen=True)
class EstimateResult:
    t: float
    theta: tuple[float, ...]
    divisor: float
    condition: float
    status: str  # "ok" | "ill_conditioned"


# ---------------------------------------------------------------------------
# strictification

def _sexpr_monomials(e: SExpr) -> list[tuple[int, Fraction, int | None]]:
    """Flatten to (s-power, coefficient, derivative-order-or-None) monomials."""
    out: list[tuple[int, Fraction, int | None]] = []
    for coeff, nu in e.signal:
        for power, c in coeff.laurent_terms():
            out.append((power, c, nu))
    for power, c in e.known.laurent_terms():
        out.append((power, c, None))
    return out


def _scale_power(e: SExpr, shift: int) -> SExpr:
    if shift == 0:
        return e
    return e.scale(RatFunc.monomial(shift))


def strictify(sys: SLinearSystem) -> SLinearSystem:
    """Multiply each equation by a power of 1/s so every monomial power is <= -1.

    Entries must be Laurent (monomial denominators); already-strict rows are
    left untouched.
    """
    a_rows = []
    b_rows = []
    for i in range(sys.size):
        entries = list(sys.a[i]) + [sys.b[i]]
        maxdeg = None
        for e in entries:
            for power, _, _ in _sexpr_monomials(e):
                maxdeg = power if maxdeg is None else max(maxdeg, power)
        if maxdeg is None:
            raise StrictnessError("empty equation")
        shift = -(maxdeg + 1) if maxdeg >= -1 else 0
        a_rows.append(tuple(_scale_power(e, shift) for e in sys.a[i]))
        b_rows.append(_scale_power(sys.b[i], shift))
    return replace(sys, a=tuple(a_rows), b=tuple(b_rows))


# ---------------------------------------------------------------------------
# compilation

def _compile_entry(e: SExpr) -> tuple[KernelTerm, ...]:
    terms = []
    for power, c, nu in _sexpr_monomials(e):
        if power > -1:
            raise StrictnessError(f"non-strict monomial s^{power}")
        k = -power
        if nu is None:
            terms.append(KernelTerm(c, k, 0, "one"))
        else:
            terms.append(KernelTerm(c, k, nu, "signal"))
    return tuple(terms)


def compile_estimator(sys: SLinearSystem,
                      divisor_floor: float = DEFAULT_DIVISOR_FLOOR) -> CompiledEstimator:
    """Translate a strict system into kernel-term form, entry by entry."""
    a = tuple(tuple(_compile_entry(e) for e in row) for row in sys.a)
    b = tuple(_compile_entry(e) for e in sys.b)
    return CompiledEstimator(a, b, sys.theta_names, float(divisor_floor))


# ---------------------------------------------------------------------------
# evaluation

def _snap(y: SampledSignal, t: float) -> int:
    span = y.t1 - y.t0
    if t < -1e-12 or t > span * (1 + 1e-12):
        raise WindowError(f"window width {t} outside sampled span {span}")
    m = int(round(t / y.h))
    return min(max(m, 0), y.n_samples - 1)


def _kernel_values(terms, tau: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros_like(tau)
    for term in terms:
        if term.applies_to != "signal":
            continue
        vals = float(term.c) / math.factorial(term.k - 1) * (t - tau) ** (term.k - 1)
        if term.nu:
            vals = vals * (-tau) ** term.nu
        out += vals
    return out


def _known_value(terms, t: float) -> float:
    acc = 0.0
    for term in terms:
        if term.applies_to != "one":
            continue
        acc += float(term.c) * t ** (term.k - 1) / math.factorial(term.k - 1)
    return acc


def _quad(vals: np.ndarray, h: float, rule: str) -> float:
    if rule == "trapezoid":
        if vals.size < 2:
            return 0.0
        return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))
    if rule == "simpson":
        from scipy.integrate import simpson

        if vals.size < 2:
            return 0.0
        return float(simpson(vals, dx=h))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def kernel_eval(terms, y: SampledSignal, t: float, rule: str = "trapezoid") -> float:
    """Evaluate an entry at window width t: quadrature for signal terms plus
    direct polynomial evaluation for known terms."""
    m = _snap(y, t)
    te = m * y.h
    tau = np.linspace(0.0, te, m + 1)
    acc = _known_value(terms, te)
    if m >= 1:
        kern = _kernel_values(terms, tau, te)
        if np.any(kern):
            acc += _quad(kern * y.values[: m + 1], y.h, rule)
    return acc


def estimate(est: CompiledEstimator, y: SampledSignal, t: float,
             rule: str = "trapezoid") -> EstimateResult:
    """Assemble the system at window width t and solve it with partial pivoting."""
    m = _snap(y, t)
    te = m * y.h
    rho = est.size
    a = np.empty((rho, rho))
    b = np.empty(rho)
    for i in range(rho):
        for j in range(rho):
            a[i, j] = kernel_eval(est.a_entries[i][j], y, te, rule)
        b[i] = kernel_eval(est.b_entries[i], y, te, rule)
    divisor = float(np.linalg.det(a))
    with np.errstate(all="ignore"):
        condition = float(np.linalg.cond(a))
    status = "ok" if abs(divisor) >= est.divisor_floor else "ill_conditioned"
    try:
        theta = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        theta = np.linalg.lstsq(a, b, rcond=None)[0]
        status = "ill_conditioned"
    return EstimateResult(te, tuple(float(v) for v in theta), divisor, condition, status)


class BoundEstimator:
    """Estimator bound to a fixed grid and window width.

    Kernel samples are computed once; estimating a new signal costs one matrix
    product plus an rho x rho solve, which is what makes large Monte Carlo
    sweeps affordable.
    """

    def __init__(self, est: CompiledEstimator, h: float, n_samples: int, t: float,
                 rule: str = "trapezoid"):
        m = int(round(t / h))
        if m < 1 or m > n_samples - 1:
            raise WindowError(f"window width {t} does not fit a grid of {n_samples} samples")
        self.est = est
        self.h = h
        self.m = m
        self.t = m * h
        rho = est.size
        tau = np.linspace(0.0, self.t, m + 1)
        weights = np.full(m + 1, h)
        weights[0] = weights[-1] = h / 2.0
        if rule == "simpson":
            weights = _simpson_weights(m + 1, h)
        elif rule != "trapezoid":
            raise ValueError(f"unknown quadrature rule {rule!r}")
        self.a_known = np.zeros((rho, rho))
        self.b_known = np.zeros(rho)
        rows = []
        self._slots: list[tuple[str, int, int]] = []
        for i in range(rho):
            for j in range(rho):
                self.a_known[i, j] = _known_value(est.a_entries[i][j], self.t)
                kern = _kernel_values(est.a_entries[i][j], tau, self.t)
                if np.any(kern):
                    rows.append(kern * weights)
                    self._slots.append(("a", i, j))
            self.b_known[i] = _known_value(est.b_entries[i], self.t)
            kern = _kernel_values(est.b_entries[i], tau, self.t)
            if np.any(kern):
                rows.append(kern * weights)
                self._slots.append(("b", i, 0))
        self._rows = np.vstack(rows) if rows else np.zeros((0, m + 1))

    def run(self, values: np.ndarray) -> EstimateResult:
        a = self.a_known.copy()
        b = self.b_known.copy()
        if self._rows.size:
            vals = self._rows @ values[: self.m + 1]
            for (which, i, j), v in zip(self._slots, vals):
                if which == "a":
                    a[i, j] += v
                else:
                    b[i] += v
        divisor = float(np.linalg.det(a))
        with np.errstate(all="ignore"):
            condition = float(np.linalg.cond(a))
        status = "ok" if abs(divisor) >= self.est.divisor_floor else "ill_conditioned"
        try:
            theta = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            theta = np.linalg.lstsq(a, b, rcond=None)[0]
            status = "ill_conditioned"
        return EstimateResult(
            self.t, tuple(float(v) for v in theta), divisor, condition, status
        )


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        # fall back to trapezoid when Simpson does not apply cleanly
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
        return w
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def sliding_estimate(est: CompiledEstimator, y: SampledSignal, window: float,
                     stride: float, rule: str = "trapezoid") -> list[EstimateResult]:
    """Estimate over consecutive windows, re-zeroing time at each window start."""
    h = y.h
    nw = int(round(window / h))
    ns = int(round(stride / h))
    if nw < 1 or abs(nw * h - window) > 1e-6 * max(window, h):
        raise WindowError(f"window {window} does not align with the grid step {h}")
    if ns < 1:
        raise WindowError(f"stride {stride} is below the grid step {h}")
    bound = BoundEstimator(est, h, nw + 1, nw * h, rule)
    out = []
    start = 0
    while start + nw <= y.n_samples - 1:
        out.append(bound.run(y.values[start : start + nw + 1]))
        start += ns
    if not out:
        raise WindowError("no complete window fits the signal")
    return out


# ---------------------------------------------------------------------------
# structural divisors

def _entry_poly(terms) -> Poly | None:
    """Known-part polynomial in t of an entry, or None if any signal term exists."""
    poly = Poly.zero()
    for term in terms:
        if term.applies_to == "signal":
            return None
        poly = poly + Poly.monomial(
            term.k - 1, term.c / math.factorial(term.k - 1)
        )
    return poly


def known_entry_polys(est: CompiledEstimator) -> list[list[Poly]] | None:
    """Exact A(t) as polynomials in t when every entry is signal-free."""
    rows = []
    for row in est.a_entries:
        prow = []
        for entry in row:
            p = _entry_poly(entry)
            if p is None:
                return None
            prow.append(p)
        rows.append(prow)
    return rows


def _poly_det(mat: list[list[Poly]]) -> Poly:
    if len(mat) == 1:
        return mat[0][0]
    det = Poly.zero()
    for j in range(len(mat)):
        minor = [row[:j] + row[j + 1 :] for row in mat[1:]]
        term = mat[0][j] * _poly_det(minor)
        det = det + term if j % 2 == 0 else det - term
    return det


def divisor_polynomial(est: CompiledEstimator) -> Poly | None:
    """det A(t) as an exact polynomial in t, when A is signal-free."""
    mat = known_entry_polys(est)
    if mat is None:
        return None
    return _poly_det(mat)


def reduced_divisor_polynomial(est: CompiledEstimator, index: int) -> Poly | None:
    """Per-parameter divisor: det A(t) with the content common to the Cramer
    numerator of parameter `index` cancelled (monic polynomial gcd)."""
    mat = known_entry_polys(est)
    if mat is None:
        return None
    rho = est.size
    det = _poly_det(mat)
    cof = []
    for j in range(rho):
        minor = [
            [mat[r][c] for c in range(rho) if c != index]
            for r in range(rho)
            if r != j
        ]
        m = _poly_det(minor) if minor else Poly.one()
        if (index + j) % 2 == 1:
            m = -m
        cof.append(m)
    g = Poly.zero()
    for m in cof:
        g = Poly.gcd(g, m)
    if not g or g.degree == 0:
        return det
    return det // g


# ---------------------------------------------------------------------------
# serialization

def _term_to_dict(term: KernelTerm) -> dict:
    return {
        "c": {"num": term.c.numerator, "den": term.c.denominator},
        "k": term.k,
        "nu": term.nu,
        "applies_to": term.applies_to,
    }


def _term_from_dict(doc: dict) -> KernelTerm:
    return KernelTerm(
        Fraction(doc["c"]["num"], doc["c"]["den"]),
        int(doc["k"]),
        int(doc["nu"]),
        doc["applies_to"],
    )


def estimator_to_dict(est: CompiledEstimator) -> dict:
    return {
        "theta_names": list(est.theta_names),
        "divisor_floor": est.divisor_floor,
        "A": [[[_term_to_dict(t) for t in entry] for entry in row] for row in est.a_entries],
        "B": [[_term_to_dict(t) for t in entry] for entry in est.b_entries],
    }


def estimator_from_dict(doc: dict) -> CompiledEstimator:
    a = tuple(
        tuple(tuple(_term_from_dict(t) for t in entry) for entry in row)
        for row in doc["A"]
    )
    b = tuple(tuple(_term_from_dict(t) for t in entry) for entry in doc["B"])
    return CompiledEstimator(a, b, tuple(doc["theta_names"]), float(doc["divisor_floor"]))


def estimator_to_json(est: CompiledEstimator, indent: int | None = 2) -> str:
    return json.dumps(estimator_to_dict(est), indent=indent)


def estimator_from_json(text: str) -> CompiledEstimator:
    return estimator_from_dict(json.loads(text))
