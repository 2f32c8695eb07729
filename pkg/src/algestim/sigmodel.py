"""Signal families and their operational identities.

Each model states an identity of the form

    sum_a  coeff * s^mu * x^(nu)  -  sum_b  coeff * s^kappa  =  0

satisfied by the operational image x(s) of the time signal, where x^(nu)
denotes the nu-th s-derivative. Coefficients are affine-linear forms in the
model parameters; the subset named in `estimated` is what an estimator will
solve for, remaining parameter names are nuisance quantities (typically
initial-condition terms) that get annihilated during derivation.

Known shape constants (frequencies etc.) enter as exact Fractions of their
float values, so every symbolic manipulation downstream stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .exactalg import Poly, RatFunc

__all__ = [
    "LinForm",
    "ATerm",
    "BTerm",
    "SignalModel",
    "SampledSignal",
    "MODEL_KINDS",
    "build_model",
    "identity_params",
    "default_witness",
    "sample_solution",
    "operational_image",
    "identity_polynomials",
    "residual_check",
    "model_to_dict",
    "model_from_dict",
]


@dataclass(frozen=True)
class LinForm:
    """Affine-linear form const + sum(coeff * param)."""

    const: Fraction
    terms: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def known(cls, c) -> "LinForm":
        return cls(Fraction(c))

    @classmethod
    def param(cls, name: str, factor=1) -> "LinForm":
        return cls(Fraction(0), ((name, Fraction(factor)),))

    def __add__(self, other: "LinForm") -> "LinForm":
        acc = dict(self.terms)
        for name, c in other.terms:
            acc[name] = acc.get(name, Fraction(0)) + c
        terms = tuple(sorted((n, c) for n, c in acc.items() if c))
        return LinForm(self.const + other.const, terms)

    def scale(self, c) -> "LinForm":
        c = Fraction(c)
        if not c:
            return LinForm(Fraction(0))
        return LinForm(self.const * c, tuple((n, v * c) for n, v in self.terms))

    @property
    def is_const(self) -> bool:
        return not self.terms

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.terms)

    def coeff_of(self, name: str) -> Fraction:
        for n, c in self.terms:
            if n == name:
                return c
        return Fraction(0)

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        acc = self.const
        for n, c in self.terms:
            acc += c * values[n]
        return acc

    def format(self, numeric: bool = False) -> str:
        def fmt(c):
            return f"{float(c):.6g}" if numeric else str(c)

        parts = [fmt(self.const)] if self.const or not self.terms else []
        for n, c in self.terms:
            parts.append(n if c == 1 else f"{fmt(c)}*{n}")
        return " + ".join(parts)


@dataclass(frozen=True)
class ATerm:
    """Coefficient slot multiplying s^s_power * x^(deriv_order)."""

    s_power: int
    deriv_order: int
    coeff: LinForm


@dataclass(frozen=True)
class BTerm:
    """Coefficient slot multiplying the known monomial s^s_power."""

    s_power: int
    coeff: LinForm


@dataclass(frozen=True)
class SignalModel:
    kind: str
    a_terms: tuple[ATerm, ...]
    b_terms: tuple[BTerm, ...]
    estimated: tuple[str, ...]
    shape: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        if not self.a_terms:
            raise ValueError("model needs at least one signal coefficient")
        present = self.param_names
        missing = [p for p in self.estimated if p not in present]
        if missing:
            raise ValueError(f"estimated parameters not in identity: {missing}")
        if not self.estimated:
            raise ValueError("no estimated parameters")
        if len(self.estimated) >= len(self.a_terms) + len(self.b_terms):
            raise ValueError("unknown set must be strictly inside the coefficient set")

    @property
    def n_a(self) -> int:
        """N: number of signal-side coefficients minus one."""
        return len(self.a_terms) - 1

    @property
    def n_b(self) -> int:
        """M: number of known-side coefficients."""
        return len(self.b_terms)

    @property
    def param_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for t in self.a_terms + self.b_terms:
            for n in t.coeff.params:
                if n not in names:
                    names.append(n)
        return tuple(names)

    @property
    def nuisance(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names if n not in self.estimated)

    @property
    def unknown_mask(self) -> tuple[int, ...]:
        """Indices (a-terms then b-terms) of slots carrying estimated parameters."""
        slots = []
        for i, t in enumerate(self.a_terms + self.b_terms):
            if any(n in self.estimated for n in t.coeff.params):
                slots.append(i)
        return tuple(slots)

    @property
    def shape_dict(self) -> dict:
        return dict(self.shape)

    def describe(self) -> str:
        a = " + ".join(
            f"({t.coeff.format(numeric=True)})*s^{t.s_power}*x^({t.deriv_order})"
            for t in self.a_terms
        )
        b = " + ".join(
            f"({t.coeff.format(numeric=True)})*s^{t.s_power}" for t in self.b_terms
        )
        return f"{a} - [{b or '0'}] = 0"


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real signal on [t0, t1], endpoints included."""

    t0: float
    t1: float
    values: np.ndarray

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError("t1 must exceed t0")
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("need at least two samples")

    @property
    def n_samples(self) -> int:
        return int(self.values.size)

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / (self.n_samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_samples)

    def window(self, start: int, length: int) -> "SampledSignal":
        """Sub-signal of `length` steps starting at sample index `start`, re-zeroed."""
        vals = self.values[start : start + length + 1]
        return SampledSignal(0.0, length * self.h, vals)


def grid(t0: float, t1: float, n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("grid needs at least two samples")
    return np.linspace(t0, t1, n)


def _f(x: float) -> Fraction:
    return Fraction(float(x))


# ---------------------------------------------------------------------------
# model builders

def _tone_identity(omegas: list[float]) -> tuple[tuple[ATerm, ...], tuple[BTerm, ...]]:
    """Known-frequency trigonometric sum: prod(s^2+w_i^2) x = sum_i (p1_i s + p2_i w_i) prod_{j!=i}."""
    ws = [_f(w) for w in omegas]
    full = Poly.one()
    for w in ws:
        full = full * Poly([w * w, 0, 1])
    a_terms = tuple(
        ATerm(mu, 0, LinForm.known(c))
        for mu, c in enumerate(full.coeffs)
        if c != 0
    )
    b_forms: dict[int, LinForm] = {}
    for i, w in enumerate(ws):
        rest = Poly.one()
        for j, wj in enumerate(ws):
            if j != i:
                rest = rest * Poly([wj * wj, 0, 1])
        for kappa, c in enumerate(rest.coeffs):
            if c == 0:
                continue
            f1 = LinForm.param(f"p1_{i}", c)          # goes with s^(kappa+1)
            f2 = LinForm.param(f"p2_{i}", c * w)      # goes with s^kappa
            b_forms[kappa + 1] = b_forms.get(kappa + 1, LinForm.known(0)) + f1
            b_forms[kappa] = b_forms.get(kappa, LinForm.known(0)) + f2
    b_terms = tuple(BTerm(k, f) for k, f in sorted(b_forms.items(), reverse=True))
    return a_terms, b_terms


def build_model(kind: str, **shape) -> SignalModel:
    """Construct a library model from its kind and shape parameters."""
    if kind == "constant":
        if shape:
            raise ValueError(f"constant model takes no shape parameters, got {shape}")
        return SignalModel(
            kind,
            (ATerm(1, 0, LinForm.known(1)),),
            (BTerm(0, LinForm.param("theta")),),
            ("theta",),
        )

    if kind == "polynomial":
        degree = shape.pop("degree", None)
        if shape or degree is None or int(degree) < 0:
            raise ValueError("polynomial model needs a nonnegative 'degree'")
        degree = int(degree)
        a = (ATerm(degree + 1, 0, LinForm.known(1)),)
        b = tuple(
            BTerm(degree - j, LinForm.param(f"c{j}", math.factorial(j)))
            for j in range(degree + 1)
        )
        return SignalModel(kind, a, b, tuple(f"c{j}" for j in range(degree + 1)),
                           (("degree", degree),))

    if kind == "trig_sum":
        estimate = shape.pop("estimate", "amplitudes")
        if estimate == "frequency":
            if shape:
                raise ValueError(f"unexpected shape parameters {shape}")
            a = (
                ATerm(0, 0, LinForm.param("omega2")),
                ATerm(2, 0, LinForm.known(1)),
            )
            b = (BTerm(1, LinForm.param("b1")), BTerm(0, LinForm.param("b0")))
            return SignalModel(kind, a, b, ("omega2",), (("estimate", "frequency"),))
        if estimate != "amplitudes":
            raise ValueError(f"unknown estimate target {estimate!r}")
        omegas = list(shape.pop("omegas", ()))
        if shape or not omegas or any(w <= 0 for w in omegas):
            raise ValueError("trig_sum needs positive 'omegas'")
        a, b = _tone_identity(omegas)
        est = tuple(f"p{k}_{i}" for i in range(len(omegas)) for k in (1, 2))
        return SignalModel(kind, a, b, est,
                           (("estimate", "amplitudes"), ("omegas", tuple(omegas))))

    if kind == "sinc":
        omega = shape.pop("omega", None)
        if shape or omega is None or omega <= 0:
            raise ValueError("sinc model needs a positive 'omega'")
        w2 = _f(omega) ** 2
        a = (ATerm(0, 1, LinForm.known(w2)), ATerm(2, 1, LinForm.known(1)))
        b = (BTerm(0, LinForm.param("amp", -_f(omega))),)
        return SignalModel(kind, a, b, ("amp",), (("omega", float(omega)),))

    if kind == "raised_cosine":
        omega = shape.pop("omega", None)
        if shape or omega is None or omega <= 0:
            raise ValueError("raised_cosine model needs a positive 'omega'")
        w2 = _f(omega) ** 2
        a = (
            ATerm(0, 0, LinForm.known(w2)),
            ATerm(2, 0, LinForm.known(1)),
            ATerm(0, 2, LinForm.known(w2)),
            ATerm(2, 2, LinForm.known(1)),
        )
        b = (BTerm(1, LinForm.param("amp")),)
        return SignalModel(kind, a, b, ("amp",), (("omega", float(omega)),))

    if kind == "rational":
        den = list(shape.pop("den", ()))
        num_degree = shape.pop("num_degree", None)
        if shape or not den or den[-1] == 0 or num_degree is None:
            raise ValueError("rational model needs 'den' coefficients and 'num_degree'")
        num_degree = int(num_degree)
        if num_degree >= len(den) - 1:
            raise ValueError("numerator degree must be below denominator degree")
        a = tuple(
            ATerm(mu, 0, LinForm.known(_f(c))) for mu, c in enumerate(den) if c != 0
        )
        b = tuple(BTerm(k, LinForm.param(f"n{k}")) for k in range(num_degree + 1))
        return SignalModel(kind, a, b, tuple(f"n{k}" for k in range(num_degree + 1)),
                           (("den", tuple(float(c) for c in den)),
                            ("num_degree", num_degree)))

    raise ValueError(f"unknown model kind {kind!r}")


MODEL_KINDS = ("constant", "polynomial", "trig_sum", "sinc", "raised_cosine", "rational")


# ---------------------------------------------------------------------------
# parameter plumbing

def identity_params(model: SignalModel, natural: Mapping[str, float]) -> dict[str, Fraction]:
    """Map natural parameters (amplitudes, phases, ...) to exact identity coefficients."""
    kind = model.kind
    if kind == "constant":
        return {"theta": _f(natural["theta"])}
    if kind == "polynomial":
        return {n: _f(natural[n]) for n in model.param_names}
    if kind == "trig_sum":
        if model.shape_dict.get("estimate") == "frequency":
            w = float(natural["omega"])
            amp, phase = float(natural["amp"]), float(natural["phase"])
            return {
                "omega2": _f(w) ** 2,
                "b1": _f(amp * math.sin(phase)),
                "b0": _f(amp * math.cos(phase)) * _f(w),
            }
        omegas = model.shape_dict["omegas"]
        out: dict[str, Fraction] = {}
        for i in range(len(omegas)):
            amp = float(natural[f"amp_{i}"])
            phase = float(natural[f"phase_{i}"])
            out[f"p1_{i}"] = _f(amp * math.sin(phase))
            out[f"p2_{i}"] = _f(amp * math.cos(phase))
        return out
    if kind in ("sinc", "raised_cosine"):
        return {"amp": _f(natural["amp"])}
    if kind == "rational":
        return {n: _f(natural[n]) for n in model.param_names}
    raise ValueError(f"unknown model kind {kind!r}")


def default_witness(model: SignalModel) -> dict[str, float]:
    """Deterministic generic natural parameters, used for rank and determinant checks."""
    kind = model.kind
    if kind == "constant":
        return {"theta": 1.5}
    if kind == "polynomial":
        return {n: 0.75 + 0.5 * i for i, n in enumerate(model.param_names)}
    if kind == "trig_sum":
        if model.shape_dict.get("estimate") == "frequency":
            return {"amp": 1.25, "phase": 0.7, "omega": 3.0}
        omegas = model.shape_dict["omegas"]
        out = {}
        for i in range(len(omegas)):
            out[f"amp_{i}"] = 1.0 + 0.5 * i
            out[f"phase_{i}"] = 0.6 + 0.3 * i
        return out
    if kind in ("sinc", "raised_cosine"):
        return {"amp": 1.25}
    if kind == "rational":
        return {n: 0.5 + 0.25 * i for i, n in enumerate(model.param_names)}
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# time-domain samplers

def sample_solution(model: SignalModel, natural: Mapping[str, float],
                    t0: float, t1: float, n: int) -> SampledSignal:
    """Closed-form time samples of the model's solution on a uniform grid."""
    t = grid(t0, t1, n)
    kind = model.kind
    if kind == "constant":
        vals = np.full(n, float(natural["theta"]))
    elif kind == "polynomial":
        deg = model.shape_dict["degree"]
        coeffs = [float(natural[f"c{j}"]) for j in range(deg + 1)]
        vals = np.polynomial.polynomial.polyval(t, coeffs)
    elif kind == "trig_sum":
        if model.shape_dict.get("estimate") == "frequency":
            vals = float(natural["amp"]) * np.sin(
                float(natural["omega"]) * t + float(natural["phase"])
            )
        else:
            vals = np.zeros(n)
            for i, w in enumerate(model.shape_dict["omegas"]):
                vals += float(natural[f"amp_{i}"]) * np.sin(
                    float(w) * t + float(natural[f"phase_{i}"])
                )
    elif kind == "sinc":
        w = model.shape_dict["omega"]
        amp = float(natural["amp"])
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.where(t == 0.0, amp * w, amp * np.sin(w * t) / np.where(t == 0, 1.0, t))
    elif kind == "raised_cosine":
        w = model.shape_dict["omega"]
        vals = float(natural["amp"]) * np.cos(w * t) / (1.0 + t * t)
    elif kind == "rational":
        from scipy.signal import residue

        den = list(model.shape_dict["den"])
        deg = model.shape_dict["num_degree"]
        num = [float(natural[f"n{k}"]) for k in range(deg + 1)]
        # scipy wants highest power first
        r, p, k = residue(num[::-1], den[::-1])
        if len(k):
            raise ValueError("rational model must be strictly proper")
        vals = np.zeros(n, dtype=complex)
        for ri, pi in zip(r, p):
            vals += ri * np.exp(pi * t)
        vals = vals.real
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return SampledSignal(float(t0), float(t1), np.asarray(vals, dtype=float))


# ---------------------------------------------------------------------------
# operational images and identity validation

def operational_image(model: SignalModel, params: Mapping[str, Fraction]) -> RatFunc | None:
    """Exact rational operational image x(s), or None when no rational form exists.

    `params` are identity coefficients (see identity_params). The image is
    assembled from the per-family transform formula, not from the stored
    identity, so residual checks against the identity are meaningful.
    """
    kind = model.kind
    if kind == "constant":
        return RatFunc(Poly.const(params["theta"]), Poly.monomial(1))
    if kind == "polynomial":
        deg = model.shape_dict["degree"]
        out = RatFunc.zero()
        for j in range(deg + 1):
            out = out + RatFunc(
                Poly.const(params[f"c{j}"] * math.factorial(j)), Poly.monomial(j + 1)
            )
        return out
    if kind == "trig_sum":
        if model.shape_dict.get("estimate") == "frequency":
            return RatFunc(
                Poly([params["b0"], params["b1"]]), Poly([params["omega2"], 0, 1])
            )
        out = RatFunc.zero()
        for i, w in enumerate(model.shape_dict["omegas"]):
            wf = _f(w)
            out = out + RatFunc(
                Poly([params[f"p2_{i}"] * wf, params[f"p1_{i}"]]),
                Poly([wf * wf, 0, 1]),
            )
        return out
    if kind == "rational":
        deg = model.shape_dict["num_degree"]
        num = Poly([params[f"n{k}"] for k in range(deg + 1)])
        den = Poly([_f(c) for c in model.shape_dict["den"]])
        return RatFunc(num, den)
    return None


def identity_polynomials(model: SignalModel, params: Mapping[str, Fraction]
                         ) -> tuple[dict[int, Poly], Poly]:
    """Numeric identity as ({nu: P_nu}, Q) with sum P_nu x^(nu) = Q."""
    p: dict[int, Poly] = {}
    for t in model.a_terms:
        cur = p.get(t.deriv_order, Poly.zero())
        p[t.deriv_order] = cur + Poly.monomial(t.s_power, t.coeff.evaluate(params))
    q = Poly.zero()
    for t in model.b_terms:
        q = q + Poly.monomial(t.s_power, t.coeff.evaluate(params))
    return {nu: poly for nu, poly in p.items() if poly}, q


def _mp_image_derivs(model: SignalModel, natural: Mapping[str, float],
                     s0: float, max_order: int):
    """High-precision numeric x^(j)(s0) via the defining integral, j = 0..max_order."""
    import mpmath as mp

    w = float(model.shape_dict["omega"])
    amp = float(natural["amp"])
    with mp.workdps(40):
        s = mp.mpf(s0)
        out = []
        for j in range(max_order + 1):
            def f(t, j=j):
                return (-t) ** j * mp.e ** (-s * t) * amp * mp.cos(w * t) / (1 + t * t)

            out.append(mp.quad(f, [0, mp.inf]))
        return out


def residual_check(model: SignalModel, natural: Mapping[str, float],
                   *, points: int = 10, seed: int = 0) -> float:
    """Max absolute identity residual over random evaluation points.

    Exact (returns 0.0) whenever the model admits a rational operational image;
    falls back to high-precision quadrature for the raised cosine.
    """
    import random

    rnd = random.Random(seed)
    params = identity_params(model, natural)
    p_map, q = identity_polynomials(model, params)
    max_order = max(p_map)

    image = operational_image(model, params)
    if image is not None:
        derivs = [image]
        for _ in range(max_order):
            derivs.append(derivs[-1].deriv())
        worst = Fraction(0)
        done = 0
        attempts = 0
        while done < points:
            attempts += 1
            if attempts > 20 * points:
                raise RuntimeError("evaluation points kept hitting poles")
            s0 = Fraction(rnd.randint(1, 30), rnd.randint(1, 10))
            try:
                r = -q(s0)
                for nu, pol in p_map.items():
                    r += pol(s0) * derivs[nu](s0)
            except ZeroDivisionError:
                continue
            worst = max(worst, abs(r))
            done += 1
        return float(worst)

    if model.kind == "sinc":
        # identity involves only derivatives of x, all rational: x' = -amp*w/(s^2+w^2)
        w = _f(model.shape_dict["omega"])
        amp = _f(natural["amp"])
        x1 = RatFunc(Poly.const(-amp * w), Poly([w * w, 0, 1]))
        derivs = [RatFunc.zero(), x1]
        for _ in range(max_order - 1):
            derivs.append(derivs[-1].deriv())
        worst = Fraction(0)
        for _ in range(points):
            s0 = Fraction(rnd.randint(1, 30), rnd.randint(1, 10))
            r = -q(s0)
            for nu, pol in p_map.items():
                if nu == 0:
                    raise RuntimeError("sinc identity should not reference x itself")
                r += pol(s0) * derivs[nu](s0)
            worst = max(worst, abs(r))
        return float(worst)

    if model.kind == "raised_cosine":
        worst = 0.0
        for _ in range(points):
            s0 = rnd.randint(1, 6) + rnd.random()
            derivs = _mp_image_derivs(model, natural, s0, max_order)
            r = -float(q(_f(s0)))
            for nu, pol in p_map.items():
                r += float(pol(_f(s0))) * float(derivs[nu])
            worst = max(worst, abs(r))
        return worst

    raise ValueError(f"no residual path for kind {model.kind!r}")


# ---------------------------------------------------------------------------
# serialization

def model_to_dict(model: SignalModel) -> dict:
    return {
        "kind": model.kind,
        "shape": {k: (list(v) if isinstance(v, tuple) else v) for k, v in model.shape},
        "estimated": list(model.estimated),
        "unknown_mask": list(model.unknown_mask),
    }


def model_from_dict(doc: Mapping) -> SignalModel:
    try:
        kind = doc["kind"]
        shape = dict(doc.get("shape", {}))
    except (TypeError, KeyError) as exc:
        raise ValueError(f"bad model document: {exc}") from exc
    model = build_model(kind, **shape)
    want = doc.get("estimated")
    if want is not None and tuple(want) != model.estimated:
        raise ValueError(
            f"estimated set {list(want)} does not match builder output {list(model.estimated)}"
        )
    return model
