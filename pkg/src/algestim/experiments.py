"""Monte Carlo studies of estimator behavior under noise, and a binary ASK
demodulation harness built on the sliding estimator.

Sweeps drive either the jammer frequency Omega or the grid size N across a
set of values, re-estimate over fresh noise draws, and fit a log-log slope to
the RMS parameter error. Amplitude rules tie the noise amplitude to the swept
value so that the expected power laws (and their breakdown when A^2/N stays
appreciable) can be measured directly. All randomness derives from a base
seed, point index, and trial index, so runs are exactly reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import noise as nz
from .estimator import BoundEstimator, CompiledEstimator
from .sigmodel import SampledSignal, SignalModel, identity_params, sample_solution

__all__ = [
    "SweepSpec",
    "SweepPoint",
    "SweepResult",
    "SlopeReport",
    "DemodSpec",
    "BerReport",
    "DemodResult",
    "AMPLITUDE_RULES",
    "fit_loglog",
    "run_sweep",
    "run_demodulation",
]

AMPLITUDE_RULES = ("fixed", "sqrt_omega", "cbrt_n", "a2_over_n_fixed")


@dataclass(frozen=True)
class SweepSpec:
    swept: str                      # "Omega" | "N"
    values: tuple[float, ...]
    amplitude_rule: str = "fixed"
    trials: int = 100
    base_seed: int = 0
    amplitude: float = 1.0          # base amplitude the rule scales
    distribution: str = "gaussian"  # white-noise sweeps only

    def __post_init__(self):
        if self.swept not in ("Omega", "N"):
            raise ValueError(f"swept must be 'Omega' or 'N', got {self.swept!r}")
        if len(self.values) < 4:
            raise ValueError("sweeps need at least 4 points")
        vals = tuple(float(v) for v in self.values)
        if any(v <= 0 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be positive and ascending")
        if self.amplitude_rule not in AMPLITUDE_RULES:
            raise ValueError(f"unknown amplitude rule {self.amplitude_rule!r}")
        if self.trials < 50:
            raise ValueError("variance-bearing studies need at least 50 trials")

    def amplitude_at(self, value: float) -> float:
        if self.amplitude_rule == "fixed":
            return self.amplitude
        if self.amplitude_rule == "sqrt_omega":
            return self.amplitude * math.sqrt(value)
        if self.amplitude_rule == "cbrt_n":
            return self.amplitude * value ** (1.0 / 3.0)
        return self.amplitude * math.sqrt(value)  # a2_over_n_fixed: A^2/N constant


@dataclass(frozen=True)
class SlopeReport:
    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class SweepPoint:
    value: float
    amplitude: float
    rms_error: float
    n_ok: int
    n_ill: int
    rows: tuple[tuple[int, str, float], ...]  # (trial, theta name, error)


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    report: SlopeReport
    skipped: tuple[float, ...]


@dataclass(frozen=True)
class BerReport:
    symbols: int
    errors: int
    ber: float
    per_sample_snr_db: float


@dataclass(frozen=True)
class DemodSpec:
    """Binary ASK stream: bit b maps to carrier amplitude (a0, a1)[b]."""

    n_symbols: int = 32
    samples_per_symbol: int = 2000
    symbol_period: float = 1.0
    carrier_omega: float = 4.0
    a0: float = 0.0
    a1: float = 1.0
    phase0: float = 0.0
    noise_kind: str = "none"        # "none" | "white" | "hf"
    noise_amplitude: float = 0.0    # white amplitude, or hf tone amplitude
    snr_db: float | None = None     # alternative way to set white amplitude
    hf_omega: float = 0.0
    distribution: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n_symbols < 1 or self.samples_per_symbol < 2:
            raise ValueError("need at least one symbol and two samples per symbol")
        if self.symbol_period <= 0 or self.carrier_omega <= 0:
            raise ValueError("symbol period and carrier frequency must be positive")
        if self.noise_kind not in ("none", "white", "hf"):
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        if self.noise_kind == "hf" and self.hf_omega <= 0:
            raise ValueError("hf jammer needs a positive 'hf_omega'")
        if self.a1 <= self.a0:
            raise ValueError("need a1 > a0 for a usable decision threshold")

    def white_amplitude(self) -> float:
        if self.snr_db is None:
            return self.noise_amplitude
        return math.sqrt((self.a1**2 / 2.0) / 10.0 ** (self.snr_db / 10.0))


@dataclass(frozen=True)
class DemodResult:
    report: BerReport
    rows: tuple[tuple[int, int, float, int], ...]  # (index, bit, estimate, decision)


def fit_loglog(points: Sequence[tuple[float, float]]) -> SlopeReport:
    """Least-squares line through the base-10 log-log of (x, y) points."""
    if len(points) < 2:
        raise ValueError("need at least two points")
    if any(x <= 0 or y <= 0 for x, y in points):
        raise ValueError("log-log fit needs positive coordinates")
    lx = np.log10([p[0] for p in points])
    ly = np.log10([p[1] for p in points])
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return SlopeReport(tuple((float(x), float(y)) for x, y in points),
                       float(slope), float(intercept), r2)


def _trial_seed(base: int, point: int, trial: int) -> int:
    ss = np.random.SeedSequence([int(base), int(point), int(trial)])
    return int(ss.generate_state(1)[0])


def run_sweep(model: SignalModel, est: CompiledEstimator, spec: SweepSpec,
              truth: Mapping[str, float], *, window: float = 1.0,
              omega_grid_samples: int = 1_000_001,
              rule: str = "trapezoid") -> SweepResult:
    """RMS parameter error against the swept quantity, with a log-log slope fit.

    `truth` holds the model's natural parameters; the clean signal comes from
    the model sampler and errors are measured against the exact identity
    coefficients.
    """
    true_params = identity_params(model, truth)
    targets = [float(true_params[n]) for n in est.theta_names]

    points: list[SweepPoint] = []
    skipped: list[float] = []
    for p_idx, value in enumerate(spec.values):
        amp = spec.amplitude_at(float(value))
        if spec.swept == "Omega":
            n = omega_grid_samples
        else:
            n = int(value) + 1
        clean = sample_solution(model, truth, 0.0, window, n)
        bound = BoundEstimator(est, clean.h, n, window, rule)
        rows: list[tuple[int, str, float]] = []
        sq_sum = 0.0
        n_ok = 0
        n_ill = 0
        for trial in range(spec.trials):
            seed = _trial_seed(spec.base_seed, p_idx, trial)
            if spec.swept == "Omega":
                rng = np.random.default_rng(seed)
                phase = float(rng.uniform(0.0, 2.0 * math.pi))
                w = nz.gen_hf(
                    nz.HfSinusoidSpec(((amp, float(value), phase),)), 0.0, window, n
                )
            else:
                w = nz.gen_white(
                    nz.WhiteNoiseSpec(amp, n - 1, spec.distribution, seed),
                    0.0, window, n,
                )
            res = bound.run(clean.values + w.values)
            if res.status != "ok":
                n_ill += 1
                continue
            n_ok += 1
            for name, got, want in zip(est.theta_names, res.theta, targets):
                err = abs(got - want)
                rows.append((trial, name, err))
                sq_sum += err * err
        if n_ok == 0:
            skipped.append(float(value))
            continue
        rms = math.sqrt(sq_sum / (n_ok * len(est.theta_names)))
        points.append(SweepPoint(float(value), amp, rms, n_ok, n_ill, tuple(rows)))

    if len(points) < 2:
        raise RuntimeError(
            "too many sweep points were ill-conditioned to fit a slope"
        )
    report = fit_loglog([(p.value, p.rms_error) for p in points])
    return SweepResult(tuple(points), report, tuple(skipped))


def run_demodulation(spec: DemodSpec, est: CompiledEstimator,
                     rule: str = "trapezoid") -> DemodResult:
    """Generate the modulated stream, add noise, estimate per-symbol amplitude,
    threshold at the alphabet midpoint, count bit errors."""
    rng = np.random.default_rng(spec.seed)
    bits = rng.integers(0, 2, spec.n_symbols)
    spsym = spec.samples_per_symbol
    n_total = spec.n_symbols * spsym + 1
    t_end = spec.n_symbols * spec.symbol_period
    t = np.linspace(0.0, t_end, n_total)
    sym_idx = np.minimum((t / spec.symbol_period).astype(int), spec.n_symbols - 1)
    amps = np.where(bits[sym_idx] == 1, spec.a1, spec.a0)
    clean = amps * np.sin(spec.carrier_omega * t + spec.phase0)

    noise_power = 0.0
    if spec.noise_kind == "white":
        a_w = spec.white_amplitude()
        noise_power = a_w**2
        w = nz.gen_white(
            nz.WhiteNoiseSpec(a_w, n_total - 1, spec.distribution, spec.seed),
            0.0, t_end, n_total,
        )
        values = clean + w.values
    elif spec.noise_kind == "hf":
        noise_power = spec.noise_amplitude**2 / 2.0
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        w = nz.gen_hf(
            nz.HfSinusoidSpec(((spec.noise_amplitude, spec.hf_omega, phase),)),
            0.0, t_end, n_total,
        )
        values = clean + w.values
    else:
        values = clean

    stream = SampledSignal(0.0, t_end, values)
    from .estimator import sliding_estimate

    results = sliding_estimate(est, stream, spec.symbol_period, spec.symbol_period, rule)
    if len(results) != spec.n_symbols:
        raise RuntimeError(
            f"expected {spec.n_symbols} windows, got {len(results)}"
        )
    threshold = (spec.a0 + spec.a1) / 2.0
    rows = []
    errors = 0
    for i, res in enumerate(results):
        est_amp = math.hypot(res.theta[0], res.theta[1])
        decision = 1 if est_amp > threshold else 0
        if decision != int(bits[i]):
            errors += 1
        rows.append((i, int(bits[i]), est_amp, decision))
    snr = nz.per_sample_snr_db(spec.a1, noise_power) if noise_power else float("inf")
    report = BerReport(spec.n_symbols, errors, errors / spec.n_symbols, snr)
    return DemodResult(report, tuple(rows))
