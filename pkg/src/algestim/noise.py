"""Perturbation generators: high-frequency sinusoid sums and discrete white noise.

White noise follows the sampled convention w_i = A * n_i with the n_i i.i.d.,
zero mean, unit variance; its influence on any kernel integral is governed by
A^2 / N where N is the grid size. The high-frequency class is a finite sum of
tones whose kernel integrals shrink like 1/Omega. Generators are pure given
(spec, seed) and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sigmodel import SampledSignal, grid

__all__ = [
    "HfSinusoidSpec",
    "WhiteNoiseSpec",
    "DISTRIBUTIONS",
    "gen_hf",
    "gen_white",
    "mix",
    "per_sample_snr_db",
]

DISTRIBUTIONS = ("gaussian", "uniform", "rademacher")


@dataclass(frozen=True)
class HfSinusoidSpec:
    """Finite sum of tones (amplitude, frequency rad/s, phase)."""

    tones: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.tones:
            raise ValueError("need at least one tone")
        for amp, omega, phase in self.tones:
            if omega <= 0:
                raise ValueError(f"tone frequency must be positive, got {omega}")


@dataclass(frozen=True)
class WhiteNoiseSpec:
    """Amplitude-scaled i.i.d. samples on a grid of size n = N + 1."""

    amplitude: float
    n_grid: int
    distribution: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n_grid < 1:
            raise ValueError("grid size must be positive")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unsupported distribution {self.distribution!r}; choose from {DISTRIBUTIONS}"
            )


def gen_hf(spec: HfSinusoidSpec, t0: float, t1: float, n: int) -> SampledSignal:
    t = grid(t0, t1, n)
    vals = np.zeros(n)
    for amp, omega, phase in spec.tones:
        vals += amp * np.sin(omega * t + phase)
    return SampledSignal(float(t0), float(t1), vals)


def _unit_samples(rng: np.random.Generator, distribution: str, n: int) -> np.ndarray:
    if distribution == "gaussian":
        return rng.standard_normal(n)
    if distribution == "uniform":
        half = np.sqrt(3.0)
        return rng.uniform(-half, half, n)
    if distribution == "rademacher":
        return rng.integers(0, 2, n).astype(float) * 2.0 - 1.0
    raise ValueError(f"unsupported distribution {distribution!r}")


def gen_white(spec: WhiteNoiseSpec, t0: float, t1: float, n: int) -> SampledSignal:
    if n != spec.n_grid + 1:
        raise ValueError(f"grid has {n} samples, spec wants N + 1 = {spec.n_grid + 1}")
    rng = np.random.default_rng(spec.seed)
    vals = spec.amplitude * _unit_samples(rng, spec.distribution, n)
    return SampledSignal(float(t0), float(t1), vals)


def mix(clean: SampledSignal, *noises: SampledSignal) -> SampledSignal:
    """Pointwise sum; all signals must share the grid."""
    vals = clean.values.copy()
    for w in noises:
        if (
            w.n_samples != clean.n_samples
            or abs(w.t0 - clean.t0) > 1e-12
            or abs(w.t1 - clean.t1) > 1e-12
        ):
            raise ValueError("grid mismatch between mixed signals")
        vals = vals + w.values
    return SampledSignal(clean.t0, clean.t1, vals)


def per_sample_snr_db(carrier_amplitude: float, noise_power: float) -> float:
    """10 log10 of (carrier power A^2/2) over the per-sample noise power."""
    if noise_power <= 0:
        return float("inf")
    return 10.0 * np.log10((carrier_amplitude**2 / 2.0) / noise_power)
