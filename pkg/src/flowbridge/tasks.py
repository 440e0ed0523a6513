"""Synthetic task distributions and signal degradations.

Planar families (two_moons, checkerboard, eight_gaussians, cond_ring) are
2-D point distributions; toy_signal is a bank of random sinusoid mixtures
degraded by synthetic reverberation or hard clipping. Training streams yield
batches whose conditions are the ground-truth degradation descriptors, with
an optional fraction of clean samples carrying boundary-value descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .analysis import SDR_CAP_DB, sdr
from .coupling import SignalBatch
from .exceptions import ConfigError, ValidationError

__all__ = [
    "TaskSpec",
    "gen_two_moons",
    "gen_checkerboard",
    "gen_eight_gaussians",
    "gen_cond_ring",
    "gen_toy_signal",
    "make_reverb_kernel",
    "apply_reverb",
    "compute_c50",
    "clip_signal",
    "ClipResult",
    "clip_to_sdr",
    "make_training_stream",
    "CLEAN_T60",
    "EARLY_WINDOW_S",
]

PLANAR_FAMILIES = ("two_moons", "checkerboard", "eight_gaussians", "cond_ring")
# Descriptor values attached to undegraded samples: a near-anechoic decay
# time and the capped early/late ratio of a bare impulse.
CLEAN_T60 = 0.01
EARLY_WINDOW_S = 0.05


@dataclass(frozen=True)
class TaskSpec:
    family: str
    n: int = 2
    fs: float = 8000.0
    degradation: str | None = None
    clean_mix_prob: float = 0.0
    seed_noise: float = 0.05

    def __post_init__(self):
        if self.family not in PLANAR_FAMILIES + ("toy_signal",):
            raise ConfigError(f"unknown task family {self.family!r}")
        if self.family in PLANAR_FAMILIES and self.n != 2:
            raise ConfigError(f"{self.family} is planar; n must be 2, got {self.n}")
        if self.family == "toy_signal":
            if self.degradation not in ("reverb", "clip"):
                raise ConfigError(
                    f"toy_signal needs degradation 'reverb' or 'clip', got {self.degradation!r}"
                )
            if self.n < 16:
                raise ConfigError(f"toy_signal length too short: {self.n}")
        elif self.degradation is not None:
            raise ConfigError(f"{self.family} does not take a degradation")
        if not 0.0 <= self.clean_mix_prob <= 1.0:
            raise ConfigError(f"clean_mix_prob must be in [0, 1], got {self.clean_mix_prob}")
        if self.clean_mix_prob > 0 and self.family != "toy_signal":
            raise ConfigError("clean_mix_prob only applies to toy_signal tasks")

    @property
    def descriptors(self) -> tuple[str, ...]:
        if self.family == "cond_ring":
            return ("radius",)
        if self.family == "toy_signal":
            return ("t60", "c50") if self.degradation == "reverb" else ("sdr",)
        return ()

    @property
    def cond_dim(self) -> int:
        return len(self.descriptors)


def gen_two_moons(m: int, rng: np.random.Generator, noise: float = 0.05) -> np.ndarray:
    """Two interleaved half-circles; population mean is (0.5, 0.25)."""
    upper = rng.integers(0, 2, size=m).astype(bool)
    t = rng.random(m) * np.pi
    x = np.where(upper, np.cos(t), 1.0 - np.cos(t))
    y = np.where(upper, np.sin(t), 1.0 - np.sin(t) - 0.5)
    pts = np.stack([x, y], axis=1) + noise * rng.standard_normal((m, 2))
    return pts.astype(np.float32)


def gen_checkerboard(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform density on the even-parity cells of a 4x4 grid over [-2, 2]^2."""
    x1 = rng.random(m) * 4.0 - 2.0
    x2 = rng.random(m) - rng.integers(0, 2, size=m) * 2.0
    x2 = x2 + np.floor(x1) % 2
    return np.stack([x1, x2], axis=1).astype(np.float32)


def gen_eight_gaussians(m: int, rng: np.random.Generator) -> np.ndarray:
    """Equal mixture of eight isotropic Gaussians on a circle of radius 2."""
    k = rng.integers(0, 8, size=m)
    ang = 2.0 * np.pi * k / 8.0
    centers = 2.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return (centers + 0.2 * rng.standard_normal((m, 2))).astype(np.float32)


def gen_cond_ring(m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Points on circles of random radius; the radius is the condition."""
    r = rng.uniform(0.5, 2.0, size=m)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=m)
    pts = r[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    pts = pts + 0.02 * rng.standard_normal((m, 2))
    return pts.astype(np.float32), r[:, None].astype(np.float32)


def gen_toy_signal(m: int, n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Random sinusoid mixtures, band-limited below fs/4, peak-normalized to 0.9."""
    t = np.arange(n) / fs
    out = np.zeros((m, n))
    for i in range(m):
        n_comp = int(rng.integers(3, 9))
        freqs = rng.uniform(60.0, fs / 4.0, size=n_comp)
        amps = rng.uniform(0.3, 1.0, size=n_comp)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n_comp)
        out[i] = (amps[:, None] * np.sin(2.0 * np.pi * freqs[:, None] * t + phases[:, None])).sum(
            axis=0
        )
    out *= 0.9 / np.abs(out).max(axis=1, keepdims=True)
    return out.astype(np.float32)


def make_reverb_kernel(
    t60: float, fs: float, duration: float, rng: np.random.Generator
) -> np.ndarray:
    """Exponentially decaying noise tail behind a unit direct tap.

    The amplitude envelope exp(-ln(1000) t / t60) loses 60 dB of energy at
    t = t60. The kernel must cover at least the 50 ms early window used by
    the clarity descriptor.
    """
    if t60 <= 0:
        raise ValidationError(f"t60 must be positive, got {t60}")
    if duration < EARLY_WINDOW_S:
        raise ValidationError(f"kernel must span at least {EARLY_WINDOW_S}s, got {duration}s")
    length = int(round(duration * fs))
    t = np.arange(length) / fs
    taps = rng.standard_normal(length) * np.exp(-np.log(1000.0) * t / t60)
    taps[0] = 1.0
    return taps


def apply_reverb(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve and truncate back to the input length."""
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-D signal, got {x.shape}")
    return np.convolve(x, kernel)[: x.shape[0]]


def compute_c50(kernel: np.ndarray, fs: float) -> float:
    """Clarity: early (first 50 ms) to late energy ratio in dB, capped +100."""
    if fs <= 0:
        raise ValidationError(f"sample rate must be positive, got {fs}")
    split = int(round(EARLY_WINDOW_S * fs))
    energy = np.asarray(kernel, dtype=np.float64) ** 2
    early = float(energy[:split].sum())
    late = float(energy[split:].sum())
    if early == 0.0:
        raise ValidationError("kernel has no energy in the early window")
    if late == 0.0:
        return SDR_CAP_DB
    return min(10.0 * np.log10(early / late), SDR_CAP_DB)


def clip_signal(x: np.ndarray, threshold: float) -> np.ndarray:
    if threshold <= 0:
        raise ValidationError(f"clip threshold must be positive, got {threshold}")
    return np.clip(x, -threshold, threshold)


@dataclass(frozen=True)
class ClipResult:
    values: np.ndarray
    threshold: float
    achieved_sdr: float
    achieved: bool


def clip_to_sdr(x: np.ndarray, target_db: float, tol: float = 0.1) -> ClipResult:
    """Find the clip threshold whose distortion hits the target SDR.

    SDR grows monotonically with the threshold (from 0 dB toward the cap), so
    bisection over (0, max|x|] converges to within ``tol`` dB. Targets outside
    the attainable range return the signal unclipped with achieved=False.
    """
    x = np.asarray(x, dtype=np.float64)
    peak = float(np.abs(x).max())
    if peak == 0.0:
        raise ValidationError("cannot clip an identically zero signal")
    if not 0.0 < target_db < SDR_CAP_DB:
        return ClipResult(x.copy(), peak, SDR_CAP_DB, False)
    lo, hi = 0.0, peak
    best = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        clipped = clip_signal(x, mid)
        got = sdr(x, clipped)
        best = (clipped, mid, got)
        if abs(got - target_db) <= tol:
            return ClipResult(clipped, mid, got, True)
        if got < target_db:
            lo = mid
        else:
            hi = mid
    if best is not None and abs(best[2] - target_db) <= tol:
        return ClipResult(best[0], best[1], best[2], True)
    return ClipResult(x.copy(), peak, SDR_CAP_DB, False)


def make_training_stream(
    spec: TaskSpec, batch_size: int, rng: np.random.Generator
) -> Iterator[SignalBatch]:
    """Endless stream of training batches for a task.

    Signal tasks draw a fresh degradation per sample and attach its
    ground-truth descriptors as the condition; with probability
    clean_mix_prob a sample is left clean and carries the boundary
    descriptors (t60 = CLEAN_T60, capped c50 / sdr) instead.
    """
    if batch_size < 1:
        raise ValidationError(f"batch_size must be >= 1, got {batch_size}")

    def planar() -> Iterator[SignalBatch]:
        gen = {
            "two_moons": lambda: gen_two_moons(batch_size, rng, noise=spec.seed_noise),
            "checkerboard": lambda: gen_checkerboard(batch_size, rng),
            "eight_gaussians": lambda: gen_eight_gaussians(batch_size, rng),
        }
        if spec.family == "cond_ring":
            while True:
                pts, r = gen_cond_ring(batch_size, rng)
                yield SignalBatch(pts, r)
        else:
            draw = gen[spec.family]
            while True:
                yield SignalBatch(draw())

    def reverb() -> Iterator[SignalBatch]:
        duration = max(spec.n / spec.fs, EARLY_WINDOW_S)
        while True:
            clean = gen_toy_signal(batch_size, spec.n, spec.fs, rng)
            values = np.empty_like(clean)
            cond = np.empty((batch_size, 2), dtype=np.float32)
            for i in range(batch_size):
                if rng.random() < spec.clean_mix_prob:
                    values[i] = clean[i]
                    cond[i] = (CLEAN_T60, SDR_CAP_DB)
                    continue
                t60 = float(rng.uniform(0.1, 1.0))
                kernel = make_reverb_kernel(t60, spec.fs, duration, rng)
                wet = apply_reverb(clean[i].astype(np.float64), kernel)
                values[i] = (0.9 * wet / np.abs(wet).max()).astype(np.float32)
                cond[i] = (t60, compute_c50(kernel, spec.fs))
            yield SignalBatch(values, cond)

    def clip() -> Iterator[SignalBatch]:
        while True:
            clean = gen_toy_signal(batch_size, spec.n, spec.fs, rng)
            values = np.empty_like(clean)
            cond = np.empty((batch_size, 1), dtype=np.float32)
            for i in range(batch_size):
                if rng.random() < spec.clean_mix_prob:
                    values[i] = clean[i]
                    cond[i] = SDR_CAP_DB
                    continue
                target = float(rng.uniform(1.0, 40.0))
                result = clip_to_sdr(clean[i].astype(np.float64), target)
                values[i] = result.values.astype(np.float32)
                cond[i] = result.achieved_sdr
            yield SignalBatch(values, cond)

    if spec.family in PLANAR_FAMILIES:
        return planar()
    return reverb() if spec.degradation == "reverb" else clip()
