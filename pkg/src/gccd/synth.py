"""Desk-scale synthetic signals with known peak locations."""

from __future__ import annotations

import numpy as np

from .model import Signal

ADC_PER_MV = 200.0

# (offset from R in seconds, amplitude in mV, width in seconds)
ECG_WAVES = (
    (-0.20, 0.15, 0.025),  # P
    (-0.03, -0.12, 0.008),  # Q
    (0.0, 1.10, 0.012),  # R
    (0.035, -0.25, 0.010),  # S
    (0.28, 0.30, 0.045),  # T
)


def pulse_train(
    n: int,
    seed: int = 0,
    amplitude: float = 5.0,
    period: int = 40,
    width: int = 9,
    noise: float = 0.0,
    baseline_wander: float = 0.0,
    rate: float = 360.0,
) -> tuple[Signal, list[int]]:
    """Square pulses on a flat baseline; returns the signal and 1-based pulse centres.

    The seed picks the phase of the first pulse and the noise realisation.
    """
    if n < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(seed)
    period = min(period, max(n // 2, width + 2))
    phase = int(rng.integers(0, period - width))
    x = np.zeros(n)
    centres = []
    for start in range(phase, n - width + 1, period):
        x[start : start + width] = amplitude
        centres.append(start + width // 2 + 1)
    x = _corrupt(x, rng, noise, baseline_wander, rate)
    return Signal(tuple(np.round(x, 6)), rate, f"pulse-train-{seed}"), centres


def noisy_ecg(
    n: int,
    seed: int = 0,
    rate: float = 360.0,
    noise: float = 0.02,
    baseline_wander: float = 0.0,
    heart_rate: float = 75.0,
    amplitude: float = 1.0,
    qrs_width: float = 1.0,
) -> tuple[Signal, list[int]]:
    """Sum-of-Gaussians ECG in ADC units (200 per mV) with jittered RR intervals.

    ``noise`` and ``baseline_wander`` are in mV. ``amplitude`` scales every
    wave and ``qrs_width`` widens the Q, R and S waves (wide paced complexes
    use values around 2-3). Returns the signal and the
    1-based R-peak sample indices.
    """
    if n < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(seed)
    rr = 60.0 / heart_rate
    t = np.arange(n) / rate
    x = np.zeros(n)
    peaks = []
    beat = 0.35 + rng.uniform(0, rr * 0.5)
    while beat < n / rate + 0.5:
        for k, (offset, amp, sigma) in enumerate(ECG_WAVES):
            if k in (1, 2, 3):
                offset, sigma = offset * qrs_width, sigma * qrs_width
            amp = amp * amplitude
            centre = beat + offset
            lo = max(int((centre - 5 * sigma) * rate), 0)
            hi = min(int((centre + 5 * sigma) * rate) + 1, n)
            if lo < hi:
                x[lo:hi] += amp * np.exp(-0.5 * ((t[lo:hi] - centre) / sigma) ** 2)
        r_index = int(round(beat * rate))
        if 0 <= r_index < n:
            peaks.append(r_index + 1)
        beat += rr * (1.0 + rng.uniform(-0.08, 0.08))
    x = _corrupt(x, rng, noise, baseline_wander, rate)
    return Signal(tuple(np.round(x * ADC_PER_MV, 3)), rate, f"noisy-ecg-{seed}"), peaks


def _corrupt(x, rng, noise, baseline_wander, rate):
    if noise > 0:
        x = x + rng.normal(0.0, noise, size=len(x))
    if baseline_wander > 0:
        t = np.arange(len(x)) / rate
        x = x + baseline_wander * np.sin(2 * np.pi * 0.25 * t + rng.uniform(0, 2 * np.pi))
    return x
