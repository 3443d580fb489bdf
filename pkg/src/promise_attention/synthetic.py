"""Synthetic pseudo-periodic data with a working-week imprint."""
from __future__ import annotations

import numpy as np


def weekly_profile(slots: int = 336) -> np.ndarray:
    """Daily bump over a flat base, damped on the last two days of the week."""
    per_day = slots / 7
    tau = np.arange(slots)
    day = (tau // per_day).astype(int)
    phase = 2 * np.pi * (tau % per_day) / per_day
    level = 20.0 - 5.0 * np.cos(phase)  # quiet at midnight, busy at noon
    return np.where(day >= 5, level - 4.0, level)


def weekly_series(periods: int = 8, slots: int = 336, period: int = 604800,
                  noise: float = 1.0, spikes=(), seed: int = 0):
    """Return ``(t, values, clean)``: mid-slot timestamps, noisy values and the
    noise-free profile they were drawn around.

    ``spikes`` is a sequence of ``(n, tau, size)``; ``size`` is in units of the
    noise deviation.
    """
    rng = np.random.default_rng(seed)
    width = period // slots
    prof = weekly_profile(slots)
    n = np.repeat(np.arange(periods), slots)
    tau = np.tile(np.arange(slots), periods)
    t = n * period + tau * width + width // 2
    clean = prof[tau]
    values = clean + rng.normal(0.0, noise, size=clean.shape)
    for sn, stau, size in spikes:
        values[sn * slots + stau] += size * noise
    return t, values, clean
