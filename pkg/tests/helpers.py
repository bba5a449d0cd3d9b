"""Shared test fixtures: band-limited tone corpus and its exact symbol integrals."""

import numpy as np

ADC_RATE = 50e6
SYMBOL_PERIOD = 100e-9
BAND_EDGE = 25e6


def tone_corpus(n_signals=100, n_tones=3, seed=7):
    """(freqs, phases, amps) arrays of shape (n_signals, n_tones), tones below the band edge."""
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, BAND_EDGE, (n_signals, n_tones))
    ph = rng.uniform(0, 2 * np.pi, (n_signals, n_tones))
    amp = rng.uniform(0.2, 1.0, (n_signals, n_tones))
    return f, ph, amp


def sample(f, ph, amp, n_samples, rate=ADC_RATE):
    t = np.arange(n_samples) / rate
    return (amp[:, None] * np.cos(2 * np.pi * f[:, None] * t[None, :] + ph[:, None])).sum(axis=0)


def symbol_integrals(f, ph, amp, n_symbols, period=SYMBOL_PERIOD):
    """Exact integral of the tone sum over [n T, (n + 1) T]."""
    t0 = np.arange(n_symbols) * period
    w = 2 * np.pi * f[:, None]
    return (amp[:, None] * (np.sin(w * (t0 + period) + ph[:, None]) - np.sin(w * t0 + ph[:, None])) / w).sum(axis=0)
