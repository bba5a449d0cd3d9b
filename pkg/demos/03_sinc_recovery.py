# %% [markdown]
# # Integrating a symbol from five samples
#
# The ADC samples at 50 MS/s, five samples per 100 ns symbol.  Each symbol
# value is the integral of the band-limited signal over its period, written as
# a weighted sum of samples with sinc-integral weights S_i.

# %%
import numpy as np

from dmcvqkd import dsp

tau = 1 / 50e6
kernel = dsp.sinc_coefficients(tau, (-10, 15))
for i in range(-2, 8):
    print(f"S_{i:<3d}= {kernel[i] / tau:+.6f} tau")
print("S_0 + ... + S_5 =", round(kernel.window(0, 5).sum() / tau, 4), "tau (ideal 5)")

# %% [markdown]
# Truncating to i = 0..5 keeps the main lobe only.  The weights then sum to
# 5.138 tau instead of 5 tau, and tones near the band edge leak between
# neighbouring symbols.  Wider windows converge to the exact integral.

# %%
rng = np.random.default_rng(0)
t = np.arange(2000) * tau
f = rng.uniform(0, 25e6, 3)
ph = rng.uniform(0, 2 * np.pi, 3)
v = np.cos(2 * np.pi * f[:, None] * t + ph[:, None]).sum(axis=0)
period = 5 * tau
start = np.arange(400) * period
exact = (np.sin(2 * np.pi * f[:, None] * (start + period) + ph[:, None])
         - np.sin(2 * np.pi * f[:, None] * start + ph[:, None])).T @ (1 / (2 * np.pi * f))

w = dsp.Waveform(50e6, v)
for window in ((0, 5), (-1, 6), (-5, 10), (-10, 15)):
    r = dsp.recover_symbols(w, period, kernel, window)
    o = exact[r.first_symbol:r.first_symbol + r.values.size]
    print(window, f"relative error {np.linalg.norm(r.values - o) / np.linalg.norm(o):.2%}")
