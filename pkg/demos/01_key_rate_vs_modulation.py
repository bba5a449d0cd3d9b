# %% [markdown]
# # Key rate against modulation variance
#
# A 10 dB link (T0 = 0.1), heterodyne detector with 80% efficiency and
# reconciliation efficiency 0.8.  Three electronic-noise levels: none, a
# quiet 10 MHz detector and a broadband one.

# %%
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dmcvqkd import ChannelParams, DetectorParams, ProtocolParams, SourceNoise, key_rate, optimal_modulation

ch, src = ChannelParams(0.1), SourceNoise()
v_a = np.linspace(0.01, 1.0, 200)

# %%
curves = {}
for ups in (0.0, 0.12, 1.2):
    det = DetectorParams(0.8, ups)
    curves[ups] = [key_rate(ProtocolParams(v), ch, src, det).key_rate_per_symbol for v in v_a]
    opt = optimal_modulation(ch, src, det, beta=0.8)
    print(f"upsilon={ups:<5} V_A*={opt.v_a_star:.3f}  K*={opt.key_rate_star:.3e} bits/symbol")

# %% [markdown]
# Bandwidth trade-off: the broadband detector's optimum weighted by
# sqrt(10), against the quiet detector's optimum.

# %%
k012 = max(curves[0.12])
k12 = max(curves[1.2])
print(f"rate gain of the broadband detector: {k12 * np.sqrt(10) / k012:.2f}")

# %%
fig, ax = plt.subplots(figsize=(6, 4))
for ups, style in zip(curves, ("--", "-", ":")):
    ax.plot(v_a, np.array(curves[ups]) * 1e3, style, label=f"upsilon = {ups}")
ax.set_xlabel("V_A (shot-noise units)")
ax.set_ylabel("K (1e-3 bits/symbol)")
ax.set_ylim(bottom=0)
ax.legend()
fig.tight_layout()
fig.savefig("key_rate_vs_modulation.png", dpi=120)
