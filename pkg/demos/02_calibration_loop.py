# %% [markdown]
# # From records to detector noise
#
# Simulate 50 000 symbols on a back-to-back link (T0 = 1) with strong
# modulation, then recover the total noise chi_t by regression and back out
# the electronic noise of the detector.

# %%
import numpy as np

from dmcvqkd import (
    ChannelParams,
    DetectorParams,
    ProtocolParams,
    RunConfig,
    backout_detector_noise,
    estimate_channel,
    raw_key_bits,
    run,
)

cfg = RunConfig(50_000, seed=2024, params=ProtocolParams(18.0), channel=ChannelParams(1.0),
                detector=DetectorParams(eta=0.8, upsilon=0.12))
records, _ = run(cfg)
print(len(records), "records; first:", records[0:1].bob_x, records[0:1].bob_p)

# %% [markdown]
# Bob's outcome is a scaled copy of Alice's plus Gaussian noise.  The slope
# squared is eta T / 2 and the residual variance over the slope squared is
# 1 + chi_t.

# %%
res = estimate_channel(records, v_a=18.0, eta=0.8)
print(f"chi_t = {res.chi_t_hat:.4f}  95% CI {res.ci['chi_t_hat'][0]:.4f} .. {res.ci['chi_t_hat'][1]:.4f}")
print(f"T     = {res.t_hat:.4f}")
ups = backout_detector_noise(res.chi_t_hat, t=1.0, eps=0.0, eta=0.8)
print(f"electronic noise = {ups:.4f} (configured 0.12)")

# %%
raw = raw_key_bits(records)
print(f"sign-bit mismatch {raw.mismatch_rate:.3%}  (x {raw.mismatch_x:.3%}, p {raw.mismatch_p:.3%})")
print("I(a:b) estimate:", round(res.i_ab_hat, 3), "bits/symbol")
