"""
Dwell-time debouncing with hysteresis
=====================================

Raw gaze hits flicker. The activation accumulator integrates them (up by
dt/T while fixated, down otherwise, clamped to [0, 1]) and a two-threshold
trigger turns the level into a debounced on/off status: on above a_on,
off below a_off, unchanged in between.

Writes dwell_debouncing.png next to this script.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gazebot import ActivationProfile, InputPipeline

############################################################
# A jittery fixation: solid looks interrupted by noise and one real pause

rng = np.random.default_rng(3)
frames = 400
raw = np.zeros(frames, dtype=bool)
raw[40:160] = True
raw[200:330] = True
raw[rng.integers(40, 330, size=25)] ^= True  # measurement flicker
raw[160:200] = False

############################################################
# Run the accumulator at 50 Hz

profile = ActivationProfile(period_ms=300.0, a_on=0.4, a_off=0.2, kind="continuous")
pipeline = InputPipeline({"button": profile})

level, status, edges = [], [], []
for k, hit in enumerate(raw):
    t = (k + 1) * 20.0
    for event in pipeline.step({"button"} if hit else set(), t):
        edges.append((t, event.edge))
    snap = pipeline.snapshot()
    level.append(snap.activation_of("button"))
    status.append(1.0 if snap.status_of("button") == "active" else 0.0)

for t, edge in edges:
    print(f"t={t:6.0f} ms  {edge}")

############################################################
# Plot raw signal, accumulator with thresholds, and the debounced output

t_axis = np.arange(1, frames + 1) * 0.02
fig, (ax1, ax2, ax3) = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
ax1.step(t_axis, raw.astype(int), where="post", lw=0.8)
ax1.set_ylabel("raw hit")
ax2.plot(t_axis, level, lw=1.2)
ax2.axhline(profile.a_on, color="tab:green", ls="--", lw=0.8, label="a_on")
ax2.axhline(profile.a_off, color="tab:red", ls="--", lw=0.8, label="a_off")
ax2.set_ylabel("activation")
ax2.legend(loc="upper right")
ax3.step(t_axis, status, where="post", color="tab:purple")
ax3.set_ylabel("status")
ax3.set_xlabel("time (s)")
fig.tight_layout()
out = Path(__file__).with_name("dwell_debouncing.png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
