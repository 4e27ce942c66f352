"""Photon wavepacket of a single pump pulse.

Reproduces the simulated emission-rate panel: the sawtooth pump ramp
converts |u,0> into a cavity photon that leaks out at 2 kappa while it is
being created.  The 2 us pump is deliberately short: the wavepacket is
cut off before the transfer completes.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from photonsource import (
    PulseSequence, SystemParams, basis_state, emission_probability,
    envelope_at, evolve_master,
)
from photonsource.analysis import fwhm, transform_limited_linewidth
from photonsource.hilbert import HilbertSpace

OUT = "demos/output"
space = HilbertSpace(2)
p = SystemParams(omega_r0=0.0)
seq = PulseSequence(n_pulses=1)
u0 = basis_state(space, "u", 0)

t = np.linspace(0, seq.period, 1001)
run = evolve_master(u0, p, seq, (0, seq.period), times=t)

width = fwhm(t, run.emission_flux)
p_emit = emission_probability(p, seq, u0, (0, seq.period))
print(f"emission probability per pulse : {p_emit:.3f}")
print(f"photon pulse FWHM              : {width*1e6:.2f} us")
print(f"transform-limited linewidth    : "
      f"{transform_limited_linewidth(width)/1e3:.0f} kHz")

fig, ax = plt.subplots(figsize=(6, 3.2))
ax.plot(t * 1e6, run.emission_flux / 1e6, label="emission rate")
env = np.array([envelope_at(seq, "pump", ti) for ti in t])
ax.plot(t * 1e6, env * run.emission_flux.max() / 1e6, "--",
        label="pump envelope (scaled)")
ax.set_xlabel("time (us)")
ax.set_ylabel("photons / us")
ax.legend()
ax.set_title(f"single-photon wavepacket, FWHM {width*1e6:.2f} us, "
             f"P_emit {p_emit:.2f}")
fig.tight_layout()
os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/02_single_pulse.png", dpi=150)
print(f"wrote {OUT}/02_single_pulse.png")
