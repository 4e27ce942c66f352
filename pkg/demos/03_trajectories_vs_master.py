"""Quantum trajectories against the master equation.

A few hundred stochastic wavefunction realizations, each with discrete
photon-emission and spontaneous-decay jumps, average back to the
deterministic density-matrix evolution.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from photonsource import (
    PulseSequence, SystemParams, basis_state, evolve_master, run_trajectories,
)
from photonsource.hilbert import HilbertSpace

OUT = "demos/output"
space = HilbertSpace(2)
p = SystemParams()
seq = PulseSequence()
u0 = basis_state(space, "u", 0)

n_traj = 800
checks = np.linspace(0.05e-6, seq.period, 40)
recs, pops = run_trajectories(u0, p, seq, (0, seq.period), master_seed=7,
                              n_traj=n_traj, sample_times=checks, workers=2)
me = evolve_master(u0, p, seq, (0, seq.period), times=checks)
me_pops = np.array([s.populations() for s in me.states])

fig, ax = plt.subplots(1, 2, figsize=(9.5, 3.4))
for label, idx in (("|u,0>", space.index("u", 0)),
                   ("|g,0>", space.index("g", 0)),
                   ("|g,1>", space.index("g", 1))):
    line, = ax[0].plot(checks * 1e6, me_pops[:, idx], label=f"ME {label}")
    ax[0].plot(checks * 1e6, pops[:, idx], "o", ms=3, color=line.get_color())
ax[0].set_xlabel("time (us)")
ax[0].set_ylabel("population")
ax[0].legend(fontsize=8)
ax[0].set_title(f"{n_traj} trajectories (dots) vs master equation")

cavity_jumps = [t for r in recs for t, ch in r.jumps if ch == "cavity"]
ax[1].hist(np.array(cavity_jumps) * 1e6, bins=50)
ax[1].axvspan(0, seq.pump_duration * 1e6, alpha=0.1, color="C0")
ax[1].axvspan(seq.recycle_start_offset * 1e6,
              (seq.recycle_start_offset + seq.recycle_duration) * 1e6,
              alpha=0.1, color="C1")
ax[1].set_xlabel("time (us)")
ax[1].set_ylabel("cavity jumps")
ax[1].set_title("photon emission times (pump / recycle windows shaded)")

fig.tight_layout()
os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/03_trajectories.png", dpi=150)
print(f"wrote {OUT}/03_trajectories.png")
print(f"mean cavity jumps per pulse period: {len(cavity_jumps)/n_traj:.3f}")
