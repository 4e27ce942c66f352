"""Dark-state composition and adiabatic population transfer.

The Raman dark state rotates from |u,0> to |g,1> as the pump Rabi
frequency ramps up; because it carries no excited-state amplitude, the
transfer avoids spontaneous emission.  With a lossless cavity the
master equation reproduces the ideal transfer; with the real cavity
decay the photon leaks out while it is being produced.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from photonsource import (
    PulseSequence, SystemParams, basis_state, dark_state, evolve_master,
)
from photonsource.hilbert import HilbertSpace

OUT = "demos/output"

space = HilbertSpace(2)
p = SystemParams()

# %% dark-state composition vs pump strength
omega = np.linspace(0, 6 * p.g, 200)
w_u0 = [abs(dark_state(p.g, o, space).data[space.index("u", 0)]) ** 2
        for o in omega]
w_g1 = [abs(dark_state(p.g, o, space).data[space.index("g", 1)]) ** 2
        for o in omega]

fig, ax = plt.subplots(1, 2, figsize=(9, 3.2))
ax[0].plot(omega / (2 * p.g), w_u0, label="|<u,0|dark>|$^2$")
ax[0].plot(omega / (2 * p.g), w_g1, label="|<g,1|dark>|$^2$")
ax[0].set_xlabel("pump Rabi frequency / 2g")
ax[0].set_ylabel("population weight")
ax[0].legend()
ax[0].set_title("dark-state rotation")

# %% adiabatic transfer with and without cavity loss
seq = PulseSequence(n_pulses=1)
t = np.linspace(0, seq.period, 400)
u0 = basis_state(space, "u", 0)
for kappa, label in ((0.0, "lossless cavity"), (p.kappa, "real cavity")):
    run = evolve_master(u0, SystemParams(kappa=kappa, omega_r0=0.0, gamma=0.0
                                         if kappa == 0 else p.gamma),
                        seq, (0, seq.period), times=t)
    pop_g1 = [s.populations()[space.index("g", 1)] for s in run.states]
    ax[1].plot(t * 1e6, pop_g1, label=f"|g,1> population, {label}")
ax[1].axvspan(0, seq.pump_duration * 1e6, alpha=0.1, color="gray",
              label="pump pulse")
ax[1].set_xlabel("time (us)")
ax[1].legend(fontsize=8)
ax[1].set_title("vacuum-stimulated Raman transfer")

fig.tight_layout()
import os
os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/01_dark_state.png", dpi=150)
print(f"wrote {OUT}/01_dark_state.png")
