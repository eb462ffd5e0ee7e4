# Energy transfer for the cubic beam
#
# Start with most of the energy in mode 2 and a small residual 0.01 in every
# other mode. Below a threshold amplitude the residual modes barely move; above
# it one of them takes a sizeable share of the energy within T = 16.

import numpy as np

from beamlab import NonlinearitySpec, PrevailingConfig, detect_instability, integrate
from beamlab.stability import pattern_initial_data, resistant_modes

f = NonlinearitySpec.cubic()
cfg = PrevailingConfig(eta=0.1, T_W=1.0, T=16.0)

for amplitude in (3.1, 6.2):
    tr = integrate(pattern_initial_data(12, 2, amplitude, 0.01), f, None, T=16.0)
    sup = tr.sup_norms()
    drift = np.max(np.abs(tr.energy - tr.energy[0])) / tr.energy[0]
    print(f"\namplitude {amplitude}: energy {tr.energy[0]:.3f}, relative drift {drift:.1e}")
    print("  sup |phi_n|, n=1..9:", " ".join(f"{s:.3g}" for s in sup[:9]))

    # the detector compares each residual mode with mode 2 and with its own
    # history at half the time
    v = detect_instability(tr, 2, 0.0, cfg)
    print(f"  verdict: {v.status.value}", end="")
    if v.witness_mode is not None:
        print(f" (mode {v.witness_mode} at t={v.witness_tau:.2f}, growth x{v.ratio_growth:.1f})", end="")
    print()
    print("  modes that kept their initial size:", resistant_modes(tr, 2, 0.01))
