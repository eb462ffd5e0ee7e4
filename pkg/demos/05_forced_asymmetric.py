# Forced hangers that only pull one way
#
# f(u) = 3u^+ splits each mode into two half-oscillators with different
# frequencies. Forcing mode 1 at gamma = 4/3 sits on the resonance curve of the
# pair (1, 2): the amplitude of mode 1 keeps growing, yet it stays the
# prevailing mode and the residual modes do not pick up the energy.

from beamlab import integrate
from beamlab.experiments import fucik_configs, run_detect

cfg = fucik_configs()["j1"]
tr = integrate(cfg.initial_state(), cfg.nonlinearity, cfg.modal_forcing(), cfg.T)
for t in (25, 50, 75, 100, 125, 150):
    print(f"t <= {t:3d}: max |phi_1| = {tr.sup_norms(t)[0]:8.1f}   max residual = {tr.sup_norms(t)[1:].max():.3f}")
print("verdict:", run_detect(cfg, traj=tr).status.value)
