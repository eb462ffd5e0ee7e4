# A certified verdict for a forced beam with weak hangers
#
# With f(u) = 0.1 u^+, a small datum and forcing 5e-3 sin(2x) sin(t), five
# modes are enough: the a priori bound on the truncation error is small next
# to the margins of the stability test, so the finite-dimensional verdict
# carries over to the beam.

from beamlab import build_certificate, certify, detect_instability, integrate
from beamlab.experiments import certified_forcing_config

cfg = certified_forcing_config()
forcing = cfg.modal_forcing()
tr = integrate(cfg.initial_state(), cfg.nonlinearity, forcing, cfg.T)
verdict = detect_instability(tr, 2, cfg.alpha, cfg.detector())
print("truncated verdict:", verdict.status.value)

cert = build_certificate(cfg.nonlinearity, float(tr.energy[0]), cfg.N, cfg.T, forcing)
print(f"E0 = {cert.E0:.4e}  M = {cert.M:.4f}  L = {cert.L:g}  C = {cert.C:.4f}")
print("per-mode error bounds:", " ".join(f"{b:.2e}" for b in cert.per_mode_bounds))

res = certify(tr, verdict, cert)
print(f"{res.status.value}, margin {res.margin:.3f} (limiting mode {res.limiting_mode})")
