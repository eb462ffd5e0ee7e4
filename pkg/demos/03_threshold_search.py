# Locating an instability threshold
#
# Bisection on the amplitude of the prevailing mode, classifying each run with
# the finite-time detector. A three-mode system over T = 6 keeps this quick;
# the same call with N=12, T=16 and bracket (5, 8) gives the mode-2 threshold
# of the full system in under a minute.

from beamlab import NonlinearitySpec, threshold_search

res = threshold_search(NonlinearitySpec.cubic(), 2, bracket=(2.0, 20.0), step=0.25, N=3, T=6.0)
print(f"threshold for mode 2: {res.threshold:.3f}, bracket [{res.lo:.3f}, {res.hi:.3f}]")
print("first mode to grow:", res.witness_mode)
for amplitude, status in res.evaluations:
    print(f"  M = {amplitude:7.3f}  {status.value}")
