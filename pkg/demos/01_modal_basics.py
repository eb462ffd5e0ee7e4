# Modal building blocks
#
# The beam lives on (0, pi) with hinged ends, so every displacement is a sine
# series u = sum phi_n sin(nx) and the bending operator acts as n^4 on mode n.
# A nonlinearity f(u) couples the modes through the projections
# (2/pi) int f(u) sin(nx) dx. This script looks at those pieces one at a time.

import math

import numpy as np

from beamlab import NonlinearitySpec, build_cubic_tensor, influence_set, project_nonlinearity
from beamlab.dynamics import ModalState, explicit_first_mode_solution, integrate

# For f(u) = u^3 the projection is a finite sum over the exact integrals
# int sin(px) sin(qx) sin(rx) sin(sx) dx, which vanish unless some signed
# combination of the indices is zero.

tensor = build_cubic_tensor(6)
print("nonzero sorted quadruples for N=6:", len(tensor))
print("T[1,1,1,1] =", tensor[1, 1, 1, 1], " T[1,1,1,3] =", tensor[1, 1, 1, 3], " T[1,1,2,4] =", tensor[1, 1, 2, 4])

# Which modes does a pure mode feed? Odd sources only talk to odd modes.

print("modes fed by mode 1:", sorted(influence_set(1) & set(range(1, 13))))
print("modes fed by mode 2:", sorted(influence_set(2) & set(range(1, 13))))

# The hanger nonlinearity 3u^+ has a kink wherever u changes sign. The
# quadrature splits panels at the roots, so the projection stays accurate to
# round-off even though the integrand is only Lipschitz.

u = np.zeros(8)
u[1] = 1.0
print("projection of 3u^+ for u = sin(2x):", np.round(project_nonlinearity(NonlinearitySpec.positive_part(3.0), u), 6))

# A closed form exists for mu = 3 starting from rest with unit velocity in the
# first mode: the string bends with frequency 1 while positive and 2 while
# negative.

tr = integrate(ModalState(0.0, np.zeros(4), np.eye(4)[0]), NonlinearitySpec.positive_part(3.0), None, T=1.5 * math.pi)
err = np.max(np.abs(tr.mode(1) - explicit_first_mode_solution(tr.t)))
print(f"max deviation from the closed form over one period: {err:.2e}")
