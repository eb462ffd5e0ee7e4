"""Truncated Galerkin system for the hinged nonlinear beam and its integration.

The N-mode system reads

    phi_n'' + n^4 phi_n + P_n(f; phi) = delta_{jn} alpha sin(gamma t),   n = 1..N,

where ``P_n`` is the modal projection of the restoring force (see
:func:`beamlab.spectral.project_nonlinearity`). It is integrated as a
first-order system in ``(phi, phidot)`` with an embedded Dormand-Prince
5(4) pair and sampled densely on a uniform grid plus every accepted step.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .errors import IntegrationError, ResourceLimitError
from .spectral import (
    NonlinearitySpec,
    check_truncation,
    potential_integral,
    potential_integrals,
    project_nonlinearity,
)

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-9
DEFAULT_DT_SAMPLE = 1e-3
DEFAULT_MAX_SAMPLES = 5_000_000


@dataclass(frozen=True)
class ModalForcing:
    """Single-mode forcing ``g(x, t) = alpha sin(j x) sin(gamma t)``."""

    j: int
    alpha: float
    gamma: float

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"forced mode must be a positive integer, got {self.j!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"forcing amplitude must be positive, got {self.alpha!r}")
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise ValueError(f"forcing frequency must be nonzero, got {self.gamma!r}")
        object.__setattr__(self, "j", int(self.j))

    def amplitude(self, t):
        return self.alpha * np.sin(self.gamma * np.asarray(t, dtype=float))

    def modal(self, t, N):
        """Modal load vector at time ``t``; zero if the forced mode exceeds ``N``."""
        out = np.zeros(N)
        if self.j <= N:
            out[self.j - 1] = self.alpha * math.sin(self.gamma * t)
        return out

    def to_dict(self):
        return {"j": self.j, "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class ModalState:
    t: float
    phi: np.ndarray
    phidot: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        phidot = np.array(self.phidot, dtype=float)
        if phi.ndim != 1 or phi.shape != phidot.shape:
            raise ValueError("phi and phidot must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phidot))):
            raise ValueError("modal state contains non-finite entries")
        phi.setflags(write=False)
        phidot.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phidot", phidot)
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self):
        return self.phi.shape[0]

    @classmethod
    def at_rest(cls, N):
        return cls(0.0, np.zeros(N), np.zeros(N))


def stiffness(N):
    return np.arange(1, N + 1, dtype=float) ** 4


def assemble_rhs(state, f, forcing=None, panels=None):
    """Modal accelerations ``-n^4 phi_n - P_n(f; phi) + delta_{jn} alpha sin(gamma t)``."""
    acc = -stiffness(state.N) * state.phi - project_nonlinearity(f, state.phi, panels)
    if forcing is not None:
        acc += forcing.modal(state.t, state.N)
    return acc


def energy(state, f, panels=None):
    """Kinetic + bending + potential energy of the truncated field.

    ``(pi/4) sum (phidot_n^2 + n^4 phi_n^2) + int_0^pi F(u) dx``.
    """
    quad = 0.25 * math.pi * float(np.sum(state.phidot**2 + stiffness(state.N) * state.phi**2))
    return quad + potential_integral(f, state.phi, panels)


def energy_series(t, phi, phidot, f, panels=None):
    N = phi.shape[1]
    quad = 0.25 * math.pi * np.sum(phidot**2 + stiffness(N) * phi**2, axis=1)
    return quad + potential_integrals(f, phi, panels)


def remainder_bound(E0, N):
    """Uniform bound ``4 E0 / (pi (N+1)^4)`` on the tail ``sum_{n>N} phi_n^2`` (unforced)."""
    if E0 < 0:
        raise ValueError("energy must be nonnegative")
    if N < 1:
        raise ValueError("N must be positive")
    return 4.0 * E0 / (math.pi * (N + 1) ** 4)


def explicit_first_mode_solution(t, mu=3):
    """Closed-form first mode for ``f = 3 u^+``, ``u0 = 0``, ``u1 = sin x``.

    ``phi_1 = sin(2t)/2`` on ``[0, pi/2]`` (hangers stretched) and
    ``sin(pi/2 - t)`` on ``[pi/2, 3pi/2]`` (slack), repeated with period
    ``3 pi / 2``.
    """
    if mu != 3:
        raise ValueError(f"closed form only available for mu = 3, got {mu!r}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    s = np.mod(t, 1.5 * math.pi)
    out = np.where(s <= 0.5 * math.pi, 0.5 * np.sin(2.0 * s), np.sin(0.5 * math.pi - s))
    return out if out.ndim else float(out)


@dataclass
class Trajectory:
    """Densely sampled solution of the Galerkin system.

    Attributes
    ----------
    t : (S,) array
        Strictly increasing sample times from 0 to T.
    phi, phidot : (S, N) arrays
        Modal amplitudes and velocities; column ``n-1`` is mode ``n``.
    energy : (S,) array
        Energy at each sample.
    provenance : dict
        Settings that produced the run.
    """

    t: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    energy: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.phi.shape[1]

    @property
    def T(self):
        return float(self.t[-1])

    def mode(self, k):
        return self.phi[:, k - 1]

    def state(self, i):
        return ModalState(self.t[i], self.phi[i], self.phidot[i])

    def sup_norms(self, t_max=None):
        """``max_t |phi_n(t)|`` for every mode, optionally restricted to ``t <= t_max``."""
        phi = self.phi if t_max is None else self.phi[self.t <= t_max]
        return np.max(np.abs(phi), axis=0)

    def running_sup(self):
        """Cumulative ``max_{s <= t_i} |phi_n(s)|``, shape (S, N)."""
        return np.maximum.accumulate(np.abs(self.phi), axis=0)

    def csv_text(self):
        """CSV with header ``t,phi_1..phi_N,dphi_1..dphi_N,E`` and 17 significant digits."""
        N = self.N
        header = ["t"] + [f"phi_{n}" for n in range(1, N + 1)] + [f"dphi_{n}" for n in range(1, N + 1)] + ["E"]
        data = np.column_stack((self.t, self.phi, self.phidot, self.energy))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        N = (len(header) - 2) // 2
        return cls(data[:, 0], data[:, 1 : N + 1], data[:, N + 1 : 2 * N + 1], data[:, -1])


class GalerkinSystem:
    """First-order right-hand side ``y' = F(t, y)`` with ``y = (phi, phidot)``."""

    def __init__(self, N, f, forcing=None, panels=None):
        self.N = check_truncation(N)
        self.f = f
        self.forcing = forcing
        self.panels = panels
        self._k4 = stiffness(self.N)
        self.nfev = 0

    def __call__(self, t, y):
        self.nfev += 1
        N = self.N
        phi = y[:N]
        acc = -self._k4 * phi - project_nonlinearity(self.f, phi, self.panels)
        if self.forcing is not None and self.forcing.j <= N:
            acc[self.forcing.j - 1] += self.forcing.alpha * math.sin(self.forcing.gamma * t)
        return np.concatenate((y[N:], acc))


def integrate(
    initial,
    f,
    forcing=None,
    T=1.0,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    dt_sample=DEFAULT_DT_SAMPLE,
    max_samples=DEFAULT_MAX_SAMPLES,
    panels=None,
):
    """Integrate the Galerkin system from ``initial`` over ``[initial.t, initial.t + T]``.

    Returns a :class:`Trajectory` sampled every ``dt_sample`` and at every
    accepted step. Raises :class:`IntegrationError` if the step size
    underflows and :class:`ResourceLimitError` if more than
    ``max_samples`` samples would be stored.
    """
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T!r}")
    if not (rtol > 0 and atol > 0 and dt_sample > 0):
        raise ValueError("tolerances and sample spacing must be positive")
    if not isinstance(f, NonlinearitySpec):
        raise TypeError("f must be a NonlinearitySpec")
    N = initial.N
    system = GalerkinSystem(N, f, forcing, panels)
    t0 = initial.t
    t_end = t0 + T
    n_grid = int(math.floor(T / dt_sample + 1e-9)) + 1
    if n_grid > max_samples:
        raise ResourceLimitError(f"{n_grid} uniform samples exceed the cap of {max_samples}")

    y0 = np.concatenate((initial.phi, initial.phidot))
    solver = RK45(system, t0, y0, t_end, rtol=rtol, atol=atol)
    ts = [np.array([t0])]
    ys = [y0[None, :]]
    count = 1
    steps = 0
    k = 1
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t!r}: {msg}", t=solver.t)
        steps += 1
        t_new = solver.t
        k_stop = k
        while k_stop < n_grid and t0 + k_stop * dt_sample < t_new:
            k_stop += 1
        count += k_stop - k + 1
        if k_stop > k:
            tk = t0 + dt_sample * np.arange(k, k_stop)
            ts.append(tk)
            ys.append(solver.dense_output()(tk).T)
            k = k_stop
        ts.append(np.array([t_new]))
        ys.append(solver.y[None, :].copy())
        if count > max_samples:
            raise ResourceLimitError(f"sample count exceeded the cap of {max_samples} at t={t_new!r}")
    # grid points that coincide with the final step end are already present
    t = np.concatenate(ts)
    y = np.vstack(ys)
    keep = np.concatenate(([True], np.diff(t) > 0))
    t, y = t[keep], y[keep]
    phi, phidot = y[:, :N], y[:, N:]
    E = energy_series(t, phi, phidot, f, panels)
    provenance = {
        "N": N,
        "T": T,
        "nonlinearity": f.to_dict(),
        "forcing": None if forcing is None else forcing.to_dict(),
        "initial_phi": initial.phi.tolist(),
        "initial_phidot": initial.phidot.tolist(),
        "rtol": rtol,
        "atol": atol,
        "dt_sample": dt_sample,
        "nfev": system.nfev,
        "steps": steps,
    }
    return Trajectory(t, phi, phidot, E, provenance)
