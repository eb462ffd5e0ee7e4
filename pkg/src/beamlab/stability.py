"""Prevailing modes, the finite-dimensional instability detector and threshold search.

A residual mode ``k`` destabilizes the prevailing mode ``j`` before time T if,
for some ``tau`` in ``(2 T_W, T)``,

    A_k(tau) >= 0.11 A_j(tau)   and   A_k(tau) / A_k(tau/2) >= 11 (alpha + 1),

with ``A_n(s) = max_{0 <= t <= s} |phi_n(t)|``. The solution is stable if
every pair ``(k, tau)`` satisfies ``A_k <= 0.09 A_j`` or a growth ratio
``<= 9 (alpha + 1)``. The gap between the two sets of constants leaves
some solutions unclassified.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import DEFAULT_ATOL, DEFAULT_DT_SAMPLE, DEFAULT_RTOL, ModalState, integrate
from .errors import BracketError

AMPLITUDE_UNSTABLE = 0.11
GROWTH_UNSTABLE = 11.0
AMPLITUDE_STABLE = 0.09
GROWTH_STABLE = 9.0


class Status(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class PrevailingConfig:
    """Detector parameters: dominance ``eta``, Wagner time ``T_W`` and horizon ``T``."""

    eta: float = 0.1
    T_W: float = 1.0
    T: float = 16.0

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta!r}")
        if not (self.T_W > 0 and self.T > 2 * self.T_W):
            raise ValueError(f"need T > 2 T_W > 0, got T={self.T!r}, T_W={self.T_W!r}")

    @classmethod
    def default(cls, forced=False, T=16.0):
        return cls(eta=0.999 if forced else 0.1, T_W=1.0, T=T)


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of :func:`detect_instability`.

    For ``Unstable`` the witness fields locate the earliest ``(tau, k)``
    meeting both instability inequalities, and the ratios are those at the
    witness. For ``Indeterminate`` the witness is the earliest pair that
    fails the stability test. For ``Stable`` there is no witness and the
    ratios are the largest values seen anywhere in the scan.
    """

    status: Status
    j: int
    alpha: float
    witness_mode: int | None = None
    witness_tau: float | None = None
    ratio_amplitude: float = 0.0
    ratio_growth: float = 0.0
    config: PrevailingConfig = field(default_factory=PrevailingConfig)
    N: int | None = None

    def to_dict(self):
        return {
            "status": self.status.value,
            "N": self.N,
            "prevailing_mode": self.j,
            "alpha": self.alpha,
            "witness_mode": self.witness_mode,
            "witness_tau": self.witness_tau,
            "ratio_amplitude": self.ratio_amplitude,
            "ratio_growth": self.ratio_growth,
            "eta": self.config.eta,
            "T_W": self.config.T_W,
            "T": self.config.T,
        }


def classify_prevailing(a, b, forcing=None, eta=None):
    """Return the eta-prevailing mode of initial data ``(a, b)``, or ``None``.

    Unforced: ``j`` must be the unique index with
    ``sum_{n != j} (a_n^2 + b_n^2) <= eta^4 (a_j^2 + b_j^2)``. Forced: the
    forcing must act on ``j`` and every other mode must satisfy
    ``a_n^2 + b_n^2 <= eta^4 (a_j^2 + b_j^2)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"coefficient arrays must be 1-D of equal length, got {a.shape} and {b.shape}")
    if eta is None:
        eta = 0.999 if forcing is not None else 0.1
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    e = a**2 + b**2
    eta4 = eta**4

    if forcing is not None:
        j = forcing.j
        if j > e.size:
            return None
        others = np.delete(e, j - 1)
        ok = e[j - 1] > 0 and bool(np.all(others <= eta4 * e[j - 1]))
        return j if ok else None

    total = e.sum()
    candidates = [n + 1 for n in range(e.size) if e[n] > 0 and total - e[n] <= eta4 * e[n]]
    return candidates[0] if len(candidates) == 1 else None


def running_sup(traj, k, tau):
    """``max |phi_k(t)|`` over the samples with ``t <= tau``."""
    if not 0 < tau <= traj.T:
        raise ValueError(f"tau must lie in (0, {traj.T}], got {tau!r}")
    if not 1 <= k <= traj.N:
        raise ValueError(f"mode {k} outside 1..{traj.N}")
    return float(np.max(np.abs(traj.phi[traj.t <= tau, k - 1])))


def _growth_ratio(num, den):
    # x/0 is +inf for x > 0; 0/0 is treated as no growth
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    r = np.where(den > 0, r, np.where(num > 0, np.inf, 0.0))
    return r


def sup_tables(traj, j, cfg):
    """Running sup norms on the scanned grid.

    Returns ``(tau, A, A_half, A_j)``: scanned times in ``(2 T_W, T)``, the
    running sups at ``tau`` and at ``tau / 2`` (shape ``(S, N)``), and the
    prevailing mode's running sup at ``tau``.
    """
    t = traj.t
    sup = traj.running_sup()
    scan = np.nonzero((t > 2 * cfg.T_W) & (t < cfg.T))[0]
    half = np.searchsorted(t, 0.5 * t[scan], side="right") - 1
    return t[scan], sup[scan], sup[half], sup[scan, j - 1]


def detect_instability(traj, j, alpha=0.0, cfg=None):
    """Classify a trajectory with prevailing mode ``j`` as Stable, Unstable or Indeterminate.

    ``alpha`` is the forcing amplitude (0 when unforced). The scan covers
    every stored sample ``tau`` with ``2 T_W < tau < T``.
    """
    cfg = cfg or PrevailingConfig(T=traj.T)
    if not 1 <= j <= traj.N:
        raise ValueError(f"prevailing mode {j} outside 1..{traj.N}")
    if cfg.T <= 2:
        raise ValueError("detection needs T > 2")
    if traj.T < cfg.T - 1e-9:
        raise ValueError(f"trajectory ends at {traj.T}, before the horizon {cfg.T}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")

    tau, A, A_half, Aj = sup_tables(traj, j, cfg)
    residual = np.arange(traj.N) != j - 1
    A, A_half = A[:, residual], A_half[:, residual]
    modes = np.arange(1, traj.N + 1)[residual]

    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(Aj[:, None] > 0, A / Aj[:, None], np.inf)
    growth = _growth_ratio(A, A_half)

    unstable = (A >= AMPLITUDE_UNSTABLE * Aj[:, None]) & (growth >= GROWTH_UNSTABLE * (alpha + 1))
    stable = (A <= AMPLITUDE_STABLE * Aj[:, None]) | (growth <= GROWTH_STABLE * (alpha + 1))

    def at(i, c, status):
        return StabilityVerdict(
            status, j, alpha, int(modes[c]), float(tau[i]), float(amp[i, c]), float(growth[i, c]), cfg, traj.N
        )

    if unstable.any():
        # rows are time-ordered, columns mode-ordered: first hit is min tau, then min k
        i, c = np.argwhere(unstable)[0]
        return at(i, c, Status.UNSTABLE)
    if not stable.all():
        i, c = np.argwhere(~stable)[0]
        return at(i, c, Status.INDETERMINATE)
    return StabilityVerdict(
        Status.STABLE,
        j,
        alpha,
        ratio_amplitude=float(amp.max()) if amp.size else 0.0,
        ratio_growth=float(growth.max()) if growth.size else 0.0,
        config=cfg,
        N=traj.N,
    )


def resistant_modes(traj, j, residual, factor=2.0):
    """Residual modes whose sup norm stays within ``factor`` times their initial amplitude."""
    sup = traj.sup_norms()
    return [k for k in range(1, traj.N + 1) if k != j and sup[k - 1] <= factor * residual]


def pattern_initial_data(N, j, amplitude, residual):
    """``a_j = amplitude``, ``a_n = residual`` otherwise, zero velocities."""
    a = np.full(N, float(residual))
    a[j - 1] = amplitude
    return ModalState(0.0, a, np.zeros(N))


@dataclass
class ThresholdResult:
    """Result of :func:`threshold_search`.

    ``threshold`` is the midpoint of the final bracket ``[lo, hi]``; the
    witness is the one reported at ``hi``. ``evaluations`` lists every
    ``(amplitude, status)`` tried, in order.
    """

    j: int
    threshold: float
    lo: float
    hi: float
    witness_mode: int | None
    evaluations: list = field(default_factory=list)

    @property
    def indeterminate(self):
        return sorted(m for m, s in self.evaluations if s is Status.INDETERMINATE)

    def to_dict(self):
        return {
            "prevailing_mode": self.j,
            "threshold": self.threshold,
            "bracket": [self.lo, self.hi],
            "witness_mode": self.witness_mode,
            "evaluations": [[m, s.value] for m, s in self.evaluations],
            "indeterminate_amplitudes": self.indeterminate,
        }


def threshold_search(
    f,
    j,
    bracket,
    step,
    N=12,
    T=16.0,
    residual=0.01,
    cfg=None,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    dt_sample=DEFAULT_DT_SAMPLE,
    scan=None,
):
    """Bisect on the prevailing amplitude until the bracket is narrower than ``step``.

    Initial data are ``M sin(jx) + residual * sum_{n != j} sin(nx)`` with
    zero velocity. Indeterminate verdicts count as not stable, so the
    bracket shrinks toward the unstable side.

    The verdict is not monotone in the amplitude: stable windows can follow
    the first unstable one. Plain bisection then lands on some transition
    inside the bracket, not necessarily the first. With ``scan`` set, the
    amplitude is first stepped up from ``lo`` by ``scan`` and bisection runs
    between the last stable and the first non-stable value, which locates
    the lowest threshold up to windows narrower than ``scan``.
    """
    lo, hi = map(float, bracket)
    if not (0 < lo < hi and step > 0):
        raise BracketError(f"need 0 < lo < hi and step > 0, got bracket={bracket!r}, step={step!r}")
    if scan is not None and not scan > 0:
        raise BracketError(f"scan must be positive, got {scan!r}")
    cfg = cfg or PrevailingConfig(T=T)
    cfg = replace(cfg, T=T)
    evaluations = []

    def verdict(M):
        traj = integrate(pattern_initial_data(N, j, M, residual), f, None, T, rtol, atol, dt_sample)
        v = detect_instability(traj, j, 0.0, cfg)
        evaluations.append((M, v.status))
        return v

    v_lo = verdict(lo)
    if v_lo.status is not Status.STABLE:
        raise BracketError(f"lower endpoint {lo} is {v_lo.status.value}, expected Stable")
    if scan is None:
        v_hi = verdict(hi)
    else:
        count = int(math.floor((hi - lo) / scan + 1e-9))
        grid = [lo + k * scan for k in range(1, count + 1)]
        if not grid or grid[-1] < hi - 1e-9 * hi:
            grid.append(hi)
        for M in grid:
            v_hi = verdict(M)
            if v_hi.status is not Status.STABLE:
                hi = M
                break
            lo = M
    if v_hi.status is Status.STABLE:
        raise BracketError(f"upper endpoint {hi} is Stable, expected Unstable")
    witness = v_hi.witness_mode

    while hi - lo > step:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v.status is Status.STABLE:
            lo = mid
        else:
            hi = mid
            witness = v.witness_mode
    return ThresholdResult(j, 0.5 * (lo + hi), lo, hi, witness, evaluations)

