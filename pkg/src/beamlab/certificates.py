"""A priori truncation-error bounds and the lift of finite-dimensional verdicts to the PDE.

For data living in the first N modes, the Galerkin error on mode ``n <= N``
obeys

    ||phi_n - phi_n^N||_inf <= 4M/(N+1)^2 sqrt((L+2)/pi) (e^{CT/2} - 1) / sqrt(n^4 + 1/T^2 + L/2),

with ``M = sqrt(2 E0) + int_0^T ||g||``, ``L = L(M)`` the Lipschitz constant
of ``f`` on ``[-M, M]`` and ``C = L / sqrt(2 (L + 2))``. A stable (unstable)
Galerkin verdict carries over to the PDE when perturbing every running sup
by these bounds cannot push the detector quantities across the PDE
thresholds ``0.1`` and ``10 (alpha + 1)``, which sit between the detector's
stable and unstable constants.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import remainder_bound
from .errors import MismatchError
from .spectral import Kind
from .stability import Status, sup_tables

PDE_AMPLITUDE = 0.1
PDE_GROWTH = 10.0


def lipschitz_constant(f, K):
    """Lipschitz constant of ``f`` on ``[-K, K]``."""
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K!r}")
    return f.lipschitz(K)


def solution_bound_M(E0, forcing=None, T=1.0):
    """``sqrt(2 E0)`` plus the integer-part majorization of ``int_0^T ||g||_{L^2}``."""
    if E0 < 0 or T <= 0:
        raise ValueError("need E0 >= 0 and T > 0")
    M = math.sqrt(2.0 * E0)
    if forcing is not None:
        g = abs(forcing.gamma)
        M += math.sqrt(2.0 * math.pi) * forcing.alpha / g * math.floor(1.0 + g * T / math.pi)
    return M


def growth_constant(L):
    return L / math.sqrt(2.0 * (L + 2.0))


def mode_error_bound(n, N, T, M, L):
    """Sup-norm bound on the Galerkin error of mode ``n`` over ``[0, T]``."""
    if not 1 <= n <= N:
        raise ValueError(f"mode {n} outside 1..{N}")
    if T <= 0 or M < 0 or L < 0:
        raise ValueError("need T > 0, M >= 0, L >= 0")
    C = growth_constant(L)
    return (
        4.0 * M / (N + 1) ** 2
        * math.sqrt((L + 2.0) / math.pi)
        * math.expm1(0.5 * C * T)
        / math.sqrt(n**4 + 1.0 / T**2 + 0.5 * L)
    )


def specialized_positive_part_bound(n, mu, E0, T, alpha=0.0, gamma=1.0, N=5):
    """The mode bound written out for ``f = mu u^+`` (``L = mu``), default ``N = 5``."""
    if T <= 0 or E0 < 0 or mu <= 0:
        raise ValueError("need T > 0, E0 >= 0, mu > 0")
    forced = math.sqrt(32.0 * math.pi) * alpha / abs(gamma) * math.floor(1.0 + abs(gamma) * T / math.pi) if alpha else 0.0
    return (
        math.sqrt((mu + 2.0) / math.pi)
        * (math.sqrt(32.0 * E0) + forced)
        / (N + 1) ** 2
        * math.expm1(mu * T / (2.0 * math.sqrt(2.0 * (mu + 2.0))))
        / math.sqrt(n**4 + 1.0 / T**2 + 0.5 * mu)
    )


@dataclass(frozen=True)
class ErrorCertificate:
    """Constants and per-mode error bounds for one (N, T, data) triple.

    ``remainder`` bounds the tail ``sum_{n>N} phi_n^2``; in the forced case it
    uses ``M^2 / 2`` in place of the initial energy.
    """

    N: int
    T: float
    E0: float
    M: float
    L: float
    C: float
    per_mode_bounds: np.ndarray
    remainder: float
    forced: bool = False

    def to_dict(self):
        return {
            "N": self.N,
            "T": self.T,
            "E0": self.E0,
            "M": self.M,
            "L": self.L,
            "C": self.C,
            "per_mode_bounds": [float(b) for b in self.per_mode_bounds],
            "remainder": self.remainder,
            "remainder_basis": "M^2/2" if self.forced else "E0",
        }


def build_certificate(f, E0, N, T, forcing=None):
    """Assemble the :class:`ErrorCertificate` for nonlinearity ``f`` and initial energy ``E0``."""
    M = solution_bound_M(E0, forcing, T)
    L = lipschitz_constant(f, M)
    bounds = np.array([mode_error_bound(n, N, T, M, L) for n in range(1, N + 1)])
    tail_energy = 0.5 * M**2 if forcing is not None else E0
    return ErrorCertificate(
        N=N,
        T=float(T),
        E0=float(E0),
        M=M,
        L=L,
        C=growth_constant(L),
        per_mode_bounds=bounds,
        remainder=remainder_bound(tail_energy, N),
        forced=forcing is not None,
    )


class CertStatus(str, enum.Enum):
    CERTIFIED_STABLE = "Certified-Stable"
    CERTIFIED_UNSTABLE = "Certified-Unstable"
    NOT_CERTIFIED = "Not-Certified"


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of :func:`certify`.

    ``margin`` is the relative slack of the limiting ``(k, tau)`` pair:
    positive means the perturbed quantities stay strictly on the certified
    side of the PDE thresholds. ``tail_margin`` is the corresponding slack for
    modes above N using the remainder bound; it is reported, not enforced.
    """

    status: CertStatus
    verdict: Status
    margin: float
    limiting_mode: int | None
    limiting_tau: float | None
    tail_margin: float
    certificate: ErrorCertificate
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "status": self.status.value,
            "finite_verdict": self.verdict.value,
            "margin": self.margin,
            "limiting_mode": self.limiting_mode,
            "limiting_tau": self.limiting_tau,
            "tail_margin": self.tail_margin,
            "certificate": self.certificate.to_dict(),
            **self.extras,
        }

    def to_json(self):
        return dumps17(self.to_dict())


def _round17(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    return obj


def dumps17(obj):
    """JSON with floats at 17 significant digits; non-finite floats become strings."""
    return json.dumps(_round17(obj), indent=2, sort_keys=True)


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))


def certify(traj, verdict, cert, cfg=None):
    """Lift a finite-dimensional verdict to a PDE-level statement.

    Every running sup ``A_n`` of the Galerkin solution is widened to
    ``[A_n - b_n, A_n + b_n]`` with ``b_n`` the certificate bound. Stability
    is certified when, for every residual ``k <= N`` and scanned ``tau``,
    the worst case still satisfies ``A_k < 0.1 A_j`` or a growth ratio
    ``< 10 (alpha + 1)``. Instability is certified when some pair satisfies
    both reversed inequalities in the best case. Indeterminate verdicts are
    never certified.
    """
    if verdict.N is not None and verdict.N != cert.N:
        raise MismatchError(f"verdict has N={verdict.N}, certificate N={cert.N}")
    if traj.N != cert.N:
        raise MismatchError(f"trajectory has N={traj.N}, certificate N={cert.N}")
    if abs(verdict.config.T - cert.T) > 1e-9 * max(1.0, cert.T):
        raise MismatchError(f"verdict horizon {verdict.config.T} differs from certificate horizon {cert.T}")
    cfg = cfg or verdict.config
    j, alpha = verdict.j, verdict.alpha
    b = np.asarray(cert.per_mode_bounds, dtype=float)

    tau, A, A_half, Aj = sup_tables(traj, j, cfg)
    bj = b[j - 1]
    residual = np.arange(traj.N) != j - 1
    A, A_half, bk = A[:, residual], A_half[:, residual], b[residual]
    modes = np.arange(1, traj.N + 1)[residual]
    growth_cap = PDE_GROWTH * (alpha + 1.0)

    tail = math.sqrt(cert.remainder)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail_margin = float(np.min(1.0 - tail / (PDE_AMPLITUDE * np.maximum(Aj - bj, 0.0)))) if tau.size else math.inf

    def result(status, margin, idx):
        k = int(modes[idx[1]]) if idx is not None else None
        t = float(tau[idx[0]]) if idx is not None else None
        return CertificationResult(status, verdict.status, float(margin), k, t, tail_margin, cert)

    if tau.size == 0 or modes.size == 0:
        return result(CertStatus.NOT_CERTIFIED, -math.inf, None)

    if verdict.status is Status.STABLE:
        # worst case: residual larger, prevailing and early sup smaller
        amp = _ratio(A + bk, PDE_AMPLITUDE * np.maximum(Aj[:, None] - bj, 0.0))
        grow = _ratio(A + bk, np.maximum(A_half - bk, 0.0)) / growth_cap
        slack = np.maximum(1.0 - amp, 1.0 - grow)
        idx = np.unravel_index(np.argmin(slack), slack.shape)
        margin = slack[idx]
        status = CertStatus.CERTIFIED_STABLE if margin > 0 else CertStatus.NOT_CERTIFIED
        return result(status, margin, idx)

    if verdict.status is Status.UNSTABLE:
        # best case for the witness: residual smaller, prevailing and early sup larger
        lo = np.maximum(A - bk, 0.0)
        amp = _ratio(PDE_AMPLITUDE * (Aj[:, None] + bj), lo)
        grow = growth_cap * _ratio(A_half + bk, lo)
        slack = np.minimum(1.0 - amp, 1.0 - grow)
        idx = np.unravel_index(np.argmax(slack), slack.shape)
        margin = slack[idx]
        status = CertStatus.CERTIFIED_UNSTABLE if margin > 0 else CertStatus.NOT_CERTIFIED
        return result(status, margin, idx)

    return result(CertStatus.NOT_CERTIFIED, -math.inf, None)
