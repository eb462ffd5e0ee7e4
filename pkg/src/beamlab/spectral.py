"""Fourier sine basis on (0, pi), cubic coupling tensors and modal projections.

A mode vector ``u`` is a 1-D float array whose entry ``u[n-1]`` multiplies
``sin(n x)``; its length is the truncation order ``N``.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ResourceLimitError

DEFAULT_MAX_N = 64
GL_NODES_PER_PANEL = 8


def max_truncation():
    """Truncation cap, overridable through ``BEAMLAB_MAX_N``."""
    raw = os.environ.get("BEAMLAB_MAX_N")
    if raw is None:
        return DEFAULT_MAX_N
    try:
        value = int(raw)
    except ValueError:
        raise ResourceLimitError(f"BEAMLAB_MAX_N must be an integer, got {raw!r}") from None
    if value < 1:
        raise ResourceLimitError(f"BEAMLAB_MAX_N must be positive, got {value}")
    return value


def check_truncation(N, max_n=None):
    cap = max_truncation() if max_n is None else max_n
    if int(N) != N or N < 1:
        raise ValueError(f"truncation order must be a positive integer, got {N!r}")
    if N > cap:
        raise ResourceLimitError(f"truncation order N={N} exceeds the configured maximum {cap}")
    return int(N)


# --------------------------------------------------------------------------
# Nonlinearities
# --------------------------------------------------------------------------


class Kind(str, enum.Enum):
    POSITIVE_PART = "positive_part"
    CUBIC = "cubic"
    POSITIVE_CUBIC = "positive_cubic"


@dataclass(frozen=True)
class NonlinearitySpec:
    """Restoring force ``f`` acting on the deflection.

    Three closed choices: ``mu * u^+`` (slackening hangers), ``u^3`` and
    ``(u^+)^3``. All are non-decreasing with ``f(0) = 0`` and a nonnegative
    potential ``F(s) = int_0^s f``.
    """

    kind: Kind
    mu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.POSITIVE_PART:
            if self.mu is None or not self.mu > 0 or not math.isfinite(self.mu):
                raise ValueError(f"positive-part nonlinearity needs a finite mu > 0, got {self.mu!r}")
            object.__setattr__(self, "mu", float(self.mu))
        elif self.mu is not None:
            raise ValueError(f"mu only applies to the positive-part nonlinearity, got kind={self.kind.value}")

    @classmethod
    def positive_part(cls, mu):
        return cls(Kind.POSITIVE_PART, mu)

    @classmethod
    def cubic(cls):
        return cls(Kind.CUBIC)

    @classmethod
    def positive_cubic(cls):
        return cls(Kind.POSITIVE_CUBIC)

    def f(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind is Kind.POSITIVE_PART:
            return self.mu * np.maximum(s, 0.0)
        if self.kind is Kind.CUBIC:
            return s**3
        return np.maximum(s, 0.0) ** 3

    def F(self, s):
        """Potential, the primitive of ``f`` vanishing at 0."""
        s = np.asarray(s, dtype=float)
        if self.kind is Kind.POSITIVE_PART:
            return 0.5 * self.mu * np.maximum(s, 0.0) ** 2
        if self.kind is Kind.CUBIC:
            return 0.25 * s**4
        return 0.25 * np.maximum(s, 0.0) ** 4

    def lipschitz(self, K):
        """Lipschitz constant of ``f`` on ``[-K, K]``."""
        if K < 0:
            raise ValueError("K must be nonnegative")
        if self.kind is Kind.POSITIVE_PART:
            return self.mu
        return 3.0 * K**2

    def to_dict(self):
        d = {"kind": self.kind.value}
        if self.mu is not None:
            d["mu"] = self.mu
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(Kind(d["kind"]), d.get("mu"))

    def __str__(self):
        if self.kind is Kind.POSITIVE_PART:
            return f"{self.mu:g}*u^+"
        return "u^3" if self.kind is Kind.CUBIC else "(u^+)^3"


# --------------------------------------------------------------------------
# Quadruple sine integrals
# --------------------------------------------------------------------------


def quadruple_sine_integral(p, q, r, s):
    """Return ``(8/pi) * int_0^pi sin(px) sin(qx) sin(rx) sin(sx) dx``.

    Closed-form case analysis on the multiplicity pattern of the indices;
    the result is always one of -1, 0, 1, 2, 3.
    """
    idx = (p, q, r, s)
    if any(int(i) != i or i < 1 for i in idx):
        raise ValueError(f"indices must be positive integers, got {idx}")
    counts = Counter(int(i) for i in idx)
    pattern = sorted(counts.values(), reverse=True)

    if pattern == [4]:
        return 3
    if pattern == [2, 2]:
        return 2
    if pattern == [3, 1]:
        # sin^3(px) sin(qx)
        a, b = sorted(counts, key=lambda i: -counts[i])
        return -1 if b == 3 * a else 0
    if pattern == [2, 1, 1]:
        # sin^2(px) sin(qx) sin(rx), q < r
        a = next(i for i, c in counts.items() if c == 2)
        b, c = sorted(i for i, c_ in counts.items() if c_ == 1)
        if b + c == 2 * a:
            return 1
        if c - b == 2 * a:
            return -1
        return 0

    # four distinct indices, paired as (a < b), (c < d)
    a, b, c, d = sorted(counts)
    value = 0
    if b - a == d - c:
        value += 1
    if b + a == d + c:
        value += 1
    if b - a == d + c:
        value -= 1
    if b + a == d - c:
        value -= 1
    return value


def _distinct_permutations(key):
    return set(itertools.permutations(key))


@dataclass(frozen=True)
class CubicCouplingTensor:
    """Sparse, fully symmetric table of the nonzero quadruple sine integrals.

    ``entries`` maps sorted index quadruples ``(p <= q <= r <= s)`` to their
    integral value; any permutation of a key has the same value.
    """

    N: int
    entries: dict
    # contraction plan: target index, coefficient, and the three remaining indices
    _target: np.ndarray = field(repr=False, compare=False, default=None)
    _coef: np.ndarray = field(repr=False, compare=False, default=None)
    _others: np.ndarray = field(repr=False, compare=False, default=None)

    def __getitem__(self, key):
        if any(k < 1 or k > self.N for k in key):
            raise IndexError(f"index {key} outside 1..{self.N}")
        return self.entries.get(tuple(sorted(key)), 0)

    def __len__(self):
        return len(self.entries)

    def multiplicity(self, key):
        """Number of distinct orderings of a stored key."""
        return len(_distinct_permutations(key))

    def cubic_term(self, u):
        """``sum_{q,r,s} T[n,q,r,s] u_q u_r u_s`` for every n, as a length-N array."""
        u = np.asarray(u, dtype=float)
        prod = self._coef * u[self._others[:, 0]] * u[self._others[:, 1]] * u[self._others[:, 2]]
        return np.bincount(self._target, weights=prod, minlength=self.N)

    def quartic_form(self, u):
        """``sum_{p,q,r,s} T[p,q,r,s] u_p u_q u_r u_s``."""
        u = np.asarray(u, dtype=float)
        return float(u @ self.cubic_term(u))

    def quartic_forms(self, U):
        """:meth:`quartic_form` for every row of ``U``."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        o = self._others
        return (U[:, self._target] * U[:, o[:, 0]] * U[:, o[:, 1]] * U[:, o[:, 2]]) @ self._coef


def _contraction_plan(entries, N):
    # For key k with multiplicity m and a value v occurring c_v times in k,
    # the number of orderings with v in the first slot is m * c_v / 4.
    target, coef, others = [], [], []
    for key, val in entries.items():
        mult = len(_distinct_permutations(key))
        counts = Counter(key)
        for v, c in counts.items():
            rest = list(key)
            rest.remove(v)
            target.append(v - 1)
            coef.append(val * mult * c / 4.0)
            others.append([i - 1 for i in rest])
    return (
        np.asarray(target, dtype=np.intp),
        np.asarray(coef, dtype=float),
        np.asarray(others, dtype=np.intp).reshape(-1, 3),
    )


@lru_cache(maxsize=32)
def _build_cubic_tensor(N):
    entries = {}
    for a in range(1, N + 1):
        for b in range(a, N + 1):
            for c in range(b, N + 1):
                # nonzero only if s = |a +- b +- c| for some sign choice
                for sb, sc in itertools.product((1, -1), repeat=2):
                    d = abs(a + sb * b + sc * c)
                    if d < c or d > N:
                        continue
                    key = (a, b, c, d)
                    if key in entries:
                        continue
                    val = quadruple_sine_integral(*key)
                    if val != 0:
                        entries[key] = val
    target, coef, others = _contraction_plan(entries, N)
    return CubicCouplingTensor(N, entries, target, coef, others)


def build_cubic_tensor(N, max_n=None):
    """Enumerate every nonzero quadruple with indices up to ``N``.

    Raises :class:`ResourceLimitError` if ``N`` exceeds the truncation cap
    (default 64, see ``BEAMLAB_MAX_N``).
    """
    return _build_cubic_tensor(check_truncation(N, max_n))


# --------------------------------------------------------------------------
# Quadrature and projections
# --------------------------------------------------------------------------


def default_panels(N):
    return max(64, 8 * N)


@lru_cache(maxsize=64)
def quadrature_rule(N, panels):
    """Composite 8-point Gauss-Legendre rule on [0, pi] and the sine table.

    Returns ``(x, w, S)`` with ``S[i, n-1] = sin(n x_i)``.
    """
    xg, wg = _gauss_legendre()
    h = math.pi / panels
    left = h * np.arange(panels)
    x = (left[:, None] + 0.5 * h * (xg + 1.0)[None, :]).ravel()
    w = np.tile(0.5 * h * wg, panels)
    S = np.sin(np.outer(x, np.arange(1, N + 1)))
    for arr in (x, w, S):
        arr.setflags(write=False)
    return x, w, S


def _field_and_slope(u, x):
    # u is one mode vector, or one row per point in x
    n = np.arange(1, u.shape[-1] + 1)
    nx = np.multiply.outer(x, n)
    if u.ndim == 1:
        return np.sin(nx) @ u, np.cos(nx) @ (n * u)
    return np.einsum("ij,ij->i", np.sin(nx), u), np.einsum("ij,ij->i", np.cos(nx), n * u)


@lru_cache(maxsize=1)
def _gauss_legendre():
    return np.polynomial.legendre.leggauss(GL_NODES_PER_PANEL)


def _locate_roots(u, lo, hi, ulo, uhi, iters=30):
    # safeguarded Newton on brackets [lo, hi] with a sign change, started at the secant point
    x = lo + (hi - lo) * ulo / (ulo - uhi)
    for _ in range(iters):
        ux, dux = _field_and_slope(u, x)
        same = np.sign(ux) == np.sign(ulo)
        lo = np.where(same, x, lo)
        ulo = np.where(same, ux, ulo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - ux / dux
        bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= 1e-14
        x = xn
        if done.all():
            break
    return x


def adapted_rule(u, panels=None):
    """Quadrature nodes adapted to the sign changes of the field ``u``.

    Starts from the composite Gauss-Legendre rule and re-splits every
    panel in which ``u`` changes sign at its roots, so that kinks of
    ``u^+`` fall on piece boundaries. Returns ``(x, w, S)``.
    """
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    panels = panels or default_panels(N)
    x, w, S = quadrature_rule(N, panels)
    ux = S @ u
    h = math.pi / panels
    edges = h * np.arange(panels + 1)
    # panel samples: left edge, 8 nodes, right edge (u vanishes at 0 and pi)
    ue = _edge_table(N, panels) @ u
    ue[0] = ue[-1] = 0.0
    vals = np.empty((panels, GL_NODES_PER_PANEL + 2))
    vals[:, 0] = ue[:-1]
    vals[:, 1:-1] = ux.reshape(panels, -1)
    vals[:, -1] = ue[1:]
    sg = np.sign(vals)
    change = (sg[:, :-1] * sg[:, 1:]) < 0
    if not change.any():
        return x, w, S
    grid = _panel_grid(N, panels)
    pi_, ci = np.nonzero(change)
    roots = _locate_roots(u, grid[pi_, ci], grid[pi_, ci + 1], vals[pi_, ci], vals[pi_, ci + 1])
    split = np.unique(pi_)
    is_split = np.zeros(panels, dtype=bool)
    is_split[split] = True
    node_keep = np.repeat(~is_split, GL_NODES_PER_PANEL)

    pts = np.sort(np.concatenate((edges[split], edges[split + 1], roots)))
    a, b = pts[:-1], pts[1:]
    mid_panel = np.minimum(((a + b) / (2 * h)).astype(np.intp), panels - 1)
    ok = (b > a) & is_split[mid_panel]
    a, b = a[ok], b[ok]
    xg, wg = _gauss_legendre()
    half = 0.5 * (b - a)
    xs = (a[:, None] + half[:, None] * (xg + 1.0)[None, :]).ravel()
    ws = (half[:, None] * wg[None, :]).ravel()
    Ss = np.sin(np.multiply.outer(xs, np.arange(1, N + 1)))
    return (
        np.concatenate((x[node_keep], xs)),
        np.concatenate((w[node_keep], ws)),
        np.vstack((S[node_keep], Ss)),
    )


@lru_cache(maxsize=64)
def _edge_table(N, panels):
    edges = (math.pi / panels) * np.arange(panels + 1)
    return np.sin(np.multiply.outer(edges, np.arange(1, N + 1)))


@lru_cache(maxsize=64)
def _panel_grid(N, panels):
    x, _, _ = quadrature_rule(N, panels)
    h = math.pi / panels
    edges = h * np.arange(panels + 1)
    grid = np.empty((panels, GL_NODES_PER_PANEL + 2))
    grid[:, 0] = edges[:-1]
    grid[:, 1:-1] = x.reshape(panels, -1)
    grid[:, -1] = edges[1:]
    return grid


def project_nonlinearity(f, u, panels=None):
    """Modal projection ``(2/pi) int_0^pi f(sum_m u_m sin(mx)) sin(nx) dx``, n = 1..N.

    The cubic case is exact (tensor contraction); the positive-part kinds
    use composite Gauss-Legendre quadrature with ``panels`` panels
    (default ``max(64, 8N)``), split at the sign changes of ``u``.
    """
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    if f.kind is Kind.CUBIC:
        # (2/pi)(pi/8) = 1/4 converts the tensor normalization
        return 0.25 * build_cubic_tensor(N).cubic_term(u)
    x, w, S = adapted_rule(u, panels)
    return (2.0 / math.pi) * (S.T @ (w * f.f(S @ u)))


def potential_integral(f, u, panels=None):
    """``int_0^pi F(u(x)) dx`` for the mode vector ``u``."""
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    if f.kind is Kind.CUBIC:
        return math.pi / 32.0 * build_cubic_tensor(N).quartic_form(u)
    x, w, S = adapted_rule(u, panels)
    return float(w @ f.F(S @ u))


def potential_integrals(f, U, panels=None, chunk=2048):
    """:func:`potential_integral` for every row of ``U`` (shape ``(B, N)``), batched."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    B, N = U.shape
    if f.kind is Kind.CUBIC:
        return math.pi / 32.0 * build_cubic_tensor(N).quartic_forms(U)
    panels = panels or default_panels(N)
    out = np.empty(B)
    for start in range(0, B, chunk):
        out[start : start + chunk] = _split_potentials(f, U[start : start + chunk], panels)
    return out


def _split_potentials(f, U, panels):
    B, N = U.shape
    x, w, S = quadrature_rule(N, panels)
    nodes = U @ S.T
    per_panel = (f.F(nodes) * w).reshape(B, panels, GL_NODES_PER_PANEL).sum(axis=2)
    ue = U @ _edge_table(N, panels).T
    ue[:, 0] = ue[:, -1] = 0.0
    vals = np.empty((B, panels, GL_NODES_PER_PANEL + 2))
    vals[:, :, 0] = ue[:, :-1]
    vals[:, :, 1:-1] = nodes.reshape(B, panels, -1)
    vals[:, :, -1] = ue[:, 1:]
    sg = np.sign(vals)
    bi, pi_, ci = np.nonzero(sg[:, :, :-1] * sg[:, :, 1:] < 0)
    if bi.size == 0:
        return per_panel.sum(axis=1)

    grid = _panel_grid(N, panels)
    roots = _locate_roots(U[bi], grid[pi_, ci], grid[pi_, ci + 1], vals[bi, pi_, ci], vals[bi, pi_, ci + 1])
    key = bi * panels + pi_
    split = np.unique(key)
    per_panel.ravel()[split] = 0.0
    total = per_panel.sum(axis=1)

    # each split panel contributes its two edges plus its roots; pieces join neighbours within a panel
    h = math.pi / panels
    sp = split % panels
    keys = np.concatenate((split, split, key))
    pos = np.concatenate((h * sp, h * (sp + 1), roots))
    order = np.lexsort((pos, keys))
    keys, pos = keys[order], pos[order]
    ok = (keys[:-1] == keys[1:]) & (pos[1:] > pos[:-1])
    a, b, owner = pos[:-1][ok], pos[1:][ok], keys[:-1][ok] // panels
    xg, wg = _gauss_legendre()
    half = 0.5 * (b - a)
    xs = a[:, None] + half[:, None] * (xg + 1.0)[None, :]
    n = np.arange(1, N + 1)
    uvals = np.einsum("pkn,pn->pk", np.sin(xs[:, :, None] * n), U[owner])
    contrib = (f.F(uvals) * wg).sum(axis=1) * half
    return total + np.bincount(owner, weights=contrib, minlength=B)


def evaluate_field(u, xs):
    """Pointwise sum ``sum_n u_n sin(n x)`` at positions ``xs`` in [0, pi]."""
    u = np.asarray(u, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0) or np.any(xs > math.pi):
        raise ValueError("positions must lie in [0, pi]")
    n = np.arange(1, u.shape[0] + 1)
    return np.sin(np.multiply.outer(xs, n)) @ u


def influence_set(*sources):
    """Modes receiving a cubic forcing term from one, two or three source modes.

    A single mode ``q`` feeds ``3q``; a pair ``q < r`` feeds
    ``2r +- q``, ``r + 2q`` and ``|r - 2q|``; a triple ``q < r < s`` feeds
    ``s + r +- q``, ``s - r + q`` and ``|s - r - q|``. Zero and the
    source indices themselves are dropped.
    """
    if not 1 <= len(sources) <= 3:
        raise ValueError("between one and three source modes are required")
    if any(int(s) != s or s < 1 for s in sources):
        raise ValueError(f"mode indices must be positive integers, got {sources}")
    if len(set(sources)) != len(sources):
        raise ValueError(f"source modes must be distinct, got {sources}")
    srt = sorted(int(s) for s in sources)
    if len(srt) == 1:
        (q,) = srt
        out = {3 * q}
    elif len(srt) == 2:
        q, r = srt
        out = {2 * r + q, 2 * r - q, r + 2 * q, abs(r - 2 * q)}
    else:
        q, r, s = srt
        out = {s + r + q, s + r - q, s - r + q, abs(s - r - q)}
    return out - {0} - set(srt)
