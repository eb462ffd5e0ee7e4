import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamlab.dynamics import ModalForcing, ModalState, Trajectory, explicit_first_mode_solution, integrate
from beamlab.errors import BracketError
from beamlab.spectral import NonlinearitySpec
from beamlab.stability import (
    PrevailingConfig,
    Status,
    classify_prevailing,
    detect_instability,
    pattern_initial_data,
    resistant_modes,
    running_sup,
    threshold_search,
)

CFG = PrevailingConfig(eta=0.1, T_W=1.0, T=16.0)


def synthetic(columns, T=16.0, dt=1e-3):
    """Trajectory whose mode n is ``columns[n-1](t)``."""
    t = np.linspace(0.0, T, int(round(T / dt)) + 1)
    phi = np.column_stack([np.broadcast_to(c(t), t.shape) for c in columns])
    return Trajectory(t, phi, np.zeros_like(phi), np.zeros_like(t))


def const(c):
    return lambda t: np.full_like(t, c)


def brute_force_verdict(traj, j, alpha, cfg):
    # literal reading of the definition, one (k, tau) at a time
    first_bad = None
    for tau in traj.t[(traj.t > 2 * cfg.T_W) & (traj.t < cfg.T)]:
        Aj = running_sup(traj, j, tau)
        for k in range(1, traj.N + 1):
            if k == j:
                continue
            Ak = running_sup(traj, k, tau)
            Ah = np.max(np.abs(traj.phi[traj.t <= tau / 2, k - 1]))
            growth = Ak / Ah if Ah > 0 else (math.inf if Ak > 0 else 0.0)
            if Ak >= 0.11 * Aj and growth >= 11 * (alpha + 1):
                return Status.UNSTABLE, k, tau
            if not (Ak <= 0.09 * Aj or growth <= 9 * (alpha + 1)) and first_bad is None:
                first_bad = (k, tau)
    if first_bad:
        return Status.INDETERMINATE, *first_bad
    return Status.STABLE, None, None


# prevailing mode


def test_classify_examples():
    assert classify_prevailing([1, 0, 0], [0, 0, 0]) == 1
    a = np.full(12, 0.01)
    a[1] = 6.0
    assert classify_prevailing(a, np.zeros(12), eta=0.1) == 2
    assert classify_prevailing([1, 1, 0], [0, 0, 0]) is None
    assert classify_prevailing([0, 0], [0, 0]) is None
    with pytest.raises(ValueError):
        classify_prevailing([1, 0], [0])


def test_classify_forced_uses_forced_mode():
    g = ModalForcing(2, 5e-3, 1.0)
    a = 1e-3 * np.array([0.996, 1, 0.996, 0.996, 0.996])
    assert classify_prevailing(a, np.zeros(5), g) == 2
    # the forced mode must dominate every other mode individually
    assert classify_prevailing(1e-3 * np.array([1.0, 0.5, 0, 0, 0]), np.zeros(5), g) is None


@settings(max_examples=60)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8), st.floats(0.01, 0.9))
def test_classify_agrees_with_definition(a, eta):
    a = np.array(a)
    e = a**2
    j = classify_prevailing(a, np.zeros_like(a), eta=eta)
    hits = [n for n in range(a.size) if e[n] > 0 and e.sum() - e[n] <= eta**4 * e[n]]
    assert j == (hits[0] + 1 if len(hits) == 1 else None)


# running sup


def test_running_sup_examples():
    tr = synthetic([const(-0.3), np.sin], T=4.0)
    assert running_sup(tr, 1, 2.0) == pytest.approx(0.3)
    assert running_sup(tr, 2, math.pi / 4) == pytest.approx(math.sqrt(2) / 2, abs=1e-3)
    with pytest.raises(ValueError):
        running_sup(tr, 1, 5.0)
    with pytest.raises(ValueError):
        running_sup(tr, 1, 0.0)


def test_running_sup_of_explicit_solution():
    tr = synthetic([explicit_first_mode_solution], T=5.0)
    assert running_sup(tr, 1, 1.5 * math.pi) == pytest.approx(1.0, abs=1e-6)


def test_running_sup_monotone_in_tau():
    tr = synthetic([lambda t: np.sin(3 * t) * t, np.cos], T=6.0)
    vals = [running_sup(tr, 1, tau) for tau in np.linspace(0.1, 6.0, 40)]
    assert np.all(np.diff(vals) >= 0)


# detector


def test_frozen_residuals_are_stable():
    tr = synthetic([const(0.01), lambda t: 6 * np.cos(4 * t), const(0.01), const(0.01)])
    v = detect_instability(tr, 2, 0.0, CFG)
    assert v.status is Status.STABLE and v.witness_mode is None


def test_growing_residual_is_unstable_with_earliest_witness():
    # mode 3 jumps at t=5, mode 1 at t=9: mode 3 is the earliest witness
    tr = synthetic([lambda t: np.where(t > 9, 2.0, 0.01), const(5.0), lambda t: np.where(t > 5, 1.0, 0.01)])
    v = detect_instability(tr, 2, 0.0, CFG)
    assert v.status is Status.UNSTABLE
    assert v.witness_mode == 3
    assert v.witness_tau == pytest.approx(5.001, abs=2e-3)
    assert v.ratio_amplitude >= 0.11 and v.ratio_growth >= 11


def test_tie_in_time_goes_to_smaller_mode():
    jump = lambda t: np.where(t > 5, 1.0, 0.01)
    tr = synthetic([const(5.0), jump, jump])
    assert detect_instability(tr, 1, 0.0, CFG).witness_mode == 2


def test_gap_between_constants_is_indeterminate():
    # reaches 0.10 of the prevailing mode with a tenfold growth: neither stable nor unstable
    tr = synthetic([const(10.0), lambda t: np.where(t > 5, 1.0, 0.1)])
    v = detect_instability(tr, 1, 0.0, CFG)
    assert v.status is Status.INDETERMINATE
    assert v.witness_mode == 2


def test_zero_history_counts_as_infinite_growth():
    tr = synthetic([const(1.0), lambda t: np.where(t > 4, 0.5, 0.0)])
    v = detect_instability(tr, 1, 0.0, CFG)
    assert v.status is Status.UNSTABLE and math.isinf(v.ratio_growth)


def test_identically_zero_residual_is_stable():
    tr = synthetic([const(1.0), const(0.0)])
    assert detect_instability(tr, 1, 0.0, CFG).status is Status.STABLE


def test_forcing_amplitude_raises_growth_threshold():
    tr = synthetic([const(1.0), lambda t: np.where(t > 5, 0.5, 0.02)])
    assert detect_instability(tr, 1, 0.0, CFG).status is Status.UNSTABLE
    assert detect_instability(tr, 1, 2.0, CFG).status is Status.STABLE


def test_growth_before_twice_wagner_time_is_ignored():
    tr = synthetic([const(1.0), lambda t: np.where(t > 0.5, 0.5, 0.001)])
    assert detect_instability(tr, 1, 0.0, CFG).status is Status.STABLE


@pytest.mark.parametrize(
    "columns",
    [
        [const(3.0), lambda t: 0.01 * np.exp(0.5 * t) * np.cos(7 * t), lambda t: 0.02 + 0.3 * np.sin(t) ** 8],
        [lambda t: 2 + np.sin(t), lambda t: np.where(t > 7, 0.25, 0.02), lambda t: np.where(t > 3, 0.2, 0.02)],
        [const(1.0), lambda t: np.where(t > 6, 0.1, 0.01), const(0.05)],
    ],
)
def test_detector_matches_brute_force(columns):
    tr = synthetic(columns, T=10.0, dt=0.01)
    cfg = PrevailingConfig(T=10.0)
    v = detect_instability(tr, 1, 0.0, cfg)
    status, k, tau = brute_force_verdict(tr, 1, 0.0, cfg)
    assert v.status is status
    assert v.witness_mode == k
    assert v.witness_tau == tau


def test_detector_argument_checks():
    tr = synthetic([const(1.0), const(0.0)], T=3.0)
    with pytest.raises(ValueError):
        detect_instability(tr, 3, 0.0, PrevailingConfig(T=3.0))
    with pytest.raises(ValueError):
        detect_instability(tr, 1, 0.0, PrevailingConfig(T=16.0))
    with pytest.raises(ValueError):
        PrevailingConfig(T=1.5)
    with pytest.raises(ValueError):
        PrevailingConfig(eta=1.0)


def test_verdict_json_fields():
    tr = synthetic([const(1.0), lambda t: np.where(t > 4, 0.5, 0.0)])
    doc = json.loads(json.dumps(detect_instability(tr, 1, 0.0, CFG).to_dict()))
    for key in ("status", "witness_mode", "witness_tau", "ratio_amplitude", "ratio_growth", "eta", "T_W", "T"):
        assert key in doc


def test_detector_is_deterministic():
    tr = synthetic([const(1.0), lambda t: 0.01 * np.exp(0.3 * t)])
    assert detect_instability(tr, 1, 0.0, CFG) == detect_instability(tr, 1, 0.0, CFG)


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_positive_part_verdict_scale_invariant(lam):
    f = NonlinearitySpec.positive_part(3.0)
    base = pattern_initial_data(6, 2, 1.0, 0.01)
    cfg = PrevailingConfig(T=6.0)
    a = detect_instability(integrate(base, f, None, 6.0), 2, 0.0, cfg)
    scaled = ModalState(0.0, lam * base.phi, lam * base.phidot)
    b = detect_instability(integrate(scaled, f, None, 6.0), 2, 0.0, cfg)
    assert a.status is b.status
    assert a.ratio_amplitude == pytest.approx(b.ratio_amplitude, rel=1e-5)


@pytest.mark.slow
def test_physiological_transfer_to_third_multiple_is_not_instability():
    # cubic, prevailing mode 2 at amplitude 6: mode 6 jumps early (before tau = 2) then settles
    tr = integrate(pattern_initial_data(12, 2, 6.0, 0.01), NonlinearitySpec.cubic(), None, 16.0)
    assert running_sup(tr, 6, 2.0) > 5 * 0.01
    assert detect_instability(tr, 2, 0.0, CFG).status is Status.STABLE
    assert 6 not in resistant_modes(tr, 2, 0.01)


# threshold search


def test_threshold_search_rejects_bad_bracket():
    f = NonlinearitySpec.cubic()
    with pytest.raises(BracketError):
        threshold_search(f, 2, (3.0, 2.0), 0.1, N=4, T=3.0)
    with pytest.raises(BracketError):
        threshold_search(f, 2, (1.0, 2.0), 0.0, N=4, T=3.0)
    # both endpoints stable at these small amplitudes
    with pytest.raises(BracketError):
        threshold_search(f, 2, (0.5, 1.0), 0.1, N=4, T=3.0)


def test_threshold_search_bisects_to_step():
    # a short horizon with large amplitudes keeps this cheap
    f = NonlinearitySpec.cubic()
    res = threshold_search(f, 2, (2.0, 20.0), 0.5, N=3, T=6.0)
    assert res.hi - res.lo <= 0.5
    assert res.lo < res.threshold < res.hi
    statuses = dict(res.evaluations)
    assert statuses[2.0] is Status.STABLE and statuses[20.0] is not Status.STABLE
    assert res.witness_mode == 1
    assert res.to_dict()["bracket"] == [res.lo, res.hi]


def test_scan_finds_the_first_unstable_window(monkeypatch):
    # verdict as a function of amplitude: a narrow unstable window at [3, 3.4], then unstable from 9 on
    import types

    import beamlab.stability as stab

    def fake_verdict(traj, j, alpha, cfg):
        M = traj.phi[j - 1]
        unstable = 3.0 <= M <= 3.4 or M >= 9.0
        return types.SimpleNamespace(status=Status.UNSTABLE if unstable else Status.STABLE, witness_mode=1 if unstable else None)

    monkeypatch.setattr(stab, "integrate", lambda init, *a, **k: init)
    monkeypatch.setattr(stab, "detect_instability", fake_verdict)
    f = NonlinearitySpec.cubic()
    plain = threshold_search(f, 2, (1.0, 10.0), 0.1, N=3)
    assert 8.9 < plain.threshold < 9.1
    scanned = threshold_search(f, 2, (1.0, 10.0), 0.1, N=3, scan=0.25)
    assert 2.9 < scanned.threshold < 3.0 and scanned.hi - scanned.lo <= 0.1
    assert [m for m, _ in scanned.evaluations[:3]] == [1.0, 1.25, 1.5]
    with pytest.raises(BracketError):
        threshold_search(f, 2, (1.0, 2.0), 0.1, N=3, scan=0.25)
    with pytest.raises(BracketError):
        threshold_search(f, 2, (1.0, 2.0), 0.1, N=3, scan=0.0)
