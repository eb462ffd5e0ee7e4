"""Experiment runners and the reproduction targets.

Every runner takes an :class:`~beamlab.config.ExperimentConfig`, optionally
writes its artifacts to an output directory (each file atomically), and
returns the in-memory result. Reports embed the resolved config and its
SHA-256 digest.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .certificates import build_certificate, certify, dumps17
from .config import ExperimentConfig, ExplicitInitial, ForcingConfig, PatternInitial
from .dynamics import integrate
from .errors import BeamlabError, ConfigError, NoPrevailingModeError
from .spectral import NonlinearitySpec
from .stability import classify_prevailing, detect_instability, resistant_modes, threshold_search

# bracket around each Table-2-style threshold for the cubic beam, N=12, T=16
TABLE2_BRACKETS = {1: (10.0, 16.0), 2: (5.0, 8.0), 3: (11.0, 17.0), 4: (20.0, 27.0), 5: (28.0, 36.0), 6: (45.0, 55.0)}
TABLE1_AMPLITUDES = (3.1, 6.2)
TARGETS = ("table1", "table2", "sec53", "fucik_forced")


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def energy_csv(traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "E", "rel_drift"])
    E0 = traj.energy[0]
    drift = (traj.energy - E0) / E0 if E0 != 0 else traj.energy - E0
    for t, e, d in zip(traj.t, traj.energy, drift):
        w.writerow([f"{t:.17g}", f"{e:.17g}", f"{d:.17g}"])
    return buf.getvalue()


def _provenance(cfg):
    return {"config": cfg.to_dict(), "config_digest": cfg.digest()}


def _integrate(cfg):
    return integrate(
        cfg.initial_state(), cfg.nonlinearity, cfg.modal_forcing(), cfg.T, cfg.rtol, cfg.atol, cfg.dt_sample
    )


def _prevailing(cfg):
    state = cfg.initial_state()
    forcing = cfg.modal_forcing()
    j = classify_prevailing(state.phi, state.phidot, forcing, cfg.detector().eta)
    if j is None:
        raise NoPrevailingModeError("initial data have no prevailing mode for the configured eta")
    return j


def run_simulate(cfg, out=None):
    """Integrate; write ``trajectory.csv``, ``energy.csv`` and ``run.json`` if ``out`` is given."""
    traj = _integrate(cfg)
    if out is not None:
        write_atomic(os.path.join(out, "trajectory.csv"), traj.csv_text())
        write_atomic(os.path.join(out, "energy.csv"), energy_csv(traj))
        report = {**_provenance(cfg), "samples": int(traj.t.size), "nfev": traj.provenance["nfev"]}
        write_atomic(os.path.join(out, "run.json"), dumps17(report))
    return traj


def run_detect(cfg, out=None, traj=None):
    """Classify the prevailing mode, integrate and return the detector verdict."""
    j = _prevailing(cfg)
    traj = traj if traj is not None else _integrate(cfg)
    verdict = detect_instability(traj, j, cfg.alpha, cfg.detector())
    if out is not None:
        write_atomic(os.path.join(out, "verdict.json"), dumps17({**verdict.to_dict(), **_provenance(cfg)}))
    return verdict


def run_threshold(cfg, out=None):
    """Threshold search on the pattern amplitude; needs a pattern config with bracket and step."""
    if not isinstance(cfg.initial, PatternInitial):
        raise ConfigError("threshold search needs pattern initial data")
    if cfg.forcing is not None:
        raise ConfigError("threshold search is defined for the unforced problem")
    if cfg.bracket is None or cfg.step is None:
        raise ConfigError("threshold search needs threshold.bracket and threshold.step")
    p = cfg.initial
    result = threshold_search(
        cfg.nonlinearity,
        p.j,
        cfg.bracket,
        cfg.step,
        N=cfg.N,
        T=cfg.T,
        residual=p.residual,
        cfg=cfg.detector(),
        rtol=cfg.rtol,
        atol=cfg.atol,
        dt_sample=cfg.dt_sample,
        scan=cfg.scan,
    )
    if out is not None:
        write_atomic(os.path.join(out, f"threshold_j{p.j}.json"), dumps17({**result.to_dict(), **_provenance(cfg)}))
    return result


def run_certify(cfg, out=None):
    """Detect, build the error certificate and lift the verdict."""
    j = _prevailing(cfg)
    traj = _integrate(cfg)
    verdict = detect_instability(traj, j, cfg.alpha, cfg.detector())
    cert = build_certificate(cfg.nonlinearity, float(traj.energy[0]), cfg.N, cfg.T, cfg.modal_forcing())
    result = certify(traj, verdict, cert)
    if out is not None:
        doc = {**result.to_dict(), "verdict": verdict.to_dict(), **_provenance(cfg)}
        write_atomic(os.path.join(out, "certificate.json"), dumps17(doc))
    return result


# configs for the reproduction targets


def pattern_config(f, j, amplitude, residual=0.01, N=12, T=16.0, **kw):
    return ExperimentConfig(N=N, T=T, nonlinearity=f, initial=PatternInitial(j, amplitude, residual), **kw)


def table1_config(amplitude):
    return pattern_config(NonlinearitySpec.cubic(), 2, amplitude)


def certified_forcing_config():
    phi = tuple(1e-3 * (1.0 if n == 2 else 0.996) for n in range(1, 6))
    return ExperimentConfig(
        N=5,
        T=5.0,
        nonlinearity=NonlinearitySpec.positive_part(0.1),
        initial=ExplicitInitial(phi, (0.0,) * 5),
        forcing=ForcingConfig(2, 5e-3, 1.0),
        eta=0.999,
    )


def fucik_configs():
    """The two forced ``3 u^+`` scenarios: mode 1 at ``gamma = 4/3`` and mode 2 at its resonant period."""

    def make(j, alpha, gamma, T):
        phi = tuple(0.01 if n == j else 0.00996 for n in range(1, 6))
        return ExperimentConfig(
            N=5,
            T=T,
            nonlinearity=NonlinearitySpec.positive_part(3.0),
            initial=ExplicitInitial(phi, (0.0,) * 5),
            forcing=ForcingConfig(j, alpha, gamma),
            eta=0.999,
        )

    return {"j1": make(1, 50.0, "4/3", 150.0), "j2": make(2, 1.0, "8*sqrt(19)/(4+sqrt(19))", 160.0)}


def _with_overrides(cfg, tol=None, dt_sample=None):
    changes = {}
    if tol is not None:
        changes.update(rtol=tol, atol=tol)
    if dt_sample is not None:
        changes["dt_sample"] = dt_sample
    return cfg.replace(**changes) if changes else cfg


def _sub(fn, *args):
    # one sub-run; errors are reported without aborting siblings
    try:
        return fn(*args)
    except BeamlabError as exc:
        return {"error": type(exc).__name__, "message": str(exc)}


def _table1_row(cfg, out):
    traj = run_simulate(cfg, out)
    sup = traj.sup_norms()
    residual = cfg.initial.residual
    return {
        "amplitude": cfg.initial.amplitude,
        "sup_norms": [float(s) for s in sup[:9]],
        "near_initial_residual": [bool(abs(s - residual) <= 0.05 * residual) for s in sup[:9]],
        "max_relative_energy_drift": float(np.max(np.abs(traj.energy - traj.energy[0])) / traj.energy[0]),
        **_provenance(cfg),
    }


def _table2_row(cfg, out):
    res = run_threshold(cfg, out)
    probe = cfg.replace(initial=PatternInitial(cfg.initial.j, res.hi, cfg.initial.residual))
    traj = _integrate(probe)
    return {
        **res.to_dict(),
        "resistant_modes": resistant_modes(traj, cfg.initial.j, cfg.initial.residual),
        **_provenance(cfg),
    }


def _certified_forcing(cfg, out):
    res = run_certify(cfg, out)
    return {**res.to_dict(), **_provenance(cfg)}


def _fucik(cfg, out):
    traj = run_simulate(cfg, out)
    j = cfg.forcing.j
    verdict = detect_instability(traj, _prevailing(cfg), cfg.alpha, cfg.detector())
    marks = [t for t in (50.0, 100.0, cfg.T) if t <= cfg.T]
    return {
        "verdict": verdict.to_dict(),
        "sup_norms": [float(s) for s in traj.sup_norms()],
        "prevailing_envelope": {f"{t:g}": float(traj.sup_norms(t)[j - 1]) for t in marks},
        **_provenance(cfg),
    }


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sub, [fn] * len(jobs), *zip(*jobs)))
    return [_sub(fn, *job) for job in jobs]


def run_reproduce(target, out=None, modes=None, tol=None, dt_sample=None, workers=1, step=0.05, scan=0.05):
    """Run one reproduction target and return its report.

    Parameters
    ----------
    target : {"table1", "table2", "sec53", "fucik_forced"}
    out : str, optional
        Directory for ``report.json`` and per-sub-run CSV/JSON files.
    modes : iterable of int, optional
        Prevailing modes for ``table2`` (default 1..6).
    tol, dt_sample : float, optional
        Override solver tolerance and sample spacing.
    workers : int
        Process-pool size for independent sub-runs.
    step, scan : float
        Bisection resolution and upward scan step for ``table2``; ``scan=None``
        bisects the whole bracket directly.
    """
    if target not in TARGETS:
        raise ConfigError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")

    def sub_out(name):
        return None if out is None else os.path.join(out, name)

    if target == "table1":
        cfgs = {f"M{a:g}": _with_overrides(table1_config(a), tol, dt_sample) for a in TABLE1_AMPLITUDES}
        rows = _map(_table1_row, [(c, sub_out(k)) for k, c in cfgs.items()], workers)
        report = {"target": target, "rows": dict(zip(cfgs, rows))}
    elif target == "table2":
        modes = sorted(set(modes)) if modes else sorted(TABLE2_BRACKETS)
        bad = [m for m in modes if m not in TABLE2_BRACKETS]
        if bad:
            raise ConfigError(f"no default bracket for modes {bad}")
        cfgs = {
            f"j{j}": _with_overrides(
                pattern_config(NonlinearitySpec.cubic(), j, TABLE2_BRACKETS[j][0], bracket=TABLE2_BRACKETS[j], step=step, scan=scan),
                tol,
                dt_sample,
            )
            for j in modes
        }
        rows = _map(_table2_row, [(c, sub_out(k)) for k, c in cfgs.items()], workers)
        report = {"target": target, "rows": dict(zip(cfgs, rows))}
    elif target == "sec53":
        cfg = _with_overrides(certified_forcing_config(), tol, dt_sample)
        report = {"target": target, **_sub(_certified_forcing, cfg, sub_out("sec53"))}
    else:
        cfgs = {k: _with_overrides(c, tol, dt_sample) for k, c in fucik_configs().items()}
        rows = _map(_fucik, [(c, sub_out(k)) for k, c in cfgs.items()], workers)
        report = {"target": target, "rows": dict(zip(cfgs, rows))}

    if out is not None:
        write_atomic(os.path.join(out, "report.json"), dumps17(report))
    return report

