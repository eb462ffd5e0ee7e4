"""JSON experiment configuration.

A config fixes the truncation, horizon, nonlinearity, optional forcing,
initial data and solver/detector settings of one run. Initial data are
either explicit coefficient arrays or the pattern
``M sin(jx) + delta sum_{n != j} sin(nx)`` with zero velocity::

    {
      "N": 12, "T": 16,
      "nonlinearity": {"kind": "cubic"},
      "initial": {"pattern": {"j": 2, "amplitude": 6.2, "residual": 0.01}}
    }

Forcing frequencies may be given as arithmetic expressions such as
``"8*sqrt(19)/(4+sqrt(19))"``; the text is kept for serialization and
evaluated once at parse time.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
import operator
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_ATOL, DEFAULT_DT_SAMPLE, DEFAULT_RTOL, ModalForcing, ModalState
from .errors import ConfigError
from .spectral import NonlinearitySpec, check_truncation
from .stability import PrevailingConfig

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log}
_CONSTS = {"pi": math.pi, "e": math.e}


def evaluate_expression(text):
    """Evaluate a numeric literal or arithmetic expression over sqrt/sin/cos/exp/log, pi, e."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    if not isinstance(text, str):
        raise ConfigError(f"expected a number or expression string, got {text!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"unsupported element in expression {text!r}")

    try:
        value = ev(ast.parse(text, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ConfigError(f"cannot evaluate {text!r}: {exc}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"expression {text!r} is not finite")
    return value


def _positive(name, value):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return v


def _index(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _only(section, data, allowed):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


@dataclass(frozen=True)
class ForcingConfig:
    j: int
    alpha: float
    gamma: float | str

    def resolve(self):
        return ModalForcing(self.j, self.alpha, evaluate_expression(self.gamma))

    def to_dict(self):
        return {"j": self.j, "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class PatternInitial:
    j: int
    amplitude: float
    residual: float

    def arrays(self, N):
        if self.j > N:
            raise ConfigError(f"pattern mode {self.j} exceeds N={N}")
        a = np.full(N, float(self.residual))
        a[self.j - 1] = self.amplitude
        return a, np.zeros(N)

    def to_dict(self):
        return {"pattern": {"j": self.j, "amplitude": self.amplitude, "residual": self.residual}}


@dataclass(frozen=True)
class ExplicitInitial:
    phi: tuple
    phidot: tuple

    def arrays(self, N):
        if len(self.phi) != N or len(self.phidot) != N:
            raise ConfigError(f"explicit initial data must have length N={N}")
        return np.array(self.phi, dtype=float), np.array(self.phidot, dtype=float)

    def to_dict(self):
        return {"phi": list(self.phi), "phidot": list(self.phidot)}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment; see the module docstring for the JSON layout."""

    N: int
    T: float
    nonlinearity: NonlinearitySpec
    initial: PatternInitial | ExplicitInitial
    forcing: ForcingConfig | None = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    dt_sample: float = DEFAULT_DT_SAMPLE
    eta: float | None = None
    T_W: float = 1.0
    bracket: tuple | None = None
    step: float | None = None
    modes: tuple | None = None
    scan: float | None = None
    out: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def initial_state(self):
        phi, phidot = self.initial.arrays(self.N)
        return ModalState(0.0, phi, phidot)

    def modal_forcing(self):
        return None if self.forcing is None else self.forcing.resolve()

    def detector(self):
        forced = self.forcing is not None
        eta = self.eta if self.eta is not None else (0.999 if forced else 0.1)
        return PrevailingConfig(eta=eta, T_W=self.T_W, T=self.T)

    @property
    def alpha(self):
        return 0.0 if self.forcing is None else self.forcing.alpha

    def to_dict(self):
        d = {
            "N": self.N,
            "T": self.T,
            "nonlinearity": self.nonlinearity.to_dict(),
            "forcing": None if self.forcing is None else self.forcing.to_dict(),
            "initial": self.initial.to_dict(),
            "solver": {"rtol": self.rtol, "atol": self.atol, "dt_sample": self.dt_sample},
            "detector": {"eta": self.eta, "T_W": self.T_W},
        }
        if self.bracket is not None or self.step is not None or self.modes is not None or self.scan is not None:
            d["threshold"] = {
                "bracket": None if self.bracket is None else list(self.bracket),
                "step": self.step,
                "modes": None if self.modes is None else list(self.modes),
            }
            if self.scan is not None:
                d["threshold"]["scan"] = self.scan
        if self.out is not None:
            d["output"] = {"dir": self.out}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    def replace(self, **changes):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        _only("config", data, {"N", "T", "nonlinearity", "forcing", "initial", "solver", "detector", "threshold", "output"})
        for key in ("N", "T", "nonlinearity", "initial"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        N = _index("N", data["N"])
        try:
            check_truncation(N)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
        T = _positive("T", data["T"])

        try:
            f = NonlinearitySpec.from_dict(data["nonlinearity"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad nonlinearity: {exc}") from exc

        forcing = None
        if data.get("forcing") is not None:
            fd = data["forcing"]
            _only("forcing", fd, {"j", "alpha", "gamma"})
            gamma = fd.get("gamma")
            if evaluate_expression(gamma) == 0:
                raise ConfigError("forcing frequency must be nonzero")
            forcing = ForcingConfig(_index("forcing.j", fd.get("j")), _positive("forcing.alpha", fd.get("alpha")), gamma)

        ini = data["initial"]
        if not isinstance(ini, dict):
            raise ConfigError("initial must be an object")
        if "pattern" in ini:
            _only("initial", ini, {"pattern"})
            p = ini["pattern"]
            _only("initial.pattern", p, {"j", "amplitude", "residual"})
            try:
                initial = PatternInitial(_index("pattern.j", p.get("j")), float(p["amplitude"]), float(p.get("residual", 0.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad pattern: {exc}") from exc
        else:
            _only("initial", ini, {"phi", "phidot"})
            try:
                phi = tuple(float(v) for v in ini["phi"])
                phidot = tuple(float(v) for v in ini.get("phidot", [0.0] * len(phi)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad explicit initial data: {exc}") from exc
            initial = ExplicitInitial(phi, phidot)
        initial.arrays(N)
        if not all(math.isfinite(v) for v in np.concatenate(initial.arrays(N))):
            raise ConfigError("initial data must be finite")

        solver = data.get("solver") or {}
        _only("solver", solver, {"rtol", "atol", "dt_sample"})
        det = data.get("detector") or {}
        _only("detector", det, {"eta", "T_W"})
        eta = det.get("eta")
        if eta is not None and not 0 < float(eta) < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {eta!r}")
        T_W = _positive("detector.T_W", det.get("T_W", 1.0))

        thr = data.get("threshold") or {}
        _only("threshold", thr, {"bracket", "step", "modes", "scan"})
        bracket = thr.get("bracket")
        if bracket is not None:
            if len(bracket) != 2:
                raise ConfigError("threshold.bracket must have two entries")
            bracket = tuple(float(v) for v in bracket)
        step = thr.get("step")
        modes = thr.get("modes")
        scan = thr.get("scan")
        out = (data.get("output") or {}).get("dir")

        return cls(
            N=N,
            T=T,
            nonlinearity=f,
            initial=initial,
            forcing=forcing,
            rtol=_positive("solver.rtol", solver.get("rtol", DEFAULT_RTOL)),
            atol=_positive("solver.atol", solver.get("atol", DEFAULT_ATOL)),
            dt_sample=_positive("solver.dt_sample", solver.get("dt_sample", DEFAULT_DT_SAMPLE)),
            eta=None if eta is None else float(eta),
            T_W=T_W,
            bracket=bracket,
            step=None if step is None else _positive("threshold.step", step),
            modes=None if modes is None else tuple(_index("threshold.modes", m) for m in modes),
            scan=None if scan is None else _positive("threshold.scan", scan),
            out=out,
        )

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)
