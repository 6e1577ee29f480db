"""Run configuration: a flat ``key = value`` file.

One pair per line, ``#`` starts a comment, keys are case-sensitive and
unknown keys are rejected. Recognised keys::

    pointer      ground | coherent | squeezed | coherent_squeezed | thermal | fock_mixture
    alpha_re     real part of the coherent amplitude            (default 0)
    alpha_im     imaginary part of the coherent amplitude       (default 0)
    r            squeezing parameter                            (default 0)
    phi_sq       squeezing angle; pi stretches x                (default 0)
    z            thermal Boltzmann factor, 0 <= z < 1           (default 0)
    weights      Fock-mixture weights, comma separated          (default 1)
    kappa        coupling g / omega_m                           (default 0.05)
    kerr         on | off                                       (default on)
    dim          Fock dimension                                 (default: automatic)
    tau_max      largest tau of a scan or trajectory            (default max(4 pi, 3 / kappa))
    tau_points   number of tau values                           (default 600)
    theta_points number of theta values of a scan               (default 41)
    phi_points   number of phi values of a scan                 (default 81)
    tau          tau for the ``condition`` command              (default pi)
    theta        theta for the ``condition`` command            (default pi/4)
    phi          phi for the ``condition`` command              (default pi)
    seed         reserved; every computation is deterministic   (default 0)
    output       output CSV path                                (default: standard output)
    threads      scan worker threads                            (default $OPTOWEAK_THREADS or 1)
"""

import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .analysis import default_grid, default_tau_max
from .errors import ConfigError
from .pointer_states import (
    CoherentSqueezed,
    Coherent,
    FockMixture,
    Ground,
    Squeezed,
    Thermal,
)

POINTER_NAMES = ("ground", "coherent", "squeezed", "coherent_squeezed", "thermal", "fock_mixture")


@dataclass(frozen=True)
class PointerParams:
    kind: str = "ground"
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    r: float = 0.0
    phi_sq: float = 0.0
    z: float = 0.0
    weights: tuple = (1.0,)


@dataclass(frozen=True)
class RunConfig:
    pointer: object = field(default_factory=Ground)
    kappa: float = 0.05
    kerr: bool = True
    dim: Optional[int] = None
    tau_max: Optional[float] = None
    tau_points: int = 600
    theta_points: int = 41
    phi_points: int = 81
    tau: float = math.pi
    theta: float = math.pi / 4
    phi: float = math.pi
    seed: int = 0
    output: Optional[str] = None
    threads: int = 1

    def scan_grid(self):
        return default_grid(self.kappa, self.tau_points, self.theta_points, self.phi_points, self.tau_max)

    def trajectory_taus(self):
        tau_max = default_tau_max(self.kappa) if self.tau_max is None else self.tau_max
        return [tau_max * i / (self.tau_points - 1) for i in range(self.tau_points)] if self.tau_points > 1 else [0.0]


def _float(raw):
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _positive_int(raw):
    value = int(raw)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _dim(raw):
    value = int(raw)
    if value < 2:
        raise ValueError("must be an integer >= 2")
    return value


def _nonneg_float(raw):
    value = _float(raw)
    if value < 0:
        raise ValueError("must be >= 0")
    return value


def _z(raw):
    value = _float(raw)
    if not 0.0 <= value < 1.0:
        raise ValueError("must satisfy 0 <= z < 1")
    return value


def _kerr(raw):
    v = raw.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError("must be on or off")


def _pointer_kind(raw):
    if raw not in POINTER_NAMES:
        raise ValueError(f"must be one of {', '.join(POINTER_NAMES)}")
    return raw


def _weights(raw):
    values = tuple(_nonneg_float(x) for x in raw.split(",") if x.strip())
    if not values:
        raise ValueError("needs at least one weight")
    if abs(sum(values) - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {sum(values)!r}, not 1")
    return values


def _theta(raw):
    value = _float(raw)
    if not 0.0 <= value <= math.pi / 2:
        raise ValueError("must lie in [0, pi/2]")
    return value


def _seed(raw):
    value = int(raw)
    if value < 0:
        raise ValueError("must be an unsigned integer")
    return value


def _path(raw):
    if not raw:
        raise ValueError("must not be empty")
    return raw


POINTER_KEYS = {
    "pointer": ("kind", _pointer_kind),
    "alpha_re": ("alpha_re", _float),
    "alpha_im": ("alpha_im", _float),
    "r": ("r", _float),
    "phi_sq": ("phi_sq", _float),
    "z": ("z", _z),
    "weights": ("weights", _weights),
}

RUN_KEYS = {
    "kappa": _nonneg_float,
    "kerr": _kerr,
    "dim": _dim,
    "tau_max": _nonneg_float,
    "tau_points": _positive_int,
    "theta_points": _positive_int,
    "phi_points": _positive_int,
    "tau": _float,
    "theta": _theta,
    "phi": _float,
    "seed": _seed,
    "output": _path,
    "threads": _positive_int,
}

KEYS = tuple(POINTER_KEYS) + tuple(RUN_KEYS)


def build_pointer(pp):
    alpha = complex(pp.alpha_re, pp.alpha_im)
    if pp.kind == "ground":
        return Ground()
    if pp.kind == "coherent":
        return Coherent(alpha)
    if pp.kind == "squeezed":
        return Squeezed(pp.r, pp.phi_sq)
    if pp.kind == "coherent_squeezed":
        return CoherentSqueezed(alpha, pp.r, pp.phi_sq)
    if pp.kind == "thermal":
        return Thermal(pp.z)
    return FockMixture(pp.weights)


def pointer_params(spec):
    if isinstance(spec, Ground):
        return PointerParams("ground")
    if isinstance(spec, Coherent):
        return PointerParams("coherent", spec.alpha.real, spec.alpha.imag)
    if isinstance(spec, Squeezed):
        return PointerParams("squeezed", r=spec.r, phi_sq=spec.phi)
    if isinstance(spec, CoherentSqueezed):
        return PointerParams("coherent_squeezed", spec.alpha.real, spec.alpha.imag, spec.r, spec.phi)
    if isinstance(spec, Thermal):
        return PointerParams("thermal", z=spec.z)
    if isinstance(spec, FockMixture):
        return PointerParams("fock_mixture", weights=spec.weights)
    raise TypeError(f"not a pointer spec: {spec!r}")


def parse_pairs(text, source="config"):
    """Yield ``(line_number, key, raw_value)`` from config text."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' in {source}", line=lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"missing key in {source}", line=lineno)
        yield lineno, key, raw


def parse_config(text, overrides=None, env=None):
    """Parse config text into a :class:`RunConfig`.

    ``overrides`` maps keys to raw string values (from command-line flags) and
    wins over the file. ``threads`` falls back to ``$OPTOWEAK_THREADS``.
    Raises :class:`ConfigError` carrying the line number and key.
    """
    env = os.environ if env is None else env
    pp, run = {}, {}

    def apply(lineno, key, raw):
        try:
            if key in POINTER_KEYS:
                name, conv = POINTER_KEYS[key]
                pp[name] = conv(raw)
            elif key in RUN_KEYS:
                run[key] = RUN_KEYS[key](raw)
            else:
                raise ConfigError("unknown key", line=lineno, key=key)
        except ValueError as exc:
            raise ConfigError(f"invalid value {raw!r}: {exc}", line=lineno, key=key) from None

    for lineno, key, raw in parse_pairs(text):
        apply(lineno, key, raw)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            apply(None, key, str(raw))

    if "threads" not in run and env.get("OPTOWEAK_THREADS"):
        try:
            run["threads"] = _positive_int(env["OPTOWEAK_THREADS"])
        except ValueError as exc:
            raise ConfigError(f"invalid OPTOWEAK_THREADS: {exc}") from None

    try:
        pointer = build_pointer(PointerParams(**pp))
    except ValueError as exc:
        raise ConfigError(f"invalid pointer: {exc}", key="pointer") from None
    return RunConfig(pointer=pointer, **run)


def format_config(cfg):
    """Serialise a :class:`RunConfig` so that ``parse_config`` reproduces it exactly."""
    pp = pointer_params(cfg.pointer)
    lines = [f"pointer = {pp.kind}"]
    if pp.kind in ("coherent", "coherent_squeezed"):
        lines += [f"alpha_re = {pp.alpha_re!r}", f"alpha_im = {pp.alpha_im!r}"]
    if pp.kind in ("squeezed", "coherent_squeezed"):
        lines += [f"r = {pp.r!r}", f"phi_sq = {pp.phi_sq!r}"]
    if pp.kind == "thermal":
        lines.append(f"z = {pp.z!r}")
    if pp.kind == "fock_mixture":
        lines.append("weights = " + ", ".join(repr(w) for w in pp.weights))
    for f in dataclasses.fields(RunConfig):
        if f.name == "pointer":
            continue
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            value = "on" if value else "off"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
