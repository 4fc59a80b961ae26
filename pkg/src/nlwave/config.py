"""Flat key=value run configuration.

One pair per line, ``#`` starts a comment; every key maps 1:1 to a module
parameter.  The shipped defaults are the reference experiment: gamma = 3,
densities 0.5/0.25, the full production grid (dr = 1/2400, dtheta =
2*pi/3600 over r in [0.01, 1], theta in [0, 270] degrees) and final time 1.
Angles in the config are degrees; they are converted to radians at load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import ConfigurationError

__all__ = ["RunConfig", "parse_config", "DEFAULTS"]

DEFAULTS = {
    # gas / Riemann data
    "gamma": 3.0,
    "rho1": 0.5,
    "rho4": 0.25,
    # grid
    "nr": 2376,
    "ntheta": 5400,
    "rmin": 1e-2,
    "rmax": 1.0,
    "thetamin_deg": 0.0,
    "thetamax_deg": 270.0,
    # solver
    "cfl": 0.9,
    "order": 2,
    "limiter": "mc",
    "transverse": "auto",
    "t_final": 1.0,
    "bc_inner": "extrapolate",
    "bc_outer": "farfield",
    "bc_theta": "farfield",
    # analysis
    "jump_threshold": 0.02,
    "window": 3,
    "angle_step_deg": 5.0,
    "section_angles_deg": "0:90:10",
    # goursat
    "mesh_n": 200,
    "t_cut": 1e-4,
    "mode": "coupled",
    "lambda_stop": 0.05,
    "gamma23_table": "",
    # output
    "outdir": "runs/default",
}

_INT_KEYS = {"nr", "ntheta", "order", "window", "mesh_n"}
_STR_KEYS = {"limiter", "transverse", "mode", "outdir", "bc_inner", "bc_outer",
             "bc_theta", "gamma23_table", "section_angles_deg"}

_RANGES = {
    "gamma": (1.0, math.inf, "open"),
    "rho1": (0.0, math.inf, "open"),
    "rho4": (0.0, math.inf, "open"),
    "nr": (4, 10**7, "closed"),
    "ntheta": (4, 10**7, "closed"),
    "rmin": (0.0, math.inf, "open"),
    "rmax": (0.0, math.inf, "open"),
    "cfl": (0.0, 1.0, "open"),
    "order": (1, 2, "closed"),
    "t_final": (0.0, math.inf, "open"),
    "jump_threshold": (0.0, math.inf, "open"),
    "window": (1, 10**6, "closed"),
    "angle_step_deg": (0.0, 90.0, "open"),
    "mesh_n": (8, 10**6, "closed"),
    "t_cut": (0.0, 1.0, "open"),
    "lambda_stop": (0.0, 10.0, "open"),
}

_CHOICES = {
    "limiter": {"none", "minmod", "mc"},
    "transverse": {"auto", "on", "off"},
    "mode": {"coupled", "prescribed"},
    "bc_inner": {"extrapolate", "farfield"},
    "bc_outer": {"extrapolate", "farfield"},
    "bc_theta": {"extrapolate", "farfield"},
}


@dataclass(frozen=True)
class RunConfig:
    gamma: float
    rho1: float
    rho4: float
    nr: int
    ntheta: int
    rmin: float
    rmax: float
    thetamin_deg: float
    thetamax_deg: float
    cfl: float
    order: int
    limiter: str
    transverse: str
    t_final: float
    bc_inner: str
    bc_outer: str
    bc_theta: str
    jump_threshold: float
    window: int
    angle_step_deg: float
    section_angles_deg: str
    mesh_n: int
    t_cut: float
    mode: str
    lambda_stop: float
    gamma23_table: str
    outdir: str

    @property
    def thetamin(self) -> float:
        return math.radians(self.thetamin_deg)

    @property
    def thetamax(self) -> float:
        return math.radians(self.thetamax_deg)

    def section_angles(self) -> list:
        """Cross-section sweep in degrees from the 'lo:hi:step' spec."""
        lo, hi, step = (float(v) for v in self.section_angles_deg.split(":"))
        out = []
        a = lo
        while a <= hi + 1e-9:
            out.append(a)
            a += step
        return out

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _convert(key: str, raw):
    if key in _STR_KEYS:
        val = str(raw)
        if key in _CHOICES and val not in _CHOICES[key]:
            raise ConfigurationError(
                f"config key '{key}': value {val!r} not in {sorted(_CHOICES[key])}"
            )
        return val
    try:
        if key in _INT_KEYS:
            val = int(str(raw))
        else:
            val = float(str(raw))
    except ValueError as exc:
        raise ConfigurationError(f"config key '{key}': cannot parse {raw!r}") from exc
    if key in _RANGES:
        lo, hi, kind = _RANGES[key]
        ok = lo < val < hi if kind == "open" else lo <= val <= hi
        if not ok:
            b = "()" if kind == "open" else "[]"
            raise ConfigurationError(
                f"config key '{key}': {val} outside {b[0]}{lo}, {hi}{b[1]}"
            )
    return val


def parse_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from an optional file plus key=value overrides.

    A named but missing file is an error unless the physical core
    (gamma, rho1, rho4) is fully supplied by overrides.  Unknown keys are
    rejected.  Cross-field ranges (rmin < rmax, rho4 < rho1, angles) are
    validated here so every downstream module sees admissible values.
    """
    values = dict(DEFAULTS)
    pairs = []
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for ln, line in enumerate(fh, 1):
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    if "=" not in line:
                        raise ConfigurationError(f"{path}:{ln}: expected key=value, got {line!r}")
                    k, v = (s.strip() for s in line.split("=", 1))
                    pairs.append((k, v))
        except FileNotFoundError:
            need = {"gamma", "rho1", "rho4"}
            got = {k for k, _ in (overrides or [])}
            if not need <= got:
                raise ConfigurationError(
                    f"config file {path!r} not found and overrides do not supply "
                    f"{sorted(need - got)}"
                ) from None
    pairs.extend(overrides or [])
    for k, v in pairs:
        if k not in values:
            raise ConfigurationError(f"unknown config key '{k}'")
        values[k] = _convert(k, v)

    cfg = RunConfig(**values)
    if not cfg.rmin < cfg.rmax:
        raise ConfigurationError(f"config key 'rmin': need rmin < rmax, got {cfg.rmin} >= {cfg.rmax}")
    if not cfg.rho4 < cfg.rho1:
        raise ConfigurationError(f"config key 'rho4': need rho4 < rho1, got {cfg.rho4} >= {cfg.rho1}")
    if not cfg.thetamin_deg < cfg.thetamax_deg:
        raise ConfigurationError("config key 'thetamin_deg': need thetamin < thetamax")
    if cfg.mode == "prescribed" and not cfg.gamma23_table:
        raise ConfigurationError("config key 'gamma23_table': required in prescribed mode")
    return cfg
