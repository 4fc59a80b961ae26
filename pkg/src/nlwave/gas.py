"""Polytropic gas law, conserved states, and four-quadrant Riemann data.

The model is the 3x3 nonlinear wave system (density + two momentum
components) closed by p = rho^gamma with unit gas constant.  Sound speed
obeys c^2(rho) = gamma rho^(gamma-1), equivalently c^2(p) = gamma p^kappa
with kappa = (gamma-1)/gamma.  Everything here is a pure function; the
exact planar fan solutions double as far-field boundary data and as
oracles for the finite-volume solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, StateError

__all__ = [
    "GasLaw",
    "State",
    "QuadrantData",
    "SpeedClass",
    "pressure",
    "sound_speed_sq",
    "sound_speed_sq_p",
    "phi",
    "four_quadrant_states",
    "planar_rarefaction",
    "far_field_state",
]


@dataclass(frozen=True)
class GasLaw:
    """Polytropic closure p = rho^gamma (k = 1), with kappa = (gamma-1)/gamma."""

    gamma: float
    kappa: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigurationError(f"gamma must exceed 1, got {self.gamma}")
        object.__setattr__(self, "kappa", (self.gamma - 1.0) / self.gamma)


@dataclass(frozen=True)
class State:
    """Conserved vector (rho, m, n) = (density, x-momentum, y-momentum)."""

    rho: float
    m: float
    n: float

    def __post_init__(self):
        if not self.rho > 0.0:
            raise StateError(f"density must be positive, got {self.rho}")
        if not (math.isfinite(self.m) and math.isfinite(self.n)):
            raise StateError(f"momenta must be finite, got ({self.m}, {self.n})")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.m, self.n])


class SpeedClass:
    """Relation of 2*c4 to c1 for the given Riemann data."""

    STRICT = "2c4 > c1 (strict)"
    BOUNDARY = "2c4 = c1 (boundary case)"
    VIOLATED = "2c4 < c1"


@dataclass(frozen=True)
class QuadrantData:
    """Four sectorial constant states plus the derived wave-geometry constants.

    xi1 and xi2 are stored as (r, theta) pairs in radians: xi1 is the sonic
    tip of the fan on the positive eta-axis, xi2 the exit of the bounding
    plus characteristic at eta = c4.
    """

    gas: GasLaw
    u1: State
    u2: State
    u3: State
    u4: State
    c1: float
    c4: float
    p1: float
    p4: float
    phi14: float
    xi1: tuple
    xi2: tuple
    speed_class: str


def pressure(gl: GasLaw, rho: float) -> float:
    """Pressure rho^gamma; strictly increasing on rho > 0."""
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    return rho ** gl.gamma


def sound_speed_sq(gl: GasLaw, rho: float) -> float:
    """Squared sound speed gamma * rho^(gamma-1)."""
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    return gl.gamma * rho ** (gl.gamma - 1.0)


def sound_speed_sq_p(gl: GasLaw, p: float) -> float:
    """Squared sound speed gamma * p^kappa, from pressure."""
    if not p > 0.0:
        raise DomainError(f"p must be positive, got {p}")
    return gl.gamma * p ** gl.kappa


def phi(gl: GasLaw, rho_i: float, rho_j: float) -> float:
    """Momentum jump across a fan: integral of c(s) ds from rho_j to rho_i.

    With c(s) = sqrt(gamma) s^((gamma-1)/2) the closed form is
    sqrt(gamma) * (2/(gamma+1)) * (rho_i^((gamma+1)/2) - rho_j^((gamma+1)/2));
    antisymmetric in its arguments.  The sqrt(gamma) factor is forced by
    the unit-constant gas law: without it the four-quadrant data would not
    lie on one rarefaction curve and the planar fan would not be exact.
    """
    if not (rho_i > 0.0 and rho_j > 0.0):
        raise DomainError(f"densities must be positive, got ({rho_i}, {rho_j})")
    e = 0.5 * (gl.gamma + 1.0)
    return math.sqrt(gl.gamma) * (rho_i**e - rho_j**e) / e


def four_quadrant_states(gl: GasLaw, rho1: float, rho4: float) -> QuadrantData:
    """Assemble the four-quadrant Riemann data for densities rho1 > rho4.

    U1 = (rho1, 0, Phi14) fills the first quadrant, U2 = (rho1, 0, 0) the
    second, U3 = (rho1, -Phi14, 0) the third and U4 = (rho4, 0, 0) the
    fourth, so the only nontrivial waves are the two planar fans across the
    positive x-axis and the negative y-axis.
    """
    if not rho4 > 0.0:
        raise ConfigurationError(f"rho4 must be positive, got {rho4}")
    if not rho1 > rho4:
        raise ConfigurationError(f"need rho1 > rho4, got rho1={rho1}, rho4={rho4}")
    phi14 = phi(gl, rho1, rho4)
    c1 = math.sqrt(sound_speed_sq(gl, rho1))
    c4 = math.sqrt(sound_speed_sq(gl, rho4))
    p1 = pressure(gl, rho1)
    p4 = pressure(gl, rho4)
    theta2 = math.asin(math.sqrt(c4 / c1))
    xi1 = (c1, 0.5 * math.pi)
    xi2 = (math.sqrt(c1 * c4), theta2)
    if 2.0 * c4 > c1:
        speed_class = SpeedClass.STRICT
    elif 2.0 * c4 == c1:
        speed_class = SpeedClass.BOUNDARY
        warnings.warn(
            "2*c4 equals c1 exactly: boundary case of the supersonic condition",
            stacklevel=2,
        )
    else:
        speed_class = SpeedClass.VIOLATED
        warnings.warn(
            "2*c4 < c1: outside the supersonic-existence condition",
            stacklevel=2,
        )
    return QuadrantData(
        gas=gl,
        u1=State(rho1, 0.0, phi14),
        u2=State(rho1, 0.0, 0.0),
        u3=State(rho1, -phi14, 0.0),
        u4=State(rho4, 0.0, 0.0),
        c1=c1,
        c4=c4,
        p1=p1,
        p4=p4,
        phi14=phi14,
        xi1=xi1,
        xi2=xi2,
        speed_class=speed_class,
    )


def _fan_density(gl: GasLaw, s: float) -> float:
    # invert c(rho) = s:  rho = (s^2/gamma)^(1/(gamma-1))
    return (s * s / gl.gamma) ** (1.0 / (gl.gamma - 1.0))


def planar_rarefaction(gl: GasLaw, qd: QuadrantData, which: str, s: float) -> State:
    """Exact one-dimensional fan solution at similarity coordinate s.

    ``which`` is "R14" (fan in y, similarity coordinate s = y/t) or "R34"
    (mirror image under the x = -y reflection, s = x/t).  Inside the R14 fan
    the density solves c(rho) = s and the y-momentum is the Riemann
    invariant value phi(rho, rho4); outside, the adjacent constants apply.
    """
    if which == "R14":
        if s >= qd.c1:
            return qd.u1
        if s <= qd.c4:
            return qd.u4
        rho = _fan_density(gl, s)
        return State(rho, 0.0, phi(gl, rho, qd.u4.rho))
    if which == "R34":
        # mirror of R14 at -s: (rho, m, n) -> (rho, -n, -m)
        if -s >= qd.c1:
            return qd.u3
        if -s <= qd.c4:
            return qd.u4
        rho = _fan_density(gl, -s)
        return State(rho, -phi(gl, rho, qd.u4.rho), 0.0)
    raise DomainError(f"unknown wave {which!r}, expected 'R14' or 'R34'")


def far_field_arrays(gl: GasLaw, qd: QuadrantData, x, y, t: float):
    """Vectorized far-field composition; returns (rho, m, n) arrays.

    Same piecewise rule as far_field_state, evaluated on coordinate arrays
    (used for ghost-cell fills every step).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.empty_like(x)
    m = np.zeros_like(x)
    n = np.zeros_like(x)
    if t <= 0.0:
        east = x >= 0.0
        north = y > 0.0
        rho[:] = np.where(east, np.where(north, qd.u1.rho, qd.u4.rho),
                          qd.u2.rho)
        rho[~east & ~north] = qd.u3.rho
        n[east & north] = qd.u1.n
        m[~east & ~north] = qd.u3.m
        return rho, m, n

    e = 0.5 * (gl.gamma + 1.0)
    rho4e = qd.u4.rho**e
    sg = math.sqrt(gl.gamma)

    def fan_piece(s):
        r_out = np.empty_like(s)
        mom = np.zeros_like(s)
        hi = s >= qd.c1
        lo = s <= qd.c4
        mid = ~(hi | lo)
        r_out[hi] = qd.u1.rho
        r_out[lo] = qd.u4.rho
        sm = s[mid]
        rm = (sm * sm / gl.gamma) ** (1.0 / (gl.gamma - 1.0))
        r_out[mid] = rm
        mom[hi] = qd.phi14
        mom[mid] = sg * (rm**e - rho4e) / e
        return r_out, mom

    east = x >= 0.0
    north = y > 0.0
    if np.any(east):
        r14, mom14 = fan_piece(y[east] / t)
        rho[east] = r14
        n[east] = mom14
    w2 = ~east & north
    rho[w2] = qd.u2.rho
    w3 = ~east & ~north
    if np.any(w3):
        r34, mom34 = fan_piece(-(x[w3] / t))
        rho[w3] = r34
        m[w3] = -mom34
    return rho, m, n


def far_field_state(gl: GasLaw, qd: QuadrantData, x: float, y: float, t: float) -> State:
    """Exact solution outside the corner-interaction disk (valid for r > c1*t).

    Composition of the two planar fans and the stationary contacts: the R14
    profile governs x >= 0, the quadrant-2 constant governs x < 0, y > 0,
    and the R34 profile governs x < 0, y <= 0.  At t = 0 this reduces to
    the quadrant constants.
    """
    if t <= 0.0:
        if x >= 0.0:
            return qd.u1 if y > 0.0 else qd.u4
        return qd.u2 if y > 0.0 else qd.u3
    if x >= 0.0:
        return planar_rarefaction(gl, qd, "R14", y / t)
    if y > 0.0:
        return qd.u2
    return planar_rarefaction(gl, qd, "R34", x / t)
