"""Self-similar post-processing of finite-volume fields.

Transforms a time-t snapshot to (xi, eta) = (x/t, y/t), extracts radial
cross-sections, classifies each angle as shock or smooth-sonic crossing,
brackets the transition angle, and evaluates the residual of the
second-order self-similar pressure equation as a smoothness diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, DomainError
from .gas import GasLaw
from .solver import FVField

__all__ = [
    "SelfSimField",
    "CrossSection",
    "SonicShockReport",
    "SHOCK",
    "SMOOTH_SONIC",
    "UNCLASSIFIED",
    "to_selfsimilar",
    "radial_cross_section",
    "classify_angle",
    "estimate_theta3",
    "pnd_residual",
]

SHOCK = "SHOCK"
SMOOTH_SONIC = "SMOOTH_SONIC"
UNCLASSIFIED = "UNCLASSIFIED"


@dataclass
class SelfSimField:
    """Field sampled on the polar grid in self-similar coordinates.

    r = sqrt(xi^2 + eta^2) per cell; u = r^2 - c^2(p) is the sonic
    indicator (positive supersonic, zero on the sonic locus).
    """

    gas: GasLaw
    r: np.ndarray          # (nr,) self-similar radii of cell centers
    theta: np.ndarray      # (ntheta,)
    xi: np.ndarray         # (ntheta, nr)
    eta: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    c2: np.ndarray
    u: np.ndarray
    time: float
    dr: float
    dtheta: float


@dataclass
class CrossSection:
    theta: float
    r: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    u: np.ndarray


@dataclass
class SonicShockReport:
    theta_deg: np.ndarray
    classes: list
    transition_r: np.ndarray
    theta3_interval: tuple = None


def to_selfsimilar(gl: GasLaw, field: FVField) -> SelfSimField:
    """Map a snapshot at field.time to (xi, eta) = (x/t, y/t)."""
    if field.time <= 0.0:
        raise DomainError("self-similar transform needs time > 0")
    g = field.grid
    t = field.time
    x, y = g.cell_centers_xy()
    xi = x / t
    eta = y / t
    rho = field.q[:, :, 0]
    p = rho**gl.gamma
    c2 = gl.gamma * p**gl.kappa
    r = g.r_centers / t
    u = r[None, :] ** 2 - c2
    return SelfSimField(
        gas=gl,
        r=r,
        theta=g.theta_centers.copy(),
        xi=xi,
        eta=eta,
        rho=rho,
        p=p,
        c2=c2,
        u=u,
        time=t,
        dr=g.dr / t,
        dtheta=g.dtheta,
    )


def radial_cross_section(field: SelfSimField, theta: float) -> CrossSection:
    """Nearest-angle row of the field, radius ascending."""
    if not (field.theta[0] - 0.5 * field.dtheta <= theta <= field.theta[-1] + 0.5 * field.dtheta):
        raise DomainError(f"theta={theta} outside the grid's angular range")
    j = int(np.argmin(np.abs(field.theta - theta)))
    return CrossSection(
        theta=float(field.theta[j]),
        r=field.r.copy(),
        rho=field.rho[j].copy(),
        p=field.p[j].copy(),
        u=field.u[j].copy(),
    )


def classify_angle(cs: CrossSection, jump_threshold: float = 0.02, window: int = 3):
    """Shock-vs-sonic classification of one cross-section.

    SHOCK when some window of consecutive cells carries a density change
    exceeding the threshold; otherwise SMOOTH_SONIC when the sonic
    indicator changes sign with sub-threshold per-window density change
    there.  Returns (classification, transition_radius).
    """
    n = len(cs.r)
    if n < 2 * window:
        return UNCLASSIFIED, math.nan
    rho = cs.rho
    diffs = np.abs(rho[window:] - rho[:-window])
    kmax = int(np.argmax(diffs))
    if diffs[kmax] > jump_threshold:
        return SHOCK, float(0.5 * (cs.r[kmax] + cs.r[kmax + window]))
    sign = np.sign(cs.u)
    crossings = np.nonzero(np.diff(sign) != 0.0)[0]
    if len(crossings) == 0:
        return UNCLASSIFIED, math.nan
    # take the outermost crossing from negative to positive
    for k in crossings[::-1]:
        if cs.u[k] < cs.u[k + 1]:
            u0, u1 = cs.u[k], cs.u[k + 1]
            frac = -u0 / (u1 - u0)
            return SMOOTH_SONIC, float(cs.r[k] + frac * (cs.r[k + 1] - cs.r[k]))
    return UNCLASSIFIED, math.nan


def scan_angles(field: SelfSimField, angles_deg, jump_threshold=0.02, window=3) -> SonicShockReport:
    """classify_angle over a sweep of angles (degrees)."""
    classes = []
    radii = np.full(len(angles_deg), math.nan)
    for k, a in enumerate(angles_deg):
        cs = radial_cross_section(field, math.radians(a))
        cl, rt = classify_angle(cs, jump_threshold=jump_threshold, window=window)
        classes.append(cl)
        radii[k] = rt
    return SonicShockReport(
        theta_deg=np.asarray(angles_deg, dtype=float),
        classes=classes,
        transition_r=radii,
    )


def estimate_theta3(report: SonicShockReport) -> tuple:
    """Bracket of the shock-to-sonic transition angle, in degrees.

    Scanning upward in angle: (last SHOCK angle, first SMOOTH_SONIC angle
    above it).  Raises when the scan shows no transition.
    """
    shock_idx = [k for k, c in enumerate(report.classes) if c == SHOCK]
    if not shock_idx:
        raise AnalysisError("no shock classification in the scanned range")
    lo_idx = shock_idx[-1]
    for k in range(lo_idx + 1, len(report.classes)):
        if report.classes[k] == SMOOTH_SONIC:
            interval = (float(report.theta_deg[lo_idx]), float(report.theta_deg[k]))
            report.theta3_interval = interval
            return interval
    raise AnalysisError("no smooth-sonic classification above the last shock angle")


def pnd_residual(field: SelfSimField, mask: np.ndarray = None) -> tuple:
    """Residual of the self-similar pressure equation on interior smooth cells.

    r^2 (1 - r^2/c^2) p_rr + p_tt + r (1 - 2 r^2/c^2) p_r
        + kappa (r^2/c^2)(r^2/p) p_r^2

    evaluated with second-order central differences on the uniform
    computational grid; returns (L1, Linf) over the mask.  Cells within
    3 of any boundary are excluded regardless of the mask; no one-sided
    stencils are used.
    """
    p = field.p
    r = field.r
    dr, dth = field.dr, field.dtheta
    nth, nr = p.shape
    interior = np.zeros_like(p, dtype=bool)
    interior[3:-3, 3:-3] = True
    if mask is None:
        mask = interior
    else:
        if mask.shape != p.shape:
            raise DomainError("mask shape does not match the field")
        mask = mask & interior
    if not np.any(mask):
        raise DomainError("empty evaluation mask")
    p_r = np.zeros_like(p)
    p_rr = np.zeros_like(p)
    p_tt = np.zeros_like(p)
    p_r[:, 1:-1] = (p[:, 2:] - p[:, :-2]) / (2.0 * dr)
    p_rr[:, 1:-1] = (p[:, 2:] - 2.0 * p[:, 1:-1] + p[:, :-2]) / dr**2
    p_tt[1:-1, :] = (p[2:, :] - 2.0 * p[1:-1, :] + p[:-2, :]) / dth**2
    r2 = r[None, :] ** 2
    ratio = r2 / field.c2
    res = (
        r2 * (1.0 - ratio) * p_rr
        + p_tt
        + r[None, :] * (1.0 - 2.0 * ratio) * p_r
        + field.gas.kappa * ratio * (r2 / p) * p_r**2
    )
    vals = np.abs(res[mask])
    return float(vals.mean()), float(vals.max())
