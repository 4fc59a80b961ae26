"""Characteristic toolkit for the self-similar supersonic region.

Closed forms and ODE machinery in polar self-similar coordinates
(r, theta): the characteristic slope lambda, its Cartesian counterparts,
the bounding characteristics of the fan-interaction region, the exact
rarefaction-region solution, the one-parameter simple-wave family with its
sound-speed inversion, the Riccati transport of the surviving directional
derivative, curvature-based recovery of directional derivatives, and
envelope (characteristic-focusing) detection.

Angles are radians throughout; ``PLUS``/``MINUS`` label the families
dr/dtheta = +lambda and dr/dtheta = -lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, GradientBlowup
from .gas import GasLaw, QuadrantData, sound_speed_sq_p

__all__ = [
    "PLUS",
    "MINUS",
    "PolarPoint",
    "CharCurve",
    "SimpleWaveFoot",
    "CartSlopes",
    "lambda_speed",
    "cart_slopes",
    "gamma12",
    "gamma24",
    "r0_exact",
    "integrate_char",
    "simple_wave_char",
    "recover_c2",
    "riccati_S",
    "hintegral_simple_wave",
    "rs_from_curve",
    "envelope_point",
    "EnvelopeResult",
]

PLUS = "PLUS"
MINUS = "MINUS"

SONIC_TOL = 1e-12


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise DomainError(f"radius must be positive, got {self.r}")

    @property
    def xy(self) -> tuple:
        return (self.r * math.cos(self.theta), self.r * math.sin(self.theta))


@dataclass
class CharCurve:
    """Sampled characteristic curve: columns theta, r, p with theta monotone.

    ``sonic_stop`` marks termination by sonic proximity, ``truncated`` by
    step underflow before the requested stop condition was met.
    """

    family: str
    theta: np.ndarray
    r: np.ndarray
    p: np.ndarray
    sonic_stop: bool = False
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class SimpleWaveFoot:
    """Foot point of a straight plus characteristic on the lower boundary.

    s0 is the slope factor sqrt((r0^2 - c^2(p0)) / c^2(p0)); it is stored so
    downstream formulas never re-root the same quantity inconsistently.
    """

    theta0: float
    r0: float
    p0: float
    s0: float = field(default=None)  # type: ignore[assignment]
    gas: GasLaw = field(default=None, compare=False)  # type: ignore[assignment]

    @staticmethod
    def from_state(gl: GasLaw, theta0: float, r0: float, p0: float) -> "SimpleWaveFoot":
        c2 = sound_speed_sq_p(gl, p0)
        if r0 * r0 < c2 - SONIC_TOL:
            raise DomainError(f"foot is subsonic: r0^2={r0*r0} < c^2={c2}")
        s0 = math.sqrt(max(r0 * r0 - c2, 0.0) / c2)
        return SimpleWaveFoot(theta0=theta0, r0=r0, p0=p0, s0=s0, gas=gl)


def lambda_speed(gl: GasLaw, r: float, p: float) -> float:
    """Characteristic slope magnitude r*sqrt((r^2 - c^2)/c^2); 0 on the sonic locus."""
    c2 = sound_speed_sq_p(gl, p)
    u = r * r - c2
    if u < -SONIC_TOL:
        raise DomainError(f"subsonic point: r^2={r*r} < c^2={c2}")
    return r * math.sqrt(max(u, 0.0) / c2)


@dataclass(frozen=True)
class CartSlopes:
    """Cartesian characteristic slopes d(eta)/d(xi); inf marks a vertical tangent."""

    lam_minus: float
    lam_plus: float

    @property
    def vertical_minus(self) -> bool:
        return math.isinf(self.lam_minus)

    @property
    def vertical_plus(self) -> bool:
        return math.isinf(self.lam_plus)


def cart_slopes(gl: GasLaw, xi: float, eta: float, p: float) -> CartSlopes:
    """Slopes (xi*eta +- sqrt(c^2(xi^2+eta^2-c^2))) / (xi^2 - c^2).

    On the sonic circle both collapse to -xi/eta.  When xi^2 = c^2 one root
    is vertical; it is returned as +-inf rather than raising.
    """
    c2 = sound_speed_sq_p(gl, p)
    r2 = xi * xi + eta * eta
    disc = c2 * (r2 - c2)
    if disc < -SONIC_TOL * max(c2, 1.0):
        raise DomainError(f"subsonic point: r^2={r2} < c^2={c2}")
    root = math.sqrt(max(disc, 0.0))
    den = xi * xi - c2
    num_m = xi * eta - root
    num_p = xi * eta + root
    if den == 0.0:
        # one finite root by l'Hopital: Lambda solves the quadratic
        # (c^2 - xi^2) L^2 + 2 xi eta L + c^2 - eta^2 = 0 with leading
        # coefficient zero -> L = (eta^2 - c^2)/(2 xi eta) for the
        # non-vertical branch.
        finite = (eta * eta - c2) / (2.0 * xi * eta) if xi * eta != 0.0 else 0.0
        if num_m == 0.0:
            return CartSlopes(lam_minus=finite, lam_plus=math.inf)
        return CartSlopes(lam_minus=-math.inf, lam_plus=finite)
    return CartSlopes(lam_minus=num_m / den, lam_plus=num_p / den)


def gamma12(qd: QuadrantData, theta: float) -> float:
    """Bounding plus characteristic of the fan region: r = c1 * sin(theta)."""
    theta2 = qd.xi2[1]
    if not (theta2 - 1e-12 <= theta <= 0.5 * math.pi + 1e-12):
        raise DomainError(f"theta={theta} outside [{theta2}, pi/2]")
    return qd.c1 * math.sin(theta)


def gamma24_phase(qd: QuadrantData) -> float:
    """Phase shift arcsec(sqrt(c1/c4)) - arcsin(sqrt(c4/c1)); zero iff c1 = 2*c4."""
    return math.acos(math.sqrt(qd.c4 / qd.c1)) - math.asin(math.sqrt(qd.c4 / qd.c1))


def gamma24(qd: QuadrantData, theta: float) -> float:
    """Plus characteristic from the corner point into the constant state.

    r = c4 * sec(theta + phase) with the data-dependent phase shift; the
    curve starts at the corner radius sqrt(c1*c4) at theta = theta2.
    """
    arg = theta + gamma24_phase(qd)
    c = math.cos(arg)
    if c <= 1e-12:
        raise DomainError(f"secant pole: cos({arg}) = {c}")
    return qd.c4 / c


def r0_exact(gl: GasLaw, qd: QuadrantData, point: PolarPoint) -> tuple:
    """Exact (p, R, S) in the unperturbed fan region.

    p = gamma^(-1/kappa) (r sin theta)^(2/kappa),
    R = (4/(kappa gamma^(1/kappa))) cos(theta) (sin theta)^(2/kappa - 1) r^(2/kappa),
    S = 0.
    """
    eta = point.r * math.sin(point.theta)
    if not (qd.c4 - 1e-12 <= eta <= qd.c1 + 1e-12):
        raise DomainError(f"eta={eta} outside the fan band [{qd.c4}, {qd.c1}]")
    k = gl.kappa
    g_pow = gl.gamma ** (1.0 / k)
    p = (eta * eta) ** (1.0 / k) / g_pow
    if point.r * point.r < sound_speed_sq_p(gl, p) - 1e-10:
        raise DomainError("point is below the local sonic radius")
    st = math.sin(point.theta)
    R = 4.0 / (k * g_pow) * math.cos(point.theta) * st ** (2.0 / k - 1.0) * point.r ** (2.0 / k)
    return p, R, 0.0


def integrate_char(
    gl: GasLaw,
    p_eval,
    start: PolarPoint,
    family: str,
    theta_stop: float,
    t_cut: float = 1e-6,
    max_step: float = 1e-3,
    stop_predicate=None,
) -> CharCurve:
    """Trace dr/dtheta = +-lambda(r, p_eval(r, theta)) with classical RK4.

    Integration runs from start.theta toward theta_stop (either direction).
    Steps are halved near the sonic locus, where the slope loses Lipschitz
    continuity; the trace stops when t = sqrt(r^2 - c^2) < t_cut (flagged),
    when theta_stop is reached, when ``stop_predicate(r, theta)`` returns
    True, or when the step underflows (flagged truncated).
    """
    sign = 1.0 if family == PLUS else -1.0
    if family not in (PLUS, MINUS):
        raise DomainError(f"unknown family {family!r}")

    def slope(r, th):
        p = p_eval(r, th)
        c2 = sound_speed_sq_p(gl, p)
        u = r * r - c2
        if u < 0.0:
            return None, p
        return sign * r * math.sqrt(u / c2), p

    def tval(r, th):
        p = p_eval(r, th)
        return math.sqrt(max(r * r - sound_speed_sq_p(gl, p), 0.0)), p

    thetas = [start.theta]
    rs = [start.r]
    t0, p0 = tval(start.r, start.theta)
    ps = [p0]
    if t0 < t_cut:
        return CharCurve(family, np.array(thetas), np.array(rs), np.array(ps), sonic_stop=True)

    direction = 1.0 if theta_stop >= start.theta else -1.0
    th, r = start.theta, start.r
    h = direction * max_step
    sonic = False
    truncated = False
    while direction * (theta_stop - th) > 1e-15:
        if abs(h) > abs(theta_stop - th):
            h = theta_stop - th
        k1, _ = slope(r, th)
        if k1 is None:
            sonic = True
            break
        k2, _ = slope(r + 0.5 * h * k1, th + 0.5 * h)
        k3, _ = slope(r + 0.5 * h * k2, th + 0.5 * h) if k2 is not None else (None, None)
        k4, _ = slope(r + h * k3, th + h) if k3 is not None else (None, None)
        if k2 is None or k3 is None or k4 is None:
            # a stage left the supersonic region: halve and retry
            h *= 0.5
            if abs(h) < 1e-14:
                truncated = True
                break
            continue
        r_new = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        th_new = th + h
        t_new, p_new = tval(r_new, th_new)
        if t_new < t_cut and abs(h) > 1e-12:
            # about to cross the sonic locus: shrink onto it instead
            h *= 0.5
            continue
        th, r = th_new, r_new
        thetas.append(th)
        rs.append(r)
        ps.append(p_new)
        if t_new < t_cut:
            sonic = True
            break
        if stop_predicate is not None and stop_predicate(r, th):
            break
        cap = max_step if t_new >= 10.0 * t_cut else 0.125 * max_step
        h = direction * min(cap, abs(h) * 2.0)
    return CharCurve(
        family,
        np.array(thetas),
        np.array(rs),
        np.array(ps),
        sonic_stop=sonic,
        truncated=truncated,
    )


def simple_wave_char(foot: SimpleWaveFoot, theta) -> float:
    """Radius of the straight plus characteristic through the foot.

    r(theta) = r0 / ((sin t0 - cos t0 * s0) sin t + (sin t0 * s0 + cos t0) cos t);
    with a sonic foot (s0 = 0) this is the tangent line r0 / cos(t - t0).
    """
    st0, ct0 = math.sin(foot.theta0), math.cos(foot.theta0)
    a = st0 - ct0 * foot.s0
    b = st0 * foot.s0 + ct0
    den = a * np.sin(theta) + b * np.cos(theta)
    if np.any(np.asarray(den) <= 0.0):
        raise DomainError("characteristic asymptote crossed: denominator <= 0")
    return foot.r0 / den


def recover_c2(foot_xy: tuple, point_xy: tuple) -> float:
    """Sound speed squared from a chord of a straight characteristic.

    c^2 = (eta*xi0 - xi*eta0)^2 / ((eta-eta0)^2 + (xi-xi0)^2): the squared
    distance from the origin to the line through the two points.
    """
    xi0, eta0 = foot_xy
    xi, eta = point_xy
    d2 = (eta - eta0) ** 2 + (xi - xi0) ** 2
    if d2 == 0.0:
        raise DomainError("foot and point coincide")
    return (eta * xi0 - xi * eta0) ** 2 / d2


def riccati_S(S0: float, h_integral: float) -> float:
    """Closed-form Riccati transport S = S0 / (S0 * H + 1) along a plus line.

    A vanishing (or negative) denominator is the gradient catastrophe:
    characteristics have focused and a shock has formed upstream.
    """
    den = S0 * h_integral + 1.0
    if den <= 0.0:
        raise GradientBlowup(
            f"Riccati denominator {den} <= 0: gradient blow-up (envelope reached)"
        )
    return S0 / den


def hfrak(gl: GasLaw, r: float, p: float) -> float:
    """Interaction coefficient r^2 (c^2)' / (4 c^2 (r^2 - c^2))."""
    c2 = sound_speed_sq_p(gl, p)
    dc2 = (gl.gamma - 1.0) * p ** (gl.kappa - 1.0)
    u = r * r - c2
    if u <= 0.0:
        raise DomainError(f"hfrak undefined at or below the sonic locus (u={u})")
    return r * r * dc2 / (4.0 * c2 * u)


def hintegral_simple_wave(foot: SimpleWaveFoot, theta: float, n: int = 2000) -> float:
    """Path integral of the interaction coefficient along the foot's characteristic.

    Pressure is constant along the line, so only r(theta) varies; composite
    Simpson quadrature on n intervals.
    """
    if n % 2:
        n += 1
    th = np.linspace(foot.theta0, theta, n + 1)
    r = simple_wave_char(foot, th)
    gl = foot.gas
    c2 = sound_speed_sq_p(gl, foot.p0)
    dc2 = (gl.gamma - 1.0) * foot.p0 ** (gl.kappa - 1.0)
    u = r * r - c2
    if np.any(u <= 0.0):
        raise DomainError("characteristic touched the sonic locus inside the integral")
    f = r * r * dc2 / (4.0 * c2 * u)
    h = (theta - foot.theta0) / n
    return float(h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum()))


def rs_from_curve(gl: GasLaw, r, dr, ddr, family: str):
    """Directional derivative of p from the curvature of a traced characteristic.

    Inputs are samples of r(theta) with first and second derivatives along
    one family.  Pressure comes from c^2 = r^4/(r'^2 + r^2); the plus family
    yields R, the minus family S.
    """
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    ddr = np.asarray(ddr, dtype=float)
    denom = dr * dr + r * r
    if np.any(denom <= 0.0):
        raise DomainError("degenerate curvature data: r'^2 + r^2 <= 0")
    c2 = r**4 / denom
    p = (c2 / gl.gamma) ** (1.0 / gl.kappa)
    if np.any(p <= 0.0):
        raise DomainError("recovered pressure non-positive")
    gk = gl.gamma * gl.kappa
    if family == PLUS:
        out = 2.0 * r**3 * dr * p ** (1.0 / gl.gamma) / gk * (r * r + 2.0 * dr * dr - r * ddr) / denom**2
    elif family == MINUS:
        out = 2.0 * r**3 * (-dr) * p ** (1.0 / gl.gamma) / gk * (r * ddr - r * r - 2.0 * dr * dr) / denom**2
    else:
        raise DomainError(f"unknown family {family!r}")
    return out if out.ndim else float(out)


@dataclass
class EnvelopeResult:
    """Pairwise-intersection envelope estimate.

    ``points`` holds one (theta, r) per adjacent foot pair (nan rows where
    the pair does not intersect); ``xi4`` is the smallest-theta intersection
    or None when the family never focuses.
    """

    points: np.ndarray
    xi4: tuple | None

    @property
    def found(self) -> bool:
        return self.xi4 is not None


def _pair_intersection(f0: SimpleWaveFoot, f1: SimpleWaveFoot):
    """First crossing of two adjacent characteristics below their feet."""
    th_hi = min(f0.theta0, f1.theta0) - 1e-12

    def diff(th):
        return simple_wave_char(f0, th) - simple_wave_char(f1, th)

    # walk downward in theta until the sign flips or a curve blows up
    step = 1e-3
    th_a = th_hi
    try:
        d_a = diff(th_a)
    except DomainError:
        return None
    th = th_a
    for _ in range(20000):
        th_next = th - step
        try:
            d = diff(th_next)
        except DomainError:
            return None
        if d == 0.0:
            return th_next, simple_wave_char(f0, th_next)
        if d * d_a < 0.0:
            th_root = brentq(diff, th_next, th_a, xtol=1e-14)
            return th_root, float(simple_wave_char(f0, th_root))
        th_a, d_a = th_next, d
        th = th_next
        step = min(step * 1.2, 2e-2)
    return None


def envelope_point(feet: list) -> EnvelopeResult:
    """Envelope of the one-parameter characteristic family by pairwise crossings.

    Adjacent curves of a focusing family intersect; the locus of those
    intersections converges to the envelope as the foot spacing shrinks.
    A family with identical pressure at every foot is parallel and never
    focuses: that is reported as a no-envelope result, not an error.
    """
    if len(feet) < 3:
        raise DomainError("need at least 3 feet ordered along the boundary")
    pts = np.full((len(feet) - 1, 2), np.nan)
    for k in range(len(feet) - 1):
        hit = _pair_intersection(feet[k], feet[k + 1])
        if hit is not None:
            pts[k] = hit
    if np.all(np.isnan(pts[:, 0])):
        return EnvelopeResult(points=pts, xi4=None)
    kmin = np.nanargmin(pts[:, 0])
    return EnvelopeResult(points=pts, xi4=(float(pts[kmin, 0]), float(pts[kmin, 1])))
