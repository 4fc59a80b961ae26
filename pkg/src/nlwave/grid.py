"""Mapped polar finite-volume grid with cell capacities.

The computational grid is uniform in (r, theta); the physical cells are
the straight-edged quadrilaterals spanned by the mapped corners.  Cell
"capacity" is quadrilateral area divided by dr*dtheta, which is the area
scaling the fluctuation updates need on a mapped grid.

Because the quadrilateral geometry only depends on theta through the cell
angle, all per-cell quantities reduce to 1D arrays: volumes and capacities
depend on the radial index alone, face normals on the angular index alone.

The trigonometric tables are built mirror-exact about the mid-angle so a
symmetric initial state stays bit-symmetric under the x = -y reflection
(grid symmetric when thetamin + thetamax = 3*pi/2, the four-quadrant
configuration's symmetry line).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

NG = 2  # ghost layers per edge

__all__ = ["PolarGrid", "build_grid", "NG"]


@dataclass
class PolarGrid:
    nr: int
    ntheta: int
    rmin: float
    rmax: float
    thetamin: float
    thetamax: float
    dr: float = field(init=False)
    dtheta: float = field(init=False)
    # padded 1D geometry (NG ghosts each side); "e" = edges, "c" = centers
    r_edge: np.ndarray = field(init=False, repr=False)
    rbar: np.ndarray = field(init=False, repr=False)
    theta_edge: np.ndarray = field(init=False, repr=False)
    theta_center: np.ndarray = field(init=False, repr=False)
    cos_c: np.ndarray = field(init=False, repr=False)
    sin_c: np.ndarray = field(init=False, repr=False)
    cos_e: np.ndarray = field(init=False, repr=False)
    sin_e: np.ndarray = field(init=False, repr=False)
    vol: np.ndarray = field(init=False, repr=False)
    chord: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nr < 4 or self.ntheta < 4:
            raise ConfigurationError("need at least 4 cells in each direction")
        if not (0.0 < self.rmin < self.rmax):
            raise ConfigurationError(
                f"need 0 < rmin < rmax, got ({self.rmin}, {self.rmax})"
            )
        if not self.thetamax > self.thetamin:
            raise ConfigurationError("need thetamax > thetamin")
        self.dr = (self.rmax - self.rmin) / self.nr
        self.dtheta = (self.thetamax - self.thetamin) / self.ntheta

        ie = np.arange(self.nr + 2 * NG + 1)
        self.r_edge = self.rmin + (ie - NG) * self.dr
        # ghost edges may cross r = 0 on coarse grids; clamp for the
        # length/volume tables (ghost cells are never updated, their
        # face lengths are never used in fluxes)
        self.r_edge = np.maximum(self.r_edge, 1e-12)
        self.rbar = 0.5 * (self.r_edge[:-1] + self.r_edge[1:])

        je = np.arange(self.ntheta + 2 * NG + 1)
        self.theta_edge = self.thetamin + (je - NG) * self.dtheta
        self.theta_center = 0.5 * (self.theta_edge[:-1] + self.theta_edge[1:])

        self.cos_e = np.cos(self.theta_edge)
        self.sin_e = np.sin(self.theta_edge)
        self.cos_c = np.cos(self.theta_center)
        self.sin_c = np.sin(self.theta_center)
        self._mirror_trig()

        sdt = math.sin(self.dtheta)
        self.vol = 0.5 * (self.r_edge[1:] ** 2 - self.r_edge[:-1] ** 2) * sdt
        # chord length of a constant-r face spanning one angular cell
        self.chord = self.r_edge * (2.0 * math.sin(0.5 * self.dtheta))

    def _mirror_trig(self):
        """Make the trig tables bit-exact under theta -> (tmin+tmax) - theta.

        Only applied for the four-quadrant symmetry line x = -y, i.e. when
        thetamin + thetamax = 3*pi/2, where the reflection maps cos -> -sin.
        """
        if abs((self.thetamin + self.thetamax) - 1.5 * math.pi) > 1e-13:
            return
        ne = len(self.theta_edge)
        for j in range(ne // 2):
            jm = ne - 1 - j
            self.cos_e[jm] = -self.sin_e[j]
            self.sin_e[jm] = -self.cos_e[j]
        if ne % 2 == 1:
            mid = ne // 2
            self.sin_e[mid] = -self.cos_e[mid]
        nc = len(self.theta_center)
        for j in range(nc // 2):
            jm = nc - 1 - j
            self.cos_c[jm] = -self.sin_c[j]
            self.sin_c[jm] = -self.cos_c[j]
        if nc % 2 == 1:
            mid = nc // 2
            self.sin_c[mid] = -self.cos_c[mid]

    # interior views (no ghosts) ------------------------------------------------

    @property
    def r_centers(self) -> np.ndarray:
        return self.rbar[NG : NG + self.nr]

    @property
    def theta_centers(self) -> np.ndarray:
        return self.theta_center[NG : NG + self.ntheta]

    @property
    def volumes(self) -> np.ndarray:
        return self.vol[NG : NG + self.nr]

    @property
    def capacity(self) -> np.ndarray:
        """Per-radial-row capacity: quadrilateral area / (dr * dtheta)."""
        return self.volumes / (self.dr * self.dtheta)

    def cell_centers_xy(self):
        """(x, y) of mapped cell centers, shape (ntheta, nr) each."""
        r = self.r_centers
        x = np.outer(self.cos_c[NG : NG + self.ntheta], r)
        y = np.outer(self.sin_c[NG : NG + self.ntheta], r)
        return x, y

    def total_mapped_area(self) -> float:
        return float(self.volumes.sum() * self.ntheta)

    def sector_area(self) -> float:
        """Exact area of the curved annular sector covered by the grid."""
        return 0.5 * (self.rmax**2 - self.rmin**2) * (self.thetamax - self.thetamin)

    def polygonal_area(self) -> float:
        """Closed-form total area of the straight-edged quadrilaterals."""
        return (
            0.5
            * (self.rmax**2 - self.rmin**2)
            * self.ntheta
            * math.sin(self.dtheta)
        )

    def radial_face_normal(self, j: int):
        """Unit normal of a constant-r face in angular cell j (points outward)."""
        return (self.cos_c[NG + j], self.sin_c[NG + j])

    def angular_face_normal(self, j_edge: int):
        """Unit normal of a constant-theta face at edge j (points toward +theta)."""
        return (-self.sin_e[NG + j_edge], self.cos_e[NG + j_edge])

    def radial_face_length(self, i_edge: int) -> float:
        return float(self.chord[NG + i_edge])

    def angular_face_length(self) -> float:
        return self.dr


def build_grid(
    nr: int,
    ntheta: int,
    rmin: float = 1e-2,
    rmax: float = 1.0,
    thetamin: float = 0.0,
    thetamax: float = 1.5 * math.pi,
) -> PolarGrid:
    """Construct the mapped polar grid over [rmin, rmax] x [thetamin, thetamax]."""
    return PolarGrid(nr=nr, ntheta=ntheta, rmin=rmin, rmax=rmax,
                     thetamin=thetamin, thetamax=thetamax)
