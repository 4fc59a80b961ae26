"""CSV/NDJSON artifact writers and readers for the pipeline.

All floats use %.17g so a CSV round-trips binary-exactly and repeated
runs with identical configs reproduce identical bytes.  Angles follow the
documented headers: columns named theta are radians, *_deg are degrees.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

FMT = "%.17g"


def write_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(n):
            fh.write(",".join(FMT % c[k] for c in cols) + "\n")


def read_csv(path, expect_header=None):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if expect_header is not None and header != list(expect_header):
        raise ValueError(f"{path}: header {header} != expected {list(expect_header)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def append_ndjson(path, record):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_ndjson(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


FIELD_HEADER = ["r", "theta", "x", "y", "rho", "m", "n", "p", "c2"]


def write_field_csv(path, gl, field):
    """Field snapshot, row-major by (theta, r)."""
    g = field.grid
    x, y = g.cell_centers_xy()
    rho = field.q[:, :, 0]
    p = rho**gl.gamma
    c2 = gl.gamma * p**gl.kappa
    nth, nr = rho.shape
    rr = np.broadcast_to(g.r_centers, (nth, nr))
    tt = np.broadcast_to(g.theta_centers[:, None], (nth, nr))
    cols = [
        rr.ravel(), tt.ravel(), x.ravel(), y.ravel(),
        rho.ravel(), field.q[:, :, 1].ravel(), field.q[:, :, 2].ravel(),
        p.ravel(), c2.ravel(),
    ]
    write_csv(path, FIELD_HEADER, cols)


def read_field_csv(path, grid, time):
    """Rebuild an FVField from a field.csv written on the same grid."""
    from .solver import FVField

    _, data = read_csv(path, expect_header=FIELD_HEADER)
    nth, nr = grid.ntheta, grid.nr
    if data.shape[0] != nth * nr:
        raise ValueError(f"{path}: {data.shape[0]} rows, grid wants {nth * nr}")
    q = np.empty((nth, nr, 3))
    q[:, :, 0] = data[:, 4].reshape(nth, nr)
    q[:, :, 1] = data[:, 5].reshape(nth, nr)
    q[:, :, 2] = data[:, 6].reshape(nth, nr)
    return FVField(grid, q, time)


def write_sections_csv(path, sections):
    """Cross sections: theta_deg,r,rho,p,u with one block per angle."""
    th, r, rho, p, u = [], [], [], [], []
    for cs in sections:
        deg = math.degrees(cs.theta)
        th.append(np.full(len(cs.r), deg))
        r.append(cs.r)
        rho.append(cs.rho)
        p.append(cs.p)
        u.append(cs.u)
    write_csv(
        path,
        ["theta_deg", "r", "rho", "p", "u"],
        [np.concatenate(c) for c in (th, r, rho, p, u)],
    )


def write_report_csv(path, report):
    """Per-angle classification: theta_deg,class,transition_r."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta_deg,class,transition_r\n")
        for a, c, r in zip(report.theta_deg, report.classes, report.transition_r):
            fh.write(f"{FMT % a},{c},{FMT % r}\n")


def write_mesh_csv(path, mesh):
    """Characteristic mesh dump: i,j,theta,r,p,R,S,t,sonic_flag."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("i,j,theta,r,p,R,S,t,sonic_flag\n")
        M, N = mesh.M, mesh.N
        for i in range(M + 1):
            for j in range(N + 1):
                st = mesh.status[i, j]
                if st == 0:
                    continue
                fh.write(
                    f"{i},{j},"
                    f"{FMT % mesh.theta[i, j]},{FMT % mesh.r[i, j]},"
                    f"{FMT % mesh.p[i, j]},{FMT % mesh.R[i, j]},"
                    f"{FMT % mesh.S[i, j]},{FMT % mesh.t[i, j]},"
                    f"{1 if st == 2 else 0}\n"
                )


def write_front_csv(path, front):
    write_csv(path, ["theta", "r", "RS_value"], [front.theta, front.r, front.rs_value])


def write_curve_csv(path, curves):
    """Characteristic curves: family,theta,r,p."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("family,theta,r,p\n")
        for curve in curves:
            for k in range(len(curve.theta)):
                fh.write(
                    f"{curve.family},{FMT % curve.theta[k]},"
                    f"{FMT % curve.r[k]},{FMT % curve.p[k]}\n"
                )


def write_envelope_csv(path, env):
    pts = env.points[~np.isnan(env.points[:, 0])]
    write_csv(path, ["theta", "r"], [pts[:, 0], pts[:, 1]])


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
