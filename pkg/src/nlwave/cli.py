"""Pipeline runner: solve -> postproc -> chars -> goursat -> validate -> report.

Stages communicate through CSV/NDJSON artifacts in the output directory,
so any stage can be re-run in isolation once its inputs exist:

    field.csv           solve      cell-averaged snapshot at t_final
    crosssections.csv   postproc   radial sections for the figure sweep
    report.csv          postproc   per-angle shock/sonic classification
    chars_*.csv         chars      characteristic curves and envelope
    mesh.csv            goursat    characteristic mesh of the interaction region
    sonic_front.csv     goursat    extrapolated sonic boundary
    validation.ndjson   validate   boundary-data admissibility checks
    run.ndjson          all        append-only run metadata

Exit codes: 0 success, 1 solver/analysis error (including missing stage
inputs), 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import artifacts as art
from . import chars as ch
from . import goursat as gs
from . import selfsim as ss
from .config import RunConfig, parse_config
from .errors import AnalysisError, ConfigurationError
from .gas import GasLaw, four_quadrant_states
from .grid import build_grid
from .solver import SolverConfig, solve

STAGES = ("solve", "postproc", "chars", "goursat", "validate", "report")


def _gas(cfg: RunConfig):
    gl = GasLaw(cfg.gamma)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        qd = four_quadrant_states(gl, cfg.rho1, cfg.rho4)
    return gl, qd


def _grid(cfg: RunConfig):
    return build_grid(cfg.nr, cfg.ntheta, cfg.rmin, cfg.rmax, cfg.thetamin, cfg.thetamax)


def _solver_config(cfg: RunConfig):
    return SolverConfig(
        cfl=cfg.cfl, order=cfg.order, limiter=cfg.limiter, t_final=cfg.t_final,
        transverse=cfg.transverse, bc_inner=cfg.bc_inner, bc_outer=cfg.bc_outer,
        bc_theta=cfg.bc_theta,
    )


def _require(outdir, name, producer):
    path = os.path.join(outdir, name)
    if not os.path.exists(path):
        raise AnalysisError(f"missing artifact {name}: run the '{producer}' stage first")
    return path


def _record(cfg, outdir, stage, extra):
    rec = {"stage": stage, "config": cfg.as_dict(), "wall_clock": time.time()}
    rec.update(extra)
    art.append_ndjson(os.path.join(outdir, "run.ndjson"), rec)
    return rec


def _load_field(cfg, outdir):
    gl, qd = _gas(cfg)
    grid = _grid(cfg)
    path = _require(outdir, "field.csv", "solve")
    field = art.read_field_csv(path, grid, cfg.t_final)
    return gl, qd, grid, field


def stage_solve(cfg: RunConfig, outdir: str, log_every: int = 0):
    gl, qd = _gas(cfg)
    grid = _grid(cfg)
    scfg = _solver_config(cfg)
    field, log = solve(qd, grid, scfg, log_every=log_every)
    art.write_field_csv(os.path.join(outdir, "field.csv"), gl, field)
    extra = {
        "steps": log["steps"],
        "retries": log["retries"],
        "dt_min": log["dt_min"],
        "dt_max": log["dt_max"],
        "wall_time_s": log["wall_time_s"],
        "c1": qd.c1,
        "c4": qd.c4,
        "p1": qd.p1,
        "p4": qd.p4,
        "speed_class": qd.speed_class,
        "t_final": field.time,
        "artifacts": ["field.csv"],
    }
    return _record(cfg, outdir, "solve", extra)


def stage_postproc(cfg: RunConfig, outdir: str):
    gl, qd, grid, field = _load_field(cfg, outdir)
    fld = ss.to_selfsimilar(gl, field)
    sections = [
        ss.radial_cross_section(fld, math.radians(a)) for a in cfg.section_angles()
    ]
    art.write_sections_csv(os.path.join(outdir, "crosssections.csv"), sections)
    scan = np.arange(cfg.angle_step_deg, 90.0, cfg.angle_step_deg)
    report = ss.scan_angles(fld, scan, jump_threshold=cfg.jump_threshold, window=cfg.window)
    art.write_report_csv(os.path.join(outdir, "report.csv"), report)
    extra = {"artifacts": ["crosssections.csv", "report.csv"]}
    try:
        lo, hi = ss.estimate_theta3(report)
        extra["theta3_interval_deg"] = [lo, hi]
    except AnalysisError as exc:
        extra["theta3_interval_deg"] = None
        extra["theta3_error"] = str(exc)
    return _record(cfg, outdir, "postproc", extra)


def stage_chars(cfg: RunConfig, outdir: str):
    gl, qd = _gas(cfg)
    th2 = qd.xi2[1]
    curves = []
    th12 = np.linspace(th2, 0.5 * math.pi, 181)
    r12 = qd.c1 * np.sin(th12)
    p12 = gs.gamma12_closed_form(gl, qd, th12)[1]
    curves.append(ch.CharCurve("PLUS", th12, r12, p12))
    art.write_curve_csv(os.path.join(outdir, "chars_gamma12.csv"), curves[-1:])
    lo = -ch.gamma24_phase(qd) + 1e-3
    th24 = np.linspace(th2, max(lo, th2 - 0.6), 181)
    r24 = np.array([ch.gamma24(qd, t) for t in th24])
    c24 = ch.CharCurve("PLUS", th24, r24, np.full_like(th24, qd.p4))
    art.write_curve_csv(os.path.join(outdir, "chars_gamma24.csv"), [c24])
    arts = ["chars_gamma12.csv", "chars_gamma24.csv"]
    extra = {"artifacts": arts}

    # with a solved field present, add the extracted lower boundary, its
    # simple-wave family and the envelope estimate
    if os.path.exists(os.path.join(outdir, "field.csv")):
        gl2, qd2, grid, field = _load_field(cfg, outdir)
        fld = ss.to_selfsimilar(gl2, field)
        bd = gs.gamma23_from_field(gl2, qd2, fld, lambda_stop=cfg.lambda_stop)
        c23 = ch.CharCurve("MINUS", bd.theta23, bd.f23, bd.g23)
        art.write_curve_csv(os.path.join(outdir, "chars_gamma23.csv"), [c23])
        arts.append("chars_gamma23.csv")
        feet = [
            ch.SimpleWaveFoot.from_state(gl2, float(t), float(f), float(g))
            for t, f, g in zip(bd.theta23[::16], bd.f23[::16], bd.g23[::16])
        ]
        fam = []
        for foot in feet:
            ths = []
            rs = []
            t = foot.theta0
            while t > foot.theta0 - 0.5:
                try:
                    rs.append(float(ch.simple_wave_char(foot, t)))
                except Exception:
                    break
                ths.append(t)
                t -= 5e-3
            fam.append(ch.CharCurve("PLUS", np.array(ths), np.array(rs),
                                    np.full(len(ths), foot.p0)))
        art.write_curve_csv(os.path.join(outdir, "chars_simple.csv"), fam)
        arts.append("chars_simple.csv")
        env = ch.envelope_point(feet)
        if env.found:
            art.write_envelope_csv(os.path.join(outdir, "chars_envelope.csv"), env)
            arts.append("chars_envelope.csv")
            extra["xi4_estimate"] = list(env.xi4)
    return _record(cfg, outdir, "chars", extra)


def _boundary_data(cfg, outdir):
    gl, qd = _gas(cfg)
    if cfg.mode == "prescribed":
        _, data = art.read_csv(cfg.gamma23_table, expect_header=["theta", "f", "g"])
        return gl, qd, gs.make_prescribed_boundary(gl, qd, data[:, 0], data[:, 1], data[:, 2])
    _require(outdir, "report.csv", "postproc")
    gl, qd, grid, field = _load_field(cfg, outdir)
    fld = ss.to_selfsimilar(gl, field)
    return gl, qd, gs.gamma23_from_field(gl, qd, fld, lambda_stop=cfg.lambda_stop)


def stage_validate(cfg: RunConfig, outdir: str):
    gl, qd, bd = _boundary_data(cfg, outdir)
    accepted, checks = gs.validate_boundary_data(gl, qd, bd)
    vpath = os.path.join(outdir, "validation.ndjson")
    if os.path.exists(vpath):
        os.remove(vpath)
    for c in checks:
        art.append_ndjson(vpath, c)
    extra = {
        "accepted": accepted,
        "n_checks": len(checks),
        "n_failed_hard": sum(1 for c in checks if c["kind"] == "hard" and not c["passed"]),
        "artifacts": ["validation.ndjson"],
    }
    _record(cfg, outdir, "validate", extra)
    if not accepted:
        raise AnalysisError("boundary data rejected; see validation.ndjson")
    return extra


def stage_goursat(cfg: RunConfig, outdir: str):
    gl, qd, bd = _boundary_data(cfg, outdir)
    mesh = gs.goursat_march(gl, bd, mesh_n=cfg.mesh_n, t_cut=cfg.t_cut)
    art.write_mesh_csv(os.path.join(outdir, "mesh.csv"), mesh)
    front = gs.extract_sonic(mesh)
    art.write_front_csv(os.path.join(outdir, "sonic_front.csv"), front)
    diag = gs.near_sonic_diagnostics(mesh)
    extra = {
        "artifacts": ["mesh.csv", "sonic_front.csv"],
        "theta3_deg": math.degrees(bd.theta3),
        "front_samples": len(front),
        "breach_counts": {k: len(v) for k, v in mesh.breaches.items()},
        "near_sonic_ratio_sup": diag.ratio_sup if diag.applicable else None,
        "t_cut_eff": mesh.t_cut_eff,
    }
    return _record(cfg, outdir, "goursat", extra)


def stage_report(cfg: RunConfig, outdir: str):
    recs = art.read_ndjson(_require(outdir, "run.ndjson", "solve"))
    lines = []
    theta3 = None
    for rec in recs:
        if rec.get("stage") == "solve":
            lines.append(
                f"solve: {rec['steps']} steps to t={rec['t_final']:.4g} "
                f"({rec['wall_time_s']:.1f}s), c1={rec['c1']:.7f}, c4={rec['c4']:.7f}"
            )
        if rec.get("stage") == "postproc" and rec.get("theta3_interval_deg"):
            theta3 = rec["theta3_interval_deg"]
            lines.append(f"postproc: theta3 bracketed in [{theta3[0]:.1f}, {theta3[1]:.1f}] deg")
        if rec.get("stage") == "goursat":
            lines.append(
                f"goursat: {rec['front_samples']} sonic-front samples, "
                f"breaches {rec['breach_counts']}"
            )
    for ln in lines:
        print(ln)
    figures = []
    try:
        from plotviz import render_run

        figures = render_run(outdir)
        for f in figures:
            print(f"figure: {f}")
    except ImportError:
        print("figure rendering skipped (plotviz not installed)")
    return _record(cfg, outdir, "report", {"summary": lines, "figures": figures})


_STAGE_FN = {
    "solve": stage_solve,
    "postproc": stage_postproc,
    "chars": stage_chars,
    "goursat": stage_goursat,
    "validate": stage_validate,
    "report": stage_report,
}


def run_pipeline(cfg: RunConfig, stages, outdir=None, log_every: int = 0):
    outdir = art.ensure_dir(outdir or cfg.outdir)
    for stage in stages:
        if stage == "solve":
            stage_solve(cfg, outdir, log_every=log_every)
        else:
            _STAGE_FN[stage](cfg, outdir)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="nlwave",
        description="Four-quadrant Riemann problem laboratory for the nonlinear wave system",
    )
    ap.add_argument("stages", nargs="+", choices=STAGES, help="pipeline stages to run, in order")
    ap.add_argument("--config", default=None, help="flat key=value config file")
    ap.add_argument("--out", default=None, help="output directory (overrides config outdir)")
    ap.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    ap.add_argument("--progress", type=int, default=0, metavar="N",
                    help="print solver progress every N steps")
    ns = ap.parse_args(argv)

    try:
        overrides = []
        for item in ns.overrides:
            if "=" not in item:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides.append((k.strip(), v.strip()))
        cfg = parse_config(ns.config, overrides)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_pipeline(cfg, ns.stages, outdir=ns.out, log_every=ns.progress)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
