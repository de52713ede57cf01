"""Command line entry point: ``rnads {flow,check,mass,sweep}``.

Exit status is 0 on success, 1 when a flow aborts or (with ``--strict``) a
verdict fails, and 2 for configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .background import existence_check
from .config import expand_sweep, load_config, profile_from_file
from .errors import ConfigError, FlowError, ProfileError, RNAdSError
from .flow import _rounded, run
from .functionals import evaluate
from .hypersurface import geometry_from_profile, write_geometry_csv
from .mass import GraphProfile, embed_rnads_as_graph, mass_report
from .spaceform import write_field_csv

log = logging.getLogger("rnads")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFICIT_TOL = 1e-6
MASS_TOL = 1e-5


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_rounded(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_flow(cfg, out_dir, seed=None):
    """Run the flow; returns (summary dict, verdicts ok, completed)."""
    p = cfg.require_existence()
    mesh = cfg.build_mesh()
    profile = cfg.initial_profile(mesh, p, seed)
    geom = geometry_from_profile(profile)
    if geom.H.min() <= 0:
        raise ConfigError(f"initial surface is not mean convex (min H = {geom.H.min():.6g})")
    traj = run(profile, cfg["flow"]["T"], cfg.flow_options(), raise_on_error=False)
    formats = cfg["output"]["formats"]
    os.makedirs(out_dir, exist_ok=True)
    summary = traj.summary()
    if "csv" in formats:
        traj.write_csv(os.path.join(out_dir, "trajectory.csv"))
        last = traj.states[-1]
        write_field_csv(os.path.join(out_dir, "profile_final.csv"), mesh.field(last.profile.lam),
                        name="lambda")
    if "json" in formats:
        traj.write_json(os.path.join(out_dir, "summary.json"))
    verdicts = summary.get("monotonicity", {})
    return summary, all(verdicts.values()), traj.completed


def check_inequalities(cfg, out_dir, profile_path=None, seed=None):
    """Functional report of a single profile; returns (report dict, all deficits >= -tol)."""
    p = cfg.require_existence()
    mesh = cfg.build_mesh()
    if profile_path is not None:
        profile = profile_from_file(profile_path, mesh, p)
    else:
        profile = cfg.initial_profile(mesh, p, seed)
    geom = geometry_from_profile(profile)
    rep = evaluate(geom, profile).as_dict()
    rep.update(minH=float(geom.H.min()), maxH=float(geom.H.max()),
               min_support=float(geom.support.min()))
    keys = ("minkowski_deficit", "af_deficit", "hk_residual")
    ok = geom.H.min() > 0 and all(rep[k] >= -DEFICIT_TOL for k in keys)
    rep["verdict"] = "PASS" if ok else "FAIL"
    os.makedirs(out_dir, exist_ok=True)
    if "json" in cfg["output"]["formats"]:
        _write_json(os.path.join(out_dir, "check.json"), rep)
    if "csv" in cfg["output"]["formats"]:
        write_geometry_csv(os.path.join(out_dir, "geometry.csv"), profile, geom)
    return rep, ok


def compute_mass(cfg, out_dir):
    """Mass report for the configured graph; returns (report dict, verdict ok)."""
    p_lower = cfg.background_params()
    g = cfg["graph"]
    if g["mode"] == "embed":
        m_lower = p_lower.m if g["m_lower"] is None else g["m_lower"]
        p_lower = p_lower.replace(m=m_lower)
        if g["m_upper"] is None:
            raise ConfigError("graph.mode = embed needs graph.m_upper")
        p_upper = p_lower.replace(m=g["m_upper"])
        for label, pp in (("upper", p_upper), ("lower", p_lower)):
            rep = existence_check(pp)
            if not rep:
                raise ConfigError(f"{label} background fails the existence check: {rep.detail}")
        try:
            gp = embed_rnads_as_graph(p_upper, p_lower, s_max=g["s_max"], points=g["points"])
        except ProfileError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        cfg.require_existence()
        if not g["path"] or g["tau"] is None:
            raise ConfigError("graph.mode = file needs graph.path and graph.tau")
        path = cfg.resolve(g["path"])
        if not os.path.exists(path):
            raise ConfigError(f"graph profile not found: {path}")
        gp = GraphProfile.from_csv(path, g["tau"])
    report = mass_report(gp, p_lower, theta=g["theta"])
    rep = report.as_dict()
    ok = report.penrose_pass and abs(report.mass_limit - report.mass_bulk) <= MASS_TOL
    rep["verdict"] = "PASS" if ok else "FAIL"
    rep["penrose_verdict"] = "PASS" if report.penrose_pass else "FAIL"
    os.makedirs(out_dir, exist_ok=True)
    if "json" in cfg["output"]["formats"]:
        _write_json(os.path.join(out_dir, "mass.json"), rep)
    return rep, ok


_FLOW_COLS = ("completed", "t_final", "Q", "L", "minkowski_deficit", "af_deficit", "hk_residual",
              "rate_grad_phi_norm", "rate_shape_gap", "verdict")
_CHECK_COLS = ("area", "Q", "J", "K", "L", "minkowski_deficit", "af_deficit", "hk_residual", "verdict")
_MASS_COLS = ("mass_limit", "mass_bulk", "penrose_rhs", "penrose_margin", "verdict")


def _sweep_item(args):
    index, overrides, cfg, out_root, target, seed = args
    out_dir = os.path.join(out_root, f"item_{index:03d}")
    try:
        if target == "flow":
            summary, ok, done = run_flow(cfg, out_dir, seed)
            fin = summary["final"]
            row = {"completed": done, "t_final": summary["t_final"], "Q": fin["Q"], "L": fin["L"],
                   "minkowski_deficit": fin["minkowski_deficit"], "af_deficit": fin["af_deficit"],
                   "hk_residual": fin["hk_residual"],
                   "rate_grad_phi_norm": summary["rates"]["grad_phi_norm"]["rate"],
                   "rate_shape_gap": summary["rates"]["shape_gap"]["rate"],
                   "verdict": "PASS" if ok and done else "FAIL"}
        elif target == "check":
            rep, _ = check_inequalities(cfg, out_dir, seed=seed)
            row = {k: rep[k] for k in _CHECK_COLS}
        else:
            rep, _ = compute_mass(cfg, out_dir)
            row = {k: rep[k] for k in _MASS_COLS}
    except (RNAdSError, ValueError) as exc:
        row = {"verdict": f"ERROR: {type(exc).__name__}: {exc}"}
    return index, overrides, row


def sweep(cfg, out_dir, seed=None):
    """Run every item of the sweep; writes sweep.csv and returns the rows."""
    target = cfg["sweep"]["target"]
    if target is None:
        raise ConfigError("sweep needs sweep.target")
    items = expand_sweep(cfg)
    jobs = [(i, ov, c, out_dir, target, seed) for i, (ov, c) in enumerate(items)]
    workers = cfg["sweep"]["workers"]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_item, jobs))
    else:
        results = [_sweep_item(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    cols = {"flow": _FLOW_COLS, "check": _CHECK_COLS, "mass": _MASS_COLS}[target]
    keys = sorted(cfg["sweep"]["ranges"])
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", *keys, *cols])
        for index, overrides, row in results:
            fmt = [_fmt(row.get(c, "")) for c in cols]
            writer.writerow([index, *(_fmt(overrides[k]) for k in keys), *fmt])
            rows.append({"item": index, **overrides, **row})
    return rows


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def build_parser():
    parser = argparse.ArgumentParser(prog="rnads", description=(
        "Inverse mean curvature flow in Reissner-Nordstrom-AdS backgrounds, "
        "inequality checks and graph masses."))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("flow", "evolve a star-shaped surface and record functionals"),
                       ("check", "evaluate all deficits of one profile"),
                       ("mass", "mass of a rotationally symmetric graph"),
                       ("sweep", "run a parameter sweep from sweep.ranges")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
        sp.add_argument("--out", metavar="DIR", help="output directory (default: output.directory)")
        sp.add_argument("--strict", action="store_true",
                        help="exit nonzero when a verdict fails")
        sp.add_argument("--seed", type=int, help="seed for random perturbation modes")
        if name == "check":
            sp.add_argument("--profile", metavar="CSV", help="profile file overriding initial")
    return parser


def _configure_logging():
    level = os.environ.get("RNADS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.resolve(cfg["output"]["directory"])
        if args.command == "flow":
            summary, ok, done = run_flow(cfg, out, args.seed)
            print(f"flow: t_final={summary['t_final']:.6g} steps={summary['steps']} "
                  f"completed={done} verdicts={'PASS' if ok else 'FAIL'}")
            if not done:
                print(f"flow aborted: {summary['error']}", file=sys.stderr)
                return EXIT_FAIL
            return EXIT_FAIL if args.strict and not ok else EXIT_OK
        if args.command == "check":
            rep, ok = check_inequalities(cfg, out, args.profile, args.seed)
            print(f"check: minkowski={rep['minkowski_deficit']:.6g} af={rep['af_deficit']:.6g} "
                  f"hk={rep['hk_residual']:.6g} Q={rep['Q']:.6g} verdict={rep['verdict']}")
            return EXIT_FAIL if args.strict and not ok else EXIT_OK
        if args.command == "mass":
            rep, ok = compute_mass(cfg, out)
            print(f"mass: limit={rep['mass_limit']:.10g} bulk={rep['mass_bulk']:.10g} "
                  f"penrose_rhs={rep['penrose_rhs']:.10g} penrose={rep['penrose_verdict']}")
            return EXIT_FAIL if args.strict and not ok else EXIT_OK
        rows = sweep(cfg, out, args.seed)
        bad = [r for r in rows if r.get("verdict") != "PASS"]
        print(f"sweep: {len(rows)} items, {len(rows) - len(bad)} PASS")
        return EXIT_FAIL if args.strict and bad else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowError as exc:
        print(f"flow error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (RNAdSError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
