"""Command-line entry point: ``scl <command> --config <path>``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import geometry as geo
from .config import ConfigError, ManifoldConfig, load_config
from .induction import CoordConnectionP, InducedSpace, induced_connection, sample_points, verify_theorem
from .lifts import lifts_report
from .reduction import roundtrip_report
from .report import VerificationReport

__all__ = ["COMMANDS", "UsageError", "check_report", "run", "emit_report", "main"]

COMMANDS = ("check", "induce", "lift", "reduce", "roundtrip", "all")
FD_POINTS = 3


class UsageError(ValueError):
    """The requested command cannot run with the given config."""


def check_report(cfg: ManifoldConfig, tol: float | None = None) -> VerificationReport:
    spec = cfg.spec
    d = spec.dim
    pts = sample_points(spec.n, cfg.samples, cfg.seed)
    xs = pts[:, :d]

    def t(default):
        return default if tol is None else tol

    rep = VerificationReport(fixture=spec.name, seed=cfg.seed)
    sym = geo.check_symplectic(spec.omega, xs, tol=t(1e-9))
    rep.add("omega_closed", "omega = d(lambda) is closed", sym.residuals["closedness"], t(1e-9))
    floor = t(1e-9)
    rep.add("omega_nondegenerate", "omega = d(lambda) is nondegenerate",
            max(0.0, floor - sym.residuals["min_abs_det"]), 0.0)
    worst = dict.fromkeys(["torsion", "nabla_omega", "ricci_symmetric", "bianchi"], 0.0)
    for x in xs:
        G = spec.connection.christoffel_jets(x, 1)
        R = geo.curvature_jets(G).value
        r = np.einsum("ljil->ij", R)
        worst["torsion"] = max(worst["torsion"], float(np.abs(geo.torsion_jets(G).value).max()))
        worst["nabla_omega"] = max(worst["nabla_omega"], float(np.abs(
            geo.nabla_form_jets(G.truncate(0), spec.omega.jets(x, 1)).value).max()))
        worst["ricci_symmetric"] = max(worst["ricci_symmetric"], float(np.abs(r - r.T).max()))
        cyc = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
        worst["bianchi"] = max(worst["bianchi"], float(np.abs(cyc).max()))
    anchors = {"torsion": "connection is torsion free", "nabla_omega": "connection preserves omega",
               "ricci_symmetric": "Ricci tensor is symmetric",
               "bianchi": "first Bianchi identity"}
    defaults = {"torsion": 1e-10, "nabla_omega": 1e-9, "ricci_symmetric": 1e-10, "bianchi": 1e-9}
    for key, value in worst.items():
        rep.add(key, anchors[key], value, t(defaults[key]))

    fd_pts = pts[:FD_POINTS]
    gap_M = geo.derivative_engine_gap(spec.connection, fd_pts[:, :d])
    ccp = CoordConnectionP(induced_connection(InducedSpace(spec)))
    gap_P = geo.derivative_engine_gap(ccp, fd_pts)
    rep.add("derivative_engine_base", "jet curvature and Ricci agree with finite differences on M",
            max(gap_M.values()), 1e-5)
    rep.add("derivative_engine_induced",
            "jet curvature and Ricci agree with finite differences on P",
            max(gap_P.values()), 1e-5)
    W = geo.is_ricci_type(spec.connection, spec.omega, xs, tol=t(1e-9))
    rep.diagnostics["ricci_type_W"] = W.residuals["max_abs_W"]
    return rep


def run(command: str, cfg: ManifoldConfig, tol: float | None = None) -> VerificationReport:
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if command == "lift" and not cfg.has_lifts:
        raise UsageError("the lift command needs [lifts.hamiltonian.*] or [lifts.conformal]")
    tol = cfg.tol if tol is None else tol
    spec = cfg.spec
    pts = sample_points(spec.n, cfg.samples, cfg.seed)
    rep = VerificationReport(fixture=spec.name, seed=cfg.seed)
    if command in ("check", "all"):
        rep.extend(check_report(cfg, tol))
    if command in ("induce", "all"):
        rep.extend(verify_theorem(spec, pts, tol, seed=cfg.seed))
    if command == "lift" or (command == "all" and cfg.has_lifts):
        rep.extend(lifts_report(spec, cfg.hamiltonians, cfg.conformal, pts,
                                tol if tol is not None else 1e-9, seed=cfg.seed))
    if command in ("reduce", "roundtrip", "all"):
        rep.extend(roundtrip_report(spec, pts, tol, seed=cfg.seed))
    return rep


def emit_report(report: VerificationReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return report.to_json().encode()
    if fmt == "text":
        return report.to_text().encode()
    raise UsageError(f"unknown format {fmt!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scl", description="Verify induced Ricci-flat symplectic connections.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--seed", type=int, help="override verify.seed")
    p.add_argument("--samples", type=int, help="override verify.samples")
    p.add_argument("--tol", type=float, help="use one tolerance for every identity")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise UsageError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.samples is not None:
            if args.samples < 1:
                raise UsageError("--samples must be positive")
            cfg.samples = args.samples
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        report = run(args.command, cfg, args.tol)
    except (ConfigError, UsageError) as exc:
        print(f"scl: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.buffer.write(emit_report(report, args.format))
    sys.stdout.flush()
    return 0 if report.overall else 1


if __name__ == "__main__":
    sys.exit(main())
