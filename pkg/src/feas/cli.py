"""Command-line entry point: ``feas {gen-ic,simulate,analyze,flux,ineq}``.

Exit codes: 0 success, 1 usage, 2 validation, 3 runtime (blow-up keeps partial output).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .flux import budget_closure
from .inequalities import BoxSweep, CertificationError, certify_fq_min
from .io import (
    ConfigError,
    SnapshotError,
    load_config,
    read_snapshot,
    write_budget,
    write_inequality_report,
    write_key_values,
    write_snapshot,
    write_timeseries,
)
from .model import Snapshot, VacuumError, make_initial_data
from .timestepper import BlowUpError, Trajectory, integrate

log = logging.getLogger("feas")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="feas", description="Fractional alignment system: simulate and analyse.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("gen-ic", help="build initial data from a config")
    a.add_argument("--config", required=True)
    a.add_argument("--out", required=True)

    a = sub.add_parser("simulate", help="run a simulation")
    a.add_argument("--config", required=True)
    a.add_argument("--ic", help="initial snapshot (overrides the config recipe)")
    a.add_argument("--out-dir", required=True)

    a = sub.add_parser("analyze", help="envelope, entropy, energy, flocking and Gronwall checks on a run directory")
    a.add_argument("--run", required=True)
    a.add_argument("--report", required=True)

    a = sub.add_parser("flux", help="scale-by-scale energy budget")
    a.add_argument("--run", required=True)
    a.add_argument("--q-list", type=_int_list, default=[1, 2, 3])
    a.add_argument("--out", help="budget CSV (default RUN/budget.csv)")

    a = sub.add_parser("ineq", help="certify f_q lower bounds on a density box")
    a.add_argument("--q-max", type=int, required=True)
    a.add_argument("--rho-min", type=float, required=True)
    a.add_argument("--rho-max", type=float, required=True)
    a.add_argument("--m", type=float, required=True)
    a.add_argument("--resolution", type=int, default=2001)
    a.add_argument("--out", help="report CSV (default stdout)")
    return p


# ---------------------------------------------------------------------------

def _cmd_gen_ic(args) -> int:
    cfg = load_config(args.config)
    s = make_initial_data(cfg.ic, cfg.grid, cfg.alpha)
    write_snapshot(s, args.out, cfg.alpha)
    log.info("wrote %s (min rho %.6g)", args.out, s.rho.min())
    return EXIT_OK


def _snap_path(out: Path, i: int) -> Path:
    return out / "snapshots" / f"snap_{i:06d}.bin"


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    recipe = Snapshot(args.ic) if args.ic else cfg.ic
    s0 = make_initial_data(recipe, cfg.grid, cfg.alpha)
    if s0.grid != cfg.grid:
        raise ConfigError(f"initial snapshot grid {s0.grid.sizes} differs from config {cfg.grid.sizes}")
    out = Path(args.out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    cfg_copy = out / "config.ini"
    if Path(args.config).resolve() != cfg_copy.resolve():
        cfg_copy.write_text(Path(args.config).read_text(encoding="utf-8"), encoding="utf-8")

    recorder = dg.DiagnosticsRecorder(cfg.alpha, cfg.p_list, cfg.q_list)
    counter = {"n": 0}

    def dump(state):
        if counter["n"] % cfg.snapshot_every == 0:
            write_snapshot(state, _snap_path(out, counter["n"]), cfg.alpha)
        counter["n"] += 1

    status = {"alpha": cfg.alpha, "grid": list(cfg.grid.sizes)}
    code = EXIT_OK
    try:
        traj = integrate(s0, cfg.alpha, cfg.scheme, observers=[dump, recorder])
        status.update(status="completed", t=traj.snapshots[-1].time)
    except BlowUpError as exc:
        traj = exc.trajectory or Trajectory()
        status.update(status="blowup", t=exc.time, reason=str(exc))
        log.error("%s", exc)
        code = EXIT_RUNTIME
    status.update(steps=traj.steps, flags=sorted(traj.flags), records=len(traj.records))
    write_timeseries(traj.records, out / "timeseries.csv", cfg.p_list, cfg.q_list)
    (out / "status.json").write_text(json.dumps(status, indent=2) + "\n", encoding="utf-8")
    print(f"{status['status']}: t = {status['t']:.6g}, steps = {traj.steps}, records = {len(traj.records)}")
    return code


def load_run(run: Path) -> Trajectory:
    files = sorted((Path(run) / "snapshots").glob("snap_*.bin"))
    if not files:
        raise SnapshotError(f"no snapshots in {run}/snapshots")
    snaps, alpha = [], None
    for f in files:
        s, a = read_snapshot(f)
        snaps.append(s)
        alpha = a
    return Trajectory(snapshots=snaps, status="loaded", alpha=alpha)


def _cmd_analyze(args) -> int:
    traj = load_run(Path(args.run))
    a = traj.alpha
    rows = []
    env = dg.check_envelopes(traj)
    rows.append(("envelope_containment", "yes" if env.ok else f"violation at {env.first_violation}",
                 "pass" if env.ok else "fail"))
    rows.append(("envelope_lower_margin", env.worst_lower_margin, ""))
    rows.append(("envelope_upper_margin", env.worst_upper_margin, ""))
    ent = dg.entropy_conservation(traj)
    rows.append(("q_inf_drift", ent.drift, "relative" if ent.relative else "absolute"))
    rows.append(("entropy_uniform_bound", ent.uniform_bound_margin, "pass" if ent.uniform_bound_ok else "fail"))
    er = dg.energy_residuals(traj)
    ke0 = er.energy_kinetic[0]
    rows.append(("res_kinetic_max", float(np.abs(er.res_kinetic).max()), ""))
    rows.append(("res_kinetic_rel", float(np.abs(er.res_kinetic).max()) / ke0 if ke0 > 0 else 0.0, ""))
    rows.append(("res_rho_max", float(np.abs(er.res_rho).max()), ""))
    rows.append(("leray_hopf_u", float(er.leray_hopf_u.max()), "pass" if er.leray_hopf_ok else "fail"))
    try:
        fm = dg.flock_metrics(traj)
        rows += [("align_rate", fm.align.rate, f"R2={fm.align.r2:.4f}"),
                 ("grad_rate", fm.grad.rate, f"R2={fm.grad.r2:.4f}"),
                 ("moving_frame_residual_mid", float(fm.moving_frame_residual[len(fm.times) // 2]), "")]
    except dg.InsufficientDataError as exc:
        rows.append(("flock_metrics", str(exc), "skipped"))
    s0 = traj.snapshots[0]
    n = s0.grid.ndims
    m = s0.rho.integral() / (2 * math.pi) ** n
    q0 = dg._q_sup(s0, a)
    e0 = float(np.abs(dg.entropy_field(s0.rho, s0.u, a).values).max())
    rmin, rmax = dg.a_priori_bounds(s0.rho, q0, a)
    for q in (1, 2):
        r0 = dg.lp_deviation(s0.rho, 2 * q) ** (2 * q)
        g = dg.gronwall_rates(q, e0, rmin, rmax, a, m=m, ndims=n)
        if not g.applicable:
            rows.append((f"gronwall_q{q}", "inapplicable (X <= 0)", "skipped"))
            continue
        margin = min(dg.gronwall_envelope(q, e0, rmin, rmax, a, r0, s.time - s0.time, m=m, ndims=n, C_q=g.C_q)
                     - dg.lp_deviation(s.rho, 2 * q) ** (2 * q) for s in traj.snapshots)
        rows.append((f"gronwall_q{q}_margin", margin, "pass" if margin >= -1e-6 else "fail"))
    write_key_values(rows, args.report)
    for name, value, st in rows:
        print(f"{name:32s} {value!s:>24s} {st}")
    return EXIT_OK


def _cmd_flux(args) -> int:
    traj = load_run(Path(args.run))
    series = [budget_closure(traj, Q) for Q in args.q_list]
    out = Path(args.out) if args.out else Path(args.run) / "budget.csv"
    write_budget(series, out)
    for b in series:
        if b.t.size:
            print(f"Q={b.Q}: max|residual| = {np.abs(b.residual).max():.3e}, "
                  f"max|Pi_Q| = {np.abs(b.Pi_Q).max():.3e}, flagged = {len(b.flags)}")
        else:
            print(f"Q={b.Q}: all snapshots flagged (filtered vacuum)")
    return EXIT_OK


def _cmd_ineq(args) -> int:
    certs = []
    for q in range(1, args.q_max + 1):
        certs.append(certify_fq_min(BoxSweep(q, args.m, args.rho_min, args.rho_max, args.resolution),
                                    strict=False))
    if args.out:
        write_inequality_report(certs, args.out)
    write_inequality_report(certs, sys.stdout)
    if any(c.status != "certified" for c in certs):
        raise CertificationError("f_q certification failed for some q")
    return EXIT_OK


COMMANDS = {"gen-ic": _cmd_gen_ic, "simulate": _cmd_simulate, "analyze": _cmd_analyze,
            "flux": _cmd_flux, "ineq": _cmd_ineq}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, SnapshotError, VacuumError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BlowUpError, CertificationError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
