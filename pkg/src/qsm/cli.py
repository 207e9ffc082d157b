"""Command-line front end.

Subcommands: equilibrium, phase-diagram, semiclassical, quench, ode,
specfun-selftest, and report (figure rendering).  Every run writes its data
as CSV (17-significant-digit scientific notation, byte-reproducible) plus a
JSON manifest recording all inputs, defaults and solver diagnostics.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import ModelParams

_FMT = "%.17e"


def _worker_cap() -> int:
    cap = os.environ.get("QSM_THREADS", "")
    try:
        return max(1, int(cap))
    except ValueError:
        return os.cpu_count() or 1


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_FMT % float(v) if not isinstance(v, str)
                              else v for v in row) + "\n")


def write_manifest(path: Path, command: str, params: dict,
                   diagnostics: dict | None = None) -> None:
    clean = {k: v for k, v in params.items()
             if isinstance(v, (int, float, str, bool, list, tuple,
                               type(None)))}
    doc = {
        "command": command,
        "version": __version__,
        "parameters": clean,
        "diagnostics": diagnostics or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _parse_sweep(spec: str) -> np.ndarray:
    """start:stop:n inclusive linear sweep."""
    a, b, n = spec.split(":")
    return np.linspace(float(a), float(b), int(n))


def cmd_equilibrium(args) -> int:
    from . import equilibrium as eq
    rows = []
    t_values = _parse_sweep(args.T_sweep) if args.T_sweep else [args.T]
    g_values = _parse_sweep(args.g_sweep) if args.g_sweep else [args.g]
    for T in t_values:
        for g in g_values:
            p = ModelParams(d=args.d, g=float(g), T=float(T), lam=args.lam)
            sol = eq.solve_z(p)
            rows.append((args.d, args.lam, T, g, sol.z, sol.phase))
    out = Path(args.output)
    write_csv(out, ["d", "lambda", "T", "g", "z", "phase"], rows)
    write_manifest(out.with_suffix(".manifest.json"), "equilibrium",
                   vars(args))
    return 0


def cmd_phase_diagram(args) -> int:
    from . import equilibrium as eq
    out = Path(args.output)
    rows = []
    if args.kind == "critical-temperature":
        for g in _parse_sweep(args.g_sweep):
            rows.append((args.d, float(g), eq.critical_temperature(args.d, float(g)),
                         eq.effective_temperature_shift(args.d, float(g))))
        write_csv(out, ["d", "g", "Tc", "Tc_first_order"], rows)
    else:
        for lam in _parse_sweep(args.lam_sweep):
            rows.append((args.d, float(lam),
                         eq.critical_coupling(args.d, float(lam))))
        write_csv(out, ["d", "lambda", "g_c"], rows)
    write_manifest(out.with_suffix(".manifest.json"), "phase-diagram",
                   vars(args))
    return 0


def cmd_semiclassical(args) -> int:
    from . import semiclassical as sc
    p = ModelParams(d=args.d, g=args.g, T=args.T, gamma0=2.0 * args.gamma)
    sol = sc.solve_volterra(p, args.tmax, args.dt,
                            check_convergence=args.check)
    out = Path(args.output)
    stride = max(1, len(sol.t) // args.max_rows)
    rows = [(t, f, gg, z) for t, f, gg, z in zip(
        sol.t[::stride], sol.F[::stride], sol.G[::stride],
        sol.Z()[::stride])]
    write_csv(out, ["t", "F", "G", "Z"], rows)
    qout = out.with_name(out.stem + "_modes" + out.suffix)
    ts = [sol.t[len(sol.t) // 4], sol.t[len(sol.t) // 2], sol.t[-1]]
    ks = np.linspace(0.0, math.pi, args.n_k)
    qrows = []
    for t in ts:
        q = sc.q_correlator_sc(ks ** 2, float(t), sol, p)
        qrows.extend((float(k), float(t), float(qq)) for k, qq in zip(ks, q))
    write_csv(qout, ["k", "t", "Q"], qrows)
    write_manifest(out.with_suffix(".manifest.json"), "semiclassical",
                   vars(args), {"Teff": sol.Teff,
                                "accuracy_warning": sol.accuracy_warning})
    return 0


def cmd_quench(args) -> int:
    from . import deepquench as dq
    if args.C is not None:
        proto = dq.QuenchProtocol(d=args.d, g=args.g, gamma=args.gamma,
                                  C=args.C)
    else:
        if args.T0 is None or args.g0 is None:
            print("either --C or both --T0 and --g0 are required",
                  file=sys.stderr)
            return 2
        proto = dq.QuenchProtocol.from_initial_state(
            args.T0, args.g0, d=args.d, g=args.g, gamma=args.gamma)
    t_grid = np.logspace(math.log10(args.tmin), math.log10(args.tmax),
                         args.nodes)
    traj = dq.solve_Z(proto, t_grid)
    out = Path(args.output)
    obs = args.observable
    if obs == "Z":
        rows = list(zip(traj.t, traj.Z, traj.residual))
        write_csv(out, ["t", "Z", "residual"], rows)
    elif obs == "Qk":
        ks = np.linspace(0.0, args.kmax, args.n_k)
        rows = []
        for t, Z in zip(traj.t, traj.Z):
            q = dq.structure_factor(ks, float(t), float(Z), proto)
            rows.extend((float(k), float(t), float(v)) for k, v in zip(ks, q))
        write_csv(out, ["k", "t", "Q"], rows)
    elif obs == "C_of_R":
        rho = np.linspace(0.05, 6.0, args.n_k)
        rows = []
        for t, Z in zip(traj.t, traj.Z):
            scale = math.sqrt(float(t) * abs(Z)) * float(t) / max(
                float(t) * abs(Z), 1e-300)
            for r in rho:
                R = float(r) * float(t) / math.sqrt(max(float(t) * abs(Z),
                                                        1e-300))
                rows.append((float(t), R, float(r),
                             dq.realspace_correlator(R, float(t), float(Z),
                                                     proto)))
        write_csv(out, ["t", "R", "rho", "C"], rows)
    else:
        fn = {"L2": dq.length_scale, "chi": dq.susceptibility,
              "xi0": dq.off_coherence_zero_mode}[obs]
        rows = [(t, fn(float(t), float(Z), proto))
                for t, Z in zip(traj.t, traj.Z)]
        write_csv(out, ["t", obs], rows)
    write_manifest(out.with_suffix(".manifest.json"), "quench", vars(args),
                   {"regimes": traj.regime,
                    "max_residual": float(np.nanmax(np.abs(traj.residual))),
                    "C": proto.C})
    return 0


def cmd_ode(args) -> int:
    from . import dynamics as dyn
    p = ModelParams(d=args.d, g=args.g, T=args.T, gamma0=2.0 * args.gamma)
    grid = dyn.make_grid(int(args.d), args.n)
    nm = grid.n_modes
    st0 = dyn.OdeState(t=0.0, Q=np.ones(nm), Xi=np.zeros(nm),
                       Pi=np.full(nm, args.Pi0), z=args.z0, Z=0.0)
    snap = tuple(float(s) for s in args.snapshot) if args.snapshot else ()
    if args.freeze_z:
        t_eval = np.linspace(0.0, args.tmax, 201)
        ts, states = dyn.integrate_frozen(grid, p, st0, t_eval,
                                          bath_on=args.bath == "on")
        rows = [(s.t, s.z, s.Z, dyn.heisenberg_monitor(s),
                 float(np.dot(grid.weights, s.Q)) - 1.0) for s in states]
    else:
        run = dyn.integrate_constrained(grid, p, st0, args.tmax, args.dt,
                                        bath_on=args.bath == "on",
                                        snapshot_times=snap)
        rows = list(zip(run.t, run.z, run.Z, run.min_heisenberg,
                        run.residual))
        for t_s, (Q, Xi, Pi) in run.snapshots.items():
            spath = Path(args.output).with_name(
                Path(args.output).stem + f"_snapshot_t{t_s:g}.csv")
            write_csv(spath, ["omega", "Q", "Xi", "Pi"],
                      list(zip(grid.omega, Q, Xi, Pi)))
    out = Path(args.output)
    write_csv(out, ["t", "z", "Z", "min_heisenberg", "residual"], rows)
    write_manifest(out.with_suffix(".manifest.json"), "ode", vars(args))
    return 0


def cmd_selftest(args) -> int:
    from . import specfun
    rows = specfun.selftest(verbose=True)
    ok = all(r[3] for r in rows)
    print("ALL PASS" if ok else "FAILURES PRESENT")
    return 0 if ok else 1


def cmd_report(args) -> int:
    from . import report
    return report.render(args.kind, Path(args.outdir))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qsm",
        description="Non-equilibrium dynamics of the open quantum spherical "
                    "model: equilibrium constraint, semi-classical Volterra "
                    "limit, deep-quench asymptotics and an ODE oracle.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_eq = sub.add_parser("equilibrium", help="solve the equilibrium constraint")
    p_eq.add_argument("--d", type=float, required=True)
    p_eq.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_eq.add_argument("--g", type=float, default=0.0)
    p_eq.add_argument("--T", type=float, default=0.0)
    p_eq.add_argument("--T-sweep", dest="T_sweep", default=None,
                      help="start:stop:n")
    p_eq.add_argument("--g-sweep", dest="g_sweep", default=None)
    p_eq.add_argument("--output", default="equilibrium.csv")
    p_eq.set_defaults(func=cmd_equilibrium)

    p_pd = sub.add_parser("phase-diagram", help="critical lines")
    p_pd.add_argument("--d", type=float, required=True)
    p_pd.add_argument("--kind", choices=["critical-coupling",
                                         "critical-temperature"],
                      default="critical-coupling")
    p_pd.add_argument("--lam-sweep", default="0.02:1.0:25")
    p_pd.add_argument("--g-sweep", default="0.0:0.5:11")
    p_pd.add_argument("--output", default="phase_diagram.csv")
    p_pd.set_defaults(func=cmd_phase_diagram)

    p_sc = sub.add_parser("semiclassical", help="Volterra G(t) and Q_k")
    p_sc.add_argument("--d", type=float, required=True)
    p_sc.add_argument("--g", type=float, default=0.0)
    p_sc.add_argument("--T", type=float, required=True)
    p_sc.add_argument("--gamma", type=float, default=1.0)
    p_sc.add_argument("--tmax", type=float, required=True)
    p_sc.add_argument("--dt", type=float, required=True)
    p_sc.add_argument("--n-k", type=int, default=64)
    p_sc.add_argument("--max-rows", type=int, default=2000)
    p_sc.add_argument("--check", action="store_true",
                      help="half-step accuracy check")
    p_sc.add_argument("--output", default="semiclassical.csv")
    p_sc.set_defaults(func=cmd_semiclassical)

    p_q = sub.add_parser("quench", help="deep-quench constraint and observables")
    p_q.add_argument("--d", type=float, required=True)
    p_q.add_argument("--g", type=float, required=True)
    p_q.add_argument("--gamma", type=float, required=True)
    p_q.add_argument("--C", type=float, default=None)
    p_q.add_argument("--T0", type=float, default=None)
    p_q.add_argument("--g0", type=float, default=None)
    p_q.add_argument("--tmin", type=float, default=1e2)
    p_q.add_argument("--tmax", type=float, default=1e6)
    p_q.add_argument("--nodes", type=int, default=25)
    p_q.add_argument("--n-k", type=int, default=64)
    p_q.add_argument("--kmax", type=float, default=0.2)
    p_q.add_argument("--observable",
                     choices=["Z", "Qk", "C_of_R", "L2", "chi", "xi0"],
                     default="Z")
    p_q.add_argument("--output", default="quench.csv")
    p_q.set_defaults(func=cmd_quench)

    p_o = sub.add_parser("ode", help="brute-force constrained ODE oracle")
    p_o.add_argument("--d", type=int, required=True, choices=[1, 2, 3])
    p_o.add_argument("--n", type=int, default=16)
    p_o.add_argument("--g", type=float, default=0.1)
    p_o.add_argument("--T", type=float, default=0.0)
    p_o.add_argument("--gamma", type=float, default=1.0)
    p_o.add_argument("--tmax", type=float, default=50.0)
    p_o.add_argument("--dt", type=float, default=0.01)
    p_o.add_argument("--bath", choices=["on", "off"], default="on")
    p_o.add_argument("--freeze-z", action="store_true")
    p_o.add_argument("--z0", type=float, default=1.0)
    p_o.add_argument("--Pi0", type=float, default=1.0)
    p_o.add_argument("--snapshot", nargs="*", default=None)
    p_o.add_argument("--output", default="ode.csv")
    p_o.set_defaults(func=cmd_ode)

    p_st = sub.add_parser("specfun-selftest",
                          help="identity suite pass/fail table")
    p_st.set_defaults(func=cmd_selftest)

    p_r = sub.add_parser("report",
                         help="render figures + CSV for a study")
    p_r.add_argument("kind", choices=["phase-diagram", "quench-z",
                                      "scaling-2d", "semiclassical",
                                      "initial-state"])
    p_r.add_argument("--outdir", default="reports")
    p_r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
