"""Report rendering: matplotlib figures written to files alongside the
delimited data they are drawn from.

Each report kind produces <name>.csv (full-precision data) and <name>.png
in the output directory; nothing interactive.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .cli import write_csv
from .lattice import ModelParams

_STYLE = {
    "figure.figsize": (7.0, 4.6),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "lines.linewidth": 1.4,
}


def _save(fig, outdir: Path, name: str) -> None:
    fig.tight_layout()
    fig.savefig(outdir / f"{name}.png")
    plt.close(fig)


def render_phase_diagram(outdir: Path) -> None:
    from . import equilibrium as eq
    gs = np.linspace(0.0, 10.0, 21)
    rows = []
    for g in gs:
        tc = eq.critical_temperature(3.0, float(g))
        try:
            t1 = eq.effective_temperature_shift(3.0, float(g))
        except ValueError:
            t1 = math.nan
        rows.append((3.0, float(g), tc, t1))
    write_csv(outdir / "phase_diagram_d3.csv", ["d", "g", "Tc", "Tc_first_order"],
              rows)
    arr = np.array([r[1:] for r in rows])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(arr[:, 0], arr[:, 1], "k-", label="exact critical line")
        ax.plot(arr[:, 0], arr[:, 2], "r--",
                label="effective-temperature line (first order)")
        ax.set_xlabel("quantum coupling g")
        ax.set_ylabel("critical temperature")
        ax.set_title("d = 3 phase boundary")
        ax.legend()
        _save(fig, outdir, "phase_diagram_d3")

    lams = np.linspace(0.02, 0.99, 25)
    rows2 = []
    for d in (1.5, 1.8, 2.0, 2.5, 3.0):
        for lam in lams:
            rows2.append((d, float(lam), eq.critical_coupling(d, float(lam))))
    write_csv(outdir / "critical_coupling.csv", ["d", "lambda", "g_c"], rows2)
    arr2 = np.array(rows2)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for d in (1.5, 1.8, 2.0, 2.5, 3.0):
            sel = arr2[:, 0] == d
            ax.plot(arr2[sel, 1], arr2[sel, 2], label=f"d = {d}")
        ax.set_xlabel("anisotropy")
        ax.set_ylabel("critical coupling g_c")
        ax.set_title("zero-temperature critical lines (re-entrance at small "
                     "anisotropy for d < ~2.065)")
        ax.legend()
        _save(fig, outdir, "critical_coupling")


def render_quench_z(outdir: Path) -> None:
    from . import deepquench as dq
    t_grid = np.logspace(3, 6, 25)
    rows = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for d in (2.1, 2.4, 2.7, 3.0, 3.3):
            proto = dq.QuenchProtocol(d=d, g=0.2, gamma=1.0, C=1.0)
            traj = dq.solve_Z(proto, t_grid)
            u = traj.t * np.abs(traj.Z)
            ax.loglog(traj.t, u / u[0], label=f"d = {d}")
            rows.extend((d, t, z) for t, z in zip(traj.t, traj.Z))
        ax.set_xlabel("t")
        ax.set_ylabel("t |Z(t)| (normalised at first node)")
        ax.set_title("integrated multiplier across dimensions")
        ax.legend()
        _save(fig, outdir, "quench_z_dimensions")
    write_csv(outdir / "quench_z_dimensions.csv", ["d", "t", "Z"], rows)

    # toy initial state against its closed form
    proto0 = dq.QuenchProtocol(d=2.0, g=0.2, gamma=0.1, C=0.0)
    t0 = np.logspace(3, 5, 17)
    traj0 = dq.solve_Z(proto0, t0)
    pred = np.array([dq.asymptotic_Z(float(t), proto0)[0] for t in t0])
    write_csv(outdir / "quench_z_toy.csv", ["t", "Z", "Z_lambertW"],
              list(zip(t0, traj0.Z, pred)))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(t0, np.abs(traj0.Z), "o", label="solver")
        ax.loglog(t0, np.abs(pred), "-", label="Lambert-W form")
        ax.set_xlabel("t")
        ax.set_ylabel("|Z(t)|")
        ax.set_title("toy initial state (no momentum disorder), d = 2")
        ax.legend()
        _save(fig, outdir, "quench_z_toy")


def render_scaling_2d(outdir: Path) -> None:
    from . import deepquench as dq
    proto = dq.QuenchProtocol(d=2.0, g=0.1, gamma=1.0, C=0.25)
    phi = dq.phi_d2(proto.C, proto.g)
    rho = np.linspace(0.05, 8.0, 60)
    w = np.array([dq.scaling_function_2d(float(r), proto.g * phi)
                  for r in rho])
    rows = [(float(r), float(v)) for r, v in zip(rho, w)]
    write_csv(outdir / "scaling_function_2d.csv", ["rho", "W"], rows)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(rho, w / w[0])
        ax.set_xlabel("rho = sqrt(phi) R / t")
        ax.set_ylabel("W(rho) / W(0+)")
        ax.set_title("d = 2 real-space scaling function")
        _save(fig, outdir, "scaling_function_2d")


def render_semiclassical(outdir: Path) -> None:
    from . import semiclassical as sc
    from .lattice import watson_a1
    tc = 1.0 / watson_a1(3.0)
    rows = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for frac, style in ((1.2, "-"), (1.0, "--"), (0.6, ":")):
            p = ModelParams(d=3.0, g=0.0, T=frac * tc, gamma0=2.0)
            sol = sc.solve_volterra(p, 400.0, 0.02)
            ax.loglog(sol.t[1:], sol.G[1:], style,
                      label=f"T* = {frac} T*_c")
            stride = max(1, len(sol.t) // 400)
            rows.extend((frac, float(t), float(gv))
                        for t, gv in zip(sol.t[::stride], sol.G[::stride]))
        ax.set_xlabel("t")
        ax.set_ylabel("G(t)")
        ax.set_title("Volterra solution across the transition (d = 3)")
        ax.legend()
        _save(fig, outdir, "volterra_g")
    write_csv(outdir / "volterra_g.csv", ["T_over_Tc", "t", "G"], rows)


def render_initial_state(outdir: Path) -> None:
    from . import deepquench as dq
    ratios = np.logspace(-3, 3, 41)
    rows = []
    for r in ratios:
        # g0/T0 = r at T0 = 10 keeps z0 >> 1 across the sweep
        t0 = 10.0
        g0 = float(r) * t0
        c = dq.initial_c(t0, g0)
        rows.append((float(r), c, c * g0 / t0))
    write_csv(outdir / "initial_state.csv",
              ["g0_over_T0", "C", "C_over_classical"], rows)
    arr = np.array(rows)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(arr[:, 0], arr[:, 1])
        ax.axhline(0.25, color="k", ls=":", label="quantum-disorder limit 1/4")
        ax.set_xlabel("g_0 / T_0")
        ax.set_ylabel("C")
        ax.set_title("initial disorder scalar between its two limits")
        ax.legend()
        _save(fig, outdir, "initial_state")


_RENDERERS = {
    "phase-diagram": render_phase_diagram,
    "quench-z": render_quench_z,
    "scaling-2d": render_scaling_2d,
    "semiclassical": render_semiclassical,
    "initial-state": render_initial_state,
}


def render(kind: str, outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    _RENDERERS[kind](outdir)
    return 0
