"""Command-line driver.

Subcommands:
  run          single simulation with VTK/CSV/PGM output
  sweep        one run per swept parameter value plus a mode-amplitude summary
  verify       property-check suite, exit 1 on any failure
  convergence  time and mesh self-convergence rates

Exit codes: 0 success, 1 simulation or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, Params, parse_config, serialize_config
from .diagnostics import interface_radius_modes, record
from .fem import Field, apply_dirichlet, assemble_load, assemble_stiffness_scalar, l2_norm
from .linsolve import cg
from .mesh import boundary_nodes, build_rectangle
from .output import write_csv, write_pgm, write_vtk
from .stepper import advance, initial_state, with_tau
from .verify import run_all


def _load_params(path: str | None) -> Params:
    if path is None:
        return Params().resolve()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _snapshot_steps(params: Params) -> dict[int, float]:
    return {int(round(t / params.tau)): t for t in params.snapshot_times}


def simulate(params: Params, out_dir: Path, t_end: float | None = None, quiet: bool = False):
    """Run one simulation; returns (final state, diagnostic records, model)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    model = params.build_model()
    state = initial_state(model.mesh, model)
    records = [record(state, model)]
    T = params.T if t_end is None else t_end
    n_steps = int(round(T / params.tau))
    snaps = _snapshot_steps(params) if t_end is None else {}

    (out_dir / "config.txt").write_text(serialize_config(params), encoding="utf-8")
    if 0 in snaps:
        _emit_snapshot(state, model, out_dir, snaps[0])
    for k in range(1, n_steps + 1):
        prev = state
        state = advance(state, model)
        if k % params.record_every == 0 or k == n_steps:
            records.append(record(state, model, prev))
        if k in snaps:
            _emit_snapshot(state, model, out_dir, snaps[k])
        if not quiet and (k % 100 == 0 or k == n_steps):
            r = records[-1]
            print(
                f"  step {k}/{n_steps}  t={state.t:.4f}  u in [{r.min_u:.4f}, {r.max_u:.4f}]",
                flush=True,
            )
    write_csv(records, out_dir / "diag.csv")
    return state, records, model


def _emit_snapshot(state, model, out_dir: Path, t_label: float):
    tag = f"{t_label:.6g}".replace(".", "p")
    write_vtk(state, out_dir / f"snapshot_t{tag}.vtk", model)
    write_pgm(state.u, out_dir / f"u_t{tag}.pgm", 0.0, 1.0)


def cmd_run(args) -> int:
    params = _load_params(args.config)
    out_dir = Path(args.out)
    print(f"run: {params.nx}x{params.ny} mesh, tau={params.tau}, T={params.T}")
    state, records, _ = simulate(params, out_dir)
    print(f"done: {len(records)} records -> {out_dir / 'diag.csv'}")
    return 0


def cmd_sweep(args) -> int:
    params = _load_params(args.config)
    name = args.param or params.sweep_param
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    else:
        values = params.sweep_values
    t_snap = args.snapshot_time if args.snapshot_time is not None else params.sweep_snapshot_time
    if name not in {f.name for f in dataclasses.fields(Params)}:
        print(f"error: unknown sweep parameter '{name}'", file=sys.stderr)
        return 2

    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    n_modes = 6
    rows = []
    for v in values:
        run_params = dataclasses.replace(params)
        setattr(run_params, name, v)
        if name == "a0":  # keep the nucleus width tied to the interface scale
            run_params.w0 = float("nan")
        run_params.resolve()
        run_dir = out_root / f"{name}_{v:g}"
        print(f"sweep {name}={v:g} -> {run_dir}")
        state, _, model = simulate(run_params, run_dir, t_end=t_snap, quiet=True)
        write_vtk(state, run_dir / "final.vtk", model)
        write_pgm(state.u, run_dir / "final_u.pgm", 0.0, 1.0)
        amps = interface_radius_modes(
            state.u, model.seed.center, n_modes=n_modes, n_rays=360
        )
        rows.append((v, amps))
        print(f"  modes: r0={amps[0]:.4f}, m4={amps[4]:.5f}")

    header = "value," + ",".join(f"mode{i}" for i in range(n_modes + 1))
    lines = [header]
    for v, amps in rows:
        lines.append(",".join([f"{v:.17g}"] + [f"{a:.17g}" for a in amps]))
    (out_root / "summary.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"summary -> {out_root / 'summary.csv'}")
    return 0


def cmd_verify(args) -> int:
    _ = _load_params(args.config)
    results = run_all()
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def cmd_convergence(args) -> int:
    params = _load_params(args.config)
    n_ref = args.refinements

    print("mesh refinement (manufactured Poisson problem):")
    errs = []
    n = 16
    for _ in range(n_ref + 1):
        mesh = build_rectangle(1.0, 1.0, n, n)
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        exact = np.sin(np.pi * x) * np.sin(np.pi * y)
        K = assemble_stiffness_scalar(mesh, np.ones(mesh.n_nodes))
        b = assemble_load(mesh, 2.0 * np.pi**2 * exact, lumped=False)
        bn = boundary_nodes(mesh)
        A, b = apply_dirichlet(K, b, bn, np.zeros(bn.size))
        sol, _ = cg(A, b, tol=1e-12)
        errs.append(l2_norm(Field(mesh, sol - exact)))
        print(f"  n={n:4d}  L2 error {errs[-1]:.4e}")
        n *= 2
    for i in range(1, len(errs)):
        print(f"  order {np.log2(errs[i - 1] / errs[i]):.2f}")

    print("time refinement (self-convergence of the phase field):")
    small = dataclasses.replace(params)
    small.nx = small.ny = 32
    small.resolve()
    n_steps = 32
    finals = []
    for div in (1, 2, 4):
        model = small.build_model()
        model = with_tau(model, small.tau / div)
        state = initial_state(model.mesh, model)
        for _ in range(n_steps * div):
            state = advance(state, model)
        finals.append(state.u.values)
        print(f"  tau/{div}: reached t={state.t:.5f}")
    mesh = small.build_mesh()
    d01 = l2_norm(Field(mesh, finals[0] - finals[2]))
    d12 = l2_norm(Field(mesh, finals[1] - finals[2]))
    order = float(np.log2(max(d01 / max(d12, 1e-300) - 1.0, 1e-300)))
    print(f"  estimated time order: {order:.2f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dendrite2d",
        description="2D phase-field simulator of dendritic electrodeposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single simulation")
    p_run.add_argument("--config", help="key = value config file")
    p_run.add_argument("--out", default="out", help="output directory")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("--param", help="parameter name to sweep")
    p_sweep.add_argument("--values", help="comma-separated values")
    p_sweep.add_argument("--config", help="key = value config file")
    p_sweep.add_argument("--out", default="sweep_out", help="output directory")
    p_sweep.add_argument("--snapshot-time", type=float, dest="snapshot_time")

    p_verify = sub.add_parser("verify", help="run the property-check suite")
    p_verify.add_argument("--config", help="key = value config file")

    p_conv = sub.add_parser("convergence", help="self-convergence rates")
    p_conv.add_argument("--refinements", type=int, default=3)
    p_conv.add_argument("--config", help="key = value config file")

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0

    handlers = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "convergence": cmd_convergence,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
