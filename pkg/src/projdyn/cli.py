"""Command-line front end: simulate, check, analyze."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import battery
from .control import RegulationGains
from .engine import ControllerSpec, Scenario, project_to_constraints, run
from .errors import ProjdynError
from .kernel import build_projectors, default_rank_tol
from .loader import load_system
from .model import nonzero_pmp_eigenvalues, spectrum_of_mbar
from .systems import catalog, get_system


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="projdyn",
        description="Projection-operator constrained-dynamics simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and dump the trace")
    sim.add_argument("--system", help="catalog system name")
    sim.add_argument("--scenario-file", help="JSON scenario description")
    sim.add_argument("--horizon", type=float, default=10.0)
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--mu", default="auto",
                     help="virtual mass: positive number or 'auto'")
    sim.add_argument("--controller", choices=["none", "regulate"], default="none")
    sim.add_argument("--target", help="comma-separated q* for the regulator")
    sim.add_argument("--kp", type=float, default=10.0)
    sim.add_argument("--kd", type=float, default=10.0)
    sim.add_argument("--sigma", type=float, default=1.5)
    sim.add_argument("--out", help="trace output path")
    sim.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rank-tol", type=float, default=None)

    chk = sub.add_parser("check", help="run the invariant property battery")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--inject-fault", choices=["cbar-sign"], default=None,
                     help="deliberately break Cbar to self-test the harness")
    chk.add_argument("--report", help="write the JSON report here")

    ana = sub.add_parser("analyze", help="virtual-mass conditioning analysis")
    ana.add_argument("--system", required=True)
    ana.add_argument("--state", help="comma-separated q (defaults to the "
                                     "system's reference configuration)")
    ana.add_argument("--grid-points", type=int, default=61)
    ana.add_argument("--out", help="CSV output of the mu/cond sweep")
    ana.add_argument("--rank-tol", type=float, default=None)
    return parser


def _parse_vector(text, n, what):
    vals = np.array([float(v) for v in text.split(",")], dtype=float)
    if vals.size != n:
        raise ProjdynError(f"{what} must have {n} components, got {vals.size}")
    return vals


def _scenario_from_args(args) -> Scenario:
    if args.scenario_file:
        with open(args.scenario_file) as fh:
            spec = json.load(fh)
        system = (get_system(spec["system"]) if isinstance(spec["system"], str)
                  else load_system(spec["system"]))
        controller = None
        if spec.get("controller"):
            c = spec["controller"]
            n = system.n
            gains = RegulationGains(Kp=c.get("kp", 10.0) * np.eye(n),
                                    Kd=c.get("kd", 10.0) * np.eye(n),
                                    sigma=c.get("sigma", 1.5))
            controller = ControllerSpec(gains=gains, q_star=np.asarray(c["q_star"]))
        return Scenario(
            system=system,
            q0=np.asarray(spec["q0"], dtype=float),
            qdot0=np.asarray(spec.get("qdot0", np.zeros(system.n)), dtype=float),
            horizon=float(spec.get("horizon", 10.0)),
            dt=float(spec.get("dt", 1e-3)),
            mu=spec.get("mu", "auto"),
            controller=controller,
            events=tuple((float(t), tuple(act)) for t, act in spec.get("events", [])),
            initial_active=(tuple(spec["initial_active"])
                            if "initial_active" in spec else None),
            rank_tol=spec.get("rank_tol"),
        )

    if not args.system:
        raise ProjdynError("either --system or --scenario-file is required")
    system = get_system(args.system)
    q0, qdot0 = system.default_state
    mu = args.mu if args.mu == "auto" else float(args.mu)
    controller = None
    if args.controller == "regulate":
        if not args.target:
            raise ProjdynError("--controller regulate requires --target")
        q_star = _parse_vector(args.target, system.n, "--target")
        if system.residual is not None:
            q_star = project_to_constraints(q_star, system)
        gains = RegulationGains(Kp=args.kp * np.eye(system.n),
                                Kd=args.kd * np.eye(system.n), sigma=args.sigma)
        controller = ControllerSpec(gains=gains, q_star=q_star)
    return Scenario(
        system=system, q0=q0, qdot0=qdot0, horizon=args.horizon, dt=args.dt,
        mu=mu, controller=controller,
        events=tuple(system.default_events),
        initial_active=system.default_initial_active,
        rank_tol=args.rank_tol,
    )


def cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    trace = run(scenario)
    if args.out:
        if args.format == "csv":
            trace.to_csv(args.out)
        else:
            trace.to_jsonl(args.out)
    e0, e1 = trace.energy[0], trace.energy[-1]
    denom = abs(e0) if abs(e0) > 1e-12 else 1.0
    print(f"system: {scenario.system.name}")
    print(f"steps: {len(trace.t) - 1}  horizon: {trace.t[-1]:g} s")
    print(f"energy drift: {abs(e1 - e0) / denom:.3e} (relative)")
    print(f"final drift |A qdot|: {trace.drift[-1]:.3e}")
    if scenario.controller is not None:
        e_final = np.linalg.norm(trace.q[-1] - scenario.controller.q_star)
        print(f"final position error: {e_final:.3e}, "
              f"final speed: {np.linalg.norm(trace.qdot[-1]):.3e}")
    if trace.events:
        for ev in trace.events:
            print(f"event t={ev['time']:g}: rank {ev['rank_before']} -> "
                  f"{ev['rank_after']}, energy drop {ev['energy_drop']:.3e}")
    else:
        print("rank events: none")
    if args.out:
        print(f"trace written to {args.out} ({args.format})")
    return 0


def cmd_check(args) -> int:
    report = battery.run_battery(seed=args.seed, fault=args.inject_fault)
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status}  {c['name']}: max residual {c['max_residual']:.3e} "
              f"(tol {c['tolerance']:.1e})")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
    return 0 if report["passed"] else 1


def cmd_analyze(args) -> int:
    system = get_system(args.system)
    q0, qd0 = system.default_state
    if args.state:
        q0 = _parse_vector(args.state, system.n, "--state")
    proj = build_projectors(system.jacobian(q0, qd0), args.rank_tol)
    plant = system.plant(q0, qd0)
    lam = nonzero_pmp_eigenvalues(plant, proj, args.rank_tol)
    if lam.size == 0:
        print("P = 0 at this state: no admissible direction, cond(Mbar) = 1 "
              "for every mu")
        return 0
    lo, hi = float(lam[0]), float(lam[-1])
    print(f"system: {system.name}  rank(A) = {proj.rank}  dof = {system.n - proj.rank}")
    print(f"nonzero eigenvalues of P M P: {np.array2string(lam, precision=6)}")
    print(f"optimal-mu interval: [{lo:.6g}, {hi:.6g}]  "
          f"minimum cond(Mbar) = {hi / lo:.6g}")
    grid = np.geomspace(1e-3 * lo, 1e3 * hi, args.grid_points)
    rows = []
    for mu in grid:
        _, cond = spectrum_of_mbar(plant, proj, float(mu))
        rows.append((float(mu), cond))
    best = min(rows, key=lambda r: r[1])
    print(f"grid minimum: cond = {best[1]:.6g} at mu = {best[0]:.6g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("mu,cond_mbar\n")
            for mu, cond in rows:
                fh.write(f"{mu!r},{cond!r}\n")
        print(f"sweep written to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_analyze(args)
    except ProjdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
