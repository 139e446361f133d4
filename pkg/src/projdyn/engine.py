"""Fixed-step simulation of the non-minimal model with topology events.

Integration is classical fourth-order Runge-Kutta on (q, q').  Drift control
is the operator-consistent one: after every accepted step the velocity is
projected through P(q), so A(q) q' = 0 holds to round-off.  Constraint
activation events are handled as inelastic capture (the normal velocity
component is removed by the new P); matrix dimensions never change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import forces
from .control import RegulationGains, SetpointRegulator, lyapunov_value
from .errors import DivergenceError, InconsistentStateError
from .kernel import build_projectors, pseudo_inverse
from .model import assemble, optimal_mu
from .systems import MechanicalSystem


@dataclass(frozen=True)
class GeneralizedState:
    t: float
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float))


@dataclass(frozen=True)
class ControllerSpec:
    gains: RegulationGains
    q_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_star", np.asarray(self.q_star, dtype=float))


@dataclass
class Scenario:
    """Everything needed to reproduce one run."""

    system: MechanicalSystem
    q0: np.ndarray
    qdot0: np.ndarray
    horizon: float
    dt: float
    mu: object = "auto"                  # "auto" or a positive float
    mu_policy: str = "geometric-mean"
    controller: ControllerSpec | None = None
    force_schedule: object = None        # callable (t, q, qdot) -> f
    events: tuple = ()                   # ((time, active-row-tuple), ...)
    initial_active: tuple | None = None  # None = all rows active
    rank_tol: float | None = None
    drift_tol: float = 1e-12
    validate_initial: bool = True

    def __post_init__(self):
        self.q0 = np.asarray(self.q0, dtype=float)
        self.qdot0 = np.asarray(self.qdot0, dtype=float)
        if self.dt <= 0:
            raise ValueError("step size must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        times = [t for t, _ in self.events]
        if times != sorted(times):
            raise ValueError("events must be time-ordered")


TRACE_SCHEMA_VERSION = 1


@dataclass
class SimulationTrace:
    """Per-step records plus the event log; exportable as CSV or JSON lines."""

    n: int
    k: int
    t: np.ndarray = None
    q: np.ndarray = None
    qdot: np.ndarray = None
    qdd: np.ndarray = None
    f: np.ndarray = None
    u: np.ndarray = None
    f_c: np.ndarray = None
    kinetic: np.ndarray = None
    potential: np.ndarray = None
    energy: np.ndarray = None
    lyapunov: np.ndarray = None
    rank: np.ndarray = None
    cond_mbar: np.ndarray = None
    drift: np.ndarray = None
    events: list = field(default_factory=list)

    def columns(self):
        cols = ["t"]
        cols += [f"q{i}" for i in range(self.n)]
        cols += [f"qd{i}" for i in range(self.n)]
        cols += [f"qdd{i}" for i in range(self.n)]
        cols += [f"f{i}" for i in range(self.n)]
        cols += [f"u{i}" for i in range(self.k)]
        cols += [f"fc{i}" for i in range(self.n)]
        cols += ["kinetic", "potential", "energy", "lyapunov",
                 "rank", "cond_mbar", "drift"]
        return cols

    def _row(self, i):
        vals = [self.t[i]]
        vals += list(self.q[i]) + list(self.qdot[i]) + list(self.qdd[i])
        vals += list(self.f[i]) + list(self.u[i]) + list(self.f_c[i])
        vals += [self.kinetic[i], self.potential[i], self.energy[i],
                 self.lyapunov[i], self.rank[i], self.cond_mbar[i], self.drift[i]]
        return vals

    @staticmethod
    def _fmt(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.columns()) + "\n")
            for i in range(len(self.t)):
                fh.write(",".join(self._fmt(v) for v in self._row(i)) + "\n")

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            for i in range(len(self.t)):
                rec = {
                    "t": float(self.t[i]),
                    "q": list(map(float, self.q[i])),
                    "qdot": list(map(float, self.qdot[i])),
                    "qdd": list(map(float, self.qdd[i])),
                    "f": list(map(float, self.f[i])),
                    "u": list(map(float, self.u[i])),
                    "f_c": list(map(float, self.f_c[i])),
                    "kinetic": float(self.kinetic[i]),
                    "potential": float(self.potential[i]),
                    "energy": float(self.energy[i]),
                    "lyapunov": float(self.lyapunov[i]),
                    "rank": int(self.rank[i]),
                    "cond_mbar": float(self.cond_mbar[i]),
                    "drift": float(self.drift[i]),
                }
                fh.write(json.dumps(rec) + "\n")


def project_to_constraints(q_raw, system: MechanicalSystem, tol=1e-10,
                           max_iter=20, active=None) -> np.ndarray:
    """Retract a configuration onto the position-level constraint manifold.

    Gauss-Newton with the minimum-norm correction dq = -pinv(J) Phi; the
    constraint matrix A doubles as the Jacobian of Phi for holonomic rows.
    """
    if system.residual is None:
        raise ValueError(f"system {system.name!r} provides no position residual")
    q = np.asarray(q_raw, dtype=float).copy()
    rows = list(active) if active is not None else list(range(system.m))
    if not rows:
        return q
    for _ in range(max_iter):
        phi = np.asarray(system.residual(q), dtype=float)[rows]
        if np.linalg.norm(phi) <= tol:
            return q
        J = np.atleast_2d(np.asarray(system.constraint(q), dtype=float))[rows]
        Jp, r = pseudo_inverse(J)
        if r == 0:
            break
        q = q - Jp @ phi
    phi = np.asarray(system.residual(q), dtype=float)[rows]
    if np.linalg.norm(phi) <= tol:
        return q
    raise InconsistentStateError(
        f"retraction stalled with |Phi| = {np.linalg.norm(phi):.3e}")


class _Runner:
    """One simulation run; owns the phase state (active set, mu, controller)."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.system = scenario.system
        self.active = (tuple(range(self.system.m)) if scenario.initial_active is None
                       else tuple(scenario.initial_active))
        self.regulator = None
        if scenario.controller is not None:
            self.regulator = SetpointRegulator(q_star=scenario.controller.q_star,
                                               gains=scenario.controller.gains)
        self.mu_value = None

    # --- model evaluation -------------------------------------------------

    def _proj(self, q, qdot):
        jac = self.system.jacobian(q, qdot, active=self.active)
        return jac, build_projectors(jac, self.sc.rank_tol)

    def _select_mu(self, q, qdot):
        if self.sc.mu != "auto":
            self.mu_value = float(self.sc.mu)
            if self.mu_value <= 0:
                raise ValueError("mu must be positive")
            return
        _, proj = self._proj(q, qdot)
        plant = self.system.plant(q, qdot)
        self.mu_value = optimal_mu(plant, proj, policy=self.sc.mu_policy,
                                   rank_tol=self.sc.rank_tol)

    def _applied_force(self, t, q, qdot, plant, proj):
        if self.regulator is not None:
            return self.regulator.force(q, qdot, plant, proj,
                                        rank_tol=self.sc.rank_tol)
        if self.sc.force_schedule is not None:
            f = np.asarray(self.sc.force_schedule(t, q, qdot), dtype=float)
            return f, np.zeros(plant.k)
        return np.zeros(self.system.n), np.zeros(plant.k)

    def _deriv(self, t, q, qdot):
        _, proj = self._proj(q, qdot)
        plant = self.system.plant(q, qdot)
        model = assemble(plant, proj, self.mu_value, with_spectrum=False)
        f, _ = self._applied_force(t, q, qdot, plant, proj)
        qdd = forces.acceleration(plant, proj, model, f, qdot)
        return qdot, qdd

    # --- stepping ---------------------------------------------------------

    def _rk4(self, t, q, qdot, h):
        k1q, k1v = self._deriv(t, q, qdot)
        k2q, k2v = self._deriv(t + 0.5 * h, q + 0.5 * h * k1q, qdot + 0.5 * h * k1v)
        k3q, k3v = self._deriv(t + 0.5 * h, q + 0.5 * h * k2q, qdot + 0.5 * h * k2v)
        k4q, k4v = self._deriv(t + h, q + h * k3q, qdot + h * k3v)
        q_new = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        v_new = qdot + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(v_new))):
            raise DivergenceError("state became non-finite",
                                  last_state=GeneralizedState(t, q, qdot))
        return q_new, v_new

    def _apply_event(self, t, q, qdot, new_active):
        jac_old, proj_old = self._proj(q, qdot)
        rank_before = proj_old.rank
        M = np.asarray(self.system.mass(q), dtype=float)
        ke_before = 0.5 * float(qdot @ M @ qdot)
        self.active = tuple(new_active)
        _, proj_new = self._proj(q, qdot)
        qdot = proj_new.P @ qdot            # inelastic capture
        ke_after = 0.5 * float(qdot @ M @ qdot)
        self._select_mu(q, qdot)            # mu re-selected only at events
        return qdot, {
            "time": float(t),
            "rank_before": rank_before,
            "rank_after": proj_new.rank,
            "energy_drop": ke_before - ke_after,
            "active": tuple(self.active),
        }

    def advance(self, t, q, qdot, h, events_in_step):
        """Advance one grid step of size h, splitting at any event times."""
        logs = []
        t_cur = t
        for t_e, new_active in events_in_step:
            if t_e > t_cur:
                q, qdot = self._rk4(t_cur, q, qdot, t_e - t_cur)
                t_cur = t_e
            qdot, log = self._apply_event(t_cur, q, qdot, new_active)
            logs.append(log)
        t_end = t + h
        if t_end > t_cur:
            q, qdot = self._rk4(t_cur, q, qdot, t_end - t_cur)
        _, proj = self._proj(q, qdot)
        qdot = proj.P @ qdot                # drift control
        jac = self.system.jacobian(q, qdot, active=self.active)
        drift = np.linalg.norm(jac.A @ qdot)
        if drift > self.sc.drift_tol * (1.0 + np.linalg.norm(qdot)):
            raise DivergenceError(f"velocity drift {drift:.3e} exceeds tolerance",
                                  last_state=GeneralizedState(t_end, q, qdot))
        return q, qdot, logs

    # --- recording --------------------------------------------------------

    def record(self, t, q, qdot):
        jac, proj = self._proj(q, qdot)
        plant = self.system.plant(q, qdot)
        model = assemble(plant, proj, self.mu_value, with_spectrum=True)
        f, u = self._applied_force(t, q, qdot, plant, proj)
        qdd = forces.acceleration(plant, proj, model, f, qdot)
        f_c = forces.constraint_force(plant, proj, model, f, qdot)
        ke = 0.5 * float(qdot @ plant.M @ qdot)
        pe = float(self.system.potential(q)) if self.system.potential else 0.0
        V = np.nan
        if self.regulator is not None:
            V = lyapunov_value(q, qdot, self.regulator.q_star,
                               self.regulator.gains, model)
        return {
            "t": t, "q": q, "qdot": qdot, "qdd": qdd, "f": f, "u": u, "f_c": f_c,
            "kinetic": ke, "potential": pe, "energy": ke + pe, "lyapunov": V,
            "rank": proj.rank, "cond_mbar": model.cond,
            "drift": float(np.linalg.norm(jac.A @ qdot)),
        }


def step(state: GeneralizedState, scenario: Scenario) -> GeneralizedState:
    """One fixed step from an arbitrary state (no event handling)."""
    runner = _Runner(scenario)
    runner._select_mu(state.q, state.qdot)
    q, qdot, _ = runner.advance(state.t, state.q, state.qdot, scenario.dt, [])
    return GeneralizedState(t=state.t + scenario.dt, q=q, qdot=qdot)


def run(scenario: Scenario) -> SimulationTrace:
    """Integrate a scenario and return the full trace."""
    sc = scenario
    runner = _Runner(sc)
    q = sc.q0.copy()
    qdot = sc.qdot0.copy()

    if sc.validate_initial and sc.system.residual is not None and runner.active:
        phi = np.asarray(sc.system.residual(q), dtype=float)[list(runner.active)]
        if np.linalg.norm(phi) > 1e-8:
            raise InconsistentStateError(
                f"initial configuration violates constraints: |Phi| = "
                f"{np.linalg.norm(phi):.3e}; retract with project_to_constraints")
    _, proj0 = runner._proj(q, qdot)
    qdot = proj0.P @ qdot
    runner._select_mu(q, qdot)

    nsteps = int(round(sc.horizon / sc.dt))
    records = [runner.record(0.0, q, qdot)]
    events = list(sc.events)
    t = 0.0
    for i in range(nsteps):
        t_next = (i + 1) * sc.dt
        in_step = [e for e in events if t < e[0] <= t_next + 1e-15]
        try:
            q, qdot, logs = runner.advance(t, q, qdot, sc.dt, in_step)
        except DivergenceError as exc:
            raise DivergenceError(f"step {i + 1}: {exc}",
                                  last_state=exc.last_state) from exc
        events = [e for e in events if e not in in_step]
        t = t_next
        rec = runner.record(t, q, qdot)
        rec["_logs"] = logs
        records.append(rec)
    return _pack(records, sc)


def _pack(records, sc: Scenario) -> SimulationTrace:
    n = sc.system.n
    k = records[0]["u"].shape[0]
    trace = SimulationTrace(n=n, k=k)
    trace.t = np.array([r["t"] for r in records])
    for key in ("q", "qdot", "qdd", "f", "u", "f_c"):
        setattr(trace, "f_c" if key == "f_c" else key,
                np.array([r[key] for r in records]))
    for key in ("kinetic", "potential", "energy", "lyapunov", "cond_mbar", "drift"):
        setattr(trace, key, np.array([r[key] for r in records]))
    trace.rank = np.array([r["rank"] for r in records], dtype=int)
    trace.events = [log for r in records for log in r.get("_logs", [])]
    return trace
