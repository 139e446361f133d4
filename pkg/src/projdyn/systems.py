"""Benchmark mechanical systems in Cartesian (dependent) coordinates.

Every system supplies analytic M, C, f_g, A, Adot, B and, where meaningful,
the position-level residual Phi and potential energy.  The catalog is chosen
to exercise the hard cases: a kinematic singularity (slider-crank at the
folded configuration), redundant constraint rows, and a run-time topology
switch (particle capture).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernel import ConstraintJacobian

GRAVITY = 9.81


@dataclass(frozen=True)
class MechanicalSystem:
    name: str
    n: int
    m: int
    k: int
    mass: Callable
    coriolis: Callable
    gravity_force: Callable
    constraint: Callable
    input_map: Callable
    constraint_rate: Callable | None = None
    residual: Callable | None = None
    potential: Callable | None = None
    sample_state: Callable | None = None
    default_state: tuple | None = None
    default_initial_active: tuple | None = None   # None = all rows active
    default_events: tuple = ()
    notes: str = ""

    def jacobian(self, q, qdot, active=None) -> ConstraintJacobian:
        """A and Adot at a state, with inactive rows zeroed (fixed dimension).

        Falls back to a central finite difference of A along qdot when
        the system omits an analytic Adot.
        """
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        A = np.atleast_2d(np.asarray(self.constraint(q), dtype=float))
        if self.constraint_rate is not None:
            Adot = np.atleast_2d(np.asarray(self.constraint_rate(q, qdot), dtype=float))
        else:
            h = 1e-6 * (1.0 + np.linalg.norm(q))
            Ap = np.atleast_2d(np.asarray(self.constraint(q + h * qdot), dtype=float))
            Am = np.atleast_2d(np.asarray(self.constraint(q - h * qdot), dtype=float))
            Adot = (Ap - Am) / (2.0 * h)
        if active is not None:
            mask = np.zeros(self.m, dtype=bool)
            mask[list(active)] = True
            A = np.where(mask[:, None], A, 0.0)
            Adot = np.where(mask[:, None], Adot, 0.0)
        return ConstraintJacobian(A=A, Adot=Adot)

    def plant(self, q, qdot):
        from .model import PlantMatrices
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        return PlantMatrices(M=self.mass(q), C=self.coriolis(q, qdot),
                             f_g=self.gravity_force(q), B=self.input_map(q))


def pendulum(mass_val=1.0, length=1.0, g=GRAVITY) -> MechanicalSystem:
    """Point mass on a rigid massless rod, coordinates q = (x, y)."""

    def sample(rng):
        th = rng.uniform(-np.pi, np.pi)
        w = rng.uniform(-2.0, 2.0)
        q = length * np.array([np.sin(th), -np.cos(th)])
        qd = w * length * np.array([np.cos(th), np.sin(th)])
        return q, qd

    return MechanicalSystem(
        name="pendulum", n=2, m=1, k=2,
        mass=lambda q: mass_val * np.eye(2),
        coriolis=lambda q, qd: np.zeros((2, 2)),
        gravity_force=lambda q: np.array([0.0, -mass_val * g]),
        constraint=lambda q: 2.0 * q[None, :],
        constraint_rate=lambda q, qd: 2.0 * qd[None, :],
        input_map=lambda q: np.eye(2),
        residual=lambda q: np.array([q @ q - length ** 2]),
        potential=lambda q: mass_val * g * q[1],
        sample_state=sample,
        default_state=(np.array([length, 0.0]), np.zeros(2)),
        notes=f"m={mass_val}, L={length}, g={g}",
    )


def redundant_pendulum(mass_val=1.0, length=1.0, g=GRAVITY) -> MechanicalSystem:
    """Pendulum with its constraint row duplicated: rank(A) = 1 < m = 2."""
    base = pendulum(mass_val, length, g)

    return MechanicalSystem(
        name="redundant-pendulum", n=2, m=2, k=2,
        mass=base.mass, coriolis=base.coriolis, gravity_force=base.gravity_force,
        constraint=lambda q: np.vstack([2.0 * q, 2.0 * q]),
        constraint_rate=lambda q, qd: np.vstack([2.0 * qd, 2.0 * qd]),
        input_map=base.input_map,
        residual=lambda q: np.array([q @ q - length ** 2, q @ q - length ** 2]),
        potential=base.potential,
        sample_state=base.sample_state,
        default_state=base.default_state,
        notes=base.notes + ", duplicated constraint row",
    )


def double_pendulum(m1=1.0, m2=1.0, l1=1.0, l2=1.0, g=GRAVITY) -> MechanicalSystem:
    """Two point masses chained by rigid rods, q = (x1, y1, x2, y2)."""

    def constraint(q):
        x1, y1, x2, y2 = q
        return np.array([
            [2 * x1, 2 * y1, 0.0, 0.0],
            [-2 * (x2 - x1), -2 * (y2 - y1), 2 * (x2 - x1), 2 * (y2 - y1)],
        ])

    def constraint_rate(q, qd):
        dx1, dy1, dx2, dy2 = qd
        return np.array([
            [2 * dx1, 2 * dy1, 0.0, 0.0],
            [-2 * (dx2 - dx1), -2 * (dy2 - dy1), 2 * (dx2 - dx1), 2 * (dy2 - dy1)],
        ])

    def residual(q):
        x1, y1, x2, y2 = q
        return np.array([x1 ** 2 + y1 ** 2 - l1 ** 2,
                         (x2 - x1) ** 2 + (y2 - y1) ** 2 - l2 ** 2])

    def sample(rng):
        t1, t2 = rng.uniform(-np.pi, np.pi, size=2)
        w1, w2 = rng.uniform(-1.5, 1.5, size=2)
        p1 = l1 * np.array([np.sin(t1), -np.cos(t1)])
        p2 = p1 + l2 * np.array([np.sin(t2), -np.cos(t2)])
        v1 = w1 * l1 * np.array([np.cos(t1), np.sin(t1)])
        v2 = v1 + w2 * l2 * np.array([np.cos(t2), np.sin(t2)])
        return np.concatenate([p1, p2]), np.concatenate([v1, v2])

    q0 = np.array([l1, 0.0, l1, -l2])

    return MechanicalSystem(
        name="double-pendulum", n=4, m=2, k=4,
        mass=lambda q: np.diag([m1, m1, m2, m2]),
        coriolis=lambda q, qd: np.zeros((4, 4)),
        gravity_force=lambda q: np.array([0.0, -m1 * g, 0.0, -m2 * g]),
        constraint=constraint, constraint_rate=constraint_rate,
        input_map=lambda q: np.eye(4),
        residual=residual,
        potential=lambda q: g * (m1 * q[1] + m2 * q[3]),
        sample_state=sample,
        default_state=(q0, np.zeros(4)),
        notes=f"m1={m1}, m2={m2}, L1={l1}, L2={l2}, g={g}",
    )


def slider_crank(m1=1.0, m2=1.0, l1=1.0, l2=1.0, g=GRAVITY) -> MechanicalSystem:
    """Planar slider-crank with q = (x1, y1, x2, y2): crank pin and slider.

    With l1 = l2 the folded configuration q = (0, l1, 0, 0) drops the
    constraint rank from 3 to 2 (kinematic singularity).
    """

    def constraint(q):
        x1, y1, x2, y2 = q
        return np.array([
            [2 * x1, 2 * y1, 0.0, 0.0],
            [-2 * (x2 - x1), -2 * (y2 - y1), 2 * (x2 - x1), 2 * (y2 - y1)],
            [0.0, 0.0, 0.0, 1.0],
        ])

    def constraint_rate(q, qd):
        dx1, dy1, dx2, dy2 = qd
        return np.array([
            [2 * dx1, 2 * dy1, 0.0, 0.0],
            [-2 * (dx2 - dx1), -2 * (dy2 - dy1), 2 * (dx2 - dx1), 2 * (dy2 - dy1)],
            [0.0, 0.0, 0.0, 0.0],
        ])

    def residual(q):
        x1, y1, x2, y2 = q
        return np.array([x1 ** 2 + y1 ** 2 - l1 ** 2,
                         (x2 - x1) ** 2 + (y2 - y1) ** 2 - l2 ** 2,
                         y2])

    def sample(rng):
        # crank angles where the slider position is real-valued
        while True:
            th = rng.uniform(-np.pi, np.pi)
            y1 = l1 * np.sin(th)
            if abs(y1) < l2 * 0.95:
                break
        x1 = l1 * np.cos(th)
        x2 = x1 + np.sqrt(l2 ** 2 - y1 ** 2)
        q = np.array([x1, y1, x2, 0.0])
        # admissible velocity from the crank rate
        w = rng.uniform(-1.5, 1.5)
        v1 = w * l1 * np.array([-np.sin(th), np.cos(th)])
        dx2 = v1[0] - y1 * v1[1] / np.sqrt(l2 ** 2 - y1 ** 2)
        qd = np.array([v1[0], v1[1], dx2, 0.0])
        return q, qd

    return MechanicalSystem(
        name="slider-crank", n=4, m=3, k=4,
        mass=lambda q: np.diag([m1, m1, m2, m2]),
        coriolis=lambda q, qd: np.zeros((4, 4)),
        gravity_force=lambda q: np.array([0.0, -m1 * g, 0.0, -m2 * g]),
        constraint=constraint, constraint_rate=constraint_rate,
        input_map=lambda q: np.eye(4),
        residual=residual,
        potential=lambda q: g * (m1 * q[1] + m2 * q[3]),
        sample_state=sample,
        default_state=(np.array([l1, 0.0, l1 + l2, 0.0]), np.zeros(4)),
        notes=f"singular at q = (0, {l1}, 0, 0) when l1 = l2",
    )


def singular_configuration(system: MechanicalSystem) -> np.ndarray:
    """The rank-drop configuration of the slider-crank catalog entry."""
    if system.name != "slider-crank":
        raise ValueError("only the slider-crank entry has a tabulated singularity")
    return np.array([0.0, 1.0, 0.0, 0.0])


def switching_particle(mass_val=1.0) -> MechanicalSystem:
    """Free planar particle that acquires the constraint y = const at t = 1 s.

    The constraint row is defined for all time; the event schedule merely
    activates it, so every matrix keeps its dimension through the switch.
    """

    def sample(rng):
        return rng.uniform(-1, 1, size=2), rng.uniform(-1, 1, size=2)

    return MechanicalSystem(
        name="switching-particle", n=2, m=1, k=2,
        mass=lambda q: mass_val * np.eye(2),
        coriolis=lambda q, qd: np.zeros((2, 2)),
        gravity_force=lambda q: np.zeros(2),
        constraint=lambda q: np.array([[0.0, 1.0]]),
        constraint_rate=lambda q, qd: np.zeros((1, 2)),
        input_map=lambda q: np.eye(2),
        residual=None,
        potential=lambda q: 0.0,
        sample_state=sample,
        default_state=(np.zeros(2), np.array([1.0, 0.5])),
        default_initial_active=(),
        default_events=((1.0, (0,)),),
        notes="constraint row activated by the event schedule",
    )


def catalog() -> list[MechanicalSystem]:
    return [pendulum(), double_pendulum(), slider_crank(),
            switching_particle(), redundant_pendulum()]


def get_system(name: str) -> MechanicalSystem:
    for sys_ in catalog():
        if sys_.name == name:
            return sys_
    raise KeyError(f"unknown system {name!r}; known: "
                   + ", ".join(s.name for s in catalog()))


def self_test(system: MechanicalSystem, samples=100, rng=None, fd_step=1e-5) -> dict:
    """Verify the structural invariants of a system at random reachable states.

    Checks M symmetry and positive definiteness, skew-symmetry of
    (dM/dt - 2C), and the analytic Adot against a finite difference of A
    along the velocity.  Report-only; returns the worst violations.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if system.sample_state is None:
        raise ValueError(f"system {system.name!r} has no state sampler")
    worst = {"M_asym": 0.0, "M_min_eig": np.inf, "skew": 0.0, "Adot_fd": 0.0}
    for _ in range(samples):
        q, qd = system.sample_state(rng)
        M = np.asarray(system.mass(q), dtype=float)
        C = np.asarray(system.coriolis(q, qd), dtype=float)
        worst["M_asym"] = max(worst["M_asym"], float(np.linalg.norm(M - M.T)))
        worst["M_min_eig"] = min(worst["M_min_eig"],
                                 float(np.linalg.eigvalsh(0.5 * (M + M.T))[0]))
        Mdot = (np.asarray(system.mass(q + fd_step * qd), dtype=float)
                - np.asarray(system.mass(q - fd_step * qd), dtype=float)) / (2 * fd_step)
        X = Mdot - 2.0 * C
        worst["skew"] = max(worst["skew"], float(np.linalg.norm(X + X.T)))
        if system.constraint_rate is not None:
            jac = system.jacobian(q, qd)
            Afd = (np.atleast_2d(system.constraint(q + fd_step * qd))
                   - np.atleast_2d(system.constraint(q - fd_step * qd))) / (2 * fd_step)
            worst["Adot_fd"] = max(worst["Adot_fd"],
                                   float(np.linalg.norm(jac.Adot - Afd)))
    worst["passed"] = (worst["M_asym"] <= 1e-12 and worst["M_min_eig"] > 0.0
                       and worst["skew"] <= 1e-6 and worst["Adot_fd"] <= 1e-6)
    return worst
