"""Orthogonal projection operators built from the constraint matrix.

Given the Pfaffian constraint A(q) q' = 0, the admissible velocities live in
null(A).  Everything downstream is expressed through the orthogonal projector
P onto null(A), its complement Q = I - P, and the rate operators

    Lambda = -pinv(A) Adot,    Pdot = Lambda P + P Lambda^T,
    Omega  = Lambda - Lambda^T  (skew-symmetric).

All operators keep the fixed dimension n regardless of how many constraint
rows are active or independent, which is what makes rank drops and topology
switches unremarkable here.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteInputError


def default_rank_tol() -> float:
    """Relative singular-value cutoff; overridable via PROJDYN_RANK_TOL."""
    env = os.environ.get("PROJDYN_RANK_TOL")
    return float(env) if env else 1e-10


@dataclass(frozen=True)
class ConstraintJacobian:
    """Constraint matrix A and its total time derivative Adot, both m x n."""

    A: np.ndarray
    Adot: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Adot = np.atleast_2d(np.asarray(self.Adot, dtype=float))
        if A.shape != Adot.shape:
            raise ValueError(f"A {A.shape} and Adot {Adot.shape} differ in shape")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Adot))):
            raise NonFiniteInputError("constraint matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Adot", Adot)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class ProjectorBundle:
    """P, Q = I - P, Lambda, Pdot, Omega and the numerical rank of A."""

    P: np.ndarray
    Q: np.ndarray
    Lambda: np.ndarray
    Pdot: np.ndarray
    Omega: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.P.shape[0]


def pseudo_inverse(A, rank_tol: float | None = None):
    """Moore-Penrose pseudo-inverse by rank-truncated SVD.

    Returns (A_pinv, r) where r counts the singular values above
    rank_tol * sigma_max.  This is the epsilon -> 0 limit of the Tikhonov
    regularized inverse, realized the numerically standard way.
    """
    if rank_tol is None:
        rank_tol = default_rank_tol()
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise NonFiniteInputError("matrix to pseudo-invert must be finite")
    m, n = A.shape
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, m)), 0
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    if r == 0:
        return np.zeros((n, m)), 0
    return Vt[:r].T @ (U[:, :r] / s[:r]).T, r


def build_projectors(jac: ConstraintJacobian, rank_tol: float | None = None) -> ProjectorBundle:
    """Build P, Q, Lambda, Pdot and Omega at one state.

    P = I - pinv(A) A is symmetrized explicitly so that downstream identities
    (P^2 = P, P Lambda = 0, ...) hold to round-off rather than to SVD backward
    error in the asymmetric part.
    """
    Apinv, r = pseudo_inverse(jac.A, rank_tol)
    n = jac.n
    P = np.eye(n) - Apinv @ jac.A
    P = 0.5 * (P + P.T)
    Q = np.eye(n) - P
    Lam = -Apinv @ jac.Adot
    Pdot = Lam @ P + P @ Lam.T
    Omega = Lam - Lam.T
    return ProjectorBundle(P=P, Q=Q, Lambda=Lam, Pdot=Pdot, Omega=Omega, rank=r)


def pdot_fd_check(jac_at, t: float, h: float, rank_tol: float | None = None) -> float:
    """Residual between the closed-form Pdot and a central finite difference.

    jac_at(t) must return the ConstraintJacobian along a smooth path.  The
    caller asserts O(h^2) decay; the rank must not change on [t-h, t+h] for
    the difference quotient to be meaningful.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    plus = build_projectors(jac_at(t + h), rank_tol)
    minus = build_projectors(jac_at(t - h), rank_tol)
    center = build_projectors(jac_at(t), rank_tol)
    fd = (plus.P - minus.P) / (2.0 * h)
    return float(np.linalg.norm(fd - center.Pdot))
