"""Projector construction: examples, Moore-Penrose oracle, rate identities."""

from fractions import Fraction

import numpy as np
import pytest

from projdyn import (ConstraintJacobian, NonFiniteInputError, build_projectors,
                     pdot_fd_check, pseudo_inverse)


def mp_residuals(A, Apinv):
    """The four Moore-Penrose conditions, checked directly."""
    return [
        np.linalg.norm(A @ Apinv @ A - A),
        np.linalg.norm(Apinv @ A @ Apinv - Apinv),
        np.linalg.norm((A @ Apinv).T - A @ Apinv),
        np.linalg.norm((Apinv @ A).T - Apinv @ A),
    ]


def exact_rank(M):
    """Row-reduction rank over exact rationals (independent oracle)."""
    rows = [[Fraction(x).limit_denominator(10 ** 12) for x in row] for row in M]
    nrows, ncols = len(rows), len(rows[0])
    rank = 0
    col = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, nrows) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(nrows):
            if i != rank and rows[i][col] != 0:
                factor = rows[i][col] / rows[rank][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


class TestPseudoInverse:
    def test_row_vector(self):
        Apinv, r = pseudo_inverse(np.array([[0.0, -2.0]]))
        np.testing.assert_allclose(Apinv, [[0.0], [-0.5]], atol=1e-14)
        assert r == 1
        assert max(mp_residuals(np.array([[0.0, -2.0]]), Apinv)) < 1e-14

    def test_zero_matrix(self):
        Apinv, r = pseudo_inverse(np.zeros((1, 2)))
        np.testing.assert_array_equal(Apinv, np.zeros((2, 1)))
        assert r == 0

    def test_redundant_rows(self):
        A = np.array([[1.0, 0.0], [1.0, 0.0]])
        Apinv, r = pseudo_inverse(A)
        np.testing.assert_allclose(Apinv, [[0.5, 0.5], [0.0, 0.0]], atol=1e-14)
        assert r == 1
        assert max(mp_residuals(A, Apinv)) < 1e-14

    def test_rejects_nonfinite(self):
        with pytest.raises(NonFiniteInputError):
            pseudo_inverse(np.array([[np.nan, 1.0]]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            pseudo_inverse(np.eye(2), rank_tol=0.0)

    def test_random_moore_penrose(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m, n = rng.integers(1, 7, size=2)
            A = rng.standard_normal((m, n))
            Apinv, _ = pseudo_inverse(A)
            assert max(mp_residuals(A, Apinv)) < 1e-12

    def test_rank_against_row_reduction_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            m, n = rng.integers(1, 7, size=2)
            # integer matrices with deliberate row duplication half the time
            A = rng.integers(-3, 4, size=(m, n)).astype(float)
            if m > 1 and rng.random() < 0.5:
                A[-1] = A[0]
            _, r = pseudo_inverse(A)
            assert r == exact_rank(A)


class TestBuildProjectors:
    def test_pendulum_bottom(self):
        jac = ConstraintJacobian(A=[[0.0, -2.0]], Adot=[[0.0, 0.0]])
        proj = build_projectors(jac)
        np.testing.assert_allclose(proj.P, np.diag([1.0, 0.0]), atol=1e-14)
        np.testing.assert_allclose(proj.Q, np.diag([0.0, 1.0]), atol=1e-14)
        assert proj.rank == 1

    def test_pendulum_moving(self):
        w = 1.3
        jac = ConstraintJacobian(A=[[0.0, -2.0]], Adot=[[2 * w, 0.0]])
        proj = build_projectors(jac)
        np.testing.assert_allclose(proj.Lambda, [[0.0, 0.0], [w, 0.0]], atol=1e-14)
        np.testing.assert_allclose(proj.Pdot, [[0.0, w], [w, 0.0]], atol=1e-14)

    def test_inactive_constraints(self):
        jac = ConstraintJacobian(A=np.zeros((2, 3)), Adot=np.zeros((2, 3)))
        proj = build_projectors(jac)
        np.testing.assert_array_equal(proj.P, np.eye(3))
        np.testing.assert_array_equal(proj.Lambda, np.zeros((3, 3)))
        np.testing.assert_array_equal(proj.Pdot, np.zeros((3, 3)))
        assert proj.rank == 0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ConstraintJacobian(A=np.zeros((1, 2)), Adot=np.zeros((2, 2)))

    def test_random_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(2, 9))
            m = int(rng.integers(1, n + 1))
            A = rng.standard_normal((m, n))
            Adot = rng.standard_normal((m, n))
            jac = ConstraintJacobian(A=A, Adot=Adot)
            proj = build_projectors(jac)
            Apinv, r = pseudo_inverse(A)
            assert np.linalg.norm(proj.P @ proj.P - proj.P) < 1e-10
            assert np.linalg.norm(proj.P - proj.P.T) < 1e-10
            assert np.linalg.norm(A @ proj.P) / (1 + np.linalg.norm(A)) < 1e-10
            assert np.linalg.norm(proj.P @ Apinv) / (1 + np.linalg.norm(Apinv)) < 1e-10
            scale = 1 + np.linalg.norm(proj.Lambda)
            assert np.linalg.norm(proj.P @ proj.Lambda) / scale < 1e-10
            assert np.linalg.norm(proj.Lambda.T @ proj.P) / scale < 1e-10
            assert np.linalg.norm(proj.Omega + proj.Omega.T) == 0.0
            assert abs(np.trace(proj.P) - (n - r)) < 1e-9
            assert proj.rank == r


class TestPdotFiniteDifference:
    @staticmethod
    def pendulum_path(t):
        q = np.array([np.sin(t), -np.cos(t)])
        qd = np.array([np.cos(t), np.sin(t)])
        return ConstraintJacobian(A=2 * q[None, :], Adot=2 * qd[None, :])

    def test_pendulum_residual(self):
        assert pdot_fd_check(self.pendulum_path, 0.4, 1e-4) <= 1e-6

    def test_constant_jacobian(self):
        jac = ConstraintJacobian(A=[[1.0, 2.0]], Adot=[[0.0, 0.0]])
        assert pdot_fd_check(lambda t: jac, 0.0, 1e-4) < 1e-12

    def test_second_order_decay(self):
        rng = np.random.default_rng(5)
        A0, A1, A2 = (rng.standard_normal((2, 5)) for _ in range(3))

        def jac_at(t):
            return ConstraintJacobian(A=A0 + t * A1 + np.sin(t) * A2,
                                      Adot=A1 + np.cos(t) * A2)

        r1 = pdot_fd_check(jac_at, 0.2, 2e-3)
        r2 = pdot_fd_check(jac_at, 0.2, 1e-3)
        assert 3.5 < r1 / r2 < 4.5

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            pdot_fd_check(self.pendulum_path, 0.0, 0.0)
