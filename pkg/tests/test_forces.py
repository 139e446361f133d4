"""Force resolution: oblique projectors, accelerations, reactions, DAE oracle."""

import numpy as np
import pytest

from projdyn import (AdmissibilityError, ConstraintJacobian, InvalidTargetError,
                     PlantMatrices, acceleration, acceleration_nonminimal,
                     assemble, build_oblique, build_projectors,
                     check_admissibility, constraint_force, decompose,
                     force_split_for_control, kkt_oracle, mbar_inverse_p,
                     pseudo_inverse, resolve_actuation)


def pendulum_proj(q=(0.0, -1.0), qd=(0.0, 0.0)):
    q = np.asarray(q, float)
    qd = np.asarray(qd, float)
    return build_projectors(ConstraintJacobian(A=2 * q[None, :],
                                               Adot=2 * qd[None, :]))


def pendulum_plant(B=None):
    return PlantMatrices(M=np.eye(2), C=np.zeros((2, 2)),
                         f_g=np.array([0.0, -9.81]),
                         B=np.eye(2) if B is None else B)


def random_instance(rng, n=None, m=None, k=None):
    n = n or int(rng.integers(2, 7))
    m = m or int(rng.integers(1, n))
    k = k or n
    X = rng.standard_normal((n, n))
    plant = PlantMatrices(M=X @ X.T + n * np.eye(n),
                          C=rng.standard_normal((n, n)),
                          f_g=rng.standard_normal(n),
                          B=rng.standard_normal((n, k)))
    proj = build_projectors(ConstraintJacobian(A=rng.standard_normal((m, n)),
                                               Adot=rng.standard_normal((m, n))))
    model = assemble(plant, proj, mu=float(rng.uniform(0.3, 3.0)),
                     with_spectrum=False)
    return plant, proj, model


class TestAdmissibility:
    def test_identity_input_map(self):
        ok, diag = check_admissibility(np.eye(2), pendulum_proj())
        assert ok and diag == {"rank_PB": 1, "rank_P": 1}

    def test_orthogonal_actuator_fails(self):
        ok, diag = check_admissibility(np.array([0.0, 1.0]), pendulum_proj())
        assert not ok and diag["rank_PB"] == 0

    def test_gamma_raises_when_inadmissible(self):
        plant = pendulum_plant(B=np.array([[0.0], [1.0]]))
        proj = pendulum_proj()
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        with pytest.raises(AdmissibilityError):
            build_oblique(plant, proj, model)

    def test_nullspace_basis_gives_orthogonal_r(self):
        # B spanning null(A) exactly makes R an orthogonal projector (= P)
        rng = np.random.default_rng(2)
        for _ in range(20):
            n, m = 5, 2
            A = rng.standard_normal((m, n))
            proj = build_projectors(ConstraintJacobian(A=A, Adot=np.zeros((m, n))))
            _, _, vt = np.linalg.svd(A)
            B = vt[m:].T  # orthonormal basis of null(A)
            plant = PlantMatrices(M=np.eye(n), C=np.zeros((n, n)),
                                  f_g=np.zeros(n), B=B)
            model = assemble(plant, proj, mu=1.0, with_spectrum=False)
            ob = build_oblique(plant, proj, model)
            np.testing.assert_allclose(ob.R, ob.R.T, atol=1e-10)
            np.testing.assert_allclose(ob.R, proj.P, atol=1e-10)


class TestObliqueIdentities:
    def test_pendulum_s(self):
        plant = pendulum_plant()
        proj = pendulum_proj()
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        ob = build_oblique(plant, proj, model)
        np.testing.assert_allclose(ob.S, np.diag([0.0, 1.0]), atol=1e-12)
        np.testing.assert_allclose(ob.R, proj.P, atol=1e-12)

    def test_unconstrained_s_vanishes(self):
        rng = np.random.default_rng(4)
        plant, _, _ = random_instance(rng, n=3, m=1)
        proj = build_projectors(ConstraintJacobian(A=np.zeros((1, 3)),
                                                   Adot=np.zeros((1, 3))))
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        ob = build_oblique(plant, proj, model)
        np.testing.assert_allclose(ob.S, np.zeros((3, 3)), atol=1e-12)

    def test_random_identities(self):
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 100:
            plant, proj, model = random_instance(rng)
            # keep instances where actuation is comfortably admissible
            sv = np.linalg.svd(proj.P @ plant.B, compute_uv=False)
            if sv[min(len(sv), proj.n - proj.rank) - 1] < 0.1:
                continue
            checked += 1
            ob = build_oblique(plant, proj, model)
            P, R, S, Q = proj.P, ob.R, ob.S, proj.Q
            scale = 1 + np.linalg.norm(R) ** 2 + np.linalg.norm(S) ** 2
            for name, X in [("R2", R @ R - R), ("PR", P @ R - P),
                            ("RP", R @ P - R), ("S2", S @ S - S),
                            ("QS", Q @ S - S), ("SQ", S @ Q - Q),
                            ("PS", P @ S)]:
                assert np.linalg.norm(X) / scale < 1e-10, name

    def test_mbar_inverse_p_equals_pinv_pmp(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            plant, proj, model = random_instance(rng)
            X = mbar_inverse_p(model, proj)
            pinv_pmp, _ = pseudo_inverse(proj.P @ plant.M @ proj.P)
            np.testing.assert_allclose(X, pinv_pmp, atol=1e-9)
            np.testing.assert_allclose(X, X.T, atol=1e-9)


class TestAcceleration:
    def test_pendulum_swing(self):
        w = 1.7
        plant = pendulum_plant()
        proj = pendulum_proj(qd=(w, 0.0))
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        qdd = acceleration(plant, proj, model, np.array([0.0, 9.81]),
                           np.array([w, 0.0]))
        # gravity cancelled by the applied force: pure centripetal acceleration
        np.testing.assert_allclose(qdd, [0.0, w ** 2], atol=1e-12)

    def test_static_equilibrium(self):
        plant = pendulum_plant()
        proj = pendulum_proj()
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        qdd = acceleration(plant, proj, model, np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(qdd, np.zeros(2), atol=1e-12)

    def test_unconstrained_newton(self):
        rng = np.random.default_rng(6)
        plant, _, _ = random_instance(rng, n=4, m=1)
        proj = build_projectors(ConstraintJacobian(A=np.zeros((1, 4)),
                                                   Adot=np.zeros((1, 4))))
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        f = rng.standard_normal(4)
        qd = rng.standard_normal(4)
        qdd = acceleration(plant, proj, model, f, qd)
        expect = np.linalg.solve(plant.M, f + plant.f_g - plant.C @ qd)
        np.testing.assert_allclose(qdd, expect, atol=1e-10)

    def test_two_routes_agree(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            plant, proj, model = random_instance(rng)
            f = rng.standard_normal(proj.n)
            qd = proj.P @ rng.standard_normal(proj.n)
            a1 = acceleration(plant, proj, model, f, qd)
            a2 = acceleration_nonminimal(plant, proj, model, f, qd)
            assert np.linalg.norm(a1 - a2) / (1 + np.linalg.norm(a1)) < 1e-9


class TestConstraintForce:
    def test_pendulum_tension(self):
        # string tension m (g + w^2 L) pointing back to the pivot
        w = 1.7
        plant = pendulum_plant()
        proj = pendulum_proj(qd=(w, 0.0))
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        f_c = constraint_force(plant, proj, model, np.zeros(2),
                               np.array([w, 0.0]))
        np.testing.assert_allclose(f_c, [0.0, 9.81 + w ** 2], atol=1e-10)

    def test_reaction_is_normal(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            plant, proj, model = random_instance(rng)
            f = rng.standard_normal(proj.n)
            qd = proj.P @ rng.standard_normal(proj.n)
            f_c = constraint_force(plant, proj, model, f, qd)
            assert np.linalg.norm(proj.P @ f_c) / (1 + np.linalg.norm(f_c)) < 1e-9


class TestKktOracle:
    def test_matches_projection_route(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, n))
            X = rng.standard_normal((n, n))
            plant = PlantMatrices(M=X @ X.T + n * np.eye(n),
                                  C=rng.standard_normal((n, n)),
                                  f_g=rng.standard_normal(n), B=np.eye(n))
            A = rng.standard_normal((m, n))
            if rng.random() < 0.3 and m > 1:
                A[-1] = 2.0 * A[0]  # force rank deficiency sometimes
            jac = ConstraintJacobian(A=A, Adot=rng.standard_normal((m, n)))
            proj = build_projectors(jac)
            model = assemble(plant, proj, mu=1.0, with_spectrum=False)
            f = rng.standard_normal(n)
            qd = proj.P @ rng.standard_normal(n)
            qdd_o, lam = kkt_oracle(plant, jac, f, qd)
            qdd = acceleration(plant, proj, model, f, qd)
            f_c = constraint_force(plant, proj, model, f, qd)
            scale = 1 + np.linalg.norm(qdd_o)
            assert np.linalg.norm(qdd - qdd_o) / scale < 1e-8
            assert np.linalg.norm(f_c - (-jac.A.T @ lam)) / scale < 1e-8


class TestActuation:
    def test_identity_map(self):
        proj = pendulum_proj()
        u, f = resolve_actuation(np.array([3.0, 0.0]), np.eye(2), proj)
        np.testing.assert_allclose(u, [3.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(f, [3.0, 0.0], atol=1e-12)

    def test_redundant_columns_split_equally(self):
        proj = pendulum_proj()
        B = np.array([[1.0, 1.0], [0.0, 0.0]])
        u, f = resolve_actuation(np.array([3.0, 0.0]), B, proj)
        np.testing.assert_allclose(u, [1.5, 1.5], atol=1e-12)
        np.testing.assert_allclose(f, [3.0, 0.0], atol=1e-12)

    def test_minimum_norm_against_normal_equations(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            n, m, k = 5, 2, 4
            A = rng.standard_normal((m, n))
            proj = build_projectors(ConstraintJacobian(A=A, Adot=np.zeros((m, n))))
            B = rng.standard_normal((n, k))
            ok, _ = check_admissibility(B, proj)
            if not ok:
                continue
            f_par = proj.P @ rng.standard_normal(n)
            u, f = resolve_actuation(f_par, B, proj)
            np.testing.assert_allclose(proj.P @ B @ u, f_par, atol=1e-9)
            # oracle: min-norm u via lstsq on P B u = f_par
            u_star, *_ = np.linalg.lstsq(proj.P @ B, f_par, rcond=None)
            np.testing.assert_allclose(u, u_star, atol=1e-8)


class TestForceSplit:
    def test_natural_reaction_needs_no_input(self):
        rng = np.random.default_rng(43)
        plant, proj, model = random_instance(rng)
        qd = proj.P @ rng.standard_normal(proj.n)
        f_par = proj.P @ rng.standard_normal(proj.n)
        natural = constraint_force(plant, proj, model, f_par, qd)
        f_perp = force_split_for_control(f_par, natural, plant, proj, model, qd)
        assert np.linalg.norm(f_perp) / (1 + np.linalg.norm(natural)) < 1e-9

    def test_round_trip(self):
        # applying the computed f_perp must realize the requested reaction
        rng = np.random.default_rng(47)
        for _ in range(20):
            plant, proj, model = random_instance(rng)
            qd = proj.P @ rng.standard_normal(proj.n)
            f_par = proj.P @ rng.standard_normal(proj.n)
            fc_d = proj.Q @ rng.standard_normal(proj.n)
            f_perp = force_split_for_control(f_par, fc_d, plant, proj, model, qd)
            realized = constraint_force(plant, proj, model, f_par + f_perp, qd)
            scale = 1 + np.linalg.norm(fc_d)
            assert np.linalg.norm(proj.Q @ (realized - fc_d)) / scale < 1e-8

    def test_rejects_motion_space_target(self):
        plant = pendulum_plant()
        proj = pendulum_proj()
        model = assemble(plant, proj, mu=1.0, with_spectrum=False)
        with pytest.raises(InvalidTargetError):
            force_split_for_control(np.zeros(2), np.array([1.0, 0.0]),
                                    plant, proj, model, np.zeros(2))

    def test_decompose_consistency(self):
        rng = np.random.default_rng(53)
        plant, proj, model = random_instance(rng, n=4, m=2, k=4)
        sv = np.linalg.svd(proj.P @ plant.B, compute_uv=False)
        assert sv[proj.n - proj.rank - 1] > 1e-6
        f = rng.standard_normal(4)
        qd = proj.P @ rng.standard_normal(4)
        dec = decompose(plant, proj, model, f, qd)
        np.testing.assert_allclose(dec.f_par + dec.f_perp, f, atol=1e-10)
        np.testing.assert_allclose(proj.P @ plant.B @ dec.u, dec.f_par,
                                   atol=1e-8)
