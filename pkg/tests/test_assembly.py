"""Quadrature and global assembly.

Two oracles: a slow reference assembly built from the pointwise kinematics
functions (dual route for the vectorized fast path), and finite differences
(every assembled tangent must be the Jacobian of its residual).
"""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import fd_jacobian, rel_err
from splinerod import boundary_constraints, build_extraction, eval_basis, make_spline_space
from splinerod.assembly import (
    assemble_dynamic_step,
    assemble_static,
    basis_tables,
    dynamic_step_constant,
    fields_at,
    gauss_rule,
    mass_matrix,
)
from splinerod.forces import (
    FlowLoad,
    Follower2D,
    FreestreamProfile,
    Gravity,
    PointLoad,
    Pulsating,
    TipMoment,
)
from splinerod.kinematics import (
    DegenerateConfigurationError,
    MaterialParams,
    b_matrix_point,
    geometric_stiffness_blocks,
    point_kinematics,
    strain_stress,
)
from splinerod.splines import straight_configuration

MAT = MaterialParams(EA=120.0, EI=18.0, A_rho=1.7, I_rho=0.004, alpha=1.0)


def wiggled_config(space, rng, amp=0.15):
    """Straight rod with a smooth random wiggle (non-degenerate)."""
    Q = straight_configuration(space, np.zeros(3), np.array([0.0, 0.0, 1.0]))
    Q = Q + amp * rng.normal(size=Q.shape) * space.element_length
    return Q.reshape(-1)


def reference_internal(space, q, mat, n_q):
    """Pointwise-loop assembly of internal force and stiffness."""
    xi, wts = gauss_rule(n_q)
    a = space.degree + 1
    n_dof = space.n_dof
    f = np.zeros(n_dof)
    K = np.zeros((n_dof, n_dof))
    h = space.element_length
    Q = q.reshape(-1, 3)
    C_hat = np.diag([mat.EA] * 3 + [mat.EI] * 3)
    for e in range(space.n_elements):
        for g in range(n_q):
            s = (e + 0.5 * (xi[g] + 1.0)) * h
            ev = eval_basis(space, s, max_deriv=2)
            idx = np.arange(ev.first_index, ev.first_index + a)
            Qe = Q[idx]
            kin = point_kinematics(ev.values @ Qe, ev.d1 @ Qe, ev.d2 @ Qe)
            ss = strain_stress(kin, mat)
            B = b_matrix_point(kin, ev.d1, ev.d2)
            w = wts[g] * h / 2.0
            dofs = (3 * idx[:, None] + np.arange(3)).reshape(-1)
            f[dofs] += w * (B.T @ np.concatenate([ss.n, ss.m]))
            Ke = B.T @ C_hat @ B
            G11, G12, G21 = geometric_stiffness_blocks(kin, ss)
            for i in range(a):
                for j in range(a):
                    blk = (
                        ev.d1[i] * ev.d1[j] * G11
                        + ev.d1[i] * ev.d2[j] * G12
                        + ev.d2[i] * ev.d1[j] * G21
                    )
                    Ke[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] += blk
            K[np.ix_(dofs, dofs)] += w * Ke
    return f, K


class TestGaussRule:
    def test_small_rules(self):
        x, w = gauss_rule(1)
        assert_allclose(x, [0.0])
        assert_allclose(w, [2.0])
        x, w = gauss_rule(2)
        assert_allclose(x, [-1 / np.sqrt(3), 1 / np.sqrt(3)])
        assert_allclose(w, [1.0, 1.0])

    def test_degree_eight_integrand(self):
        x, w = gauss_rule(5)
        assert abs(np.sum(w * x**8) - 2.0 / 9.0) < 1e-14

    @pytest.mark.parametrize("bad", [0, -1, 17])
    def test_invalid_order_rejected(self, bad):
        with pytest.raises(ValueError):
            gauss_rule(bad)


class TestBasisTables:
    def test_cached_identity(self):
        space = make_spline_space(3, 1, 5, 2.0)
        assert basis_tables(space, 4) is basis_tables(space, 4)
        assert basis_tables(space, 4) is not basis_tables(space, 5)

    def test_partition_of_unity_at_quadrature_points(self):
        space = make_spline_space(3, 2, 7, 3.0)
        t = basis_tables(space, 4)
        assert_allclose(t.N.sum(axis=-1), 1.0, atol=1e-12)
        assert_allclose(t.D1.sum(axis=-1), 0.0, atol=1e-9)

    def test_integrated_basis_sums_to_length(self):
        space = make_spline_space(2, 1, 9, 4.5)
        t = basis_tables(space, 3)
        assert abs(t.int_N.sum() - space.L) < 1e-12


class TestMassMatrix:
    def test_symmetric_positive_definite(self):
        rng = np.random.default_rng(0)
        space = make_spline_space(3, 1, 6, 2.0)
        q = wiggled_config(space, rng)
        M = mass_matrix(space, q, MAT)
        assert_allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M).min() > 0.0

    def test_rigid_translation_sees_only_translational_mass(self):
        """Uniform velocity: the direction-change block contributes nothing."""
        rng = np.random.default_rng(1)
        space = make_spline_space(3, 1, 6, 2.0)
        q = wiggled_config(space, rng)
        v = np.array([0.3, -1.2, 0.7])
        qdot = np.tile(v, space.n_basis)
        t = basis_tables(space, 4)
        expected = (t.int_N[:, None] * (MAT.A_rho * v)).reshape(-1)
        assert_allclose(mass_matrix(space, q, MAT) @ qdot, expected, atol=1e-12)

    def test_alpha_zero_drops_direction_block(self):
        rng = np.random.default_rng(2)
        space = make_spline_space(2, 1, 5, 1.0)
        q = wiggled_config(space, rng)
        mat0 = MaterialParams(MAT.EA, MAT.EI, MAT.A_rho, MAT.I_rho, alpha=0.0)
        M0 = mass_matrix(space, q, mat0)
        q2 = wiggled_config(space, np.random.default_rng(3))
        assert_allclose(M0, mass_matrix(space, q2, mat0), atol=1e-12)


class TestStaticAssembly:
    LOADS = [
        PointLoad(s_loc=1.2, F_c=(0.5, -0.3, 0.8)),
        Gravity(g_vector=(0.0, -9.81, 0.0)),
        Follower2D(f0=0.4),
        TipMoment(m_vector=(0.0, 0.0, 2.0)),
    ]

    def test_matches_reference_assembly(self):
        """Vectorized internal force/stiffness == pointwise-loop assembly."""
        rng = np.random.default_rng(4)
        for p, r, nel in [(2, 1, 5), (3, 1, 4), (4, 2, 3)]:
            space = make_spline_space(p, r, nel, 2.0)
            q = wiggled_config(space, rng)
            out = assemble_static(space, None, q, [], MAT)
            f_ref, K_ref = reference_internal(space, q, MAT, p + 1)
            assert rel_err(out.residual, f_ref) < 1e-12
            assert rel_err(out.tangent, K_ref) < 1e-12

    @pytest.mark.parametrize("p, r", [(2, 1), (3, 1), (3, 2)])
    def test_tangent_is_fd_jacobian(self, p, r):
        space = make_spline_space(p, r, 4, 2.0)
        C = build_extraction(space, boundary_constraints(space, "clamped", "free"))
        rng = np.random.default_rng(5)
        q0 = wiggled_config(space, rng)
        Cv = C.vector_matrix()

        def resid(qr):
            return assemble_static(space, C, q0 + Cv @ qr, self.LOADS, MAT, load_factor=0.7).residual

        qr0 = np.zeros(Cv.shape[1])
        out = assemble_static(space, C, q0, self.LOADS, MAT, load_factor=0.7)
        J_fd = fd_jacobian(resid, qr0, h=1e-6)
        assert rel_err(out.tangent, J_fd) < 1e-5

    def test_unreduced_equals_identity_extraction(self):
        space = make_spline_space(3, 1, 4, 2.0)
        rng = np.random.default_rng(6)
        q = wiggled_config(space, rng)
        a = assemble_static(space, None, q, self.LOADS, MAT)
        ex = build_extraction(space, ())
        b = assemble_static(space, ex, q, self.LOADS, MAT)
        assert_allclose(a.residual, b.residual, atol=1e-14)
        assert_allclose(a.tangent, b.tangent, atol=1e-14)

    def test_residual_scale_does_not_change_newton_direction(self):
        space = make_spline_space(3, 1, 4, 2.0)
        C = build_extraction(space, boundary_constraints(space, "clamped", "free"))
        rng = np.random.default_rng(7)
        q = wiggled_config(space, rng)
        a = assemble_static(space, C, q, self.LOADS, MAT)
        b = assemble_static(space, C, q, self.LOADS, MAT, residual_scale=37.5)
        assert_allclose(b.residual, 37.5 * a.residual, rtol=1e-14)
        assert_allclose(
            np.linalg.solve(a.tangent, a.residual),
            np.linalg.solve(b.tangent, b.residual),
            rtol=1e-9,
        )

    def test_bandwidth(self):
        """Entries vanish when basis supports do not overlap."""
        space = make_spline_space(3, 1, 10, 5.0)
        rng = np.random.default_rng(8)
        q = wiggled_config(space, rng)
        K = assemble_static(space, None, q, [], MAT).tangent
        m = space.n_basis
        for i in range(m):
            for j in range(m):
                if abs(i - j) > space.degree:
                    blk = K[3 * i : 3 * i + 3, 3 * j : 3 * j + 3]
                    assert np.abs(blk).max() == 0.0

    def test_straight_rod_equilibrium(self):
        """The stress-free straight rod has zero internal force."""
        space = make_spline_space(3, 1, 6, 2.0)
        q = straight_configuration(space, np.zeros(3), np.array([0, 0, 1.0])).reshape(-1)
        out = assemble_static(space, None, q, [], MAT)
        assert np.abs(out.residual).max() < 1e-12

    def test_flow_and_harmonic_loads_rejected(self):
        space = make_spline_space(3, 1, 4, 1.0)
        q = straight_configuration(space, np.zeros(3), np.array([0, 0, 1.0])).reshape(-1)
        with pytest.raises(ValueError):
            assemble_static(space, None, q, [FlowLoad(1, 1.2, 0.1, 1.2, 0.01)], MAT)
        with pytest.raises(ValueError):
            assemble_static(
                space, None, q, [Pulsating(A_F=1.0, omega=2.0, direction=(1, 0, 0), s_loc=0.5)], MAT
            )
        with pytest.raises(ValueError):
            assemble_static(space, None, q, [PointLoad(0.5, (1, 0, 0), t_c=0.5)], MAT)

    def test_degenerate_configuration_raises(self):
        space = make_spline_space(2, 1, 4, 1.0)
        q = np.zeros(space.n_dof)
        with pytest.raises(DegenerateConfigurationError):
            assemble_static(space, None, q, [], MAT)


class TestDynamicAssembly:
    LOADS = [
        PointLoad(s_loc=2.0, F_c=(0.0, 3.0, 0.0), t_c=0.5),
        Gravity(g_vector=(0.0, -9.81, 0.0)),
        Pulsating(A_F=0.6, omega=3.0, direction=(1.0, 0.0, 0.0), s_loc=1.0),
        FlowLoad(
            C_M=1.0,
            C_N=1.2,
            C_T=0.1,
            rho_f=1.2,
            diameter=0.05,
            profile=FreestreamProfile(kind="rotating_wind", v0=2.0, beta0=np.pi / 4, L_ref=2.0),
        ),
    ]

    @pytest.mark.parametrize("correction_state", ["midpoint", "endpoints"])
    @pytest.mark.parametrize("p", [2, 3])
    def test_tangent_is_fd_jacobian(self, p, correction_state):
        space = make_spline_space(p, 1, 4, 2.0)
        C = build_extraction(space, boundary_constraints(space, "pinned", "free"))
        Cv = C.vector_matrix()
        rng = np.random.default_rng(9)
        q_n = wiggled_config(space, rng, amp=0.1)
        qdot_n = 0.4 * rng.normal(size=space.n_dof)
        dq = 0.02 * rng.normal(size=Cv.shape[1])
        dt, t_n = 0.02, 0.3

        def resid(dqr):
            return assemble_dynamic_step(
                space, C, q_n, qdot_n, q_n + Cv @ dqr, dt, self.LOADS, MAT,
                t_n=t_n, correction_state=correction_state,
            ).residual

        out = assemble_dynamic_step(
            space, C, q_n, qdot_n, q_n + Cv @ dq, dt, self.LOADS, MAT,
            t_n=t_n, correction_state=correction_state,
        )
        J_fd = fd_jacobian(resid, dq, h=1e-7)
        assert rel_err(out.tangent, J_fd) < 1e-5

    def test_step_constant_reuse_is_exact(self):
        space = make_spline_space(3, 1, 4, 2.0)
        rng = np.random.default_rng(10)
        q_n = wiggled_config(space, rng, amp=0.1)
        qdot_n = 0.4 * rng.normal(size=space.n_dof)
        q_next = q_n + 0.01 * rng.normal(size=space.n_dof)
        dt, t_n = 0.01, 1.0
        const = dynamic_step_constant(space, q_n, qdot_n, dt, self.LOADS, MAT, t_n=t_n)
        a = assemble_dynamic_step(
            space, None, q_n, qdot_n, q_next, dt, self.LOADS, MAT, t_n=t_n, step_constant=const
        )
        b = assemble_dynamic_step(
            space, None, q_n, qdot_n, q_next, dt, self.LOADS, MAT, t_n=t_n
        )
        assert_allclose(a.residual, b.residual, atol=1e-15)
        assert_allclose(a.tangent, b.tangent, atol=1e-15)

    def test_force_free_straight_rod_stays_at_rest(self):
        """Zero loads, zero velocity: q_next = q_n solves the step exactly."""
        space = make_spline_space(3, 1, 5, 2.0)
        q = straight_configuration(space, np.zeros(3), np.array([0, 0, 1.0])).reshape(-1)
        out = assemble_dynamic_step(
            space, None, q, np.zeros_like(q), q, 0.01, [], MAT, t_n=0.0
        )
        assert np.abs(out.residual).max() < 1e-12
