"""Pointwise kinematics: strains, stresses, densities and their exact tangents.

Oracles: hand-sized special cases (stretched straight rod, circle), finite
differences for every linearization, and rotation invariance.
"""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import fd_jacobian, rel_err
from splinerod.kinematics import (
    DegenerateConfigurationError,
    MaterialParams,
    b_matrix_point,
    director_ops,
    geometric_stiffness_blocks,
    inertia_residual_point,
    inertia_tangent_blocks,
    kinetic_energy_density,
    mass_density_point,
    momentum_densities,
    point_kinematics,
    skew,
    strain_energy_density,
    strain_stress,
)

MAT = MaterialParams(EA=100.0, EI=200.0, A_rho=2.0, I_rho=0.03, alpha=1.0)


def random_point(rng, stretch=True):
    """A generic non-degenerate kinematic point with random derivatives."""
    phi = rng.normal(size=3)
    phi_p = rng.normal(size=3)
    phi_p /= np.linalg.norm(phi_p)
    if stretch:
        phi_p *= rng.uniform(0.7, 1.4)
    phi_pp = rng.normal(size=3)
    return point_kinematics(phi, phi_p, phi_pp)


class TestDirectorAndStrain:
    def test_stretched_straight_rod(self):
        """Pure 10% stretch along z: axial force (0, 0, 10) for EA = 100."""
        kin = point_kinematics(np.zeros(3), np.array([0.0, 0.0, 1.1]), np.zeros(3))
        assert_allclose(kin.d, [0, 0, 1], atol=1e-15)
        assert_allclose(kin.jac, 1.1)
        ss = strain_stress(kin, MAT)
        assert_allclose(ss.eps, [0, 0, 0.1], atol=1e-14)
        assert_allclose(ss.n, [0, 0, 10.0], atol=1e-12)
        assert_allclose(ss.kappa, 0.0, atol=1e-15)

    @pytest.mark.parametrize("R", [0.5, 2.0, 10.0])
    def test_circle_curvature(self, R):
        """Arc-length circle of radius R has curvature magnitude 1/R."""
        for s in [0.0, 0.3 * R, 2.0 * R]:
            phi = R * np.array([np.cos(s / R), np.sin(s / R), 0.0])
            phi_p = np.array([-np.sin(s / R), np.cos(s / R), 0.0])
            phi_pp = np.array([-np.cos(s / R), -np.sin(s / R), 0.0]) / R
            kin = point_kinematics(phi, phi_p, phi_pp)
            ss = strain_stress(kin, MAT)
            assert abs(np.linalg.norm(ss.kappa) - 1.0 / R) < 1e-10
            assert_allclose(ss.eps, 0.0, atol=1e-14)

    def test_stretched_circle_curvature_scales(self):
        """Constant-speed parameterization v: curvature measure is v/R."""
        R, v = 2.0, 1.3
        phi_p = v * np.array([0.0, 1.0, 0.0])
        phi_pp = (v**2 / R) * np.array([-1.0, 0.0, 0.0])
        kin = point_kinematics(np.zeros(3), phi_p, phi_pp)
        ss = strain_stress(kin, MAT)
        assert abs(np.linalg.norm(ss.kappa) - v / R) < 1e-12

    def test_projectors(self):
        rng = np.random.default_rng(3)
        kin = random_point(rng)
        assert_allclose(kin.P_d @ kin.d, 0.0, atol=1e-14)
        assert_allclose(kin.P_d @ kin.P_d, kin.P_d, atol=1e-14)
        assert_allclose(kin.H_d @ kin.H_d, np.eye(3), atol=1e-14)
        v = rng.normal(size=3)
        assert_allclose(kin.P_d @ v + np.outer(kin.d, kin.d) @ v, v, atol=1e-13)

    def test_degenerate_tangent_raises_with_location(self):
        with pytest.raises(DegenerateConfigurationError, match="s=1.25"):
            director_ops(np.array([0.0, 0.0, 1e-14]), jac_floor=1e-10, s=1.25)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(7)
        kin = random_point(rng)
        ss = strain_stress(kin, MAT)
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(Q) < 0:
            Q[:, 0] *= -1
        kin_r = point_kinematics(Q @ kin.phi, Q @ kin.phi_p, Q @ kin.phi_pp)
        ss_r = strain_stress(kin_r, MAT)
        assert_allclose(kin_r.d, Q @ kin.d, atol=1e-13)
        assert_allclose(ss_r.eps, Q @ ss.eps, atol=1e-13)
        assert_allclose(ss_r.kappa, Q @ ss.kappa, atol=1e-13)
        assert abs(strain_energy_density(ss_r) - strain_energy_density(ss)) < 1e-12


class TestStrainDisplacement:
    """B rows equal the finite-difference Jacobian of the strain vector."""

    @pytest.mark.parametrize("p", [2, 3])
    def test_b_matrix_fd(self, p):
        rng = np.random.default_rng(11)
        d1 = rng.normal(size=p + 1)
        d2 = rng.normal(size=p + 1)
        q_loc = rng.normal(size=3 * (p + 1))
        q_loc[2::3] += np.linspace(0, 2, p + 1)  # keep the tangent well away from zero

        def strains(q):
            q = q.reshape(-1, 3)
            kin = point_kinematics(np.zeros(3), d1 @ q, d2 @ q)
            ss = strain_stress(kin, MAT)
            return np.concatenate([ss.eps, ss.kappa])

        q = q_loc.reshape(-1, 3)
        kin = point_kinematics(np.zeros(3), d1 @ q, d2 @ q)
        B = b_matrix_point(kin, d1, d2)
        assert B.shape == (6, 3 * (p + 1))
        assert rel_err(B, fd_jacobian(strains, q_loc, h=1e-7)) < 1e-5

    def test_zero_for_unstretched_straight(self):
        """Straight unstretched rod: axial rows reduce to tangential projection."""
        d1 = np.array([-1.0, 1.0, 0.0])
        d2 = np.array([1.0, -2.0, 1.0])
        q_loc = np.array([[0, 0, 0], [0, 0, 1.0], [0, 0, 2.0]])
        kin = point_kinematics(np.zeros(3), d1 @ q_loc, d2 @ q_loc)
        B = b_matrix_point(kin, d1, d2)
        # axial strain variation must be purely along d for each node
        for j in range(3):
            blk = B[:3, 3 * j : 3 * j + 3]
            assert_allclose(blk, d1[j] * np.outer([0, 0, 1], [0, 0, 1]), atol=1e-14)


class TestInertia:
    def test_mass_density_structure(self):
        rng = np.random.default_rng(5)
        kin = random_point(rng)
        D0, D1 = mass_density_point(kin, MAT)
        assert_allclose(D0, MAT.A_rho * np.eye(3))
        assert_allclose(D1, D1.T, atol=1e-15)
        assert_allclose(D1 @ kin.d, 0.0, atol=1e-14)
        w = np.linalg.eigvalsh(D1)
        assert w.min() > -1e-15
        assert_allclose(w.max(), MAT.alpha * MAT.I_rho / kin.jac**2, rtol=1e-12)

    def test_alpha_scales_rotary_terms(self):
        rng = np.random.default_rng(6)
        kin = random_point(rng)
        u = rng.normal(size=3)
        mat_half = MaterialParams(MAT.EA, MAT.EI, MAT.A_rho, MAT.I_rho, alpha=0.5)
        _, D1_full = mass_density_point(kin, MAT)
        _, D1_half = mass_density_point(kin, mat_half)
        assert_allclose(D1_half, 0.5 * D1_full, atol=1e-15)
        r_full, c_full = inertia_residual_point(kin, u, MAT)
        r_half, c_half = inertia_residual_point(kin, u, mat_half)
        assert_allclose(r_half, 0.5 * r_full, atol=1e-15)
        assert_allclose(c_half, 0.5 * c_full, atol=1e-15)

    def test_correction_is_minus_config_gradient_of_kinetic_energy(self):
        """correction = -d(kinetic density)/d(phi') at fixed velocity."""
        rng = np.random.default_rng(8)
        kin = random_point(rng)
        u = rng.normal(size=3)
        phi_dot = rng.normal(size=3)

        def T(phi_p):
            k = point_kinematics(kin.phi, phi_p, kin.phi_pp)
            return np.array([kinetic_energy_density(k, phi_dot, u, MAT)])

        grad = fd_jacobian(T, kin.phi_p, h=1e-7).ravel()
        _, corr = inertia_residual_point(kin, u, MAT)
        assert rel_err(corr, -grad) < 1e-6

    def test_rate_term_matches_time_difference(self):
        """rate term = d/dt [direction-change mass density @ u] along phi' = u."""
        rng = np.random.default_rng(9)
        kin = random_point(rng)
        u = rng.normal(size=3)
        h = 1e-7

        def Mu(phi_p):
            k = point_kinematics(kin.phi, phi_p, kin.phi_pp)
            _, D1 = mass_density_point(k, MAT)
            return D1 @ u

        rate_fd = (Mu(kin.phi_p + h * u) - Mu(kin.phi_p - h * u)) / (2 * h)
        rate, _ = inertia_residual_point(kin, u, MAT)
        assert rel_err(rate, rate_fd) < 1e-6

    def test_tangent_blocks_fd(self):
        """K1, K3, K4 match finite differences of their parent vectors."""
        rng = np.random.default_rng(10)
        kin = random_point(rng)
        u = rng.normal(size=3)
        K1, K3, K4 = inertia_tangent_blocks(kin, u, MAT)

        def momentum_density(phi_p):
            k = point_kinematics(kin.phi, phi_p, kin.phi_pp)
            _, D1 = mass_density_point(k, MAT)
            return D1 @ u

        def corr_of_phi_p(phi_p):
            k = point_kinematics(kin.phi, phi_p, kin.phi_pp)
            return inertia_residual_point(k, u, MAT)[1]

        def corr_of_u(uu):
            return inertia_residual_point(kin, uu, MAT)[1]

        assert rel_err(K1, fd_jacobian(momentum_density, kin.phi_p, h=1e-7)) < 1e-6
        assert rel_err(K3, fd_jacobian(corr_of_phi_p, kin.phi_p, h=1e-7)) < 1e-6
        assert rel_err(K4, fd_jacobian(corr_of_u, u, h=1e-7)) < 1e-6


class TestGeometricStiffness:
    def test_blocks_are_fd_jacobians_at_fixed_stress(self):
        """G blocks = gradients of the stress-weighted strain variations."""
        rng = np.random.default_rng(12)
        kin = random_point(rng)
        ss = strain_stress(kin, MAT)
        n_hat, m_hat = ss.n.copy(), ss.m.copy()
        G11, G12, G21 = geometric_stiffness_blocks(kin, ss)

        def f_prime(x):
            phi_p, phi_pp = x[:3], x[3:]
            k = point_kinematics(kin.phi, phi_p, phi_pp)
            E_eps = np.eye(3) - k.P_d / k.jac
            E_k1 = -skew(k.phi_pp) @ k.H_d / k.jac**2
            return E_eps.T @ n_hat + E_k1.T @ m_hat

        def f_second(x):
            phi_p = x[:3]
            k = point_kinematics(kin.phi, phi_p, kin.phi_pp)
            return (skew(k.d) / k.jac).T @ m_hat

        x0 = np.concatenate([kin.phi_p, kin.phi_pp])
        J1 = fd_jacobian(f_prime, x0, h=1e-7)
        assert rel_err(G11, J1[:, :3]) < 1e-6
        assert rel_err(G12, J1[:, 3:]) < 1e-6
        J2 = fd_jacobian(f_second, x0, h=1e-7)
        assert rel_err(G21, J2[:, :3]) < 1e-6
        assert_allclose(J2[:, 3:], 0.0, atol=1e-9)


class TestEnergiesAndMomenta:
    def test_rigid_translation_energy_and_momentum(self):
        kin = point_kinematics(np.array([1.0, 2.0, 3.0]), np.array([1.0, 0, 0]), np.zeros(3))
        v = np.array([0.3, -0.2, 0.5])
        T = kinetic_energy_density(kin, v, np.zeros(3), MAT)
        assert_allclose(T, 0.5 * MAT.A_rho * v @ v)
        lin, ang = momentum_densities(kin, v, np.zeros(3), MAT)
        assert_allclose(lin, MAT.A_rho * v)
        assert_allclose(ang, MAT.A_rho * np.cross(kin.phi, v))

    def test_direction_change_energy(self):
        """Spinning the director contributes alpha * I_rho |d_dot|^2 / 2."""
        kin = point_kinematics(np.zeros(3), np.array([1.0, 0, 0]), np.zeros(3))
        u = np.array([0.0, 2.0, 0.0])  # normal to d, unit stretch
        T = kinetic_energy_density(kin, np.zeros(3), u, MAT)
        assert_allclose(T, 0.5 * MAT.alpha * MAT.I_rho * 4.0)

    def test_strain_energy_quadratic(self):
        rng = np.random.default_rng(13)
        kin = random_point(rng)
        ss = strain_stress(kin, MAT)
        expected = 0.5 * (MAT.EA * ss.eps @ ss.eps + MAT.EI * ss.kappa @ ss.kappa)
        assert_allclose(strain_energy_density(ss), expected, rtol=1e-13)
