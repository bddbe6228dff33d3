"""Spline space, basis evaluation and extraction operator.

The independent oracle for basis values and derivatives is
``scipy.interpolate.BSpline`` built on the same knot vector.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.interpolate import BSpline

from splinerod import (
    BoundaryConstraint,
    boundary_constraints,
    build_extraction,
    essential_orders,
    eval_basis,
    greville_points,
    make_spline_space,
    outlier_orders,
    straight_configuration,
)
from splinerod.splines import _constraint_row


def scipy_basis(space, s, deriv=0):
    """Dense row of all basis-function derivatives at s, via the scipy oracle."""
    t = np.asarray(space.knot_vector)
    k = space.degree
    row = np.empty(space.n_basis)
    for j in range(space.n_basis):
        c = np.zeros(space.n_basis)
        c[j] = 1.0
        spl = BSpline(t, c, k)
        row[j] = spl.derivative(deriv)(s) if deriv else spl(s)
    return row


def dense_row(space, s, deriv):
    """Scatter one BasisEval derivative row into a dense vector."""
    ev = eval_basis(space, s, max_deriv=2)
    row = np.zeros(space.n_basis)
    data = (ev.values, ev.d1, ev.d2)[deriv]
    row[ev.first_index : ev.first_index + space.degree + 1] = data
    return row


class TestSpaceConstruction:
    """Knot vectors, dimension counts and validation."""

    @pytest.mark.parametrize(
        "p, r, nel, L, expected_m",
        [
            (3, 1, 20, 10.0, 42),
            (2, 1, 1, 1.0, 3),
            (4, 3, 8, 40.0, 12),
            (2, 1, 40, 40.0, 42),
            (3, 2, 20, 10.0, 23),
        ],
        ids=["cubic-C1-20el", "quadratic-single", "quartic-C3", "quadratic-C1-40el", "cubic-C2-20el"],
    )
    def test_dimension_formula(self, p, r, nel, L, expected_m):
        """m = nel*(p-r) + r + 1, cross-checked against the knot count."""
        space = make_spline_space(p, r, nel, L)
        assert space.n_basis == expected_m
        n_knots = 2 * (p + 1) + (nel - 1) * (p - r)
        assert len(space.knot_vector) == n_knots
        assert space.n_basis == n_knots - p - 1
        assert space.n_dof == 3 * expected_m

    def test_knot_vector_contents(self):
        space = make_spline_space(2, 1, 2, 1.0)
        assert_allclose(space.knot_vector, [0, 0, 0, 0.5, 1, 1, 1])
        space = make_spline_space(3, 1, 2, 1.0)
        assert_allclose(space.knot_vector, [0, 0, 0, 0, 0.5, 0.5, 1, 1, 1, 1])

    @pytest.mark.parametrize(
        "p, r, nel, L",
        [(1, 1, 4, 1.0), (2, 0, 4, 1.0), (2, 2, 4, 1.0), (3, 3, 4, 1.0), (3, 1, 0, 1.0), (3, 1, 4, 0.0)],
        ids=["degree-1", "C0", "r=p-quadratic", "r=p-cubic", "no-elements", "zero-length"],
    )
    def test_invalid_spaces_rejected(self, p, r, nel, L):
        with pytest.raises(ValueError):
            make_spline_space(p, r, nel, L)

    def test_first_basis_of_element(self):
        space = make_spline_space(3, 1, 5, 1.0)
        assert [space.first_basis_of_element(e) for e in range(5)] == [0, 2, 4, 6, 8]


class TestBasisEvaluation:
    """Values and derivatives against the scipy oracle and basic identities."""

    @pytest.mark.parametrize(
        "p, r, nel",
        [(2, 1, 5), (3, 1, 7), (3, 2, 6), (4, 2, 4), (5, 3, 3)],
        ids=["p2r1", "p3r1", "p3r2", "p4r2", "p5r3"],
    )
    @pytest.mark.parametrize("deriv", [0, 1, 2])
    def test_matches_scipy(self, p, r, nel, deriv):
        space = make_spline_space(p, r, nel, 2.5)
        rng = np.random.default_rng(42)
        pts = np.concatenate([rng.uniform(0, space.L, 7), [0.0, space.L, space.L / nel]])
        for s in pts:
            assert_allclose(
                dense_row(space, s, deriv), scipy_basis(space, s, deriv), rtol=1e-10, atol=1e-9
            )

    def test_partition_of_unity(self):
        space = make_spline_space(3, 1, 11, 4.0)
        for s in np.linspace(0, space.L, 37):
            ev = eval_basis(space, s)
            assert abs(ev.values.sum() - 1.0) < 1e-12
            assert abs(ev.d1.sum()) < 1e-10
            assert abs(ev.d2.sum()) < 1e-9

    def test_endpoint_interpolation(self):
        space = make_spline_space(3, 1, 6, 3.0)
        left = eval_basis(space, 0.0)
        right = eval_basis(space, space.L)
        assert left.first_index == 0
        assert_allclose(left.values, [1, 0, 0, 0], atol=1e-15)
        assert right.first_index == space.n_basis - space.degree - 1
        assert_allclose(right.values, [0, 0, 0, 1], atol=1e-15)

    def test_first_index_on_elements(self):
        space = make_spline_space(3, 1, 8, 4.0)
        h = space.element_length
        for e in range(8):
            ev = eval_basis(space, (e + 0.37) * h)
            assert ev.first_index == space.first_basis_of_element(e)

    def test_derivatives_by_finite_differences(self):
        """d1 and d2 agree with central differences of the rows below them."""
        space = make_spline_space(4, 2, 6, 2.0)
        h = 1e-6
        for s in [0.3141, 0.9, 1.523]:
            v_p = dense_row(space, s + h, 0)
            v_m = dense_row(space, s - h, 0)
            assert_allclose(dense_row(space, s, 1), (v_p - v_m) / (2 * h), rtol=2e-5, atol=1e-6)
            d_p = dense_row(space, s + h, 1)
            d_m = dense_row(space, s - h, 1)
            assert_allclose(dense_row(space, s, 2), (d_p - d_m) / (2 * h), rtol=2e-5, atol=1e-5)

    @given(
        p=st.integers(2, 5),
        dr=st.integers(1, 4),
        nel=st.integers(1, 12),
        x=st.floats(0, 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_partition_of_unity_property(self, p, dr, nel, x):
        r = max(1, p - dr)
        space = make_spline_space(p, r, nel, 3.0)
        ev = eval_basis(space, x * space.L)
        assert ev.values.min() >= -1e-14
        assert abs(ev.values.sum() - 1.0) < 1e-12
        assert abs(ev.d1.sum()) < 1e-9 * max(1.0, np.abs(ev.d1).max())
        assert abs(ev.d2.sum()) < 1e-9 * max(1.0, np.abs(ev.d2).max())


class TestGreville:
    def test_linear_precision(self):
        """Coefficients at knot averages reproduce s exactly."""
        space = make_spline_space(3, 1, 9, 5.0)
        g = greville_points(space)
        for s in np.linspace(0, space.L, 23):
            ev = eval_basis(space, s, max_deriv=0)
            val = ev.values @ g[ev.first_index : ev.first_index + space.degree + 1]
            assert abs(val - s) < 1e-12

    def test_straight_configuration_is_exact(self):
        space = make_spline_space(2, 1, 5, 2.0)
        origin = np.array([1.0, -2.0, 0.5])
        direction = np.array([0.0, 0.6, 0.8])
        Q = straight_configuration(space, origin, direction)
        assert Q.shape == (space.n_basis, 3)
        for s in np.linspace(0, space.L, 11):
            ev = eval_basis(space, s, max_deriv=1)
            sl = slice(ev.first_index, ev.first_index + space.degree + 1)
            assert_allclose(ev.values @ Q[sl], origin + s * direction, atol=1e-13)
            assert_allclose(ev.d1 @ Q[sl], direction, atol=1e-12)


class TestModeRemovalOrders:
    """Derivative orders pinned per end: seeds {2,3}/{0,2}/{0,1} closed under +4."""

    @pytest.mark.parametrize(
        "degree, bc, expected",
        [
            (3, "free", (2, 3)),
            (3, "pinned", (2,)),
            (3, "clamped", ()),
            (2, "free", (2,)),
            (4, "clamped", (4,)),
            (5, "clamped", (4, 5)),
            (5, "pinned", (2, 4)),
            (4, "free", (2, 3)),
        ],
    )
    def test_order_table(self, degree, bc, expected):
        assert outlier_orders(degree, bc) == expected

    def test_essential_orders(self):
        assert essential_orders("free") == ()
        assert essential_orders("pinned") == (0,)
        assert essential_orders("clamped") == (0, 1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            outlier_orders(3, "floating")

    def test_combined_constraint_list(self):
        space = make_spline_space(3, 1, 20, 10.0)
        cons = boundary_constraints(space, "clamped", "free", removal=True)
        assert cons == (
            BoundaryConstraint("left", 0),
            BoundaryConstraint("left", 1),
            BoundaryConstraint("right", 2),
            BoundaryConstraint("right", 3),
        )
        cons_no = boundary_constraints(space, "clamped", "free", removal=False)
        assert cons_no == (BoundaryConstraint("left", 0), BoundaryConstraint("left", 1))


class TestExtraction:
    """Null-space property, orthonormality and rigid-mode preservation."""

    def constraint_rows(self, space, cons):
        return np.array([_constraint_row(space, c) for c in cons])

    @pytest.mark.parametrize(
        "p, r, nel, bc_l, bc_r",
        [
            (3, 1, 20, "clamped", "free"),
            (3, 1, 20, "free", "free"),
            (3, 1, 20, "pinned", "free"),
            (2, 1, 40, "clamped", "free"),
            (4, 2, 8, "free", "free"),
            (5, 3, 4, "clamped", "clamped"),
        ],
    )
    def test_annihilates_constraints(self, p, r, nel, bc_l, bc_r):
        space = make_spline_space(p, r, nel, 10.0)
        cons = boundary_constraints(space, bc_l, bc_r, removal=True)
        ex = build_extraction(space, cons)
        A = self.constraint_rows(space, cons)
        assert np.abs(A @ ex.C).max() < 1e-12
        assert ex.n_reduced == space.n_basis - len(cons)
        assert_allclose(ex.C.T @ ex.C, np.eye(ex.n_reduced), atol=1e-13)

    def test_no_constraints_gives_identity(self):
        space = make_spline_space(3, 1, 4, 1.0)
        ex = build_extraction(space, ())
        assert_allclose(ex.C, np.eye(space.n_basis))

    def test_small_space_global_fallback(self):
        """One-element space: boundary blocks overlap, global null space used."""
        space = make_spline_space(3, 1, 1, 1.0)
        cons = boundary_constraints(space, "clamped", "clamped", removal=False)
        ex = build_extraction(space, cons)
        A = self.constraint_rows(space, cons)
        assert ex.C.shape == (4, 0)
        space = make_spline_space(4, 3, 1, 1.0)
        cons = boundary_constraints(space, "pinned", "pinned", removal=False)
        ex = build_extraction(space, cons)
        A = self.constraint_rows(space, cons)
        assert np.abs(A @ ex.C).max() < 1e-12
        assert ex.n_reduced == 3

    def test_rigid_modes_survive_removal(self):
        """Removal-only constraints keep constants and linears representable."""
        space = make_spline_space(3, 1, 12, 6.0)
        cons = boundary_constraints(space, "free", "free", removal=True)
        ex = build_extraction(space, cons)
        P = ex.C @ ex.C.T
        const = np.ones(space.n_basis)
        lin = greville_points(space)
        assert np.abs(P @ const - const).max() < 1e-10
        assert np.abs(P @ lin - lin).max() < 1e-10

    def test_vector_matrix_interleaving(self):
        space = make_spline_space(2, 1, 3, 1.0)
        ex = build_extraction(space, boundary_constraints(space, "pinned", "free", removal=False))
        Cv = ex.vector_matrix()
        assert Cv.shape == (3 * space.n_basis, 3 * ex.n_reduced)
        # componentwise action: reduced coefficient k for component c drives
        # full coefficients of the same component only
        for k in range(ex.n_reduced):
            for c in range(3):
                col = Cv[:, 3 * k + c]
                assert_allclose(col.reshape(-1, 3)[:, (c + 1) % 3], 0.0, atol=1e-15)
                assert_allclose(col.reshape(-1, 3)[:, c], ex.C[:, k], atol=1e-15)

    def test_duplicate_and_invalid_constraints_rejected(self):
        space = make_spline_space(3, 1, 4, 1.0)
        with pytest.raises(ValueError):
            build_extraction(space, (("left", 0), ("left", 0)))
        with pytest.raises(ValueError):
            build_extraction(space, (("left", 4),))
        with pytest.raises(ValueError):
            build_extraction(space, (("top", 0),))
