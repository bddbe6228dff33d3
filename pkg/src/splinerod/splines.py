"""Smooth B-spline function spaces on an interval, plus boundary extraction.

The rod centerline is discretized with open uniform B-splines of degree ``p``
and interelement continuity ``r`` (knot multiplicity ``p - r``).  This module
owns the scalar function space: knot vectors, basis evaluation with first and
second derivatives, Greville abscissae, and the extraction operator that
removes constrained boundary coefficients (essential conditions and
strongly-imposed boundary derivative conditions used to suppress spurious
high-frequency boundary modes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SplineSpace",
    "BasisEval",
    "BoundaryConstraint",
    "ExtractionMatrix",
    "make_spline_space",
    "eval_basis",
    "greville_points",
    "straight_configuration",
    "essential_orders",
    "outlier_orders",
    "boundary_constraints",
    "build_extraction",
]

BC_KINDS = ("free", "pinned", "clamped")

# Derivative orders pinned at an end, by support-condition kind.  The first
# set is imposed essentially (part of the boundary-value problem); the second
# seeds the ladder of higher-order conditions whose strong imposition removes
# the spurious boundary modes.  The ladder closes under k -> k + 4 (the
# operator underlying the rod's linearized bending dynamics is fourth order).
_ESSENTIAL = {"free": frozenset(), "pinned": frozenset({0}), "clamped": frozenset({0, 1})}
_MODE_SEED = {"free": frozenset({2, 3}), "pinned": frozenset({0, 2}), "clamped": frozenset({0, 1})}


@dataclass(frozen=True)
class SplineSpace:
    """Open uniform B-spline space of degree ``p`` on ``[0, L]``.

    ``continuity`` is the smoothness across element boundaries; interior
    knots are repeated ``degree - continuity`` times.
    """

    degree: int
    continuity: int
    n_elements: int
    L: float
    knot_vector: tuple[float, ...]

    @property
    def n_basis(self) -> int:
        return len(self.knot_vector) - self.degree - 1

    @property
    def n_dof(self) -> int:
        """Vector-valued dof count (three components per basis function)."""
        return 3 * self.n_basis

    @property
    def element_length(self) -> float:
        return self.L / self.n_elements

    def first_basis_of_element(self, e: int) -> int:
        return e * (self.degree - self.continuity)


@dataclass
class BasisEval:
    """Nonzero basis values (and derivatives) at one point.

    ``values``, ``d1``, ``d2`` hold the ``degree + 1`` nonzero functions
    starting at global index ``first_index``; ``d1``/``d2`` are ``None``
    when not requested.
    """

    first_index: int
    values: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None


@dataclass(frozen=True)
class BoundaryConstraint:
    """Zero-deviation condition on one derivative order at one end."""

    end: str  # "left" | "right"
    order: int


@dataclass
class ExtractionMatrix:
    """Null-space basis of the boundary constraint rows.

    ``C`` maps reduced coefficients to the full coefficient vector; columns
    are orthonormal.  The vector-valued operator acts componentwise
    (``kron(C, I_3)`` with interleaved xyz ordering).
    """

    C: np.ndarray
    constraints: tuple[BoundaryConstraint, ...]

    @property
    def n_full(self) -> int:
        return self.C.shape[0]

    @property
    def n_reduced(self) -> int:
        return self.C.shape[1]

    def vector_matrix(self) -> np.ndarray:
        return np.kron(self.C, np.eye(3))


def make_spline_space(degree: int, continuity: int, n_elements: int, L: float) -> SplineSpace:
    """Build the open uniform knot vector for the requested space."""
    if degree < 2:
        raise ValueError(f"degree must be >= 2, got {degree}")
    if not 1 <= continuity <= degree - 1:
        raise ValueError(
            f"continuity must satisfy 1 <= r <= degree - 1, got r={continuity}, degree={degree}"
        )
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    if not L > 0.0:
        raise ValueError(f"length must be positive, got {L}")
    mult = degree - continuity
    knots = [0.0] * (degree + 1)
    for e in range(1, n_elements):
        knots.extend([L * e / n_elements] * mult)
    knots.extend([float(L)] * (degree + 1))
    return SplineSpace(degree, continuity, n_elements, float(L), tuple(knots))


def _find_span(space: SplineSpace, s: float) -> int:
    """Index i with knots[i] <= s < knots[i+1] (nonempty span, right-clamped)."""
    knots = space.knot_vector
    m = space.n_basis
    if s >= knots[m]:
        return m - 1
    i = int(np.searchsorted(knots, s, side="right")) - 1
    return max(i, space.degree)


def _ders_basis(knots: tuple[float, ...], span: int, s: float, p: int, n: int) -> np.ndarray:
    """All nonzero basis functions and derivatives to order n at s.

    Returns ``ders`` with ``ders[k, j]`` the k-th derivative of basis
    function ``span - p + j``.  Classic knot-difference recursion: build the
    triangular table of basis values and divided differences, then read
    derivatives off the upper triangle.
    """
    ndu = np.empty((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for j in range(1, p + 1):
        left[j] = s - knots[span + 1 - j]
        right[j] = knots[span + j] - s
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    fact = float(p)
    for k in range(1, n + 1):
        ders[k, :] *= fact
        fact *= p - k
    return ders


def eval_basis(space: SplineSpace, s: float, max_deriv: int = 2) -> BasisEval:
    """Evaluate the nonzero basis functions (and derivatives) at ``s``."""
    if not 0 <= max_deriv <= 2:
        raise ValueError(f"max_deriv must be 0, 1 or 2, got {max_deriv}")
    if not 0.0 <= s <= space.L:
        raise ValueError(f"s={s} outside [0, {space.L}]")
    p = space.degree
    span = _find_span(space, s)
    n = min(max_deriv, p)
    ders = _ders_basis(space.knot_vector, span, s, p, n)
    out = BasisEval(first_index=span - p, values=ders[0])
    if max_deriv >= 1:
        out.d1 = ders[1] if n >= 1 else np.zeros(p + 1)
    if max_deriv >= 2:
        out.d2 = ders[2] if n >= 2 else np.zeros(p + 1)
    return out


def greville_points(space: SplineSpace) -> np.ndarray:
    """Knot averages; collocating a linear function here reproduces it exactly."""
    knots = np.asarray(space.knot_vector)
    p = space.degree
    return np.array([knots[i + 1 : i + p + 1].mean() for i in range(space.n_basis)])


def straight_configuration(space: SplineSpace, origin, direction) -> np.ndarray:
    """Control points of the straight rod ``origin + s * direction``, shape (m, 3).

    Exact by linear precision of the basis at Greville abscissae; ``direction``
    should be a unit vector for an arc-length parameterized centerline.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    g = greville_points(space)
    return origin[None, :] + g[:, None] * direction[None, :]


def essential_orders(bc: str) -> tuple[int, ...]:
    """Derivative orders fixed by the support condition itself."""
    if bc not in BC_KINDS:
        raise ValueError(f"unknown boundary kind {bc!r}, expected one of {BC_KINDS}")
    return tuple(sorted(_ESSENTIAL[bc]))


def outlier_orders(degree: int, bc: str) -> tuple[int, ...]:
    """Boundary derivative orders to pin (beyond essential ones) to remove
    spurious high-frequency boundary modes.

    Seed orders per support kind close under ``k -> k + 4``; orders above the
    polynomial degree are unreachable and dropped.  Clamped cubic ends need
    nothing; a free end pins orders 2 and 3; a pinned end pins even orders.
    """
    if bc not in BC_KINDS:
        raise ValueError(f"unknown boundary kind {bc!r}, expected one of {BC_KINDS}")
    closure: set[int] = set()
    for k in _MODE_SEED[bc]:
        j = k
        while j <= degree:
            closure.add(j)
            j += 4
    return tuple(sorted(closure - _ESSENTIAL[bc]))


def boundary_constraints(
    space: SplineSpace, bc_left: str, bc_right: str, removal: bool = True
) -> tuple[BoundaryConstraint, ...]:
    """Full constraint list for the two ends: essential plus (optionally)
    the spurious-mode removal orders."""
    cons: list[BoundaryConstraint] = []
    for end, bc in (("left", bc_left), ("right", bc_right)):
        orders = set(essential_orders(bc))
        if removal:
            orders |= set(outlier_orders(space.degree, bc))
        cons.extend(BoundaryConstraint(end, k) for k in sorted(orders))
    return tuple(cons)


def _constraint_row(space: SplineSpace, con: BoundaryConstraint) -> np.ndarray:
    """Row a with a[j] = j-th basis function's ``order``-th derivative at the end."""
    if con.end not in ("left", "right"):
        raise ValueError(f"constraint end must be 'left' or 'right', got {con.end!r}")
    p = space.degree
    if not 0 <= con.order <= p:
        raise ValueError(f"constraint order {con.order} outside [0, degree={p}]")
    s = 0.0 if con.end == "left" else space.L
    span = _find_span(space, s)
    ders = _ders_basis(space.knot_vector, span, s, p, con.order)
    row = np.zeros(space.n_basis)
    row[span - p : span + 1] = ders[con.order]
    return row


def _null_space(A: np.ndarray) -> np.ndarray:
    """Orthonormal null-space basis via SVD (deterministic)."""
    u, sv, vt = np.linalg.svd(A)
    tol = max(A.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > tol))
    return vt[rank:].T.copy()


def build_extraction(
    space: SplineSpace, constraints: tuple[BoundaryConstraint, ...] | list
) -> ExtractionMatrix:
    """Null-space extraction operator for the given boundary constraints.

    Constraint rows only touch the first/last ``degree + 1`` coefficients, so
    when those blocks are disjoint the operator is block diagonal with an
    identity interior; otherwise it falls back to the global null space.
    """
    cons = tuple(
        c if isinstance(c, BoundaryConstraint) else BoundaryConstraint(*c) for c in constraints
    )
    seen = set()
    for c in cons:
        if c.end not in ("left", "right"):
            raise ValueError(f"constraint end must be 'left' or 'right', got {c.end!r}")
        if not 0 <= c.order <= space.degree:
            raise ValueError(f"constraint order {c.order} outside [0, degree={space.degree}]")
        key = (c.end, c.order)
        if key in seen:
            raise ValueError(f"duplicate constraint {c}")
        seen.add(key)

    m = space.n_basis
    p = space.degree
    if not cons:
        return ExtractionMatrix(np.eye(m), cons)

    left = [c for c in cons if c.end == "left"]
    right = [c for c in cons if c.end == "right"]
    w = p + 1
    if m >= 2 * w:
        C_l = (
            _null_space(np.array([_constraint_row(space, c)[:w] for c in left]))
            if left
            else np.eye(w)
        )
        C_r = (
            _null_space(np.array([_constraint_row(space, c)[m - w :] for c in right]))
            if right
            else np.eye(w)
        )
        n_mid = m - 2 * w
        n_l, n_r = C_l.shape[1], C_r.shape[1]
        C = np.zeros((m, n_l + n_mid + n_r))
        C[:w, :n_l] = C_l
        if n_mid:
            C[w : w + n_mid, n_l : n_l + n_mid] = np.eye(n_mid)
        C[m - w :, n_l + n_mid :] = C_r
    else:
        A = np.array([_constraint_row(space, c) for c in cons])
        C = _null_space(A)
    return ExtractionMatrix(C, cons)
