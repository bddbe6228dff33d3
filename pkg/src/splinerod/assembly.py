"""Quadrature, cached basis tables, and global residual/tangent assembly.

The assemblers take full (unreduced) coefficient vectors, integrate with
Gauss-Legendre quadrature per element, and return residuals and exact
tangents projected through the extraction operator.  All pointwise formulas
are the vectorized counterparts of the reference implementations in
``kinematics``/``forces``; the test suite cross-checks both routes.

Dynamic residual for one time step (velocity update
``qdot+ = (2/dt)(q+ - q_n) - qdot_n``):

- momentum difference quotient ``(1/dt) [M(q+) qdot+ - M(q_n) qdot_n]``,
- the velocity-dependent inertia correction, evaluated at the midpoint state
  (default) or averaged over the endpoint states,
- internal forces at the averaged configuration ``f_int((q_n + q+)/2)``
  (default) or averaged over the endpoint states
  ``(1/2)[f_int(q+) + f_int(q_n)]``,
- configuration-independent loads at the midstep time,
- configuration-dependent loads (follower, end moment, flow) at the midpoint
  state and midstep time.

The midpoint-configuration internal force is what makes the scheme
momentum-exact: at a single configuration the axial force is parallel to the
axial strain and the bending moment is parallel to the curvature, so the
rigid-rotation pairing of stresses with strains cancels pointwise for any
pair of states, resolved or not.  The endpoint average only cancels that
pairing per configuration; across a step it leaks angular momentum at a rate
set by the force increment, which does not shrink with dt on stiff unresolved
content.  ``force_state`` switches between the two for comparison studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .forces import FlowLoad, Follower2D, Gravity, PointLoad, Pulsating, TipMoment
from .kinematics import DegenerateConfigurationError, MaterialParams
from .splines import ExtractionMatrix, SplineSpace, eval_basis

__all__ = [
    "gauss_rule",
    "basis_tables",
    "BasisTables",
    "Fields",
    "fields_at",
    "default_jac_floor",
    "StaticAssembly",
    "DynamicAssembly",
    "StepConstant",
    "assemble_static",
    "dynamic_step_constant",
    "assemble_dynamic_step",
    "mass_matrix",
    "as_vector_operator",
]

_EYE3 = np.eye(3)


def gauss_rule(n_q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [-1, 1]."""
    if not 1 <= n_q <= 16:
        raise ValueError(f"n_q must be in [1, 16], got {n_q}")
    return np.polynomial.legendre.leggauss(n_q)


@dataclass(frozen=True)
class BasisTables:
    """Per-element quadrature tables (cached per space and rule)."""

    s: np.ndarray  # (nel, nq) physical points
    w: np.ndarray  # (nq,) physical weights, uniform elements
    N: np.ndarray  # (nel, nq, a) basis values
    D1: np.ndarray  # first derivatives
    D2: np.ndarray  # second derivatives
    index: np.ndarray  # (nel, a) global basis indices
    edofs: np.ndarray  # (nel, 3a) global dof indices, interleaved xyz
    int_N: np.ndarray  # (m,) integrated basis functions


@lru_cache(maxsize=None)
def basis_tables(space: SplineSpace, n_q: int) -> BasisTables:
    xi, w_ref = gauss_rule(n_q)
    nel = space.n_elements
    a = space.degree + 1
    h = space.element_length
    s = np.empty((nel, n_q))
    N = np.empty((nel, n_q, a))
    D1 = np.empty((nel, n_q, a))
    D2 = np.empty((nel, n_q, a))
    index = np.empty((nel, a), dtype=int)
    for e in range(nel):
        first = space.first_basis_of_element(e)
        index[e] = first + np.arange(a)
        for g in range(n_q):
            sg = (e + 0.5 * (xi[g] + 1.0)) * h
            s[e, g] = sg
            ev = eval_basis(space, sg, max_deriv=2)
            if ev.first_index != first:
                raise AssertionError("quadrature point crossed an element boundary")
            N[e, g] = ev.values
            D1[e, g] = ev.d1
            D2[e, g] = ev.d2
    w = w_ref * (0.5 * h)
    edofs = (3 * index[:, :, None] + np.arange(3)).reshape(nel, 3 * a)
    int_N = np.zeros(space.n_basis)
    np.add.at(int_N, index, np.einsum("g,ega->ea", w, N))
    for arr in (s, N, D1, D2, index, edofs, int_N, w):
        arr.setflags(write=False)
    return BasisTables(s, w, N, D1, D2, index, edofs, int_N)


def default_jac_floor(space: SplineSpace) -> float:
    """Stretch floor below which the configuration counts as degenerate."""
    return 1e-10 * space.element_length


def default_n_q(space: SplineSpace) -> int:
    return space.degree + 1


@dataclass
class Fields:
    """Centerline fields at all quadrature points, shapes (nel, nq, ...)."""

    phi: np.ndarray
    phi_p: np.ndarray
    phi_pp: np.ndarray
    jac: np.ndarray
    d: np.ndarray


def fields_at(tables: BasisTables, Q: np.ndarray, jac_floor: float) -> Fields:
    """Evaluate position and derivatives; raise on degenerate stretch."""
    Qe = Q[tables.index]  # (nel, a, 3)
    phi = np.einsum("ega,eac->egc", tables.N, Qe)
    phi_p = np.einsum("ega,eac->egc", tables.D1, Qe)
    phi_pp = np.einsum("ega,eac->egc", tables.D2, Qe)
    jac = np.linalg.norm(phi_p, axis=-1)
    if np.any(jac <= jac_floor):
        e, g = np.unravel_index(int(np.argmin(jac)), jac.shape)
        raise DegenerateConfigurationError(float(jac[e, g]), jac_floor, float(tables.s[e, g]))
    d = phi_p / jac[..., None]
    return Fields(phi, phi_p, phi_pp, jac, d)


def _outer(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., :, None] * v[..., None, :]


def _skew_many(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...c,...c->...", u, v)


def _scatter_vector(tables: BasisTables, fe: np.ndarray, out: np.ndarray) -> None:
    """Accumulate element force blocks (nel, a, 3) into the flat vector."""
    np.add.at(out.reshape(-1, 3), tables.index, fe)


def _scatter_matrix(tables: BasisTables, Ke: np.ndarray, out: np.ndarray) -> None:
    """Accumulate element matrices (nel, 3a, 3a) into the full matrix."""
    for e in range(Ke.shape[0]):
        dofs = tables.edofs[e]
        out[np.ix_(dofs, dofs)] += Ke[e]


def _element_matrix(w, rows_l, blocks, rows_r) -> np.ndarray:
    """int rows_l^T blocks rows_r, contracted to (nel, 3a, 3a)."""
    Ke = np.einsum("g,ega,egij,egb->eaibj", w, rows_l, blocks, rows_r, optimize=True)
    nel, a = rows_l.shape[0], rows_l.shape[2]
    return Ke.reshape(nel, 3 * a, 3 * a)


def _strain_state(flds: Fields, mat: MaterialParams):
    """Strains, stresses and shared geometric helpers at all points."""
    jac = flds.jac[..., None]
    eps = flds.phi_p - flds.d
    kappa = np.cross(flds.phi_p, flds.phi_pp) / jac**2
    n = mat.EA * eps
    m = mat.EI * kappa
    return eps, kappa, n, m


def _internal_force(tables: BasisTables, flds: Fields, mat: MaterialParams) -> np.ndarray:
    eps, kappa, n, m = _strain_state(flds, mat)
    d = flds.d
    jac = flds.jac[..., None]
    dn = _dot(d, n)[..., None]
    Pn = n - d * dn
    b = np.cross(flds.phi_pp, m)
    Hb = b - 2.0 * d * _dot(d, b)[..., None]
    V1 = n - Pn / jac + Hb / jac**2
    V2 = np.cross(m, d) / jac
    fe = np.einsum("g,ega,egc->eac", tables.w, tables.D1, V1) + np.einsum(
        "g,ega,egc->eac", tables.w, tables.D2, V2
    )
    out = np.zeros(3 * tables.int_N.size)
    _scatter_vector(tables, fe, out)
    return out


def _internal_stiffness(tables: BasisTables, flds: Fields, mat: MaterialParams) -> np.ndarray:
    eps, kappa, n, m = _strain_state(flds, mat)
    d = flds.d
    jac = flds.jac
    j1 = jac[..., None, None]
    dd = _outer(d, d)
    P = _EYE3 - dd
    H = _EYE3 - 2.0 * dd

    E_eps = _EYE3 - P / j1
    E_k1 = -_skew_many(flds.phi_pp) @ H / j1**2
    E_k2 = _skew_many(d) / j1

    # geometric blocks (stress held fixed)
    dn = _dot(d, n)[..., None, None]
    A1 = (_outer(d, n) + _outer(n, d) - 3.0 * dn * dd + dn * _EYE3) / j1**2
    b = np.cross(flds.phi_pp, m)
    bd = _dot(b, d)[..., None, None]
    A2 = (-2.0 / j1**3) * (_outer(b, d) + _outer(d, b) + bd * (_EYE3 - 4.0 * dd))
    m_x = _skew_many(m)
    G12 = -(H @ m_x) / j1**2
    G21 = (m_x @ H) / j1**2

    tp = lambda A: np.swapaxes(A, -1, -2)
    S11 = mat.EA * tp(E_eps) @ E_eps + mat.EI * tp(E_k1) @ E_k1 + A1 + A2
    S12 = mat.EI * tp(E_k1) @ E_k2 + G12
    S21 = mat.EI * tp(E_k2) @ E_k1 + G21
    S22 = mat.EI * tp(E_k2) @ E_k2

    w = tables.w
    Ke = (
        _element_matrix(w, tables.D1, S11, tables.D1)
        + _element_matrix(w, tables.D1, S12, tables.D2)
        + _element_matrix(w, tables.D2, S21, tables.D1)
        + _element_matrix(w, tables.D2, S22, tables.D2)
    )
    K = np.zeros((3 * tables.int_N.size,) * 2)
    _scatter_matrix(tables, Ke, K)
    return K


def _mass_blocks(flds: Fields, mat: MaterialParams) -> np.ndarray:
    """Direction-change mass density blocks alpha I_rho P_d / jac^2."""
    dd = _outer(flds.d, flds.d)
    return (mat.alpha * mat.I_rho / flds.jac[..., None, None] ** 2) * (_EYE3 - dd)


def mass_matrix(
    space: SplineSpace, q: np.ndarray, mat: MaterialParams, n_q: int | None = None
) -> np.ndarray:
    """Full mass matrix at configuration q (translational + direction-change)."""
    tables = basis_tables(space, n_q or default_n_q(space))
    flds = fields_at(tables, q.reshape(-1, 3), default_jac_floor(space))
    w = tables.w
    M0e = mat.A_rho * np.einsum("g,ega,egb->eab", w, tables.N, tables.N)
    nel, _, a = tables.N.shape
    Ke = np.einsum("eab,ij->eaibj", M0e, _EYE3).reshape(nel, 3 * a, 3 * a)
    Ke = Ke + _element_matrix(w, tables.D1, _mass_blocks(flds, mat), tables.D1)
    M = np.zeros((space.n_dof,) * 2)
    _scatter_matrix(tables, Ke, M)
    return M


def _momentum_vector(
    tables: BasisTables, flds: Fields, qdot: np.ndarray, mat: MaterialParams
) -> np.ndarray:
    """M(q) qdot assembled directly as a vector."""
    Ve = qdot.reshape(-1, 3)[tables.index]
    v = np.einsum("ega,eac->egc", tables.N, Ve)
    u = np.einsum("ega,eac->egc", tables.D1, Ve)
    p0 = mat.A_rho * v
    jac2 = flds.jac[..., None] ** 2
    p1 = (mat.alpha * mat.I_rho / jac2) * (u - flds.d * _dot(flds.d, u)[..., None])
    fe = np.einsum("g,ega,egc->eac", tables.w, tables.N, p0) + np.einsum(
        "g,ega,egc->eac", tables.w, tables.D1, p1
    )
    out = np.zeros(qdot.size)
    _scatter_vector(tables, fe, out)
    return out


def _correction_vector(
    tables: BasisTables, flds: Fields, qdot: np.ndarray, mat: MaterialParams
) -> np.ndarray:
    """Assembled velocity-dependent inertia correction (against D1 rows)."""
    Ve = qdot.reshape(-1, 3)[tables.index]
    u = np.einsum("ega,eac->egc", tables.D1, Ve)
    d = flds.d
    c = _dot(d, u)[..., None]
    w_vec = u - d * c
    S = _dot(u, w_vec)[..., None]
    dens = (mat.alpha * mat.I_rho / flds.jac[..., None] ** 3) * (c * w_vec + S * d)
    fe = np.einsum("g,ega,egc->eac", tables.w, tables.D1, dens)
    out = np.zeros(qdot.size)
    _scatter_vector(tables, fe, out)
    return out


def _inertia_tangent_setup(tables: BasisTables, flds: Fields, qdot: np.ndarray):
    Ve = qdot.reshape(-1, 3)[tables.index]
    u = np.einsum("ega,eac->egc", tables.D1, Ve)
    d = flds.d
    dd = _outer(d, d)
    c = _dot(d, u)[..., None, None]
    w_vec = u - d * _dot(d, u)[..., None]
    return u, d, dd, c, w_vec


def _assemble_d1_blocks(tables: BasisTables, blocks: np.ndarray, n_dof: int) -> np.ndarray:
    K = np.zeros((n_dof, n_dof))
    _scatter_matrix(tables, _element_matrix(tables.w, tables.D1, blocks, tables.D1), K)
    return K


def _momentum_config_tangent(
    tables: BasisTables, flds: Fields, qdot: np.ndarray, mat: MaterialParams
) -> np.ndarray:
    """Gradient of M(q) qdot w.r.t. q, velocity held fixed."""
    u, d, dd, c, w_vec = _inertia_tangent_setup(tables, flds, qdot)
    H = _EYE3 - 2.0 * dd
    s3 = mat.alpha * mat.I_rho / flds.jac[..., None, None] ** 3
    blocks = -s3 * (c * H + _outer(d, u) + 2.0 * _outer(w_vec, d))
    return _assemble_d1_blocks(tables, blocks, qdot.size)


def _correction_tangents(
    tables: BasisTables, flds: Fields, qdot: np.ndarray, mat: MaterialParams
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the inertia correction w.r.t. configuration and velocity."""
    u, d, dd, c, w_vec = _inertia_tangent_setup(tables, flds, qdot)
    P = _EYE3 - dd
    u2 = _dot(u, u)[..., None, None]
    s3 = mat.alpha * mat.I_rho / flds.jac[..., None, None] ** 3
    s4 = mat.alpha * mat.I_rho / flds.jac[..., None, None] ** 4
    K3b = s4 * (
        -4.0 * c * (_outer(u, d) + _outer(d, u))
        + _outer(u, u)
        + (12.0 * c**2 - 4.0 * u2) * dd
        + (u2 - 2.0 * c**2) * _EYE3
    )
    K4b = s3 * (c * P + _outer(w_vec, d) + 2.0 * _outer(d, w_vec))
    n_dof = qdot.size
    return (
        _assemble_d1_blocks(tables, K3b, n_dof),
        _assemble_d1_blocks(tables, K4b, n_dof),
    )


# ---------------------------------------------------------------------------
# external loads


def _point_eval(space: SplineSpace, s_loc: float):
    ev = eval_basis(space, s_loc, max_deriv=2)
    idx = np.arange(ev.first_index, ev.first_index + space.degree + 1)
    return ev, idx


def _config_independent_force(
    space: SplineSpace,
    tables: BasisTables,
    loads,
    mat: MaterialParams,
    t: float | None,
    load_factor: float,
) -> np.ndarray:
    """Point, gravity and harmonic loads; ``t=None`` means static analysis."""
    f = np.zeros(space.n_dof)
    fm = f.reshape(-1, 3)
    for load in loads:
        if isinstance(load, PointLoad):
            if t is None:
                if load.t_c is not None:
                    raise ValueError("time-pulsed point load is not meaningful statically")
                F = load_factor * np.asarray(load.F_c)
            else:
                F = load.force(t)
            ev, idx = _point_eval(space, load.s_loc)
            fm[idx] += ev.values[:, None] * F
        elif isinstance(load, Gravity):
            g = load_factor * mat.A_rho * np.asarray(load.g_vector)
            fm += tables.int_N[:, None] * g
        elif isinstance(load, Pulsating):
            if t is None:
                raise ValueError("harmonic point load is not meaningful statically")
            ev, idx = _point_eval(space, load.s_loc)
            fm[idx] += ev.values[:, None] * load.force(t)
    return f


def _config_dependent_force(
    space: SplineSpace,
    tables: BasisTables,
    loads,
    flds: Fields,
    Q: np.ndarray,
    load_factor: float,
    jac_floor: float,
    want_tangent: bool,
):
    """Follower and end-moment loads at the given state.

    Returns (force, tangent); the tangent is w.r.t. the state the fields were
    built from (chain factors are applied by the caller).
    """
    n_dof = space.n_dof
    f = np.zeros(n_dof)
    K = np.zeros((n_dof, n_dof)) if want_tangent else None
    e2 = np.array([0.0, 1.0, 0.0])
    for load in loads:
        if isinstance(load, Follower2D):
            dens = load_factor * load.f0 * np.cross(e2, flds.d)
            fe = np.einsum("g,ega,egc->eac", tables.w, tables.N, dens)
            _scatter_vector(tables, fe, f)
            if want_tangent:
                blocks = (
                    load_factor
                    * load.f0
                    / flds.jac[..., None, None]
                    * (_skew_many(np.broadcast_to(e2, flds.d.shape)) @ (_EYE3 - _outer(flds.d, flds.d)))
                )
                _scatter_matrix(tables, _element_matrix(tables.w, tables.N, blocks, tables.D1), K)
        elif isinstance(load, TipMoment):
            ev, idx = _point_eval(space, space.L)
            phi_p = ev.d1 @ Q[idx]
            jac = np.linalg.norm(phi_p)
            if jac <= jac_floor:
                raise DegenerateConfigurationError(float(jac), jac_floor, space.L)
            d = phi_p / jac
            m_vec = load_factor * np.asarray(load.m_vector)
            fv = np.cross(m_vec, d) / jac
            f.reshape(-1, 3)[idx] += ev.d1[:, None] * fv
            if want_tangent:
                m_x = np.array(
                    [
                        [0.0, -m_vec[2], m_vec[1]],
                        [m_vec[2], 0.0, -m_vec[0]],
                        [-m_vec[1], m_vec[0], 0.0],
                    ]
                )
                Kt = (m_x - 2.0 * np.outer(np.cross(m_vec, d), d)) / jac**2
                dofs = (3 * idx[:, None] + np.arange(3)).reshape(-1)
                Kp = np.einsum("a,ij,b->aibj", ev.d1, Kt, ev.d1).reshape(dofs.size, dofs.size)
                K[np.ix_(dofs, dofs)] += Kp
    return f, K


def _flow_force(
    space: SplineSpace,
    tables: BasisTables,
    loads,
    flds: Fields,
    vel: np.ndarray,
    acc: np.ndarray,
    t: float,
    chain: tuple[float, float, float, float] | None,
):
    """Distributed fluid force at the given state (all flow loads summed).

    ``chain = (c_phi_p, c_pos, c_vel, c_acc)`` are the derivatives of the
    evaluation state w.r.t. the unknown; pass ``None`` to skip the tangent.
    """
    n_dof = space.n_dof
    f = np.zeros(n_dof)
    K = np.zeros((n_dof, n_dof)) if chain is not None else None
    flow_loads = [ld for ld in loads if isinstance(ld, FlowLoad)]
    if not flow_loads:
        return f, K
    Vm = vel.reshape(-1, 3)[tables.index]
    Am = acc.reshape(-1, 3)[tables.index]
    phi_dot = np.einsum("ega,eac->egc", tables.N, Vm)
    phi_ddot = np.einsum("ega,eac->egc", tables.N, Am)
    d = flds.d
    jac = flds.jac
    dd = _outer(d, d)
    P = _EYE3 - dd
    H = _EYE3 - 2.0 * dd

    for load in flow_loads:
        profile = load.profile
        z = flds.phi[..., profile.coord_axis]
        e_ax = np.zeros(3)
        e_ax[profile.coord_axis] = 1.0
        v_inf = profile.velocity(z, t)
        a_inf = profile.accel(z, t)
        dv_dz = profile.d_velocity_dz(z, t)
        V = v_inf - phi_dot
        a = a_inf - phi_ddot
        C1, C2, C3 = load.c_added, load.c_normal, load.c_tangent

        uN = V - d * _dot(d, V)[..., None]
        uT = d * _dot(d, V)[..., None]
        nN = np.linalg.norm(uN, axis=-1)[..., None]
        nT = np.linalg.norm(uT, axis=-1)[..., None]

        force = C1 * (a - d * _dot(d, a)[..., None]) + C2 * nN * uN + C3 * nT * uT
        fe = np.einsum("g,ega,egc->eac", tables.w, tables.N, force)
        _scatter_vector(tables, fe, f)

        if chain is None:
            continue
        c_pp, c_pos, c_vel, c_acc = chain

        def drag_gain(u, nu):
            # |u| (I + u_hat u_hat^T), smooth zero at u = 0
            out = nu[..., None, None] * np.broadcast_to(_EYE3, u.shape + (3,)).copy()
            safe = np.where(nu > 0.0, nu, 1.0)[..., None]
            uh = u / safe
            return out + nu[..., None, None] * _outer(uh, uh)

        gN = drag_gain(uN, nN[..., 0])
        gT = drag_gain(uT, nT[..., 0])
        Vd = _dot(V, d)[..., None, None]
        dPV = (1.0 / jac[..., None, None]) * (Vd * H + _outer(d, V))  # d(uT)/d(phi')
        ad = _dot(a, d)[..., None, None]

        if profile.kind == "parabolic_wind":
            da_dz_mag = (
                2.0 * profile.scale * z * profile.mod_amplitude * profile.mod_rate
                * np.cos(profile.mod_rate * t)
            )
            da_dz = da_dz_mag[..., None] * np.asarray(profile.direction)
        else:
            da_dz = np.zeros_like(V)

        P_da = np.einsum("egij,egj->egi", P, da_dz)
        P_dv = np.einsum("egij,egj->egi", P, dv_dz)
        T_dv = d * _dot(d, dv_dz)[..., None]

        blk_pp = (
            -C1 / jac[..., None, None] * (ad * H + _outer(d, a))
            - C2 * gN @ dPV
            + C3 * gT @ dPV
        )
        # position block: freestream field gradients enter through z
        blk_pos = (
            C1 * _outer(P_da, np.broadcast_to(e_ax, P_da.shape))
            + C2 * _outer(np.einsum("egij,egj->egi", gN, P_dv), np.broadcast_to(e_ax, P_da.shape))
            + C3 * _outer(np.einsum("egij,egj->egi", gT, T_dv), np.broadcast_to(e_ax, P_da.shape))
        )
        blk_vel = -(C2 * gN @ P + C3 * gT @ dd)
        blk_acc = -C1 * P

        K_pp = _element_matrix(tables.w, tables.N, c_pp * blk_pp, tables.D1)
        K_nn = _element_matrix(
            tables.w, tables.N, c_pos * blk_pos + c_vel * blk_vel + c_acc * blk_acc, tables.N
        )
        _scatter_matrix(tables, K_pp + K_nn, K)
    return f, K


# ---------------------------------------------------------------------------
# top-level assemblers


def as_vector_operator(C, n_basis: int) -> np.ndarray:
    """Vector-valued extraction operator from several accepted forms."""
    if C is None:
        return np.eye(3 * n_basis)
    if isinstance(C, ExtractionMatrix):
        return C.vector_matrix()
    C = np.asarray(C)
    if C.shape[0] == n_basis:  # scalar operator: expand componentwise
        return np.kron(C, _EYE3)
    return C


@dataclass
class StaticAssembly:
    residual: np.ndarray
    tangent: np.ndarray


@dataclass
class DynamicAssembly:
    residual: np.ndarray
    tangent: np.ndarray


@dataclass
class StepConstant:
    """Per-step constant part of the dynamic residual (previous-state terms
    and time-centered loads); reused across the Newton iterations."""

    vector: np.ndarray
    t_mid: float


def assemble_static(
    space: SplineSpace,
    C,
    q: np.ndarray,
    loads,
    material: MaterialParams,
    load_factor: float = 1.0,
    n_q: int | None = None,
    jac_floor: float | None = None,
    residual_scale: float = 1.0,
) -> StaticAssembly:
    """Reduced static residual ``f_int - load_factor * f_ext`` and tangent."""
    for load in loads:
        if isinstance(load, (FlowLoad,)):
            raise ValueError("flow loads are not meaningful in static analysis")
    tables = basis_tables(space, n_q or default_n_q(space))
    floor = default_jac_floor(space) if jac_floor is None else jac_floor
    Q = q.reshape(-1, 3)
    flds = fields_at(tables, Q, floor)

    g = _internal_force(tables, flds, material)
    K = _internal_stiffness(tables, flds, material)
    g -= _config_independent_force(space, tables, loads, material, None, load_factor)
    f_cd, K_cd = _config_dependent_force(
        space, tables, loads, flds, Q, load_factor, floor, want_tangent=True
    )
    g -= f_cd
    K -= K_cd

    Cv = as_vector_operator(C, space.n_basis)
    return StaticAssembly(
        residual_scale * (Cv.T @ g), residual_scale * (Cv.T @ K @ Cv)
    )


def dynamic_step_constant(
    space: SplineSpace,
    q_n: np.ndarray,
    qdot_n: np.ndarray,
    dt: float,
    loads,
    material: MaterialParams,
    t_n: float = 0.0,
    n_q: int | None = None,
    jac_floor: float | None = None,
    correction_state: str = "midpoint",
    force_state: str = "midpoint",
) -> StepConstant:
    """Previous-state and load terms that stay fixed during Newton."""
    tables = basis_tables(space, n_q or default_n_q(space))
    floor = default_jac_floor(space) if jac_floor is None else jac_floor
    flds_n = fields_at(tables, q_n.reshape(-1, 3), floor)
    t_mid = t_n + 0.5 * dt

    vec = -(1.0 / dt) * _momentum_vector(tables, flds_n, qdot_n, material)
    if force_state == "endpoints":
        vec += 0.5 * _internal_force(tables, flds_n, material)
    vec -= _config_independent_force(space, tables, loads, material, t_mid, 1.0)
    if correction_state == "endpoints":
        vec += 0.5 * _correction_vector(tables, flds_n, qdot_n, material)
    return StepConstant(vec, t_mid)


def assemble_dynamic_step(
    space: SplineSpace,
    C,
    q_n: np.ndarray,
    qdot_n: np.ndarray,
    q_next: np.ndarray,
    dt: float,
    loads,
    material: MaterialParams,
    t_n: float = 0.0,
    n_q: int | None = None,
    jac_floor: float | None = None,
    correction_state: str = "midpoint",
    force_state: str = "midpoint",
    step_constant: StepConstant | None = None,
    residual_scale: float = 1.0,
) -> DynamicAssembly:
    """Reduced residual and exact tangent of one implicit time step."""
    if correction_state not in ("midpoint", "endpoints"):
        raise ValueError(f"unknown correction_state {correction_state!r}")
    if force_state not in ("midpoint", "endpoints"):
        raise ValueError(f"unknown force_state {force_state!r}")
    n_q = n_q or default_n_q(space)
    tables = basis_tables(space, n_q)
    floor = default_jac_floor(space) if jac_floor is None else jac_floor
    if step_constant is None:
        step_constant = dynamic_step_constant(
            space,
            q_n,
            qdot_n,
            dt,
            loads,
            material,
            t_n,
            n_q,
            floor,
            correction_state,
            force_state,
        )

    qdot_next = (2.0 / dt) * (q_next - q_n) - qdot_n
    q_mid = 0.5 * (q_n + q_next)
    qdot_mid = (q_next - q_n) / dt
    qddot_mid = (2.0 / dt**2) * (q_next - q_n) - (2.0 / dt) * qdot_n

    flds_next = fields_at(tables, q_next.reshape(-1, 3), floor)
    flds_mid = fields_at(tables, q_mid.reshape(-1, 3), floor)

    g = step_constant.vector.copy()
    g += (1.0 / dt) * _momentum_vector(tables, flds_next, qdot_next, material)
    if force_state == "midpoint":
        g += _internal_force(tables, flds_mid, material)
    else:
        g += 0.5 * _internal_force(tables, flds_next, material)

    if correction_state == "midpoint":
        g += _correction_vector(tables, flds_mid, qdot_mid, material)
        K3_c, K4_c = _correction_tangents(tables, flds_mid, qdot_mid, material)
    else:
        g += 0.5 * _correction_vector(tables, flds_next, qdot_next, material)
        K3_c, K4_c = _correction_tangents(tables, flds_next, qdot_next, material)

    # configuration-dependent loads at the midpoint state
    f_cd, K_cd = _config_dependent_force(
        space, tables, loads, flds_mid, q_mid.reshape(-1, 3), 1.0, floor, want_tangent=True
    )
    g -= f_cd
    f_fl, K_fl = _flow_force(
        space,
        tables,
        loads,
        flds_mid,
        qdot_mid,
        qddot_mid,
        step_constant.t_mid,
        chain=(0.5, 0.5, 1.0 / dt, 2.0 / dt**2),
    )
    g -= f_fl

    J = (1.0 / dt) * _momentum_config_tangent(tables, flds_next, qdot_next, material)
    J += (2.0 / dt**2) * mass_matrix(space, q_next, material, n_q)
    J += 0.5 * K3_c + (1.0 / dt) * K4_c
    if force_state == "midpoint":
        J += 0.5 * _internal_stiffness(tables, flds_mid, material)
    else:
        J += 0.5 * _internal_stiffness(tables, flds_next, material)
    J -= 0.5 * K_cd
    J -= K_fl

    Cv = as_vector_operator(C, space.n_basis)
    return DynamicAssembly(
        residual_scale * (Cv.T @ g), residual_scale * (Cv.T @ J @ Cv)
    )
