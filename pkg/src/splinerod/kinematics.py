"""Pointwise centerline kinematics and constitutive formulas.

Everything here is local to one arc-length point: the unit tangent (director)
and its projectors, axial/bending strain and stress, strain-displacement rows,
mass-density blocks, the velocity-dependent inertia correction, and the exact
linearizations of all of these.  Quadrature and assembly live elsewhere.

Conventions: ``phi_p``/``phi_pp`` are first/second arc-length derivatives of
the centerline, ``jac = |phi_p|``, ``d = phi_p / jac``,
``P_d = I - d d^T`` (normal projector), ``H_d = I - 2 d d^T`` (reflection).
The rotational inertia scale ``alpha`` multiplies every term stemming from the
direction-change part of the kinetic energy (mass block, correction, tangents).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaterialParams",
    "PointKinematics",
    "StrainStress",
    "DegenerateConfigurationError",
    "skew",
    "director_ops",
    "point_kinematics",
    "strain_stress",
    "b_matrix_point",
    "mass_density_point",
    "inertia_residual_point",
    "inertia_tangent_blocks",
    "geometric_stiffness_blocks",
    "kinetic_energy_density",
    "strain_energy_density",
    "momentum_densities",
]

_EYE3 = np.eye(3)


@dataclass(frozen=True)
class MaterialParams:
    """Axial stiffness EA, bending stiffness EI, line density A_rho,
    rotary line inertia I_rho, and the rotary-inertia scale alpha."""

    EA: float
    EI: float
    A_rho: float
    I_rho: float
    alpha: float = 1.0


class DegenerateConfigurationError(RuntimeError):
    """Raised when the centerline tangent collapses below the floor."""

    def __init__(self, jac: float, floor: float, s: float | None = None):
        self.jac = jac
        self.floor = floor
        self.s = s
        where = f" at s={s:.6g}" if s is not None else ""
        super().__init__(f"degenerate configuration{where}: |phi'| = {jac:.3e} < floor {floor:.3e}")


@dataclass
class PointKinematics:
    """Centerline state at one point (position, derivatives, director frame)."""

    phi: np.ndarray
    phi_p: np.ndarray
    phi_pp: np.ndarray
    d: np.ndarray
    P_d: np.ndarray
    H_d: np.ndarray
    jac: float


@dataclass
class StrainStress:
    """Axial strain/force (eps, n) and bending strain/moment (kappa, m)."""

    eps: np.ndarray
    kappa: np.ndarray
    n: np.ndarray
    m: np.ndarray


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def director_ops(phi_p: np.ndarray, jac_floor: float = 0.0, s: float | None = None):
    """Unit tangent, projectors and stretch from the first derivative."""
    jac = float(np.linalg.norm(phi_p))
    if jac <= jac_floor or jac == 0.0:
        raise DegenerateConfigurationError(jac, jac_floor, s)
    d = phi_p / jac
    dd = np.outer(d, d)
    return d, _EYE3 - dd, _EYE3 - 2.0 * dd, jac


def point_kinematics(
    phi: np.ndarray,
    phi_p: np.ndarray,
    phi_pp: np.ndarray,
    jac_floor: float = 0.0,
    s: float | None = None,
) -> PointKinematics:
    d, P_d, H_d, jac = director_ops(phi_p, jac_floor, s)
    return PointKinematics(phi, phi_p, phi_pp, d, P_d, H_d, jac)


def strain_stress(kin: PointKinematics, mat: MaterialParams) -> StrainStress:
    """Axial strain ``phi' - d``, curvature ``d x d'``, linear material law."""
    eps = kin.phi_p - kin.d
    kappa = np.cross(kin.phi_p, kin.phi_pp) / kin.jac**2
    return StrainStress(eps, kappa, mat.EA * eps, mat.EI * kappa)


def b_matrix_point(kin: PointKinematics, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Strain-displacement matrix at one point, shape (6, 3*(len(d1))).

    Rows 0-2: variation of the axial strain; rows 3-5: variation of the
    curvature.  ``d1``/``d2`` are the local basis-derivative values.
    """
    n_loc = len(d1)
    B = np.zeros((6, 3 * n_loc))
    E_eps = _EYE3 - kin.P_d / kin.jac
    E_kap_1 = -skew(kin.phi_pp) @ kin.H_d / kin.jac**2
    E_kap_2 = skew(kin.d) / kin.jac
    for j in range(n_loc):
        B[:3, 3 * j : 3 * j + 3] = d1[j] * E_eps
        B[3:, 3 * j : 3 * j + 3] = d1[j] * E_kap_1 + d2[j] * E_kap_2
    return B


def mass_density_point(kin: PointKinematics, mat: MaterialParams):
    """Densities (D0, D1) of the two mass blocks.

    The mass matrix is ``int N^T D0 N + N'^T D1 N' ds`` with translational
    block ``D0 = A_rho I`` and direction-change block
    ``D1 = alpha I_rho P_d / jac^2``.
    """
    D0 = mat.A_rho * _EYE3
    D1 = (mat.alpha * mat.I_rho / kin.jac**2) * kin.P_d
    return D0, D1


def inertia_residual_point(kin: PointKinematics, phi_dot_p: np.ndarray, mat: MaterialParams):
    """Velocity-dependent inertia vectors (densities against N'_i).

    Returns ``(rate_term, correction_term)``:

    - ``rate_term`` is the density of (d/dt of the direction-change mass
      block) applied to the velocity; the time stepper never adds it (its
      difference quotient of the momentum carries it) but it is exposed for
      diagnostics,
    - ``correction_term`` is minus the configuration gradient of the
      direction-change kinetic energy; the time stepper adds it to the
      residual.
    """
    u = phi_dot_p
    w = kin.P_d @ u
    c = float(kin.d @ u)
    S = float(u @ w)
    scale = mat.alpha * mat.I_rho / kin.jac**3
    rate_term = -scale * (3.0 * c * w + S * kin.d)
    correction_term = scale * (c * w + S * kin.d)
    return rate_term, correction_term


def inertia_tangent_blocks(kin: PointKinematics, phi_dot_p: np.ndarray, mat: MaterialParams):
    """Exact 3x3 linearization densities of the velocity-dependent inertia.

    Returns ``(K1, K3, K4)``, all sandwiched between ``N'^T ... N'`` by the
    assembler:

    - ``K1``: gradient of (direction-change mass block @ velocity) w.r.t.
      the first spatial derivative, velocity held fixed,
    - ``K3``: gradient of the correction term w.r.t. the first spatial
      derivative,
    - ``K4``: gradient of the correction term w.r.t. the velocity's first
      spatial derivative.
    """
    u = phi_dot_p
    d = kin.d
    w = kin.P_d @ u
    c = float(d @ u)
    u2 = float(u @ u)
    dd = np.outer(d, d)
    scale3 = mat.alpha * mat.I_rho / kin.jac**3
    scale4 = mat.alpha * mat.I_rho / kin.jac**4

    K1 = -scale3 * (c * kin.H_d + np.outer(d, u) + 2.0 * np.outer(w, d))
    K3 = scale4 * (
        -4.0 * c * (np.outer(u, d) + np.outer(d, u))
        + np.outer(u, u)
        + (12.0 * c**2 - 4.0 * u2) * dd
        + (u2 - 2.0 * c**2) * _EYE3
    )
    K4 = scale3 * (c * kin.P_d + np.outer(w, d) + 2.0 * np.outer(d, w))
    return K1, K3, K4


def geometric_stiffness_blocks(kin: PointKinematics, ss: StrainStress):
    """Geometric-stiffness densities (G11, G12, G21).

    The geometric part of the static tangent is
    ``int N'^T G11 N' + N'^T G12 N'' + N''^T G21 N' ds`` (no N''-N'' block).
    """
    d = kin.d
    n = ss.n
    m = ss.m
    jac = kin.jac
    dd = np.outer(d, d)
    dn = float(d @ n)
    b = np.cross(kin.phi_pp, m)
    bd = float(b @ d)

    A1 = (np.outer(d, n) + np.outer(n, d) - 3.0 * dn * dd + dn * _EYE3) / jac**2
    A2 = (-2.0 / jac**3) * (np.outer(b, d) + np.outer(d, b) + bd * (_EYE3 - 4.0 * dd))
    m_x = skew(m)
    G12 = -(kin.H_d @ m_x) / jac**2
    G21 = (m_x @ kin.H_d) / jac**2
    return A1 + A2, G12, G21


def kinetic_energy_density(
    kin: PointKinematics, phi_dot: np.ndarray, phi_dot_p: np.ndarray, mat: MaterialParams
) -> float:
    """Translational plus direction-change kinetic energy per unit length."""
    u = phi_dot_p
    return 0.5 * mat.A_rho * float(phi_dot @ phi_dot) + 0.5 * mat.alpha * mat.I_rho * float(
        u @ kin.P_d @ u
    ) / kin.jac**2


def strain_energy_density(ss: StrainStress) -> float:
    return 0.5 * (float(ss.n @ ss.eps) + float(ss.m @ ss.kappa))


def momentum_densities(
    kin: PointKinematics, phi_dot: np.ndarray, phi_dot_p: np.ndarray, mat: MaterialParams
):
    """Linear and angular (about the origin) momentum per unit length."""
    lin = mat.A_rho * phi_dot
    d_dot = kin.P_d @ phi_dot_p / kin.jac
    ang = mat.A_rho * np.cross(kin.phi, phi_dot) + mat.alpha * mat.I_rho * np.cross(kin.d, d_dot)
    return lin, ang
