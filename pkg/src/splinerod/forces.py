"""External load cases: point loads, gravity, follower/tip loads, fluid flow.

Load cases are small frozen dataclasses consumed by the assemblers.  The flow
model is a slender-body force per unit length built from the relative fluid
velocity/acceleration split into components normal and tangential to the
centerline: an added-mass term driven by the normal relative acceleration and
quadratic normal/tangential drag.  Every configuration-dependent load also
exposes its exact derivative blocks so the implicit solver keeps quadratic
convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import PointKinematics, skew

__all__ = [
    "PointLoad",
    "Gravity",
    "Follower2D",
    "TipMoment",
    "Pulsating",
    "FlowLoad",
    "FreestreamProfile",
    "still_fluid",
    "rotating_wind_profile",
    "TermBlocks",
    "FlowPointForce",
    "vanishing_point_load",
    "pulsating_force",
    "follower_force_2d",
    "tip_moment_load",
    "flow_force_point",
]

_E2 = np.array([0.0, 1.0, 0.0])


def _vec3(v) -> tuple[float, float, float]:
    a = np.asarray(v, dtype=float).reshape(3)
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class PointLoad:
    """Concentrated force at arc length ``s_loc``.

    With ``t_c`` set, the force ramps linearly to ``F_c`` at ``t_c/2``, back
    to zero at ``t_c`` and stays off; with ``t_c=None`` it is constant.
    """

    s_loc: float
    F_c: tuple[float, float, float]
    t_c: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "F_c", _vec3(self.F_c))

    def force(self, t: float) -> np.ndarray:
        F = np.asarray(self.F_c)
        if self.t_c is None:
            return F
        return vanishing_point_load(t, self.t_c, F)


@dataclass(frozen=True)
class Gravity:
    """Uniform acceleration field; line force is A_rho * g_vector."""

    g_vector: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "g_vector", _vec3(self.g_vector))


@dataclass(frozen=True)
class Follower2D:
    """Distributed load of magnitude ``f0`` turning with the centerline,
    directed along ``e_y x d`` (stays normal to the rod in the x-z sense)."""

    f0: float


@dataclass(frozen=True)
class TipMoment:
    """Concentrated end moment at ``s = L``, as a generalized force on the
    first-derivative degrees of freedom."""

    m_vector: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "m_vector", _vec3(self.m_vector))


@dataclass(frozen=True)
class Pulsating:
    """Harmonic point force ``A_F sin(omega t)`` along ``direction``."""

    A_F: float
    omega: float
    direction: tuple[float, float, float]
    s_loc: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _vec3(self.direction))

    def force(self, t: float) -> np.ndarray:
        return pulsating_force(t, self.A_F, self.omega) * np.asarray(self.direction)


@dataclass(frozen=True)
class FreestreamProfile:
    """Freestream fluid velocity as a field over one spatial coordinate.

    ``kind``:

    - ``"still"``: quiescent fluid,
    - ``"rotating_wind"``: constant-magnitude horizontal wind whose heading
      rotates linearly with the coordinate: at ``z`` the velocity is
      ``v0 * (cos(beta0 - 2 beta0 z / L_ref), sin(beta0 - 2 beta0 z / L_ref), 0)``,
    - ``"parabolic_wind"``: ``scale * z^2 (1 + mod_amplitude sin(mod_rate t))``
      along ``direction``,
    - ``"table"``: piecewise-linear speed over ``z_points`` along
      ``direction``, clamped outside the table.

    ``coord_axis`` selects which component of the position feeds the field.
    """

    kind: str = "still"
    coord_axis: int = 2
    v0: float = 0.0
    beta0: float = 0.0
    L_ref: float = 1.0
    scale: float = 1.0
    mod_rate: float = 0.0
    mod_amplitude: float = 0.0
    direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    z_points: tuple[float, ...] = ()
    speeds: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("still", "rotating_wind", "parabolic_wind", "table"):
            raise ValueError(f"unknown freestream kind {self.kind!r}")
        if self.coord_axis not in (0, 1, 2):
            raise ValueError(f"coord_axis must be 0, 1 or 2, got {self.coord_axis}")
        object.__setattr__(self, "direction", _vec3(self.direction))
        object.__setattr__(self, "z_points", tuple(float(z) for z in self.z_points))
        object.__setattr__(self, "speeds", tuple(float(v) for v in self.speeds))
        if self.kind == "table" and len(self.z_points) != len(self.speeds):
            raise ValueError("table profile needs matching z_points and speeds")
        if self.kind == "table" and len(self.z_points) < 2:
            raise ValueError("table profile needs at least two samples")

    # All three evaluators broadcast over z: z shape (...) -> (..., 3).

    def velocity(self, z, t: float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "still":
            return np.zeros(z.shape + (3,))
        if self.kind == "rotating_wind":
            return rotating_wind_profile(z, self.v0, self.beta0, self.L_ref)
        if self.kind == "parabolic_wind":
            mag = self.scale * z**2 * (1.0 + self.mod_amplitude * np.sin(self.mod_rate * t))
            return mag[..., None] * np.asarray(self.direction)
        mag = np.interp(z, self.z_points, self.speeds)
        return mag[..., None] * np.asarray(self.direction)

    def accel(self, z, t: float) -> np.ndarray:
        """Partial time derivative of the freestream velocity."""
        z = np.asarray(z, dtype=float)
        if self.kind == "parabolic_wind":
            mag = self.scale * z**2 * self.mod_amplitude * self.mod_rate * np.cos(self.mod_rate * t)
            return mag[..., None] * np.asarray(self.direction)
        return np.zeros(z.shape + (3,))

    def d_velocity_dz(self, z, t: float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "still":
            return np.zeros(z.shape + (3,))
        if self.kind == "rotating_wind":
            ang = self.beta0 - 2.0 * self.beta0 * z / self.L_ref
            rate = 2.0 * self.beta0 / self.L_ref
            comp = np.stack(
                [np.sin(ang) * self.v0 * rate, -np.cos(ang) * self.v0 * rate, np.zeros_like(ang)],
                axis=-1,
            )
            return comp
        if self.kind == "parabolic_wind":
            mag = 2.0 * self.scale * z * (1.0 + self.mod_amplitude * np.sin(self.mod_rate * t))
            return mag[..., None] * np.asarray(self.direction)
        zp = np.asarray(self.z_points)
        sp = np.asarray(self.speeds)
        slopes = np.diff(sp) / np.diff(zp)
        idx = np.clip(np.searchsorted(zp, z, side="right") - 1, 0, len(slopes) - 1)
        mag = np.where((z <= zp[0]) | (z >= zp[-1]), 0.0, slopes[idx])
        return mag[..., None] * np.asarray(self.direction)


def rotating_wind_profile(z, v0: float, beta0: float, L_ref: float) -> np.ndarray:
    """Horizontal wind of speed v0 whose heading rotates from +beta0 at z=0
    to -beta0 at z=L_ref.  Broadcasts over z; returns (..., 3)."""
    z = np.asarray(z, dtype=float)
    ang = beta0 - 2.0 * beta0 * z / L_ref
    return np.stack([v0 * np.cos(ang), v0 * np.sin(ang), np.zeros_like(ang)], axis=-1)


def still_fluid() -> FreestreamProfile:
    return FreestreamProfile(kind="still")


@dataclass(frozen=True)
class FlowLoad:
    """Distributed fluid force with declared coefficients.

    ``C_M``: added-mass coefficient, ``C_N``/``C_T``: normal/tangential drag
    coefficients, ``rho_f``: fluid density, ``diameter``: wetted diameter.
    """

    C_M: float
    C_N: float
    C_T: float
    rho_f: float
    diameter: float
    profile: FreestreamProfile = field(default_factory=still_fluid)

    @property
    def c_added(self) -> float:
        return 0.25 * np.pi * self.C_M * self.rho_f * self.diameter**2

    @property
    def c_normal(self) -> float:
        return 0.5 * self.C_N * self.rho_f * self.diameter

    @property
    def c_tangent(self) -> float:
        return 0.5 * self.C_T * self.rho_f * self.diameter


LoadCase = PointLoad | Gravity | Follower2D | TipMoment | Pulsating | FlowLoad


@dataclass
class TermBlocks:
    """One flow term's force and derivative blocks w.r.t. the local state."""

    force: np.ndarray
    d_phi_p: np.ndarray
    d_pos: np.ndarray
    d_vel: np.ndarray
    d_acc: np.ndarray


@dataclass
class FlowPointForce:
    """Flow force per unit length at one point, with per-term tangents."""

    force: np.ndarray
    K_am: TermBlocks
    K_cn: TermBlocks
    K_ct: TermBlocks


def vanishing_point_load(t: float, t_c: float, F_c: np.ndarray) -> np.ndarray:
    """Triangular pulse: up to F_c at t_c/2, back to zero at t_c, off after."""
    F_c = np.asarray(F_c, dtype=float)
    if t < 0.0 or t > t_c:
        return np.zeros_like(F_c)
    if t <= 0.5 * t_c:
        return (2.0 * t / t_c) * F_c
    return (2.0 * (t_c - t) / t_c) * F_c


def pulsating_force(t: float, A_F: float, omega: float) -> float:
    return A_F * np.sin(omega * t)


def follower_force_2d(kin: PointKinematics, f0: float):
    """Turning distributed load ``f0 (e_y x d)`` and its phi'-derivative."""
    f = f0 * np.cross(_E2, kin.d)
    K = (f0 / kin.jac) * (skew(_E2) @ kin.P_d)
    return f, K


def tip_moment_load(kin: PointKinematics, m_vector) -> tuple[np.ndarray, np.ndarray]:
    """End-moment generalized force on the derivative dofs, with tangent.

    Pairs with the first-derivative test functions: the end moment ``m``
    enters as ``(m x d)/jac`` against ``N_i'(L)``.
    """
    m = np.asarray(m_vector, dtype=float)
    f = np.cross(m, kin.d) / kin.jac
    K = (skew(m) - 2.0 * np.outer(np.cross(m, kin.d), kin.d)) / kin.jac**2
    return f, K


def _drag_gain(u: np.ndarray) -> np.ndarray:
    """Derivative of |u| u: |u| (I + u_hat u_hat^T); zero at u = 0."""
    nu = np.linalg.norm(u)
    if nu == 0.0:
        return np.zeros((3, 3))
    uh = u / nu
    return nu * (np.eye(3) + np.outer(uh, uh))


def flow_force_point(
    kin: PointKinematics,
    phi_dot: np.ndarray,
    phi_ddot: np.ndarray,
    profile: FreestreamProfile,
    t: float,
    coeffs: FlowLoad,
) -> FlowPointForce:
    """Flow force per unit length and exact derivative blocks at one point.

    The relative velocity ``V = v_inf(z, t) - phi_dot`` (with ``z`` the
    ``coord_axis`` component of the current position) splits into normal and
    tangential parts; the force is

    ``C1 P_d (a_inf - phi_ddot) + C2 |V_N| V_N + C3 |V_T| V_T``.

    Derivative blocks are returned per term, keyed by which state they act
    on: the spatial derivative (through the director), the position (through
    the freestream field), the velocity and the acceleration.
    """
    d = kin.d
    P_d = kin.P_d
    H_d = kin.H_d
    jac = kin.jac
    e_ax = np.zeros(3)
    e_ax[profile.coord_axis] = 1.0
    z = float(kin.phi[profile.coord_axis])

    v_inf = profile.velocity(z, t)
    a_inf = profile.accel(z, t)
    dv_dz = profile.d_velocity_dz(z, t)

    V = v_inf - phi_dot
    a = a_inf - phi_ddot

    C1, C2, C3 = coeffs.c_added, coeffs.c_normal, coeffs.c_tangent

    # position enters the added-mass term through the freestream acceleration
    # field; only the parabolic profile has a space-varying a_inf
    da_dz = np.zeros(3)
    if profile.kind == "parabolic_wind":
        da_dz = (
            2.0
            * profile.scale
            * z
            * profile.mod_amplitude
            * profile.mod_rate
            * np.cos(profile.mod_rate * t)
        ) * np.asarray(profile.direction)

    # added mass: C1 * P_d a
    am = TermBlocks(
        force=C1 * (P_d @ a),
        d_phi_p=-(C1 / jac) * (float(a @ d) * H_d + np.outer(d, a)),
        d_pos=C1 * np.outer(P_d @ da_dz, e_ax),
        d_vel=np.zeros((3, 3)),
        d_acc=-C1 * P_d,
    )

    # normal drag: C2 |u| u with u = P_d V
    uN = P_d @ V
    gN = _drag_gain(uN)
    duN_dphip = -(1.0 / jac) * (float(V @ d) * H_d + np.outer(d, V))
    cn = TermBlocks(
        force=C2 * np.linalg.norm(uN) * uN,
        d_phi_p=C2 * gN @ duN_dphip,
        d_pos=C2 * gN @ P_d @ np.outer(dv_dz, e_ax),
        d_vel=-C2 * gN @ P_d,
        d_acc=np.zeros((3, 3)),
    )

    # tangential drag: C3 |u| u with u = (d d^T) V
    dd = np.outer(d, d)
    uT = dd @ V
    gT = _drag_gain(uT)
    duT_dphip = (1.0 / jac) * (float(V @ d) * H_d + np.outer(d, V))
    ct = TermBlocks(
        force=C3 * np.linalg.norm(uT) * uT,
        d_phi_p=C3 * gT @ duT_dphip,
        d_pos=C3 * gT @ dd @ np.outer(dv_dz, e_ax),
        d_vel=-C3 * gT @ dd,
        d_acc=np.zeros((3, 3)),
    )

    return FlowPointForce(am.force + cn.force + ct.force, am, cn, ct)
