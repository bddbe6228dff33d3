"""Conserved-quantity monitors, error norms, spectra, and probe utilities.

Everything here is a pure function of state or trajectory data: energies and
momenta by Gauss quadrature, relative error norms against a reference curve,
FFT of the kinetic-energy history, the precision quotient of a step-halving
study, the determinant probe of the one-step propagator on a linear beam,
and steady-state statistics of a response series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import basis_tables, default_jac_floor, default_n_q, fields_at
from .kinematics import MaterialParams
from .splines import ExtractionMatrix, SplineSpace, boundary_constraints, build_extraction

__all__ = [
    "DiagnosticsRecord",
    "diagnostics_record",
    "energies",
    "momenta",
    "error_norms",
    "fft_kinetic",
    "integrated_band_magnitude",
    "precision_quotient",
    "linear_beam_matrices",
    "hermite_beam_matrices",
    "det_probe",
    "linear_beam_det_probe",
    "SteadyStateStats",
    "steady_state_stats",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Energies and momenta of one stored state."""

    t: float
    kinetic: float
    potential: float
    total: float
    linear_momentum: np.ndarray
    angular_momentum: np.ndarray


def _velocity_fields(tables, qdot: np.ndarray):
    Qdot = qdot.reshape(-1, 3)
    phi_dot = np.einsum("ega,eax->egx", tables.N, Qdot[tables.index])
    phi_dot_p = np.einsum("ega,eax->egx", tables.D1, Qdot[tables.index])
    return phi_dot, phi_dot_p


def energies(
    space: SplineSpace,
    q: np.ndarray,
    qdot: np.ndarray,
    material: MaterialParams,
    n_q: int | None = None,
    jac_floor: float | None = None,
) -> tuple[float, float]:
    """Kinetic and elastic potential energy of a state."""
    n_q = default_n_q(space) if n_q is None else n_q
    jac_floor = default_jac_floor(space) if jac_floor is None else jac_floor
    tables = basis_tables(space, n_q)
    flds = fields_at(tables, np.asarray(q, dtype=float).reshape(-1, 3), jac_floor)
    phi_dot, phi_dot_p = _velocity_fields(tables, np.asarray(qdot, dtype=float))

    proj = phi_dot_p - flds.d * np.einsum("egx,egx->eg", flds.d, phi_dot_p)[..., None]
    d_dot = proj / flds.jac[..., None]
    t_density = 0.5 * (
        material.A_rho * np.einsum("egx,egx->eg", phi_dot, phi_dot)
        + material.alpha * material.I_rho * np.einsum("egx,egx->eg", d_dot, d_dot)
    )

    eps = flds.phi_p - flds.d
    kappa = np.cross(flds.phi_p, flds.phi_pp) / flds.jac[..., None] ** 2
    u_density = 0.5 * (
        material.EA * np.einsum("egx,egx->eg", eps, eps)
        + material.EI * np.einsum("egx,egx->eg", kappa, kappa)
    )
    w = tables.w
    return float(np.sum(t_density @ w)), float(np.sum(u_density @ w))


def momenta(
    space: SplineSpace,
    q: np.ndarray,
    qdot: np.ndarray,
    material: MaterialParams,
    n_q: int | None = None,
    jac_floor: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear momentum and angular momentum about the origin."""
    n_q = default_n_q(space) if n_q is None else n_q
    jac_floor = default_jac_floor(space) if jac_floor is None else jac_floor
    tables = basis_tables(space, n_q)
    flds = fields_at(tables, np.asarray(q, dtype=float).reshape(-1, 3), jac_floor)
    phi_dot, phi_dot_p = _velocity_fields(tables, np.asarray(qdot, dtype=float))

    proj = phi_dot_p - flds.d * np.einsum("egx,egx->eg", flds.d, phi_dot_p)[..., None]
    d_dot = proj / flds.jac[..., None]
    lin_density = material.A_rho * phi_dot
    ang_density = material.A_rho * np.cross(flds.phi, phi_dot) + (
        material.alpha * material.I_rho
    ) * np.cross(flds.d, d_dot)
    w = tables.w
    lin = np.einsum("g,egx->x", w, lin_density)
    ang = np.einsum("g,egx->x", w, ang_density)
    return lin, ang


def diagnostics_record(
    space: SplineSpace,
    q: np.ndarray,
    qdot: np.ndarray,
    material: MaterialParams,
    t: float,
    n_q: int | None = None,
    jac_floor: float | None = None,
) -> DiagnosticsRecord:
    T, U = energies(space, q, qdot, material, n_q, jac_floor)
    lin, ang = momenta(space, q, qdot, material, n_q, jac_floor)
    return DiagnosticsRecord(
        t=float(t),
        kinetic=T,
        potential=U,
        total=T + U,
        linear_momentum=lin,
        angular_momentum=ang,
    )


def error_norms(
    space: SplineSpace,
    q: np.ndarray,
    reference: Callable[[float], tuple],
    n_q: int | None = None,
) -> tuple[float, float, float]:
    """Relative L2 / H1-semi / H2-semi errors against a reference curve.

    ``reference(s)`` returns the curve value and its first two derivatives.
    Each error is normalized by the corresponding reference (semi-)norm;
    when that norm vanishes the absolute error is returned instead.
    """
    n_q = space.degree + 3 if n_q is None else n_q
    tables = basis_tables(space, n_q)
    Q = np.asarray(q, dtype=float).reshape(-1, 3)
    Qe = Q[tables.index]
    phi = np.einsum("ega,eax->egx", tables.N, Qe)
    phi_p = np.einsum("ega,eax->egx", tables.D1, Qe)
    phi_pp = np.einsum("ega,eax->egx", tables.D2, Qe)

    nel, nq = tables.N.shape[:2]
    ref = np.empty((nel, nq, 3, 3))
    for e in range(nel):
        for g in range(nq):
            v, d1, d2 = reference(float(tables.s[e, g]))
            ref[e, g, 0], ref[e, g, 1], ref[e, g, 2] = v, d1, d2

    w = tables.w

    def seminorm_pair(h_field, r_field):
        num = np.sqrt(np.sum(np.einsum("egx,egx->eg", h_field - r_field, h_field - r_field) @ w))
        den = np.sqrt(np.sum(np.einsum("egx,egx->eg", r_field, r_field) @ w))
        return num / den if den > 0.0 else num

    return (
        float(seminorm_pair(phi, ref[..., 0, :])),
        float(seminorm_pair(phi_p, ref[..., 1, :])),
        float(seminorm_pair(phi_pp, ref[..., 2, :])),
    )


def fft_kinetic(
    times: np.ndarray,
    values: np.ndarray,
    threshold: float | None = None,
    window: str = "rect",
) -> tuple[np.ndarray, np.ndarray]:
    """Fourier magnitude of a kinetic-energy series.

    The series is truncated just before the first sample exceeding
    ``threshold`` (if given), the mean is removed, and the one-sided
    magnitude spectrum is returned as ``(frequencies_hz, magnitude)``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size != values.size:
        raise ValueError("times and values must have equal length")
    if threshold is not None:
        above = np.nonzero(values > threshold)[0]
        if above.size:
            times, values = times[: above[0]], values[: above[0]]
    if times.size < 2:
        raise ValueError("series too short for a spectrum")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-8, atol=1e-12):
        raise ValueError("series must be uniformly sampled")
    signal = values - values.mean()
    if window == "hann":
        signal = signal * np.hanning(signal.size)
    elif window != "rect":
        raise ValueError(f"unknown window {window!r}")
    mag = np.abs(np.fft.rfft(signal)) / signal.size
    freqs = np.fft.rfftfreq(signal.size, d=dt)
    return freqs, mag


def integrated_band_magnitude(
    freqs: np.ndarray, magnitude: np.ndarray, band: tuple[float, float]
) -> float:
    """Trapezoidal integral of a magnitude spectrum over a frequency band."""
    lo, hi = band
    if not lo < hi:
        raise ValueError(f"empty band [{lo}, {hi}]")
    mask = (freqs >= lo) & (freqs <= hi)
    if mask.sum() < 2:
        raise ValueError("band contains fewer than two frequency bins")
    return float(np.trapezoid(magnitude[mask], freqs[mask]))


def precision_quotient(
    u_dt: np.ndarray, u_dt2: np.ndarray, u_dt4: np.ndarray
) -> np.ma.MaskedArray:
    """Step-halving precision quotient per common sample.

    Inputs are solution series at step sizes dt, dt/2, dt/4, already aligned
    on common output times (shape (n,) or (n, d)).  Returns
    ``|u_dt - u_dt2| / |u_dt2 - u_dt4|`` with vanishing denominators masked;
    a second-order scheme yields values near 4.
    """
    a = np.asarray(u_dt, dtype=float)
    b = np.asarray(u_dt2, dtype=float)
    c = np.asarray(u_dt4, dtype=float)
    if not (a.shape == b.shape == c.shape):
        raise ValueError("series must share a common shape")
    if a.ndim == 1:
        num = np.abs(a - b)
        den = np.abs(b - c)
    else:
        num = np.linalg.norm(a - b, axis=-1)
        den = np.linalg.norm(b - c, axis=-1)
    scale = max(float(np.max(np.abs(b), initial=0.0)), 1e-300)
    tiny = 1e-14 * scale
    masked = den <= tiny
    den_safe = np.where(masked, 1.0, den)
    return np.ma.MaskedArray(num / den_safe, mask=masked)


def linear_beam_matrices(
    space: SplineSpace,
    material: MaterialParams,
    extraction: ExtractionMatrix | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Free-free Euler-Bernoulli mass and bending stiffness on a spline space.

    Scalar transverse displacement: M = A_rho * int N N, K = EI * int N'' N''.
    An extraction operator (e.g. outlier removal) reduces both.
    """
    tables = basis_tables(space, space.degree + 1)
    m = space.n_basis
    M = np.zeros((m, m))
    K = np.zeros((m, m))
    w = tables.w
    Me = np.einsum("g,ega,egb->eab", w, tables.N, tables.N)
    Ke = np.einsum("g,ega,egb->eab", w, tables.D2, tables.D2)
    for e in range(space.n_elements):
        ix = np.ix_(tables.index[e], tables.index[e])
        M[ix] += material.A_rho * Me[e]
        K[ix] += material.EI * Ke[e]
    if extraction is not None:
        C = extraction.C
        M = C.T @ M @ C
        K = C.T @ K @ C
    return M, K


def hermite_beam_matrices(
    n_elements: int, L: float, material: MaterialParams
) -> tuple[np.ndarray, np.ndarray]:
    """Classic cubic-Hermite free-free beam matrices (dofs: w, w' per node)."""
    if n_elements < 1:
        raise ValueError("need at least one element")
    ell = L / n_elements
    c_m = material.A_rho * ell / 420.0
    Me = c_m * np.array(
        [
            [156.0, 22 * ell, 54.0, -13 * ell],
            [22 * ell, 4 * ell**2, 13 * ell, -3 * ell**2],
            [54.0, 13 * ell, 156.0, -22 * ell],
            [-13 * ell, -3 * ell**2, -22 * ell, 4 * ell**2],
        ]
    )
    c_k = material.EI / ell**3
    Ke = c_k * np.array(
        [
            [12.0, 6 * ell, -12.0, 6 * ell],
            [6 * ell, 4 * ell**2, -6 * ell, 2 * ell**2],
            [-12.0, -6 * ell, 12.0, -6 * ell],
            [6 * ell, 2 * ell**2, -6 * ell, 4 * ell**2],
        ]
    )
    n_dof = 2 * (n_elements + 1)
    M = np.zeros((n_dof, n_dof))
    K = np.zeros((n_dof, n_dof))
    for e in range(n_elements):
        sl = slice(2 * e, 2 * e + 4)
        M[sl, sl] += Me
        K[sl, sl] += Ke
    return M, K


def det_probe(M: np.ndarray, K: np.ndarray, dt: float) -> float:
    """Determinant of the one-step propagator of the integrator on (M, K).

    For the linear system M a + K u = 0 the scheme advances
    (u, v) by A_L x_{n+1} = A_R x_n; the determinant of A_L^{-1} A_R equals
    one in exact arithmetic, so the deviation measures accumulated round-off.
    """
    n = M.shape[0]
    eye = np.eye(n)
    A_L = np.block([[dt * K, 2.0 * M], [-2.0 * eye, dt * eye]])
    A_R = np.block([[-dt * K, 2.0 * M], [-2.0 * eye, -dt * eye]])
    return float(np.linalg.det(np.linalg.solve(A_L, A_R)))


def linear_beam_det_probe(
    space: SplineSpace,
    dt: float,
    material: MaterialParams,
    removal: bool = False,
) -> float:
    """det probe on the free-free spline beam, optionally outlier-reduced."""
    extraction = None
    if removal:
        extraction = build_extraction(space, boundary_constraints(space, "free", "free"))
    M, K = linear_beam_matrices(space, material, extraction)
    return det_probe(M, K, dt)


@dataclass(frozen=True)
class SteadyStateStats:
    mean: float
    amplitude: float
    periodic: bool


def steady_state_stats(
    times: np.ndarray, series: np.ndarray, window: float
) -> SteadyStateStats:
    """Mean, peak-to-peak amplitude, and periodicity over the trailing window.

    The periodicity flag is true when successive maxima agree within 1% of
    the peak-to-peak amplitude and successive minima do as well (a constant
    tail counts as trivially periodic).
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    if times.size != series.size:
        raise ValueError("times and series must have equal length")
    if times.size < 3:
        raise ValueError("series too short")
    span = times[-1] - times[0]
    if window > span + 1e-12:
        raise ValueError(f"window {window} s exceeds series span {span} s")
    tail = series[times >= times[-1] - window]
    mean = float(tail.mean())
    amplitude = float(tail.max() - tail.min())
    scale = max(abs(tail.max()), abs(tail.min()), 1e-300)
    if amplitude <= 1e-12 * scale:
        return SteadyStateStats(mean, amplitude, True)

    left, mid, right = tail[:-2], tail[1:-1], tail[2:]
    maxima = mid[(mid >= left) & (mid > right)]
    minima = mid[(mid <= left) & (mid < right)]
    periodic = False
    if maxima.size >= 2 and minima.size >= 2:
        periodic = bool(
            np.all(np.abs(np.diff(maxima)) <= 0.01 * amplitude)
            and np.all(np.abs(np.diff(minima)) <= 0.01 * amplitude)
        )
    return SteadyStateStats(mean, amplitude, periodic)
