"""Shared fixtures and numerical helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from splinerod import make_spline_space
from splinerod.kinematics import MaterialParams


def fd_jacobian(func, x, h=None):
    """Central-difference Jacobian of ``func`` at ``x`` (rows: outputs)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x), dtype=float).ravel()
    if h is None:
        h = 1e-6 * max(1.0, float(np.max(np.abs(x))))
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(func(xp), dtype=float).ravel() - np.asarray(func(xm), dtype=float).ravel()) / (2.0 * h)
    return J


def rel_err(a, b):
    """Relative Frobenius-norm difference, guarded for tiny references."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(b), 1e-30)
    return np.linalg.norm(a - b) / scale


@pytest.fixture
def cubic_space():
    """Cubic C^1 space on [0, 10] with 20 elements (42 basis functions)."""
    return make_spline_space(3, 1, 20, 10.0)


@pytest.fixture
def quadratic_space():
    """Quadratic C^1 space on [0, 40] with 40 elements."""
    return make_spline_space(2, 1, 40, 40.0)


@pytest.fixture
def steel_wire():
    """Round 1 cm steel cross-section used by the planar benchmarks."""
    E, rho, diameter = 2.0e11, 7900.0, 0.01
    A = np.pi * diameter**2 / 4.0
    I = np.pi * diameter**4 / 64.0
    return MaterialParams(EA=E * A, EI=E * I, A_rho=rho * A, I_rho=rho * I)
