"""Static equilibrium by incremental load stepping with Newton's method.

The load factor ramps uniformly from 0 to 1 over the requested number of
steps; every load case in the problem is scaled by the same factor.  Each
step's converged state seeds the next.  Plain Newton, no line search: the
intended benchmarks converge at the documented step counts, and failures
are reported with their full iterate history instead of being patched over.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assembly import as_vector_operator, assemble_static
from .kinematics import MaterialParams
from .splines import ExtractionMatrix, SplineSpace, straight_configuration

__all__ = [
    "StaticProblem",
    "StaticResult",
    "StaticNewtonError",
    "solve_static",
]


@dataclass(frozen=True)
class StaticProblem:
    """Specification of a static analysis run."""

    space: SplineSpace
    extraction: ExtractionMatrix | None
    material: MaterialParams
    loads: Sequence[object] = ()
    n_load_steps: int = 1
    newton_tol: float = 1e-10
    max_newton_iters: int = 20
    n_q: int | None = None
    jac_floor: float | None = None

    def __post_init__(self) -> None:
        if self.n_load_steps < 1:
            raise ValueError(f"n_load_steps must be >= 1, got {self.n_load_steps}")
        if self.newton_tol <= 0.0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.max_newton_iters < 1:
            raise ValueError(f"max_newton_iters must be >= 1, got {self.max_newton_iters}")


@dataclass(frozen=True)
class StaticResult:
    """Converged states, one per load step (full coefficient vectors)."""

    load_factors: tuple[float, ...]
    states: tuple[np.ndarray, ...]
    newton_iters: tuple[int, ...]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class StaticNewtonError(RuntimeError):
    """Newton ran out of iterations at one load step.

    Carries the iterate history of the failed step and the result of the
    load steps that did converge.
    """

    def __init__(
        self,
        step: int,
        load_factor: float,
        increment_norms: Sequence[float],
        residual_norms: Sequence[float],
        partial: StaticResult,
    ) -> None:
        self.step = step
        self.load_factor = load_factor
        self.increment_norms = list(increment_norms)
        self.residual_norms = list(residual_norms)
        self.partial = partial
        super().__init__(
            f"Newton did not converge at load step {step} "
            f"(load factor {load_factor:.6g}) after {len(increment_norms)} "
            f"iterations; last increment norm {increment_norms[-1]:.3e}"
        )


def solve_static(problem: StaticProblem, q0: np.ndarray | None = None) -> StaticResult:
    """Ramp the loads to full value and return the equilibrium at each step.

    ``q0`` defaults to the straight rod along +x from the origin.  Raises
    :class:`StaticNewtonError` when a step exhausts its iteration budget and
    :class:`~splinerod.kinematics.DegenerateConfigurationError` when an
    iterate loses its arc-length regularity.
    """
    space = problem.space
    if q0 is None:
        q0 = straight_configuration(space, np.zeros(3), np.array([1.0, 0.0, 0.0]))
    q = np.asarray(q0, dtype=float).reshape(-1).copy()
    if q.size != space.n_dof:
        raise ValueError(f"q0 has {q.size} entries, expected {space.n_dof}")

    Cv = as_vector_operator(problem.extraction, space.n_basis)
    load_factors: list[float] = []
    states: list[np.ndarray] = []
    iters: list[int] = []
    for k in range(1, problem.n_load_steps + 1):
        lam = k / problem.n_load_steps
        increment_norms: list[float] = []
        residual_norms: list[float] = []
        for _ in range(problem.max_newton_iters):
            out = assemble_static(
                space,
                problem.extraction,
                q,
                problem.loads,
                problem.material,
                load_factor=lam,
                n_q=problem.n_q,
                jac_floor=problem.jac_floor,
            )
            dq = np.linalg.solve(out.tangent, -out.residual)
            q = q + Cv @ dq
            increment_norms.append(float(np.abs(dq).max()))
            residual_norms.append(float(np.abs(out.residual).max()))
            if increment_norms[-1] < problem.newton_tol:
                break
        else:
            raise StaticNewtonError(
                k,
                lam,
                increment_norms,
                residual_norms,
                StaticResult(tuple(load_factors), tuple(states), tuple(iters)),
            )
        load_factors.append(lam)
        states.append(q.copy())
        iters.append(len(increment_norms))
    return StaticResult(tuple(load_factors), tuple(states), tuple(iters))
