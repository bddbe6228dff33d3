"""Implicit time integration of the rod with the hybrid one-step scheme.

Each step solves the reduced nonlinear system with Newton's method, seeded
with the previous configuration.  The per-step constant part of the residual
is assembled once and reused across Newton iterations.  Failures are data:
`run` returns a partial trajectory tagged with the failure kind and time
instead of raising, because instability onset times are themselves results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assembly import as_vector_operator, assemble_dynamic_step, dynamic_step_constant
from .diagnostics import DiagnosticsRecord, diagnostics_record
from .kinematics import DegenerateConfigurationError, MaterialParams
from .splines import ExtractionMatrix, SplineSpace

__all__ = [
    "DynamicProblem",
    "Trajectory",
    "DynamicNewtonError",
    "step",
    "run",
]

COMPLETED = "completed"
NEWTON_FAILURE = "newton_failure"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class DynamicProblem:
    """Specification of a transient analysis run."""

    space: SplineSpace
    extraction: ExtractionMatrix | None
    material: MaterialParams
    loads: Sequence[object]
    dt: float
    T_end: float
    q0: np.ndarray
    qdot0: np.ndarray
    t0: float = 0.0
    newton_tol: float = 1e-10
    max_newton_iters: int = 25
    n_q: int | None = None
    jac_floor: float | None = None
    correction_state: str = "midpoint"
    force_state: str = "midpoint"
    record_every: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T_end < self.dt:
            raise ValueError(f"T_end must be at least dt, got {self.T_end}")
        if self.newton_tol <= 0.0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.max_newton_iters < 1:
            raise ValueError(f"max_newton_iters must be >= 1, got {self.max_newton_iters}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        q0 = np.asarray(self.q0, dtype=float).reshape(-1)
        qdot0 = np.asarray(self.qdot0, dtype=float).reshape(-1)
        if q0.size != self.space.n_dof or qdot0.size != self.space.n_dof:
            raise ValueError(
                f"initial state needs {self.space.n_dof} entries, "
                f"got {q0.size} positions and {qdot0.size} velocities"
            )
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "qdot0", qdot0)

    @property
    def n_steps(self) -> int:
        return int(np.floor(self.T_end / self.dt + 1e-9))


@dataclass(frozen=True)
class Trajectory:
    """Stored states of a run, including a partial run ended by a failure."""

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    newton_iters: np.ndarray
    records: tuple[DiagnosticsRecord, ...]
    status: str
    failure_time: float | None = None
    failure_detail: str | None = None

    def __len__(self) -> int:
        return self.times.size

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


class DynamicNewtonError(RuntimeError):
    """One time step exhausted its Newton iteration budget."""

    def __init__(self, t: float, residual_norms: Sequence[float], increment_norms: Sequence[float]):
        self.t = t
        self.residual_norms = list(residual_norms)
        self.increment_norms = list(increment_norms)
        super().__init__(
            f"Newton did not converge for the step ending at t={t:.6g} s after "
            f"{len(residual_norms)} iterations; "
            f"last residual norm {residual_norms[-1]:.3e}"
        )


def step(
    problem: DynamicProblem,
    q_n: np.ndarray,
    qdot_n: np.ndarray,
    t_n: float,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Advance one time step; returns (q_next, qdot_next, newton_iterations)."""
    space = problem.space
    dt = problem.dt
    Cv = as_vector_operator(problem.extraction, space.n_basis)
    const = dynamic_step_constant(
        space,
        q_n,
        qdot_n,
        dt,
        problem.loads,
        problem.material,
        t_n=t_n,
        n_q=problem.n_q,
        jac_floor=problem.jac_floor,
        correction_state=problem.correction_state,
        force_state=problem.force_state,
    )
    q_next = q_n.copy()
    residual_norms: list[float] = []
    increment_norms: list[float] = []
    for _ in range(problem.max_newton_iters):
        out = assemble_dynamic_step(
            space,
            problem.extraction,
            q_n,
            qdot_n,
            q_next,
            dt,
            problem.loads,
            problem.material,
            t_n=t_n,
            n_q=problem.n_q,
            jac_floor=problem.jac_floor,
            correction_state=problem.correction_state,
            force_state=problem.force_state,
            step_constant=const,
        )
        dq = np.linalg.solve(out.tangent, -out.residual)
        q_next = q_next + Cv @ dq
        residual_norms.append(float(np.abs(out.residual).max()))
        increment_norms.append(float(np.abs(dq).max()))
        if increment_norms[-1] < problem.newton_tol:
            break
    else:
        raise DynamicNewtonError(t_n + dt, residual_norms, increment_norms)
    qdot_next = (2.0 / dt) * (q_next - q_n) - qdot_n
    return q_next, qdot_next, len(increment_norms)


def run(problem: DynamicProblem) -> Trajectory:
    """Integrate from t0 to T_end, storing every ``record_every``-th state."""
    space = problem.space
    q = problem.q0.copy()
    qdot = problem.qdot0.copy()

    times = [problem.t0]
    states = [q.copy()]
    velocities = [qdot.copy()]
    iters = [0]
    records = [
        diagnostics_record(
            space, q, qdot, problem.material, problem.t0, problem.n_q, problem.jac_floor
        )
    ]

    status = COMPLETED
    failure_time: float | None = None
    failure_detail: str | None = None
    n_steps = problem.n_steps
    for k in range(1, n_steps + 1):
        t_n = problem.t0 + (k - 1) * problem.dt
        try:
            q, qdot, n_it = step(problem, q, qdot, t_n)
        except DynamicNewtonError as err:
            status = NEWTON_FAILURE
            failure_time = err.t
            failure_detail = str(err)
            break
        except DegenerateConfigurationError as err:
            status = DEGENERATE
            failure_time = t_n + problem.dt
            failure_detail = str(err)
            break
        if k % problem.record_every == 0 or k == n_steps:
            t_k = problem.t0 + k * problem.dt
            times.append(t_k)
            states.append(q.copy())
            velocities.append(qdot.copy())
            iters.append(n_it)
            records.append(
                diagnostics_record(
                    space, q, qdot, problem.material, t_k, problem.n_q, problem.jac_floor
                )
            )

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        velocities=np.asarray(velocities),
        newton_iters=np.asarray(iters, dtype=int),
        records=tuple(records),
        status=status,
        failure_time=failure_time,
        failure_detail=failure_detail,
    )
