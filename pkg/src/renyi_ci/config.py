from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the inner coupling solvers and the outer decomposition search.

    ``w_cardinality=None`` means ``|X| * |Y|``, which is always sufficient for
    the upper bound.
    """

    sinkhorn_tol: float = 1e-10
    max_iters: int = 50_000
    restarts: int = 8
    seed: int = 0
    penalty_schedule: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    w_cardinality: int | None = None
    constraint_tol: float = 1e-4
    # outer search
    steps_per_stage: int = 150
    fd_step: float = 1e-6
    prob_floor: float = 1e-12
    support_tol: float = 1e-9
    polish_steps: int = 200
    kick_scale: float = 0.5
    warm_start_wyner: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.w_cardinality is not None and self.w_cardinality < 1:
            raise ValueError("w_cardinality must be >= 1")
        sched = tuple(float(x) for x in self.penalty_schedule)
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("penalty_schedule must be non-empty and strictly increasing")
        object.__setattr__(self, "penalty_schedule", sched)
        if self.sinkhorn_tol <= 0 or self.max_iters < 1:
            raise ValueError("sinkhorn_tol must be positive and max_iters >= 1")
