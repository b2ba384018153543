"""Gradient descent with Armijo backtracking over the initial momentum.

Trial steps whose forward integration blows up are rejected (treated as
infinite cost) instead of crashing, since the Eulerian scheme can genuinely
diverge for aggressive momenta.  All reductions inherit numpy's fixed
summation order, so a rerun with identical inputs reproduces the iterate
history bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .fields import FieldError, ScalarField
from .integrator import IntegrationDiverged
from .objective import CostReport, RegistrationProblem, cost, grad

MAX_BACKTRACKS = 40


class Termination(Enum):
    GRAD_TOL = "grad_tol"
    COST_TOL = "cost_tol"
    MAX_ITERS = "max_iters"
    LINE_SEARCH_FAILURE = "line_search_failure"


@dataclass(frozen=True)
class OptimizeConfig:
    max_iters: int = 200
    init_step: float = 1.0
    backtrack_factor: float = 0.5
    sufficient_decrease: float = 1e-4
    grad_tol: float = 1e-6
    rel_cost_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.max_iters < 0 or self.init_step <= 0:
            raise FieldError("invalid optimizer configuration")
        if not 0 < self.backtrack_factor < 1:
            raise FieldError(
                f"backtrack_factor must lie in (0,1), got {self.backtrack_factor}"
            )
        if self.sufficient_decrease <= 0 or self.grad_tol < 0 or self.rel_cost_tol < 0:
            raise FieldError("invalid optimizer configuration")


@dataclass(frozen=True)
class OptimizeResult:
    z0: ScalarField
    history: list[CostReport]
    termination: Termination
    # accepted step length per history entry; 0.0 for the initial point
    step_sizes: list[float] = field(default_factory=list)


def default_init(problem: RegistrationProblem) -> ScalarField:
    """Zero momentum: the identity-deformation basepoint."""
    return ScalarField.zeros(problem.source.geometry)


def optimize(
    problem: RegistrationProblem, z0_init: ScalarField, cfg: OptimizeConfig
) -> OptimizeResult:
    z0 = z0_init
    report = cost(problem, z0)
    history = [report]
    step_sizes = [0.0]
    termination = Termination.MAX_ITERS
    step = cfg.init_step

    for _ in range(cfg.max_iters):
        g = grad(problem, z0)
        if float(np.max(np.abs(g.values))) <= cfg.grad_tol:
            termination = Termination.GRAD_TOL
            break
        gnorm_sq = float(np.sum(g.values * g.values))

        # warm start from the previous accepted step, allowing growth
        step = step / cfg.backtrack_factor if len(history) > 1 else cfg.init_step
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = ScalarField(z0.geometry, z0.values - step * g.values)
            try:
                trial_report = cost(problem, trial)
            except IntegrationDiverged:
                trial_report = None
            if (
                trial_report is not None
                and trial_report.total
                <= report.total - cfg.sufficient_decrease * step * gnorm_sq
            ):
                accepted = True
                break
            step *= cfg.backtrack_factor
        if not accepted:
            termination = Termination.LINE_SEARCH_FAILURE
            break

        previous = report.total
        z0, report = trial, trial_report
        history.append(report)
        step_sizes.append(step)
        if previous - report.total <= cfg.rel_cost_tol * abs(previous):
            termination = Termination.COST_TOL
            break

    return OptimizeResult(
        z0=z0, history=history, termination=termination, step_sizes=step_sizes
    )
