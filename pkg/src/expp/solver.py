"""Projected (sub)gradient stages and homotopy continuation in the penalty weight.

One stage iterates ``x <- P_hull(x - eta * grad F_lam(x))`` at a fixed
weight. :func:`homotopy_solve` runs stages for a growing sequence of
weights, warm-starting each from the last, then rounds onto ``V``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cm_sets, objectives, penalties
from .cm_sets import Family
from .hull_projections import DykstraConfig
from .linalg import estimate_spectral_norm
from .penalties import PenaltyConfig, PenaltyKind

__all__ = [
    "StepKind", "StepRule", "SolverConfig", "HomotopySchedule", "StageRecord",
    "SolveResult", "SolverError", "pg_stage", "homotopy_solve", "multistart_solve",
    "multistart_stage", "default_schedule", "default_start", "relevant_threshold",
    "estimate_spectral_norm",
]


class SolverError(RuntimeError):
    pass


class StepKind(str, enum.Enum):
    FIXED_LIPSCHITZ = "FixedLipschitz"
    DIMINISHING = "Diminishing"


@dataclass(frozen=True)
class StepRule:
    """``FixedLipschitz``: ``eta = 1 / (L + 2|lam|)``. ``Diminishing``: ``eta_l = c / sqrt(l + 1)``.

    ``c=None`` means ``R / K`` with ``R = sqrt(C)``.
    """

    kind: StepKind = StepKind.FIXED_LIPSCHITZ
    c: Optional[float] = None


@dataclass(frozen=True)
class SolverConfig:
    """``step_rule=None`` picks FixedLipschitz for smooth objectives and Diminishing otherwise.

    ``dykstra`` controls the hull projection of the assignment and
    NonnegSemiOrthogonal families.
    """

    step_rule: Optional[StepRule] = None
    max_iters_per_stage: int = 500
    stage_tol: float = 1e-9
    feas_tol: float = 1e-8
    dykstra: DykstraConfig = DykstraConfig()

    def __post_init__(self):
        if self.max_iters_per_stage < 1 or not (self.stage_tol > 0 and self.feas_tol > 0):
            raise ValueError("budgets and tolerances must be positive")


@dataclass(frozen=True)
class HomotopySchedule:
    lambda0: float
    gamma: float = 1.5
    lambda_max: float = 1.0
    warm_start_convex: bool = False

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if self.lambda0 > self.lambda_max:
            raise ValueError("lambda0 must not exceed lambda_max")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive for geometric growth")


@dataclass(frozen=True)
class StageRecord:
    lam: float
    iterations: int
    value: float


@dataclass
class SolveResult:
    hull_point: object
    rounded: object
    f_hull: float
    f_rounded: float
    feas_residual: float
    exact_flag: bool
    converged: bool
    stage_trace: list = field(default_factory=list)


def _real_projector(spec, dykstra_cfg=DykstraConfig()):
    fam = spec.family
    if fam is Family.BINARY:
        return lambda v: np.clip(v, -1.0, 1.0)
    shape = cm_sets.real_shape(spec)

    def project(v):
        x = cm_sets.project_hull(spec, cm_sets.from_real(spec, v), dykstra_cfg)
        return cm_sets.to_real(spec, x).reshape(shape)

    return project


def _step_rule(prob, spec, scfg):
    if scfg.step_rule is not None:
        return scfg.step_rule
    if objectives.gradient_lipschitz(prob) is None:
        return StepRule(StepKind.DIMINISHING)
    return StepRule(StepKind.FIXED_LIPSCHITZ)


def _run_stage(prob, spec, cfg, v, scfg, project, rule, L, K):
    R = math.sqrt(cm_sets.modulus_sq(spec))
    if rule.kind is StepKind.FIXED_LIPSCHITZ:
        if L is None:
            raise SolverError(f"{prob.kind.value} has no gradient Lipschitz constant; "
                              "use a Diminishing step rule")
        if cfg.kind is PenaltyKind.SQRT_DEFICIT:
            raise SolverError("SqrtDeficit has no Lipschitz gradient; use a Diminishing step rule")
        lip = L + 2.0 * abs(cfg.lam)
        eta = 1.0 / lip if lip > 0 else 1.0
    else:
        c = rule.c if rule.c is not None else (R / K if K > 0 else R)
    for it in range(scfg.max_iters_per_stage):
        _, g = penalties.eval_penalized(prob, spec, cfg, v)
        if g is None:
            return v, it
        step = eta if rule.kind is StepKind.FIXED_LIPSCHITZ else c / math.sqrt(it + 1)
        v_new = project(v - step * g)
        if np.linalg.norm(v_new - v) <= scfg.stage_tol:
            return v_new, it + 1
        v = v_new
    return v, scfg.max_iters_per_stage


def pg_stage(prob, spec, cfg, x0, scfg=SolverConfig()):
    """One projected (sub)gradient run at fixed penalty weight.

    Every iterate is re-projected onto the hull. Stops once an update moves
    less than ``scfg.stage_tol`` or the iteration budget runs out.

    Returns
    -------
    x : Point
        Final iterate, in the set's native representation.
    iters : int

    Raises
    ------
    SolverError
        FixedLipschitz steps requested for an objective without ``L``.
    """
    objectives.check_compatible(prob, spec)
    shape = cm_sets.real_shape(spec)
    v = cm_sets.to_real(spec, x0).reshape(shape)
    L, K = objectives.descriptors(prob, spec)
    rule = _step_rule(prob, spec, scfg)
    v, iters = _run_stage(prob, spec, cfg, v, scfg, _real_projector(spec, scfg.dykstra), rule, L, K)
    return cm_sets.from_real(spec, v), iters


def relevant_threshold(prob, spec):
    """``L/2`` for smooth objectives, ``K nu`` otherwise."""
    L, K = objectives.descriptors(prob, spec)
    if L is not None:
        return L / 2.0
    return K * cm_sets.error_bound_constant(spec)


def default_schedule(prob, spec):
    thr = relevant_threshold(prob, spec)
    lam0 = max(1e-3, 1e-3 * thr)
    return HomotopySchedule(lambda0=lam0, gamma=1.5, lambda_max=max(3.0 * thr, lam0))


def default_start(spec, seed=0, scale=1e-2, dykstra_cfg=DykstraConfig()):
    """Hull projection of a small seeded Gaussian perturbation of the projected origin."""
    rng = np.random.default_rng(seed)
    shape = cm_sets.real_shape(spec)
    project = _real_projector(spec, dykstra_cfg)
    center = project(np.zeros(shape))
    v = project(center + scale * rng.normal(size=shape))
    return cm_sets.from_real(spec, v)


def homotopy_solve(prob, spec, sched=None, scfg=SolverConfig(), x0=None, seed=0):
    """Homotopy continuation over ``lam_k = min(lambda0 * gamma^k, lambda_max)``.

    Each stage minimizes ``f - lam_k ||x||^2`` over the hull from the
    previous stage's output. With ``warm_start_convex`` and a known ``L``, a
    first stage runs at ``lam = -(L/2 + 1)``, where the objective is convex.
    Stops once the rounded point repeats across two consecutive stages and
    the hull iterate is within ``feas_tol`` of ``V``, or after the stage at
    ``lambda_max``.
    """
    objectives.check_compatible(prob, spec)
    sched = sched or default_schedule(prob, spec)
    L, K = objectives.descriptors(prob, spec)
    rule = _step_rule(prob, spec, scfg)
    project = _real_projector(spec, scfg.dykstra)
    shape = cm_sets.real_shape(spec)
    if x0 is None:
        x0 = default_start(spec, seed, dykstra_cfg=scfg.dykstra)
    v = project(cm_sets.to_real(spec, x0).reshape(shape))

    lams = []
    if sched.warm_start_convex and L is not None:
        lams.append(-(L / 2.0 + 1.0))
    trace = []
    prev_round = None
    converged = False
    k = 0
    while True:
        if lams:
            lam = lams.pop()
        else:
            lam = min(sched.lambda0 * sched.gamma**k, sched.lambda_max)
            k += 1
        cfg = PenaltyConfig(PenaltyKind.NEG_SQUARE, lam)
        v, iters = _run_stage(prob, spec, cfg, v, scfg, project, rule, L, K)
        trace.append(StageRecord(lam, iters, penalties.penalized_value(prob, spec, cfg, v)))
        x = cm_sets.from_real(spec, v)
        rounded = cm_sets.round_to_set(spec, x)
        r_view = cm_sets.to_real(spec, rounded).reshape(shape)
        near = float(np.linalg.norm(v - r_view)) <= scfg.feas_tol
        if near and prev_round is not None and np.allclose(prev_round, r_view, atol=scfg.feas_tol):
            converged = True
            break
        prev_round = r_view
        if lam >= sched.lambda_max:
            converged = near
            break

    dist = cm_sets.distance_to_set(spec, x)
    return SolveResult(
        hull_point=x,
        rounded=rounded,
        f_hull=objectives.value(prob, v),
        f_rounded=objectives.value(prob, r_view),
        feas_residual=dist.value,
        exact_flag=dist.exact,
        converged=converged or dist.value <= scfg.feas_tol,
        stage_trace=trace,
    )


def multistart_solve(prob, spec, sched=None, scfg=SolverConfig(), seeds=(0,)):
    """Best :func:`homotopy_solve` result over ``seeds`` by rounded objective.

    Ties go to the earliest seed. Returns ``(seed, result)``.
    """
    best = None
    for seed in seeds:
        res = homotopy_solve(prob, spec, sched, scfg, seed=seed)
        if best is None or res.f_rounded < best[1].f_rounded:
            best = (seed, res)
    return best


def multistart_stage(prob, spec, cfg, scfg=SolverConfig(), starts=32, seed=0):
    """Best of ``starts`` :func:`pg_stage` runs from random hull points, by penalized value."""
    rng = np.random.default_rng(seed)
    shape = cm_sets.real_shape(spec)
    project = _real_projector(spec, scfg.dykstra)
    scale = math.sqrt(cm_sets.modulus_sq(spec) / math.prod(shape))
    best, best_val = None, math.inf
    for _ in range(starts):
        x0 = cm_sets.from_real(spec, project(scale * rng.normal(size=shape)))
        x, _ = pg_stage(prob, spec, cfg, x0, scfg)
        val = penalties.penalized_value(prob, spec, cfg, cm_sets.to_real(spec, x).reshape(shape))
        if val < best_val:
            best, best_val = x, val
    return best, best_val
