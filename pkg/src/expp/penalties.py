"""Penalized objectives built on a CM set.

Three penalty forms are supported, all written in terms of the squared
norm deficit ``C - ||x||^2``:

* ``NegSquare``       ``f(x) - lam ||x||^2``
* ``SqrtDeficit``     ``f(x) + lam sqrt(C - ||x||^2)``
* ``SquaredDeficit``  ``f(x) + lam (C - ||x||^2)``

On ``V`` the NegSquare objective equals ``f - lam C``, so the minimizers
over ``V`` are those of ``f``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import cm_sets, objectives
from .cm_sets import Family

__all__ = [
    "PenaltyKind", "PenaltyConfig", "ThresholdError",
    "eval_penalized", "penalized_value", "concavify_threshold", "exactness_threshold",
]


class PenaltyKind(str, enum.Enum):
    NEG_SQUARE = "NegSquare"
    SQRT_DEFICIT = "SqrtDeficit"
    SQUARED_DEFICIT = "SquaredDeficit"


class ThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class PenaltyConfig:
    kind: PenaltyKind = PenaltyKind.NEG_SQUARE
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if not math.isfinite(self.lam):
            raise ValueError("penalty weight must be finite")
        if self.kind is not PenaltyKind.NEG_SQUARE and self.lam < 0:
            raise ValueError(f"{self.kind.value} needs a non-negative weight")


def eval_penalized(prob, spec, cfg, x):
    """Value and (sub)gradient of the penalized objective at the real view ``x``.

    For SqrtDeficit on the boundary ``||x||^2 >= C`` the square root is not
    differentiable; the value ``f(x)`` is returned with gradient ``None``.

    Raises
    ------
    ValueError
        If ``f(x)`` is not finite.
    """
    x = np.asarray(x, dtype=float)
    f, g, _ = objectives.evaluate(prob, x)
    if not math.isfinite(f):
        raise ValueError("objective value is not finite")
    lam = cfg.lam
    nrm2 = float(np.sum(x * x))
    if cfg.kind is PenaltyKind.NEG_SQUARE:
        return f - lam * nrm2, g - 2.0 * lam * x
    deficit = cm_sets.modulus_sq(spec) - nrm2
    if cfg.kind is PenaltyKind.SQUARED_DEFICIT:
        return f + lam * deficit, g - 2.0 * lam * x
    if deficit <= 0:
        return f, None
    root = math.sqrt(deficit)
    return f + lam * root, g - (lam / root) * x


def penalized_value(prob, spec, cfg, x):
    return eval_penalized(prob, spec, cfg, x)[0]


def concavify_threshold(prob):
    """``L / 2``; any weight strictly above it makes ``f - lam ||x||^2`` strictly concave.

    Raises
    ------
    ThresholdError
        For objectives without a Lipschitz gradient (MaxAffine); use
        :func:`exactness_threshold` there.
    """
    L = objectives.gradient_lipschitz(prob)
    if L is None:
        raise ThresholdError(
            f"{prob.kind.value} has no Lipschitz gradient; use exactness_threshold instead")
    return L / 2.0


def _has_nonneg_stiefel(spec):
    if spec.family is Family.PRODUCT:
        return any(_has_nonneg_stiefel(f) for f in spec.factors)
    return spec.family is Family.NONNEG_SEMI_ORTHOGONAL


def exactness_threshold(prob, spec):
    """``K * nu``: above it the NegSquare penalty is exact for Lipschitz ``f``.

    Raises
    ------
    ThresholdError
        For sets involving NonnegSemiOrthogonal, where only an inexact
        guarantee is available.
    """
    if _has_nonneg_stiefel(spec):
        raise ThresholdError("NonnegSemiOrthogonal admits no exact penalty threshold")
    _, K = objectives.descriptors(prob, spec)
    return K * cm_sets.error_bound_constant(spec)
