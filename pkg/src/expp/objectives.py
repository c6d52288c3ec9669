"""Objective families with values, (sub)gradients and smoothness constants.

Objectives act on the real view of a point (``cm_sets.to_real``). The
vector-valued forms (Quadratic, QuadForm, MaxAffine) read the view
flattened in row-major order and return gradients in the view's shape;
TraceQuadratic needs a matrix view.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cm_sets
from .cm_sets import DimensionError
from .linalg import estimate_spectral_norm

__all__ = [
    "Kind", "ProblemSpec", "Instance", "InstanceError",
    "quadratic", "quad_form", "max_affine", "trace_quadratic", "constant",
    "evaluate", "value", "gradient_lipschitz", "descriptors", "n_variables",
    "check_compatible", "problem_to_json", "problem_from_json",
    "load_instance", "instance_from_json", "instance_to_json",
]


class Kind(str, enum.Enum):
    QUADRATIC = "Quadratic"
    QUAD_FORM = "QuadForm"
    MAX_AFFINE = "MaxAffine"
    TRACE_QUADRATIC = "TraceQuadratic"
    CONSTANT = "Constant"


class InstanceError(ValueError):
    """Malformed instance file or objective description."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """An objective ``f``.

    Quadratic       ``||y - H x||^2``
    QuadForm        ``sign * x^T A x + b^T x``  (``A`` symmetric)
    MaxAffine       ``max_i a_i^T x + b_i``     (rows of ``A`` are the ``a_i``)
    TraceQuadratic  ``tr(X^T A X B) + <Cmat, X>``  (``A``, ``B`` symmetric)
    Constant        ``c``
    """

    kind: Kind
    H: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    Cmat: Optional[np.ndarray] = None
    sign: float = 1.0
    c: float = 0.0


def quadratic(H, y):
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if H.shape[0] != y.size:
        raise DimensionError(f"H has {H.shape[0]} rows but y has {y.size} entries")
    return ProblemSpec(Kind.QUADRATIC, H=H, y=y)


def quad_form(A, b=None, sign=1.0):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError("A must be square")
    if not np.allclose(A, A.T):
        raise InstanceError("A must be symmetric")
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float).ravel()
    if b.size != A.shape[0]:
        raise DimensionError("b does not match A")
    return ProblemSpec(Kind.QUAD_FORM, A=A, b=b, sign=float(sign))


def max_affine(a, b=None):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.zeros(a.shape[0]) if b is None else np.asarray(b, dtype=float).ravel()
    if b.size != a.shape[0]:
        raise DimensionError("b needs one offset per affine piece")
    return ProblemSpec(Kind.MAX_AFFINE, A=a, b=b)


def trace_quadratic(A, B, Cmat=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if not (np.allclose(A, A.T) and np.allclose(B, B.T)):
        raise InstanceError("A and B must be symmetric")
    Cmat = (np.zeros((A.shape[0], B.shape[0])) if Cmat is None
            else np.atleast_2d(np.asarray(Cmat, dtype=float)))
    if Cmat.shape != (A.shape[0], B.shape[0]):
        raise DimensionError("Cmat must be n x r")
    return ProblemSpec(Kind.TRACE_QUADRATIC, A=A, B=B, Cmat=Cmat)


def constant(c=0.0):
    return ProblemSpec(Kind.CONSTANT, c=float(c))


def n_variables(prob):
    """Number of real variables the objective expects, or None if any size works."""
    if prob.kind is Kind.QUADRATIC:
        return prob.H.shape[1]
    if prob.kind in (Kind.QUAD_FORM, Kind.MAX_AFFINE):
        return prob.A.shape[1]
    if prob.kind is Kind.TRACE_QUADRATIC:
        return prob.A.shape[0] * prob.B.shape[0]
    return None


def check_compatible(prob, spec):
    """Raise :class:`DimensionError` unless ``prob`` acts on the real view of ``spec``."""
    shape = cm_sets.real_shape(spec)
    nv = n_variables(prob)
    if nv is not None and nv != math.prod(shape):
        raise DimensionError(f"objective has {nv} variables, set {spec} has {math.prod(shape)}")
    if prob.kind is Kind.TRACE_QUADRATIC and shape != (prob.A.shape[0], prob.B.shape[0]):
        raise DimensionError("TraceQuadratic needs a matrix set of matching shape")


def evaluate(prob, x):
    """Value, gradient (or subgradient) and smoothness flag of ``f`` at ``x``.

    For MaxAffine the subgradient is the row of the first maximizing piece.
    """
    x = np.asarray(x, dtype=float)
    kind = prob.kind
    if kind is Kind.CONSTANT:
        return prob.c, np.zeros_like(x), True
    if kind is Kind.TRACE_QUADRATIC:
        if x.shape != (prob.A.shape[0], prob.B.shape[0]):
            raise DimensionError(f"expected a {prob.A.shape[0]}x{prob.B.shape[0]} matrix")
        AXB = prob.A @ x @ prob.B
        val = float(np.sum(x * AXB) + np.sum(prob.Cmat * x))
        return val, 2.0 * AXB + prob.Cmat, True
    v = x.ravel()
    if v.size != n_variables(prob):
        raise DimensionError(f"objective expects {n_variables(prob)} variables, got {v.size}")
    if kind is Kind.QUADRATIC:
        res = prob.H @ v - prob.y
        return float(res @ res), (2.0 * prob.H.T @ res).reshape(x.shape), True
    if kind is Kind.QUAD_FORM:
        Av = prob.A @ v
        val = float(prob.sign * (v @ Av) + prob.b @ v)
        return val, (2.0 * prob.sign * Av + prob.b).reshape(x.shape), True
    pieces = prob.A @ v + prob.b
    i = int(np.argmax(pieces))
    return float(pieces[i]), prob.A[i].reshape(x.shape).copy(), False


def value(prob, x):
    return evaluate(prob, x)[0]


def gradient_lipschitz(prob):
    """Lipschitz constant ``L`` of the gradient, or None for non-smooth objectives."""
    kind = prob.kind
    if kind is Kind.CONSTANT:
        return 0.0
    if kind is Kind.QUADRATIC:
        return 2.0 * estimate_spectral_norm(prob.H) ** 2
    if kind is Kind.QUAD_FORM:
        return 2.0 * estimate_spectral_norm(prob.A)
    if kind is Kind.TRACE_QUADRATIC:
        return 2.0 * estimate_spectral_norm(prob.A) * estimate_spectral_norm(prob.B)
    return None


def descriptors(prob, spec):
    """``(L, K)``: gradient Lipschitz constant and value Lipschitz constant on ``conv(V)``.

    ``K`` bounds the gradient norm over the ball of radius ``R = sqrt(C)``,
    which contains the hull.
    """
    R = math.sqrt(cm_sets.modulus_sq(spec))
    kind = prob.kind
    L = gradient_lipschitz(prob)
    if kind is Kind.CONSTANT:
        return 0.0, 0.0
    if kind is Kind.MAX_AFFINE:
        return None, float(np.max(np.linalg.norm(prob.A, axis=1)))
    if kind is Kind.QUADRATIC:
        s = estimate_spectral_norm(prob.H)
        return L, 2.0 * s * (s * R + float(np.linalg.norm(prob.y)))
    if kind is Kind.QUAD_FORM:
        return L, L * R + float(np.linalg.norm(prob.b))
    return L, L * R + float(np.linalg.norm(prob.Cmat))


# -- JSON -----------------------------------------------------------------------

_FIELDS = {
    Kind.QUADRATIC: ("H", "y"),
    Kind.QUAD_FORM: ("A", "b"),
    Kind.MAX_AFFINE: ("A", "b"),
    Kind.TRACE_QUADRATIC: ("A", "B", "Cmat"),
    Kind.CONSTANT: (),
}


def problem_to_json(prob):
    out = {"kind": prob.kind.value}
    for name in _FIELDS[prob.kind]:
        out[name] = getattr(prob, name).tolist()
    if prob.kind is Kind.QUAD_FORM:
        out["sign"] = prob.sign
    if prob.kind is Kind.CONSTANT:
        out["c"] = prob.c
    return out


def problem_from_json(obj):
    """Build a :class:`ProblemSpec`; MaxAffine rows may be given as ``"a"`` or ``"A"``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InstanceError("objective must be an object with a 'kind' field")
    try:
        kind = Kind(obj["kind"])
    except ValueError:
        raise InstanceError(f"unknown objective kind {obj['kind']!r}") from None
    try:
        if kind is Kind.QUADRATIC:
            return quadratic(obj["H"], obj["y"])
        if kind is Kind.QUAD_FORM:
            return quad_form(obj["A"], obj.get("b"), obj.get("sign", 1.0))
        if kind is Kind.MAX_AFFINE:
            return max_affine(obj["a"] if "a" in obj else obj["A"], obj.get("b"))
        if kind is Kind.TRACE_QUADRATIC:
            return trace_quadratic(obj["A"], obj["B"], obj.get("Cmat"))
        return constant(obj.get("c", 0.0))
    except KeyError as exc:
        raise InstanceError(f"objective {kind.value} is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class Instance:
    id: str
    problem: ProblemSpec
    spec: cm_sets.CMSetSpec


def instance_from_json(obj, default_id="instance"):
    """Parse ``{"schema": 1, "id": ..., "objective": {...}, "set": {...}}``.

    Raises
    ------
    InstanceError, cm_sets.InvalidSpecError, DimensionError
        On malformed content or an objective that does not fit the set.
    """
    if not isinstance(obj, dict):
        raise InstanceError("instance must be a JSON object")
    schema = obj.get("schema", 1)
    if schema != 1:
        raise InstanceError(f"unsupported schema version {schema}")
    if "objective" not in obj or "set" not in obj:
        raise InstanceError("instance needs 'objective' and 'set'")
    prob = problem_from_json(obj["objective"])
    spec = cm_sets.spec_from_json(obj["set"])
    check_compatible(prob, spec)
    return Instance(str(obj.get("id", default_id)), prob, spec)


def instance_to_json(inst):
    return {"schema": 1, "id": inst.id, "objective": problem_to_json(inst.problem),
            "set": cm_sets.spec_to_json(inst.spec)}


def load_instance(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: {exc}") from None
    stem = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return instance_from_json(obj, default_id=stem)
