"""Closed forms for the doubly symmetric binary source.

The source is ``W ~ Bern(1/2)``, ``X = W xor A``, ``Y = W xor B`` with
independent ``A, B ~ Bern(a)``, giving ``pi = [[alpha0, beta0], [beta0, alpha0]]``
where ``alpha0 = (a^2 + (1-a)^2)/2`` and ``beta0 = a(1-a)``. Equivalently
``Y = X xor E`` with ``E ~ Bern(p)`` and ``p = 2 beta0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from renyi_ci.bounds import Decomposition
from renyi_ci.prob_core import Channel, Dist, JointDist


@dataclass(frozen=True)
class DsbsParams:
    a: float
    alpha0: float
    beta0: float
    crossover_p: float


def from_a(a: float) -> DsbsParams:
    if not 0 < a < 0.5:
        raise ValueError(f"a must lie in (0, 0.5), got {a}")
    beta0 = a * (1 - a)
    alpha0 = 0.5 - beta0
    return DsbsParams(a=a, alpha0=alpha0, beta0=beta0, crossover_p=2 * beta0)


def from_crossover(p: float) -> DsbsParams:
    if not 0 < p < 0.5:
        raise ValueError(f"crossover p must lie in (0, 0.5), got {p}")
    # smaller root of a(1-a) = p/2, written to avoid cancellation for small p
    a = p / (1 + math.sqrt(1 - 2 * p))
    return from_a(a)


def joint(params: DsbsParams) -> JointDist:
    return JointDist([[params.alpha0, params.beta0], [params.beta0, params.alpha0]])


def _bsc(a: float) -> np.ndarray:
    return np.array([[1 - a, a], [a, 1 - a]])


def optimal_decomposition(params: DsbsParams) -> Decomposition:
    """Two equiprobable components, each a product of two BSC(a) outputs."""
    ch = _bsc(params.a)
    return Decomposition(Dist([0.5, 0.5]), Channel(ch), Channel(ch))


def binary_entropy(a: float) -> float:
    if a <= 0 or a >= 1:
        return 0.0
    return -a * math.log(a) - (1 - a) * math.log1p(-a)


def wyner_value(params: DsbsParams) -> float:
    a = params.a
    sq = a * a + (1 - a) ** 2
    return -2 * binary_entropy(a) - sq * math.log(sq / 2) - 2 * a * (1 - a) * math.log(a * (1 - a))


def p_star(params: DsbsParams, s: float) -> float:
    """Optimal ``Q(0,0)`` of the per-component coupling.

    Root of ``(k-1) p^2 + (k(1-2a) + 2a) p - a^2 = 0`` with
    ``k = (alpha0/beta0)^{2s}``, in the rationalized form
    ``2a^2 / (B + sqrt(B^2 + 4(k-1)a^2))`` which stays accurate for huge ``k``.
    """
    a = params.a
    log_k = 2 * s * (math.log(params.alpha0) - math.log(params.beta0))
    if log_k > 0:
        # divide through by k so nothing overflows when k is huge
        inv_k = math.exp(-log_k)
        b = (1 - 2 * a) + 2 * a * inv_k
        disc = b * b + 4 * (1 - inv_k) * a * a * inv_k
        return 2 * a * a * inv_k / (b + math.sqrt(disc))
    k = math.exp(log_k)
    b = k * (1 - 2 * a) + 2 * a
    return 2 * a * a / (b + math.sqrt(b * b + 4 * (k - 1) * a * a))


def ub_value(params: DsbsParams, s: float, extrapolate: bool = False) -> float:
    """Closed-form upper bound for ``s`` in (0, 1].

    Larger ``s`` is only evaluated with ``extrapolate=True``: the formula is
    still the objective at the symmetric decomposition, but it is no longer a
    proven bound on the Renyi common information.
    """
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    if s > 1:
        if not extrapolate:
            raise ValueError(f"ub_value is proven only for s in (0, 1]; got s={s} (pass extrapolate=True)")
        warnings.warn("ub_value evaluated outside s in (0, 1]", stacklevel=2)
    a = params.a
    p = p_star(params, s)

    def xlogx(v: float) -> float:
        return v * math.log(v) if v > 0 else 0.0

    inner = (
        -xlogx(p)
        - 2 * xlogx(a - p)
        - xlogx(1 + p - 2 * a)
        - s * (1 + 2 * p - 2 * a) * math.log(params.alpha0)
        - s * (2 * a - 2 * p) * math.log(params.beta0)
    )
    return -(1 + s) / s * 2 * binary_entropy(a) + inner / s


def t_infinity_value(params: DsbsParams) -> float:
    a = params.a
    sq = a * a + (1 - a) ** 2
    return -2 * binary_entropy(a) - (1 - 2 * a) * math.log(sq / 2) - 2 * a * math.log(a * (1 - a))
