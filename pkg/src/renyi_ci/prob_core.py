"""Finite-alphabet probability primitives.

All logarithms are natural, so every information quantity is in nats.
The conventions ``0 log 0 = 0`` and ``0 log(0/0) = 0`` hold throughout, and a
cell with ``p > 0`` and ``q = 0`` makes a positive-order divergence ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy.special import logsumexp

MASS_TOL = 1e-9

ArrayLike = Union["Dist", "JointDist", "Channel", np.ndarray, list, tuple]


def _validated(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(arr < 0):
        idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
        raise ValueError(f"{name} has a negative entry at index {idx}")
    return arr


def _normalized(arr: np.ndarray, name: str) -> np.ndarray:
    total = arr.sum()
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"{name} has total mass {total!r}, expected 1")
    arr = arr / total
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector over a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _validated(self.probs, 1, "Dist")
        object.__setattr__(self, "probs", _normalized(arr, "Dist"))

    def __len__(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "Dist":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class JointDist:
    """Probability matrix over X x Y, indexed ``probs[x, y]``."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _validated(self.probs, 2, "JointDist")
        object.__setattr__(self, "probs", _normalized(arr, "JointDist"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def marginal_x(self) -> Dist:
        return Dist(self.probs.sum(axis=1))

    def marginal_y(self) -> Dist:
        return Dist(self.probs.sum(axis=0))


@dataclass(frozen=True, eq=False)
class Channel:
    """Stochastic matrix: ``rows[w]`` is a distribution over the output alphabet.

    Rows may themselves be matrices (e.g. a joint channel Q_{XY|W}); every
    axis after the first is the output alphabet.
    """

    rows: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rows, dtype=float)
        if arr.ndim < 2:
            raise ValueError(f"Channel needs at least 2 axes, got shape {arr.shape}")
        arr = _validated(arr, arr.ndim, "Channel")
        totals = arr.reshape(arr.shape[0], -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(totals - 1.0) > MASS_TOL)
        if bad.size:
            raise ValueError(f"Channel row {int(bad[0])} has mass {totals[bad[0]]!r}")
        arr = arr / totals.reshape((-1,) + (1,) * (arr.ndim - 1))
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    def __len__(self) -> int:
        return self.rows.shape[0]


def as_array(x) -> np.ndarray:
    """Raw probabilities of a Dist/JointDist/Channel, or ``x`` itself as an array."""
    if isinstance(x, (Dist, JointDist)):
        return x.probs
    if isinstance(x, Channel):
        return x.rows
    return np.asarray(x, dtype=float)


def _plogp_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def entropy(p) -> float:
    """Shannon entropy in nats."""
    return _plogp_sum(as_array(p).ravel())


def joint_entropy(q) -> float:
    """Entropy of a joint distribution, treating the matrix as one flat alphabet."""
    return _plogp_sum(as_array(q).ravel())


def conditional_entropy(ch, pw) -> float:
    """``sum_w pw(w) H(ch[w])``."""
    rows = as_array(ch)
    weights = as_array(pw).ravel()
    if rows.shape[0] != weights.shape[0]:
        raise ValueError(
            f"channel has {rows.shape[0]} rows but pw has {weights.shape[0]} entries"
        )
    flat = rows.reshape(rows.shape[0], -1)
    return float(sum(w * _plogp_sum(r) for w, r in zip(weights, flat) if w > 0))


def renyi_divergence(p, q, s: float) -> float:
    """Renyi divergence of order ``1 + s`` in nats.

    ``s = 0`` is the KL divergence and ``s = inf`` the max-log-ratio; both are
    explicit code paths. Valid orders are ``s`` in ``(-1, inf]``.
    """
    p = as_array(p)
    q = as_array(q)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    p = p.ravel()
    q = q.ravel()
    if not s > -1:
        raise ValueError(f"order 1+s requires s > -1, got s={s}")
    on_p = p > 0
    if s >= 0 and np.any(q[on_p] == 0):
        return math.inf
    if math.isinf(s):
        return float(np.log(np.max(p[on_p] / q[on_p])))
    if s == 0:
        return float(np.sum(p[on_p] * (np.log(p[on_p]) - np.log(q[on_p]))))
    # for s < 0 cells with q = 0 contribute nothing
    mask = on_p & (q > 0)
    if not mask.any():
        return math.inf
    log_terms = (1 + s) * np.log(p[mask]) - s * np.log(q[mask])
    return float(logsumexp(log_terms) / s)


class VariationalResult(NamedTuple):
    value: float
    maximizer: Dist | None


def variational_objective(r, p, q, s: float) -> float:
    """``(1/s) [sum_x r log(p^{1+s} q^{-s}) - sum_x r log r]`` for a candidate ``r``."""
    r = as_array(r).ravel()
    p = as_array(p).ravel()
    q = as_array(q).ravel()
    on_r = r > 0
    if np.any(p[on_r] == 0):
        return -math.inf
    if np.any(q[on_r] == 0):
        return math.inf
    rr = r[on_r]
    log_w = (1 + s) * np.log(p[on_r]) - s * np.log(q[on_r])
    return float(np.sum(rr * (log_w - np.log(rr))) / s)


def variational_renyi(p, q, s: float) -> VariationalResult:
    """Renyi divergence as a supremum over tilted distributions.

    The maximizer is ``R*(x) ∝ p(x)^{1+s} q(x)^{-s}``. On a support violation
    the value is ``+inf`` and ``maximizer`` is ``None``.
    """
    if not (0 < s < math.inf):
        raise ValueError(f"s must be finite and positive, got {s}")
    p = as_array(p).ravel()
    q = as_array(q).ravel()
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    on_p = p > 0
    if np.any(q[on_p] == 0):
        return VariationalResult(math.inf, None)
    log_w = np.full(p.shape, -np.inf)
    log_w[on_p] = (1 + s) * np.log(p[on_p]) - s * np.log(q[on_p])
    log_r = log_w - logsumexp(log_w[on_p])
    r = np.where(on_p, np.exp(log_r), 0.0)
    value = float(np.sum(r[on_p] * (log_w[on_p] - log_r[on_p])) / s)
    return VariationalResult(value, Dist(r / r.sum()))


class ConverseGap(NamedTuple):
    """Slack in ``D(P_X||pi_X) >= D(P_MX||P_M pi_X) - log K``.

    ``infinite`` flags instances where both divergences are ``+inf``; ``gap``
    is then reported as ``+inf`` since the inequality holds trivially.
    """

    gap: float
    marginal_divergence: float
    joint_divergence: float
    infinite: bool


def one_shot_converse_gap(pm, px_given_m, pi_x, s: float) -> ConverseGap:
    """Check the one-shot converse inequality for a uniform message ``M``."""
    pm = as_array(pm).ravel()
    rows = as_array(px_given_m)
    pi_x = as_array(pi_x).ravel()
    k = pm.shape[0]
    if rows.shape != (k, pi_x.shape[0]):
        raise ValueError(f"channel shape {rows.shape} incompatible with K={k}, |X|={pi_x.shape[0]}")
    if np.max(np.abs(pm - 1.0 / k)) > 1e-12:
        raise ValueError("pm must be uniform")
    rate = math.log(k)
    px = pm @ rows
    p_mx = pm[:, None] * rows
    marginal = renyi_divergence(px, pi_x, s)
    joint = renyi_divergence(p_mx, np.outer(pm, pi_x), s)
    if math.isinf(marginal) and math.isinf(joint):
        return ConverseGap(math.inf, marginal, joint, True)
    return ConverseGap(marginal - (joint - rate), marginal, joint, math.isinf(marginal))
