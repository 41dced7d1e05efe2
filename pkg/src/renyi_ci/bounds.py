"""Upper/lower bound objectives on Renyi common information and their outer search.

For a decomposition ``(P_W, P_X|W, P_Y|W)`` of ``pi`` the upper-bound objective is

    -((1+s)/s) H(XY|W) + sum_w P(w) H_s(P_X|W=w, P_Y|W=w || pi)

and the lower-bound objective replaces the diagonal pairing of ``w`` with the
cheapest coupling ``Q_WW'`` in C(P_W, P_W). ``H_s`` is computed by
:mod:`renyi_ci.coupling`.

:func:`optimize_bound` evaluates feasible points only, so every value it
returns is an upper bound on the true minimum (or infimum) of its objective.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from renyi_ci.config import SolverConfig
from renyi_ci.coupling import (
    CouplingProblem,
    max_linear_coupling,
    sinkhorn_batch,
    transport_lp_min,
)
from renyi_ci.prob_core import Channel, Dist, JointDist, as_array

log = logging.getLogger(__name__)

PRUNE_TOL = 1e-10


class Which(str, enum.Enum):
    UB = "ub"
    LB = "lb"
    WYNER = "wyner"


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``X - W - Y`` model: weights ``pw`` and per-``w`` conditionals."""

    pw: Dist
    px_given_w: Channel
    py_given_w: Channel

    def __post_init__(self):
        if not isinstance(self.pw, Dist):
            object.__setattr__(self, "pw", Dist(self.pw))
        if not isinstance(self.px_given_w, Channel):
            object.__setattr__(self, "px_given_w", Channel(self.px_given_w))
        if not isinstance(self.py_given_w, Channel):
            object.__setattr__(self, "py_given_w", Channel(self.py_given_w))
        n = len(self.pw)
        if len(self.px_given_w) != n or len(self.py_given_w) != n:
            raise ValueError(
                f"pw has {n} entries but channels have {len(self.px_given_w)} and {len(self.py_given_w)} rows"
            )

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.pw.probs, self.px_given_w.rows, self.py_given_w.rows

    def pruned(self, tol: float = PRUNE_TOL) -> "Decomposition":
        keep = self.pw.probs >= tol
        if keep.all():
            return self
        pw = self.pw.probs[keep]
        return Decomposition(Dist(pw / pw.sum()), self.px_given_w.rows[keep], self.py_given_w.rows[keep])


@dataclass(frozen=True, eq=False)
class BoundResult:
    """Outcome of an outer search.

    ``value`` is the objective at ``decomposition``, a feasible point whenever
    ``converged`` is true, hence an upper bound on the optimum.
    """

    value: float
    decomposition: Decomposition | None
    constraint_residual: float
    inner_couplings: list = field(default_factory=list, repr=False)
    converged: bool = False
    which: str = "ub"
    s: float = 1.0
    w_cardinality: int = 0
    restarts: int = 0
    seed: int = 0
    evaluations: int = 0
    wall_time: float = 0.0
    posterior: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None


def induced_joint(dec: Decomposition) -> JointDist:
    pw, px, py = dec.arrays
    return JointDist(np.einsum("w,wx,wy->xy", pw, px, py))


def _h_rows(rows: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rows > 0, rows * np.log(rows), 0.0)
    return -t.sum(axis=-1)


def _product_cond_entropy(pw: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """H(XY|W) for the product channel; broadcasts over leading batch axes."""
    return np.sum(pw * (_h_rows(px) + _h_rows(py)), axis=-1)


def wyner_objective(dec: Decomposition) -> float:
    """I(XY; W) for a conditionally independent decomposition."""
    pw, px, py = dec.arrays
    joint = np.einsum("w,wx,wy->xy", pw, px, py)
    value = float(_h_rows(joint.ravel()) - _product_cond_entropy(pw, px, py))
    return max(value, 0.0) if value > -1e-12 else value


def _entropy_weight(s: float) -> float:
    return 1.0 if math.isinf(s) else (1.0 + s) / s


def _pair_values(px: np.ndarray, py: np.ndarray, pi: np.ndarray, s: float, cfg: SolverConfig):
    """H_s for each row pair ``(px[k], py[k])``; returns ``(values, couplings)``."""
    if math.isinf(s):
        sols = [max_linear_coupling(a, b, pi) for a, b in zip(px, py)]
        return np.array([sol.value for sol in sols]), np.array([sol.coupling for sol in sols])
    if px.shape[0] == 0:
        return np.zeros(0), np.zeros((0,) + pi.shape)
    values, q, _, _, _ = sinkhorn_batch(px, py, pi, s, cfg.sinkhorn_tol, cfg.max_iters)
    return values, q


def _check_s(s: float) -> None:
    if not s > 0:
        raise ValueError(f"s must lie in (0, inf], got {s}")


def _ub_parts(dec: Decomposition, pi: np.ndarray, s: float, cfg: SolverConfig):
    dec = dec.pruned()
    pw, px, py = dec.arrays
    if pi.shape != (px.shape[1], py.shape[1]):
        raise ValueError(f"pi has shape {pi.shape}, decomposition needs {(px.shape[1], py.shape[1])}")
    values, couplings = _pair_values(px, py, pi, s, cfg)
    total = -_entropy_weight(s) * _product_cond_entropy(pw, px, py) + float(np.dot(pw, values)) if np.all(np.isfinite(values)) else math.inf
    return float(total), couplings


def gamma_ub_objective(dec: Decomposition, pi, s: float, cfg: SolverConfig | None = None) -> float:
    """Upper-bound objective at a fixed decomposition; ``s = inf`` uses the linear inner max."""
    _check_s(s)
    value, _ = _ub_parts(dec, as_array(pi), s, cfg or SolverConfig())
    return value


def _lb_parts(dec: Decomposition, pi: np.ndarray, s: float, cfg: SolverConfig):
    dec = dec.pruned()
    pw, px, py = dec.arrays
    if pi.shape != (px.shape[1], py.shape[1]):
        raise ValueError(f"pi has shape {pi.shape}, decomposition needs {(px.shape[1], py.shape[1])}")
    n = pw.shape[0]
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    values, _ = _pair_values(px[ix.ravel()], py[iy.ravel()], pi, s, cfg)
    h = values.reshape(n, n)
    sol = transport_lp_min(CouplingProblem(Dist(pw), Dist(pw), h))
    if not math.isfinite(sol.value):
        return math.inf, h, sol.coupling
    value = -_entropy_weight(s) * _product_cond_entropy(pw, px, py) + sol.value
    return float(value), h, sol.coupling


def gamma_lb_objective(dec: Decomposition, pi, s: float, cfg: SolverConfig | None = None) -> float:
    """Lower-bound objective at a fixed decomposition (inner LP over C(P_W, P_W))."""
    _check_s(s)
    value, _, _ = _lb_parts(dec, as_array(pi), s, cfg or SolverConfig())
    return value


def check_condition_star(dec: Decomposition, pi, tol: float = 1e-9) -> bool:
    """Whether ``pi`` restricted to every per-``w`` support rectangle is a product."""
    pi = as_array(pi)
    pw, px, py = dec.arrays
    for w in np.flatnonzero(pw > tol):
        rect = pi[np.ix_(px[w] > tol, py[w] > tol)]
        mass = rect.sum()
        if mass <= 0:
            log.warning("component w=%d has an empty support rectangle under pi", w)
            return False
        rect = rect / mass
        minors = np.abs(rect[:, None, :, None] * rect[None, :, None, :] - rect[:, None, None, :] * rect[None, :, :, None])
        if minors.max(initial=0.0) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# outer search


class _Problem:
    """Batched objective over posteriors ``T[w, cell]`` on the support cells of ``pi``."""

    def __init__(self, pi: np.ndarray, s: float, which: Which, n_w: int, cfg: SolverConfig):
        self.pi = pi
        self.s = s
        self.which = which
        self.n_w = n_w
        self.cfg = cfg
        self.cells = np.flatnonzero(pi.ravel() > 0)
        self.weights = pi.ravel()[self.cells]
        self.nx, self.ny = pi.shape
        self.evaluations = 0

    def project(self, t: np.ndarray):
        """Posterior batch ``(B, W, C)`` -> (pw, px|w, py|w, I(X;Y|W)) with snapped supports."""
        batch = t.shape[0]
        full = np.zeros((batch, self.n_w, self.nx * self.ny))
        full[:, :, self.cells] = t * self.weights
        pwxy = full.reshape(batch, self.n_w, self.nx, self.ny)
        pw = pwxy.sum(axis=(2, 3))
        safe = np.where(pw > 0, pw, 1.0)[:, :, None]
        px = pwxy.sum(axis=3) / safe
        py = pwxy.sum(axis=2) / safe
        with np.errstate(divide="ignore", invalid="ignore"):
            prod = px[:, :, :, None] * py[:, :, None, :] * pw[:, :, None, None]
            ratio = np.where(pwxy > 0, np.log(pwxy) - np.log(prod), 0.0)
        cmi = np.sum(pwxy * ratio, axis=(1, 2, 3))
        px = self._snap(px)
        py = self._snap(py)
        return pw, px, py, np.maximum(cmi, 0.0)

    def _snap(self, rows: np.ndarray) -> np.ndarray:
        rows = np.where(rows < self.cfg.support_tol, 0.0, rows)
        total = rows.sum(axis=-1, keepdims=True)
        return np.where(total > 0, rows / np.where(total > 0, total, 1.0), rows)

    def objective(self, pw: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
        """Target objective for a batch of decompositions ``(B, W, .)``."""
        self.evaluations += pw.shape[0]
        cond = _product_cond_entropy(pw, px, py)
        if self.which is Which.WYNER:
            joint = np.einsum("bw,bwx,bwy->bxy", pw, px, py)
            return _h_rows(joint.reshape(joint.shape[0], -1)) - cond
        batch, n_w = pw.shape
        weight = _entropy_weight(self.s)
        if self.which is Which.UB:
            vals, _ = _pair_values(px.reshape(batch * n_w, -1), py.reshape(batch * n_w, -1), self.pi, self.s, self.cfg)
            vals = vals.reshape(batch, n_w)
            kept = pw >= PRUNE_TOL
            with np.errstate(invalid="ignore"):
                inner = np.where(kept, pw * vals, 0.0).sum(axis=1)
            return -weight * cond + inner
        ix, iy = np.meshgrid(np.arange(n_w), np.arange(n_w), indexing="ij")
        vals, _ = _pair_values(
            px[:, ix.ravel()].reshape(batch * n_w * n_w, -1),
            py[:, iy.ravel()].reshape(batch * n_w * n_w, -1),
            self.pi,
            self.s,
            self.cfg,
        )
        h = vals.reshape(batch, n_w, n_w)
        out = np.empty(batch)
        for b in range(batch):
            keep = pw[b] >= PRUNE_TOL
            w = pw[b, keep]
            sol = transport_lp_min(CouplingProblem(Dist(w / w.sum()), Dist(w / w.sum()), h[b][np.ix_(keep, keep)]))
            out[b] = sol.value
        return -weight * cond + out

    def penalized(self, t: np.ndarray, lam: float, which: Which | None = None) -> np.ndarray:
        pw, px, py, cmi = self.project(t)
        if which is not None and which is not self.which:
            saved, self.which = self.which, which
            try:
                base = self.objective(pw, px, py)
            finally:
                self.which = saved
        else:
            base = self.objective(pw, px, py)
        with np.errstate(invalid="ignore"):
            return base + lam * cmi


def _normalize(t: np.ndarray, floor: float) -> np.ndarray:
    t = np.maximum(t, floor)
    return t / t.sum(axis=-2, keepdims=True)


def _fd_gradient(problem: _Problem, t: np.ndarray, lam: float, base: float, which) -> np.ndarray:
    n_w, n_c = t.shape
    step = problem.cfg.fd_step * np.maximum(t, 1e-3)
    batch = np.repeat(t[None], n_w * n_c, axis=0)
    idx = np.arange(n_w * n_c)
    batch.reshape(n_w * n_c, -1)[idx, idx] += step.ravel()
    batch = batch / batch.sum(axis=1, keepdims=True)
    vals = problem.penalized(batch, lam, which)
    grad = ((vals - base) / step.ravel()).reshape(n_w, n_c)
    return np.where(np.isfinite(grad), grad, 0.0)


_STEP_LADDER = 2.0 ** -np.arange(0, 12)


def _descend(problem: _Problem, t: np.ndarray, lam: float, n_steps: int, which=None) -> tuple[np.ndarray, float]:
    """Exponentiated-gradient descent with a batched backtracking line search."""
    floor = problem.cfg.prob_floor
    value = float(problem.penalized(t[None], lam, which)[0])
    eta = 1.0
    for _ in range(n_steps):
        if not math.isfinite(value):
            break
        grad = _fd_gradient(problem, t, lam, value, which)
        # centring per column leaves the EG update unchanged but keeps the exponent small
        grad = grad - (t * grad).sum(axis=0, keepdims=True)
        scale = np.max(np.abs(grad))
        if scale == 0:
            break
        etas = eta * 4.0 * _STEP_LADDER / scale
        cands = _normalize(t[None] * np.exp(-etas[:, None, None] * grad[None]), floor)
        vals = problem.penalized(cands, lam, which)
        vals = np.where(np.isfinite(vals), vals, np.inf)
        k = int(np.argmin(vals))
        if not vals[k] < value - 1e-15 * max(1.0, abs(value)):
            break
        t, value = cands[k], float(vals[k])
        eta = etas[k] * scale
    return t, value


def _default_w(pi: np.ndarray, cfg: SolverConfig) -> int:
    return cfg.w_cardinality or pi.shape[0] * pi.shape[1]


def _posterior_from(dec_or_t, n_w: int, problem: _Problem) -> np.ndarray:
    if isinstance(dec_or_t, Decomposition):
        pw, px, py = dec_or_t.arrays
        joint = np.einsum("w,wx,wy->wxy", pw, px, py).reshape(pw.shape[0], -1)[:, problem.cells]
        total = joint.sum(axis=0, keepdims=True)
        t = joint / np.where(total > 0, total, 1.0)
    else:
        t = np.asarray(dec_or_t, dtype=float)
    if t.shape[0] < n_w:
        t = np.vstack([t, np.zeros((n_w - t.shape[0], t.shape[1]))])
    elif t.shape[0] > n_w:
        raise ValueError(f"initial point has {t.shape[0]} components, |W| = {n_w}")
    return _normalize(t, problem.cfg.prob_floor)


def _kick(t: np.ndarray, rng: np.random.Generator, scale: float, floor: float) -> np.ndarray:
    return _normalize(t * np.exp(scale * rng.standard_normal(t.shape)), floor)


def _near_independent(t: np.ndarray, tol: float = 1e-3) -> bool:
    """True when the posterior barely depends on the cell, i.e. W is almost independent of XY."""
    return bool(np.max(t.max(axis=1) - t.min(axis=1)) < tol)


def _stages(problem: _Problem, t: np.ndarray, rng: np.random.Generator, which=None) -> np.ndarray:
    cfg = problem.cfg
    for lam in cfg.penalty_schedule:
        t, _ = _descend(problem, t, lam, cfg.steps_per_stage, which)
        if cfg.kick_scale > 0 and _near_independent(t):
            # W independent of XY is stationary for every penalty weight; perturb and keep the better point
            pw, px, py, cmi = problem.project(t[None])
            if cmi[0] > cfg.constraint_tol:
                trial = _kick(t, rng, cfg.kick_scale, cfg.prob_floor)
                t_kick, v_kick = _descend(problem, trial, lam, cfg.steps_per_stage, which)
                v_stay = float(problem.penalized(t[None], lam, which)[0])
                if v_kick < v_stay:
                    t = t_kick
    return t


def _run_restart(problem: _Problem, t0: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cfg = problem.cfg
    t = t0
    first = float(problem.penalized(t[None], cfg.penalty_schedule[0])[0])
    if not math.isfinite(first) and problem.which is not Which.WYNER:
        # reach a finite region through the (always finite) Wyner objective first
        t = _stages(problem, t, rng, Which.WYNER)
    t = _stages(problem, t, rng)
    t, _ = _descend(problem, t, cfg.penalty_schedule[-1] * 100.0, cfg.polish_steps)
    return t


def _finalize(problem: _Problem, t: np.ndarray):
    pw, px, py, _ = problem.project(t[None])
    dec = Decomposition(Dist(pw[0]), Channel(px[0]), Channel(py[0]))
    residual = float(np.abs(induced_joint(dec).probs - problem.pi).sum())
    if problem.which is Which.WYNER:
        return wyner_objective(dec), dec, residual, []
    if problem.which is Which.UB:
        value, couplings = _ub_parts(dec, problem.pi, problem.s, problem.cfg)
        return value, dec, residual, list(couplings)
    value, h, plan = _lb_parts(dec, problem.pi, problem.s, problem.cfg)
    return value, dec, residual, [h, plan]


def optimize_bound(
    pi,
    s: float,
    which: str | Which = Which.UB,
    cfg: SolverConfig | None = None,
    initial: list | None = None,
) -> BoundResult:
    """Multi-start penalized search for the best decomposition of ``pi``.

    The search runs over posteriors ``P_W|XY`` so that ``pi`` is the exact
    marginal of every iterate; conditional independence of X and Y given W is
    enforced by the increasing penalty ``cfg.penalty_schedule`` on I(X;Y|W).
    ``s`` is ignored for ``which="wyner"``. ``initial`` holds extra starting
    points (decompositions or posterior arrays), tried before the random ones.
    """
    start = time.perf_counter()
    cfg = cfg or SolverConfig()
    which = Which(which)
    if which is not Which.WYNER:
        _check_s(s)
    pi_arr = as_array(pi if isinstance(pi, JointDist) else JointDist(pi))
    n_w = _default_w(pi_arr, cfg)
    problem = _Problem(pi_arr, s, which, n_w, cfg)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    starts = [_posterior_from(x, n_w, problem) for x in (initial or [])]
    if which is not Which.WYNER and cfg.warm_start_wyner:
        wy = optimize_bound(pi_arr, s, Which.WYNER, cfg)
        if wy.posterior is not None:
            starts.append(wy.posterior)
    starts += [_normalize(rng.dirichlet(np.ones(n_w), size=problem.cells.size).T, cfg.prob_floor) for _ in range(cfg.restarts)]

    best = None
    fallback = None
    child_rngs = [np.random.default_rng(ss) for ss in np.random.SeedSequence(cfg.seed).spawn(len(starts))]
    for t0, child in zip(starts, child_rngs):
        t = _run_restart(problem, t0, child)
        value, dec, residual, inner = _finalize(problem, t)
        cand = (value, dec, residual, inner, t)
        if residual <= cfg.constraint_tol and math.isfinite(value):
            if best is None or value < best[0]:
                best = cand
        elif fallback is None or residual < fallback[2]:
            fallback = cand
    chosen = best if best is not None else fallback
    value, dec, residual, inner, t = chosen
    return BoundResult(
        value=float(value),
        decomposition=dec,
        constraint_residual=residual,
        inner_couplings=inner,
        converged=best is not None,
        which=which.value,
        s=s,
        w_cardinality=n_w,
        restarts=len(starts),
        seed=cfg.seed,
        evaluations=problem.evaluations,
        wall_time=time.perf_counter() - start,
        posterior=t,
    )


def sweep_s(pi, s_grid, which: str | Which = Which.UB, cfg: SolverConfig | None = None) -> list[BoundResult]:
    """One :func:`optimize_bound` per grid point, each warm-started from the previous optimum."""
    if len(s_grid) == 0:
        raise ValueError("s_grid must be non-empty")
    cfg = cfg or SolverConfig()
    results = []
    previous = None
    for s in s_grid:
        try:
            res = optimize_bound(pi, s, which, cfg, initial=[previous] if previous is not None else None)
        except Exception as exc:  # noqa: BLE001 - a sweep records failures and moves on
            log.warning("sweep point s=%s failed: %s", s, exc)
            res = BoundResult(math.inf, None, math.inf, converged=False, which=Which(which).value, s=s, error=str(exc))
        if res.posterior is not None and res.converged:
            previous = res.posterior
        results.append(res)
    return results
