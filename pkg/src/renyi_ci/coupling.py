"""Optimization over transportation polytopes C(P_X, P_Y).

Three solvers live here:

* :func:`mixed_cross_entropy_max` -- the entropy-regularized maximization
  ``max_Q <Q, log 1/pi> + (1/s) H(Q)``, solved by log-domain Sinkhorn with
  Gibbs kernel ``pi^{-s}``;
* :func:`transport_lp_min` -- an exact linear program over the polytope
  (dense two-phase simplex with Bland's rule);
* :func:`oracle_2x2_max` -- golden-section search over the single free
  parameter of a 2x2 coupling, sharing no code with the Sinkhorn path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from renyi_ci.config import SolverConfig
from renyi_ci.prob_core import Dist, JointDist, as_array

_PIVOT_TOL = 1e-12


class SinkhornStall(RuntimeError):
    """Raised in strict mode when Sinkhorn misses its tolerance; carries the best iterate."""

    def __init__(self, message: str, solution: "CouplingSolution"):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True, eq=False)
class CouplingProblem:
    row_marginal: Dist
    col_marginal: Dist
    cost: np.ndarray

    def __post_init__(self):
        if not isinstance(self.row_marginal, Dist):
            object.__setattr__(self, "row_marginal", Dist(self.row_marginal))
        if not isinstance(self.col_marginal, Dist):
            object.__setattr__(self, "col_marginal", Dist(self.col_marginal))
        cost = np.array(self.cost, dtype=float)
        shape = (len(self.row_marginal), len(self.col_marginal))
        if cost.shape != shape:
            raise ValueError(f"cost has shape {cost.shape}, marginals need {shape}")
        if np.any(np.isnan(cost)) or np.any(cost == -np.inf):
            raise ValueError("cost entries must be real or +inf")
        object.__setattr__(self, "cost", cost)


@dataclass(frozen=True, eq=False)
class CouplingSolution:
    coupling: np.ndarray
    value: float
    iterations: int
    marginal_error: float
    converged: bool = True
    param: float | None = None

    def joint(self) -> JointDist:
        return JointDist(self.coupling / self.coupling.sum())


def independent_coupling(px, py) -> JointDist:
    return JointDist(np.outer(as_array(px), as_array(py)))


def support_feasible(px, py, pi) -> bool:
    """True iff ``pi > 0`` on the whole rectangle supp(px) x supp(py)."""
    px = as_array(px)
    py = as_array(py)
    pi = as_array(pi)
    if pi.shape != (px.shape[0], py.shape[0]):
        raise ValueError(f"pi has shape {pi.shape}, marginals need {(px.shape[0], py.shape[0])}")
    block = pi[np.ix_(px > 0, py > 0)]
    return bool(np.all(block > 0))


# ---------------------------------------------------------------------------
# entropic maximization


def _lse(x: np.ndarray, axis: int) -> np.ndarray:
    # scipy's logsumexp carries array-API overhead that dominates on tiny batches
    m = x.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.log(np.sum(np.exp(x - m), axis=axis)) + np.squeeze(m, axis=axis)


def _batch_feasible(px: np.ndarray, py: np.ndarray, pi: np.ndarray) -> np.ndarray:
    zero = (pi <= 0).astype(float)
    hits = np.einsum("bx,xy,by->b", (px > 0).astype(float), zero, (py > 0).astype(float))
    return hits == 0


def sinkhorn_batch(
    px: np.ndarray,
    py: np.ndarray,
    pi: np.ndarray,
    s: float,
    tol: float = 1e-10,
    max_iters: int = 50_000,
    init: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Batched log-domain Sinkhorn for ``max_Q <Q, log 1/pi> + (1/s) H(Q)``.

    ``px`` is ``(B, n)``, ``py`` is ``(B, m)``, ``pi`` is a shared ``(n, m)``
    matrix. Returns ``(values, couplings, iterations, errors, potentials)``;
    support-infeasible problems get value ``+inf`` and the independent coupling.
    """
    px = np.atleast_2d(np.asarray(px, dtype=float))
    py = np.atleast_2d(np.asarray(py, dtype=float))
    pi = np.asarray(pi, dtype=float)
    batch = px.shape[0]
    feasible = _batch_feasible(px, py, pi)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_pi = np.log(pi)
        log_k = np.where(pi > 0, -s * log_pi, -np.inf)
        log_a = np.log(px)
        log_b = np.log(py)
    on_a = px > 0
    on_b = py > 0
    if init is None:
        f = np.where(on_a, 0.0, -np.inf)
        g = np.where(on_b, 0.0, -np.inf)
    else:
        f = np.where(on_a, init[0], -np.inf)
        g = np.where(on_b, init[1], -np.inf)
        f = np.where(np.isfinite(f) | ~on_a, f, 0.0)
        g = np.where(np.isfinite(g) | ~on_b, g, 0.0)

    # infeasible problems are solved on the uniform-cost kernel purely to keep arithmetic finite
    log_k_b = np.broadcast_to(log_k, (batch,) + log_k.shape).copy()
    if not feasible.all():
        log_k_b[~feasible] = 0.0

    err = np.full(batch, np.inf)
    iters = 0
    check_every = 5
    with np.errstate(divide="ignore", invalid="ignore"):
        while iters < max_iters:
            for _ in range(check_every):
                lse_f = _lse(log_k_b + g[:, None, :], axis=2)
                f = np.where(on_a, log_a - lse_f, -np.inf)
                lse_g = _lse(log_k_b + f[:, :, None], axis=1)
                g = np.where(on_b, log_b - lse_g, -np.inf)
            iters += check_every
            log_q = log_k_b + f[:, :, None] + g[:, None, :]
            rows = np.exp(_lse(log_q, axis=2))
            err = np.abs(np.where(on_a, rows, 0.0) - px).sum(axis=1)
            if np.all(err <= tol):
                break
        q = np.exp(log_q)
        q = np.where(np.isfinite(log_q), q, 0.0)
        # exact column sums hold after the g-update; report the final L1 row error
        cost = np.where(pi > 0, -log_pi, 0.0)
        lin = np.einsum("bxy,xy->b", q, cost)
        ent = -np.sum(np.where(q > 0, q * log_q, 0.0), axis=(1, 2))
    values = lin + ent / s
    values = np.where(feasible, values, np.inf)
    if not feasible.all():
        q[~feasible] = px[~feasible, :, None] * py[~feasible, None, :]
        err = np.where(feasible, err, 0.0)
    return values, q, iters, err, (f, g)


def mixed_cross_entropy_max(px, py, pi, s: float, cfg: SolverConfig | None = None, strict: bool = False) -> CouplingSolution:
    """Maximal s-mixed cross entropy ``max_Q <Q, log 1/pi> + (1/s) H(Q)`` over C(px, py)."""
    cfg = cfg or SolverConfig()
    px = as_array(px)
    py = as_array(py)
    pi = as_array(pi)
    if pi.shape != (px.shape[0], py.shape[0]):
        raise ValueError(f"pi has shape {pi.shape}, marginals need {(px.shape[0], py.shape[0])}")
    if not (0 < s < math.inf):
        raise ValueError(f"s must be finite and positive, got {s}")
    if not support_feasible(px, py, pi):
        return CouplingSolution(np.outer(px, py), math.inf, 0, 0.0, True)
    values, q, iters, err, _ = sinkhorn_batch(px[None], py[None], pi, s, cfg.sinkhorn_tol, cfg.max_iters)
    converged = bool(err[0] <= cfg.sinkhorn_tol)
    sol = CouplingSolution(q[0], float(values[0]), iters, float(err[0]), converged)
    if strict and not converged:
        raise SinkhornStall(f"Sinkhorn stalled at L1 marginal error {err[0]:.3e}", sol)
    return sol


def _inner_value_2x2(p: float, a: float, b: float, pi: np.ndarray, s: float) -> float:
    q = np.array([[p, a - p], [b - p, 1.0 - a - b + p]])
    q = np.maximum(q, 0.0)
    total = 0.0
    for val, pv in zip(q.ravel(), pi.ravel()):
        if val > 0:
            total += val * (-math.log(pv)) - val * math.log(val) / s
    return total


def oracle_2x2_max(px, py, pi, s: float, tol: float = 1e-12) -> CouplingSolution:
    """Golden-section maximization over ``p = Q(0, 0)`` on a 2x2 coupling set."""
    px = as_array(px)
    py = as_array(py)
    pi = as_array(pi)
    if px.shape != (2,) or py.shape != (2,) or pi.shape != (2, 2):
        raise ValueError("oracle_2x2_max needs a 2x2 instance")
    if not (0 < s < math.inf):
        raise ValueError(f"s must be finite and positive, got {s}")
    if not support_feasible(px, py, pi):
        return CouplingSolution(np.outer(px, py), math.inf, 0, 0.0, True)
    a, b = float(px[0]), float(py[0])
    lo, hi = max(0.0, a + b - 1.0), min(a, b)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    f = lambda p: _inner_value_2x2(p, a, b, pi, s)
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    iters = 0
    while hi - lo > tol and iters < 500:
        iters += 1
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    p = 0.5 * (lo + hi)
    q = np.maximum(np.array([[p, a - p], [b - p, 1.0 - a - b + p]]), 0.0)
    return CouplingSolution(q, f(p), iters, 0.0, True, param=p)


# ---------------------------------------------------------------------------
# exact linear program


def _simplex(tableau: np.ndarray, basis: list[int], allowed: np.ndarray) -> bool:
    """Minimize the objective in the last row of ``tableau`` in place; Bland's rule.

    Columns with ``allowed == False`` never enter. Returns False if unbounded.
    """
    n_rows = tableau.shape[0] - 1
    while True:
        reduced = tableau[-1, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -_PIVOT_TOL))
        if candidates.size == 0:
            return True
        col = int(candidates[0])
        column = tableau[:n_rows, col]
        pos = column > _PIVOT_TOL
        if not pos.any():
            return False
        ratios = np.full(n_rows, np.inf)
        ratios[pos] = tableau[:n_rows, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-15)
        row = int(min(ties, key=lambda r: basis[r]))
        tableau[row] /= tableau[row, col]
        others = np.arange(tableau.shape[0]) != row
        tableau[others] -= np.outer(tableau[others, col], tableau[row])
        basis[row] = col


def _transport_simplex(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Two-phase simplex on the transportation LP; ``cost`` may hold ``+inf`` (forbidden cells).

    Returns ``(plan, value)``, or ``(None, inf)`` when the finite cells cannot carry the marginals.
    """
    n, m = cost.shape
    cells = [(i, j) for i in range(n) for j in range(m) if np.isfinite(cost[i, j])]
    n_var = len(cells)
    # the last column constraint is implied by the others
    n_con = n + m - 1
    if n_var == 0:
        return None, math.inf
    width = n_var + n_con + 1
    tab = np.zeros((n_con + 1, width))
    for k, (i, j) in enumerate(cells):
        tab[i, k] = 1.0
        if j < m - 1:
            tab[n + j, k] = 1.0
    tab[:n, -1] = a
    tab[n:n_con, -1] = b[: m - 1]
    tab[:n_con, n_var : n_var + n_con] = np.eye(n_con)
    basis = list(range(n_var, n_var + n_con))

    # phase 1: minimize the sum of artificials
    tab[-1, :] = 0.0
    tab[-1, n_var : n_var + n_con] = 1.0
    tab[-1] -= tab[:n_con].sum(axis=0)
    allowed = np.ones(width - 1, dtype=bool)
    _simplex(tab, basis, allowed)
    if -tab[-1, -1] > 1e-10:
        return None, math.inf

    # drive artificials out of the basis; rows that cannot be pivoted are redundant
    keep = []
    for r in range(n_con):
        if basis[r] >= n_var:
            nz = np.flatnonzero(np.abs(tab[r, :n_var]) > 1e-9)
            if nz.size == 0:
                continue
            col = int(nz[0])
            tab[r] /= tab[r, col]
            others = np.arange(tab.shape[0]) != r
            tab[others] -= np.outer(tab[others, col], tab[r])
            basis[r] = col
        keep.append(r)
    tab = np.vstack([tab[keep], tab[-1:]])
    basis = [basis[r] for r in keep]

    # phase 2
    c = np.array([cost[i, j] for i, j in cells])
    tab[-1, :] = 0.0
    tab[-1, :n_var] = c
    for r, var in enumerate(basis):
        if tab[-1, var] != 0.0:
            tab[-1] -= tab[-1, var] * tab[r]
    allowed = np.zeros(width - 1, dtype=bool)
    allowed[:n_var] = True
    _simplex(tab, basis, allowed)

    plan = np.zeros((n, m))
    for r, var in enumerate(basis):
        if var < n_var:
            i, j = cells[var]
            plan[i, j] = max(tab[r, -1], 0.0)
    value = float(np.sum(plan[np.isfinite(cost)] * cost[np.isfinite(cost)]))
    return plan, value


def transport_lp_min(prob: CouplingProblem) -> CouplingSolution:
    """Exact ``min <Q, cost>`` over C(row_marginal, col_marginal) at a vertex.

    Cells with ``+inf`` cost are excluded; if the remaining cells cannot carry
    the marginals the value is ``+inf``.
    """
    a = prob.row_marginal.probs
    b = prob.col_marginal.probs
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    sub_cost = prob.cost[np.ix_(rows, cols)]
    plan_sub, value = _transport_simplex(a[rows], b[cols], sub_cost)
    plan = np.zeros(prob.cost.shape)
    if plan_sub is None:
        return CouplingSolution(np.outer(a, b), math.inf, 0, 0.0, False)
    plan[np.ix_(rows, cols)] = plan_sub
    err = float(np.abs(plan.sum(axis=1) - a).sum() + np.abs(plan.sum(axis=0) - b).sum())
    return CouplingSolution(plan, value, 0, err, True)


def max_linear_coupling(px, py, pi) -> CouplingSolution:
    """``max_Q sum Q log 1/pi`` over C(px, py), the s = inf inner problem."""
    px = as_array(px)
    py = as_array(py)
    pi = as_array(pi)
    if not support_feasible(px, py, pi):
        return CouplingSolution(np.outer(px, py), math.inf, 0, 0.0, True)
    with np.errstate(divide="ignore"):
        cost = np.where(pi > 0, np.log(pi), np.inf)
    sol = transport_lp_min(CouplingProblem(Dist(px), Dist(py), cost))
    return CouplingSolution(sol.coupling, -sol.value, sol.iterations, sol.marginal_error, sol.converged)


def vertex_enumeration_min(a, b, cost) -> tuple[float, np.ndarray | None]:
    """Brute-force LP oracle: enumerate spanning-tree bases of the bipartite graph.

    Every vertex of a transportation polytope is the unique flow supported on
    some spanning tree of K_{n,m}. Exponential; meant for n, m <= 4.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    cells = [(i, j) for i in range(n) for j in range(m)]
    best, best_plan = math.inf, None
    for tree in itertools.combinations(cells, n + m - 1):
        plan = _tree_flow(tree, a, b, n, m)
        if plan is None or np.any(plan < -1e-12):
            continue
        used = plan > 0
        if np.any(np.isinf(cost[used])):
            continue
        val = float(np.sum(plan[used] * cost[used]))
        if val < best:
            best, best_plan = val, np.maximum(plan, 0.0)
    return best, best_plan


def _tree_flow(tree, a, b, n, m):
    """Flow on a spanning tree by leaf peeling; None if ``tree`` has a cycle."""
    adj = {("r", i): [] for i in range(n)}
    adj.update({("c", j): [] for j in range(m)})
    for i, j in tree:
        adj[("r", i)].append(("c", j))
        adj[("c", j)].append(("r", i))
    # connectivity check (n+m-1 edges + connected <=> tree)
    seen = {("r", 0)}
    stack = [("r", 0)]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n + m:
        return None
    supply = {("r", i): a[i] for i in range(n)}
    supply.update({("c", j): b[j] for j in range(m)})
    degree = {k: len(v) for k, v in adj.items()}
    alive = set(tree)
    plan = np.zeros((n, m))
    leaves = [k for k, d in degree.items() if d == 1]
    while leaves:
        leaf = leaves.pop()
        if degree[leaf] != 1:
            continue
        edge = next(
            (e for e in alive if (leaf[0] == "r" and e[0] == leaf[1]) or (leaf[0] == "c" and e[1] == leaf[1])),
            None,
        )
        if edge is None:
            continue
        i, j = edge
        flow = supply[leaf]
        plan[i, j] = flow
        other = ("c", j) if leaf[0] == "r" else ("r", i)
        supply[other] -= flow
        supply[leaf] = 0.0
        alive.discard(edge)
        degree[leaf] -= 1
        degree[other] -= 1
        if degree[other] == 1:
            leaves.append(other)
    return plan
