"""Self-check suites run by ``renyi-ci verify``.

Each suite is a list of named checks over randomized or closed-form
instances; a suite passes iff every check does. Seeds are fixed so a report
is reproducible.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from renyi_ci import dsbs
from renyi_ci.bounds import (
    Decomposition,
    check_condition_star,
    gamma_lb_objective,
    gamma_ub_objective,
    induced_joint,
    wyner_objective,
)
from renyi_ci.config import SolverConfig
from renyi_ci.coupling import (
    CouplingProblem,
    mixed_cross_entropy_max,
    oracle_2x2_max,
    transport_lp_min,
    vertex_enumeration_min,
)
from renyi_ci.prob_core import (
    Dist,
    entropy,
    joint_entropy,
    one_shot_converse_gap,
    renyi_divergence,
    variational_objective,
    variational_renyi,
)

Check = Callable[[], bool]


def _rand_dist(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def random_decomposition(rng: np.random.Generator, pi_shape=(2, 2), n_w: int = 2) -> Decomposition:
    return Decomposition(
        Dist(_rand_dist(rng, n_w)),
        rng.dirichlet(np.ones(pi_shape[0]), size=n_w),
        rng.dirichlet(np.ones(pi_shape[1]), size=n_w),
    )


# --- core -------------------------------------------------------------------


def check_variational_identity(n_instances: int = 200, competitors: int = 100, seed: int = 11) -> bool:
    rng = np.random.default_rng(seed)
    for i in range(n_instances):
        s = (0.3, 1.0, 2.5)[i % 3]
        n = int(rng.integers(2, 9))
        p, q = _rand_dist(rng, n), _rand_dist(rng, n)
        res = variational_renyi(p, q, s)
        if abs(res.value - renyi_divergence(p, q, s)) > 1e-9:
            return False
        if abs(variational_objective(res.maximizer, p, q, s) - res.value) > 1e-9:
            return False
        for _ in range(competitors):
            if variational_objective(_rand_dist(rng, n), p, q, s) > res.value + 1e-9:
                return False
    return True


def check_order_monotone(n_instances: int = 50, seed: int = 12) -> bool:
    rng = np.random.default_rng(seed)
    grid = (0.1, 0.5, 1.0, 2.0, 5.0, math.inf)
    for _ in range(n_instances):
        n = int(rng.integers(2, 7))
        p, q = _rand_dist(rng, n), _rand_dist(rng, n)
        vals = [renyi_divergence(p, q, s) for s in grid]
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            return False
    return True


def check_one_shot_converse(n_instances: int = 500, seed: int = 13) -> bool:
    rng = np.random.default_rng(seed)
    for i in range(n_instances):
        k = (1, 2, 4, 8)[i % 4]
        s = (0.5, 1.0, math.inf)[(i // 4) % 3]
        n = int(rng.integers(2, 6))
        gap = one_shot_converse_gap(np.full(k, 1.0 / k), rng.dirichlet(np.ones(n), size=k), _rand_dist(rng, n), s)
        if not gap.gap >= -1e-12:
            return False
    return True


def check_entropy_examples() -> bool:
    ok = abs(entropy([0.5, 0.5]) - math.log(2)) < 1e-15 and entropy([1.0, 0.0]) == 0.0
    ok &= abs(joint_entropy(np.full((2, 2), 0.25)) - math.log(4)) < 1e-15
    return bool(ok)


# --- coupling ---------------------------------------------------------------


def check_sinkhorn_vs_oracle(n_instances: int = 50, seed: int = 21, tol: float = 1e-7) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_instances):
        pi = rng.dirichlet(np.ones(4)).reshape(2, 2)
        px, py = _rand_dist(rng, 2), _rand_dist(rng, 2)
        for s in (0.25, 0.5, 1.0, 2.0):
            a = mixed_cross_entropy_max(px, py, pi, s)
            b = oracle_2x2_max(px, py, pi, s)
            if abs(a.value - b.value) > tol:
                return False
    return True


def check_lp_vs_vertices(n_instances: int = 50, seed: int = 22, tol: float = 1e-9) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_instances):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        a, b = _rand_dist(rng, n), _rand_dist(rng, m)
        cost = rng.normal(size=(n, m))
        sol = transport_lp_min(CouplingProblem(Dist(a), Dist(b), cost))
        ref, _ = vertex_enumeration_min(a, b, cost)
        if abs(sol.value - ref) > tol:
            return False
    return True


def check_entropy_bound(n_instances: int = 30, seed: int = 23) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_instances):
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        pi = rng.dirichlet(np.ones(n * m)).reshape(n, m)
        px, py = _rand_dist(rng, n), _rand_dist(rng, m)
        sol = mixed_cross_entropy_max(px, py, pi, float(rng.choice([0.5, 1.0, 3.0])))
        if joint_entropy(sol.coupling) > entropy(px) + entropy(py) + 1e-10:
            return False
        if sol.marginal_error > 1e-10:
            return False
    return True


# --- bounds -----------------------------------------------------------------


def check_lb_below_ub(n_instances: int = 20, seed: int = 31) -> bool:
    rng = np.random.default_rng(seed)
    pi = dsbs.joint(dsbs.from_crossover(0.2)).probs
    for _ in range(n_instances):
        dec = random_decomposition(rng, n_w=int(rng.integers(1, 4)))
        for s in (0.5, 1.0, math.inf):
            if gamma_lb_objective(dec, pi, s) > gamma_ub_objective(dec, pi, s) + 1e-9:
                return False
    return True


def check_ub_monotone_in_s(n_instances: int = 20, seed: int = 32) -> bool:
    rng = np.random.default_rng(seed)
    pi = dsbs.joint(dsbs.from_crossover(0.2)).probs
    for _ in range(n_instances):
        dec = random_decomposition(rng)
        vals = [gamma_ub_objective(dec, pi, s) for s in (0.25, 0.5, 1.0, 2.0, 4.0)]
        if any(b < a - 1e-8 for a, b in zip(vals, vals[1:])):
            return False
    return True


def check_limits() -> bool:
    params = dsbs.from_crossover(0.2)
    dec = dsbs.optimal_decomposition(params)
    pi = dsbs.joint(params)
    small = abs(gamma_ub_objective(dec, pi, 1e-3) - wyner_objective(dec)) <= 5e-3
    large = abs(gamma_ub_objective(dec, pi, 100.0) - gamma_ub_objective(dec, pi, math.inf)) <= 2e-2
    return bool(small and large)


def check_condition_star_examples() -> bool:
    params = dsbs.from_crossover(0.2)
    if check_condition_star(dsbs.optimal_decomposition(params), dsbs.joint(params), 1e-9):
        return False
    block = np.zeros((4, 4))
    block[:2, :2] = 0.5 * np.outer([0.3, 0.7], [0.6, 0.4])
    block[2:, 2:] = 0.5 * np.outer([0.2, 0.8], [0.5, 0.5])
    dec = Decomposition(
        Dist([0.5, 0.5]),
        [[0.3, 0.7, 0, 0], [0, 0, 0.2, 0.8]],
        [[0.6, 0.4, 0, 0], [0, 0, 0.5, 0.5]],
    )
    if np.abs(induced_joint(dec).probs - block).max() > 1e-12:
        return False
    return check_condition_star(dec, block, 1e-9)


def check_wyner_nonnegative(n_instances: int = 50, seed: int = 33) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_instances):
        dec = random_decomposition(rng, (3, 2), int(rng.integers(1, 5)))
        if wyner_objective(dec) < -1e-12:
            return False
    return True


# --- dsbs -------------------------------------------------------------------


def check_route_equivalence(tol: float = 1e-6) -> bool:
    for a in np.linspace(0.02, 0.48, 20):
        params = dsbs.from_a(float(a))
        dec = dsbs.optimal_decomposition(params)
        pi = dsbs.joint(params)
        for s in (0.25, 0.5, 1.0):
            if abs(dsbs.ub_value(params, s) - gamma_ub_objective(dec, pi, s)) > tol:
                return False
    return True


def check_p_star(tol: float = 1e-8) -> bool:
    for a in np.linspace(0.02, 0.48, 20):
        params = dsbs.from_a(float(a))
        pi = dsbs.joint(params)
        marg = [params.a, 1 - params.a]
        for s in (0.25, 0.5, 1.0):
            p = dsbs.p_star(params, s)
            if not 0 < p < params.a:
                return False
            if abs(oracle_2x2_max(marg, marg, pi, s).param - p) > tol:
                return False
    return True


def check_strict_gap() -> bool:
    for a in np.linspace(0.02, 0.48, 20):
        params = dsbs.from_a(float(a))
        wy = dsbs.wyner_value(params)
        if not dsbs.t_infinity_value(params) - wy > 0:
            return False
        if any(not dsbs.ub_value(params, s) - wy > 0 for s in (0.25, 0.5, 1.0)):
            return False
    return True


def check_wyner_routes(tol: float = 1e-10) -> bool:
    for a in np.linspace(0.02, 0.48, 20):
        params = dsbs.from_a(float(a))
        if abs(dsbs.wyner_value(params) - wyner_objective(dsbs.optimal_decomposition(params))) > tol:
            return False
    return True


SUITES: dict[str, list[tuple[str, Check]]] = {
    "core": [
        ("variational_identity", check_variational_identity),
        ("order_monotone", check_order_monotone),
        ("one_shot_converse", check_one_shot_converse),
        ("entropy_examples", check_entropy_examples),
    ],
    "coupling": [
        ("sinkhorn_vs_oracle", check_sinkhorn_vs_oracle),
        ("lp_vs_vertices", check_lp_vs_vertices),
        ("entropy_bound", check_entropy_bound),
    ],
    "bounds": [
        ("lb_below_ub", check_lb_below_ub),
        ("ub_monotone_in_s", check_ub_monotone_in_s),
        ("limits", check_limits),
        ("condition_star_examples", check_condition_star_examples),
        ("wyner_nonnegative", check_wyner_nonnegative),
    ],
    "dsbs": [
        ("route_equivalence", check_route_equivalence),
        ("p_star", check_p_star),
        ("strict_gap", check_strict_gap),
        ("wyner_routes", check_wyner_routes),
    ],
}


def run_suite(name: str) -> tuple[bool, list[tuple[str, bool]]]:
    outcomes = []
    for label, check in SUITES[name]:
        try:
            ok = bool(check())
        except Exception:  # noqa: BLE001 - a crashing check is a failing check
            ok = False
        outcomes.append((label, ok))
    return all(ok for _, ok in outcomes), outcomes
