import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyi_ci.prob_core import (
    Channel,
    Dist,
    JointDist,
    conditional_entropy,
    entropy,
    joint_entropy,
    one_shot_converse_gap,
    renyi_divergence,
    variational_objective,
    variational_renyi,
)

A_DSBS = (1 - math.sqrt(0.6)) / 2


def dists(n_min=2, n_max=8, floor=0.0):
    def build(raw):
        arr = np.asarray(raw) + floor
        return arr / arr.sum()

    return st.lists(st.floats(0.01, 1.0), min_size=n_min, max_size=n_max).map(build)


# --- types ---


def test_dist_renormalizes_small_mass_error():
    d = Dist([0.5, 0.5 + 1e-10])
    assert abs(d.probs.sum() - 1) < 1e-15


@pytest.mark.parametrize("bad", [[0.5, 0.4], [1.2, -0.2], [[0.5, 0.5]], [], [np.nan, 1.0]])
def test_dist_rejects_invalid(bad):
    with pytest.raises(ValueError):
        Dist(bad)


def test_negative_entry_names_index():
    with pytest.raises(ValueError, match=r"\(1, 0\)"):
        JointDist([[0.5, 0.5], [-0.1, 0.1]])


def test_channel_rows_validated():
    with pytest.raises(ValueError, match="row 1"):
        Channel([[0.5, 0.5], [0.2, 0.2]])
    ch = Channel(np.full((3, 2, 2), 0.25))
    assert ch.rows.shape == (3, 2, 2)


def test_values_are_read_only():
    d = Dist([0.25, 0.75])
    with pytest.raises(ValueError):
        d.probs[0] = 1.0


# --- entropies ---


def test_entropy_examples():
    assert entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    assert entropy([1.0, 0.0]) == 0.0
    # direct summation: -2 (0.4 ln 0.4 + 0.1 ln 0.1)
    assert entropy([0.4, 0.1, 0.1, 0.4]) == pytest.approx(1.19354960409813318895, abs=1e-14)


def test_joint_entropy_examples():
    assert joint_entropy(np.full((2, 2), 0.25)) == pytest.approx(math.log(4), abs=1e-15)
    p, r = np.array([0.2, 0.3, 0.5]), np.array([0.9, 0.1])
    assert joint_entropy(np.outer(p, r)) == pytest.approx(entropy(p) + entropy(r), abs=1e-14)
    assert joint_entropy([[0.4, 0.1], [0.1, 0.4]]) == pytest.approx(1.19354960409813318895, abs=1e-14)


def test_conditional_entropy_examples():
    r = [0.2, 0.8]
    assert conditional_entropy([r], [1.0]) == pytest.approx(entropy(r))
    assert conditional_entropy([r, r, r], [0.2, 0.3, 0.5]) == pytest.approx(entropy(r))
    rows = [[A_DSBS, 1 - A_DSBS], [1 - A_DSBS, A_DSBS]]
    assert conditional_entropy(rows, [0.5, 0.5]) == pytest.approx(0.35212680611906761197, abs=1e-14)
    with pytest.raises(ValueError):
        conditional_entropy(rows, [1.0])


@given(dists())
def test_entropy_range(p):
    h = entropy(p)
    assert -1e-15 <= h <= math.log(len(p)) + 1e-12


# --- Renyi divergence ---


@pytest.mark.parametrize("s", [-0.5, 0.0, 0.3, 1.0, 7.0, math.inf])
def test_renyi_identical_is_zero(s):
    p = [0.1, 0.2, 0.7]
    assert renyi_divergence(p, p, s) == pytest.approx(0.0, abs=1e-14)


def test_renyi_examples():
    assert renyi_divergence([0.5, 0.5], [0.25, 0.75], 1.0) == pytest.approx(math.log(4 / 3), abs=1e-15)
    assert renyi_divergence([0.5, 0.5], [1.0, 0.0], 1.0) == math.inf
    assert renyi_divergence([0.5, 0.5], [1.0, 0.0], 0.0) == math.inf
    assert renyi_divergence([0.5, 0.5], [1.0, 0.0], math.inf) == math.inf
    # order < 1 stays finite under support mismatch
    assert math.isfinite(renyi_divergence([0.5, 0.5], [1.0, 0.0], -0.5))


def test_renyi_special_orders_are_exact_formulas():
    p, q = np.array([0.2, 0.5, 0.3]), np.array([0.4, 0.4, 0.2])
    assert renyi_divergence(p, q, 0.0) == pytest.approx(float(np.sum(p * np.log(p / q))), abs=1e-15)
    assert renyi_divergence(p, q, math.inf) == pytest.approx(math.log(1.5), abs=1e-15)


def test_renyi_zero_p_cells_contribute_nothing():
    assert renyi_divergence([1.0, 0.0], [0.5, 0.5], 2.0) == pytest.approx(math.log(2), abs=1e-15)


def test_renyi_rejects_bad_input():
    with pytest.raises(ValueError):
        renyi_divergence([0.5, 0.5], [0.2, 0.3, 0.5], 1.0)
    with pytest.raises(ValueError):
        renyi_divergence([0.5, 0.5], [0.5, 0.5], -1.0)


@settings(max_examples=100)
@given(st.integers(2, 7).flatmap(lambda n: st.tuples(dists(n, n, 1e-3), dists(n, n, 1e-3))))
def test_renyi_monotone_in_order(pq):
    p, q = pq
    vals = [renyi_divergence(p, q, s) for s in (0.1, 0.5, 1.0, 2.0, 5.0, math.inf)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_renyi_small_s_approaches_kl():
    p, q = [0.3, 0.7], [0.6, 0.4]
    assert renyi_divergence(p, q, 1e-7) == pytest.approx(renyi_divergence(p, q, 0.0), abs=1e-6)


# --- variational form ---


def test_variational_examples():
    u = [0.25] * 4
    res = variational_renyi(u, u, 1.0)
    assert res.value == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(res.maximizer.probs, u, atol=1e-15)

    res = variational_renyi([0.5, 0.5], [0.25, 0.75], 1.0)
    assert res.value == pytest.approx(math.log(4 / 3), abs=1e-15)
    # R* ∝ p^2 / q = (1, 1/3)
    np.testing.assert_allclose(res.maximizer.probs, [0.75, 0.25], atol=1e-15)


def test_variational_support_violation():
    res = variational_renyi([0.5, 0.5], [1.0, 0.0], 1.0)
    assert res.value == math.inf and res.maximizer is None


def test_variational_matches_direct_on_random_five_symbols():
    rng = np.random.default_rng(5)
    p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
    assert variational_renyi(p, q, 0.5).value == pytest.approx(renyi_divergence(p, q, 0.5), abs=1e-10)


@settings(max_examples=60)
@given(
    st.integers(2, 8).flatmap(lambda n: st.tuples(dists(n, n), dists(n, n, 1e-3), dists(n, n))),
    st.sampled_from([0.3, 1.0, 2.5]),
)
def test_variational_maximizer_dominates(pqr, s):
    p, q, r = pqr
    res = variational_renyi(p, q, s)
    assert res.value == pytest.approx(renyi_divergence(p, q, s), abs=1e-9)
    assert variational_objective(res.maximizer, p, q, s) == pytest.approx(res.value, abs=1e-9)
    assert variational_objective(r, p, q, s) <= res.value + 1e-9
    assert abs(res.maximizer.probs.sum() - 1) <= 1e-10


# --- one-shot converse ---


def test_converse_single_message():
    gap = one_shot_converse_gap([1.0], [[0.3, 0.7]], [0.5, 0.5], 1.0)
    assert gap.gap == pytest.approx(0.0, abs=1e-15)
    assert gap.marginal_divergence == pytest.approx(gap.joint_divergence, abs=1e-15)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_converse_rows_equal_to_pi(k):
    pi = np.array([0.2, 0.3, 0.5])
    gap = one_shot_converse_gap(np.full(k, 1 / k), np.tile(pi, (k, 1)), pi, 1.0)
    assert gap.gap == pytest.approx(math.log(k), abs=1e-12)


def test_converse_random_instance():
    rng = np.random.default_rng(3)
    gap = one_shot_converse_gap(np.full(4, 0.25), rng.dirichlet(np.ones(3), size=4), rng.dirichlet(np.ones(3)), 1.0)
    assert gap.gap >= -1e-12 and not gap.infinite


def test_converse_flags_infinite_divergences():
    gap = one_shot_converse_gap([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], 1.0)
    assert gap.infinite and gap.gap == math.inf


def test_converse_requires_uniform_messages():
    with pytest.raises(ValueError):
        one_shot_converse_gap([0.3, 0.7], [[1, 0], [0, 1]], [0.5, 0.5], 1.0)


@settings(max_examples=200)
@given(
    st.sampled_from([1, 2, 4, 8]),
    st.sampled_from([0.5, 1.0, math.inf]),
    st.integers(2, 5),
    st.integers(0, 2**32 - 1),
)
def test_converse_inequality(k, s, n, seed):
    rng = np.random.default_rng(seed)
    gap = one_shot_converse_gap(np.full(k, 1 / k), rng.dirichlet(np.ones(n), size=k), rng.dirichlet(np.ones(n)), s)
    assert gap.gap >= -1e-12
