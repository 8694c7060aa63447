import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demqubo.qubo import QuboInstance, WeightedGraph, brute_force, from_maxcut, gen_random_gaussian, objective
from demqubo.rounding import (TRIAL_BLOCK, check_factor, expected_value, gw_round,
                              hyperplane_partitions_rank2, normalize_rows, random_factor,
                              sample_signs, sign)


def test_sign_zero_is_plus():
    assert sign(np.array([-0.5, 0.0, 2.0])).tolist() == [-1, 1, 1]


def test_check_factor():
    F = normalize_rows(np.random.default_rng(0).standard_normal((5, 3)))
    check_factor(F, 5)
    with pytest.raises(ValueError):
        check_factor(F, 4)
    with pytest.raises(ValueError):
        check_factor(F * 1.01)
    with pytest.raises(ValueError):
        check_factor(normalize_rows(np.ones((2, 3))))
    with pytest.raises(ValueError):
        normalize_rows(np.zeros((2, 2)))


def test_identical_rows_give_coherent_signs():
    inst = gen_random_gaussian(6, 1)
    F = np.tile([0.6, 0.8], (6, 1))
    res = gw_round(inst, F, 200, 0)
    assert np.all(np.abs(res.trial_values - inst.Q.sum()) < 1e-9)
    assert abs(int(res.best_x.sum())) == 6


def test_orthogonal_rows_mean_zero():
    inst = QuboInstance(np.array([[0.0, 1.0], [1.0, 0.0]]))
    res = gw_round(inst, np.eye(2), 20000, 3)
    se = res.std / np.sqrt(res.trials)
    assert abs(res.mean) <= 3 * se
    assert expected_value(inst, np.eye(2)) == 0.0


def test_rounding_determinism_and_consistency():
    inst = gen_random_gaussian(10, 2)
    F = random_factor(10, 3, np.random.default_rng(1))
    a, b = gw_round(inst, F, 3000, 7), gw_round(inst, F, 3000, 7)
    assert np.array_equal(a.trial_values, b.trial_values)
    assert np.array_equal(a.best_x, b.best_x) and a.best_value == b.best_value
    assert a.best_value == objective(inst, a.best_x) == a.trial_values.min()
    assert a.best_value >= brute_force(inst)[1]


def test_block_substreams_partition_invariant():
    F = random_factor(7, 3, np.random.default_rng(4))
    full = sample_signs(F, 3 * TRIAL_BLOCK + 17, 5)
    parts = [sample_signs(F, m, 5, s) for s, m in [(0, 1000), (1000, 1500), (2500, 3 * TRIAL_BLOCK + 17 - 2500)]]
    assert np.array_equal(full, np.vstack(parts))


def test_tie_break_is_lexicographic():
    # Q = 0: every pattern ties; the smallest sign vector seen must win
    inst = QuboInstance(np.zeros((4, 4)))
    F = random_factor(4, 2, np.random.default_rng(0))
    res = gw_round(inst, F, 500, 1)
    seen = {tuple(r) for r in sample_signs(F, 500, 1)}
    assert tuple(res.best_x) == min(seen)


def test_trials_one_std_zero():
    inst = gen_random_gaussian(4, 0)
    res = gw_round(inst, random_factor(4, 2, np.random.default_rng(0)), 1, 0)
    assert res.std == 0.0 and res.trials == 1


def test_expected_value_identity_factor_is_trace():
    inst = gen_random_gaussian(5, 3)
    assert expected_value(inst, np.eye(5)) == pytest.approx(np.trace(inst.Q), abs=1e-12)


def test_expected_value_rank_one_equals_objective():
    inst = gen_random_gaussian(7, 5)
    x = np.array([1, -1, 1, 1, -1, -1, 1])
    assert expected_value(inst, x[:, None].astype(float)) == pytest.approx(objective(inst, x), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(1, 4), st.integers(0, 2**31))
def test_expected_value_rotation_invariant(n, k, seed):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    U = np.triu(rng.standard_normal((n, n)))
    inst = QuboInstance(U + np.triu(U, 1).T)
    F = random_factor(n, k, rng)
    R, _ = np.linalg.qr(rng.standard_normal((k, k)))
    assert expected_value(inst, normalize_rows(F @ R)) == pytest.approx(expected_value(inst, F), abs=1e-10)


def test_expected_value_monte_carlo_n10():
    inst = gen_random_gaussian(10, 12)
    F = random_factor(10, 3, np.random.default_rng(12))
    res = gw_round(inst, F, 200_000, 0)
    se = res.std / np.sqrt(res.trials)
    assert abs(res.mean - expected_value(inst, F)) <= 3 * se


def _circle(angles):
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _line_cut_patterns(F, samples=20000):
    """All sign patterns produced by a dense sweep of line directions (oracle)."""
    alphas = np.linspace(0, np.pi, samples, endpoint=False) + 1e-7
    normals = np.column_stack([np.cos(alphas), np.sin(alphas)])
    return {tuple(r) for r in sign(normals @ F.T)}


def test_rank2_triangle():
    g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))
    inst = from_maxcut(g)
    F = _circle(np.deg2rad([0.0, 120.0, 240.0]))
    x, v = hyperplane_partitions_rank2(F, inst)
    oracle = min(objective(inst, np.array(p)) for p in _line_cut_patterns(F))
    assert v == pytest.approx(oracle, abs=1e-12)
    assert v == brute_force(inst)[1]


def test_rank2_identical_points():
    inst = gen_random_gaussian(5, 0)
    F = np.tile([1.0, 0.0], (5, 1))
    x, v = hyperplane_partitions_rank2(F, inst)
    assert abs(int(x.sum())) == 5 and v == pytest.approx(inst.Q.sum(), abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_rank2_dominates_random_rounding(seed):
    inst = gen_random_gaussian(12, 100 + seed)
    F = random_factor(12, 2, np.random.default_rng(seed))
    x, v = hyperplane_partitions_rank2(F, inst)
    assert v == objective(inst, x)
    assert v <= gw_round(inst, F, 10000, seed).best_value + 1e-12
    assert v == pytest.approx(min(objective(inst, np.array(p)) for p in _line_cut_patterns(F, 4000)), abs=1e-9)


def test_rank2_requires_two_columns():
    with pytest.raises(ValueError):
        hyperplane_partitions_rank2(random_factor(4, 3, np.random.default_rng(0)), gen_random_gaussian(4, 0))
