import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_vertices, enumerate_min
from demqubo.qubo import (AsymmetryError, Convention, IndexOutOfRangeError, MalformedEntryError,
                          MalformedHeaderError, QuboInstance, WeightedGraph, brute_force,
                          from_homogenized, from_maxcut, from_subset_sum, gen_random_gaussian,
                          objective, parse_instance, read_instance, read_maxcut_edges,
                          spectral_radius, to_plus_minus_one, to_zero_one, write_instance)

PM, ZO = Convention.PLUS_MINUS_ONE, Convention.ZERO_ONE


def sym(rng, n):
    U = np.triu(rng.standard_normal((n, n)))
    return U + np.triu(U, 1).T


def test_objective_two_by_two():
    inst = QuboInstance(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert objective(inst, [1, 1]) == 2.0
    assert objective(inst, [1, -1]) == -2.0


def test_objective_rejects_bad_vectors():
    inst = QuboInstance(np.eye(3))
    with pytest.raises(ValueError):
        objective(inst, [1, 0, 1])
    with pytest.raises(ValueError):
        objective(inst, [1, 1])
    zo = QuboInstance(np.eye(3), ZO)
    with pytest.raises(ValueError):
        objective(zo, [1, -1, 1])


def test_instance_validation():
    with pytest.raises(ValueError):
        QuboInstance(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        QuboInstance(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        QuboInstance(np.zeros((2, 2)), PM, linear=np.ones(2))
    inst = QuboInstance(np.eye(2))
    with pytest.raises(ValueError):
        inst.Q[0, 0] = 5.0


def test_brute_force_matches_enumeration_n8():
    inst = QuboInstance(sym(np.random.default_rng(3), 8))
    oracle, _ = enumerate_min(inst)
    x, v = brute_force(inst)
    assert v == pytest.approx(oracle, abs=1e-12)
    assert v == objective(inst, x)
    vals = [objective(inst, z) for z in all_vertices(8).astype(int)]
    assert min(vals) == pytest.approx(v, abs=1e-12)


def test_brute_force_size_limit():
    with pytest.raises(ValueError):
        brute_force(gen_random_gaussian(30, 0))


def test_to_pm1_zero_case():
    out = to_plus_minus_one(QuboInstance(np.zeros((1, 1)), ZO, linear=np.zeros(1)))
    assert out.n == 2 and not out.Q.any()
    assert out.metadata["homogenized"] == "true" and out.metadata["fixed_slot"] == "0"


def test_to_pm1_single_linear():
    src = QuboInstance(np.zeros((1, 1)), ZO, linear=np.array([1.0]))
    out = to_plus_minus_one(src)
    assert objective(out, [1, -1]) == 0.0
    assert objective(out, [1, 1]) == 1.0


def test_to_pm1_all_vertices_n6():
    rng = np.random.default_rng(11)
    src = QuboInstance(sym(rng, 6), ZO, linear=rng.standard_normal(6))
    out = to_plus_minus_one(src)
    for x in all_vertices(6, (0, 1)).astype(int):
        z = np.concatenate([[1], 2 * x - 1])
        assert objective(out, z) == pytest.approx(objective(src, x), abs=1e-12)
        # the negated vertex maps back to the same 0/1 point
        assert np.array_equal(from_homogenized(-z), x)
        assert objective(out, -z) == pytest.approx(objective(src, x), abs=1e-12)


def test_to_zero_one_two_by_two():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = to_zero_one(QuboInstance(A))
    assert float(out.metadata["objective_offset"]) == 2.0
    for y in all_vertices(2).astype(int):
        x = (y + 1) // 2
        assert objective(out, x) + out.offset == objective(QuboInstance(A), y)
    assert objective(out, [1, 0]) == -4.0


def test_to_zero_one_zero_matrix():
    out = to_zero_one(QuboInstance(np.zeros((3, 3))))
    assert not out.Q.any() and out.offset == 0.0


def test_round_trip_landscape_n5():
    rng = np.random.default_rng(5)
    src = QuboInstance(sym(rng, 5))
    zo = to_zero_one(src)
    back = to_plus_minus_one(zo)
    for y in all_vertices(5).astype(int):
        z = np.concatenate([[1], y])
        assert objective(back, z) + back.offset == pytest.approx(objective(src, y), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_conversions_preserve_objective(n, seed):
    rng = np.random.default_rng(seed)
    src = QuboInstance(np.round(sym(rng, n) * 8) / 8)
    zo = to_zero_one(src)
    for y in all_vertices(n).astype(int):
        assert objective(zo, (y + 1) // 2) + zo.offset == objective(src, y)


def test_maxcut_triangle():
    g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))
    inst = from_maxcut(g)
    vals = [g.cut_weight(x) for x in all_vertices(3)]
    assert max(vals) == 2.0
    for x in all_vertices(3).astype(int):
        assert g.cut_weight(x) == inst.offset - objective(inst, x)
        assert inst.original_value(objective(inst, x)) == g.cut_weight(x)
    _, v = brute_force(inst)
    assert inst.original_value(v) == 2.0


def test_maxcut_edge_and_cycle():
    g1 = WeightedGraph(2, ((0, 1, 1.0),))
    assert g1.cut_weight([1, -1]) == 1.0
    g4 = WeightedGraph(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)))
    inst = from_maxcut(g4)
    best = max(g4.cut_weight(x) for x in all_vertices(4))
    assert best == 4.0 == g4.cut_weight([1, -1, 1, -1])
    assert inst.original_value(brute_force(inst)[1]) == 4.0


def test_weighted_graph_validation():
    with pytest.raises(ValueError):
        WeightedGraph(3, ((0, 0, 1.0),))
    with pytest.raises(ValueError):
        WeightedGraph(3, ((0, 3, 1.0),))
    with pytest.raises(ValueError):
        WeightedGraph(3, ((0, 1, 1.0), (1, 0, 2.0)))


def test_subset_sum_examples():
    assert objective(from_subset_sum([1, 1]), [1, -1]) == 0.0
    assert objective(from_subset_sum([1, 2, 3]), [1, 1, -1]) == 0.0
    inst = from_subset_sum([1, 1, 1])
    assert min(objective(inst, x) for x in all_vertices(3).astype(int)) == 1.0
    with pytest.raises(ValueError):
        from_subset_sum([1, 0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=6))
def test_subset_sum_is_square(w):
    inst = from_subset_sum(w)
    for x in all_vertices(len(w)).astype(int):
        assert objective(inst, x) == float(np.dot(w, x)) ** 2


def test_generator():
    a, b = gen_random_gaussian(3, 9), gen_random_gaussian(3, 9)
    assert np.array_equal(a.Q, b.Q)
    assert gen_random_gaussian(1, 0).Q.shape == (1, 1)
    big = gen_random_gaussian(200, 4)
    assert np.array_equal(big.Q, big.Q.T)
    off = big.Q[np.triu_indices(200, 1)]
    assert abs(off.mean()) <= 4 / np.sqrt(len(off))


def test_file_round_trip(tmp_path):
    g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)))
    inst = from_maxcut(g, name="triangle")
    p = tmp_path / "t.qubo"
    write_instance(inst, p)
    back = read_instance(p)
    assert back == inst
    assert back.name == "triangle" and back.offset == inst.offset
    rng = np.random.default_rng(2)
    zo = QuboInstance(sym(rng, 7), ZO, linear=rng.standard_normal(7), name="z")
    write_instance(zo, p)
    assert read_instance(p) == zo


def test_parse_errors(tmp_path):
    with pytest.raises(MalformedHeaderError):
        parse_instance("")
    with pytest.raises(MalformedHeaderError):
        parse_instance("qubo bogus 2 0\n")
    with pytest.raises(IndexOutOfRangeError):
        parse_instance("qubo plus_minus_one 2 1\n0 2 1.0\n")
    with pytest.raises(MalformedEntryError):
        parse_instance("qubo plus_minus_one 2 1\n0 x 1.0\n")
    with pytest.raises(AsymmetryError):
        parse_instance("qubo plus_minus_one 2 2\n0 1 1.0\n1 0 2.0\n")
    with pytest.raises(MalformedHeaderError):
        parse_instance("qubo plus_minus_one 2 3\n0 1 1.0\n")
    empty = tmp_path / "empty.qubo"
    empty.write_text("")
    with pytest.raises(MalformedHeaderError):
        read_instance(empty)


def test_maxcut_edge_file(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("3 3\n1 2\n2 3 2.5\n1 3\n")
    g = read_maxcut_edges(p)
    assert g.n == 3
    assert g.weight_matrix()[1, 2] == 2.5
    p.write_text("2 1\n0 5\n")
    with pytest.raises(IndexOutOfRangeError):
        read_maxcut_edges(p)


def test_spectral_radius_matches_eigensolver():
    Q = gen_random_gaussian(50, 8).Q
    assert spectral_radius(Q) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(Q))), rel=1e-6)
    # symmetric spectrum would stall plain power iteration
    S = np.diag([3.0, -3.0, 1.0])
    assert spectral_radius(S) == pytest.approx(3.0, rel=1e-9)
    assert spectral_radius(np.zeros((4, 4))) == 0.0
