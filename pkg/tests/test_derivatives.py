import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demqubo.derivatives import (check_tangent, derivative_terms, directional_derivative,
                                 euclidean_gradient, phi, retract, riemannian_project)
from demqubo.qubo import QuboInstance, gen_random_gaussian
from demqubo.rounding import normalize_rows, random_factor


def interior_factor(n, k, rng, bound=0.9):
    while True:
        F = random_factor(n, k, rng)
        X = F @ F.T
        if np.max(np.abs(X - np.eye(n))) <= bound:
            return F


def tangent(F, rng):
    D = riemannian_project(F, rng.standard_normal(F.shape))
    return D / np.linalg.norm(D)


def central_fd(inst, F, D, h=1e-5):
    return (phi(inst, retract(F, D, h)) - phi(inst, retract(F, D, -h))) / (2 * h)


def one_sided_fd(inst, F, D, t=1e-7):
    return (phi(inst, retract(F, D, t)) - phi(inst, F)) / t


def test_zero_q_gives_zero_gradient():
    F = random_factor(5, 3, np.random.default_rng(0))
    assert not euclidean_gradient(QuboInstance(np.zeros((5, 5))), F).any()


def test_gradient_closed_form_2x2():
    inst = QuboInstance(np.array([[0.0, 1.0], [1.0, 0.0]]))
    F = np.eye(2)
    G = euclidean_gradient(inst, F)
    # X_12 = 0 so the weight is 1 and G = (4/pi) Q F
    assert np.allclose(G, 4 / np.pi * np.array([[0.0, 1.0], [1.0, 0.0]]), atol=1e-15)


def test_gradient_clip_validation():
    with pytest.raises(ValueError):
        euclidean_gradient(gen_random_gaussian(3, 0), np.eye(3), eps_clip=0.6)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_fd_n8(seed):
    rng = np.random.default_rng(seed)
    inst = gen_random_gaussian(8, seed)
    F = interior_factor(8, 3, rng)
    D = tangent(F, rng)
    exact = float(np.sum(euclidean_gradient(inst, F) * D))
    assert exact == pytest.approx(central_fd(inst, F, D), rel=1e-5)


def test_projection_examples():
    rng = np.random.default_rng(1)
    F = random_factor(6, 3, rng)
    assert np.allclose(riemannian_project(F, F), 0.0, atol=1e-15)
    G = riemannian_project(F, rng.standard_normal((6, 3)))
    assert np.allclose(riemannian_project(F, G), G, atol=1e-15)
    assert np.max(np.abs(np.einsum("ij,ij->i", G, F))) <= 1e-12


def test_tangency_enforced():
    F = np.eye(3)
    with pytest.raises(ValueError):
        directional_derivative(gen_random_gaussian(3, 0), F, F)
    with pytest.raises(ValueError):
        check_tangent(F, np.eye(3))


def test_zero_direction():
    F = random_factor(4, 2, np.random.default_rng(0))
    assert directional_derivative(gen_random_gaussian(4, 0), F, np.zeros((4, 2))) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_interior_derivative_one_sided_fd(seed):
    rng = np.random.default_rng(10 + seed)
    inst = gen_random_gaussian(7, seed)
    F = interior_factor(7, 3, rng)
    D = tangent(F, rng)
    assert directional_derivative(inst, F, D) == pytest.approx(one_sided_fd(inst, F, D, 1e-5), rel=1e-4)


def test_boundary_hand_example():
    inst = QuboInstance(np.array([[0.0, 1.0], [1.0, 0.0]]))
    F = np.array([[1.0, 0.0], [1.0, 0.0]])
    D = np.array([[0.0, 1.0], [0.0, -1.0]])
    dd = directional_derivative(inst, F, D)
    assert dd == pytest.approx(-8 / np.pi, abs=1e-12)
    assert dd == pytest.approx(one_sided_fd(inst, F, D, 1e-7), rel=1e-6)


def boundary_case(rng, n=6, k=3):
    """Factor where rows 1 and 2 copy row 0 up to sign, so some pairs sit at X = +-1."""
    F = random_factor(n, k, rng)
    F[1] = F[0]
    F[2] = -F[0]
    return F


@pytest.mark.parametrize("seed", range(6))
def test_boundary_derivative_matches_fd(seed):
    rng = np.random.default_rng(seed)
    inst = gen_random_gaussian(6, 40 + seed)
    F = boundary_case(rng)
    D = tangent(F, rng)
    _, mag = derivative_terms(inst, F, D)
    dd = directional_derivative(inst, F, D)
    assert dd == pytest.approx(one_sided_fd(inst, F, D, 1e-7), rel=1e-4, abs=1e-6 * mag.sum())


def test_boundary_only_symmetry_and_interior_antisymmetry():
    rng = np.random.default_rng(3)
    # all rows on one line: every pair is at the boundary
    v = normalize_rows(rng.standard_normal((1, 3)))[0]
    F = np.array([v, -v, v, -v])
    inst = gen_random_gaussian(4, 2)
    D = tangent(F, rng)
    assert directional_derivative(inst, F, D) == pytest.approx(directional_derivative(inst, F, -D), abs=1e-12)
    Fi = interior_factor(5, 3, rng)
    Di = tangent(Fi, rng)
    inst5 = gen_random_gaussian(5, 2)
    assert directional_derivative(inst5, Fi, Di) == pytest.approx(-directional_derivative(inst5, Fi, -Di), abs=1e-12)


def angle_space_derivative(Q, phis, deltas):
    """k = 2 oracle: phi is (2/pi) sum_ij Q_ij (pi/2 - |theta_ij|) with wrapped angle
    differences, which is piecewise affine in the angles."""
    n = len(phis)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            theta = np.angle(np.exp(1j * (phis[i] - phis[j])))
            tau = deltas[i] - deltas[j]
            if abs(theta) < 1e-12:
                slope = abs(tau)
            elif abs(abs(theta) - np.pi) < 1e-12:
                # |theta| = pi: moving either way decreases |theta|
                slope = -abs(tau)
            else:
                slope = np.sign(theta) * tau
            total += Q[i, j] * (2 / np.pi) * (-slope)
    return total


@pytest.mark.parametrize("seed", range(6))
def test_rank2_angle_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 6
    phis = rng.uniform(0, 2 * np.pi, n)
    phis[1] = phis[0]
    phis[2] = phis[0] + np.pi
    F = np.column_stack([np.cos(phis), np.sin(phis)])
    deltas = rng.standard_normal(n)
    D = deltas[:, None] * np.column_stack([-np.sin(phis), np.cos(phis)])
    inst = gen_random_gaussian(n, seed)
    assert directional_derivative(inst, F, D) == pytest.approx(
        angle_space_derivative(inst.Q, phis, deltas), rel=1e-9, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**31))
def test_projection_rows_orthogonal(n, k, seed):
    rng = np.random.default_rng(seed)
    F = random_factor(n, k, rng)
    G = riemannian_project(F, rng.standard_normal((n, k)) * 100)
    assert np.max(np.abs(np.einsum("ij,ij->i", G, F))) <= 1e-12 * max(1.0, np.abs(G).max())
