"""Expected rounded objective on the factor manifold and its derivatives.

On the manifold of row-normalized ``F`` the diagonal of ``X = F F^T`` is fixed,
so diagonal terms never contribute to gradients or directional derivatives.
"""

from __future__ import annotations

import numpy as np

from .qubo import QuboInstance
from .rounding import expected_value, normalize_rows

BOUNDARY_TOL = 1e-7
TANGENCY_TOL = 1e-8


def phi(inst: QuboInstance, F) -> float:
    return expected_value(inst, F)


def euclidean_gradient(inst: QuboInstance, F, eps_clip: float = 1e-6) -> np.ndarray:
    """``(4/pi) (Q / sqrt(1 - X^2)) F`` with X clipped to ``[-1+eps, 1-eps]``.

    The constant 4/pi counts both (i, j) and (j, i); it is the true gradient
    of ``phi`` on the interior.
    """
    if not 0 < eps_clip < 0.5:
        raise ValueError("eps_clip must lie in (0, 0.5)")
    F = np.asarray(F, dtype=np.float64)
    X = np.clip(F @ F.T, -1.0 + eps_clip, 1.0 - eps_clip)
    W = inst.Q / np.sqrt(1.0 - X * X)
    np.fill_diagonal(W, 0.0)
    return (4.0 / np.pi) * (W @ F)


def riemannian_project(F, G) -> np.ndarray:
    """Remove from each row of G its component along the matching row of F."""
    F = np.asarray(F, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    s = np.einsum("ij,ij->i", G, F)
    return G - s[:, None] * F


def retract(F, D, t: float = 1.0) -> np.ndarray:
    return normalize_rows(np.asarray(F) + t * np.asarray(D))


def check_tangent(F, D, tol: float = TANGENCY_TOL) -> None:
    dots = np.einsum("ij,ij->i", F, D)
    worst = float(np.max(np.abs(dots))) if len(dots) else 0.0
    if worst > tol * max(1.0, float(np.linalg.norm(D))):
        raise ValueError(f"direction is not tangent: max |<f_i, d_i>| = {worst:.3g}")


def derivative_terms(inst: QuboInstance, F, D, eps_b: float = BOUNDARY_TOL):
    """Per-pair contributions (i < j) to the one-sided directional derivative.

    Returns ``(contrib, magnitude)``; ``magnitude`` is the same sum with every
    factor taken in absolute value, used as a cancellation floor.
    """
    F = np.asarray(F, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    Q = inst.Q
    iu, ju = np.triu_indices(inst.n, 1)
    q = Q[iu, ju]
    keep = q != 0
    iu, ju, q = iu[keep], ju[keep], q[keep]
    X = np.clip(np.einsum("pk,pk->p", F[iu], F[ju]), -1.0, 1.0)
    inner = np.abs(X) < 1.0 - eps_b
    two_alpha = 2.0 * (2.0 / np.pi) * q

    contrib = np.zeros_like(q)
    mag = np.zeros_like(q)
    ii, jj = iu[inner], ju[inner]
    cross = np.einsum("pk,pk->p", F[ii], D[jj]), np.einsum("pk,pk->p", F[jj], D[ii])
    denom = np.sqrt(1.0 - X[inner] ** 2)
    contrib[inner] = two_alpha[inner] * (cross[0] + cross[1]) / denom
    mag[inner] = np.abs(two_alpha[inner]) * (np.abs(cross[0]) + np.abs(cross[1])) / denom

    bd = ~inner
    sigma = np.sign(X[bd])
    nrm = np.linalg.norm(D[iu[bd]] - sigma[:, None] * D[ju[bd]], axis=1)
    contrib[bd] = -sigma * two_alpha[bd] * nrm
    mag[bd] = np.abs(two_alpha[bd]) * nrm
    return contrib, mag


def directional_derivative(inst: QuboInstance, F, D, eps_b: float = BOUNDARY_TOL) -> float:
    """One-sided derivative of ``phi(retract(F + t D))`` at ``t = 0+``.

    Interior pairs are linear in D; a pair with ``X_ij = sigma = +-1``
    contributes ``-(2/pi) sigma ||d_i - sigma d_j||`` times ``2 Q_ij``.
    """
    F = np.asarray(F, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if D.shape != F.shape:
        raise ValueError("direction and factor shapes differ")
    check_tangent(F, D)
    contrib, _ = derivative_terms(inst, F, D, eps_b)
    return float(contrib.sum())
