"""Descent-direction subproblem for exact DEM.

For a factor F the one-sided directional derivative of the expected objective
splits into a linear part (interior pairs), convex norms (boundary pairs with
``X_ij = -sgn Q_ij``) and concave norms (``X_ij = sgn Q_ij``). The concave
norms are replaced by their linearization at the previous direction, and

    min_D  <C, D> + sum_p w_p ||d_i - sigma_p d_j||
    s.t.   <f_i, d_i> = 0 for all i,  ||D||_F <= 1

is solved by ADMM. Objective values are in directional-derivative units, so
at interior-only problems they coincide with ``directional_derivative``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve

from .derivatives import BOUNDARY_TOL, derivative_terms
from .qubo import QuboInstance


class SubproblemError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class DirectionProblem:
    """Assembled cone program. ``alpha = (2/pi) Q_ij`` for every listed pair."""

    n: int
    k: int
    F: np.ndarray
    interior: np.ndarray          # (m, 3): i, j, alpha / sqrt(1 - X_ij^2)
    cones: np.ndarray             # (m, 4): i, j, alpha, sigma
    linearized: np.ndarray        # (m, 4): i, j, alpha, sigma
    subgradients: np.ndarray      # (m, k): s_ij for the linearized rows
    C: np.ndarray = field(repr=False)
    noise_floor: float = 0.0
    eps_b: float = BOUNDARY_TOL

    @property
    def cone_weights(self) -> np.ndarray:
        # -2 sigma alpha = 2 |alpha| on convex boundary pairs
        return -2.0 * self.cones[:, 3] * self.cones[:, 2]

    def cone_apply(self, D: np.ndarray) -> np.ndarray:
        i = self.cones[:, 0].astype(int)
        j = self.cones[:, 1].astype(int)
        return D[i] - self.cones[:, 3][:, None] * D[j]

    def objective(self, D) -> float:
        D = np.asarray(D, dtype=np.float64)
        val = float(np.sum(self.C * D))
        if len(self.cones):
            val += float(self.cone_weights @ np.linalg.norm(self.cone_apply(D), axis=1))
        return val

    def pairs(self) -> list[tuple[int, int]]:
        out = []
        for arr in (self.interior, self.cones, self.linearized):
            out.extend((int(a), int(b)) for a, b in arr[:, :2])
        return out

    def dump(self, path) -> None:
        """Plain-text debug dump: one section per term list, one pair per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"direction_problem n={self.n} k={self.k} eps_b={self.eps_b:.3g}\n")
            fh.write(f"[interior] {len(self.interior)}  (i j coef)\n")
            for i, j, c in self.interior:
                fh.write(f"{int(i)} {int(j)} {c:.17g}\n")
            fh.write(f"[cones] {len(self.cones)}  (i j alpha sigma)\n")
            for i, j, a, s in self.cones:
                fh.write(f"{int(i)} {int(j)} {a:.17g} {int(s)}\n")
            fh.write(f"[linearized] {len(self.linearized)}  (i j alpha sigma s...)\n")
            for (i, j, a, s), sub in zip(self.linearized, self.subgradients):
                fh.write(f"{int(i)} {int(j)} {a:.17g} {int(s)} " + " ".join(f"{v:.17g}" for v in sub) + "\n")


@dataclass
class DirectionMatrix:
    D: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    state: tuple | None = field(default=None, repr=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.D))


def assemble(inst: QuboInstance, F, D_curr, eps_b: float = BOUNDARY_TOL) -> DirectionProblem:
    F = np.asarray(F, dtype=np.float64)
    D_curr = np.asarray(D_curr, dtype=np.float64)
    if F.shape != D_curr.shape or F.shape[0] != inst.n:
        raise ValueError(f"shape mismatch: F {F.shape}, D_curr {D_curr.shape}, n={inst.n}")
    n, k = F.shape
    iu, ju = np.triu_indices(n, 1)
    q = inst.Q[iu, ju]
    nz = q != 0
    iu, ju, q = iu[nz], ju[nz], q[nz]
    alpha = (2.0 / np.pi) * q
    X = np.clip(np.einsum("pk,pk->p", F[iu], F[ju]), -1.0, 1.0)
    inner = np.abs(X) < 1.0 - eps_b
    sigma = np.where(X > 0, 1.0, -1.0)
    convex = ~inner & (sigma == -np.sign(q))
    concave = ~inner & ~convex

    coef = alpha[inner] / np.sqrt(1.0 - X[inner] ** 2)
    interior = np.column_stack([iu[inner], ju[inner], coef])
    cones = np.column_stack([iu[convex], ju[convex], alpha[convex], sigma[convex]])
    lin = np.column_stack([iu[concave], ju[concave], alpha[concave], sigma[concave]])

    # s_ij in the subdifferential of ||d_i - sigma d_j|| at D_curr; 0 when the argument vanishes
    li, lj, ls = iu[concave], ju[concave], sigma[concave]
    u = D_curr[li] - ls[:, None] * D_curr[lj]
    un = np.linalg.norm(u, axis=1)
    S = np.zeros_like(u)
    ok = un > 0
    S[ok] = u[ok] / un[ok, None]

    # linear coefficient matrix in derivative units (factor 2 for the symmetric pair)
    C = np.zeros((n, k))
    C_abs = np.zeros((n, k))
    ii, jj = iu[inner], ju[inner]
    w = 2.0 * coef
    np.add.at(C, ii, w[:, None] * F[jj])
    np.add.at(C, jj, w[:, None] * F[ii])
    np.add.at(C_abs, ii, np.abs(w)[:, None] * np.abs(F[jj]))
    np.add.at(C_abs, jj, np.abs(w)[:, None] * np.abs(F[ii]))
    wl = -2.0 * ls * alpha[concave]
    np.add.at(C, li, wl[:, None] * S)
    np.add.at(C, lj, (-ls * wl)[:, None] * S)
    np.add.at(C_abs, li, np.abs(wl)[:, None] * np.abs(S))
    np.add.at(C_abs, lj, np.abs(wl)[:, None] * np.abs(S))

    return DirectionProblem(n, k, F, interior, cones, lin, S, C,
                            noise_floor=1e-12 * float(np.linalg.norm(C_abs)), eps_b=eps_b)


def _project_feasible(Y: np.ndarray, F: np.ndarray) -> np.ndarray:
    # tangent subspace passes through the ball's centre, so project then rescale
    Z = Y - np.einsum("ij,ij->i", Y, F)[:, None] * F
    nz = np.linalg.norm(Z)
    return Z / nz if nz > 1.0 else Z


def solve(dp: DirectionProblem, max_iter: int = 20000, tol: float = 1e-7, relax: float = 1.6,
          raise_on_failure: bool = True, warm: DirectionMatrix | None = None) -> DirectionMatrix:
    """ADMM on ``W0 = D`` (feasible set) and ``W_p = d_i - sigma d_j`` (cones).

    Residuals are measured on the problem rescaled so that the largest of
    ``||P_T C||`` and the cone weights is 1, with the usual absolute plus
    relative stopping rule (both ``tol``). ``warm`` reuses the direction and
    scaled dual of an earlier solve with the same shapes.
    """
    n, k, F = dp.n, dp.k, dp.F
    # <C, D> only sees the tangent part of C; near-boundary pairs make the radial part huge
    C = dp.C - np.einsum("ij,ij->i", dp.C, F)[:, None] * F
    if np.linalg.norm(C) <= dp.noise_floor:
        C = np.zeros_like(C)
    w = dp.cone_weights
    m = len(w)
    scale = max(float(np.linalg.norm(C)), float(w.max()) if m else 0.0)
    if scale == 0.0 or not C.any():
        # cone terms are nonnegative, so D = 0 is optimal
        return DirectionMatrix(np.zeros((n, k)), 0.0, 0, 0.0, 0.0)
    c = C / scale
    ws = w / scale

    ci = dp.cones[:, 0].astype(int)
    cj = dp.cones[:, 1].astype(int)
    cs = dp.cones[:, 3]
    A = sparse.csr_matrix(
        (np.concatenate([np.ones(m), -cs]), (np.tile(np.arange(m), 2), np.concatenate([ci, cj]))),
        shape=(m, n))
    At = A.T.tocsr()
    K = np.eye(n) + (At @ A).toarray()
    chol = cho_factor(K)

    rho = 1.0
    if warm is not None and warm.D.shape == (n, k) and warm.state is not None:
        rho, W0, U0 = warm.state
        W0, U0 = _project_feasible(W0, F), U0.copy()
    else:
        W0 = np.zeros((n, k))
        U0 = np.zeros((n, k))
    Wc = A @ W0
    Uc = np.zeros((m, k))
    r = s = np.inf
    root_p = np.sqrt((n + m) * k)
    root_n = np.sqrt(n * k)
    it = 0
    for it in range(1, max_iter + 1):
        D = cho_solve(chol, (W0 - U0) + At @ (Wc - Uc) - c / rho)
        AD = A @ D
        h0 = relax * D + (1.0 - relax) * W0
        hc = relax * AD + (1.0 - relax) * Wc
        W0_old, Wc_old = W0, Wc
        W0 = _project_feasible(h0 + U0, F)
        V = hc + Uc
        vn = np.linalg.norm(V, axis=1)
        shrink = np.maximum(0.0, 1.0 - (ws / rho) / np.maximum(vn, 1e-300))
        Wc = V * shrink[:, None]
        U0 += h0 - W0
        Uc += hc - Wc
        r = np.sqrt(np.sum((D - W0) ** 2) + np.sum((AD - Wc) ** 2))
        s = rho * np.sqrt(np.sum((W0 - W0_old + At @ (Wc - Wc_old)) ** 2))
        eps_pri = tol * (root_p + max(np.sqrt(np.sum(D ** 2) + np.sum(AD ** 2)),
                                      np.sqrt(np.sum(W0 ** 2) + np.sum(Wc ** 2))))
        eps_dual = tol * (root_n + rho * np.sqrt(np.sum((U0 + At @ Uc) ** 2)))
        if r < eps_pri and s < eps_dual:
            break
        if it % 25 == 0 and r > 0 and s > 0:
            ratio = np.sqrt(r / s)
            if ratio > 3.0 or ratio < 1.0 / 3.0:
                ratio = min(max(ratio, 1e-3), 1e3)
                rho *= ratio
                U0 /= ratio
                Uc /= ratio
    else:
        if raise_on_failure:
            raise SubproblemError(
                f"ADMM did not converge in {max_iter} iterations "
                f"(primal {r:.3g}, dual {s:.3g})", residuals=(r, s))

    D = W0
    val = dp.objective(D)
    if val > 0.0:
        # D = 0 is feasible with value 0
        D, val = np.zeros((n, k)), 0.0
    return DirectionMatrix(D, val, it, float(r), float(s), state=(rho, W0.copy(), U0.copy()))


def is_descent(inst: QuboInstance, F, D, eps_b: float = BOUNDARY_TOL) -> bool:
    """True iff the one-sided directional derivative along D is negative.

    Values within 1e-10 of the cancellation-free magnitude count as zero.
    """
    contrib, mag = derivative_terms(inst, F, D, eps_b)
    return bool(contrib.sum() < -1e-10 * mag.sum())
