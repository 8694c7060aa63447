"""Goemans-Williamson rounding from a row-normalized factor and its exact expectation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubo import Convention, QuboInstance, batch_objective, objective

ROW_NORM_TOL = 1e-10

# Trials are drawn in blocks; block b always uses the substream
# SeedSequence(seed, spawn_key=(b,)), so any partition of blocks over
# workers reproduces the sequential result.
TRIAL_BLOCK = 1024


def normalize_rows(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    norms = np.linalg.norm(F, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero row")
    return F / norms


def random_factor(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return normalize_rows(rng.standard_normal((n, k)))


def check_factor(F, n: int | None = None) -> np.ndarray:
    """Validate a factor matrix: shape n x k with 1 <= k <= n and unit rows."""
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError("factor must be a 2-D array")
    rows, k = F.shape
    if n is not None and rows != n:
        raise ValueError(f"factor has {rows} rows, instance has {n} variables")
    if not 1 <= k <= rows:
        raise ValueError(f"rank k={k} must satisfy 1 <= k <= n={rows}")
    err = np.max(np.abs(np.linalg.norm(F, axis=1) - 1.0))
    if err > ROW_NORM_TOL:
        raise ValueError(f"factor rows are not unit norm (max deviation {err:.3g})")
    return F


def _require_pm1(inst: QuboInstance):
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise ValueError("rounding needs a plus_minus_one instance; convert first")


def sign(v: np.ndarray) -> np.ndarray:
    """Sign with sgn(0) = +1, as int8."""
    return np.where(v >= 0, 1, -1).astype(np.int8)


@dataclass
class RoundingResult:
    best_x: np.ndarray
    best_value: float
    trial_values: np.ndarray
    trials: int
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.trial_values))

    @property
    def std(self) -> float:
        return float(np.std(self.trial_values, ddof=1)) if self.trials > 1 else 0.0


def sample_signs(F: np.ndarray, trials: int, seed: int, start: int = 0) -> np.ndarray:
    """Sign vectors ``sgn(F psi)`` for trial indices ``start .. start+trials-1``."""
    k = F.shape[1]
    out = np.empty((trials, F.shape[0]), dtype=np.int8)
    stop = start + trials
    b = start // TRIAL_BLOCK
    while b * TRIAL_BLOCK < stop:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        psi = rng.standard_normal((TRIAL_BLOCK, k))
        lo = max(start, b * TRIAL_BLOCK)
        hi = min(stop, (b + 1) * TRIAL_BLOCK)
        block = psi[lo - b * TRIAL_BLOCK: hi - b * TRIAL_BLOCK]
        out[lo - start: hi - start] = sign(block @ F.T)
        b += 1
    return out


def gw_round(inst: QuboInstance, F, trials: int, seed: int) -> RoundingResult:
    _require_pm1(inst)
    F = check_factor(F, inst.n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    values = np.empty(trials)
    best_x, best_v = None, np.inf
    chunk = 64 * TRIAL_BLOCK
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        X = sample_signs(F, m, seed, start)
        vals = batch_objective(inst.Q, X)
        values[start:start + m] = vals
        # exact re-evaluation near the chunk minimum keeps best_value == objective(best_x)
        tol = 1e-9 * max(1.0, np.abs(vals).max())
        near = np.flatnonzero(vals <= vals.min() + tol)
        patterns, inverse = np.unique(X[near], axis=0, return_inverse=True)
        exact = np.array([objective(inst, p) for p in patterns])
        values[start + near] = exact[inverse.ravel()]
        # np.unique sorts rows lexicographically, so the first minimizer is the tie-break winner
        p = int(np.argmin(exact))
        v = exact[p]
        if v < best_v or (v == best_v and tuple(patterns[p]) < tuple(best_x)):
            best_v, best_x = v, patterns[p].copy()
    return RoundingResult(best_x, float(best_v), values, trials, seed)


NEAR_BOUNDARY = 0.9


def arcsin_gram(F: np.ndarray, X: np.ndarray | None = None) -> np.ndarray:
    """``arcsin(F F^T)`` for unit rows, accurate near ``X_ij = +-1``.

    arcsin has unbounded slope at +-1, so rounding in ``f_i . f_j`` turns into
    errors of order 1e-8. Pairs with ``|X_ij| > 0.9`` use the identity
    ``arcsin(X_ij) = +-(pi/2 - 2 arcsin(||f_i -+ f_j|| / 2))`` instead.
    """
    if X is None:
        X = F @ F.T
    A = np.arcsin(np.clip(X, -1.0, 1.0))
    np.fill_diagonal(A, np.pi / 2)
    iu, ju = np.triu_indices(len(F), 1)
    near = np.abs(X[iu, ju]) > NEAR_BOUNDARY
    iu, ju = iu[near], ju[near]
    if len(iu):
        sg = np.where(X[iu, ju] > 0, 1.0, -1.0)
        for lo in range(0, len(iu), 1 << 16):
            a, b, s = iu[lo:lo + (1 << 16)], ju[lo:lo + (1 << 16)], sg[lo:lo + (1 << 16)]
            dist = np.linalg.norm(F[a] - s[:, None] * F[b], axis=1)
            v = s * (np.pi / 2 - 2.0 * np.arcsin(np.minimum(dist / 2.0, 1.0)))
            A[a, b] = v
            A[b, a] = v
    return A


def expected_value(inst: QuboInstance, F) -> float:
    """Expected objective of GW rounding: ``(2/pi) <Q, arcsin(F F^T)>``."""
    _require_pm1(inst)
    F = check_factor(F, inst.n)
    return float(2.0 / np.pi * np.sum(inst.Q * arcsin_gram(F)))


def hyperplane_partitions_rank2(F, inst: QuboInstance) -> tuple[np.ndarray, float]:
    """Best sign pattern cut by a line through the origin, for points on the unit circle.

    Sorting the critical angles costs O(n log n); each crossing flips a group of
    points and updates the objective in O(n).
    """
    _require_pm1(inst)
    F = check_factor(F, inst.n)
    if F.shape[1] != 2:
        raise ValueError("hyperplane enumeration needs a rank-2 factor")
    Q = inst.Q
    theta = np.arctan2(F[:, 1], F[:, 0])
    # normal direction alpha gives x_i = sgn cos(theta_i - alpha); x_i flips at alpha = theta_i + pi/2 (mod pi)
    crit = np.mod(theta + np.pi / 2, np.pi)
    crit = np.where(crit >= np.pi - 1e-12, 0.0, crit)
    order = np.argsort(crit, kind="stable")
    cs = crit[order]
    groups = []
    cur = [order[0]]
    for a, b, idx in zip(cs[:-1], cs[1:], order[1:]):
        if b - a > 1e-12:
            groups.append(cur)
            cur = [idx]
        else:
            cur.append(idx)
    groups.append(cur)
    # start in the wrap-around gap before the first critical angle
    first = crit[groups[0][0]]
    last = crit[groups[-1][0]]
    alpha0 = 0.5 * (last - np.pi + first)
    x = sign(np.cos(theta - alpha0)).astype(np.float64)
    h = Q @ x
    val = float(x @ h)
    best_x, best_v = x.copy(), val
    diag = np.diag(Q)
    for grp in groups[:-1]:
        for i in grp:
            val += -4.0 * x[i] * h[i] + 4.0 * diag[i]
            h -= 2.0 * x[i] * Q[:, i]
            x[i] = -x[i]
        if val < best_v:
            best_v, best_x = val, x.copy()
    best_x = best_x.astype(np.int8)
    return best_x, objective(inst, best_x)
