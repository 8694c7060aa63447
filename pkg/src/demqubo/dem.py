"""Direct expectation minimization: clipped Riemannian descent (DEM-RC), the
exact variant driven by cone-program directions, and the generic DC loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .derivatives import (BOUNDARY_TOL, directional_derivative, euclidean_gradient, phi,
                          riemannian_project)
from .qubo import Convention, QuboInstance, spectral_radius
from .rounding import ROW_NORM_TOL, RoundingResult, gw_round, normalize_rows, random_factor
from .subproblem import SubproblemError, assemble, is_descent, solve

__all__ = [
    "DemRcParams", "DescentTrace", "DemError", "DCError",
    "phi", "euclidean_gradient", "riemannian_project", "directional_derivative",
    "dem_rc", "exact_dem", "dc_minimize",
]


class DemError(RuntimeError):
    pass


class DCError(RuntimeError):
    pass


@dataclass(frozen=True)
class DemRcParams:
    rank: int = 10
    steps: int = 500
    rounds: int = 100
    eta: float = 0.05
    eps: float = 1e-6
    seed: int = 0
    # step is eta / ||Q||_2 so one eta works across instance sizes and scalings
    scale_step: bool = True

    def __post_init__(self):
        if self.rank < 1 or self.steps < 0 or self.rounds < 1:
            raise ValueError("rank and rounds must be >= 1, steps >= 0")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")


@dataclass
class DescentTrace:
    iteration: list[int] = field(default_factory=list)
    phi: list[float] = field(default_factory=list)
    norm: list[float] = field(default_factory=list)
    time: list[float] = field(default_factory=list)

    def record(self, it: int, value: float, norm: float, t: float) -> None:
        if self.iteration and it <= self.iteration[-1]:
            raise ValueError("trace iterations must increase strictly")
        self.iteration.append(it)
        self.phi.append(float(value))
        self.norm.append(float(norm))
        self.time.append(float(t))

    def __len__(self):
        return len(self.iteration)

    def iterations_to_within(self, rel: float = 0.01) -> int:
        """First iteration from which phi stays within ``rel * |final|`` of the final value."""
        vals = np.asarray(self.phi)
        final = vals[-1]
        ok = np.abs(vals - final) <= rel * max(abs(final), 1e-300)
        bad = np.flatnonzero(~ok)
        first = 0 if len(bad) == 0 else bad[-1] + 1
        return self.iteration[first]

    def rows(self):
        return list(zip(self.iteration, self.phi, self.norm, self.time))


def _require_pm1(inst):
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise ValueError("DEM needs a plus_minus_one instance")


def _phi_from_gram(Q, X) -> float:
    # trace-only value: plain arcsin, off by O(1e-8) near |X_ij| = 1 (phi() refines those pairs)
    A = np.arcsin(X)
    np.fill_diagonal(A, np.pi / 2)
    return float(2.0 / np.pi * np.sum(Q * A))


def dem_rc(inst: QuboInstance, params: DemRcParams = DemRcParams(), F0=None
           ) -> tuple[np.ndarray, RoundingResult, DescentTrace]:
    _require_pm1(inst)
    if params.rank > inst.n:
        raise ValueError(f"rank {params.rank} exceeds n={inst.n}")
    rng = np.random.default_rng(params.seed)
    F = random_factor(inst.n, params.rank, rng) if F0 is None else normalize_rows(F0)
    eta = params.eta
    if params.scale_step:
        eta /= spectral_radius(inst.Q) or 1.0
    Q = inst.Q
    lo, hi = -1.0 + params.eps, 1.0 - params.eps
    trace = DescentTrace()
    t0 = time.perf_counter()
    # one Gram matrix per step serves both phi(F_t) and the gradient at F_t
    X = np.clip(F @ F.T, -1.0, 1.0)
    trace.record(0, _phi_from_gram(Q, X), 0.0, 0.0)
    for t in range(1, params.steps + 1):
        W = Q / np.sqrt(1.0 - np.clip(X, lo, hi) ** 2)
        np.fill_diagonal(W, 0.0)
        g = riemannian_project(F, (4.0 / np.pi) * (W @ F))
        F = normalize_rows(F - eta * g)
        X = np.clip(F @ F.T, -1.0, 1.0)
        trace.record(t, _phi_from_gram(Q, X), np.linalg.norm(g), time.perf_counter() - t0)
    rounding = gw_round(inst, F, params.rounds, params.seed)
    return F, rounding, trace


def exact_dem(inst: QuboInstance, F0, eta: float = 0.25, tol: float = 1e-6, max_iter: int = 200,
              eps_b: float = BOUNDARY_TOL, backtracking: bool = False, seed: int = 0,
              max_halvings: int = 20, solver_opts: dict | None = None
              ) -> tuple[np.ndarray, DescentTrace]:
    """Fixed-step descent along cone-program directions with row retraction.

    The first linearization point for concave boundary terms is a random unit
    direction. With ``backtracking`` the step is halved while phi increases.
    """
    _require_pm1(inst)
    if not (eta > 0 and tol > 0):
        raise ValueError("eta and tol must be positive")
    F = np.array(F0, dtype=np.float64)
    if np.max(np.abs(np.linalg.norm(F, axis=1) - 1.0)) > ROW_NORM_TOL:
        F = normalize_rows(F)
    if F.shape[0] != inst.n:
        raise ValueError("factor rows do not match instance size")
    rng = np.random.default_rng(seed)
    D = rng.standard_normal(F.shape)
    D /= np.linalg.norm(D)
    opts = solver_opts or {}
    trace = DescentTrace()
    t0 = time.perf_counter()
    cur = phi(inst, F)
    trace.record(0, cur, np.nan, 0.0)
    sol = None
    for it in range(1, max_iter + 1):
        try:
            sol = solve(assemble(inst, F, D, eps_b), warm=sol, **opts)
        except SubproblemError as exc:
            raise DemError(f"iteration {it}: {exc}") from exc
        D = sol.D
        dnorm = sol.norm
        if dnorm < tol or not is_descent(inst, F, D, eps_b):
            trace.record(it, cur, dnorm, time.perf_counter() - t0)
            break
        step = eta
        F_new = normalize_rows(F + step * D)
        new = phi(inst, F_new)
        if backtracking:
            halvings = 0
            while new > cur and halvings < max_halvings:
                step *= 0.5
                halvings += 1
                F_new = normalize_rows(F + step * D)
                new = phi(inst, F_new)
            if new > cur:
                trace.record(it, cur, dnorm, time.perf_counter() - t0)
                break
        F, cur = F_new, new
        trace.record(it, cur, dnorm, time.perf_counter() - t0)
    return F, trace


def dc_minimize(argmin_linearized: Callable, subgradient_h: Callable, x0, n_iter: int,
                value: Callable | None = None):
    """DC iteration for ``g - h``: ``y = dh(x)``, ``x <- argmin g(x) - <y, x>``.

    ``value`` (optional) evaluates ``g - h`` and is recorded for every iterate
    including ``x0``. Returns ``(x_N, values)``.
    """
    x = x0
    values = [float(value(x))] if value is not None else []
    for k in range(1, n_iter + 1):
        y = subgradient_h(x)
        x_new = argmin_linearized(y)
        if x_new is None or not np.all(np.isfinite(np.asarray(x_new, dtype=np.float64))):
            raise DCError(f"inner minimization failed at iteration {k}")
        x = x_new
        if value is not None:
            values.append(float(value(x)))
    return x, values
