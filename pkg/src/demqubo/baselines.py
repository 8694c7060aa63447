"""Reference heuristics: simulated annealing, tabu search, simulated bifurcation,
the rank-2 torus relaxation and a Burer-Monteiro stand-in for the GW SDP.

Every solver takes a plus_minus_one instance and returns ``(x, value, trace)``
with ``value == objective(inst, x)``. The trace's ``best`` column is the
best-seen value and never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qubo import Convention, QuboInstance, objective, spectral_radius
from .rounding import RoundingResult, gw_round, hyperplane_partitions_rank2, normalize_rows, sign

__all__ = [
    "Trace", "SaParams", "TabuParams", "SbParams",
    "flip_delta", "metropolis_accept",
    "simulated_annealing", "tabu_search", "simulated_bifurcation",
    "torus_value", "torus_gradient", "torus_descent", "burer2", "gw_sdp_surrogate",
]


@dataclass
class Trace:
    """Column-oriented run trace; every row has the same keys."""

    columns: dict[str, list] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def record(self, **row) -> None:
        if self.columns and set(row) != set(self.columns):
            raise ValueError(f"trace row keys {sorted(row)} differ from {sorted(self.columns)}")
        for key, val in row.items():
            self.columns.setdefault(key, []).append(val)

    def __getitem__(self, key):
        return self.columns[key]

    def __len__(self):
        return len(next(iter(self.columns.values()), []))

    def rows(self) -> list[dict]:
        keys = list(self.columns)
        return [dict(zip(keys, vals)) for vals in zip(*self.columns.values())]


def _require_pm1(inst: QuboInstance) -> None:
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise ValueError("baseline solvers need a plus_minus_one instance")


def flip_delta(Q: np.ndarray, x: np.ndarray, h: np.ndarray, i: int) -> float:
    """Change of ``x^T Q x`` when ``x_i`` flips, given the field ``h = Q x``."""
    return -4.0 * x[i] * h[i] + 4.0 * Q[i, i]


def metropolis_accept(delta: float, T: float, u: float) -> bool:
    return delta <= 0.0 or u < math.exp(-delta / T)


# ---------------------------------------------------------------- annealing

@dataclass(frozen=True)
class SaParams:
    """``T0`` and ``alpha`` left as None are derived from the instance:
    ``T0 = max|Q_ij| n`` and the final sweep runs at ``1e-3 T0``."""

    T0: float | None = None
    alpha: float | None = None
    sweeps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.T0 is not None and not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def schedule(self, inst: QuboInstance) -> tuple[float, float]:
        T0 = self.T0
        if T0 is None:
            T0 = float(np.max(np.abs(inst.Q))) * inst.n or 1.0
        alpha = self.alpha
        if alpha is None:
            alpha = 1e-3 ** (1.0 / max(self.sweeps - 1, 1))
        return T0, alpha


def simulated_annealing(inst: QuboInstance, p: SaParams = SaParams()):
    _require_pm1(inst)
    Q = inst.Q
    n = inst.n
    T0, alpha = p.schedule(inst)
    rng = np.random.default_rng(p.seed)
    x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    h = Q @ x
    diag = np.diag(Q).copy()
    val = float(x @ h)
    best_x, best_v = x.copy(), val
    trace = Trace()
    for t in range(p.sweeps):
        T = T0 * alpha ** t
        order = rng.permutation(n)
        us = rng.random(n)
        for i, u in zip(order.tolist(), us.tolist()):
            d = -4.0 * x[i] * h[i] + 4.0 * diag[i]
            if d <= 0.0 or u < math.exp(-d / T):
                h -= 2.0 * x[i] * Q[:, i]
                x[i] = -x[i]
                val += d
                if val < best_v:
                    best_v, best_x = val, x.copy()
        trace.record(sweep=t, temperature=T, value=val, best=best_v)
    best_x = best_x.astype(np.int8)
    return best_x, objective(inst, best_x), trace


# ---------------------------------------------------------------- tabu

@dataclass(frozen=True)
class TabuParams:
    """``tenure`` None means ``max(1, min(20, n // 4))``."""

    tenure: int | None = None
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.tenure is not None and self.tenure < 1:
            raise ValueError("tenure must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    def resolved_tenure(self, n: int) -> int:
        return self.tenure if self.tenure is not None else max(1, min(20, n // 4))


def tabu_search(inst: QuboInstance, p: TabuParams = TabuParams()):
    """Best non-tabu single flip each iteration, with aspiration on the best-seen value.

    When every move is tabu and none aspirates, the best tabu move is taken
    and the trace marks the row with ``fallback=True``.
    """
    _require_pm1(inst)
    Q = inst.Q
    n = inst.n
    L = p.resolved_tenure(n)
    rng = np.random.default_rng(p.seed)
    x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    h = Q @ x
    diag = np.diag(Q)
    val = float(x @ h)
    best_x, best_v = x.copy(), val
    tabu_until = np.zeros(n, dtype=np.int64)
    trace = Trace()
    for t in range(p.iterations):
        deltas = -4.0 * x * h + 4.0 * diag
        tabu = tabu_until > t
        aspire = tabu & (val + deltas < best_v)
        allowed = ~tabu | aspire
        fallback = not allowed.any()
        cand = np.arange(n) if fallback else np.flatnonzero(allowed)
        i = int(cand[np.argmin(deltas[cand])])
        h -= 2.0 * x[i] * Q[:, i]
        x[i] = -x[i]
        val += deltas[i]
        tabu_until[i] = t + 1 + L
        if val < best_v:
            best_v, best_x = val, x.copy()
        trace.record(iteration=t, flipped=i, aspirated=bool(aspire[i]), fallback=fallback,
                     value=val, best=best_v)
    best_x = best_x.astype(np.int8)
    return best_x, objective(inst, best_x), trace


# ---------------------------------------------------------------- bifurcation

@dataclass(frozen=True)
class SbParams:
    """Ballistic SB with a linear ``mu`` ramp.

    None values scale with ``rho = rho(J)``: ``dt = 0.25 / sqrt(rho)``,
    ``gamma = 0.2 sqrt(rho)``, ``mu`` from ``lam + 1.1 rho`` down to ``lam``.
    """

    lam: float = 0.0
    gamma: float | None = None
    dt: float | None = None
    steps: int = 1000
    mu_start: float | None = None
    mu_end: float | None = None
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")


def coupling(inst: QuboInstance) -> np.ndarray:
    J = -np.array(inst.Q)
    np.fill_diagonal(J, 0.0)
    return J


def simulated_bifurcation(inst: QuboInstance, p: SbParams = SbParams()):
    _require_pm1(inst)
    J = coupling(inst)
    n = inst.n
    rho = spectral_radius(J)
    unit = rho if rho > 0 else 1.0
    dt = p.dt if p.dt is not None else 0.25 / math.sqrt(unit)
    gamma = p.gamma if p.gamma is not None else 0.2 * math.sqrt(unit)
    mu0 = p.mu_start if p.mu_start is not None else p.lam + 1.1 * unit
    mu1 = p.mu_end if p.mu_end is not None else p.lam
    rng = np.random.default_rng(p.seed)
    x = p.init_scale * rng.uniform(-1.0, 1.0, n)
    y = np.zeros(n)
    best_x, best_v = None, np.inf
    trace = Trace()
    for t in range(p.steps):
        mu = mu0 + (mu1 - mu0) * t / max(p.steps - 1, 1)
        y += dt * (-(mu - p.lam) * x + J @ x - gamma * y)
        x += dt * y
        wall = np.abs(x) > 1.0
        x[wall] = np.sign(x[wall])
        y[wall] = 0.0
        s = sign(x)
        v = objective(inst, s)
        if v < best_v:
            best_v, best_x = v, s
        trace.record(step=t, mu=mu, amplitude=float(np.max(np.abs(x))), value=v, best=best_v)
    final = sign(x)
    final_v = objective(inst, final)
    if final_v <= best_v:
        best_x, best_v = final, final_v
    trace.info.update(final_state=x.copy(), rho=rho, dt=dt, gamma=gamma, mu_start=mu0, mu_end=mu1)
    return best_x, best_v, trace


# ---------------------------------------------------------------- rank-2 torus

def torus_value(Q: np.ndarray, phi: np.ndarray) -> float:
    """``sum_ij Q_ij cos(phi_i - phi_j)``."""
    c, s = np.cos(phi), np.sin(phi)
    return float(c @ Q @ c + s @ Q @ s)


def torus_gradient(Q: np.ndarray, phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return 2.0 * (c * (Q @ s) - s * (Q @ c))


def torus_descent(Q: np.ndarray, phi0, max_iter: int = 2000, tol: float = 1e-9):
    """Gradient descent with Armijo backtracking. Returns ``(phi, values)``."""
    phi = np.array(phi0, dtype=np.float64)
    f = torus_value(Q, phi)
    values = [f]
    scale = max(float(np.abs(Q).sum()), 1e-300)
    step = 1.0 / max(2.0 * spectral_radius(Q), 1e-300)
    for _ in range(max_iter):
        g = torus_gradient(Q, phi)
        gg = float(g @ g)
        if math.sqrt(gg) <= tol * scale:
            break
        step *= 2.0
        while True:
            cand = phi - step * g
            fc = torus_value(Q, cand)
            if fc <= f - 1e-4 * step * gg:
                break
            step *= 0.5
            if step < 1e-20:
                return phi, values
        phi, f = cand, fc
        values.append(f)
    return phi, values


def burer2(inst: QuboInstance, restarts: int = 10, seed: int = 0, max_iter: int = 2000):
    _require_pm1(inst)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    Q = inst.Q
    best_x, best_v = None, np.inf
    trace = Trace()
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        phi, values = torus_descent(Q, rng.uniform(0.0, 2.0 * np.pi, inst.n), max_iter)
        F = np.column_stack([np.cos(phi), np.sin(phi)])
        x, v = hyperplane_partitions_rank2(F, inst)
        if v < best_v or (v == best_v and tuple(x) < tuple(best_x)):
            best_x, best_v = x, v
            trace.info["F"] = F
        trace.record(restart=r, relaxation=values[-1], descent_steps=len(values) - 1,
                     value=v, best=best_v)
    return best_x, best_v, trace


# ---------------------------------------------------------------- SDP surrogate

def gw_sdp_surrogate(inst: QuboInstance, rank: int | None = None, steps: int = 500,
                     trials: int = 100, seed: int = 0, tol: float = 1e-9):
    """Riemannian descent on ``<Q, F F^T>`` at rank ``ceil(sqrt(2n))``, then GW rounding.

    The trace holds one row per descent step with the relaxation value;
    ``trace.info`` keeps the factor and the rounding result.
    """
    _require_pm1(inst)
    n = inst.n
    k = rank if rank is not None else min(n, math.ceil(math.sqrt(2 * n)))
    if not 1 <= k <= n:
        raise ValueError(f"rank {k} must lie in [1, {n}]")
    Q = inst.Q
    rng = np.random.default_rng(seed)
    F = normalize_rows(rng.standard_normal((n, k)))
    rho = spectral_radius(Q)
    eta = 0.5 / rho if rho > 0 else 0.0
    trace = Trace()
    rel = float(np.sum(Q * (F @ F.T)))
    for t in range(steps):
        G = 2.0 * (Q @ F)
        G -= np.einsum("ij,ij->i", G, F)[:, None] * F
        gn = float(np.linalg.norm(G))
        trace.record(step=t, relaxation=rel, grad_norm=gn)
        if gn <= tol * max(rho, 1e-300) or eta == 0.0:
            break
        F = normalize_rows(F - eta * G)
        rel = float(np.sum(Q * (F @ F.T)))
    rounding: RoundingResult = gw_round(inst, F, trials, seed)
    trace.info.update(F=F, rounding=rounding, relaxation=rel, rank=k)
    return rounding.best_x, rounding.best_value, trace
