"""QUBO instances, form conversions, reductions, generators and the text file format."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np


class Convention(str, enum.Enum):
    PLUS_MINUS_ONE = "plus_minus_one"
    ZERO_ONE = "zero_one"


class InstanceFormatError(ValueError):
    """Base class for problems found while parsing an instance file."""


class MalformedHeaderError(InstanceFormatError):
    pass


class MalformedEntryError(InstanceFormatError):
    pass


class IndexOutOfRangeError(InstanceFormatError):
    pass


class AsymmetryError(InstanceFormatError):
    pass


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Dense symmetric QUBO ``min x^T Q x (+ b^T x)``.

    ``metadata`` holds free-form string pairs. Reductions record the dropped
    constant under ``objective_offset`` and, when the original problem was a
    maximization, ``objective_scale = -1`` so that
    ``original = scale * objective + offset``.
    """

    Q: np.ndarray
    convention: Convention = Convention.PLUS_MINUS_ONE
    linear: np.ndarray | None = None
    name: str = ""
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise ValueError(f"Q must be a non-empty square matrix, got shape {Q.shape}")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be exactly symmetric")
        conv = Convention(self.convention)
        lin = self.linear
        if lin is not None:
            if conv is Convention.PLUS_MINUS_ONE:
                raise ValueError("linear term is only allowed for the zero_one convention")
            lin = np.array(lin, dtype=np.float64)
            if lin.shape != (Q.shape[0],):
                raise ValueError("linear term has wrong length")
            lin.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "convention", conv)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in self.metadata.items()})

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def offset(self) -> float:
        return float(self.metadata.get("objective_offset", 0.0))

    @property
    def scale(self) -> float:
        return float(self.metadata.get("objective_scale", 1.0))

    def original_value(self, value: float) -> float:
        """Map an objective value back to the problem the instance was reduced from."""
        return self.scale * value + self.offset

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        if (self.linear is None) != (other.linear is None):
            return False
        return (
            self.convention == other.convention
            and self.name == other.name
            and self.metadata == other.metadata
            and np.array_equal(self.Q, other.Q)
            and (self.linear is None or np.array_equal(self.linear, other.linear))
        )

    __hash__ = None


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        norm = []
        for i, j, w in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j, float(w)))
        object.__setattr__(self, "edges", tuple(norm))

    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            W[i, j] = W[j, i] = w
        return W

    def cut_weight(self, x) -> float:
        x = np.asarray(x)
        return float(sum(w for i, j, w in self.edges if x[i] != x[j]))


def check_vector(inst: QuboInstance, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (inst.n,):
        raise ValueError(f"vector has shape {x.shape}, expected ({inst.n},)")
    alphabet = (-1, 1) if inst.convention is Convention.PLUS_MINUS_ONE else (0, 1)
    if not np.all(np.isin(x, alphabet)):
        raise ValueError(f"entries must lie in {alphabet} for the {inst.convention.value} convention")
    return x.astype(np.float64)


def objective(inst: QuboInstance, x) -> float:
    xf = check_vector(inst, x)
    val = xf @ inst.Q @ xf
    if inst.linear is not None:
        val += inst.linear @ xf
    return float(val)


def batch_objective(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Row-wise ``x^T Q x`` for a stack of sign vectors (no validation)."""
    X = np.asarray(X, dtype=np.float64)
    return np.einsum("ti,ti->t", X @ Q, X)


def to_plus_minus_one(inst: QuboInstance) -> QuboInstance:
    """Homogenize a 0/1 instance into an (n+1)-variable +-1 instance.

    Coordinate 0 is the fixed-sign slot; a solution ``z`` maps back through
    ``x = (z0 * z[1:] + 1) / 2``.
    """
    if inst.convention is not Convention.ZERO_ONE:
        raise ValueError("to_plus_minus_one expects a zero_one instance")
    M = inst.Q.copy()
    if inst.linear is not None:
        M[np.diag_indices_from(M)] += inst.linear
    n = inst.n
    row = M.sum(axis=0)
    B = np.empty((n + 1, n + 1))
    B[0, 0] = row.sum()
    B[0, 1:] = row
    B[1:, 0] = row
    B[1:, 1:] = M
    B /= 4.0
    B = np.triu(B) + np.triu(B, 1).T
    meta = dict(inst.metadata)
    meta["homogenized"] = "true"
    meta["fixed_slot"] = "0"
    return QuboInstance(B, Convention.PLUS_MINUS_ONE, None, inst.name, meta)


def from_homogenized(z) -> np.ndarray:
    """Recover the 0/1 vector from a solution of a homogenized instance."""
    z = np.asarray(z)
    y = z[1:] * z[0]
    return ((y + 1) // 2).astype(np.int8)


def to_zero_one(inst: QuboInstance) -> QuboInstance:
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise ValueError("to_zero_one expects a plus_minus_one instance")
    A = inst.Q
    const = float(A.sum())
    Z = 4.0 * (A - np.diag(A.sum(axis=1)))
    Z = np.triu(Z) + np.triu(Z, 1).T
    meta = dict(inst.metadata)
    meta["objective_offset"] = repr(inst.offset + inst.scale * const)
    return QuboInstance(Z, Convention.ZERO_ONE, None, inst.name, meta)


def from_maxcut(g: WeightedGraph, name: str = "maxcut") -> QuboInstance:
    W = g.weight_matrix()
    const = W.sum() / 4.0
    meta = {"objective_offset": repr(float(const)), "objective_scale": "-1", "source": "maxcut"}
    return QuboInstance(W / 4.0, Convention.PLUS_MINUS_ONE, None, name, meta)


def from_subset_sum(w, name: str = "subset_sum") -> QuboInstance:
    w = np.asarray(w)
    if w.ndim != 1 or len(w) == 0 or np.any(w <= 0):
        raise ValueError("subset-sum weights must be a non-empty vector of positive numbers")
    w = w.astype(np.float64)
    meta = {"source": "subset_sum", "weights": ",".join(f"{v:.17g}" for v in w)}
    return QuboInstance(np.outer(w, w), Convention.PLUS_MINUS_ONE, None, name, meta)


def gen_random_gaussian(n: int, seed: int, name: str | None = None) -> QuboInstance:
    """Symmetric matrix with i.i.d. N(0, 1) upper triangle (diagonal included) mirrored below."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    U = np.triu(rng.standard_normal((n, n)))
    Q = U + np.triu(U, 1).T
    return QuboInstance(Q, Convention.PLUS_MINUS_ONE, None,
                        name or f"gauss_n{n}_s{seed}", {"generator": "gaussian", "seed": str(seed)})


def read_maxcut_edges(path) -> WeightedGraph:
    """Edge list: optional ``n m`` header then ``i j [w]`` lines, 0-based unless a 1-based header says so."""
    edges = []
    n = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n is None and len(parts) == 2 and not edges:
                n = int(parts[0])
                continue
            if len(parts) not in (2, 3):
                raise MalformedEntryError(f"bad edge line: {raw.rstrip()}")
            w = float(parts[2]) if len(parts) == 3 else 1.0
            edges.append((int(parts[0]), int(parts[1]), w))
    if not edges and n is None:
        raise MalformedHeaderError(f"{path}: empty edge list")
    if n is None:
        n = 1 + max(max(i, j) for i, j, _ in edges)
    elif edges and min(min(i, j) for i, j, _ in edges) >= 1 and max(max(i, j) for i, j, _ in edges) == n:
        edges = [(i - 1, j - 1, w) for i, j, w in edges]
    try:
        return WeightedGraph(n, tuple(edges))
    except ValueError as exc:
        raise IndexOutOfRangeError(str(exc)) from exc


# --- text format -------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_instance(inst: QuboInstance, path) -> None:
    iu, ju = np.nonzero(np.triu(inst.Q))
    lines = [f"qubo {inst.convention.value} {inst.n} {len(iu)}"]
    if inst.name:
        lines.append(f"# name = {inst.name}")
    for k in sorted(inst.metadata):
        lines.append(f"# {k} = {inst.metadata[k]}")
    for i, j in zip(iu, ju):
        lines.append(f"{i} {j} {_fmt(inst.Q[i, j])}")
    if inst.linear is not None:
        for i, v in enumerate(inst.linear):
            if v != 0.0:
                lines.append(f"linear {i} {_fmt(v)}")
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_instance(path) -> QuboInstance:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_instance(text)


def parse_instance(text: str) -> QuboInstance:
    header = None
    meta: dict[str, str] = {}
    name = ""
    entries: dict[tuple[int, int], float] = {}
    linear: dict[int, float] = {}
    count = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                k, v = k.strip(), v.strip()
                if k == "name":
                    name = v
                else:
                    meta[k] = v
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "qubo":
                raise MalformedHeaderError(f"line {lineno}: expected 'qubo <convention> <n> <nnz>'")
            try:
                conv = Convention(parts[1])
                n, nnz = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise MalformedHeaderError(f"line {lineno}: {exc}") from exc
            if n < 1 or nnz < 0:
                raise MalformedHeaderError(f"line {lineno}: n must be >= 1 and nnz >= 0")
            header = (conv, n, nnz)
            continue
        n = header[1]
        try:
            if parts[0] == "linear":
                if len(parts) != 3:
                    raise ValueError("expected 'linear i value'")
                i, v = int(parts[1]), float(parts[2])
                if not 0 <= i < n:
                    raise IndexOutOfRangeError(f"line {lineno}: index {i} out of range for n={n}")
                linear[i] = v
                continue
            if len(parts) != 3:
                raise ValueError("expected 'i j value'")
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except IndexOutOfRangeError:
            raise
        except ValueError as exc:
            raise MalformedEntryError(f"line {lineno}: {exc}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRangeError(f"line {lineno}: entry ({i}, {j}) out of range for n={n}")
        key = (min(i, j), max(i, j))
        if key in entries and entries[key] != v:
            raise AsymmetryError(f"line {lineno}: conflicting values for ({key[0]}, {key[1]})")
        entries[key] = v
        count += 1
    if header is None:
        raise MalformedHeaderError("missing header line")
    conv, n, nnz = header
    if count != nnz:
        raise MalformedHeaderError(f"header declares {nnz} entries, found {count}")
    if linear and conv is Convention.PLUS_MINUS_ONE:
        raise MalformedEntryError("linear entries are only valid for zero_one instances")
    Q = np.zeros((n, n))
    for (i, j), v in entries.items():
        Q[i, j] = Q[j, i] = v
    lin = None
    if conv is Convention.ZERO_ONE and linear:
        lin = np.zeros(n)
        for i, v in linear.items():
            lin[i] = v
    return QuboInstance(Q, conv, lin, name, meta)


def brute_force(inst: QuboInstance, max_n: int = 24) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of a +-1 instance, with coordinate 0 pinned to +1."""
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise ValueError("brute_force expects a plus_minus_one instance")
    n = inst.n
    if n > max_n:
        raise ValueError(f"n={n} too large for enumeration (limit {max_n})")
    best_val, best_x = np.inf, None
    free = n - 1
    chunk = 1 << min(free, 16)
    for start in range(0, 1 << free, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        bits = (idx[:, None] >> np.arange(free)) & 1
        X = np.ones((chunk, n))
        X[:, 1:] = 2.0 * bits - 1.0
        vals = batch_objective(inst.Q, X)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_x = vals[k], X[k].astype(np.int8)
    return best_x, objective(inst, best_x)


def spectral_radius(M: np.ndarray, tol: float = 1e-12, max_iter: int = 20000, seed: int = 0) -> float:
    """Largest |eigenvalue| of a symmetric matrix by power iteration on ``M^2``.

    Iterating on the square avoids the stall when ``lambda_max ~ -lambda_min``.
    """
    M = np.asarray(M, dtype=np.float64)
    if not M.any():
        return 0.0
    v = np.random.default_rng(seed).standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = M @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(np.sqrt(v @ w))
        v = w / nw
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est
