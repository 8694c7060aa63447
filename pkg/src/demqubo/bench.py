"""Benchmark harness: method dispatch, reports, bench tables, rank sweeps and
rounding distributions. The CLI in ``cli.py`` is a thin layer over this."""

from __future__ import annotations

import csv
import json
import math
import re
import statistics
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import baselines as bl
from .dem import DCError, DemError, DemRcParams, dem_rc, exact_dem
from .qubo import (Convention, InstanceFormatError, QuboInstance, brute_force, from_maxcut,
                   from_subset_sum, gen_random_gaussian, objective, read_instance,
                   read_maxcut_edges, to_plus_minus_one, write_instance)
from .rounding import expected_value, gw_round, random_factor
from .subproblem import SubproblemError

METHODS = ("dem-rc", "dem-exact", "sa", "tabu", "sb", "burer2", "gw-sdp-surrogate")
FACTOR_METHODS = ("dem-rc", "dem-exact", "gw-sdp-surrogate", "burer2")
GAP_MAX_N = 20


class UsageError(ValueError):
    exit_code = 2


class InputDataError(ValueError):
    exit_code = 3


class SolverFailure(RuntimeError):
    exit_code = 4


def _opt(cast):
    def parse(v):
        if v is None or (isinstance(v, str) and v.lower() == "none"):
            return None
        return cast(v)
    return parse


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# parameter name -> (parser, default); `rounds` is shared by all factor methods
PARAMS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "dem-rc": {"rank": (int, 10), "steps": (int, 500), "rounds": (int, 100),
               "eta": (float, 0.05), "eps": (float, 1e-6), "scale_step": (_bool, True)},
    "dem-exact": {"rank": (int, 10), "steps": (int, 200), "rounds": (int, 100),
                  "eta": (float, 0.25), "tol": (float, 1e-6), "backtracking": (_bool, False)},
    "sa": {"sweeps": (int, 1000), "T0": (_opt(float), None), "alpha": (_opt(float), None)},
    "tabu": {"iterations": (int, 1000), "tenure": (_opt(int), None)},
    "sb": {"steps": (int, 1000), "lam": (float, 0.0), "gamma": (_opt(float), None),
           "dt": (_opt(float), None), "mu_start": (_opt(float), None),
           "mu_end": (_opt(float), None), "init_scale": (float, 0.1)},
    "burer2": {"restarts": (int, 10), "steps": (int, 2000)},
    "gw-sdp-surrogate": {"rank": (_opt(int), None), "steps": (int, 500), "rounds": (int, 100)},
}


def resolve_params(method: str, given: dict[str, Any] | None = None, strict: bool = True) -> dict:
    """Defaults overlaid with ``given``. Unknown keys raise unless ``strict`` is False."""
    if method not in PARAMS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    spec = PARAMS[method]
    out = {k: d for k, (_, d) in spec.items()}
    for key, val in (given or {}).items():
        if key not in spec:
            if strict:
                raise UsageError(f"method {method} has no parameter {key!r}")
            continue
        try:
            out[key] = spec[key][0](val)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {method}.{key}: {val!r}") from exc
    return out


def cell_seed(master: int, instance: str, method: str) -> int:
    """Seed for one (instance, method) cell; stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(instance.encode()),
                                 zlib.crc32(method.encode())])
    return int(ss.generate_state(1)[0])


@dataclass
class SolverReport:
    method: str
    instance: str
    best_value: float
    expected_value: float | None
    wall_time: float
    seed: int
    params: dict
    x: list[int]
    original_value: float
    trace: str | None = None

    def to_json(self, wall_time: bool = True) -> str:
        d = asdict(self)
        if not wall_time:
            d.pop("wall_time")
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SolverReport":
        return cls(**json.loads(line))

    def verify(self, inst: QuboInstance) -> bool:
        return objective(inst, np.array(self.x)) == self.best_value


@dataclass
class RunOutput:
    x: np.ndarray
    value: float
    expected: float | None
    wall_time: float
    trace_rows: list[dict]
    F: np.ndarray | None = None


def run_method(inst: QuboInstance, method: str, params: dict, seed: int) -> RunOutput:
    """Run one solver. Wall time covers the solver call only."""
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        raise UsageError("solvers need a plus_minus_one instance")
    p = resolve_params(method, params)
    rank = p.get("rank")
    if rank is not None and not 1 <= rank <= inst.n:
        raise UsageError(f"rank {rank} must lie in [1, n={inst.n}]")
    F = None
    expected = None
    try:
        t0 = time.perf_counter()
        if method == "dem-rc":
            F, rr, tr = dem_rc(inst, DemRcParams(rank=p["rank"], steps=p["steps"],
                                                 rounds=p["rounds"], eta=p["eta"], eps=p["eps"],
                                                 seed=seed, scale_step=p["scale_step"]))
            x, v = rr.best_x, rr.best_value
            rows = [dict(iteration=i, phi=f, grad_norm=g) for i, f, g, _ in tr.rows()]
        elif method == "dem-exact":
            F0 = random_factor(inst.n, p["rank"], np.random.default_rng(seed))
            F, tr = exact_dem(inst, F0, eta=p["eta"], tol=p["tol"], max_iter=p["steps"],
                              backtracking=p["backtracking"], seed=seed)
            rr = gw_round(inst, F, p["rounds"], seed)
            x, v = rr.best_x, rr.best_value
            rows = [dict(iteration=i, phi=f, direction_norm=g) for i, f, g, _ in tr.rows()]
        elif method == "sa":
            x, v, tr = bl.simulated_annealing(inst, bl.SaParams(p["T0"], p["alpha"], p["sweeps"], seed))
            rows = tr.rows()
        elif method == "tabu":
            x, v, tr = bl.tabu_search(inst, bl.TabuParams(p["tenure"], p["iterations"], seed))
            rows = tr.rows()
        elif method == "sb":
            x, v, tr = bl.simulated_bifurcation(inst, bl.SbParams(
                lam=p["lam"], gamma=p["gamma"], dt=p["dt"], steps=p["steps"],
                mu_start=p["mu_start"], mu_end=p["mu_end"], init_scale=p["init_scale"], seed=seed))
            rows = tr.rows()
        elif method == "burer2":
            x, v, tr = bl.burer2(inst, p["restarts"], seed, max_iter=p["steps"])
            F = tr.info["F"]
            rows = tr.rows()
        else:
            x, v, tr = bl.gw_sdp_surrogate(inst, p["rank"], p["steps"], p["rounds"], seed)
            F = tr.info["F"]
            rows = tr.rows()
        wall = time.perf_counter() - t0
    except (DemError, SubproblemError, DCError, FloatingPointError) as exc:
        raise SolverFailure(f"{method} failed: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"{method}: {exc}") from exc
    if F is not None:
        expected = expected_value(inst, F)
    x = np.asarray(x, dtype=np.int8)
    value = objective(inst, x)
    return RunOutput(x, value, expected, wall, rows, F)


def make_report(inst: QuboInstance, method: str, params: dict, seed: int, out: RunOutput,
                trace_path: str | None = None) -> SolverReport:
    return SolverReport(method=method, instance=inst.name, best_value=out.value,
                        expected_value=out.expected, wall_time=out.wall_time, seed=seed,
                        params=resolve_params(method, params), x=[int(v) for v in out.x],
                        original_value=inst.original_value(out.value), trace=trace_path)


def write_trace(rows: list[dict], path) -> None:
    """Plain-text trace: a header line of column names, then whitespace-separated rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        if not rows:
            return
        keys = list(rows[0])
        fh.write(" ".join(keys) + "\n")
        for r in rows:
            fh.write(" ".join(_fmt(r[k]) for k in keys) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------- instances

def load_instance(spec: str) -> QuboInstance:
    """``random:N:SEED``, ``subset-sum:w1,w2,...``, ``maxcut:PATH`` or an instance file.

    Subset-sum weights may also be separated by ``/`` so they survive the
    comma-separated ``instances`` list of a bench config.
    """
    try:
        if spec.startswith("random:"):
            _, n, s = spec.split(":")
            return gen_random_gaussian(int(n), int(s))
        if spec.startswith("subset-sum:"):
            w = [float(t) for t in re.split(r"[,/]", spec.split(":", 1)[1])]
            return from_subset_sum(w)
        if spec.startswith("maxcut:"):
            path = spec.split(":", 1)[1]
            return from_maxcut(read_maxcut_edges(path), name=Path(path).stem)
    except ValueError as exc:
        if isinstance(exc, InstanceFormatError):
            raise InputDataError(str(exc)) from exc
        raise UsageError(f"bad instance spec {spec!r}: {exc}") from exc
    except OSError as exc:
        raise InputDataError(f"cannot read {spec!r}: {exc}") from exc
    try:
        inst = read_instance(spec)
    except OSError as exc:
        raise InputDataError(f"cannot read {spec!r}: {exc}") from exc
    except ValueError as exc:
        raise InputDataError(f"{spec}: {exc}") from exc
    if inst.convention is not Convention.PLUS_MINUS_ONE:
        inst = to_plus_minus_one(inst)
    if not inst.name:
        inst = QuboInstance(inst.Q, inst.convention, inst.linear, Path(spec).stem, inst.metadata)
    return inst


def cmd_gen(kind: str, out, n: int | None = None, seed: int = 0, source: str | None = None,
            weights: list[float] | None = None) -> QuboInstance:
    if kind == "random":
        if n is None or n < 1:
            raise UsageError("gen random needs n >= 1")
        inst = gen_random_gaussian(n, seed)
    elif kind == "maxcut":
        if not source:
            raise UsageError("gen maxcut needs an edge-list file")
        try:
            inst = from_maxcut(read_maxcut_edges(source), name=Path(source).stem)
        except OSError as exc:
            raise InputDataError(f"cannot read {source!r}: {exc}") from exc
        except ValueError as exc:
            raise InputDataError(f"{source}: {exc}") from exc
    elif kind == "subset-sum":
        if not weights:
            raise UsageError("gen subset-sum needs weights")
        inst = from_subset_sum(weights)
    else:
        raise UsageError(f"unknown generator {kind!r}")
    write_instance(inst, out)
    return inst


# ---------------------------------------------------------------- bench

@dataclass
class BenchConfig:
    instances: list[str]
    methods: list[str]
    seeds: list[int] = field(default_factory=lambda: [0])
    params: dict[str, dict[str, Any]] = field(default_factory=dict)
    rounds: int | None = None
    out: str = "bench_out"
    gap: bool = True

    def __post_init__(self):
        if not self.instances or not self.methods:
            raise UsageError("bench needs at least one instance and one method")
        for m in self.methods:
            if m not in METHODS:
                raise UsageError(f"unknown method {m!r}")
            resolve_params(m, self.params.get(m))
        if not self.seeds:
            raise UsageError("bench needs at least one seed")

    def method_params(self, method: str) -> dict:
        p = dict(self.params.get(method, {}))
        if self.rounds is not None and "rounds" in PARAMS[method]:
            p.setdefault("rounds", self.rounds)
        return p


def parse_kv(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"config line {lineno}: empty key")
        if key in out:
            raise UsageError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _split(v: str) -> list[str]:
    return [t.strip() for t in v.split(",") if t.strip()]


def method_overrides(kv: dict[str, str]) -> dict[str, dict[str, str]]:
    """Collect ``method.param = value`` keys."""
    out: dict[str, dict[str, str]] = {}
    for key, val in kv.items():
        if "." in key:
            m, p = key.split(".", 1)
            if m not in METHODS:
                raise UsageError(f"config key {key!r}: unknown method {m!r}")
            out.setdefault(m, {})[p] = val
    return out


def config_from_kv(kv: dict[str, str]) -> BenchConfig:
    known = {"instances", "methods", "seeds", "rounds", "out", "gap"}
    for key in kv:
        if "." not in key and key not in known:
            raise UsageError(f"unknown config key {key!r}")
    try:
        return BenchConfig(
            instances=_split(kv.get("instances", "")),
            methods=_split(kv.get("methods", "")),
            seeds=[int(s) for s in _split(kv.get("seeds", "0"))],
            params=method_overrides(kv),
            rounds=int(kv["rounds"]) if "rounds" in kv else None,
            out=kv.get("out", "bench_out"),
            gap=_bool(kv.get("gap", "true")),
        )
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad config value: {exc}") from exc


CSV_FIELDS = ["kind", "instance", "n", "method", "seed", "best_value", "expected_value",
              "original_value", "optimum", "gap", "wall_time", "status", "error"]


def _gap(value: float, opt: float | None) -> float | None:
    if opt is None:
        return None
    return (value - opt) / abs(opt) if opt != 0 else value - opt


def cmd_bench(cfg: BenchConfig) -> list[dict]:
    """Run every (instance, method, seed) cell; failures become rows with status=error.

    Writes ``results.csv``, ``reports.jsonl`` and ``traces/`` under ``cfg.out``
    and returns the CSV rows.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    insts = [load_instance(s) for s in cfg.instances]
    names = [i.name for i in insts]
    if len(set(names)) != len(names):
        raise UsageError(f"instance names must be distinct: {names}")
    rows: list[dict] = []
    reports = []
    for inst in insts:
        opt = None
        if cfg.gap and inst.n <= GAP_MAX_N:
            opt = brute_force(inst)[1]
        for method in cfg.methods:
            params = cfg.method_params(method)
            cell = []
            for s in cfg.seeds:
                seed = cell_seed(s, inst.name, method)
                row = dict(kind="run", instance=inst.name, n=inst.n, method=method, seed=s,
                           best_value=None, expected_value=None, original_value=None,
                           optimum=opt, gap=None, wall_time=None, status="ok", error="")
                try:
                    res = run_method(inst, method, params, seed)
                except (UsageError, SolverFailure) as exc:
                    row.update(status="error", error=str(exc))
                    rows.append(row)
                    continue
                tpath = out / "traces" / f"{inst.name}__{method}__{s}.txt"
                write_trace(res.trace_rows, tpath)
                rep = make_report(inst, method, params, seed, res, str(tpath.relative_to(out)))
                reports.append(rep)
                row.update(best_value=res.value, expected_value=res.expected,
                           original_value=rep.original_value, gap=_gap(res.value, opt),
                           wall_time=res.wall_time)
                rows.append(row)
                cell.append(row)
            for kind, agg in (("best", min), ("median", statistics.median)):
                arow = dict(kind=kind, instance=inst.name, n=inst.n, method=method, seed=None,
                            best_value=None, expected_value=None, original_value=None,
                            optimum=opt, gap=None, wall_time=None,
                            status="ok" if cell else "error", error="")
                if cell:
                    v = agg([r["best_value"] for r in cell])
                    arow.update(best_value=v, original_value=inst.original_value(v),
                                gap=_gap(v, opt),
                                wall_time=agg([r["wall_time"] for r in cell]))
                rows.append(arow)
    write_csv(rows, out / "results.csv")
    with open(out / "reports.jsonl", "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(rep.to_json() + "\n")
    return rows


def write_csv(rows: list[dict], path, fields: list[str] = CSV_FIELDS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_cell(r.get(k)) for k in fields})


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def read_results(path) -> list[dict]:
    """Parse ``results.csv`` back into typed rows."""
    ints = {"n", "seed"}
    floats = {"best_value", "expected_value", "original_value", "optimum", "gap", "wall_time"}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            row = {}
            for k, v in r.items():
                if k in ints:
                    row[k] = int(v) if v != "" else None
                elif k in floats:
                    row[k] = float(v) if v != "" else None
                else:
                    row[k] = v
            out.append(row)
    return out


# ---------------------------------------------------------------- rank sweep

RANK_FIELDS = ["rank", "method", "seed", "expected_phi", "best_rounded", "wall_time"]


def cmd_rank_sweep(inst: QuboInstance, ranks: list[int], params: dict[str, dict] | None = None,
                   seed: int = 0, methods=("dem-rc", "dem-exact"), out=None) -> list[dict]:
    if not ranks:
        raise UsageError("rank sweep needs at least one rank")
    for r in ranks:
        if not 1 <= r <= inst.n:
            raise UsageError(f"rank {r} must lie in [1, n={inst.n}]")
    params = params or {}
    rows = []
    for r in ranks:
        for m in methods:
            p = dict(params.get(m, {}), rank=r)
            res = run_method(inst, m, p, seed)
            rows.append(dict(rank=r, method=m, seed=seed, expected_phi=res.expected,
                             best_rounded=res.value, wall_time=res.wall_time))
    if out is not None:
        write_csv(rows, out, RANK_FIELDS)
    return rows


# ---------------------------------------------------------------- distribution

@dataclass
class Distribution:
    method: str
    instance: str
    trials: int
    values: np.ndarray
    mean: float
    std: float
    single_trial: bool
    expected_value: float
    edges: np.ndarray
    counts: np.ndarray

    def summary(self) -> dict:
        return dict(method=self.method, instance=self.instance, trials=self.trials,
                    mean=self.mean, std=self.std, single_trial=self.single_trial,
                    expected_value=self.expected_value,
                    standard_error=self.std / math.sqrt(self.trials))


def cmd_distribution(inst: QuboInstance, method: str, trials: int, params: dict | None = None,
                     seed: int = 0, bins: int = 30, out_dir=None) -> Distribution:
    """Round the method's factor ``trials`` times and histogram the values."""
    if method not in FACTOR_METHODS:
        raise UsageError(f"distribution needs a factor-producing method ({', '.join(FACTOR_METHODS)})")
    if trials < 1:
        raise UsageError("trials must be >= 1")
    res = run_method(inst, method, params or {}, seed)
    rr = gw_round(inst, res.F, trials, seed)
    vals = rr.trial_values
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    dist = Distribution(method, inst.name, trials, vals, rr.mean, rr.std, trials == 1,
                        expected_value(inst, res.F), edges, counts)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        stem = f"{inst.name}__{method}"
        with open(d / f"{stem}__trials.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "value"])
            w.writerows((i, repr(float(v))) for i, v in enumerate(vals))
        with open(d / f"{stem}__hist.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_lo", "bin_hi", "count"])
            w.writerows((repr(float(a)), repr(float(b)), int(c))
                        for a, b, c in zip(edges[:-1], edges[1:], counts))
        with open(d / f"{stem}__summary.json", "w", encoding="utf-8") as fh:
            json.dump(dist.summary(), fh, sort_keys=True, indent=1)
    return dist
