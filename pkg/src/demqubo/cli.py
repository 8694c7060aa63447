"""``demqubo`` command line. Exit codes: 0 ok, 2 usage, 3 input data, 4 solver failure."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .bench import InputDataError, SolverFailure, UsageError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3, 4

# shared flags that map onto method parameters of the same name
PARAM_FLAGS = ("rank", "steps", "rounds", "eta", "eps")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputDataError(f"cannot read config {path!r}: {exc}") from exc
    return bench.parse_kv(text)


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _method_params(args, method: str) -> dict:
    """Config-file ``method.param`` keys, then ``--param``, then the shared flags."""
    params: dict = {}
    if getattr(args, "config", None):
        kv = _read_config(args.config)
        params.update(bench.method_overrides(kv).get(method, {}))
    for item in getattr(args, "param", None) or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    spec = bench.PARAMS[method]
    for flag in PARAM_FLAGS:
        val = getattr(args, flag, None)
        if val is None:
            continue
        if flag not in spec:
            raise UsageError(f"--{flag} does not apply to method {method}")
        params[flag] = val
    return params


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rank", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="any other method parameter")
    p.add_argument("--config", help="flat key = value file; method.param keys apply")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="demqubo", description="QUBO solvers and benchmark harness")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("kind", choices=["random", "maxcut", "subset-sum"])
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--edges", help="edge-list file for maxcut")
    g.add_argument("--weights", help="comma-separated weights for subset-sum")
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one method on one instance")
    s.add_argument("instance", help="instance file or random:N:SEED / subset-sum:W,.. / maxcut:PATH")
    s.add_argument("--method", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="JSON-lines report file (overwritten)")
    s.add_argument("--trace", help="write the run trace here")
    _add_param_flags(s)

    b = sub.add_parser("bench", help="run a benchmark grid from a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--out", help="output directory (overrides the config)")
    b.add_argument("--seed", type=int, action="append",
                   help="seed list override; repeat the flag for several seeds")
    b.add_argument("--rounds", type=int)

    r = sub.add_parser("rank-sweep", help="DEM quality as a function of rank")
    r.add_argument("instance")
    r.add_argument("--ranks", required=True, help="comma-separated ranks")
    r.add_argument("--methods", default="dem-rc,dem-exact")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", help="CSV path")
    _add_param_flags(r)

    d = sub.add_parser("distribution", help="rounded-value distribution of a factor method")
    d.add_argument("instance")
    d.add_argument("--method", required=True)
    d.add_argument("--trials", type=int, default=10000)
    d.add_argument("--bins", type=int, default=30)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", help="output directory")
    _add_param_flags(d)
    return ap


def _gen(args) -> int:
    weights = None
    if args.weights:
        try:
            weights = [float(t) for t in args.weights.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad weights {args.weights!r}") from exc
    inst = bench.cmd_gen(args.kind, args.out, n=args.n, seed=args.seed, source=args.edges,
                         weights=weights)
    print(f"wrote {args.out} ({inst.convention.value}, n={inst.n})")
    return EXIT_OK


def _check_method(method: str) -> None:
    if method not in bench.METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(bench.METHODS)}")


def _solve(args) -> int:
    _check_method(args.method)
    inst = bench.load_instance(args.instance)
    params = _method_params(args, args.method)
    res = bench.run_method(inst, args.method, params, args.seed)
    if args.trace:
        bench.write_trace(res.trace_rows, args.trace)
    rep = bench.make_report(inst, args.method, params, args.seed, res, args.trace)
    line = rep.to_json()
    print(line)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    return EXIT_OK


def _bench(args) -> int:
    kv = _read_config(args.config)
    if args.out:
        kv["out"] = args.out
    if args.seed:
        kv["seeds"] = ",".join(str(s) for s in args.seed)
    if args.rounds is not None:
        kv["rounds"] = str(args.rounds)
    cfg = bench.config_from_kv(kv)
    rows = bench.cmd_bench(cfg)
    failed = sum(r["kind"] == "run" and r["status"] != "ok" for r in rows)
    print(f"wrote {Path(cfg.out) / 'results.csv'} ({len(rows)} rows, {failed} failed runs)")
    return EXIT_OK


def _rank_sweep(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        _check_method(m)
        if m not in ("dem-rc", "dem-exact"):
            raise UsageError("rank-sweep supports dem-rc and dem-exact")
    if args.rank is not None:
        raise UsageError("use --ranks for rank-sweep")
    inst = bench.load_instance(args.instance)
    params = {m: _method_params(args, m) for m in methods}
    rows = bench.cmd_rank_sweep(inst, _ints(args.ranks), params, args.seed, methods, args.out)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    return EXIT_OK


def _distribution(args) -> int:
    _check_method(args.method)
    inst = bench.load_instance(args.instance)
    params = _method_params(args, args.method)
    dist = bench.cmd_distribution(inst, args.method, args.trials, params, args.seed,
                                  args.bins, args.out)
    print(json.dumps(dist.summary(), sort_keys=True))
    return EXIT_OK


COMMANDS = {"gen": _gen, "solve": _solve, "bench": _bench, "rank-sweep": _rank_sweep,
            "distribution": _distribution}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"demqubo: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputDataError as exc:
        print(f"demqubo: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailure as exc:
        print(f"demqubo: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
