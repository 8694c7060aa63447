"""Best value and wall time per solver on random instances of growing size."""
import argparse
import csv
from dataclasses import dataclass

from demqubo import bench
from demqubo.qubo import gen_random_gaussian


@dataclass
class Config:
    sizes: tuple[int, ...] = (50, 100, 200)
    methods: tuple[str, ...] = ("dem-rc", "sa", "tabu", "sb", "burer2", "gw-sdp-surrogate")
    seeds: int = 3
    out: str = "size_scaling.csv"


def main(cfg: Config) -> None:
    rows = []
    for n in cfg.sizes:
        inst = gen_random_gaussian(n, 0)
        for m in cfg.methods:
            runs = [bench.run_method(inst, m, {}, s) for s in range(cfg.seeds)]
            row = {"n": n, "method": m, "best": min(r.value for r in runs),
                   "median_time": sorted(r.wall_time for r in runs)[len(runs) // 2]}
            rows.append(row)
            print(f"n={n:4d} {m:18s} best {row['best']:12.3f}  median {row['median_time']:.3f}s")
    with open(cfg.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default=",".join(map(str, Config.sizes)))
    ap.add_argument("--methods", default=",".join(Config.methods))
    ap.add_argument("--seeds", type=int, default=Config.seeds)
    ap.add_argument("--out", default=Config.out)
    a = ap.parse_args()
    main(Config(tuple(int(s) for s in a.sizes.split(",")), tuple(a.methods.split(",")), a.seeds, a.out))
