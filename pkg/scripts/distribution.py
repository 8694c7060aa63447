"""Histogram of rounded values for a factor-producing method."""
import argparse

from demqubo import bench


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("instance", nargs="?", default="random:100:0")
    ap.add_argument("--method", default="dem-rc", choices=bench.FACTOR_METHODS)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--bins", type=int, default=40)
    ap.add_argument("--out", default="distribution_out")
    a = ap.parse_args()
    d = bench.cmd_distribution(bench.load_instance(a.instance), a.method, a.trials,
                               bins=a.bins, out_dir=a.out)
    print(f"mean {d.mean:.3f}  expected {d.expected_value:.3f}  std {d.std:.3f}  best {d.values.min():.3f}")


if __name__ == "__main__":
    main()
