"""Mean balancing time from all_in_one starts with m = n^2, fitted against ln n."""

import argparse

from rlslab.harness.experiment import ExperimentSpec, emit, run_batch, scaling_fit


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", default="16,32,64,128,256")
    p.add_argument("--m", default="n^2")
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--seed", type=int, default=4)
    p.add_argument("--stop", default="perfect")
    p.add_argument("--out", help="write per-run records (csv)")
    args = p.parse_args()

    spec = ExperimentSpec(n=args.n, m=(args.m,), runs=args.runs, seed=args.seed, stop=args.stop)
    records, summary = run_batch(spec)
    rows = sorted((n, m, s[args.stop]) for (_, n, m, _), s in summary.items())
    print(f"{'n':>6} {'m':>8} {'mean T':>10} {'se':>8} {'p95':>8}")
    for n, m, st in rows:
        print(f"{n:>6} {m:>8} {st['mean']:>10.4f} {st['se']:>8.4f} {st['p95']:>8.3f}")
    a, b, r2 = scaling_fit([r[0] for r in rows], [r[2]["mean"] for r in rows])
    print(f"fit: mean T = {a:.4f} + {b:.4f} ln n   (R^2 = {r2:.4f})")
    if args.out:
        emit(records, "csv", args.out)


if __name__ == "__main__":
    main()
