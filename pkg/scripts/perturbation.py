"""Two-bin perturbation starts: simulated mean T against n/(avg+1), with the exact oracle where it is small enough."""

import argparse

from rlslab.bounds import lower_bound_times
from rlslab.harness.experiment import ExperimentSpec, run_batch
from rlslab.oracle import OracleError, exact_absorption_times


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cells", default="50:500,8:16,16:64,64:64", help="n:m pairs, n must divide m")
    p.add_argument("--runs", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    for cell in args.cells.split(","):
        n, m = (int(x) for x in cell.split(":"))
        spec = ExperimentSpec(scenario="two_bin_perturbation", n=(n,), m=(str(m),), runs=args.runs,
                              seed=args.seed)
        _, summary = run_batch(spec)
        st = next(iter(summary.values()))["perfect"]
        target = lower_bound_times(n, m)["perturbation_bound"]
        line = (f"n={n:<5} m={m:<6} mean T={st['mean']:.4f} se={st['se']:.4f} "
                f"n/(avg+1)={target:.4f} z={(st['mean'] - target) / st['se']:+.2f}")
        try:
            a = m // n
            start = tuple(sorted([a + 1, a - 1] + [a] * (n - 2), reverse=True))
            line += f" exact={float(exact_absorption_times(n, m, limit=20_000)[start]):.6f}"
        except OracleError:
            pass
        print(line)


if __name__ == "__main__":
    main()
