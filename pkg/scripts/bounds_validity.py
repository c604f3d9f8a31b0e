"""Monte Carlo tail frequencies against each closed-form bound, plus the phase schedule sweep."""

import argparse

from rlslab.harness.checks import BOUND_KINDS, check_bound, schedule_sweep
from rlslab.sampling import RngStream


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sets", type=int, default=50)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--schedules", type=int, default=1000)
    p.add_argument("--seed", type=int, default=9)
    args = p.parse_args()

    rng = RngStream(args.seed).generator()
    for kind in BOUND_KINDS:
        res = check_bound(kind, args.sets, args.samples, rng)
        ratios = sorted(r.freq / r.bound for r in res)
        bad = sum(not r.ok for r in res)
        print(f"{kind:>15}: {bad}/{len(res)} failures, freq/bound median {ratios[len(ratios) // 2]:.3g}, "
              f"max {ratios[-1]:.3g}")
    sweep = schedule_sweep(args.schedules, rng)
    print(f"{'schedule':>15}: {sum(bool(v) for *_, v in sweep)}/{len(sweep)} parameter sets with violations")


if __name__ == "__main__":
    main()
