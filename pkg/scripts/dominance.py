"""Coupled plain vs adversarial runs over random small instances and schedules."""

import argparse

import numpy as np

from rlslab.adversary import PileUp, RandomDestructive, RevertLastSuccess, dominance_experiment
from rlslab.sampling import RngStream


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--max-m", type=int, default=24)
    p.add_argument("--seed", type=int, default=8)
    args = p.parse_args()

    rng = RngStream(args.seed).generator()
    totals = {"random": [0, 0, 0], "pileup": [0, 0, 0], "revert": [0, 0, 0]}
    longest = 1
    for r in range(args.runs):
        n = int(rng.integers(2, args.max_n + 1))
        m = int(rng.integers(1, args.max_m + 1))
        loads = np.bincount(rng.integers(0, n, m), minlength=n)
        sched = [RandomDestructive(float(rng.uniform(0.02, 0.6))), PileUp(int(rng.integers(1, 30))),
                 RevertLastSuccess()][r % 3]
        rep = dominance_experiment(loads, sched, args.steps, 1, seed=r)
        t = totals[sched.name]
        t[0] += rep.events_checked
        t[1] += rep.adversary_moves
        t[2] += not rep.ok
        longest = max(longest, rep.max_chain_len)
        for f in rep.failures[:1]:
            print("failure:", f)
    for name, (ev, mv, bad) in totals.items():
        print(f"{name:>7}: {ev} steps, {mv} destructive moves, {bad} violating runs")
    print(f"longest coupling chain: {longest}")


if __name__ == "__main__":
    main()
