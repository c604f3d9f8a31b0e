"""Exact expected balancing times for every sorted state of small (n, m), compared with simulation."""

import argparse

from rlslab.oracle import validate_simulator


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cells", default="2:4,3:6,4:8", help="n:m pairs")
    p.add_argument("--runs", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=2)
    args = p.parse_args()

    for cell in args.cells.split(","):
        n, m = (int(x) for x in cell.split(":"))
        rep = validate_simulator(n, m, args.runs, args.seed)
        print(f"n={n} m={m}: {len(rep.rows)} states, max |z| {rep.max_abs_z:.2f}, {'ok' if rep.ok else 'FAIL'}")
        for r in rep.rows:
            print(f"  {str(list(r.state)):<24} exact {r.exact:.6f}  sim {r.mean:.6f} +- {r.se:.4f}")


if __name__ == "__main__":
    main()
