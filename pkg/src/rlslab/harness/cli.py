"""Command line entry point: ``rlslab {run,sweep,oracle,couple,bounds,validate}``."""

from __future__ import annotations

import argparse
import sys

from .. import bounds, oracle
from ..adversary import dominance_experiment, parse_schedule
from ..engine import MARKERS, ProtocolVariant
from ..sampling import RngStream
from . import checks
from .experiment import ExperimentSpec, emit, load_spec, run_batch, scaling_fit
from .scenarios import RANDOM_SCENARIOS, scenario


def _num(text: str) -> int:
    # accepts 1e6 style counts
    return int(float(text))


def _ints(text: str) -> list[int]:
    return [_num(x) for x in text.split(",") if x.strip()]


def _add_batch_args(p, sweep: bool):
    p.add_argument("--spec", help="key = value experiment file; flags override it")
    p.add_argument("--scenario")
    p.add_argument("--n", help="bins" + (", comma separated" if sweep else ""))
    p.add_argument("--m", help="balls; integer or n^k, k*n, n*k, n/k" + (", comma separated" if sweep else ""))
    p.add_argument("--pair", action="store_const", const=True, default=None,
                   help="zip the n and m lists instead of taking all combinations")
    p.add_argument("--file", dest="scenario_file", help="configuration file for from_file")
    p.add_argument("--variant", choices=[v.value for v in ProtocolVariant])
    p.add_argument("--schedule", help="adversary: none, revert, pileup:S, random:P, script:PATH")
    p.add_argument("--runs", type=_num)
    p.add_argument("--seed", type=int)
    p.add_argument("--stop", choices=MARKERS)
    p.add_argument("--max-events", dest="max_events", type=_num)
    p.add_argument("--max-clock", dest="max_clock", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "jsonl"])
    if sweep:
        p.add_argument("--fit", action="store_true", help="fit mean T = a + b ln n over n")
        p.add_argument("--min-r2", type=float, default=None, help="fail if the fit R^2 is lower")


_SPEC_KEYS = ("scenario", "n", "m", "pair", "scenario_file", "variant", "schedule", "runs", "seed",
              "stop", "max_events", "max_clock", "threads", "out", "format")


def _spec_from(args) -> ExperimentSpec:
    over = {k: getattr(args, k) for k in _SPEC_KEYS if getattr(args, k, None) is not None}
    if args.spec:
        return load_spec(args.spec, **over)
    return ExperimentSpec(**over)


def _print_summary(summary, stop):
    for (scn, n, m, variant), s in summary.items():
        st = s[stop]
        line = f"{scn} n={n} m={m} {variant}: runs={s['runs']} truncated={s['truncated']}"
        if st.get("count"):
            line += (f" T_{stop} mean={st['mean']:.6g} se={st['se']:.3g} sd={st['sd']:.4g}"
                     f" p50={st['p50']:.4g} p95={st['p95']:.4g} p99={st['p99']:.4g}")
        print(line)


def cmd_batch(args, sweep: bool) -> int:
    spec = _spec_from(args)
    records, summary = run_batch(spec)
    _print_summary(summary, spec.stop)
    if spec.out:
        emit(records, spec.format, spec.out)
        print(f"wrote {len(records)} records to {spec.out}")
    ok = True
    if sweep and args.fit:
        rows = sorted((n, s[spec.stop]["mean"]) for (_, n, _, _), s in summary.items()
                      if s[spec.stop].get("count"))
        a, b, r2 = scaling_fit([r[0] for r in rows], [r[1] for r in rows])
        print(f"fit: T = {a:.4g} + {b:.4g} ln n, R^2 = {r2:.4f}")
        if args.min_r2 is not None and not r2 >= args.min_r2:
            print(f"FAIL: R^2 below {args.min_r2}")
            ok = False
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    chain = oracle.build_chain(args.n, args.m, args.variant, limit=args.limit)
    for s, rate, t in zip(chain.states, chain.exit_rates, chain.expected_times):
        print(f"{list(s)}  exit_rate={rate:.6g}  E[T]={t:.12g}")
    if args.out:
        oracle.export_csv(chain, args.out)
        print(f"wrote {len(chain.states)} states to {args.out}")
    return 0


def cmd_couple(args) -> int:
    stream = RngStream(args.seed)
    init = scenario(args.scenario, args.n, args.m,
                    stream.aux(1).generator() if args.scenario in RANDOM_SCENARIOS else None, args.file)
    # random schedules draw from each run's own adversary stream inside the kernel
    rep = dominance_experiment(init, parse_schedule(args.schedule), args.steps, args.runs,
                               args.seed, args.variant)
    print(f"initial={list(init.loads)} schedule={args.schedule} runs={rep.runs} "
          f"events={rep.events_checked} adversary_moves={rep.adversary_moves} "
          f"longest_chain={rep.max_chain_len}")
    print(f"closeness violations={rep.closeness_violations} disc violations={rep.disc_violations} "
          f"pair violations={rep.pair_disc_violations}")
    for f in rep.failures[:5]:
        print("failure:", f)
    print("PASS" if rep.ok else "FAIL")
    return 0 if rep.ok else 1


def cmd_bounds(args) -> int:
    wanted = checks.BOUND_KINDS + ("schedule",) if args.check == "all" else tuple(args.check.split(","))
    rng = RngStream(args.seed).generator()
    ok = True
    for kind in wanted:
        if kind == "schedule":
            res = checks.schedule_sweep(args.schedule_sets, rng)
            bad = [r for r in res if r[2]]
            print(f"schedule: {len(res)} parameter sets, {len(bad)} with violations")
            for n, avg, v in bad[:5]:
                print(f"  n={n} avg={avg:.6g}: {'; '.join(v)}")
            ok &= not bad
            continue
        res = checks.check_bound(kind, args.sets, args.samples, rng)
        bad = [r for r in res if not r.ok]
        worst = max(res, key=lambda r: r.freq / r.bound)
        print(f"{kind}: {len(res)} parameter sets, {len(bad)} failures; "
              f"largest freq/bound: freq={worst.freq:.4g} bound={worst.bound:.4g}")
        for r in bad[:5]:
            print(f"  FAIL {r.params}: freq={r.freq:.6g} se={r.se:.3g} bound={r.bound:.6g}")
        ok &= not bad
    print(f"spot values: exp_sum(1,1,10)={bounds.exp_sum_tail(1, 1, 10):.4g} "
          f"geom_sum(1/2,[1],10)={bounds.geom_sum_tail(0.5, [1], 10):.4g}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_validate(args) -> int:
    ns, ms = _ints(args.n), _ints(args.m)
    if len(ns) != len(ms):
        print("--n and --m must have the same length", file=sys.stderr)
        return 2
    ok = True
    for n, m in zip(ns, ms):
        rep = oracle.validate_simulator(n, m, args.runs, args.seed, args.variant)
        print(f"n={n} m={m}: {len(rep.rows)} states, max |z| = {rep.max_abs_z:.3f}")
        for r in rep.rows:
            flag = "" if r.ok else "  FAIL"
            print(f"  {list(r.state)} exact={r.exact:.6g} mean={r.mean:.6g} se={r.se:.3g} z={r.z:+.2f}{flag}")
        ok &= rep.ok
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlslab", description="RLS load balancing experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_batch_args(sub.add_parser("run", help="Monte Carlo batch for one (n, m)"), sweep=False)
    _add_batch_args(sub.add_parser("sweep", help="batches over n and m lists"), sweep=True)

    p = sub.add_parser("oracle", help="exact expected balancing times")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--variant", default="non-strict", choices=[v.value for v in ProtocolVariant])
    p.add_argument("--limit", type=_num, default=oracle.DEFAULT_LIMIT)
    p.add_argument("--out")

    p = sub.add_parser("couple", help="coupled plain vs adversarial runs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--scenario", default="all_in_one")
    p.add_argument("--file")
    p.add_argument("--schedule", default="random:0.3")
    p.add_argument("--steps", type=_num, default=10_000)
    p.add_argument("--runs", type=_num, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", default="non-strict", choices=[v.value for v in ProtocolVariant])

    p = sub.add_parser("bounds", help="Monte Carlo validity of the tail bounds")
    p.add_argument("--check", default="all",
                   help="all, or comma separated from " + ",".join(checks.BOUND_KINDS + ("schedule",)))
    p.add_argument("--samples", type=_num, default=10**6)
    p.add_argument("--sets", type=_num, default=50)
    p.add_argument("--schedule-sets", dest="schedule_sets", type=_num, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="simulator vs exact oracle")
    p.add_argument("--n", required=True, help="comma separated, paired with --m")
    p.add_argument("--m", required=True)
    p.add_argument("--runs", type=_num, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", default="non-strict", choices=[v.value for v in ProtocolVariant])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_batch(args, sweep=False)
        if args.command == "sweep":
            return cmd_batch(args, sweep=True)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "couple":
            return cmd_couple(args)
        if args.command == "bounds":
            return cmd_bounds(args)
        return cmd_validate(args)
    except (ValueError, OSError, oracle.OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
