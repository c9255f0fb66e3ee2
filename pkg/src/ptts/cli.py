"""Command-line entry point: ``ptts simulate|attack|sweep|oracle-check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from . import attack as A
from .flow import FlowNetwork, Infeasible, check_optimality, dump_dimacs, solve_min_cost_flow
from .oracle import OracleLimits, brute_force_min_cost, brute_force_range
from .scenario import DEFAULT_SUPPLY, Scenario, generate_scenario, replay_on_ledger, save_json, select_leaked

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

SUMMARY_HEADER = ["n_addresses", "n_transactions", "leakage_ratio", "runs", "avg_goodness", "avg_solve_time_s"]
DETAIL_HEADER = [
    "n_addresses",
    "n_transactions",
    "leakage_ratio",
    "run",
    "seed",
    "target",
    "min",
    "max",
    "goodness",
    "true_balance",
    "in_range",
    "solve_time_s",
]


class UsageError(Exception):
    pass


@dataclass
class SweepConfig:
    address_counts: list[int]
    transaction_counts: list[int]
    leakage_ratios: list[float]
    runs: int = 20
    base_seed: int = 0
    output_path: str = "sweep.csv"

    def __post_init__(self) -> None:
        if not (self.address_counts and self.transaction_counts and self.leakage_ratios):
            raise UsageError("sweep lists must be non-empty")
        if self.runs < 1:
            raise UsageError("--runs must be at least 1")


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PTTS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"PTTS_SEED is not an integer: {env!r}") from None


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"leakage ratio must be in [0, 1]: {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _fmt2(x) -> str:
    return f"{float(x):.2f}"


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.addresses < 2:
        raise UsageError("--addresses must be at least 2")
    if args.transactions < 0 or args.supply < 1:
        raise UsageError("--transactions must be >= 0 and --supply >= 1")
    seed = _seed(args)
    s = generate_scenario(args.addresses, args.transactions, args.supply, seed)
    try:
        _, transcript = replay_on_ledger(s)
    except Exception as exc:  # any protocol failure is a bug in the generator or ledger
        print(f"protocol replay failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(args.out or f"scenario_{seed}.json")
    transcript_path = out.with_name(out.stem + ".transcript.json")
    save_json(out, s.to_json())
    save_json(transcript_path, transcript)
    print(f"{out}\n{transcript_path}")
    return EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        raise UsageError(f"scenario file not found: {path}")
    try:
        s = Scenario.from_json(json.loads(path.read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        # overdrawn or malformed histories cannot come from an honest ledger
        print(f"inconsistent scenario: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.target not in range(s.n_addresses):
        raise UsageError(f"--target must be an address in [0, {s.n_addresses})")
    seed = _seed(args)
    leaked = select_leaked(s, args.leakage, seed)
    view = A.AttackerView.from_scenario(s, leaked)
    try:
        r = A.estimate_balance_range(view, args.target, hide_mint=args.hide_mint, certify=True)
    except A.InconsistentLeak as exc:
        print(f"inconsistent leak: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    g = A.goodness(r, s.total_supply)
    contiguous = None
    if not args.no_contiguity:
        contiguous = A.verify_contiguity(view, args.target, r, seed=seed, hide_mint=args.hide_mint)
    print("target,min,max,goodness")
    print(f"{r.target},{r.min_value},{r.max_value},{_fmt2(g)}")
    report = {
        "target": r.target,
        "min": r.min_value,
        "max": r.max_value,
        "goodness": _fmt2(g),
        "leakage_ratio": args.leakage,
        "leaked_transfers": len(leaked.indices),
        "seed": seed,
        "hide_mint": args.hide_mint,
        "contiguous": contiguous,
    }
    save_json(Path(args.out or path.with_name(path.stem + ".attack.json")), report)
    if contiguous is False:
        print("contiguity check failed", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def run_sweep(cfg: SweepConfig, *, supply: int = DEFAULT_SUPPLY, jobs: int = 1, hide_mint: bool = False):
    reports = []
    for n in cfg.address_counts:
        for m in cfg.transaction_counts:
            for ratio in cfg.leakage_ratios:
                reports.append(
                    A.run_experiment(
                        n, m, ratio, cfg.runs, cfg.base_seed, total_supply=supply, hide_mint=hide_mint, jobs=jobs
                    )
                )
    return reports


def write_sweep_csv(reports, summary: io.TextIOBase, detail: io.TextIOBase | None = None) -> None:
    w = csv.writer(summary, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for rep in reports:
        w.writerow(
            [
                rep.n_addresses,
                rep.n_transactions,
                rep.leakage_ratio,
                rep.runs,
                _fmt2(rep.avg_goodness),
                _fmt2(rep.avg_solve_time_seconds),
            ]
        )
    if detail is None:
        return
    d = csv.writer(detail, lineterminator="\n")
    d.writerow(DETAIL_HEADER)
    for rep in reports:
        for row in rep.rows:
            d.writerow(
                [
                    rep.n_addresses,
                    rep.n_transactions,
                    rep.leakage_ratio,
                    row.run,
                    row.seed,
                    row.target,
                    row.min_value,
                    row.max_value,
                    _fmt2(row.goodness),
                    row.true_balance,
                    row.in_range,
                    _fmt2(row.solve_time_s),
                ]
            )


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = SweepConfig(args.addresses, args.transactions, args.leakage, args.runs, _seed(args), args.out)
    if any(n < 2 for n in cfg.address_counts):
        raise UsageError("--addresses values must be at least 2")
    try:
        reports = run_sweep(cfg, supply=args.supply, jobs=args.jobs, hide_mint=args.hide_mint)
    except A.SoundnessViolation as exc:
        print(f"soundness violation: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(cfg.output_path)
    detail_path = out.with_name(out.stem + "_runs" + (out.suffix or ".csv"))
    try:
        with open(out, "w", newline="") as fh, open(detail_path, "w", newline="") as dh:
            write_sweep_csv(reports, fh, dh)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    write_sweep_csv(reports, sys.stdout)
    return EXIT_OK


def random_flow_network(rng: random.Random) -> FlowNetwork:
    """A small random network with lower bounds, signed costs and few free edges."""
    nodes = rng.randint(2, 5)
    net = FlowNetwork(nodes, [0] * nodes)
    free = 0
    for _ in range(rng.randint(1, 7)):
        u, v = rng.sample(range(nodes), 2)
        lo = rng.randint(0, 4)
        hi = lo + (rng.randint(0, 6) if free < 5 else 0)
        free += hi > lo
        net.add_edge(u, v, lo, hi, rng.randint(-3, 3))
    # supplies from a random admissible flow, occasionally perturbed into infeasibility
    for e in net.edges:
        x = rng.randint(e.lower, e.upper)
        net.supplies[e.tail] += x
        net.supplies[e.head] -= x
    if rng.random() < 0.2:
        a, b = rng.sample(range(nodes), 2)
        k = rng.randint(1, 8)
        net.supplies[a] += k
        net.supplies[b] -= k
    return net


def random_view(rng: random.Random) -> A.AttackerView:
    """A tiny generated scenario seen through a random leak."""
    while True:
        s = generate_scenario(rng.randint(2, 4), rng.randint(0, 3), rng.randint(2, 12), rng.getrandbits(32))
        leaked = select_leaked(s, rng.choice([0.0, 0.34, 0.5, 0.67, 1.0]), rng.getrandbits(32))
        view = A.AttackerView.from_scenario(s, leaked)
        unleaked = len(s.transfers) - len(leaked.indices)
        if unleaked + s.n_addresses <= OracleLimits().max_free_edges:
            return view


def oracle_check(instances: int, seed: int, solver=None, out=None) -> int:
    """Compare solver and oracle on random instances; returns the mismatch count."""
    solver = solver or solve_min_cost_flow
    out = out or sys.stderr
    rng = random.Random(seed)
    mismatches = 0
    for i in range(instances):
        net = random_flow_network(rng)
        expected = brute_force_min_cost(net)
        got = solver(net)
        ok = (
            isinstance(got, Infeasible)
            if isinstance(expected, Infeasible)
            else not isinstance(got, Infeasible) and got.objective == expected and check_optimality(net, got)
        )
        view = random_view(rng)
        target = rng.choice(view.addresses)
        want = brute_force_range(view, target)
        nets = [A.build_attack_network(view, target, sign) for sign in (-1, 1)]
        sols = [solver(n) for n, _ in nets]
        if any(isinstance(s, Infeasible) for s in sols):
            ok = False
        else:
            edge = nets[0][1]
            got_range = (sols[1].flows[edge], sols[0].flows[edge])
            ok = ok and got_range == (want.min_value, want.max_value)
            ok = ok and all(check_optimality(n, s) for (n, _), s in zip(nets, sols))
        if not ok:
            mismatches += 1
            print(f"mismatch on instance {i}:", file=out)
            dump_dimacs(net, out)
            print(f"c attack view: {json.dumps(view.to_json())} target {target}", file=out)
    return mismatches


def cmd_oracle_check(args: argparse.Namespace) -> int:
    bad = oracle_check(args.instances, _seed(args))
    print(f"{args.instances - bad}/{args.instances} instances agree")
    return EXIT_FAILURE if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptts", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $PTTS_SEED, then 0)")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("simulate", help="generate a scenario and replay it through the ledger")
    p.add_argument("--addresses", type=int, required=True)
    p.add_argument("--transactions", type=int, required=True)
    p.add_argument("--supply", type=int, default=DEFAULT_SUPPLY)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attack", help="estimate one address's balance range")
    p.add_argument("--scenario", required=True)
    p.add_argument("--leakage", type=_ratio, default=0.5)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--no-contiguity", action="store_true")
    p.add_argument("--hide-mint", action="store_true", help="treat the initial mint as unknown")
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="average goodness over a grid of configurations")
    p.add_argument("--addresses", type=int, nargs="+", required=True)
    p.add_argument("--transactions", type=int, nargs="+", required=True)
    p.add_argument("--leakage", type=_ratio, nargs="+", default=[0.5])
    p.add_argument("--supply", type=int, default=DEFAULT_SUPPLY)
    p.add_argument("--runs", type=_positive, default=20)
    p.add_argument("--jobs", type=_positive, default=os.cpu_count() or 1)
    p.add_argument("--hide-mint", action="store_true")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="cross-check the solver against brute force")
    p.add_argument("--instances", type=_positive, default=50)
    common(p)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.out is None:
        args.out = "sweep.csv"
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
