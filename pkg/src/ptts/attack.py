"""Balance-range attack: bound one address's balance from partially leaked amounts.

Tokens flow from a source S through a mint edge to the deployer, along one
edge per transfer, and out through one balance edge per address into a sink
T. Leaked transfers are pinned to their amount; the rest may carry anything
in ``[0, total_supply]``. Pricing the target's balance edge at -1 (resp. +1)
and solving for minimum cost gives its largest (resp. smallest) feasible
balance.
"""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .flow import FlowNetwork, Infeasible, check_optimality, is_feasible, solve_min_cost_flow
from .scenario import LeakedSet, Scenario, generate_scenario, select_leaked

log = logging.getLogger(__name__)

SOURCE, SINK = 0, 1
DEFAULT_PROBES = 9


class InconsistentLeak(ValueError):
    """The leaked amounts admit no flow at all."""


class SoundnessViolation(AssertionError):
    """A true balance fell outside its estimated range."""


@dataclass(frozen=True)
class TransferEdge:
    index: int
    sender: int
    receiver: int


@dataclass
class AttackerView:
    addresses: list[int]
    deployer: int
    total_supply: int
    transfers: list[TransferEdge]
    leaked_amounts: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_scenario(cls, s: Scenario, leaked: LeakedSet) -> AttackerView:
        amounts = {t.index: t.amount for t in s.transfers if t.index in leaked.indices}
        topology = [TransferEdge(t.index, t.sender, t.receiver) for t in s.transfers]
        return cls(s.addresses, s.deployer, s.total_supply, topology, amounts)

    def to_json(self) -> dict[str, Any]:
        return {
            "n_addresses": len(self.addresses),
            "addresses": list(self.addresses),
            "deployer": self.deployer,
            "total_supply": self.total_supply,
            "transfers": [
                {
                    "index": t.index,
                    "from": t.sender,
                    "to": t.receiver,
                    "amount": self.leaked_amounts.get(t.index),
                }
                for t in self.transfers
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> AttackerView:
        addresses = data.get("addresses") or list(range(int(data["n_addresses"])))
        topology, amounts = [], {}
        for t in data["transfers"]:
            topology.append(TransferEdge(int(t["index"]), int(t["from"]), int(t["to"])))
            if t.get("amount") is not None:
                amounts[int(t["index"])] = int(t["amount"])
        return cls(list(addresses), int(data.get("deployer", 0)), int(data["total_supply"]), topology, amounts)


@dataclass(frozen=True)
class BalanceRange:
    target: int
    min_value: int
    max_value: int

    def __post_init__(self) -> None:
        if self.min_value > self.max_value:
            raise ValueError(f"empty range [{self.min_value}, {self.max_value}]")

    def __contains__(self, value: int) -> bool:
        return self.min_value <= value <= self.max_value


def _node_index(v: AttackerView) -> dict[int, int]:
    return {a: i + 2 for i, a in enumerate(v.addresses)}


def build_attack_network(
    v: AttackerView,
    target: int,
    sign: int,
    *,
    hide_mint: bool = False,
    pinned: int | None = None,
) -> tuple[FlowNetwork, int]:
    """Build the two-terminal network for ``target``.

    Returns the network and the index of the target's balance edge.
    ``pinned`` forces that edge to carry exactly the given amount.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    node = _node_index(v)
    if target not in node:
        raise KeyError(f"unknown target address {target}")
    supply = v.total_supply
    supplies = [0] * (len(node) + 2)
    supplies[SOURCE] = supply
    supplies[SINK] = -supply
    net = FlowNetwork(len(supplies), supplies)
    net.add_edge(SOURCE, node[v.deployer], 0 if hide_mint else supply, supply)
    for t in v.transfers:
        amount = v.leaked_amounts.get(t.index)
        lo, hi = (0, supply) if amount is None else (amount, amount)
        net.add_edge(node[t.sender], node[t.receiver], lo, hi)
    target_edge = -1
    for a in v.addresses:
        if a == target:
            lo, hi = (0, supply) if pinned is None else (pinned, pinned)
            target_edge = net.add_edge(node[a], SINK, lo, hi, sign)
        else:
            net.add_edge(node[a], SINK, 0, supply)
    return net, target_edge


def _solve_edge(net: FlowNetwork, edge: int, certify: bool) -> int:
    sol = solve_min_cost_flow(net)
    if isinstance(sol, Infeasible):
        raise InconsistentLeak("leaked amounts admit no feasible flow")
    if certify and not check_optimality(net, sol):
        raise RuntimeError("solver returned a solution that fails its optimality certificate")
    return sol.flows[edge]


def estimate_balance_range(
    v: AttackerView, target: int, *, hide_mint: bool = False, certify: bool = False
) -> BalanceRange:
    hi_net, edge = build_attack_network(v, target, -1, hide_mint=hide_mint)
    lo_net, _ = build_attack_network(v, target, +1, hide_mint=hide_mint)
    max_value = _solve_edge(hi_net, edge, certify)
    min_value = _solve_edge(lo_net, edge, certify)
    return BalanceRange(target, min_value, max_value)


def goodness(r: BalanceRange, token_supply: int) -> Fraction:
    if token_supply <= 0:
        raise ValueError("token supply must be positive")
    return 1 - Fraction(r.max_value - r.min_value, token_supply)


def contiguity_probes(r: BalanceRange, samples: int, rng: random.Random) -> list[int]:
    lo, hi = r.min_value, r.max_value
    probes = {lo, hi, (lo + hi) // 2}
    if hi - lo > 1:
        for _ in range(max(samples - 3, 0)):
            probes.add(rng.randint(lo + 1, hi - 1))
    return sorted(probes)


def verify_contiguity(
    v: AttackerView,
    target: int,
    r: BalanceRange,
    samples: int = DEFAULT_PROBES,
    *,
    seed: int = 0,
    hide_mint: bool = False,
) -> bool:
    """Check that balances across ``r`` are each individually feasible."""
    for m in contiguity_probes(r, samples, random.Random(seed)):
        net, _ = build_attack_network(v, target, +1, hide_mint=hide_mint, pinned=m)
        if not is_feasible(net):
            log.warning("balance %d for address %d is infeasible inside %s", m, target, r)
            return False
    return True


@dataclass
class RunRow:
    run: int
    seed: int
    target: int
    min_value: int
    max_value: int
    goodness: Fraction
    true_balance: int
    solve_time_s: float
    contiguous: bool | None = None

    @property
    def in_range(self) -> bool:
        return self.min_value <= self.true_balance <= self.max_value


@dataclass
class ExperimentReport:
    n_addresses: int
    n_transactions: int
    leakage_ratio: float
    runs: int
    rows: list[RunRow]

    @property
    def avg_goodness(self) -> Fraction:
        return sum((r.goodness for r in self.rows), Fraction(0)) / len(self.rows)

    @property
    def avg_solve_time_seconds(self) -> float:
        return sum(r.solve_time_s for r in self.rows) / len(self.rows)


@dataclass(frozen=True)
class RunConfig:
    n_addresses: int
    n_transactions: int
    leakage_ratio: float
    total_supply: int
    seed: int
    run: int
    hide_mint: bool = False
    contiguity_samples: int = 0


def attack_one(cfg: RunConfig) -> RunRow:
    """One experiment run: scenario, leak, random target, range estimate."""
    s = generate_scenario(cfg.n_addresses, cfg.n_transactions, cfg.total_supply, cfg.seed)
    # leak order and target depend on the seed only, so leak sets nest across ratios
    leaked = select_leaked(s, cfg.leakage_ratio, cfg.seed)
    target = random.Random(cfg.seed).choice(s.addresses)
    view = AttackerView.from_scenario(s, leaked)
    hi_net, edge = build_attack_network(view, target, -1, hide_mint=cfg.hide_mint)
    lo_net, _ = build_attack_network(view, target, +1, hide_mint=cfg.hide_mint)
    start = time.perf_counter()
    max_value = _solve_edge(hi_net, edge, False)
    min_value = _solve_edge(lo_net, edge, False)
    elapsed = time.perf_counter() - start
    r = BalanceRange(target, min_value, max_value)
    row = RunRow(
        run=cfg.run,
        seed=cfg.seed,
        target=target,
        min_value=min_value,
        max_value=max_value,
        goodness=goodness(r, s.total_supply),
        true_balance=s.true_balances.get(target, 0),
        solve_time_s=elapsed,
    )
    if cfg.contiguity_samples:
        row.contiguous = verify_contiguity(
            view, target, r, cfg.contiguity_samples, seed=cfg.seed, hide_mint=cfg.hide_mint
        )
    return row


def run_experiment(
    n_addresses: int,
    n_transactions: int,
    leakage_ratio: float,
    runs: int = 20,
    base_seed: int = 0,
    *,
    total_supply: int = 1_000_000,
    hide_mint: bool = False,
    contiguity_samples: int = 0,
    jobs: int = 1,
) -> ExperimentReport:
    if runs < 1:
        raise ValueError("runs must be at least 1")
    configs = [
        RunConfig(
            n_addresses,
            n_transactions,
            leakage_ratio,
            total_supply,
            base_seed + i,
            i,
            hide_mint,
            contiguity_samples,
        )
        for i in range(runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(attack_one, configs))
    else:
        rows = [attack_one(c) for c in configs]
    for row in rows:
        if not row.in_range:
            raise SoundnessViolation(
                f"run {row.run} (seed {row.seed}): address {row.target} holds {row.true_balance}, "
                f"outside [{row.min_value}, {row.max_value}]"
            )
        if row.contiguous is False:
            raise SoundnessViolation(f"run {row.run} (seed {row.seed}): range is not contiguous")
    return ExperimentReport(n_addresses, n_transactions, leakage_ratio, runs, rows)
