"""Random, protocol-valid transfer histories with ground truth and leak selection."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import protocol as P
from .commitment import commit, generate_blind, verify_open

DEFAULT_SUPPLY = 1_000_000


@dataclass(frozen=True)
class TransferRecord:
    index: int
    sender: int
    receiver: int
    amount: int


@dataclass
class Scenario:
    n_addresses: int
    total_supply: int
    seed: int
    transfers: list[TransferRecord]
    deployer: int = 0
    true_balances: dict[int, int] = field(default_factory=dict)

    @property
    def addresses(self) -> list[int]:
        return list(range(self.n_addresses))

    def to_json(self) -> dict[str, Any]:
        return {
            "n_addresses": self.n_addresses,
            "total_supply": self.total_supply,
            "deployer": self.deployer,
            "seed": self.seed,
            "transfers": [
                {"index": t.index, "from": t.sender, "to": t.receiver, "amount": t.amount}
                for t in self.transfers
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> Scenario:
        transfers = [
            TransferRecord(int(t["index"]), int(t["from"]), int(t["to"]), int(t["amount"]))
            for t in data["transfers"]
        ]
        s = cls(
            n_addresses=int(data["n_addresses"]),
            total_supply=int(data["total_supply"]),
            seed=int(data["seed"]),
            transfers=transfers,
            deployer=int(data.get("deployer", 0)),
        )
        s.true_balances = replay_balances(s)
        return s


@dataclass(frozen=True)
class LeakedSet:
    ratio: Fraction
    indices: frozenset[int]

    def to_json(self) -> dict[str, Any]:
        return {"ratio": float(self.ratio), "indices": sorted(self.indices)}


def replay_balances(s: Scenario) -> dict[int, int]:
    """Apply every transfer to the initial mint; raises if any overdraws."""
    balances = {s.deployer: s.total_supply}
    for t in s.transfers:
        have = balances.get(t.sender, 0)
        if not 1 <= t.amount <= have:
            raise ValueError(f"transfer {t.index} moves {t.amount} but sender holds {have}")
        balances[t.sender] = have - t.amount
        balances[t.receiver] = balances.get(t.receiver, 0) + t.amount
    return balances


def generate_scenario(
    n_addresses: int, n_transactions: int, total_supply: int = DEFAULT_SUPPLY, seed: int = 0
) -> Scenario:
    if n_addresses < 2:
        raise ValueError("a scenario needs at least two addresses")
    if total_supply < 1:
        raise ValueError("total supply must be at least 1")
    if n_transactions < 0:
        raise ValueError("transaction count cannot be negative")
    rng = random.Random(seed)
    deployer = 0
    balances = {deployer: total_supply}
    # funded addresses, kept as list + position map for O(1) uniform choice and removal
    funded = [deployer]
    slot = {deployer: 0}

    def drop(a: int) -> None:
        i = slot.pop(a)
        last = funded.pop()
        if last != a:
            funded[i] = last
            slot[last] = i

    transfers = []
    for index in range(n_transactions):
        sender = funded[rng.randrange(len(funded))]
        receiver = rng.randrange(n_addresses - 1)
        if receiver >= sender:
            receiver += 1
        amount = rng.randint(1, balances[sender])
        balances[sender] -= amount
        if balances[sender] == 0:
            drop(sender)
        if balances.get(receiver, 0) == 0:
            slot[receiver] = len(funded)
            funded.append(receiver)
        balances[receiver] = balances.get(receiver, 0) + amount
        transfers.append(TransferRecord(index, sender, receiver, amount))
    return Scenario(n_addresses, total_supply, seed, transfers, deployer, balances)


def _leak_count(ratio: Fraction, n: int) -> int:
    # round half up
    return int(ratio * n + Fraction(1, 2))


def select_leaked(s: Scenario, ratio: float | Fraction | str, seed: int) -> LeakedSet:
    """Pick ``round(ratio * |transfers|)`` transfer indices uniformly at random.

    The indices are a prefix of one seeded permutation, so for a fixed seed a
    larger ratio always leaks a superset of a smaller one.
    """
    r = Fraction(str(ratio)) if isinstance(ratio, float) else Fraction(ratio)
    if not 0 <= r <= 1:
        raise ValueError(f"leakage ratio must lie in [0, 1], got {ratio}")
    order = [t.index for t in s.transfers]
    random.Random(seed).shuffle(order)
    return LeakedSet(r, frozenset(order[: _leak_count(r, len(order))]))


@dataclass
class Wallet:
    """Private opening of one address's on-ledger balance commitment."""

    balance: int
    blind: int


@dataclass
class Replay:
    ledger: P.LedgerState
    transcript: list[dict[str, Any]]
    wallets: dict[int, Wallet]

    def opens_to_truth(self, s: Scenario) -> bool:
        for a in s.addresses:
            w = self.wallets.get(a)
            c = self.ledger.balance_hash.get(a)
            expected = s.true_balances.get(a, 0)
            if w is None or c is None:
                if expected != 0:
                    return False
                continue
            if w.balance != expected or not verify_open(c, w.balance, w.blind):
                return False
        return True


class ReplayError(RuntimeError):
    pass


def _step(transcript, step_type, sender, receiver, publics=None, result="ok"):
    transcript.append(
        {
            "step_type": step_type,
            "sender": sender,
            "receiver": receiver,
            "public_inputs": publics.to_json() if publics is not None else {},
            "result": result,
        }
    )


def replay_with_wallets(s: Scenario, token_name: str = "Private Token", symbol: str = "PTT") -> Replay:
    """Drive every transfer through the consent handshake, deposit and withdraw."""
    rng = random.Random(s.seed ^ 0x5EED_1ED6E2)
    wallets = {s.deployer: Wallet(s.total_supply, generate_blind(rng))}
    L = P.deploy_token(token_name, symbol, s.total_supply, s.deployer, wallets[s.deployer].blind)
    transcript: list[dict[str, Any]] = []
    _step(transcript, "deploy", s.deployer, s.deployer)
    try:
        for t in s.transfers:
            src, dst = t.sender, t.receiver
            if dst not in wallets:
                wallets[dst] = Wallet(0, generate_blind(rng))
                L = P.open_account(L, dst, wallets[dst].blind)
            L = P.get_consent(L, src, dst)
            _step(transcript, "get_consent", src, dst)
            L = P.give_consent(L, src, dst)
            _step(transcript, "give_consent", src, dst)

            sw = wallets[src]
            if t.amount > sw.balance:
                raise ReplayError(f"transfer {t.index} overdraws address {src}")
            amount_blind = generate_blind(rng)
            next_blind = generate_blind(rng)
            w = P.Witness(t.amount, sw.balance, amount_blind, sw.blind, next_blind)
            pub = P.PublicInputs(
                commit(t.amount, amount_blind),
                commit(sw.balance, sw.blind),
                commit(sw.balance - t.amount, next_blind),
            )
            token = P.prove(P.RelationKind.SENDER, w, pub)
            L = P.private_deposit(
                L, src, dst, pub.amount_hash, pub.next_balance_hash, P.seal(dst, t.amount, amount_blind), token
            )
            wallets[src] = Wallet(sw.balance - t.amount, next_blind)
            _step(transcript, "private_deposit", src, dst, pub)

            amount, amt_blind = P.open_sealed(L.sealed[(src, dst)], dst)
            rw = wallets[dst]
            next_blind = generate_blind(rng)
            w = P.Witness(amount, rw.balance, amt_blind, rw.blind, next_blind)
            pub = P.PublicInputs(
                commit(amount, amt_blind),
                commit(rw.balance, rw.blind),
                commit(rw.balance + amount, next_blind),
            )
            token = P.prove(P.RelationKind.RECEIVER, w, pub)
            L = P.private_withdraw(L, src, dst, pub.amount_hash, pub.next_balance_hash, token)
            wallets[dst] = Wallet(rw.balance + amount, next_blind)
            _step(transcript, "private_withdraw", src, dst, pub)
    except P.ProtocolError as exc:
        raise ReplayError(f"transfer {t.index} ({src}->{dst}) failed: {exc}") from exc
    return Replay(L, transcript, wallets)


def replay_on_ledger(s: Scenario) -> tuple[P.LedgerState, list[dict[str, Any]]]:
    r = replay_with_wallets(s)
    return r.ledger, r.transcript


def save_json(path, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
