"""Sender/receiver relations, simulated proof tokens and the private-token ledger.

Ledger transitions are pure: each returns a new :class:`LedgerState` and
leaves its input untouched. A failed transition raises and changes nothing.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any

from .commitment import UINT64_MAX, Commitment, commit

Address = int

# Stand-in for the verifying key of a real proving system.
_SIMULATION_SECRET = hashlib.sha256(b"ptts/simulated-verifier/v1").digest()


class ProtocolError(Exception):
    """Base class for rejected protocol calls."""


class RelationUnsatisfied(ProtocolError):
    pass


class MissingRequest(ProtocolError):
    pass


class NoConsent(ProtocolError):
    pass


class ProofInvalid(ProtocolError):
    pass


class AllowanceMismatch(ProtocolError):
    pass


class WrongRecipient(ProtocolError):
    pass


class RelationKind(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"

    @property
    def tag(self) -> bytes:
        return b"\x01" if self is RelationKind.SENDER else b"\x02"


@dataclass(frozen=True)
class Witness:
    amount: int
    balance: int
    amount_blind: int
    balance_blind: int
    next_balance_blind: int

    def __repr__(self) -> str:
        # keeps blinds out of logs and tracebacks
        return "Witness(<private>)"


@dataclass(frozen=True)
class PublicInputs:
    amount_hash: Commitment
    balance_hash: Commitment
    next_balance_hash: Commitment

    def to_json(self) -> dict[str, str]:
        return {
            "amount_hash": self.amount_hash.hex(),
            "balance_hash": self.balance_hash.hex(),
            "next_balance_hash": self.next_balance_hash.hex(),
        }


@dataclass(frozen=True)
class ProofToken:
    kind: RelationKind
    publics: PublicInputs
    binder: bytes


@dataclass(frozen=True)
class SealedMessage:
    """Models the encrypted sender-to-receiver channel. Not encrypted."""

    recipient: Address
    payload: bytes = field(repr=False)


def _next_balance(kind: RelationKind, w: Witness) -> int | None:
    if kind is RelationKind.SENDER:
        if w.amount > w.balance:
            return None
        return w.balance - w.amount
    total = w.balance + w.amount
    if total > UINT64_MAX:
        raise OverflowError(f"receiver balance overflow: {w.balance} + {w.amount}")
    return total


def check_relation(kind: RelationKind, w: Witness, p: PublicInputs) -> bool:
    nxt = _next_balance(kind, w)
    if nxt is None:
        return False
    return (
        commit(w.amount, w.amount_blind) == p.amount_hash
        and commit(w.balance, w.balance_blind) == p.balance_hash
        and commit(nxt, w.next_balance_blind) == p.next_balance_hash
    )


def _binder(kind: RelationKind, p: PublicInputs) -> bytes:
    h = hashlib.sha256()
    h.update(kind.tag)
    h.update(p.amount_hash.digest)
    h.update(p.balance_hash.digest)
    h.update(p.next_balance_hash.digest)
    h.update(_SIMULATION_SECRET)
    return h.digest()


def prove(kind: RelationKind, w: Witness, p: PublicInputs) -> ProofToken:
    if not check_relation(kind, w, p):
        raise RelationUnsatisfied(f"{kind.value} relation does not hold for the given witness")
    return ProofToken(kind, p, _binder(kind, p))


def verify_proof(t: ProofToken, kind: RelationKind, p: PublicInputs) -> bool:
    return t.kind is kind and t.publics == p and t.binder == _binder(kind, p)


def seal(recipient: Address, amount: int, amount_blind: int) -> SealedMessage:
    payload = json.dumps({"amount": amount, "amount_blind": amount_blind}).encode()
    return SealedMessage(recipient, payload)


def open_sealed(m: SealedMessage, caller: Address) -> tuple[int, int]:
    if caller != m.recipient:
        raise WrongRecipient(f"address {caller} cannot open a message sealed for {m.recipient}")
    data = json.loads(m.payload)
    return data["amount"], data["amount_blind"]


Pair = tuple[Address, Address]


@dataclass(frozen=True)
class LedgerState:
    token_name: str
    token_symbol: str
    total_supply: int
    deployer: Address
    balance_hash: dict[Address, Commitment] = field(default_factory=dict)
    request: dict[Pair, bool] = field(default_factory=dict)
    consent: dict[Pair, bool] = field(default_factory=dict)
    # a missing key is the cleared slot; it is never commit(0, 0)
    allowance: dict[Pair, Commitment] = field(default_factory=dict)
    sealed: dict[Pair, SealedMessage] = field(default_factory=dict)

    def balance_of(self, address: Address) -> Commitment | None:
        return self.balance_hash.get(address)


def deploy_token(
    name: str, symbol: str, supply: int, deployer: Address, deployer_blind: int
) -> LedgerState:
    if supply <= 0:
        raise ValueError("token supply must be positive")
    return LedgerState(
        token_name=name,
        token_symbol=symbol,
        total_supply=supply,
        deployer=deployer,
        balance_hash={deployer: commit(supply, deployer_blind)},
    )


def open_account(L: LedgerState, address: Address, blind: int) -> LedgerState:
    """Record a zero-balance commitment for an address that has none yet."""
    if address in L.balance_hash:
        return L
    return replace(L, balance_hash=_with(L.balance_hash, address, commit(0, blind)))


def _with(mapping: dict, key: Any, value: Any) -> dict:
    out = dict(mapping)
    out[key] = value
    return out


def get_consent(L: LedgerState, sender: Address, receiver: Address) -> LedgerState:
    return replace(L, request=_with(L.request, (sender, receiver), True))


def give_consent(L: LedgerState, sender: Address, receiver: Address) -> LedgerState:
    if not L.request.get((sender, receiver), False):
        raise MissingRequest(f"no transfer request from {sender} to {receiver}")
    return replace(L, consent=_with(L.consent, (sender, receiver), True))


def _stored_balance(L: LedgerState, address: Address) -> Commitment:
    try:
        return L.balance_hash[address]
    except KeyError:
        raise ProofInvalid(f"address {address} has no balance commitment") from None


def private_deposit(
    L: LedgerState,
    sender: Address,
    receiver: Address,
    amount_hash: Commitment,
    next_balance_hash: Commitment,
    sealed: SealedMessage,
    t: ProofToken,
) -> LedgerState:
    if not L.consent.get((sender, receiver), False):
        raise NoConsent(f"{receiver} has not consented to receive from {sender}")
    publics = PublicInputs(amount_hash, _stored_balance(L, sender), next_balance_hash)
    if not verify_proof(t, RelationKind.SENDER, publics):
        raise ProofInvalid("sender proof does not verify against the stored balance")
    return replace(
        L,
        balance_hash=_with(L.balance_hash, sender, next_balance_hash),
        allowance=_with(L.allowance, (sender, receiver), amount_hash),
        sealed=_with(L.sealed, (sender, receiver), sealed),
    )


def private_withdraw(
    L: LedgerState,
    sender: Address,
    receiver: Address,
    amount_hash: Commitment,
    next_balance_hash: Commitment,
    t: ProofToken,
) -> LedgerState:
    pair = (sender, receiver)
    if not L.consent.get(pair, False):
        raise NoConsent(f"{receiver} has not consented to receive from {sender}")
    if L.allowance.get(pair) != amount_hash:
        raise AllowanceMismatch(f"amount commitment does not match the allowance {sender}->{receiver}")
    publics = PublicInputs(amount_hash, _stored_balance(L, receiver), next_balance_hash)
    if not verify_proof(t, RelationKind.RECEIVER, publics):
        raise ProofInvalid("receiver proof does not verify against the stored balance")
    allowance = dict(L.allowance)
    del allowance[pair]
    return replace(
        L,
        balance_hash=_with(L.balance_hash, receiver, next_balance_hash),
        allowance=allowance,
    )
