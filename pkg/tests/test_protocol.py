import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptts import protocol as P
from ptts.commitment import commit, generate_blind, verify_open

S, R = P.RelationKind.SENDER, P.RelationKind.RECEIVER


def sender_case(amount=30, balance=100, blinds=(11, 22, 33)):
    ab, bb, nb = blinds
    w = P.Witness(amount, balance, ab, bb, nb)
    p = P.PublicInputs(commit(amount, ab), commit(balance, bb), commit(max(balance - amount, 0), nb))
    return w, p


def receiver_case(amount=30, balance=5, blinds=(11, 44, 55)):
    ab, bb, nb = blinds
    w = P.Witness(amount, balance, ab, bb, nb)
    p = P.PublicInputs(commit(amount, ab), commit(balance, bb), commit(balance + amount, nb))
    return w, p


class TestRelations:
    def test_consistent_sender_witness(self):
        assert P.check_relation(S, *sender_case())

    def test_sender_cannot_overspend(self):
        w = P.Witness(101, 100, 1, 2, 3)
        p = P.PublicInputs(commit(101, 1), commit(100, 2), commit(0, 3))
        assert not P.check_relation(S, w, p)

    def test_receiver_rejects_wrong_next_balance(self):
        w, p = receiver_case()
        bad = replace(p, next_balance_hash=commit(w.balance + w.amount + 1, w.next_balance_blind))
        assert P.check_relation(R, w, p)
        assert not P.check_relation(R, w, bad)

    def test_receiver_has_no_amount_guard(self):
        assert P.check_relation(R, *receiver_case(amount=500, balance=5))

    def test_receiver_overflow_is_an_error(self):
        w = P.Witness(2, 2**64 - 1, 1, 2, 3)
        p = P.PublicInputs(commit(2, 1), commit(2**64 - 1, 2), commit(0, 3))
        with pytest.raises(OverflowError):
            P.check_relation(R, w, p)

    def test_relation_kinds_differ(self):
        w, p = sender_case()
        assert not P.check_relation(R, w, p)


class TestProofs:
    def test_round_trip_and_determinism(self):
        w, p = sender_case()
        t1, t2 = P.prove(S, w, p), P.prove(S, w, p)
        assert t1.kind is S and t1.publics == p
        assert t1 == t2
        assert P.verify_proof(t1, S, p)

    def test_no_proof_for_false_statement(self):
        w = P.Witness(101, 100, 1, 2, 3)
        p = P.PublicInputs(commit(101, 1), commit(100, 2), commit(0, 3))
        with pytest.raises(P.RelationUnsatisfied):
            P.prove(S, w, p)

    def test_stale_balance_hash_rejected(self):
        w, p = sender_case()
        t = P.prove(S, w, p)
        assert not P.verify_proof(t, S, replace(p, balance_hash=commit(70, 99)))

    def test_kind_binding(self):
        w, p = sender_case()
        assert not P.verify_proof(P.prove(S, w, p), R, p)

    def test_forged_binder_rejected(self):
        w, p = sender_case()
        t = P.prove(S, w, p)
        assert not P.verify_proof(replace(t, binder=bytes(32)), S, p)

    def test_token_holds_no_witness(self):
        w, p = sender_case()
        t = P.prove(S, w, p)
        assert set(vars(t)) == {"kind", "publics", "binder"}


class TestSealed:
    def test_recipient_opens(self):
        m = P.seal(7, 30, 12345)
        assert P.open_sealed(m, 7) == (30, 12345)

    def test_non_recipient_refused(self):
        with pytest.raises(P.WrongRecipient):
            P.open_sealed(P.seal(7, 30, 12345), 8)

    def test_sealed_pair_supports_receiver_proof(self):
        amount, blind = P.open_sealed(P.seal(2, 30, 11), 2)
        w, p = receiver_case(amount=amount, blinds=(blind, 44, 55))
        assert P.check_relation(R, w, p)


# --- ledger -----------------------------------------------------------------

DEPLOYER, ALICE, BOB = 0, 1, 2


def test_deploy():
    L = P.deploy_token("Tok", "TK", 1_000_000, DEPLOYER, 5)
    assert L.balance_hash == {DEPLOYER: commit(1_000_000, 5)}
    assert not (L.request or L.consent or L.allowance or L.sealed)
    assert L == P.deploy_token("Tok", "TK", 1_000_000, DEPLOYER, 5)
    with pytest.raises(ValueError):
        P.deploy_token("Tok", "TK", 0, DEPLOYER, 5)


def test_consent_handshake():
    L = P.deploy_token("Tok", "TK", 100, DEPLOYER, 5)
    with pytest.raises(P.MissingRequest):
        P.give_consent(L, DEPLOYER, BOB)
    L1 = P.get_consent(L, DEPLOYER, BOB)
    assert L1.request == {(DEPLOYER, BOB): True}
    assert P.get_consent(L1, DEPLOYER, BOB) == L1
    L2 = P.give_consent(L1, DEPLOYER, BOB)
    assert L2.consent == {(DEPLOYER, BOB): True}
    assert P.give_consent(L2, DEPLOYER, BOB) == L2
    assert P.get_consent(L, ALICE, ALICE).request == {(ALICE, ALICE): True}
    # inputs are never mutated
    assert L.request == {} and L1.consent == {}


class Party:
    def __init__(self, balance, rng):
        self.rng = rng
        self.balance = balance
        self.blind = generate_blind(rng)


def deposit_args(L, sender_party, sender, receiver, amount):
    rng = sender_party.rng
    ab, nb = generate_blind(rng), generate_blind(rng)
    w = P.Witness(amount, sender_party.balance, ab, sender_party.blind, nb)
    p = P.PublicInputs(
        commit(amount, ab), commit(sender_party.balance, sender_party.blind), commit(sender_party.balance - amount, nb)
    )
    return (sender, receiver, p.amount_hash, p.next_balance_hash, P.seal(receiver, amount, ab), P.prove(S, w, p)), nb


def withdraw_args(L, recv_party, sender, receiver):
    amount, ab = P.open_sealed(L.sealed[(sender, receiver)], receiver)
    nb = generate_blind(recv_party.rng)
    w = P.Witness(amount, recv_party.balance, ab, recv_party.blind, nb)
    p = P.PublicInputs(
        commit(amount, ab), commit(recv_party.balance, recv_party.blind), commit(recv_party.balance + amount, nb)
    )
    return (sender, receiver, p.amount_hash, p.next_balance_hash, P.prove(R, w, p)), nb, amount


def transfer_world(supply=100, amount=30, seed=0):
    rng = random.Random(seed)
    d, b = Party(supply, rng), Party(0, rng)
    L = P.deploy_token("Tok", "TK", supply, DEPLOYER, d.blind)
    L = P.open_account(L, BOB, b.blind)
    L = P.give_consent(P.get_consent(L, DEPLOYER, BOB), DEPLOYER, BOB)
    return L, d, b


def test_happy_path_and_replays():
    L, d, b = transfer_world()
    dep, nb = deposit_args(L, d, DEPLOYER, BOB, 30)
    L1 = P.private_deposit(L, *dep)
    assert L1.balance_hash[DEPLOYER] == dep[3]
    assert L1.allowance[(DEPLOYER, BOB)] == dep[2]
    with pytest.raises(P.ProofInvalid):
        P.private_deposit(L1, *dep)
    d.balance, d.blind = 70, nb

    wd, rb, amount = withdraw_args(L1, b, DEPLOYER, BOB)
    L2 = P.private_withdraw(L1, *wd)
    assert (DEPLOYER, BOB) not in L2.allowance
    assert L2.balance_hash[BOB] == wd[3]
    with pytest.raises(P.AllowanceMismatch):
        P.private_withdraw(L2, *wd)
    b.balance, b.blind = b.balance + amount, rb

    # conservation: both parties' commitments open to the moved amounts
    assert verify_open(L2.balance_hash[DEPLOYER], 70, d.blind)
    assert verify_open(L2.balance_hash[BOB], 30, b.blind)


def test_deposit_requires_consent():
    rng = random.Random(3)
    d = Party(100, rng)
    L = P.deploy_token("Tok", "TK", 100, DEPLOYER, d.blind)
    dep, _ = deposit_args(L, d, DEPLOYER, BOB, 10)
    with pytest.raises(P.NoConsent):
        P.private_deposit(L, *dep)
    with pytest.raises(P.NoConsent):
        P.private_deposit(P.get_consent(L, DEPLOYER, BOB), *dep)


def test_withdraw_guards():
    L, d, b = transfer_world()
    dep, _ = deposit_args(L, d, DEPLOYER, BOB, 30)
    L1 = P.private_deposit(L, *dep)
    wd, _, _ = withdraw_args(L1, b, DEPLOYER, BOB)

    # receiver claims a different amount than was deposited
    nb = generate_blind(b.rng)
    greedy = P.PublicInputs(commit(90, 1), commit(0, b.blind), commit(90, nb))
    token = P.prove(R, P.Witness(90, 0, 1, b.blind, nb), greedy)
    with pytest.raises(P.AllowanceMismatch):
        P.private_withdraw(L1, DEPLOYER, BOB, greedy.amount_hash, greedy.next_balance_hash, token)

    # wrong party cannot withdraw without consent
    with pytest.raises(P.NoConsent):
        P.private_withdraw(L1, DEPLOYER, ALICE, *wd[2:])

    # a sender proof is not a receiver proof
    with pytest.raises(P.ProofInvalid):
        P.private_withdraw(L1, DEPLOYER, BOB, wd[2], wd[3], dep[5])


def test_failed_transition_leaves_state_untouched():
    L, d, _ = transfer_world()
    dep, _ = deposit_args(L, d, DEPLOYER, BOB, 30)
    snapshot = (dict(L.balance_hash), dict(L.allowance), dict(L.sealed))
    bad = dep[:5] + (P.prove(S, *sender_case()),)
    with pytest.raises(P.ProofInvalid):
        P.private_deposit(L, *bad)
    assert (L.balance_hash, L.allowance, L.sealed) == snapshot


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 10**6), st.data())
def test_replay_properties(seed, supply, data):
    """Deposits replay as stale proofs, withdrawals as cleared allowances."""
    amount = data.draw(st.integers(1, supply))
    L, d, b = transfer_world(supply, amount, seed)
    assert P.get_consent(L, DEPLOYER, BOB) == L
    assert P.give_consent(L, DEPLOYER, BOB) == L

    dep, nb = deposit_args(L, d, DEPLOYER, BOB, amount)
    L1 = P.private_deposit(L, *dep)
    with pytest.raises(P.ProofInvalid):
        P.private_deposit(L1, *dep)
    wd, rb, _ = withdraw_args(L1, b, DEPLOYER, BOB)
    L2 = P.private_withdraw(L1, *wd)
    with pytest.raises(P.AllowanceMismatch):
        P.private_withdraw(L2, *wd)
    assert verify_open(L2.balance_hash[DEPLOYER], supply - amount, nb)
    assert verify_open(L2.balance_hash[BOB], amount, rb)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10**6), st.integers(0, 2**32))
def test_overspend_never_proves(balance, excess, seed):
    rng = random.Random(seed)
    amount = balance + excess
    ab, bb, nb = (generate_blind(rng) for _ in range(3))
    w = P.Witness(amount, balance, ab, bb, nb)
    # the best an overspender can do: commitments honest except the impossible next balance
    p = P.PublicInputs(commit(amount, ab), commit(balance, bb), commit(0, nb))
    assert not P.check_relation(S, w, p)
    with pytest.raises(P.RelationUnsatisfied):
        P.prove(S, w, p)
