"""SHA-256 commitments binding token amounts to public digests."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

BLIND_BITS = 52
BLIND_LIMIT = 1 << BLIND_BITS
UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError("commitment digest must be 32 bytes")

    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> Commitment:
        return cls(bytes.fromhex(text))

    def __repr__(self) -> str:
        return f"Commitment({self.digest.hex()[:16]}…)"


def _check_blind(blind: int) -> None:
    if not 0 <= blind < BLIND_LIMIT:
        raise ValueError(f"blind factor out of range [0, 2^{BLIND_BITS}): {blind}")


def _check_amount(value: int) -> None:
    if not 0 <= value <= UINT64_MAX:
        raise ValueError(f"token amount out of unsigned 64-bit range: {value}")


def commit(value: int, blind: int) -> Commitment:
    """Commit to ``value`` under ``blind``.

    The message is the blind factor followed by the value, each encoded as a
    32-byte big-endian integer.
    """
    _check_amount(value)
    _check_blind(blind)
    message = blind.to_bytes(32, "big") + value.to_bytes(32, "big")
    return Commitment(hashlib.sha256(message).digest())


def verify_open(c: Commitment, value: int, blind: int) -> bool:
    try:
        return commit(value, blind) == c
    except ValueError:
        return False


def generate_blind(rng: random.Random) -> int:
    return rng.getrandbits(BLIND_BITS)
