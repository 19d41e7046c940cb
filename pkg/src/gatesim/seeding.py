"""Deterministic seed derivation.

Every sample (or simulation run) gets its own 64-bit seed derived from the
master seed and its index by hashing, so any single item can be replayed in
isolation and batch order never matters.
"""

import hashlib


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit seed for item `index` under `master_seed`."""
    digest = hashlib.blake2b(f"{master_seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")
