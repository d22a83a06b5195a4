"""Content hashing used for checksums, statement ids and revision ids."""

from __future__ import annotations

import hashlib

HASH_ALGORITHM = "sha256"
EMPTY_DIGEST = hashlib.sha256(b"").hexdigest()


def digest(text: str) -> str:
    return hashlib.new(HASH_ALGORITHM, text.encode("utf-8")).hexdigest()


def short_digest(text: str, length: int = 16) -> str:
    return digest(text)[:length]
