"""Password digests and bearer tokens.

Passwords are stored as salted scrypt digests: memory-hard, so bulk offline
guessing stays expensive even on GPU rigs. Login verification runs the same
key derivation whether or not the username exists, keeping response timing
from leaking which usernames are real.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets

# scrypt cost parameters; bumping them changes the prefix, and old digests
# still verify because every digest carries its own parameters.
_N, _R, _P = 2**14, 8, 1
_DKLEN = 32


def hash_password(password: str, salt: bytes | None = None) -> str:
    salt = salt if salt is not None else secrets.token_bytes(16)
    key = hashlib.scrypt(
        password.encode("utf-8"), salt=salt, n=_N, r=_R, p=_P, dklen=_DKLEN
    )
    return f"scrypt${_N}${_R}${_P}${salt.hex()}${key.hex()}"


def verify_password(password: str, encoded: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, key_hex = encoded.split("$")
        if scheme != "scrypt":
            return False
        expected = bytes.fromhex(key_hex)
        key = hashlib.scrypt(
            password.encode("utf-8"),
            salt=bytes.fromhex(salt_hex),
            n=int(n), r=int(r), p=int(p),
            dklen=len(expected),
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(key, expected)


# Verified against when a login names an unknown account, so the request still
# pays for one full scrypt derivation.
DUMMY_DIGEST = hash_password("incorrect-horse-battery-staple", salt=b"\x00" * 16)


def new_token() -> str:
    return secrets.token_hex(32)
