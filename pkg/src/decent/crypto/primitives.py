"""Symmetric authenticated encryption, key derivation and signatures.

AES-256-GCM for sealing, HKDF-SHA256 for derivation, Ed25519 for signatures.
Keys travel as raw bytes so they can be embedded in wire formats directly.
"""
from __future__ import annotations

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .group import SYSTEM_RNG, Rng

SYM_KEY_LEN = 32
NONCE_LEN = 12
SIGNING_KEY_LEN = 32
VERIFY_KEY_LEN = 32
SIGNATURE_LEN = 64


class CryptoError(Exception):
    pass


class AuthenticationError(CryptoError):
    """Authenticated decryption failed: wrong key, or data was modified."""


def kdf(ikm: bytes, label: bytes, length: int = SYM_KEY_LEN) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=None, info=b"decent/" + label).derive(ikm)


def new_sym_key(rng: Rng = SYSTEM_RNG) -> bytes:
    return rng.token_bytes(SYM_KEY_LEN)


def sym_seal(key: bytes, plaintext: bytes, associated_data: bytes = b"", rng: Rng = SYSTEM_RNG) -> bytes:
    nonce = rng.token_bytes(NONCE_LEN)
    return nonce + AESGCM(key).encrypt(nonce, plaintext, associated_data)


def sym_open(key: bytes, ciphertext: bytes, associated_data: bytes = b"") -> bytes:
    if len(key) != SYM_KEY_LEN:
        raise AuthenticationError("bad key length")
    if len(ciphertext) < NONCE_LEN + 16:
        raise AuthenticationError("ciphertext too short")
    try:
        return AESGCM(key).decrypt(ciphertext[:NONCE_LEN], ciphertext[NONCE_LEN:], associated_data)
    except InvalidTag:
        raise AuthenticationError("authentication failed") from None


def signature_keypair(rng: Rng = SYSTEM_RNG) -> tuple[bytes, bytes]:
    """Return ``(signing_key, verification_key)`` as raw bytes."""
    sk = Ed25519PrivateKey.from_private_bytes(rng.token_bytes(SIGNING_KEY_LEN))
    return sk.private_bytes_raw(), sk.public_key().public_bytes_raw()


def verification_key(signing_key: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(signing_key).public_key().public_bytes_raw()


def sign(signing_key: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(signing_key).sign(message)


def verify(verification_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(verification_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True
