"""Keys, addresses, signatures and the passphrase-protected keystore."""

from __future__ import annotations

import hashlib
import hmac
import json
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from reviewchain.encoding import digest

ADDRESS_SIZE = 20
SEED_SIZE = 32
SIGNATURE_SIZE = 64

KEYSTORE_VERSION = 1
KDF_ITERATIONS = {
    "light": 2**12,
    "standard": 2**18,
}


class IdentityError(ValueError):
    """Malformed key material."""


class KeystoreError(Exception):
    """Keystore could not be opened."""


class AuthenticationError(KeystoreError):
    """MAC check failed: wrong passphrase or corrupted keystore."""


class Address(bytes):
    """A 20-byte account identifier."""

    def __new__(cls, value: bytes | str):
        if isinstance(value, str):
            text = value[2:] if value.startswith("0x") else value
            try:
                value = bytes.fromhex(text)
            except ValueError as exc:
                raise IdentityError(f"invalid address hex: {value!r}") from exc
        if len(value) != ADDRESS_SIZE:
            raise IdentityError(f"address must be {ADDRESS_SIZE} bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __str__(self) -> str:
        return "0x" + self.hex()

    def __repr__(self) -> str:
        return f"Address({str(self)})"

    @property
    def short(self) -> str:
        return "0x" + self.hex()[:8]


ZERO_ADDRESS = Address(bytes(ADDRESS_SIZE))


@dataclass(frozen=True)
class KeyPair:
    private_key: bytes
    public_key: bytes

    def __repr__(self) -> str:
        # never leak the secret through logs or reports
        return f"KeyPair(address={derive_address(self.public_key)})"

    @property
    def address(self) -> Address:
        return derive_address(self.public_key)


def _load_private(private_key: bytes) -> Ed25519PrivateKey:
    if len(private_key) != SEED_SIZE:
        raise IdentityError(f"seed must be {SEED_SIZE} bytes, got {len(private_key)}")
    return Ed25519PrivateKey.from_private_bytes(bytes(private_key))


def generate_keypair(seed: bytes) -> KeyPair:
    """Derive a keypair deterministically from 32 bytes of entropy."""
    secret = _load_private(seed)
    public = secret.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    return KeyPair(private_key=bytes(seed), public_key=public)


def random_keypair() -> KeyPair:
    return generate_keypair(os.urandom(SEED_SIZE))


def derive_address(public_key: bytes) -> Address:
    """Trailing 20 bytes of SHA-256 over the raw public key."""
    try:
        Ed25519PublicKey.from_public_bytes(bytes(public_key))
    except (ValueError, TypeError) as exc:
        raise IdentityError("malformed public key") from exc
    return Address(digest(bytes(public_key))[-ADDRESS_SIZE:])


def sign(message: bytes, key: KeyPair) -> bytes:
    return _load_private(key.private_key).sign(bytes(message))


def verify(message: bytes, signature: bytes, public_key: bytes) -> bool:
    """True iff ``signature`` is valid for ``message`` under ``public_key``.

    Malformed keys or signatures are reported as a failed verification.
    """
    try:
        pub = Ed25519PublicKey.from_public_bytes(bytes(public_key))
        pub.verify(bytes(signature), bytes(message))
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


# -- keystore ---------------------------------------------------------------


@dataclass(frozen=True)
class Keystore:
    ciphertext: bytes
    kdf_preset: str
    kdf_salt: bytes
    mac: bytes
    version: int = KEYSTORE_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "kdf_preset": self.kdf_preset,
                "salt_hex": self.kdf_salt.hex(),
                "ciphertext_hex": self.ciphertext.hex(),
                "mac_hex": self.mac.hex(),
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Keystore":
        try:
            doc = json.loads(text)
            return cls(
                ciphertext=bytes.fromhex(doc["ciphertext_hex"]),
                kdf_preset=doc["kdf_preset"],
                kdf_salt=bytes.fromhex(doc["salt_hex"]),
                mac=bytes.fromhex(doc["mac_hex"]),
                version=int(doc["version"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise KeystoreError(f"malformed keystore document: {exc}") from exc


def kdf_work(preset: str) -> int:
    try:
        return KDF_ITERATIONS[preset]
    except KeyError:
        raise KeystoreError(f"unknown kdf preset {preset!r}") from None


def _stretch(passphrase: str, salt: bytes, preset: str) -> tuple[bytes, bytes]:
    derived = hashlib.pbkdf2_hmac(
        "sha256", passphrase.encode("utf-8"), salt, kdf_work(preset), dklen=64
    )
    return derived[:32], derived[32:]


def _keystream_xor(enc_key: bytes, data: bytes) -> bytes:
    # enc_key is unique per salt, so a fixed counter block is never reused
    cipher = Cipher(algorithms.AES(enc_key), modes.CTR(bytes(16)))
    enc = cipher.encryptor()
    return enc.update(data) + enc.finalize()


def _mac(mac_key: bytes, version: int, preset: str, salt: bytes, ciphertext: bytes) -> bytes:
    body = f"{version}:{preset}:".encode() + salt + ciphertext
    return hmac.new(mac_key, body, hashlib.sha256).digest()


def keystore_encrypt(
    key: KeyPair, passphrase: str, preset: str = "standard", salt: bytes | None = None
) -> Keystore:
    if not passphrase:
        raise KeystoreError("passphrase must be non-empty")
    kdf_work(preset)
    salt = os.urandom(16) if salt is None else bytes(salt)
    enc_key, mac_key = _stretch(passphrase, salt, preset)
    ciphertext = _keystream_xor(enc_key, key.private_key)
    return Keystore(
        ciphertext=ciphertext,
        kdf_preset=preset,
        kdf_salt=salt,
        mac=_mac(mac_key, KEYSTORE_VERSION, preset, salt, ciphertext),
    )


def keystore_decrypt(store: Keystore, passphrase: str) -> KeyPair:
    if not passphrase:
        raise KeystoreError("passphrase must be non-empty")
    if store.version != KEYSTORE_VERSION:
        raise KeystoreError(f"unsupported keystore version {store.version}")
    enc_key, mac_key = _stretch(passphrase, store.kdf_salt, store.kdf_preset)
    expected = _mac(mac_key, store.version, store.kdf_preset, store.kdf_salt, store.ciphertext)
    if not hmac.compare_digest(expected, store.mac):
        raise AuthenticationError("keystore MAC mismatch")
    secret = _keystream_xor(enc_key, store.ciphertext)
    try:
        return generate_keypair(secret)
    except IdentityError as exc:
        raise KeystoreError("decrypted key material is malformed") from exc
