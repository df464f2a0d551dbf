"""Review payload storage: inline on-chain, hash-anchored central store, CAS.

Every backend encodes payloads through a :class:`PayloadCodec` before storing.
References returned by :func:`store_payload` always commit to the digest of
the *encoded* bytes; :func:`fetch_payload` refuses to return bytes whose
digest does not match.
"""

from __future__ import annotations

import json
import os
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Union

from reviewchain.encoding import DecodeError, Reader, digest, enc_bytes, enc_str

DIGEST_SIZE = 32
# review text cap; keeps scenario gas figures bounded
MAX_REVIEW_TEXT = 8 * 1024


class StorageError(Exception):
    pass


class NotFound(StorageError):
    pass


class BackendUnavailable(StorageError):
    pass


class WrongBackend(StorageError):
    pass


class TamperDetected(StorageError):
    def __init__(self, expected: bytes, actual: bytes):
        super().__init__(f"digest mismatch: expected {expected.hex()}, got {actual.hex()}")
        self.expected = expected
        self.actual = actual


# -- codecs -----------------------------------------------------------------


class PayloadCodec(Protocol):
    name: str

    def encode(self, payload: bytes) -> bytes: ...

    def decode(self, data: bytes) -> bytes: ...


class IdentityCodec:
    name = "identity"

    def encode(self, payload: bytes) -> bytes:
        return bytes(payload)

    def decode(self, data: bytes) -> bytes:
        return bytes(data)


class ZlibCodec:
    """Stand-in compressor showing the codec seam; not tuned for short texts."""

    name = "zlib"

    def __init__(self, level: int = 9):
        self.level = level

    def encode(self, payload: bytes) -> bytes:
        return zlib.compress(bytes(payload), self.level)

    def decode(self, data: bytes) -> bytes:
        try:
            return zlib.decompress(data)
        except zlib.error as exc:
            raise StorageError(f"zlib payload corrupt: {exc}") from exc


CODECS = {"identity": IdentityCodec, "zlib": ZlibCodec}


def get_codec(name: str) -> PayloadCodec:
    try:
        return CODECS[name]()
    except KeyError:
        raise StorageError(f"unknown codec {name!r}") from None


# -- references -------------------------------------------------------------


@dataclass(frozen=True)
class OnChain:
    data: bytes

    @property
    def payload_digest(self) -> bytes:
        return digest(self.data)

    @property
    def stored_bytes(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class Anchored:
    digest: bytes
    locator: str

    @property
    def payload_digest(self) -> bytes:
        return self.digest

    @property
    def stored_bytes(self) -> int:
        return DIGEST_SIZE + len(self.locator.encode("utf-8"))


@dataclass(frozen=True)
class ContentAddressed:
    content_id: bytes

    @property
    def payload_digest(self) -> bytes:
        return self.content_id

    @property
    def stored_bytes(self) -> int:
        return DIGEST_SIZE


StorageRef = Union[OnChain, Anchored, ContentAddressed]

_TAG_ONCHAIN, _TAG_ANCHORED, _TAG_CAS = 1, 2, 3


def encode_ref(ref: StorageRef) -> bytes:
    if isinstance(ref, OnChain):
        return bytes([_TAG_ONCHAIN]) + enc_bytes(ref.data)
    if isinstance(ref, Anchored):
        return bytes([_TAG_ANCHORED]) + enc_bytes(ref.digest) + enc_str(ref.locator)
    if isinstance(ref, ContentAddressed):
        return bytes([_TAG_CAS]) + enc_bytes(ref.content_id)
    raise TypeError(f"not a storage reference: {ref!r}")


def read_ref(reader: Reader) -> StorageRef:
    tag = reader.byte()
    if tag == _TAG_ONCHAIN:
        return OnChain(reader.bytes())
    if tag == _TAG_ANCHORED:
        d = reader.bytes()
        loc = reader.str()
        if len(d) != DIGEST_SIZE:
            raise DecodeError("anchored digest must be 32 bytes")
        return Anchored(d, loc)
    if tag == _TAG_CAS:
        cid = reader.bytes()
        if len(cid) != DIGEST_SIZE:
            raise DecodeError("content id must be 32 bytes")
        return ContentAddressed(cid)
    raise DecodeError(f"unknown storage ref tag {tag}")


def decode_ref(data: bytes) -> StorageRef:
    r = Reader(data)
    ref = read_ref(r)
    r.finish()
    return ref


# -- backends ---------------------------------------------------------------


class _Backend:
    kind = ""

    def __init__(self, codec: PayloadCodec | None = None):
        self.codec = codec or IdentityCodec()
        self.available = True
        self._lock = threading.Lock()

    def _check(self) -> None:
        if not self.available:
            raise BackendUnavailable(f"{self.kind} backend unavailable")


class OnChainBackend(_Backend):
    """Payload travels inside the reference; the ledger charges gas for it."""

    kind = "onchain"

    def store(self, payload: bytes) -> OnChain:
        self._check()
        return OnChain(self.codec.encode(payload))

    def fetch(self, ref: StorageRef) -> bytes:
        if not isinstance(ref, OnChain):
            raise WrongBackend(f"onchain backend cannot resolve {type(ref).__name__}")
        return self.codec.decode(ref.data)


class CentralizedStore(_Backend):
    """Operator-run store: payload off-chain, only its digest anchored on chain.

    With a ``root`` directory the store persists as an append-only log
    (``store.log``) plus a JSON index (``index.json``) mapping each locator to
    the ``[offset, length]`` of its current record.  Overwrites append a new
    record and repoint the index, so the log keeps the full history.
    """

    kind = "centralized"

    def __init__(self, codec: PayloadCodec | None = None, root: str | os.PathLike | None = None):
        super().__init__(codec)
        self._mem: dict[str, bytes] = {}
        self._index: dict[str, list[int]] = {}
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            index = self.root / "index.json"
            if index.exists():
                self._index = json.loads(index.read_text())
            (self.root / "store.log").touch()

    def _write(self, locator: str, data: bytes) -> None:
        if self.root is None:
            self._mem[locator] = bytes(data)
            return
        log = self.root / "store.log"
        with open(log, "ab") as fh:
            offset = fh.tell()
            fh.write(data)
        self._index[locator] = [offset, len(data)]
        (self.root / "index.json").write_text(json.dumps(self._index, sort_keys=True))

    def _read(self, locator: str) -> bytes:
        if self.root is None:
            try:
                return self._mem[locator]
            except KeyError:
                raise NotFound(locator) from None
        try:
            offset, length = self._index[locator]
        except KeyError:
            raise NotFound(locator) from None
        with open(self.root / "store.log", "rb") as fh:
            fh.seek(offset)
            return fh.read(length)

    def locators(self) -> list[str]:
        keys = self._mem if self.root is None else self._index
        return sorted(keys)

    def store(self, payload: bytes) -> Anchored:
        self._check()
        encoded = self.codec.encode(payload)
        d = digest(encoded)
        with self._lock:
            n = len(self._index) if self.root is not None else len(self._mem)
            locator = f"review-{n:08d}"
            self._write(locator, encoded)
        return Anchored(d, locator)

    def fetch(self, ref: StorageRef) -> bytes:
        if not isinstance(ref, Anchored):
            raise WrongBackend(f"centralized store cannot resolve {type(ref).__name__}")
        self._check()
        data = self._read(ref.locator)
        actual = digest(data)
        if actual != ref.digest:
            raise TamperDetected(ref.digest, actual)
        return self.codec.decode(data)

    def tamper(self, locator: str, new_bytes: bytes) -> None:
        """Silently replace stored bytes, as a dishonest operator could."""
        with self._lock:
            self._read(locator)
            self._write(locator, bytes(new_bytes))

    def raw(self, locator: str) -> bytes:
        return self._read(locator)


class ContentAddressedStore(_Backend):
    """Blobs keyed by the digest of their encoded bytes.

    On disk: one file per blob under ``root``, named by the lowercase hex
    content id.  Nothing here can replace the bytes behind an existing id.
    """

    kind = "cas"

    def __init__(self, codec: PayloadCodec | None = None, root: str | os.PathLike | None = None):
        super().__init__(codec)
        self._mem: dict[bytes, bytes] = {}
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def __len__(self) -> int:
        if self.root is None:
            return len(self._mem)
        return sum(1 for _ in self.root.iterdir())

    def store(self, payload: bytes) -> ContentAddressed:
        self._check()
        encoded = self.codec.encode(payload)
        cid = digest(encoded)
        with self._lock:
            if self.root is None:
                self._mem.setdefault(cid, encoded)
            else:
                path = self.root / cid.hex()
                if not path.exists():
                    tmp = path.with_suffix(".tmp")
                    tmp.write_bytes(encoded)
                    tmp.replace(path)
        return ContentAddressed(cid)

    def fetch(self, ref: StorageRef) -> bytes:
        if not isinstance(ref, ContentAddressed):
            raise WrongBackend(f"content store cannot resolve {type(ref).__name__}")
        self._check()
        if self.root is None:
            data = self._mem.get(ref.content_id)
        else:
            path = self.root / ref.content_id.hex()
            data = path.read_bytes() if path.exists() else None
        if data is None:
            raise NotFound(ref.content_id.hex())
        actual = digest(data)
        if actual != ref.content_id:
            # only reachable through out-of-band disk corruption
            raise TamperDetected(ref.content_id, actual)
        return self.codec.decode(data)


Backend = Union[OnChainBackend, CentralizedStore, ContentAddressedStore]


def store_payload(backend: Backend, payload: bytes) -> StorageRef:
    if not payload:
        raise StorageError("payload must be non-empty")
    return backend.store(payload)


def fetch_payload(backend: Backend, ref: StorageRef) -> bytes:
    return backend.fetch(ref)


def tamper_centralized(backend: Backend, locator: str, new_bytes: bytes) -> None:
    if not isinstance(backend, CentralizedStore):
        raise WrongBackend(f"tampering hook only exists for the centralized store, not {backend.kind}")
    backend.tamper(locator, new_bytes)


@dataclass
class StorageSet:
    """One backend per reference kind, sharing a codec."""

    onchain: OnChainBackend
    centralized: CentralizedStore
    cas: ContentAddressedStore

    @classmethod
    def create(cls, codec: PayloadCodec | None = None, root: str | os.PathLike | None = None) -> "StorageSet":
        codec = codec or IdentityCodec()
        root = Path(root) if root is not None else None
        return cls(
            onchain=OnChainBackend(codec),
            centralized=CentralizedStore(codec, None if root is None else root / "central"),
            cas=ContentAddressedStore(codec, None if root is None else root / "cas"),
        )

    @property
    def codec(self) -> PayloadCodec:
        return self.onchain.codec

    def backend(self, kind: str) -> Backend:
        return {"onchain": self.onchain, "centralized": self.centralized, "cas": self.cas}[kind]

    def backend_for(self, ref: StorageRef) -> Backend:
        if isinstance(ref, OnChain):
            return self.onchain
        if isinstance(ref, Anchored):
            return self.centralized
        return self.cas

    def fetch(self, ref: StorageRef) -> bytes:
        return fetch_payload(self.backend_for(ref), ref)
