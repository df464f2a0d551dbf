"""Reading reviews back, with verification.

Two readers are provided.  :class:`LocalReplica` replays a chain dump from
genesis and resolves payloads itself, so nothing it returns depends on a
third party.  :class:`RemoteNode` answers from someone else's node; its
``tamper_hook`` models a dishonest operator rewriting responses.

Every returned review is checked client-side: the text must hash to the
digest in its storage reference, and the author's signature must cover
product, version, rating and that digest.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

from reviewchain import ledger
from reviewchain.contracts import Review, ReviewContract, ReviewRecord
from reviewchain.encoding import digest
from reviewchain.identity import Address
from reviewchain.storage import (
    BackendUnavailable,
    NotFound,
    StorageError,
    StorageSet,
    TamperDetected,
)

VERIFIED = "verified"
TAMPERED = "tampered"
UNAVAILABLE = "unavailable"
DIVERGENT = "divergent"
OMITTED = "omitted"

# fields a reader can compare across nodes
REVIEW_FIELDS = tuple(f.name for f in dataclasses.fields(Review))


class RetrievalError(Exception):
    pass


class UnknownProduct(RetrievalError):
    pass


class NotSynced(RetrievalError):
    pass


@dataclass(frozen=True)
class ReviewView:
    review: Review
    status: str
    detail: str = ""


@dataclass(frozen=True)
class SyncReport:
    blocks: int
    bytes: int
    state_root: bytes


def verify_review(review: Review, storage: StorageSet) -> tuple[str, str]:
    """Client-side check of a review obtained from any source."""
    encoded = storage.codec.encode(review.text)
    if digest(encoded) != review.storage_ref.payload_digest:
        return TAMPERED, "text does not match committed digest"
    record = ReviewRecord(
        product_id=review.product_id,
        product_version=review.product_version,
        rating=review.rating,
        author=review.author,
        storage_ref=review.storage_ref,
        block_height=review.block_height,
        public_key=review.public_key,
        signature=review.signature,
    )
    if not record.signature_valid():
        return TAMPERED, "author signature does not verify"
    return VERIFIED, ""


def _find_review_contract(state: ledger.ChainState, address: Address | None) -> ReviewContract:
    if address is not None:
        c = state.contracts.get(address)
        if not isinstance(c, ReviewContract):
            raise RetrievalError(f"no review contract at {address}")
        return c
    found = [c for c in state.contracts.values() if isinstance(c, ReviewContract)]
    if len(found) != 1:
        raise RetrievalError(f"expected exactly one review contract, found {len(found)}")
    return found[0]


def _materialize(records: list[ReviewRecord], storage: StorageSet) -> list[tuple[ReviewRecord, bytes | None, str, str]]:
    out = []
    for rec in records:
        try:
            text = storage.fetch(rec.storage_ref)
        except TamperDetected as exc:
            out.append((rec, None, TAMPERED, str(exc)))
            continue
        except (NotFound, BackendUnavailable) as exc:
            out.append((rec, None, UNAVAILABLE, str(exc)))
            continue
        except StorageError as exc:
            out.append((rec, None, TAMPERED, str(exc)))
            continue
        out.append((rec, text, "", ""))
    return out


class LocalReplica:
    """A reader that holds its own full copy of the chain."""

    def __init__(self, storage: StorageSet, contract: Address | None = None):
        self.storage = storage
        self.contract = contract
        self.state: ledger.ChainState | None = None
        self.blocks: list[ledger.Block] = []
        self.last_sync: SyncReport | None = None

    @property
    def state_root(self) -> bytes:
        if self.state is None:
            raise NotSynced("replica has not synced")
        return self.state.state_root()

    def records(self, product_id: str, product_version: str | None) -> list[ReviewRecord]:
        if self.state is None:
            raise NotSynced("replica has not synced")
        c = _find_review_contract(self.state, self.contract)
        if product_id not in c.vendors:
            raise UnknownProduct(product_id)
        return c.list_reviews(product_id, product_version)

    def fetch_reviews(self, product_id: str, product_version: str | None = None) -> list[ReviewView]:
        views = []
        for rec, text, status, detail in _materialize(self.records(product_id, product_version), self.storage):
            if text is None:
                views.append(ReviewView(Review.from_record(rec, b""), status, detail))
                continue
            review = Review.from_record(rec, text)
            status, detail = verify_review(review, self.storage)
            views.append(ReviewView(review, status, detail))
        return views


ReviewHook = Callable[[Review], Optional[Review]]


class RemoteNode:
    """A reader that trusts another party's node to answer queries.

    ``tamper_hook`` sees every review the node is about to return and may
    replace it (or drop it by returning ``None``).  The default passes
    everything through.
    """

    def __init__(
        self,
        chain: ledger.Chain | ledger.ChainState,
        storage: StorageSet,
        tamper_hook: ReviewHook | None = None,
        contract: Address | None = None,
    ):
        self._chain = chain
        self.storage = storage
        self.tamper_hook = tamper_hook
        self.contract = contract

    @property
    def state(self) -> ledger.ChainState:
        return self._chain.state if isinstance(self._chain, ledger.Chain) else self._chain

    def fetch_reviews(self, product_id: str, product_version: str | None = None) -> list[ReviewView]:
        c = _find_review_contract(self.state, self.contract)
        if product_id not in c.vendors:
            raise UnknownProduct(product_id)
        views = []
        for rec, text, status, detail in _materialize(c.list_reviews(product_id, product_version), self.storage):
            review = Review.from_record(rec, text if text is not None else b"")
            if self.tamper_hook is not None:
                review = self.tamper_hook(review)
                if review is None:
                    continue
            if text is None:
                views.append(ReviewView(review, status, detail))
                continue
            status, detail = verify_review(review, self.storage)
            views.append(ReviewView(review, status, detail))
        return views


Reader = LocalReplica | RemoteNode


def _key(review: Review) -> tuple[Address, str, str]:
    return (review.author, review.product_id, review.product_version)


def list_reviews(
    reader: Reader,
    product_id: str,
    product_version: str | None = None,
    cross_check: Reader | None = None,
) -> list[tuple[Review, str]]:
    """Reviews for a product (optionally one version) with their status.

    With ``cross_check`` set, verified reviews that differ from the reference
    reader's copy are marked ``divergent``, and reviews the reference has but
    ``reader`` did not return are appended as ``omitted``.
    """
    views = reader.fetch_reviews(product_id, product_version)
    out = [(v.review, v.status) for v in views]
    if cross_check is None:
        return out
    reference = {_key(v.review): v.review for v in cross_check.fetch_reviews(product_id, product_version)}
    checked = []
    seen = set()
    for review, status in out:
        seen.add(_key(review))
        if status == VERIFIED and reference.get(_key(review)) != review:
            status = DIVERGENT
        checked.append((review, status))
    for key, review in reference.items():
        if key not in seen:
            checked.append((review, OMITTED))
    return checked


def sync_local(reader: LocalReplica, dump: str) -> LocalReplica:
    """Replay ``dump`` from genesis into ``reader``.

    Raises :class:`ledger.CorruptDump` for malformed or truncated dumps and
    :class:`ledger.StateRootMismatch` if any block's state root disagrees with
    the replayed state.
    """
    blocks, schedule = ledger.load_chain(dump)
    state = ledger.replay(blocks, schedule)
    reader.state = state
    reader.blocks = blocks
    reader.last_sync = SyncReport(blocks=len(blocks), bytes=len(dump.encode("utf-8")), state_root=state.state_root())
    return reader


def changed_fields(original: Review, served: Review) -> list[str]:
    return [name for name in REVIEW_FIELDS if getattr(original, name) != getattr(served, name)]


def tamper_residue(hook: ReviewHook, reviews: list[Review], storage: StorageSet) -> list[str]:
    """Fields a hook can rewrite without the client-side check noticing.

    Each review is passed through ``hook``; if the served copy still verifies
    yet differs from the original, the differing fields are residue.  Such
    changes are only caught by cross-checking another reader.
    """
    residue: set[str] = set()
    for review in reviews:
        served = hook(review)
        if served is None:
            continue
        diff = changed_fields(review, served)
        if diff and verify_review(served, storage)[0] == VERIFIED:
            residue.update(diff)
    return sorted(residue)
