"""Contract state machines executed by the ledger.

Two contracts exist: :class:`ReviewContract` (vendor registry, authorization,
token ledger, review registry) and :class:`RefundPool` (vendor-funded miner
reimbursement for zero-gas-price review transactions).

Contract methods check every precondition before touching state, so a raised
:class:`ContractRevert` always leaves the contract unchanged.  The ledger
relies on this instead of snapshotting state per transaction.

Calls are encoded as one selector byte followed by canonically encoded
arguments (see :mod:`reviewchain.encoding`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Protocol, Union

from reviewchain import identity
from reviewchain.encoding import (
    DecodeError,
    Reader,
    digest,
    enc_bool,
    enc_bytes,
    enc_int,
    enc_str,
)
from reviewchain.identity import Address, KeyPair, ZERO_ADDRESS
from reviewchain.storage import StorageRef, encode_ref, read_ref

DEFAULT_REFUND_WINDOW = 1500


class ContractRevert(Exception):
    code = "reverted"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class Unauthorized(ContractRevert):
    code = "unauthorized"


class DuplicateReview(ContractRevert):
    code = "duplicate_review"


class MalformedReview(ContractRevert):
    code = "malformed_review"


class UnknownProduct(ContractRevert):
    code = "unknown_product"


class DuplicateRegistration(ContractRevert):
    code = "duplicate_registration"


class ClosedRegistration(ContractRevert):
    code = "closed_registration"


class WrongMode(ContractRevert):
    code = "wrong_mode"


class BadReceipt(ContractRevert):
    code = "bad_receipt"


class DoubleIssuance(ContractRevert):
    code = "double_issuance"


class TransferForbidden(ContractRevert):
    code = "transfer_forbidden"


class UnknownTransaction(ContractRevert):
    code = "unknown_transaction"


class NotSponsored(ContractRevert):
    code = "not_sponsored"


class NonzeroGasPrice(ContractRevert):
    code = "nonzero_gas_price"


class WrongMiner(ContractRevert):
    code = "wrong_miner"


class DoubleClaim(ContractRevert):
    code = "double_claim"


class InsufficientPool(ContractRevert):
    code = "insufficient_pool"


class NoFeeReference(ContractRevert):
    code = "no_fee_reference"


class InvalidAmount(ContractRevert):
    code = "invalid_amount"


class UnknownMethod(ContractRevert):
    code = "unknown_method"


class ExecutionContext(Protocol):
    """What the ledger exposes to a running contract."""

    sender: Address
    height: int
    address: Address

    def balance(self, account: Address) -> int: ...

    def transfer(self, src: Address, dst: Address, amount: int) -> None: ...

    def receipt(self, height: int, index: int): ...

    def median_fee(self, window: int) -> int: ...


# -- signed artifacts -------------------------------------------------------


@dataclass(frozen=True)
class PurchaseReceipt:
    buyer: Address
    product_id: str
    product_version: str
    vendor_signature: bytes

    @staticmethod
    def signing_bytes(buyer: Address, product_id: str, product_version: str) -> bytes:
        return b"receipt" + enc_bytes(buyer) + enc_str(product_id) + enc_str(product_version)


def sign_receipt(vendor_key: KeyPair, buyer: Address, product_id: str, product_version: str) -> PurchaseReceipt:
    msg = PurchaseReceipt.signing_bytes(buyer, product_id, product_version)
    return PurchaseReceipt(buyer, product_id, product_version, identity.sign(msg, vendor_key))


def review_signing_bytes(product_id: str, product_version: str, rating: int, payload_digest: bytes) -> bytes:
    return (
        b"review"
        + enc_str(product_id)
        + enc_str(product_version)
        + enc_int(rating)
        + enc_bytes(payload_digest)
    )


@dataclass(frozen=True)
class ReviewRecord:
    """The on-chain part of a review; the text lives behind ``storage_ref``."""

    product_id: str
    product_version: str
    rating: int
    author: Address
    storage_ref: StorageRef
    block_height: int
    public_key: bytes
    signature: bytes

    @property
    def payload_digest(self) -> bytes:
        return self.storage_ref.payload_digest

    def signature_valid(self) -> bool:
        try:
            if identity.derive_address(self.public_key) != self.author:
                return False
        except identity.IdentityError:
            return False
        msg = review_signing_bytes(self.product_id, self.product_version, self.rating, self.payload_digest)
        return identity.verify(msg, self.signature, self.public_key)

    def encode(self) -> bytes:
        return (
            enc_str(self.product_id)
            + enc_str(self.product_version)
            + enc_int(self.rating)
            + enc_bytes(self.author)
            + encode_ref(self.storage_ref)
            + enc_int(self.block_height)
            + enc_bytes(self.public_key)
            + enc_bytes(self.signature)
        )


@dataclass(frozen=True)
class Review:
    """A review as presented to readers: on-chain record plus decoded text."""

    product_id: str
    product_version: str
    rating: int
    text: bytes
    author: Address
    storage_ref: StorageRef
    block_height: int
    public_key: bytes = b""
    signature: bytes = b""

    @classmethod
    def from_record(cls, record: ReviewRecord, text: bytes) -> "Review":
        return cls(
            product_id=record.product_id,
            product_version=record.product_version,
            rating=record.rating,
            text=text,
            author=record.author,
            storage_ref=record.storage_ref,
            block_height=record.block_height,
            public_key=record.public_key,
            signature=record.signature,
        )


# -- call encoding ----------------------------------------------------------


class Call:
    SELECTOR: ClassVar[int]

    def encode_args(self) -> bytes:
        raise NotImplementedError

    @classmethod
    def read_args(cls, r: Reader) -> "Call":
        raise NotImplementedError

    def encode(self) -> bytes:
        return bytes([self.SELECTOR]) + self.encode_args()

    @property
    def storage_bytes(self) -> int:
        return 0


def _addr(r: Reader) -> Address:
    raw = r.bytes()
    try:
        return Address(raw)
    except identity.IdentityError as exc:
        raise DecodeError(str(exc)) from exc


@dataclass(frozen=True)
class DeployReviewContract(Call):
    SELECTOR: ClassVar[int] = 0x00
    mode: str
    open_registration: bool = True
    pool_address: Address = ZERO_ADDRESS

    def encode_args(self) -> bytes:
        return b"review" + enc_str(self.mode) + enc_bool(self.open_registration) + enc_bytes(self.pool_address)


@dataclass(frozen=True)
class DeployRefundPool(Call):
    SELECTOR: ClassVar[int] = 0x00
    review_contract: Address
    window: int = DEFAULT_REFUND_WINDOW

    def encode_args(self) -> bytes:
        return b"refund" + enc_bytes(self.review_contract) + enc_int(self.window)


@dataclass(frozen=True)
class RegisterVendor(Call):
    SELECTOR: ClassVar[int] = 0x01
    product_id: str
    vendor_public_key: bytes

    def encode_args(self) -> bytes:
        return enc_str(self.product_id) + enc_bytes(self.vendor_public_key)

    @classmethod
    def read_args(cls, r: Reader) -> "RegisterVendor":
        return cls(r.str(), r.bytes())


@dataclass(frozen=True)
class WhitelistRegister(Call):
    SELECTOR: ClassVar[int] = 0x02
    address: Address

    def encode_args(self) -> bytes:
        return enc_bytes(self.address)

    @classmethod
    def read_args(cls, r: Reader) -> "WhitelistRegister":
        return cls(_addr(r))


@dataclass(frozen=True)
class IssueToken(Call):
    SELECTOR: ClassVar[int] = 0x03
    receipt: PurchaseReceipt

    def encode_args(self) -> bytes:
        rc = self.receipt
        return (
            enc_bytes(rc.buyer)
            + enc_str(rc.product_id)
            + enc_str(rc.product_version)
            + enc_bytes(rc.vendor_signature)
        )

    @classmethod
    def read_args(cls, r: Reader) -> "IssueToken":
        return cls(PurchaseReceipt(_addr(r), r.str(), r.str(), r.bytes()))


@dataclass(frozen=True)
class TokenTransfer(Call):
    SELECTOR: ClassVar[int] = 0x04
    to: Address
    product_id: str
    product_version: str
    amount: int = 1

    def encode_args(self) -> bytes:
        return enc_bytes(self.to) + enc_str(self.product_id) + enc_str(self.product_version) + enc_int(self.amount)

    @classmethod
    def read_args(cls, r: Reader) -> "TokenTransfer":
        return cls(_addr(r), r.str(), r.str(), r.int())


@dataclass(frozen=True)
class SubmitReview(Call):
    SELECTOR: ClassVar[int] = 0x05
    product_id: str
    product_version: str
    rating: int
    storage_ref: StorageRef
    public_key: bytes
    signature: bytes

    def encode_args(self) -> bytes:
        return (
            enc_str(self.product_id)
            + enc_str(self.product_version)
            + enc_int(self.rating)
            + encode_ref(self.storage_ref)
            + enc_bytes(self.public_key)
            + enc_bytes(self.signature)
        )

    @classmethod
    def read_args(cls, r: Reader) -> "SubmitReview":
        return cls(r.str(), r.str(), r.int(), read_ref(r), r.bytes(), r.bytes())

    @property
    def storage_bytes(self) -> int:
        return self.storage_ref.stored_bytes


@dataclass(frozen=True)
class DepositPool(Call):
    SELECTOR: ClassVar[int] = 0x10
    amount: int

    def encode_args(self) -> bytes:
        return enc_int(self.amount)

    @classmethod
    def read_args(cls, r: Reader) -> "DepositPool":
        return cls(r.int())


@dataclass(frozen=True)
class ClaimRefund(Call):
    SELECTOR: ClassVar[int] = 0x11
    height: int
    tx_index: int

    def encode_args(self) -> bytes:
        return enc_int(self.height) + enc_int(self.tx_index)

    @classmethod
    def read_args(cls, r: Reader) -> "ClaimRefund":
        return cls(r.int(), r.int())


_CALLS = {c.SELECTOR: c for c in (RegisterVendor, WhitelistRegister, IssueToken, TokenTransfer, SubmitReview, DepositPool, ClaimRefund)}


def decode_call(payload: bytes) -> Call:
    if not payload:
        raise DecodeError("empty call payload")
    r = Reader(payload)
    selector = r.byte()
    if selector == 0x00:
        kind = r.fixed(6)
        if kind == b"review":
            call: Call = DeployReviewContract(r.str(), r.bool(), _addr(r))
        elif kind == b"refund":
            call = DeployRefundPool(_addr(r), r.int())
        else:
            raise DecodeError(f"unknown contract kind {kind!r}")
    else:
        try:
            cls = _CALLS[selector]
        except KeyError:
            raise DecodeError(f"unknown selector 0x{selector:02x}") from None
        call = cls.read_args(r)
    r.finish()
    return call


def prepare_review(
    author_key: KeyPair,
    product_id: str,
    product_version: str,
    rating: int,
    storage_ref: StorageRef,
) -> SubmitReview:
    """Author-sign a review whose payload has already been stored."""
    msg = review_signing_bytes(product_id, product_version, rating, storage_ref.payload_digest)
    return SubmitReview(
        product_id=product_id,
        product_version=product_version,
        rating=rating,
        storage_ref=storage_ref,
        public_key=author_key.public_key,
        signature=identity.sign(msg, author_key),
    )


# -- authorization modes ----------------------------------------------------


@dataclass
class Whitelist:
    addresses: set = field(default_factory=set)
    open_registration: bool = True
    name: ClassVar[str] = "whitelist"


@dataclass
class AccessToken:
    # (holder, product_id, product_version) -> count; only issue/consume touch it
    balances: dict = field(default_factory=dict)
    issued: set = field(default_factory=set)
    consumed: set = field(default_factory=set)
    name: ClassVar[str] = "token"


@dataclass
class PoolKey:
    shared_address: Address
    name: ClassVar[str] = "pool"


AuthorizationMode = Union[Whitelist, AccessToken, PoolKey]

MODE_NAMES = ("whitelist", "token", "pool")


def make_mode(name: str, open_registration: bool = True, pool_address: Address = ZERO_ADDRESS) -> AuthorizationMode:
    if name == "whitelist":
        return Whitelist(set(), open_registration)
    if name == "token":
        return AccessToken()
    if name == "pool":
        if pool_address == ZERO_ADDRESS:
            raise ValueError("pool mode needs a shared address")
        return PoolKey(pool_address)
    raise ValueError(f"unknown authorization mode {name!r}")


# -- contracts --------------------------------------------------------------


class ReviewContract:
    kind = "review"

    def __init__(self, owner: Address, mode: AuthorizationMode):
        self.owner = owner
        self.mode = mode
        self.vendors: dict[str, bytes] = {}
        self.reviews: dict[tuple[Address, str, str], ReviewRecord] = {}
        self.order: list[tuple[Address, str, str]] = []

    def clone(self) -> "ReviewContract":
        other = ReviewContract.__new__(ReviewContract)
        other.owner = self.owner
        mode = self.mode
        if isinstance(mode, Whitelist):
            other.mode = Whitelist(set(mode.addresses), mode.open_registration)
        elif isinstance(mode, AccessToken):
            other.mode = AccessToken(dict(mode.balances), set(mode.issued), set(mode.consumed))
        else:
            other.mode = PoolKey(mode.shared_address)
        other.vendors = dict(self.vendors)
        other.reviews = dict(self.reviews)
        other.order = list(self.order)
        return other

    # vendor registry

    def register_vendor(self, caller: Address, product_id: str, vendor_public_key: bytes) -> None:
        if not product_id:
            raise UnknownProduct("empty product id")
        if product_id in self.vendors:
            raise DuplicateRegistration(f"product {product_id!r} already registered")
        try:
            vendor = identity.derive_address(vendor_public_key)
        except identity.IdentityError as exc:
            raise Unauthorized("malformed vendor key") from exc
        if vendor != caller:
            raise Unauthorized("only the key holder may register as vendor")
        self.vendors[product_id] = bytes(vendor_public_key)

    def vendor_key(self, product_id: str) -> bytes:
        try:
            return self.vendors[product_id]
        except KeyError:
            raise UnknownProduct(product_id) from None

    # whitelist

    def whitelist_register(self, caller: Address, address: Address) -> None:
        if not isinstance(self.mode, Whitelist):
            raise WrongMode(f"whitelist registration under {self.mode.name} mode")
        if not self.mode.open_registration and caller != self.owner:
            raise ClosedRegistration("registration is closed")
        # no proof of app download or purchase is possible here
        self.mode.addresses.add(address)

    # access tokens

    def issue_token(self, caller: Address, receipt: PurchaseReceipt) -> None:
        if not isinstance(self.mode, AccessToken):
            raise WrongMode(f"token issuance under {self.mode.name} mode")
        vendor_pub = self.vendor_key(receipt.product_id)
        msg = PurchaseReceipt.signing_bytes(receipt.buyer, receipt.product_id, receipt.product_version)
        if not identity.verify(msg, receipt.vendor_signature, vendor_pub):
            raise BadReceipt("receipt not signed by the product vendor")
        slot = (receipt.buyer, receipt.product_id, receipt.product_version)
        if slot in self.mode.issued:
            raise DoubleIssuance("token already issued for this purchase")
        self.mode.issued.add(slot)
        self.mode.balances[slot] = 1

    def token_balance(self, holder: Address, product_id: str, product_version: str) -> int:
        if not isinstance(self.mode, AccessToken):
            return 0
        return self.mode.balances.get((holder, product_id, product_version), 0)

    def token_transfer(self, caller: Address, to: Address, product_id: str, product_version: str = "", amount: int = 1) -> None:
        raise TransferForbidden("review tokens cannot change hands")

    # reviews

    def has_reviewed(self, author: Address, product_id: str, product_version: str) -> bool:
        return (author, product_id, product_version) in self.reviews

    def _authorize(self, caller: Address, product_id: str, product_version: str) -> None:
        mode = self.mode
        if isinstance(mode, Whitelist):
            if caller not in mode.addresses:
                raise Unauthorized("sender not whitelisted")
        elif isinstance(mode, AccessToken):
            if mode.balances.get((caller, product_id, product_version), 0) < 1:
                raise Unauthorized("sender holds no review token for this product version")
        elif caller != mode.shared_address:
            raise Unauthorized("sender is not the app pool key")

    def submit_review(self, caller: Address, call: SubmitReview, height: int) -> ReviewRecord:
        if not 1 <= call.rating <= 5:
            raise MalformedReview(f"rating {call.rating} outside 1..5")
        if not call.product_id:
            raise MalformedReview("empty product id")
        self.vendor_key(call.product_id)
        record = ReviewRecord(
            product_id=call.product_id,
            product_version=call.product_version,
            rating=call.rating,
            author=caller,
            storage_ref=call.storage_ref,
            block_height=height,
            public_key=call.public_key,
            signature=call.signature,
        )
        if not record.signature_valid():
            raise MalformedReview("review signature does not match sender")
        key = (caller, call.product_id, call.product_version)
        if key in self.reviews:
            raise DuplicateReview("sender already reviewed this product version")
        self._authorize(caller, call.product_id, call.product_version)
        if isinstance(self.mode, AccessToken):
            self.mode.balances[key] -= 1
            self.mode.consumed.add(key)
        self.reviews[key] = record
        self.order.append(key)
        return record

    def list_reviews(self, product_id: str, product_version: str | None = None) -> list[ReviewRecord]:
        out = []
        for key in self.order:
            rec = self.reviews[key]
            if rec.product_id == product_id and (product_version is None or rec.product_version == product_version):
                out.append(rec)
        return out

    def execute(self, ctx: ExecutionContext, call: Call) -> None:
        if isinstance(call, RegisterVendor):
            self.register_vendor(ctx.sender, call.product_id, call.vendor_public_key)
        elif isinstance(call, WhitelistRegister):
            self.whitelist_register(ctx.sender, call.address)
        elif isinstance(call, IssueToken):
            self.issue_token(ctx.sender, call.receipt)
        elif isinstance(call, TokenTransfer):
            self.token_transfer(ctx.sender, call.to, call.product_id, call.product_version, call.amount)
        elif isinstance(call, SubmitReview):
            self.submit_review(ctx.sender, call, ctx.height)
        else:
            raise UnknownMethod(type(call).__name__)

    def encode_state(self) -> bytes:
        mode = self.mode
        out = [enc_bytes(self.owner), enc_str(mode.name)]
        if isinstance(mode, Whitelist):
            out.append(enc_bool(mode.open_registration))
            out.append(enc_int(len(mode.addresses)))
            out += [enc_bytes(a) for a in sorted(mode.addresses)]
        elif isinstance(mode, AccessToken):
            out.append(enc_int(len(mode.issued)))
            for slot in sorted(mode.issued):
                holder, pid, ver = slot
                out.append(enc_bytes(holder) + enc_str(pid) + enc_str(ver))
                out.append(enc_int(mode.balances.get(slot, 0)))
        else:
            out.append(enc_bytes(mode.shared_address))
        out.append(enc_int(len(self.vendors)))
        for pid in sorted(self.vendors):
            out.append(enc_str(pid) + enc_bytes(self.vendors[pid]))
        out.append(enc_int(len(self.order)))
        out += [self.reviews[k].encode() for k in self.order]
        return b"".join(out)


class RefundPool:
    """Vendor deposits that reimburse miners for zero-price review transactions.

    The pool's Gwei sits in the ledger balance of the pool's own address;
    ``vendor_deposits`` and ``refunds_paid`` are the bookkeeping used for the
    ledger identity ``balance == sum(deposits) - sum(refunds)``.
    """

    kind = "refund"

    def __init__(self, address: Address, review_contract: Address, window: int = DEFAULT_REFUND_WINDOW):
        if window < 1:
            raise ValueError("refund window must be >= 1 block")
        self.address = address
        self.review_contract = review_contract
        self.window = window
        self.vendor_deposits: dict[Address, int] = {}
        self.refunds_paid: dict[Address, int] = {}
        self.claimed: set[tuple[int, int]] = set()

    def clone(self) -> "RefundPool":
        other = RefundPool(self.address, self.review_contract, self.window)
        other.vendor_deposits = dict(self.vendor_deposits)
        other.refunds_paid = dict(self.refunds_paid)
        other.claimed = set(self.claimed)
        return other

    @property
    def total_deposits(self) -> int:
        return sum(self.vendor_deposits.values())

    @property
    def total_refunds(self) -> int:
        return sum(self.refunds_paid.values())

    def deposit(self, ctx: ExecutionContext, amount: int) -> None:
        if amount <= 0:
            raise InvalidAmount("deposit must be positive")
        if ctx.balance(ctx.sender) < amount:
            raise InvalidAmount("deposit exceeds sender balance")
        ctx.transfer(ctx.sender, self.address, amount)
        self.vendor_deposits[ctx.sender] = self.vendor_deposits.get(ctx.sender, 0) + amount

    def claim_refund(self, ctx: ExecutionContext, height: int, tx_index: int) -> int:
        receipt = ctx.receipt(height, tx_index)
        if receipt is None:
            raise UnknownTransaction(f"no transaction at block {height} index {tx_index}")
        if receipt.recipient != self.review_contract:
            raise NotSponsored("transaction did not target the review contract")
        if receipt.gas_price != 0:
            raise NonzeroGasPrice(f"gas price was {receipt.gas_price}")
        if receipt.miner != ctx.sender:
            raise WrongMiner("only the including miner may claim")
        if (height, tx_index) in self.claimed:
            raise DoubleClaim("refund already paid")
        median = ctx.median_fee(self.window)
        if median == 0:
            raise NoFeeReference("no paid transactions in the fee window")
        amount = median * receipt.gas_used
        if ctx.balance(self.address) < amount:
            raise InsufficientPool(f"pool holds {ctx.balance(self.address)}, refund needs {amount}")
        ctx.transfer(self.address, ctx.sender, amount)
        self.claimed.add((height, tx_index))
        self.refunds_paid[ctx.sender] = self.refunds_paid.get(ctx.sender, 0) + amount
        return amount

    def execute(self, ctx: ExecutionContext, call: Call) -> None:
        if isinstance(call, DepositPool):
            self.deposit(ctx, call.amount)
        elif isinstance(call, ClaimRefund):
            self.claim_refund(ctx, call.height, call.tx_index)
        else:
            raise UnknownMethod(type(call).__name__)

    def encode_state(self) -> bytes:
        out = [enc_bytes(self.review_contract), enc_int(self.window), enc_int(len(self.vendor_deposits))]
        out += [enc_bytes(a) + enc_int(v) for a, v in sorted(self.vendor_deposits.items())]
        out.append(enc_int(len(self.refunds_paid)))
        out += [enc_bytes(a) + enc_int(v) for a, v in sorted(self.refunds_paid.items())]
        out.append(enc_int(len(self.claimed)))
        out += [enc_int(h) + enc_int(i) for h, i in sorted(self.claimed)]
        return b"".join(out)


Contract = Union[ReviewContract, RefundPool]


def contract_address(deployer: Address, nonce: int) -> Address:
    return Address(digest(b"create" + enc_bytes(deployer) + enc_int(nonce))[-20:])
