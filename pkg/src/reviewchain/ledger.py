"""Account-based ledger with gas accounting and deterministic block production.

Consensus is replaced by a single proposer per block; any node that replays
the same block sequence from genesis reaches byte-identical state roots.

Transaction processing inside a block follows the usual account-model rules:
the sender is debited ``gas_limit * gas_price`` up front, the contract call
runs, the unused part is returned and ``gas_used * gas_price`` goes to the
block's miner.  A contract-level revert is a *valid* transaction (nonce
consumed, base gas charged); a bad signature, wrong nonce or unfunded fee is
an *invalid* transaction and invalidates the whole block.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from reviewchain import contracts, identity
from reviewchain.contracts import (
    Call,
    ContractRevert,
    DeployRefundPool,
    DeployReviewContract,
    RefundPool,
    ReviewContract,
)
from reviewchain.encoding import DecodeError, Reader, digest, enc_bool, enc_bytes, enc_int, enc_str
from reviewchain.identity import Address, KeyPair, ZERO_ADDRESS

GWEI_PER_ETH = 10**9
CHAIN_FORMAT = "reviewchain-chain"
CHAIN_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GasSchedule:
    storage_gas_per_byte: int = 625
    base_transaction_gas: int = 21_000
    gwei_per_eth: int = GWEI_PER_ETH

    def storage_gas(self, nbytes: int) -> int:
        return self.storage_gas_per_byte * nbytes

    def encode(self) -> bytes:
        return enc_int(self.storage_gas_per_byte) + enc_int(self.base_transaction_gas) + enc_int(self.gwei_per_eth)


# -- errors -----------------------------------------------------------------


class LedgerError(Exception):
    pass


class MempoolError(LedgerError):
    reason = "rejected"


class BadSignature(MempoolError):
    reason = "bad_signature"


class StaleNonce(MempoolError):
    reason = "stale_nonce"


class AlreadyPending(MempoolError):
    reason = "already_pending"


class InsufficientFunds(MempoolError):
    reason = "insufficient_funds"


class BlockInvalid(LedgerError):
    pass


class ParentMismatch(BlockInvalid):
    pass


class StateRootMismatch(BlockInvalid):
    pass


class InvalidTransaction(BlockInvalid):
    def __init__(self, index: int, message: str):
        super().__init__(f"transaction {index}: {message}")
        self.index = index


class CorruptDump(LedgerError):
    pass


# -- transactions -----------------------------------------------------------


@dataclass(frozen=True)
class SignedTransaction:
    sender: Address
    recipient: Address
    nonce: int
    payload: bytes
    gas_price: int
    gas_limit: int
    public_key: bytes
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        return (
            b"tx"
            + enc_bytes(self.sender)
            + enc_bytes(self.recipient)
            + enc_int(self.nonce)
            + enc_bytes(self.payload)
            + enc_int(self.gas_price)
            + enc_int(self.gas_limit)
            + enc_bytes(self.public_key)
        )

    def encode(self) -> bytes:
        return self.signing_bytes() + enc_bytes(self.signature)

    @classmethod
    def decode(cls, data: bytes) -> "SignedTransaction":
        r = Reader(data)
        if r.fixed(2) != b"tx":
            raise DecodeError("not a transaction")
        try:
            tx = cls(
                sender=Address(r.bytes()),
                recipient=Address(r.bytes()),
                nonce=r.int(),
                payload=r.bytes(),
                gas_price=r.int(),
                gas_limit=r.int(),
                public_key=r.bytes(),
                signature=r.bytes(),
            )
        except identity.IdentityError as exc:
            raise DecodeError(str(exc)) from exc
        r.finish()
        return tx

    @property
    def tx_hash(self) -> bytes:
        return digest(self.encode())

    def signature_valid(self) -> bool:
        try:
            if identity.derive_address(self.public_key) != self.sender:
                return False
        except identity.IdentityError:
            return False
        return identity.verify(self.signing_bytes(), self.signature, self.public_key)


def default_gas_limit(payload: bytes, schedule: GasSchedule = GasSchedule()) -> int:
    # the stored part of a call never exceeds the call payload itself
    return schedule.base_transaction_gas + schedule.storage_gas(len(payload))


def build_transaction(
    sender_key: KeyPair,
    recipient: Address,
    payload: bytes | Call,
    gas_price: int,
    nonce: int,
    gas_limit: int | None = None,
    schedule: GasSchedule = GasSchedule(),
) -> SignedTransaction:
    if isinstance(payload, Call):
        payload = payload.encode()
    if gas_price < 0:
        raise ValueError("gas price must be >= 0")
    if nonce < 0:
        raise ValueError("nonce must be >= 0")
    if gas_limit is None:
        gas_limit = default_gas_limit(payload, schedule)
    unsigned = SignedTransaction(
        sender=sender_key.address,
        recipient=Address(recipient),
        nonce=nonce,
        payload=bytes(payload),
        gas_price=gas_price,
        gas_limit=gas_limit,
        public_key=sender_key.public_key,
    )
    sig = identity.sign(unsigned.signing_bytes(), sender_key)
    return SignedTransaction(**{**unsigned.__dict__, "signature": sig})


# -- receipts, blocks, state ------------------------------------------------


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    height: int
    index: int
    sender: Address
    recipient: Address
    gas_price: int
    gas_used: int
    storage_gas: int
    success: bool
    reason: str
    miner: Address
    created: Address = ZERO_ADDRESS

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price

    def encode(self) -> bytes:
        return (
            enc_bytes(self.tx_hash)
            + enc_int(self.height)
            + enc_int(self.index)
            + enc_bytes(self.sender)
            + enc_bytes(self.recipient)
            + enc_int(self.gas_price)
            + enc_int(self.gas_used)
            + enc_int(self.storage_gas)
            + enc_bool(self.success)
            + enc_str(self.reason)
            + enc_bytes(self.miner)
            + enc_bytes(self.created)
        )


@dataclass(frozen=True)
class Block:
    height: int
    parent_digest: bytes
    miner: Address
    transactions: tuple[SignedTransaction, ...]
    state_root: bytes
    mints: tuple[tuple[Address, int], ...] = ()

    def header_bytes(self) -> bytes:
        out = [enc_int(self.height), enc_bytes(self.parent_digest), enc_bytes(self.miner)]
        out.append(enc_int(len(self.mints)))
        out += [enc_bytes(a) + enc_int(v) for a, v in self.mints]
        out.append(enc_int(len(self.transactions)))
        out += [enc_bytes(tx.tx_hash) for tx in self.transactions]
        out.append(enc_bytes(self.state_root))
        return b"".join(out)

    def digest(self) -> bytes:
        return digest(self.header_bytes())

    def to_record(self) -> dict:
        return {
            "height": self.height,
            "parent": self.parent_digest.hex(),
            "miner": self.miner.hex(),
            "mints": [[a.hex(), v] for a, v in self.mints],
            "txs": [tx.encode().hex() for tx in self.transactions],
            "state_root": self.state_root.hex(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Block":
        return cls(
            height=int(rec["height"]),
            parent_digest=bytes.fromhex(rec["parent"]),
            miner=Address(rec["miner"]),
            transactions=tuple(SignedTransaction.decode(bytes.fromhex(t)) for t in rec["txs"]),
            state_root=bytes.fromhex(rec["state_root"]),
            mints=tuple((Address(a), int(v)) for a, v in rec["mints"]),
        )


GENESIS_DIGEST = bytes(32)


@dataclass
class ChainState:
    schedule: GasSchedule = field(default_factory=GasSchedule)
    balances: dict[Address, int] = field(default_factory=dict)
    nonces: dict[Address, int] = field(default_factory=dict)
    contracts: dict[Address, contracts.Contract] = field(default_factory=dict)
    # gas prices of every included transaction, one list per block
    fee_history: list[list[int]] = field(default_factory=list)
    receipts: dict[tuple[int, int], Receipt] = field(default_factory=dict)
    sponsored: set[Address] = field(default_factory=set)
    minted: int = 0
    height: int = 0
    head: bytes = GENESIS_DIGEST

    def balance(self, account: Address) -> int:
        return self.balances.get(account, 0)

    def nonce(self, account: Address) -> int:
        return self.nonces.get(account, 0)

    def copy(self) -> "ChainState":
        # containers are copied, their immutable values shared
        return ChainState(
            schedule=self.schedule,
            balances=dict(self.balances),
            nonces=dict(self.nonces),
            contracts={a: c.clone() for a, c in self.contracts.items()},
            fee_history=list(self.fee_history),
            receipts=dict(self.receipts),
            sponsored=set(self.sponsored),
            minted=self.minted,
            height=self.height,
            head=self.head,
        )

    def contract(self, address: Address) -> contracts.Contract:
        try:
            return self.contracts[address]
        except KeyError:
            raise LedgerError(f"no contract at {address}") from None

    def canonical_bytes(self) -> bytes:
        out = [self.schedule.encode(), enc_int(self.height), enc_int(self.minted)]
        out.append(enc_int(len(self.balances)))
        out += [enc_bytes(a) + enc_int(v) for a, v in sorted(self.balances.items())]
        out.append(enc_int(len(self.nonces)))
        out += [enc_bytes(a) + enc_int(v) for a, v in sorted(self.nonces.items())]
        out.append(enc_int(len(self.contracts)))
        for addr in sorted(self.contracts):
            c = self.contracts[addr]
            out.append(enc_bytes(addr) + enc_str(c.kind) + enc_bytes(c.encode_state()))
        out.append(enc_int(len(self.fee_history)))
        for prices in self.fee_history:
            out.append(enc_int(len(prices)) + b"".join(enc_int(p) for p in prices))
        out.append(enc_int(len(self.receipts)))
        out += [self.receipts[k].encode() for k in sorted(self.receipts)]
        out.append(enc_int(len(self.sponsored)))
        out += [enc_bytes(a) for a in sorted(self.sponsored)]
        return b"".join(out)

    def state_root(self) -> bytes:
        return digest(self.canonical_bytes())

    def total_balance(self) -> int:
        return sum(self.balances.values())


def faucet_fund(state: ChainState, target: Address, amount: int) -> ChainState:
    """Mint ``amount`` Gwei to ``target``; the mint is tallied in ``minted``."""
    if amount <= 0:
        raise ValueError("faucet amount must be positive")
    new = state.copy()
    _mint(new, target, amount)
    return new


def _mint(state: ChainState, target: Address, amount: int) -> None:
    if amount <= 0:
        raise ValueError("mint amount must be positive")
    state.balances[target] = state.balance(target) + amount
    state.minted += amount


def median_fee(state: ChainState, window: int) -> int:
    """Median non-zero gas price paid over the last ``window`` blocks.

    Sponsored zero-price transactions are left out; for an even count the
    lower middle value is used so the result stays a whole Gwei amount.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    prices = [p for block in state.fee_history[-window:] for p in block if p > 0]
    if not prices:
        return 0
    return statistics.median_low(prices)


# -- execution --------------------------------------------------------------


class _Context:
    def __init__(self, state: ChainState, sender: Address, height: int, address: Address):
        self._state = state
        self.sender = sender
        self.height = height
        self.address = address

    def balance(self, account: Address) -> int:
        return self._state.balance(account)

    def transfer(self, src: Address, dst: Address, amount: int) -> None:
        if amount < 0 or self._state.balance(src) < amount:
            raise ContractRevert("transfer exceeds balance")
        self._state.balances[src] = self._state.balance(src) - amount
        self._state.balances[dst] = self._state.balance(dst) + amount

    def receipt(self, height: int, index: int) -> Receipt | None:
        return self._state.receipts.get((height, index))

    def median_fee(self, window: int) -> int:
        return median_fee(self._state, window)


def _run_call(state: ChainState, tx: SignedTransaction, height: int) -> tuple[bool, str, int, Address]:
    """Execute the call; returns (success, reason, storage_bytes, created)."""
    try:
        call = contracts.decode_call(tx.payload) if tx.payload else None
    except DecodeError as exc:
        return False, f"bad_payload: {exc}", 0, ZERO_ADDRESS

    if tx.recipient == ZERO_ADDRESS:
        if not isinstance(call, (DeployReviewContract, DeployRefundPool)):
            return False, "bad_payload: not a deployment", 0, ZERO_ADDRESS
        addr = contracts.contract_address(tx.sender, tx.nonce)
        if isinstance(call, DeployReviewContract):
            try:
                mode = contracts.make_mode(call.mode, call.open_registration, call.pool_address)
            except ValueError as exc:
                return False, f"bad_deploy: {exc}", 0, ZERO_ADDRESS
            state.contracts[addr] = ReviewContract(tx.sender, mode)
        else:
            target = state.contracts.get(call.review_contract)
            if not isinstance(target, ReviewContract) or call.window < 1:
                return False, "bad_deploy: refund pool needs a review contract", 0, ZERO_ADDRESS
            state.contracts[addr] = RefundPool(addr, call.review_contract, call.window)
            state.sponsored.add(call.review_contract)
        return True, "ok", 0, addr

    contract = state.contracts.get(tx.recipient)
    if contract is None:
        # plain account: nothing to execute
        return True, "ok", 0, ZERO_ADDRESS
    if call is None:
        return False, "bad_payload: empty call", 0, ZERO_ADDRESS
    ctx = _Context(state, tx.sender, height, tx.recipient)
    try:
        contract.execute(ctx, call)
    except ContractRevert as exc:
        return False, exc.code, 0, ZERO_ADDRESS
    return True, "ok", call.storage_bytes, ZERO_ADDRESS


def _storage_needed(tx: SignedTransaction) -> int:
    if not tx.payload:
        return 0
    try:
        return contracts.decode_call(tx.payload).storage_bytes
    except DecodeError:
        return 0


def _apply_transaction(state: ChainState, tx: SignedTransaction, miner: Address, height: int, index: int) -> Receipt:
    sched = state.schedule
    if not tx.signature_valid():
        raise InvalidTransaction(index, "bad signature")
    if tx.nonce != state.nonce(tx.sender):
        raise InvalidTransaction(index, f"nonce {tx.nonce}, expected {state.nonce(tx.sender)}")
    max_fee = tx.gas_limit * tx.gas_price
    if state.balance(tx.sender) < max_fee:
        raise InvalidTransaction(index, "balance does not cover gas_limit * gas_price")

    state.balances[tx.sender] = state.balance(tx.sender) - max_fee
    state.nonces[tx.sender] = tx.nonce + 1

    created = ZERO_ADDRESS
    storage_gas = 0
    needed = sched.base_transaction_gas + sched.storage_gas(_storage_needed(tx))
    if needed > tx.gas_limit:
        success, reason, gas_used = False, "out_of_gas", tx.gas_limit
    else:
        success, reason, stored, created = _run_call(state, tx, height)
        storage_gas = sched.storage_gas(stored) if success else 0
        gas_used = sched.base_transaction_gas + storage_gas

    state.balances[tx.sender] += (tx.gas_limit - gas_used) * tx.gas_price
    fee = gas_used * tx.gas_price
    if fee:
        state.balances[miner] = state.balance(miner) + fee
    receipt = Receipt(
        tx_hash=tx.tx_hash,
        height=height,
        index=index,
        sender=tx.sender,
        recipient=tx.recipient,
        gas_price=tx.gas_price,
        gas_used=gas_used,
        storage_gas=storage_gas,
        success=success,
        reason=reason,
        miner=miner,
        created=created,
    )
    state.receipts[(height, index)] = receipt
    return receipt


def _execute(
    state: ChainState,
    height: int,
    miner: Address,
    mints: Sequence[tuple[Address, int]],
    txs: Sequence[SignedTransaction],
    strict: bool,
) -> tuple[ChainState, list[SignedTransaction]]:
    new = state.copy()
    for target, amount in mints:
        _mint(new, target, amount)
    included: list[SignedTransaction] = []
    for tx in txs:
        if not strict:
            # dry-run on a scratch copy so a dropped transaction leaves no trace
            probe = new.copy()
            try:
                _apply_transaction(probe, tx, miner, height, len(included))
            except InvalidTransaction:
                continue
            new = probe
        else:
            _apply_transaction(new, tx, miner, height, len(included))
        included.append(tx)
    new.fee_history.append([tx.gas_price for tx in included])
    new.height = height
    return new, included


def produce_block(
    state: ChainState,
    selected: Iterable[SignedTransaction],
    miner: Address,
    mints: Sequence[tuple[Address, int]] = (),
) -> Block:
    """Build the next block on ``state``.

    Transactions that turn out to be invalid at their position (for example
    an earlier one drained the sender) are left out rather than failing the
    whole block.
    """
    selected = list(selected)
    height = state.height + 1
    # fast path: everything applies cleanly
    try:
        new, included = _execute(state, height, miner, mints, selected, strict=True)
    except InvalidTransaction:
        new, included = _execute(state, height, miner, mints, selected, strict=False)
    return Block(
        height=height,
        parent_digest=state.head,
        miner=miner,
        transactions=tuple(included),
        state_root=new.state_root(),
        mints=tuple(mints),
    )


def apply_block(state: ChainState, block: Block) -> ChainState:
    """Validate and apply ``block``; the input state is left untouched."""
    if block.height != state.height + 1:
        raise ParentMismatch(f"block height {block.height} does not follow {state.height}")
    if block.parent_digest != state.head:
        raise ParentMismatch("parent digest does not match chain head")
    new, _ = _execute(state, block.height, block.miner, block.mints, block.transactions, strict=True)
    root = new.state_root()
    if root != block.state_root:
        raise StateRootMismatch(f"state root {root.hex()} != claimed {block.state_root.hex()}")
    new.head = block.digest()
    return new


def replay(blocks: Iterable[Block], schedule: GasSchedule = GasSchedule()) -> ChainState:
    state = ChainState(schedule=schedule)
    for block in blocks:
        state = apply_block(state, block)
    return state


# -- mempool and miner selection --------------------------------------------


@dataclass(frozen=True)
class MinerPolicy:
    min_gas_price: int = 1
    accept_zero_for_refund_contract: bool = False
    capacity: int = 100
    # None: zero-price eligibility comes from the chain's refund-pool registry
    zero_price_recipients: frozenset | None = None

    def zero_price_ok(self, state: ChainState, recipient: Address) -> bool:
        if not self.accept_zero_for_refund_contract:
            return False
        eligible = state.sponsored if self.zero_price_recipients is None else self.zero_price_recipients
        return recipient in eligible


@dataclass(frozen=True)
class Admission:
    admitted: bool
    reason: str = "ok"


class Mempool:
    def __init__(self):
        self._entries: dict[bytes, tuple[int, SignedTransaction]] = {}
        self._seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, tx: SignedTransaction) -> bool:
        return tx.tx_hash in self._entries

    def entries(self) -> list[tuple[int, SignedTransaction]]:
        return sorted(self._entries.values(), key=lambda e: e[0])

    def submit(self, state: ChainState, tx: SignedTransaction) -> None:
        if not tx.signature_valid():
            raise BadSignature("signature does not verify")
        if tx.nonce < state.nonce(tx.sender):
            raise StaleNonce(f"nonce {tx.nonce} already consumed")
        for _, other in self._entries.values():
            if other.sender == tx.sender and other.nonce == tx.nonce:
                raise AlreadyPending(f"nonce {tx.nonce} already pending")
        if state.balance(tx.sender) < tx.gas_limit * tx.gas_price:
            raise InsufficientFunds("balance does not cover gas_limit * gas_price")
        self._entries[tx.tx_hash] = (self._seq, tx)
        self._seq += 1

    def remove(self, txs: Iterable[SignedTransaction]) -> None:
        for tx in txs:
            self._entries.pop(tx.tx_hash, None)

    def prune(self, state: ChainState) -> list[SignedTransaction]:
        stale = [tx for _, tx in self._entries.values() if tx.nonce < state.nonce(tx.sender)]
        self.remove(stale)
        return stale


def submit_to_mempool(state: ChainState, mempool: Mempool, tx: SignedTransaction) -> Admission:
    try:
        mempool.submit(state, tx)
    except MempoolError as exc:
        return Admission(False, exc.reason)
    return Admission(True)


def select_transactions(
    state: ChainState,
    pending: Iterable[tuple[int, SignedTransaction]] | Mempool,
    policy: MinerPolicy,
) -> list[SignedTransaction]:
    """Pick the next block's transactions, highest gas price first.

    Ties go to the earlier arrival.  A transaction whose nonce is not the
    sender's next executable one is skipped this round, which keeps prices
    non-increasing within the block.
    """
    entries = pending.entries() if isinstance(pending, Mempool) else list(pending)
    candidates = []
    for seq, tx in entries:
        if tx.gas_price == 0:
            if not policy.zero_price_ok(state, tx.recipient):
                continue
        elif tx.gas_price < policy.min_gas_price:
            continue
        candidates.append((seq, tx))
    candidates.sort(key=lambda e: (-e[1].gas_price, e[0]))

    expected: dict[Address, int] = {}
    chosen: list[SignedTransaction] = []
    for _, tx in candidates:
        if len(chosen) >= policy.capacity:
            break
        want = expected.get(tx.sender, state.nonce(tx.sender))
        if tx.nonce != want:
            continue
        expected[tx.sender] = want + 1
        chosen.append(tx)
    return chosen


# -- chain dump -------------------------------------------------------------


def dump_chain(blocks: Sequence[Block], schedule: GasSchedule = GasSchedule()) -> str:
    """Newline-delimited JSON: one header record, then one record per block."""
    header = {
        "format": CHAIN_FORMAT,
        "version": CHAIN_FORMAT_VERSION,
        "blocks": len(blocks),
        "head": (blocks[-1].digest() if blocks else GENESIS_DIGEST).hex(),
        "schedule": [schedule.storage_gas_per_byte, schedule.base_transaction_gas, schedule.gwei_per_eth],
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    lines += [json.dumps(b.to_record(), sort_keys=True, separators=(",", ":")) for b in blocks]
    return "\n".join(lines) + "\n"


def load_chain(text: str) -> tuple[list[Block], GasSchedule]:
    lines = text.splitlines()
    if not lines:
        raise CorruptDump("empty chain dump")
    try:
        header = json.loads(lines[0])
        if header.get("format") != CHAIN_FORMAT or header.get("version") != CHAIN_FORMAT_VERSION:
            raise CorruptDump("unrecognised chain dump header")
        schedule = GasSchedule(*header["schedule"])
        blocks = [Block.from_record(json.loads(line)) for line in lines[1:]]
    except CorruptDump:
        raise
    except (ValueError, KeyError, TypeError, DecodeError, identity.IdentityError) as exc:
        raise CorruptDump(f"malformed chain dump: {exc}") from exc
    if len(blocks) != header["blocks"]:
        raise CorruptDump(f"dump declares {header['blocks']} blocks, found {len(blocks)}")
    head = blocks[-1].digest() if blocks else GENESIS_DIGEST
    if head.hex() != header["head"]:
        raise CorruptDump("head digest does not match header")
    return blocks, schedule


# -- node -------------------------------------------------------------------


class Chain:
    """A single node: head state, block list, mempool and queued faucet mints."""

    def __init__(self, schedule: GasSchedule = GasSchedule()):
        self.schedule = schedule
        self.state = ChainState(schedule=schedule)
        self.blocks: list[Block] = []
        self.mempool = Mempool()
        self._mints: list[tuple[Address, int]] = []
        self._tx_index: dict[bytes, tuple[int, int]] = {}

    @property
    def height(self) -> int:
        return self.state.height

    @property
    def pending_mints(self) -> int:
        return len(self._mints)

    def fund(self, target: Address, amount: int) -> None:
        """Queue a faucet mint for inclusion in the next block."""
        if amount <= 0:
            raise ValueError("faucet amount must be positive")
        self._mints.append((target, amount))

    def submit(self, tx: SignedTransaction) -> Admission:
        return submit_to_mempool(self.state, self.mempool, tx)

    def next_nonce(self, account: Address) -> int:
        pending = [tx.nonce for _, tx in self.mempool.entries() if tx.sender == account]
        return max([self.state.nonce(account) - 1, *pending]) + 1

    def mine(
        self,
        miner: Address,
        policy: MinerPolicy = MinerPolicy(),
        exclude=None,
    ) -> Block:
        """Select, produce and apply one block.

        ``exclude`` is an optional predicate; transactions it matches are
        withheld by this miner (used to model censoring block producers).
        """
        entries = self.mempool.entries()
        if exclude is not None:
            entries = [e for e in entries if not exclude(e[1])]
        selected = select_transactions(self.state, entries, policy)
        block = produce_block(self.state, selected, miner, tuple(self._mints))
        self.append(block)
        return block

    def append(self, block: Block) -> None:
        self.state = apply_block(self.state, block)
        self.blocks.append(block)
        if tuple(self._mints[: len(block.mints)]) == block.mints:
            del self._mints[: len(block.mints)]
        for i, tx in enumerate(block.transactions):
            self._tx_index[tx.tx_hash] = (block.height, i)
        self.mempool.remove(block.transactions)
        self.mempool.prune(self.state)

    def receipt_for(self, tx: SignedTransaction) -> Receipt | None:
        slot = self._tx_index.get(tx.tx_hash)
        return None if slot is None else self.state.receipts[slot]

    def dump(self) -> str:
        return dump_chain(self.blocks, self.schedule)
