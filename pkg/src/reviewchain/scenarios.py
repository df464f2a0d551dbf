"""End-to-end scenarios over the five design dimensions.

A :class:`ScenarioConfig` picks one alternative per dimension (submission
path, authorization, payload storage, fee payment, retrieval).  The
:class:`World` built from it runs an honest review workload, then the attack
simulations, then reads everything back, and :func:`run_scenario` condenses
the outcome into a deterministic :class:`ScenarioReport`.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from reviewchain import economics, identity, ledger, retrieval
from reviewchain.contracts import (
    ClaimRefund,
    DeployRefundPool,
    DeployReviewContract,
    DepositPool,
    IssueToken,
    RefundPool,
    RegisterVendor,
    ReviewContract,
    SubmitReview,
    TokenTransfer,
    WhitelistRegister,
    decode_call,
    prepare_review,
    sign_receipt,
)
from reviewchain.identity import Address, KeyPair
from reviewchain.storage import CODECS, MAX_REVIEW_TEXT, StorageSet, get_codec, store_payload

MARKET_GAS_PRICE = economics.MEDIAN_GAS_PRICE
OPERATOR_GRANT = 1_000 * ledger.GWEI_PER_ETH
MINER_GRANT = 10 * ledger.GWEI_PER_ETH
POOL_PASSPHRASE = "bundled-with-the-app"


class Submission(str, enum.Enum):
    RELAY = "relay"
    DIRECT = "direct"


class Authorization(str, enum.Enum):
    WHITELIST = "whitelist"
    ACCESS_TOKEN = "token"
    POOL_KEY = "pool"


class StorageKind(str, enum.Enum):
    ONCHAIN = "onchain"
    ANCHORED = "centralized"
    CONTENT_ADDRESSED = "cas"


class Fees(str, enum.Enum):
    FAUCET = "faucet"
    CENTRAL_MINER = "central_miner"
    REFUND_CONTRACT = "refund_contract"


class RetrievalKind(str, enum.Enum):
    REMOTE = "remote"
    LOCAL = "local"


class Level(str, enum.Enum):
    GOOD = "Good"
    MEDIUM = "Medium"
    POOR = "Poor"


SPONSORED_FEES = (Fees.CENTRAL_MINER, Fees.REFUND_CONTRACT)


@dataclass(frozen=True)
class Adversary:
    censorship: bool = True
    fake_review: bool = True
    key_extraction: bool = True
    duplicate_review: bool = True
    operator_tamper: bool = True
    storage_outage: bool = True
    remote_tamper: bool = True
    faucet_abuse: bool = True


@dataclass(frozen=True)
class Workload:
    review_count: int = 100
    mean_text_bytes: int = 89
    # "exponential", "uniform" (1 .. 2*mean) or "fixed"
    text_distribution: str = "exponential"
    products: int = 3
    versions: int = 2
    whitelist_open: bool = True
    codec: str = "identity"
    adversary: Adversary = field(default_factory=Adversary)


@dataclass(frozen=True)
class ScenarioConfig:
    submission: Submission = Submission.DIRECT
    authorization: Authorization = Authorization.ACCESS_TOKEN
    storage: StorageKind = StorageKind.CONTENT_ADDRESSED
    fees: Fees = Fees.REFUND_CONTRACT
    retrieval: RetrievalKind = RetrievalKind.LOCAL
    workload: Workload = field(default_factory=Workload)
    seed: int = 0

    def __post_init__(self):
        # accept plain strings, e.g. from a config file
        object.__setattr__(self, "submission", Submission(self.submission))
        object.__setattr__(self, "authorization", Authorization(self.authorization))
        object.__setattr__(self, "storage", StorageKind(self.storage))
        object.__setattr__(self, "fees", Fees(self.fees))
        object.__setattr__(self, "retrieval", RetrievalKind(self.retrieval))
        if self.workload.review_count < 1:
            raise ValueError("workload needs at least one review")
        if self.workload.products < 1 or self.workload.versions < 1:
            raise ValueError("workload needs at least one product version")
        if self.workload.text_distribution not in ("exponential", "uniform", "fixed"):
            raise ValueError(f"unknown text distribution {self.workload.text_distribution!r}")
        if self.workload.codec not in CODECS:
            raise ValueError(f"unknown codec {self.workload.codec!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("submission", "authorization", "storage", "fees", "retrieval"):
            d[k] = getattr(self, k).value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        wl = dict(d.pop("workload", {}))
        adv = Adversary(**wl.pop("adversary", {}))
        return cls(workload=Workload(adversary=adv, **wl), **d)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)


# -- trade-off rubric -------------------------------------------------------

# Published scoring constants.  Each dimension adds points; the total maps to
# Good (0), Medium (1) or Poor (2+).
SECURITY_PENALTY = {
    "submission": {"relay": 2},
    "authorization": {"pool": 2, "whitelist_open": 2, "whitelist_closed": 1},
}
TRUST_PENALTY = {
    "submission": {"relay": 2},
    "authorization": {"token": 1, "whitelist_closed": 1},
    "storage": {"centralized": 2},
    "fees": {"central_miner": 2},
    "retrieval": {"remote": 2},
}
COST_SCORE = {
    "storage": {"onchain": 2, "cas": 1},
    "fees": {"faucet": 1},
}


@dataclass(frozen=True)
class TradeoffRating:
    security: Level
    trust: Level
    cost: Level

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.security.value, self.trust.value, self.cost.value)


def _level(points: int) -> Level:
    if points <= 0:
        return Level.GOOD
    if points == 1:
        return Level.MEDIUM
    return Level.POOR


def _rubric_keys(config: ScenarioConfig) -> dict[str, str]:
    auth = config.authorization.value
    if config.authorization is Authorization.WHITELIST:
        auth = "whitelist_open" if config.workload.whitelist_open else "whitelist_closed"
    return {
        "submission": config.submission.value,
        "authorization": auth,
        "storage": config.storage.value,
        "fees": config.fees.value,
        "retrieval": config.retrieval.value,
    }


def _score(table: dict[str, dict[str, int]], keys: dict[str, str]) -> int:
    return sum(table.get(dim, {}).get(choice, 0) for dim, choice in keys.items())


def evaluate_tradeoffs(config: ScenarioConfig) -> TradeoffRating:
    keys = _rubric_keys(config)
    return TradeoffRating(
        security=_level(_score(SECURITY_PENALTY, keys)),
        trust=_level(_score(TRUST_PENALTY, keys)),
        cost=_level(_score(COST_SCORE, keys)),
    )


TABLE1_ROWS: dict[str, ScenarioConfig] = {
    "Security": ScenarioConfig(
        Submission.DIRECT, Authorization.ACCESS_TOKEN, StorageKind.CONTENT_ADDRESSED, Fees.REFUND_CONTRACT, RetrievalKind.LOCAL
    ),
    "Trust": ScenarioConfig(
        Submission.DIRECT, Authorization.POOL_KEY, StorageKind.CONTENT_ADDRESSED, Fees.REFUND_CONTRACT, RetrievalKind.LOCAL
    ),
    "Costs": ScenarioConfig(
        Submission.DIRECT, Authorization.ACCESS_TOKEN, StorageKind.ANCHORED, Fees.REFUND_CONTRACT, RetrievalKind.LOCAL
    ),
}


# -- actors -----------------------------------------------------------------


def derive_key(seed: int, role: str, index: int = 0) -> KeyPair:
    return identity.generate_keypair(hashlib.sha256(f"{seed}/{role}/{index}".encode()).digest())


@dataclass
class Actor:
    name: str
    own_key: KeyPair
    # the key that signs on-chain: own key, or the app's shared pool key
    tx_key: KeyPair
    via_relay: bool = False

    @property
    def address(self) -> Address:
        return self.tx_key.address


@dataclass(frozen=True)
class AppBundle:
    """What ships inside the mobile app package."""

    pool_keystore: identity.Keystore | None = None
    passphrase: str | None = None

    def extract_key(self) -> KeyPair | None:
        if self.pool_keystore is None or self.passphrase is None:
            return None
        return identity.keystore_decrypt(self.pool_keystore, self.passphrase)


@dataclass
class Relay:
    """Backend holding user keys and submitting on their behalf.

    Users it decides to ``block`` never get their transactions forwarded.
    """

    blocked: set[str] = field(default_factory=set)
    forwarded: int = 0
    dropped: list[str] = field(default_factory=list)

    def forward(self, actor: Actor) -> bool:
        if actor.name in self.blocked:
            self.dropped.append(actor.name)
            return False
        self.forwarded += 1
        return True


@dataclass
class PlannedReview:
    actor: Actor
    product_id: str
    product_version: str
    rating: int
    text: bytes
    call: SubmitReview | None = None
    tx: ledger.SignedTransaction | None = None
    admission: str = ""


@dataclass(frozen=True)
class AttackOutcome:
    attack: str
    authorization: str
    weakness_manifest: bool
    detail: dict[str, Any]


_WORDS = (
    "app update crash login slow fast great love hate ads battery music playlist offline "
    "sync works broken fixed please again since version useless perfect sound quality "
    "premium free price support bug screen dark mode search download"
).split()


def _text(rng: random.Random, n: int) -> bytes:
    words: list[str] = []
    size = -1
    while size < n:
        w = rng.choice(_WORDS)
        words.append(w)
        size += len(w) + 1
    return " ".join(words).encode("ascii")[:n]


def _text_length(rng: random.Random, wl: Workload) -> int:
    mean = max(1, wl.mean_text_bytes)
    if wl.text_distribution == "fixed":
        n = mean
    elif wl.text_distribution == "uniform":
        n = rng.randint(1, 2 * mean - 1) if mean > 1 else 1
    else:
        n = int(round(rng.expovariate(1.0 / mean)))
    return min(max(n, 1), MAX_REVIEW_TEXT)


# -- world ------------------------------------------------------------------


class World:
    """A chain, its storage, and every party in one configured scenario."""

    def __init__(self, config: ScenarioConfig, storage_root: str | Path | None = None):
        self.config = config
        wl = config.workload
        self.rng = random.Random(config.seed)
        self.chain = ledger.Chain()
        self.storage = StorageSet.create(get_codec(wl.codec), storage_root)
        self.relay = Relay() if config.submission is Submission.RELAY else None

        seed = config.seed
        self.operator = derive_key(seed, "operator")
        self.vendor = derive_key(seed, "vendor")
        self.miners = [derive_key(seed, "miner", i) for i in range(3)]
        self.products = [f"app-{i}" for i in range(wl.products)]
        self.versions = [f"1.{j}" for j in range(wl.versions)]

        self.pool_key: KeyPair | None = None
        self.bundle = AppBundle()
        if config.authorization is Authorization.POOL_KEY:
            self.pool_key = derive_key(seed, "pool")
            store = identity.keystore_encrypt(
                self.pool_key, POOL_PASSPHRASE, "light", salt=hashlib.sha256(f"{seed}/salt".encode()).digest()[:16]
            )
            self.bundle = AppBundle(store, POOL_PASSPHRASE)
        self._app_key: KeyPair | None = None

        self.review_contract: Address | None = None
        self.refund_pool: Address | None = None
        self.faucet_grants: dict[Address, int] = {}
        self.faucet_leak = 0
        self.claims_submitted = 0
        self.author_addresses: set[Address] = set()
        self.submissions: list[PlannedReview] = []
        self.attacks: list[AttackOutcome] = []
        self._humans = 0

    # -- plumbing

    def app_key(self) -> KeyPair:
        """The pool key as an app instance obtains it (cached)."""
        if self._app_key is None:
            self._app_key = self.bundle.extract_key()
        return self._app_key

    def fresh_key(self, role: str) -> KeyPair:
        """A key for a party outside the honest workload."""
        k = derive_key(self.config.seed, role, self._humans)
        self._humans += 1
        return k

    def new_actor(self, role: str) -> Actor:
        own = derive_key(self.config.seed, role, self._humans)
        self._humans += 1
        tx_key = self.app_key() if self.config.authorization is Authorization.POOL_KEY else own
        via_relay = self.config.submission is Submission.RELAY
        return Actor(name=f"{role}-{self._humans - 1}", own_key=own, tx_key=tx_key, via_relay=via_relay)

    def price_for(self, recipient: Address) -> int:
        if recipient == self.review_contract and self.config.fees in SPONSORED_FEES:
            return 0
        return MARKET_GAS_PRICE

    def send(self, key: KeyPair, recipient: Address, call, price: int | None = None) -> tuple[ledger.SignedTransaction, ledger.Admission]:
        price = self.price_for(recipient) if price is None else price
        tx = ledger.build_transaction(key, recipient, call, price, self.chain.next_nonce(key.address))
        return tx, self.chain.submit(tx)

    def send_as(self, actor: Actor, recipient: Address, call) -> tuple[ledger.SignedTransaction | None, str]:
        if actor.via_relay and not self.relay.forward(actor):
            return None, "dropped_by_relay"
        tx, adm = self.send(actor.tx_key, recipient, call)
        return tx, adm.reason

    def policy(self, miner_index: int) -> ledger.MinerPolicy:
        fees = self.config.fees
        if fees is Fees.REFUND_CONTRACT:
            return ledger.MinerPolicy(min_gas_price=economics.FAST_GAS_PRICE, accept_zero_for_refund_contract=True)
        if fees is Fees.CENTRAL_MINER and miner_index == 0:
            return ledger.MinerPolicy(
                min_gas_price=economics.FAST_GAS_PRICE,
                accept_zero_for_refund_contract=True,
                zero_price_recipients=frozenset({self.review_contract}),
            )
        return ledger.MinerPolicy(min_gas_price=economics.FAST_GAS_PRICE)

    def mine_one(self, exclude: Callable | None = None) -> ledger.Block:
        idx = self.chain.height % len(self.miners)
        miner = self.miners[idx]
        censor = exclude if (idx == 0 and self.config.fees is Fees.CENTRAL_MINER) else None
        block = self.chain.mine(miner.address, self.policy(idx), exclude=censor)
        if self.config.fees is Fees.REFUND_CONTRACT and self.refund_pool is not None:
            for i, tx in enumerate(block.transactions):
                if tx.recipient == self.review_contract and tx.gas_price == 0:
                    self.send(miner, self.refund_pool, ClaimRefund(block.height, i))
                    self.claims_submitted += 1
        return block

    def drain(self, exclude: Callable | None = None, max_idle: int | None = None) -> None:
        """Mine until the mempool is empty or a full miner rotation stalls."""
        max_idle = len(self.miners) if max_idle is None else max_idle
        idle = 0
        while len(self.chain.mempool) and idle < max_idle:
            block = self.mine_one(exclude)
            idle = 0 if block.transactions else idle + 1
        if self.chain.pending_mints:
            self.mine_one(exclude)

    def contract(self) -> ReviewContract:
        return self.chain.state.contract(self.review_contract)

    def pool(self) -> RefundPool | None:
        return None if self.refund_pool is None else self.chain.state.contract(self.refund_pool)

    # -- setup

    def setup(self) -> None:
        cfg = self.config
        self.chain.fund(self.operator.address, OPERATOR_GRANT)
        self.chain.fund(self.vendor.address, OPERATOR_GRANT)
        for m in self.miners:
            self.chain.fund(m.address, MINER_GRANT)
        self.drain()

        pool_addr = self.pool_key.address if self.pool_key else identity.ZERO_ADDRESS
        deploy = DeployReviewContract(cfg.authorization.value, cfg.workload.whitelist_open, pool_addr)
        tx, _ = self.send(self.operator, identity.ZERO_ADDRESS, deploy, MARKET_GAS_PRICE)
        self.drain()
        self.review_contract = self.chain.receipt_for(tx).created

        if cfg.fees is Fees.REFUND_CONTRACT:
            tx, _ = self.send(self.operator, identity.ZERO_ADDRESS, DeployRefundPool(self.review_contract), MARKET_GAS_PRICE)
            self.drain()
            self.refund_pool = self.chain.receipt_for(tx).created

        for pid in self.products:
            self.send(self.vendor, self.review_contract, RegisterVendor(pid, self.vendor.public_key), MARKET_GAS_PRICE)
        self.drain()

    def fund_pool(self, planned_gas: int) -> None:
        if self.refund_pool is None:
            return
        # twice the market price of everything planned, so refunds never run dry
        amount = 2 * MARKET_GAS_PRICE * planned_gas
        self.send(self.vendor, self.refund_pool, DepositPool(amount), MARKET_GAS_PRICE)
        self.drain()

    def authorize(self, actors: list[Actor], slots: list[tuple[str, str]]) -> None:
        """Give each actor the right to review its product version under the configured mode."""
        auth = self.config.authorization
        if auth is Authorization.WHITELIST:
            for actor in actors:
                if self.config.workload.whitelist_open:
                    self.send_as(actor, self.review_contract, WhitelistRegister(actor.address))
                else:
                    self.send(self.operator, self.review_contract, WhitelistRegister(actor.address), MARKET_GAS_PRICE)
        elif auth is Authorization.ACCESS_TOKEN:
            for actor, (pid, ver) in zip(actors, slots):
                receipt = sign_receipt(self.vendor, actor.address, pid, ver)
                self.send(self.vendor, self.review_contract, IssueToken(receipt), MARKET_GAS_PRICE)
        self.drain()

    def faucet(self, actors: list[Actor], txs_per_actor: list[list[bytes]]) -> None:
        """Fund published addresses with exactly what their planned calls can cost."""
        if self.config.fees is not Fees.FAUCET:
            return
        for actor, payloads in zip(actors, txs_per_actor):
            need = sum(ledger.default_gas_limit(p) * MARKET_GAS_PRICE for p in payloads)
            if need:
                self.grant(actor.address, need)
        self.drain()

    def grant(self, address: Address, amount: int) -> None:
        """Faucet payout to a published author address."""
        self.chain.fund(address, amount)
        self.faucet_grants[address] = self.faucet_grants.get(address, 0) + amount

    def plan_review(self, actor: Actor, pid: str, ver: str, rating: int, text: bytes, backend: str | None = None) -> PlannedReview:
        kind = backend or self.config.storage.value
        ref = store_payload(self.storage.backend(kind), text)
        plan = PlannedReview(actor, pid, ver, rating, text)
        plan.call = prepare_review(actor.tx_key, pid, ver, rating, ref)
        return plan

    def submit(self, plan: PlannedReview) -> PlannedReview:
        tx, reason = self.send_as(plan.actor, self.review_contract, plan.call)
        plan.tx, plan.admission = tx, reason
        return plan

    def outcome(self, plan: PlannedReview) -> str:
        if plan.tx is None:
            return plan.admission
        if plan.admission != "ok":
            return plan.admission
        receipt = self.chain.receipt_for(plan.tx)
        if receipt is None:
            return "pending"
        return "accepted" if receipt.success else receipt.reason

    def onboard(self, actors: list[Actor], slots: list[tuple[str, str]], plans: list[PlannedReview]) -> None:
        """Faucet, authorization and submission for a batch of honest actors."""
        calls = []
        for actor, plan in zip(actors, plans):
            payloads = [plan.call.encode()]
            if self.config.authorization is Authorization.WHITELIST and self.config.workload.whitelist_open:
                payloads.append(WhitelistRegister(actor.address).encode())
            calls.append(payloads)
        self.faucet(actors, calls)
        self.authorize(actors, slots)
        for plan in plans:
            self.submit(plan)

    # -- honest workload

    def run_workload(self) -> None:
        wl = self.config.workload
        actors, slots, plans = [], [], []
        for _ in range(wl.review_count):
            actor = self.new_actor("author")
            pid = self.rng.choice(self.products)
            ver = self.rng.choice(self.versions)
            rating = self.rng.randint(1, 5)
            text = _text(self.rng, _text_length(self.rng, wl))
            actors.append(actor)
            slots.append((pid, ver))
            plans.append(self.plan_review(actor, pid, ver, rating, text))
            self.author_addresses.add(actor.address)
        planned_gas = sum(ledger.default_gas_limit(p.call.encode()) for p in plans)
        # headroom for registrations and attack traffic
        planned_gas += (2 * wl.review_count + 40) * self.chain.schedule.base_transaction_gas
        planned_gas += 40 * ledger.default_gas_limit(b"\x00" * (4 * wl.mean_text_bytes + 512))
        self.fund_pool(planned_gas)
        self.onboard(actors, slots, plans)
        self.drain()
        self.submissions.extend(plans)


# -- attacks ----------------------------------------------------------------


def _fresh_slot(world: World, tag: str) -> tuple[str, str]:
    return world.products[0], f"{tag}-{world.chain.height}-{world._humans}"


def attack_fake_review(world: World) -> AttackOutcome:
    """A non-purchaser outside the app tries to get a review accepted."""
    mode = world.config.authorization
    adversary = world.fresh_key("adversary-fake")
    pid, ver = _fresh_slot(world, "fake")
    route = "own key"
    key = adversary
    if mode is Authorization.POOL_KEY:
        key = world.bundle.extract_key()
        route = "extracted pool key"
    if world.config.fees is Fees.FAUCET:
        world.chain.fund(key.address, 10 * ledger.GWEI_PER_ETH // 100)
        world.drain()
    reg_reason = None
    if mode is Authorization.WHITELIST:
        tx, _ = world.send(key, world.review_contract, WhitelistRegister(key.address))
        world.drain()
        reg_reason = world.chain.receipt_for(tx).reason
        route = "self-registered on whitelist"
    actor = Actor("adversary-fake", adversary, key, via_relay=False)
    plan = world.submit(world.plan_review(actor, pid, ver, 5, b"best app ever, five stars"))
    world.drain()
    result = world.outcome(plan)
    out = AttackOutcome(
        "fake_review",
        mode.value,
        weakness_manifest=result == "accepted",
        detail={"route": route, "result": result, "registration": reg_reason},
    )
    world.attacks.append(out)
    return out


def attack_key_extraction(world: World) -> AttackOutcome:
    """Pull the signing key out of the app package and review from outside."""
    mode = world.config.authorization
    extracted = world.bundle.extract_key()
    adversary = world.fresh_key("adversary-extract")
    key = extracted or adversary
    if world.config.fees is Fees.FAUCET:
        world.chain.fund(key.address, 10 * ledger.GWEI_PER_ETH // 100)
        world.drain()
    pid, ver = _fresh_slot(world, "extract")
    actor = Actor("adversary-extract", adversary, key, via_relay=False)
    plan = world.submit(world.plan_review(actor, pid, ver, 1, b"terrible, do not buy"))
    world.drain()
    result = world.outcome(plan)
    out = AttackOutcome(
        "key_extraction",
        mode.value,
        weakness_manifest=result == "accepted",
        detail={
            "bundled_key_found": extracted is not None,
            "keystore_preset": world.bundle.pool_keystore.kdf_preset if world.bundle.pool_keystore else None,
            "result": result,
        },
    )
    world.attacks.append(out)
    return out


def attack_duplicate_review(world: World) -> AttackOutcome:
    """Repeat review by one author, plus a second honest human on the same version.

    The weakness is the second human's legitimate review being rejected,
    which is what a shared signing address does to duplicate detection.
    """
    mode = world.config.authorization
    pid, ver = _fresh_slot(world, "dup")
    first, second = world.new_actor("dup-author"), world.new_actor("dup-author")
    for a in (first, second):
        world.author_addresses.add(a.address)
    p1 = world.plan_review(first, pid, ver, 4, b"solid release")
    p2 = world.plan_review(second, pid, ver, 2, b"crashes on start")
    world.onboard([first, second], [(pid, ver), (pid, ver)], [p1, p2])
    world.drain()
    # the first author tries again
    if world.config.fees is Fees.FAUCET:
        world.grant(first.address, ledger.default_gas_limit(p1.call.encode()) * MARKET_GAS_PRICE)
        world.drain()
    repeat = world.submit(world.plan_review(first, pid, ver, 5, b"changed my mind"))
    world.drain()
    results = {"first": world.outcome(p1), "second_human": world.outcome(p2), "repeat": world.outcome(repeat)}
    world.submissions.extend([p1, p2])
    out = AttackOutcome(
        "duplicate_review",
        mode.value,
        weakness_manifest=results["first"] == "accepted" and results["second_human"] != "accepted",
        detail={**results, "repeat_rejected": results["repeat"] != "accepted"},
    )
    world.attacks.append(out)
    return out


def attack_censorship(world: World) -> AttackOutcome:
    """A gatekeeper suppresses one author's negative review.

    With relay submission the backend drops the targeted user; with a
    central zero-price miner, that miner withholds low-rated reviews.  A
    control author with a positive review goes through the same path.
    """
    target, control = world.new_actor("censor-target"), world.new_actor("censor-control")
    for a in (target, control):
        world.author_addresses.add(a.address)
    pid, ver_t = _fresh_slot(world, "censor-t")
    _, ver_c = _fresh_slot(world, "censor-c")
    if world.relay is not None:
        world.relay.blocked.add(target.name)
    pc = world.plan_review(control, pid, ver_c, 5, b"love it")
    pt = world.plan_review(target, pid, ver_t, 1, b"the update deleted my playlists")
    world.onboard([control, target], [(pid, ver_c), (pid, ver_t)], [pc, pt])

    def negative_review(tx: ledger.SignedTransaction) -> bool:
        try:
            call = decode_call(tx.payload)
        except Exception:
            return False
        return isinstance(call, SubmitReview) and call.rating <= 2

    world.drain(exclude=negative_review)
    contract = world.contract()
    present_t = contract.has_reviewed(target.address, pid, ver_t)
    present_c = contract.has_reviewed(control.address, pid, ver_c)
    world.submissions.extend([pc, pt])
    out = AttackOutcome(
        "censorship",
        world.config.authorization.value,
        weakness_manifest=not present_t,
        detail={
            "path": world.config.submission.value,
            "fees": world.config.fees.value,
            "target_present": present_t,
            "control_present": present_c,
            "target_status": world.outcome(pt),
        },
    )
    world.attacks.append(out)
    return out


def attack_faucet_abuse(world: World) -> AttackOutcome:
    """Publish an address to the funding site and never review."""
    leech = world.fresh_key("leech")
    grant = ledger.default_gas_limit(b"\x00" * 256) * MARKET_GAS_PRICE
    world.chain.fund(leech.address, grant)
    world.drain()
    world.faucet_leak += grant
    out = AttackOutcome(
        "faucet_abuse",
        world.config.authorization.value,
        weakness_manifest=world.chain.state.balance(leech.address) == grant,
        detail={"granted_gwei": grant},
    )
    world.attacks.append(out)
    return out


def token_transfer_probe(world: World) -> str:
    """Try to hand a review token to someone else; always refused."""
    holder = world.new_actor("token-holder")
    tx, _ = world.send(world.vendor, world.review_contract, TokenTransfer(holder.address, world.products[0], world.versions[0]), MARKET_GAS_PRICE)
    world.drain()
    return world.chain.receipt_for(tx).reason


# -- report -----------------------------------------------------------------


@dataclass
class ScenarioReport:
    config: dict
    rating: tuple[str, str, str]
    submissions: dict
    attacks: list[dict]
    gas: dict
    fees: dict
    storage: dict
    retrieval: dict
    chain: dict
    world: World | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rating": {"security": self.rating[0], "trust": self.rating[1], "cost": self.rating[2]},
            "submissions": self.submissions,
            "attacks": self.attacks,
            "gas": self.gas,
            "fees": self.fees,
            "storage": self.storage,
            "retrieval": self.retrieval,
            "chain": self.chain,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        c = self.config
        lines = [
            "scenario: " + " / ".join(c[k] for k in ("submission", "authorization", "storage", "fees", "retrieval")),
            f"seed: {c['seed']}   reviews: {c['workload']['review_count']}",
            f"rating: security={self.rating[0]} trust={self.rating[1]} cost={self.rating[2]}",
            "",
            f"submissions: {self.submissions['accepted']} accepted of {self.submissions['attempted']}",
        ]
        for reason, n in sorted(self.submissions["rejected"].items()):
            lines.append(f"  rejected {reason}: {n}")
        lines.append("")
        lines.append("attacks:")
        for a in self.attacks:
            mark = "WEAKNESS" if a["weakness_manifest"] else "defeated"
            lines.append(f"  {a['attack']:<18} {mark:<9} {json.dumps(a['detail'], sort_keys=True)}")
        g = self.gas
        lines += [
            "",
            f"gas: total {g['total_gas']:,}  review storage {g['review_storage_gas']:,} ({g['review_storage_bytes']:,} bytes)",
            f"  review storage at {economics.MEDIAN_GAS_PRICE} Gwei: ${g['review_storage_usd_median']}  "
            f"at {economics.FAST_GAS_PRICE} Gwei: ${g['review_storage_usd_fast']}",
            f"  onchain gas == 625 x bytes: {g['onchain_gas_consistent']}",
        ]
        f = self.fees
        lines += [
            "",
            f"fees ({c['fees']}): author deltas all zero: {f['author_deltas_all_zero']}  max |delta| {f['author_delta_max_abs']} Gwei",
        ]
        if f.get("pool"):
            p = f["pool"]
            lines.append(
                f"  pool: deposits {p['deposits']:,}  refunds {p['refunds']:,}  balance {p['balance']:,}  "
                f"decrement == credits: {p['decrement_equals_credits']}"
            )
        s = self.storage
        lines += ["", f"storage ({c['storage']}): {json.dumps(s, sort_keys=True)}"]
        r = self.retrieval
        lines += ["", f"retrieval ({c['retrieval']}): {json.dumps(r, sort_keys=True)}"]
        ch = self.chain
        lines += ["", f"chain: height {ch['height']}  state root {ch['state_root']}"]
        return "\n".join(lines) + "\n"


def _reason_counts(world: World) -> tuple[int, dict[str, int]]:
    accepted = 0
    rejected: dict[str, int] = {}
    for plan in world.submissions:
        o = world.outcome(plan)
        if o == "accepted":
            accepted += 1
        else:
            rejected[o] = rejected.get(o, 0) + 1
    return accepted, rejected


def _gas_section(world: World) -> dict:
    state = world.chain.state
    total = sum(r.gas_used for r in state.receipts.values())
    review_receipts = []
    for (h, i), r in sorted(state.receipts.items()):
        if r.recipient == world.review_contract and r.success:
            tx = world.chain.blocks[h - 1].transactions[i]
            call = decode_call(tx.payload)
            if isinstance(call, SubmitReview):
                review_receipts.append((r, call))
    storage_bytes = sum(c.storage_bytes for _, c in review_receipts)
    storage_gas = sum(r.storage_gas for r, _ in review_receipts)
    onchain_ok = all(
        r.storage_gas == 625 * len(c.storage_ref.data)
        for r, c in review_receipts
        if c.storage_ref.__class__.__name__ == "OnChain"
    )
    fast = economics.storage_cost(storage_bytes, economics.FAST_GAS_PRICE)
    median = economics.storage_cost(storage_bytes, economics.MEDIAN_GAS_PRICE)
    all_gas = economics.gas_cost(total, economics.MEDIAN_GAS_PRICE)
    n = max(1, len(review_receipts))
    return {
        "total_gas": total,
        "total_usd_median": str(economics.round_to(all_gas.usd, 2)),
        "reviews_stored": len(review_receipts),
        "review_storage_bytes": storage_bytes,
        "review_storage_gas": storage_gas,
        "review_storage_usd_fast": str(economics.round_to(fast.usd, 2)),
        "review_storage_usd_median": str(economics.round_to(median.usd, 2)),
        "review_storage_usd_per_review_median": str(economics.round_sig(economics.per_review_cost(median, n), 3)),
        "onchain_gas_consistent": onchain_ok,
    }


def author_deltas(world: World) -> dict[Address, int]:
    state = world.chain.state
    addrs = set(world.author_addresses)
    if world.pool_key is not None:
        addrs.add(world.pool_key.address)
    return {a: state.balance(a) - world.faucet_grants.get(a, 0) for a in sorted(addrs)}


def _miner_books(world: World) -> bool:
    """Recompute each miner's balance from receipts and refund records."""
    state = world.chain.state
    pool = world.pool()
    for m in world.miners:
        a = m.address
        earned = sum(r.fee for r in state.receipts.values() if r.miner == a)
        spent = sum(r.fee for r in state.receipts.values() if r.sender == a)
        refunds = pool.refunds_paid.get(a, 0) if pool else 0
        if state.balance(a) != MINER_GRANT + earned - spent + refunds:
            return False
    return True


def _fees_section(world: World) -> dict:
    deltas = author_deltas(world)
    state = world.chain.state
    out: dict[str, Any] = {
        "mode": world.config.fees.value,
        "author_deltas_all_zero": all(v == 0 for v in deltas.values()),
        "author_delta_max_abs": max((abs(v) for v in deltas.values()), default=0),
        "authors_paying": sum(1 for v in deltas.values() if v != 0),
        "faucet_granted": sum(world.faucet_grants.values()),
        "faucet_leaked": world.faucet_leak,
        "miner_books_balance": _miner_books(world),
        "value_conserved": state.total_balance() == state.minted,
        "pool": None,
    }
    pool = world.pool()
    if pool is not None:
        balance = state.balance(pool.address)
        decrement = pool.total_deposits - balance
        out["pool"] = {
            "deposits": pool.total_deposits,
            "refunds": pool.total_refunds,
            "balance": balance,
            "claims": len(pool.claimed),
            "claims_submitted": world.claims_submitted,
            "decrement_equals_credits": decrement == pool.total_refunds,
            "ledger_identity": balance + pool.total_refunds == pool.total_deposits,
        }
    return out


def _reader(world: World):
    if world.config.retrieval is RetrievalKind.LOCAL:
        replica = retrieval.LocalReplica(world.storage, world.review_contract)
        return retrieval.sync_local(replica, world.chain.dump())
    return retrieval.RemoteNode(world.chain, world.storage, contract=world.review_contract)


def _read_all(reader) -> list[tuple]:
    out = []
    for pid in sorted(reader.state.contracts[reader.contract].vendors):
        out += retrieval.list_reviews(reader, pid)
    return out


def _status_counts(results) -> dict[str, int]:
    counts: dict[str, int] = {}
    for _, status in results:
        counts[status] = counts.get(status, 0) + 1
    return dict(sorted(counts.items()))


def _storage_section(world: World) -> dict:
    kind = world.config.storage
    adv = world.config.workload.adversary
    out: dict[str, Any] = {"kind": kind.value, "codec": world.storage.codec.name}
    reader = retrieval.LocalReplica(world.storage, world.review_contract)
    retrieval.sync_local(reader, world.chain.dump())
    if kind is StorageKind.ANCHORED:
        records = [rec for rec in world.contract().reviews.values() if rec.storage_ref.__class__.__name__ == "Anchored"]
        out["operator_can_modify"] = True
        if adv.operator_tamper and records:
            victim = records[0].storage_ref
            original = world.storage.centralized.raw(victim.locator)
            forged = bytearray(original)
            forged[0] ^= 0xFF
            world.storage.centralized.tamper(victim.locator, bytes(forged))
            counts = _status_counts(_read_all(reader))
            out["tamper_detected"] = counts.get(retrieval.TAMPERED, 0) == 1
            world.storage.centralized.tamper(victim.locator, original)
        if adv.storage_outage and records:
            world.storage.centralized.available = False
            counts = _status_counts(_read_all(reader))
            world.storage.centralized.available = True
            out["outage_unavailable"] = counts.get(retrieval.UNAVAILABLE, 0)
            out["data_loss_possible"] = counts.get(retrieval.UNAVAILABLE, 0) > 0
    else:
        out["operator_can_modify"] = False
        out["data_loss_possible"] = False
    return out


def _retrieval_section(world: World) -> dict:
    adv = world.config.workload.adversary
    out: dict[str, Any] = {"reader": world.config.retrieval.value}
    reader = _reader(world)
    results = _read_all(reader)
    out["statuses"] = _status_counts(results)
    out["reviews"] = len(results)
    if isinstance(reader, retrieval.LocalReplica):
        out["sync_blocks"] = reader.last_sync.blocks
        out["sync_bytes"] = reader.last_sync.bytes
        out["root_matches_producer"] = reader.state_root == world.chain.state.state_root()
    else:
        out["trust_required"] = True
    if adv.remote_tamper and results:
        victim = results[0][0]

        def flip_rating(review):
            if review == victim:
                return replace(review, rating=5 if review.rating != 5 else 1)
            return review

        def restamp(review):
            if review == victim:
                return replace(review, block_height=review.block_height + 1)
            return review

        local = retrieval.sync_local(retrieval.LocalReplica(world.storage, world.review_contract), world.chain.dump())
        remote = retrieval.RemoteNode(world.chain, world.storage, flip_rating, world.review_contract)
        flipped = _status_counts(_read_all(remote))
        remote_meta = retrieval.RemoteNode(world.chain, world.storage, restamp, world.review_contract)
        crossed = []
        for pid in sorted(world.contract().vendors):
            crossed += retrieval.list_reviews(remote_meta, pid, cross_check=local)
        reviews = [r for r, _ in results]
        out["remote_rating_flip"] = {
            "tampered_flagged": flipped.get(retrieval.TAMPERED, 0),
            "residue": retrieval.tamper_residue(flip_rating, reviews, world.storage),
        }
        out["remote_metadata_rewrite"] = {
            "residue": retrieval.tamper_residue(restamp, reviews, world.storage),
            "divergent_on_cross_check": _status_counts(crossed).get(retrieval.DIVERGENT, 0),
        }
    return out


def simulate(config: ScenarioConfig, storage_root: str | Path | None = None) -> World:
    """Build a world, run the honest workload and the enabled attacks."""
    world = World(config, storage_root)
    world.setup()
    world.run_workload()
    adv = config.workload.adversary
    if adv.fake_review:
        attack_fake_review(world)
    if adv.key_extraction:
        attack_key_extraction(world)
    if adv.duplicate_review:
        attack_duplicate_review(world)
    if adv.faucet_abuse and config.fees is Fees.FAUCET:
        attack_faucet_abuse(world)
    # last: a censored shared-key nonce would stall everything after it
    if adv.censorship:
        attack_censorship(world)
    world.drain()
    return world


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> ScenarioReport:
    storage_root = Path(out_dir) / "storage" if out_dir is not None else None
    world = simulate(config, storage_root)
    accepted, rejected = _reason_counts(world)
    relay_dropped = len(world.relay.dropped) if world.relay else 0
    report = ScenarioReport(
        config=config.to_dict(),
        rating=evaluate_tradeoffs(config).as_tuple(),
        submissions={
            "attempted": len(world.submissions),
            "accepted": accepted,
            "rejected": dict(sorted(rejected.items())),
            "dropped_by_relay": relay_dropped,
            "registry_size": len(world.contract().reviews),
        },
        attacks=[asdict(a) for a in world.attacks],
        gas=_gas_section(world),
        fees=_fees_section(world),
        storage=_storage_section(world),
        retrieval=_retrieval_section(world),
        chain={
            "height": world.chain.height,
            "state_root": world.chain.state.state_root().hex(),
            "review_contract": str(world.review_contract),
            "refund_pool": str(world.refund_pool) if world.refund_pool else None,
        },
        world=world,
    )
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def write_outputs(report: ScenarioReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.json").write_text(json.dumps(report.config, sort_keys=True, indent=2) + "\n")
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.txt").write_text(report.to_text())
    (out / "chain.jsonl").write_text(report.world.chain.dump())


def table1(review_count: int = 100, seed: int = 0, run: bool = True) -> list[dict]:
    rows = []
    for label, cfg in TABLE1_ROWS.items():
        cfg = replace(cfg, seed=seed, workload=replace(cfg.workload, review_count=review_count))
        row: dict[str, Any] = {
            "optimized_for": label,
            "config": {k: v for k, v in cfg.to_dict().items() if k not in ("workload", "seed")},
            "rating": list(evaluate_tradeoffs(cfg).as_tuple()),
        }
        if run:
            report = run_scenario(cfg)
            row["weaknesses"] = sorted(a["attack"] for a in report.attacks if a["weakness_manifest"])
            row["tamper_detected"] = report.storage.get("tamper_detected")
            row["data_loss_possible"] = report.storage.get("data_loss_possible")
            row["author_deltas_all_zero"] = report.fees["author_deltas_all_zero"]
            row["review_storage_usd_median"] = report.gas["review_storage_usd_median"]
        rows.append(row)
    return rows


def format_table1(rows: list[dict]) -> str:
    head = f"{'Security':<9}{'Trust':<8}{'Costs':<8}| {'Submission':<11}{'Authorization':<14}{'Storage':<12}{'Fees':<16}{'Retrieval':<10}| Optimized for"
    lines = [head, "-" * len(head)]
    for r in rows:
        c = r["config"]
        s, t, k = r["rating"]
        lines.append(
            f"{s:<9}{t:<8}{k:<8}| {c['submission']:<11}{c['authorization']:<14}{c['storage']:<12}{c['fees']:<16}{c['retrieval']:<10}| {r['optimized_for']}"
        )
    if rows and "weaknesses" in rows[0]:
        lines.append("")
        for r in rows:
            extra = ""
            if r.get("tamper_detected") is not None:
                extra = f"  tamper detected: {r['tamper_detected']}  data loss possible: {r['data_loss_possible']}"
            lines.append(
                f"{r['optimized_for']:<9} weaknesses: {', '.join(r['weaknesses']) or 'none'}  "
                f"author cost zero: {r['author_deltas_all_zero']}{extra}"
            )
    return "\n".join(lines)
