"""Shared builders for ledger and contract tests."""

import hashlib

from reviewchain import identity, ledger
from reviewchain.contracts import (
    DeployRefundPool,
    DeployReviewContract,
    RegisterVendor,
)
from reviewchain.identity import ZERO_ADDRESS

PAID = 22
FUNDS = 10 * ledger.GWEI_PER_ETH


def key(label: str, i: int = 0) -> identity.KeyPair:
    return identity.generate_keypair(hashlib.sha256(f"{label}:{i}".encode()).digest())


class Net:
    """A chain with one operator, one vendor and two miners, all funded."""

    def __init__(self, mode: str = "token", open_registration: bool = True, pool_key=None, refund: bool = False):
        self.chain = ledger.Chain()
        self.operator = key("operator")
        self.vendor = key("vendor")
        self.miners = [key("miner", 0), key("miner", 1)]
        for k in (self.operator, self.vendor, *self.miners):
            self.chain.fund(k.address, FUNDS)
        self.mine()
        pool_addr = pool_key.address if pool_key else ZERO_ADDRESS
        tx = self.send(self.operator, ZERO_ADDRESS, DeployReviewContract(mode, open_registration, pool_addr))
        self.mine()
        self.review = self.chain.receipt_for(tx).created
        self.pool = None
        if refund:
            tx = self.send(self.operator, ZERO_ADDRESS, DeployRefundPool(self.review))
            self.mine()
            self.pool = self.chain.receipt_for(tx).created
        self.send(self.vendor, self.review, RegisterVendor("app", self.vendor.public_key))
        self.mine()

    def send(self, k, recipient, call, price=PAID, gas_limit=None):
        tx = ledger.build_transaction(k, recipient, call, price, self.chain.next_nonce(k.address), gas_limit)
        adm = self.chain.submit(tx)
        assert adm.admitted, adm.reason
        return tx

    def mine(self, miner=0, policy=None):
        policy = policy or ledger.MinerPolicy(accept_zero_for_refund_contract=True)
        return self.chain.mine(self.miners[miner].address, policy)

    def contract(self):
        return self.chain.state.contract(self.review)

    def receipt(self, tx):
        return self.chain.receipt_for(tx)


def random_workload(seed: int, blocks: int = 8, accounts: int = 5):
    """A seeded mix of transfers, reviews, reverts, out-of-gas and sponsored calls.

    Returns the producing chain; its ``blocks`` are what replay tests consume.
    """
    import random

    from reviewchain.contracts import IssueToken, SubmitReview, prepare_review, sign_receipt
    from reviewchain.storage import OnChain, StorageSet, store_payload

    rng = random.Random(seed)
    net = Net(mode="token", refund=True)
    from reviewchain.contracts import DepositPool

    net.send(net.vendor, net.pool, DepositPool(ledger.GWEI_PER_ETH))
    net.mine()
    store = StorageSet.create()
    users = [key(f"user-{seed}", i) for i in range(accounts)]
    for u in users:
        net.chain.fund(u.address, rng.randint(1, 5) * 10**7)
    net.mine()
    held = []
    for _ in range(blocks):
        for _ in range(rng.randint(0, 6)):
            u = rng.choice(users)
            kind = rng.random()
            price = rng.choice([0, 1, 5, 22, 40])
            try:
                if kind < 0.3:
                    to = rng.choice(users).address
                    net.send(u, to, b"", price=max(price, 1))
                elif kind < 0.55:
                    ver = f"v{rng.randint(0, 3)}"
                    net.send(net.vendor, net.review, IssueToken(sign_receipt(net.vendor, u.address, "app", ver)))
                    held.append((u, ver))
                elif kind < 0.9:
                    ver = f"v{rng.randint(0, 3)}"
                    if held and rng.random() < 0.7:
                        u, ver = rng.choice(held)
                    text = bytes(rng.randrange(97, 123) for _ in range(rng.randint(1, 120)))
                    backend = store.backend(rng.choice(["onchain", "centralized", "cas"]))
                    call = prepare_review(u, "app", ver, rng.randint(1, 5), store_payload(backend, text))
                    limit = None
                    if rng.random() < 0.15:
                        limit = 21_000 + rng.randint(0, 500)  # likely out of gas
                    net.send(u, net.review, call, price=0 if rng.random() < 0.5 else max(price, 1), gas_limit=limit)
                else:
                    net.send(u, net.review, SubmitReview("ghost", "1", 9, OnChain(b"x"), u.public_key, b""), price=max(price, 1))
            except AssertionError:
                pass  # inadmissible (funds, pending nonce); skip
        block = net.mine(rng.randrange(2))
        if block.transactions and rng.random() < 0.7:
            for i, tx in enumerate(block.transactions):
                if tx.gas_price == 0:
                    from reviewchain.contracts import ClaimRefund

                    miner = net.miners[0] if block.miner == net.miners[0].address else net.miners[1]
                    net.send(miner, net.pool, ClaimRefund(block.height, i))
    net.mine()
    return net
