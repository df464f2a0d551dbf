import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from reviewchain import contracts, ledger
from reviewchain.contracts import (
    AccessToken,
    ClaimRefund,
    ClosedRegistration,
    DepositPool,
    DoubleIssuance,
    DuplicateReview,
    IssueToken,
    MalformedReview,
    PoolKey,
    ReviewContract,
    TokenTransfer,
    TransferForbidden,
    Unauthorized,
    UnknownProduct,
    Whitelist,
    WhitelistRegister,
    WrongMode,
    decode_call,
    prepare_review,
    sign_receipt,
)
from reviewchain.storage import ContentAddressed, OnChain
from support import FUNDS, PAID, Net, key

vendor, owner = key("vendor"), key("owner")
buyer, stranger, other = key("buyer"), key("stranger"), key("other")
REF = OnChain(b"nice")


def registry(mode):
    c = ReviewContract(owner.address, mode)
    c.register_vendor(vendor.address, "app", vendor.public_key)
    return c


def review(author, ver="1.0", rating=4, ref=REF, pid="app"):
    return prepare_review(author, pid, ver, rating, ref)


# -- vendors -----------------------------------------------------------------


def test_vendor_registration_rules():
    c = ReviewContract(owner.address, AccessToken())
    with pytest.raises(Unauthorized):
        c.register_vendor(stranger.address, "app", vendor.public_key)
    c.register_vendor(vendor.address, "app", vendor.public_key)
    with pytest.raises(contracts.DuplicateRegistration):
        c.register_vendor(vendor.address, "app", vendor.public_key)
    with pytest.raises(UnknownProduct):
        c.vendor_key("nope")


# -- whitelist -----------------------------------------------------------------


def test_whitelist_register_then_submit():
    c = registry(Whitelist())
    with pytest.raises(Unauthorized):
        c.submit_review(buyer.address, review(buyer), 1)
    c.whitelist_register(buyer.address, buyer.address)
    c.submit_review(buyer.address, review(buyer), 1)
    assert c.has_reviewed(buyer.address, "app", "1.0")


def test_open_whitelist_admits_non_purchaser():
    c = registry(Whitelist(open_registration=True))
    c.whitelist_register(stranger.address, stranger.address)
    c.submit_review(stranger.address, review(stranger, rating=1), 1)
    assert len(c.reviews) == 1


def test_closed_whitelist():
    c = registry(Whitelist(open_registration=False))
    with pytest.raises(ClosedRegistration):
        c.whitelist_register(stranger.address, stranger.address)
    c.whitelist_register(owner.address, buyer.address)
    c.submit_review(buyer.address, review(buyer), 1)


def test_whitelist_register_wrong_mode():
    with pytest.raises(WrongMode):
        registry(AccessToken()).whitelist_register(buyer.address, buyer.address)


# -- access tokens -------------------------------------------------------------


def test_token_issue_and_consume():
    c = registry(AccessToken())
    c.issue_token(stranger.address, sign_receipt(vendor, buyer.address, "app", "1.0"))
    assert c.token_balance(buyer.address, "app", "1.0") == 1
    c.submit_review(buyer.address, review(buyer), 1)
    assert c.token_balance(buyer.address, "app", "1.0") == 0
    with pytest.raises(DuplicateReview):
        c.submit_review(buyer.address, review(buyer, rating=5), 2)


def test_forged_receipt_rejected():
    c = registry(AccessToken())
    with pytest.raises(contracts.BadReceipt):
        c.issue_token(buyer.address, sign_receipt(buyer, buyer.address, "app", "1.0"))


def test_second_issuance_rejected():
    c = registry(AccessToken())
    r = sign_receipt(vendor, buyer.address, "app", "1.0")
    c.issue_token(vendor.address, r)
    with pytest.raises(DoubleIssuance):
        c.issue_token(vendor.address, r)


def test_token_per_version():
    c = registry(AccessToken())
    c.issue_token(vendor.address, sign_receipt(vendor, buyer.address, "app", "1.0"))
    c.issue_token(vendor.address, sign_receipt(vendor, buyer.address, "app", "2.0"))
    c.submit_review(buyer.address, review(buyer, "1.0"), 1)
    c.submit_review(buyer.address, review(buyer, "2.0"), 2)
    assert len(c.reviews) == 2


def test_non_purchaser_rejected_under_tokens():
    c = registry(AccessToken())
    with pytest.raises(Unauthorized):
        c.submit_review(stranger.address, review(stranger), 1)


def test_tokens_never_transfer():
    c = registry(AccessToken())
    c.issue_token(vendor.address, sign_receipt(vendor, buyer.address, "app", "1.0"))
    before = dict(c.mode.balances)
    for amount in (0, 1, 5):
        with pytest.raises(TransferForbidden):
            c.token_transfer(buyer.address, stranger.address, "app", "1.0", amount)
    assert c.mode.balances == before


# -- pool key ------------------------------------------------------------------


def test_pool_key_accepts_anyone_with_key_and_loses_second_human():
    pool = key("pool")
    c = registry(PoolKey(pool.address))
    # first human's review through the shared key
    c.submit_review(pool.address, review(pool, rating=5), 1)
    # second human, same version, same shared key: indistinguishable
    with pytest.raises(DuplicateReview):
        c.submit_review(pool.address, review(pool, rating=1, ref=OnChain(b"bad")), 2)
    with pytest.raises(Unauthorized):
        c.submit_review(stranger.address, review(stranger), 3)


# -- review validation -----------------------------------------------------------


@pytest.mark.parametrize("rating", [0, 6, 100])
def test_rating_range(rating):
    c = registry(Whitelist())
    c.whitelist_register(buyer.address, buyer.address)
    with pytest.raises(MalformedReview):
        c.submit_review(buyer.address, review(buyer, rating=rating), 1)


def test_unknown_product_and_bad_signature():
    c = registry(Whitelist())
    c.whitelist_register(buyer.address, buyer.address)
    with pytest.raises(UnknownProduct):
        c.submit_review(buyer.address, review(buyer, pid="other-app"), 1)
    # signed by someone else than the sender
    with pytest.raises(MalformedReview):
        c.submit_review(buyer.address, review(stranger), 1)
    # signature over different content
    call = review(buyer)
    with pytest.raises(MalformedReview):
        c.submit_review(buyer.address, dataclasses.replace(call, rating=1), 1)


def test_call_codec_round_trip():
    calls = [
        contracts.RegisterVendor("app", vendor.public_key),
        WhitelistRegister(buyer.address),
        IssueToken(sign_receipt(vendor, buyer.address, "app", "1")),
        TokenTransfer(stranger.address, "app", "1", 2),
        review(buyer, ref=ContentAddressed(b"\x01" * 32)),
        DepositPool(10),
        ClaimRefund(3, 4),
        contracts.DeployReviewContract("pool", False, buyer.address),
        contracts.DeployRefundPool(buyer.address, 12),
    ]
    for call in calls:
        assert decode_call(call.encode()) == call


# -- on-chain authorization matrix -----------------------------------------------


def test_registry_grows_by_one_via_ledger():
    net = Net("token")
    u = key("ledger-buyer")
    net.chain.fund(u.address, FUNDS)
    net.send(net.vendor, net.review, IssueToken(sign_receipt(net.vendor, u.address, "app", "1")))
    net.mine()
    tx = net.send(u, net.review, review(u, "1"))
    net.mine()
    assert net.receipt(tx).success
    assert len(net.contract().reviews) == 1
    assert net.receipt(tx).storage_gas == 625 * len(REF.data)


# -- refund pool -------------------------------------------------------------------


def sponsored_net():
    net = Net("whitelist", refund=True)
    net.send(net.vendor, net.pool, DepositPool(ledger.GWEI_PER_ETH))
    net.mine()
    return net


def test_refund_claim_flow_and_author_cost_zero():
    net = sponsored_net()
    author = key("sponsored-author")
    net.send(author, net.review, WhitelistRegister(author.address), price=0)
    block = net.mine(miner=1)
    tx = net.send(author, net.review, review(author, "1", ref=OnChain(b"x" * 40)), price=0)
    block2 = net.mine(miner=1)
    assert net.chain.state.balance(author.address) == 0
    gas_used = net.receipt(tx).gas_used
    assert gas_used == 21_000 + 625 * 40
    pool_before = net.chain.state.balance(net.pool)
    miner_before = net.chain.state.balance(net.miners[1].address)
    assert ledger.median_fee(net.chain.state, 1500) == PAID
    claim = net.send(net.miners[1], net.pool, ClaimRefund(block2.height, 0))
    net.mine(miner=0)
    assert net.receipt(claim).success
    refund = PAID * gas_used
    assert net.chain.state.balance(net.pool) == pool_before - refund
    assert net.chain.state.balance(net.miners[1].address) == miner_before + refund - 21_000 * PAID
    assert block.transactions[0].gas_price == 0


def test_refund_rejections():
    net = sponsored_net()
    author = key("a2")
    net.send(author, net.review, WhitelistRegister(author.address), price=0)
    b = net.mine(miner=1)
    paid = net.send(net.vendor, net.review, WhitelistRegister(net.vendor.address))
    b_paid = net.mine(miner=1)
    m = net.miners[1]
    cases = [
        (m, ClaimRefund(b_paid.height, 0), "nonzero_gas_price"),
        (net.miners[0], ClaimRefund(b.height, 0), "wrong_miner"),
        (m, ClaimRefund(999, 0), "unknown_transaction"),
        (m, ClaimRefund(b.height, 0), "ok"),
        (m, ClaimRefund(b.height, 0), "double_claim"),
    ]
    for sender, call, expected in cases:
        tx = net.send(sender, net.pool, call)
        net.mine()
        assert net.receipt(tx).reason == expected, (call, expected)
    assert net.receipt(paid).success


def test_refund_needs_fee_reference():
    # a pool whose window only sees zero-price blocks
    pool = contracts.RefundPool(key("p").address, key("rc").address, window=1)

    class Ctx:
        sender = key("m").address
        height = 3
        address = pool.address

        def receipt(self, h, i):
            return ledger.Receipt(b"", h, i, buyer.address, pool.review_contract, 0, 21_000, 0, True, "ok", Ctx.sender, ledger.ZERO_ADDRESS)

        def median_fee(self, w):
            return 0

        def balance(self, a):
            return 10**9

        def transfer(self, *a):
            raise AssertionError("must not pay")

    with pytest.raises(contracts.NoFeeReference):
        pool.claim_refund(Ctx(), 2, 0)
    assert pool.total_refunds == 0


def test_deposit_validation():
    net = sponsored_net()
    tx = net.send(net.vendor, net.pool, DepositPool(0))
    net.mine()
    assert net.receipt(tx).reason == "invalid_amount"


# -- properties ----------------------------------------------------------------------

OPS = st.lists(
    st.tuples(
        st.sampled_from(["issue", "submit", "transfer", "register"]),
        st.integers(0, 2),  # actor
        st.integers(0, 1),  # version
        st.integers(1, 5),
    ),
    max_size=25,
)


@settings(max_examples=80, deadline=None)
@given(OPS, st.sampled_from(["whitelist", "token"]))
def test_registry_immutability_and_token_conservation(ops, mode_name):
    actors = [buyer, stranger, other]
    c = registry(contracts.make_mode(mode_name))
    snapshot = {}
    for op, who, ver, rating in ops:
        a = actors[who]
        v = f"v{ver}"
        try:
            if op == "issue":
                c.issue_token(a.address, sign_receipt(vendor, a.address, "app", v))
            elif op == "submit":
                c.submit_review(a.address, review(a, v, rating), 1)
            elif op == "transfer":
                c.token_transfer(a.address, actors[(who + 1) % 3].address, "app", v)
            else:
                c.whitelist_register(a.address, a.address)
        except contracts.ContractRevert:
            pass
        for k, rec in snapshot.items():
            assert c.reviews[k] == rec
        snapshot = dict(c.reviews)
        if isinstance(c.mode, AccessToken):
            for slot in c.mode.issued:
                consumed = 1 if slot in c.mode.consumed else 0
                assert 1 - consumed == c.mode.balances[slot]
                assert 1 - consumed in (0, 1)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(1, 300), min_size=1, max_size=6))
def test_pool_ledger_identity(sizes):
    net = sponsored_net()
    for i, n in enumerate(sizes):
        author = key("prop", i)
        net.send(author, net.review, WhitelistRegister(author.address), price=0)
        net.send(author, net.review, review(author, "1", ref=OnChain(b"z" * n)), price=0)
        block = net.mine(miner=1)
        for j, tx in enumerate(block.transactions):
            if tx.gas_price == 0:
                net.send(net.miners[1], net.pool, ClaimRefund(block.height, j))
        net.mine(miner=0)
        pool = net.chain.state.contract(net.pool)
        assert net.chain.state.balance(net.pool) + pool.total_refunds == pool.total_deposits
        assert net.chain.state.balance(author.address) == 0
