"""Shared fixtures: hand-built reference bundles and a random bundle maker."""

from __future__ import annotations

import hashlib
import random

import pytest

from cashtrace.cft import TRANSFER_TOPIC
from cashtrace.model import (
    ZERO_ADDRESS,
    Address,
    EventRecord,
    TraceBundle,
    TxRecord,
)

S = 10**18

# a topic that is not the token Transfer signature (reserve sync style log)
OTHER_TOPIC = bytes.fromhex(
    "1c411e9a96e071241c2f21f7726b17ae89e3cab4c78be50e062b03a9fffbbad1"
)


def addr(label: str) -> Address:
    return Address.from_bytes(hashlib.sha256(label.encode()).digest()[:20])


EOA = addr("fixture-eoa")
WALLET = addr("fixture-wallet-contract")
QUOTER = addr("fixture-quoter")
POOL_ONE = addr("fixture-pool-one")
POOL_TWO = addr("fixture-pool-two")
TOKEN_U = addr("fixture-token-u")
HELPER_V = addr("fixture-helper-v")
HELPER_W = addr("fixture-helper-w")
ROUTER = addr("fixture-router")
PAIR = addr("fixture-pair")
USDC = addr("fixture-usdc")
FACTORY = addr("fixture-factory")
MISC = addr("fixture-misc")


class BundleBuilder:
    """Minimal record builder with dense seq assignment."""

    def __init__(self, bundle_id: str, block: int = 1):
        self.bundle_id = bundle_id
        self.block = block
        self._seq = 0
        self.external: TxRecord | None = None
        self.internals: list[TxRecord] = []
        self.events: list[EventRecord] = []

    def _next(self) -> int:
        seq = self._seq
        self._seq += 1
        return seq

    def ext(self, sender, to, value=0, data=b"") -> TxRecord:
        tx = TxRecord(id=f"t{self._seq}", kind="ext", sender=sender, to=to,
                      value=value, input=data, depth=0, seq=self._next(), parent_seq=None)
        self.external = tx
        return tx

    def call(self, parent, sender, to, value=0, data=b"") -> TxRecord:
        tx = TxRecord(id=f"t{self._seq}", kind="int", sender=sender, to=to,
                      value=value, input=data, depth=parent.depth + 1,
                      seq=self._next(), parent_seq=parent.seq)
        self.internals.append(tx)
        return tx

    def event(self, parent, emitter, topics, data=b"") -> EventRecord:
        evt = EventRecord(emitter=emitter, topics=tuple(topics), data=data,
                          seq=self._next(), parent_seq=parent.seq)
        self.events.append(evt)
        return evt

    def transfer_event(self, parent, token, spender, recipient, amount) -> EventRecord:
        return self.event(
            parent, token,
            (TRANSFER_TOPIC, b"\0" * 12 + spender.raw, b"\0" * 12 + recipient.raw),
            amount.to_bytes(32, "big"),
        )

    def build(self) -> TraceBundle:
        assert self.external is not None
        return TraceBundle(
            external=self.external,
            internals=tuple(self.internals),
            events=tuple(self.events),
            block=self.block,
            bundle_id=self.bundle_id,
        )


def make_five_internal_bundle() -> TraceBundle:
    """The walkthrough tree: five depth-one calls under the external.

    Call two deposits Ether into pool one and receives minted pool
    shares; calls three and four realize a token-for-Ether trade through
    pool two; call eight forwards the proceeds to the sender. Call one
    and two of pool two's sub-calls move nothing. A reserve log hangs off
    the external and outlives pruning.
    """
    b = BundleBuilder("five-internals")
    root = b.ext(EOA, WALLET, value=3 * S)
    b.call(root, WALLET, QUOTER)                                 # seq 1: no transfers
    deposit = b.call(root, WALLET, POOL_ONE, value=3 * S)        # seq 2
    b.transfer_event(deposit, POOL_ONE, ZERO_ADDRESS, EOA, 50 * S)   # seq 3: share mint
    token_call = b.call(root, WALLET, TOKEN_U)                   # seq 4
    b.transfer_event(token_call, TOKEN_U, WALLET, POOL_TWO, 861 * S)  # seq 5
    swap = b.call(root, WALLET, POOL_TWO)                        # seq 6
    b.call(swap, POOL_TWO, WALLET, value=5 * S)                  # seq 7: payout
    b.call(swap, POOL_TWO, HELPER_V)                             # seq 8: no transfers
    b.call(swap, POOL_TWO, HELPER_W)                             # seq 9: no transfers
    b.call(root, WALLET, EOA, value=5 * S)                       # seq 10: forward proceeds
    b.event(root, WALLET, (OTHER_TOPIC,))                        # seq 11: survives pruning
    return b.build()


def make_eleven_internal_swap() -> TraceBundle:
    """A router-mediated swap of 861.95 tokens for half an Ether that
    fans out into eleven internal calls plus logs."""
    amount_in = 86195 * S // 100
    amount_out = S // 2
    b = BundleBuilder("router-swap")
    root = b.ext(EOA, ROUTER)
    b.call(root, ROUTER, USDC)                                   # allowance check
    b.call(root, ROUTER, FACTORY)                                # pair lookup
    pull = b.call(root, ROUTER, USDC)                            # pull funds
    b.transfer_event(pull, USDC, EOA, PAIR, amount_in)
    b.call(root, ROUTER, PAIR)                                   # reserve read
    swap = b.call(root, ROUTER, PAIR)                            # the swap call
    b.call(swap, PAIR, USDC)                                     # balance check
    b.call(swap, PAIR, ROUTER, value=amount_out)                 # payout
    b.event(swap, PAIR, (OTHER_TOPIC,))                          # reserve log
    b.call(root, ROUTER, EOA, value=amount_out)                  # forward to user
    b.call(root, ROUTER, USDC)                                   # balance check
    b.call(root, ROUTER, PAIR)                                   # final sync
    b.call(root, ROUTER, MISC)                                   # dust sweep, empty
    return b.build()


RANDOM_ADDRS = [addr(f"rand-{i}") for i in range(6)]
RANDOM_TOKENS = [addr(f"rand-token-{i}") for i in range(3)]


def random_bundle(rng: random.Random, bundle_id: str = "random") -> TraceBundle:
    """Random stack-disciplined call trees with a mix of decodable,
    malformed, zero-amount, and unrelated events, plus value transfers.

    Subtrees are grown depth-first so that, as in real execution, every
    record of an inner call precedes anything its caller does afterwards.
    """
    b = BundleBuilder(bundle_id)
    parties = RANDOM_ADDRS
    budget = rng.randint(0, 12)

    def one_event(tx) -> None:
        roll = rng.random()
        token = rng.choice(RANDOM_TOKENS)
        if roll < 0.55:
            spender = rng.choice(parties + [ZERO_ADDRESS])
            recipient = rng.choice(parties + [ZERO_ADDRESS])
            amount = rng.choice((0, 1, rng.randint(1, 10**20)))
            b.transfer_event(tx, token, spender, recipient, amount)
        elif roll < 0.7:
            # malformed transfer shapes: wrong topic count or data width
            if rng.random() < 0.5:
                b.event(tx, token, (TRANSFER_TOPIC, b"\0" * 32), b"\0" * 32)
            else:
                b.event(
                    tx, token,
                    (TRANSFER_TOPIC, b"\0" * 12 + rng.choice(parties).raw,
                     b"\0" * 12 + rng.choice(parties).raw),
                    b"\0" * 16,
                )
        else:
            b.event(tx, token, (OTHER_TOPIC,), b"\0" * rng.choice((0, 32)))

    def grow(parent, depth: int) -> None:
        nonlocal budget
        while True:
            roll = rng.random()
            if roll < 0.50 and budget > 0 and depth < 5:
                budget -= 1
                tx = b.call(parent, rng.choice(parties), rng.choice(parties),
                            value=rng.choice((0, 0, 0, rng.randint(1, 10**20))))
                grow(tx, depth + 1)
            elif roll < 0.72:
                one_event(parent)
            else:
                return

    root = b.ext(rng.choice(parties), rng.choice(parties),
                 value=rng.choice((0, 0, rng.randint(1, 10**20))))
    grow(root, 0)
    return b.build()


@pytest.fixture
def five_internal_bundle() -> TraceBundle:
    return make_five_internal_bundle()


@pytest.fixture
def eleven_internal_swap() -> TraceBundle:
    return make_eleven_internal_swap()
