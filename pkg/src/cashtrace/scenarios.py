"""Ground-truth scenario generator.

Each scenario renders a known flow into the trace file schema so the
whole pipeline can be checked end to end against a manifest of expected
findings:

* direct:    inflate a pool, squeeze a victim sale through its exposed
             interface, close with the reverse trade at a profit;
* indirect:  move a pool's quote, collect a payout from an app that
             prices off that quote (a lender paying out a loan, or a
             vault minting shares), then trade back to recover the cost;
* benign:    one ordinary swap;
* arbitrage: a closed cycle of swaps across several venues.

Generation is deterministic in (kind, params, seed). Every pool
interaction is rendered in the nested call shape real routers produce
(token pull and payout inside the pool call), and chaff calls with
approval events are sprinkled between interactions so pruning has real
work to do.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .amm import InvalidParams, LendingConfig, VaultState, max_borrow, swap_out, vault_mint
from .cft import TRANSFER_TOPIC
from .model import (
    ZERO_ADDRESS,
    Address,
    Amount,
    EventRecord,
    TraceBundle,
    TxRecord,
    bundle_to_lines,
)

# keccak256("Approval(address,address,uint256)"), used only as chaff
APPROVAL_TOPIC = bytes.fromhex(
    "8c5be1e5ebec7d5bd14f71427d1e84f3dd0314c0f7b2291e5b200ac8c7c3b925"
)

DIRECT = "direct"
INDIRECT = "indirect"
BENIGN = "benign"
ARBITRAGE_CHAIN = "arbitrage"

KINDS = (DIRECT, INDIRECT, BENIGN, ARBITRAGE_CHAIN)


def role_address(label: str) -> Address:
    """Stable address for a scenario role, derived from its label."""
    return Address.from_bytes(hashlib.sha256(label.encode()).digest()[:20])


ATTACKER_EOA = role_address("attacker-eoa")
ATTACKER = role_address("attacker-contract")
VICTIM_APP = role_address("victim-app")
POOL_A = role_address("pool-a")
POOL_B = role_address("pool-b")
POOL_C = role_address("pool-c")
TOKEN_X = role_address("token-x")
TOKEN_Y = role_address("token-y")
TOKEN_U = role_address("token-u")
TOKEN_T = role_address("token-t")
LENDER_CUSTODY = role_address("lender-custody")
LENDER_TREASURY = role_address("lender-treasury")
VAULT = role_address("vault")
VAULT_SHARE = role_address("vault-share-token")


class _Builder:
    """Accumulates records with dense seq numbers and builds the bundle."""

    def __init__(self, bundle_id: str, block: int):
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

    def ext(self, sender: Address, to: Address, value: Amount = 0, data: bytes = b"") -> TxRecord:
        seq = self._next()
        tx = TxRecord(
            id=f"t{seq}", kind="ext", sender=sender, to=to, value=value,
            input=data, depth=0, seq=seq, parent_seq=None,
        )
        self.external = tx
        return tx

    def call(
        self, parent: TxRecord, sender: Address, to: Address,
        value: Amount = 0, data: bytes = b"",
    ) -> TxRecord:
        seq = self._next()
        tx = TxRecord(
            id=f"t{seq}", kind="int", sender=sender, to=to, value=value,
            input=data, depth=parent.depth + 1, seq=seq, parent_seq=parent.seq,
        )
        self.internals.append(tx)
        return tx

    def event(self, parent: TxRecord, emitter: Address, topics: tuple[bytes, ...], data: bytes) -> None:
        self.events.append(
            EventRecord(emitter=emitter, topics=topics, data=data, seq=self._next(), parent_seq=parent.seq)
        )

    def transfer(self, parent: TxRecord, token: Address, spender: Address, recipient: Address, amount: Amount) -> None:
        self.event(
            parent, token,
            (TRANSFER_TOPIC, b"\0" * 12 + spender.raw, b"\0" * 12 + recipient.raw),
            amount.to_bytes(32, "big"),
        )

    def finish(self) -> TraceBundle:
        assert self.external is not None
        return TraceBundle(
            external=self.external,
            internals=tuple(self.internals),
            events=tuple(self.events),
            block=self.block,
            bundle_id=self.bundle_id,
        )


def _swap_group(
    b: _Builder, root: TxRecord, operator: Address, pool: Address,
    token_in: Address | None, token_out: Address | None,
    amount_in: Amount, amount_out: Amount,
) -> None:
    """One pool interaction: the pull of the incoming asset and the payout
    of the outgoing one, nested inside the pool call. A None token means
    the native coin, moved by call value instead of an event."""
    call = b.call(root, operator, pool, value=amount_in if token_in is None else 0, data=b"\x02\x2c\x0d\x9f")
    if token_in is not None:
        pull = b.call(call, pool, token_in)
        b.transfer(pull, token_in, operator, pool, amount_in)
    if token_out is None:
        b.call(call, pool, operator, value=amount_out)
    else:
        pay = b.call(call, pool, token_out)
        b.transfer(pay, token_out, pool, operator, amount_out)


def _chaff(b: _Builder, root: TxRecord, rng: random.Random, owner: Address) -> None:
    token = rng.choice((TOKEN_X, TOKEN_Y, TOKEN_U, TOKEN_T))
    call = b.call(root, owner, token, data=b"\x70\xa0\x82\x31")
    if rng.random() < 0.5:
        b.event(
            call, token,
            (APPROVAL_TOPIC, b"\0" * 12 + owner.raw, b"\0" * 12 + POOL_A.raw),
            (2**256 - 1).to_bytes(32, "big"),
        )
        if rng.random() < 0.3:
            b.call(call, token, rng.choice((POOL_B, POOL_C)))


@dataclass(frozen=True, slots=True)
class ScenarioResult:
    bundles: tuple[TraceBundle, ...]
    manifest: dict
    text: str


_DEFAULTS: dict[str, dict] = {
    DIRECT: {
        "scale": 10**18,
        "reserve_x": 1000,
        "reserve_y": 1000,
        "attack_in": 900,
        "victim_sell": 10,
        "chaff": 2,
        "count": 1,
    },
    INDIRECT: {
        "middle": "lending",
        "scale": 10**18,
        "reserve_x": 1_000_000,
        "reserve_y": 1_000_000,
        "manip_in": 0,  # 0 means: solve for the target quote ratio
        "target_rate_num": 2,
        "target_rate_den": 1,
        "collateral_base": 0,  # 0 means: 1.5 tokens at scale
        "deposit": 60_200_000,
        "vault_supply": 345_000_000,
        "vault_underlying": 150_000_000,
        "vault_lp": 100_000_000,
        "vault_rate_num": 151,
        "vault_rate_den": 100,
        "chaff": 2,
        "count": 1,
    },
    BENIGN: {
        "scale": 10**18,
        "reserve_x": 1000,
        "reserve_y": 1000,
        "trade_in": 10,
        "chaff": 2,
        "count": 1,
    },
    ARBITRAGE_CHAIN: {
        "scale": 10**18,
        "ether_reserve": 10_000,
        "usd_reserve": 20_000_000,
        "mid_reserve": 1_000_000,
        "skew_num": 3,
        "skew_den": 2,
        "start_in": 100,
        "chaff": 2,
        "count": 1,
    },
}


def scenario_params(kind: str, overrides: dict | None = None) -> dict:
    if kind not in _DEFAULTS:
        raise InvalidParams(f"unknown scenario kind {kind!r}; known: {', '.join(KINDS)}")
    params = dict(_DEFAULTS[kind])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise InvalidParams(f"unknown parameter {key!r} for scenario {kind!r}")
        params[key] = value
    return params


def _expected(kind: str, attacker: Address, pool: Address, victim: Address | None,
              profit_asset: str, profit_amount: int) -> dict:
    return {
        "kind": kind,
        "attacker": str(attacker),
        "pool": str(pool),
        "victim": None if victim is None else str(victim),
        "profit_asset": profit_asset,
        "profit_amount": profit_amount,
    }


def _gen_direct(params: dict, rng: random.Random, bundle_id: str, block: int) -> tuple[TraceBundle, dict]:
    s = params["scale"]
    rx, ry = params["reserve_x"] * s, params["reserve_y"] * s
    attack_in = params["attack_in"] * s
    victim_sell = params["victim_sell"] * s
    if min(rx, ry, attack_in, victim_sell) <= 0:
        raise InvalidParams("direct scenario amounts must be positive")

    y1 = swap_out(attack_in, rx, ry)
    rx1, ry1 = rx + attack_in, ry - y1
    y2 = swap_out(victim_sell, rx1, ry1)
    rx2, ry2 = rx1 + victim_sell, ry1 - y2
    x3 = swap_out(y1, ry2, rx2)
    fair = swap_out(victim_sell, rx, ry)

    b = _Builder(bundle_id, block)
    root = b.ext(ATTACKER_EOA, ATTACKER, data=b"\xde\xad\xbe\xef")
    groups = [
        lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_X, TOKEN_Y, attack_in, y1),
        lambda: _victim_group(b, root, victim_sell, y2),
        lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_Y, TOKEN_X, y1, x3),
    ]
    _emit_with_chaff(b, root, rng, groups, params["chaff"])

    expected = [
        _expected(
            "DirectManipulation", ATTACKER, POOL_A, VICTIM_APP,
            str(TOKEN_X), x3 - attack_in,
        )
    ]
    notes = {
        "victim_received": y2,
        "fair_received": fair,
        "victim_loss": fair - y2,
        "attacker_profit": x3 - attack_in,
        "expected_sequence": ["trade", "trade", "trade"],
    }
    return b.finish(), {"bundle_id": bundle_id, "expected_findings": expected, "notes": notes}


def _victim_group(b: _Builder, root: TxRecord, victim_sell: Amount, y2: Amount) -> None:
    # the exposed interface: the attacker's call makes the app trade its own tokens
    exploit = b.call(root, ATTACKER, VICTIM_APP, data=b"\x5e\x11\xab\x1e")
    call = b.call(exploit, VICTIM_APP, POOL_A, data=b"\x02\x2c\x0d\x9f")
    pull = b.call(call, POOL_A, TOKEN_X)
    b.transfer(pull, TOKEN_X, VICTIM_APP, POOL_A, victim_sell)
    pay = b.call(call, POOL_A, TOKEN_Y)
    b.transfer(pay, TOKEN_Y, POOL_A, VICTIM_APP, y2)


def _solve_doubling_input(reserve: Amount, target: Fraction) -> Amount:
    """Smallest sell that pushes the quote (R_y / R_x after the trade) to
    at least the target ratio."""
    lo, hi = 1, reserve * (target.numerator + target.denominator)
    while lo < hi:
        mid = (lo + hi) // 2
        out = swap_out(mid, reserve, reserve)
        if Fraction(reserve + mid, reserve - out) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _gen_indirect(params: dict, rng: random.Random, bundle_id: str, block: int) -> tuple[TraceBundle, dict]:
    s = params["scale"]
    rx, ry = params["reserve_x"] * s, params["reserve_y"] * s
    middle = params["middle"]
    if middle not in ("lending", "vault"):
        raise InvalidParams(f"indirect middle must be 'lending' or 'vault', got {middle!r}")

    # step one: sell Y into the pool to inflate X's quote
    manip_in = params["manip_in"] * s
    if manip_in == 0:
        if rx != ry:
            raise InvalidParams("manip_in auto-solve requires equal reserves")
        target = Fraction(params["target_rate_num"], params["target_rate_den"])
        manip_in = _solve_doubling_input(rx, target)
    z = swap_out(manip_in, ry, rx)  # Y in, X out
    rx1, ry1 = rx - z, ry + manip_in
    y_back = swap_out(z, rx1, ry1)
    rate_before = Fraction(ry, rx)
    rate_after = Fraction(ry1, rx1)

    b = _Builder(bundle_id, block)
    root = b.ext(ATTACKER_EOA, ATTACKER, data=b"\xde\xad\xbe\xef")

    expected: list[dict]
    notes: dict
    if middle == "lending":
        collateral = params["collateral_base"] or (3 * s) // 2
        if collateral == z:
            raise InvalidParams("collateral must differ from the manipulation proceeds")
        borrow_before = int(max_borrow(collateral * rate_before, LendingConfig()))
        borrow_after = int(max_borrow(collateral * rate_after, LendingConfig()))

        def middle_groups() -> None:
            deposit = b.call(root, ATTACKER, LENDER_CUSTODY, data=b"\xd0\xe3\x0d\xb0")
            pull = b.call(deposit, LENDER_CUSTODY, TOKEN_X)
            b.transfer(pull, TOKEN_X, ATTACKER, LENDER_CUSTODY, collateral)
            borrow = b.call(root, ATTACKER, LENDER_TREASURY, data=b"\xc5\xeb\xea\xec")
            pay = b.call(borrow, LENDER_TREASURY, TOKEN_Y)
            b.transfer(pay, TOKEN_Y, LENDER_TREASURY, ATTACKER, borrow_after)

        expected = [
            _expected(
                "IndirectManipulation", ATTACKER, POOL_A, LENDER_TREASURY,
                str(TOKEN_Y), borrow_after,
            )
        ]
        notes = {
            "borrow_normal": borrow_before,
            "borrow_manipulated": borrow_after,
            "rate_before": str(rate_before),
            "rate_after": str(rate_after),
            "expected_sequence": ["trade", "normal", "normal", "trade"],
        }
    else:
        deposit = params["deposit"] * s
        if deposit == z:
            raise InvalidParams("deposit must differ from the manipulation proceeds")
        vault = VaultState(
            reserve_underlying=params["vault_underlying"] * s,
            reserve_lp_external=params["vault_lp"] * s,
            total_supply_shares=params["vault_supply"] * s,
            external_rate=Fraction(params["vault_rate_num"], params["vault_rate_den"]),
        )
        minted = vault_mint(vault, deposit)

        def middle_groups() -> None:
            call = b.call(root, ATTACKER, VAULT, data=b"\xd0\xe3\x0d\xb0")
            pull = b.call(call, VAULT, TOKEN_X)
            b.transfer(pull, TOKEN_X, ATTACKER, VAULT, deposit)
            mint = b.call(call, VAULT, VAULT_SHARE)
            b.transfer(mint, VAULT_SHARE, ZERO_ADDRESS, ATTACKER, minted)

        expected = [
            _expected(
                "IndirectManipulation", ATTACKER, POOL_A, VAULT,
                str(VAULT_SHARE), minted,
            )
        ]
        notes = {
            "deposit": deposit,
            "minted": minted,
            "expected_sequence": ["trade", "liquidity_mining", "trade"],
        }

    groups = [
        lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_Y, TOKEN_X, manip_in, z),
        middle_groups,
        lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_X, TOKEN_Y, z, y_back),
    ]
    _emit_with_chaff(b, root, rng, groups, params["chaff"])
    return b.finish(), {"bundle_id": bundle_id, "expected_findings": expected, "notes": notes}


def _gen_benign(params: dict, rng: random.Random, bundle_id: str, block: int) -> tuple[TraceBundle, dict]:
    s = params["scale"]
    rx, ry = params["reserve_x"] * s, params["reserve_y"] * s
    trade_in = params["trade_in"] * s
    out = swap_out(trade_in, rx, ry)
    b = _Builder(bundle_id, block)
    root = b.ext(ATTACKER_EOA, ATTACKER, data=b"\x12\x34\x56\x78")
    groups = [lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_X, TOKEN_Y, trade_in, out)]
    _emit_with_chaff(b, root, rng, groups, params["chaff"])
    notes = {"received": out, "expected_sequence": ["trade"]}
    return b.finish(), {"bundle_id": bundle_id, "expected_findings": [], "notes": notes}


def _gen_arbitrage(params: dict, rng: random.Random, bundle_id: str, block: int) -> tuple[TraceBundle, dict]:
    s = params["scale"]
    re_a, ru_a = params["ether_reserve"] * s, params["usd_reserve"] * s
    mid = params["mid_reserve"] * s
    skew = Fraction(params["skew_num"], params["skew_den"])
    start = params["start_in"] * s

    u1 = swap_out(start, re_a, ru_a)
    t1 = swap_out(u1, mid, mid)
    rich_usd = int(mid * skew)
    u2 = swap_out(t1, mid, rich_usd)
    e_back = swap_out(u2, ru_a - u1, re_a + start)

    b = _Builder(bundle_id, block)
    root = b.ext(ATTACKER_EOA, ATTACKER, value=start, data=b"\xaa\xbb\xcc\xdd")
    groups = [
        lambda: _swap_group(b, root, ATTACKER, POOL_A, None, TOKEN_U, start, u1),
        lambda: _swap_group(b, root, ATTACKER, POOL_B, TOKEN_U, TOKEN_T, u1, t1),
        lambda: _swap_group(b, root, ATTACKER, POOL_C, TOKEN_T, TOKEN_U, t1, u2),
        lambda: _swap_group(b, root, ATTACKER, POOL_A, TOKEN_U, None, u2, e_back),
    ]
    _emit_with_chaff(b, root, rng, groups, params["chaff"])
    expected = [
        _expected("Arbitrage", ATTACKER, POOL_A, None, "ether", e_back - start)
    ]
    notes = {
        "profit": e_back - start,
        "expected_sequence": ["trade", "trade", "trade", "trade"],
    }
    return b.finish(), {"bundle_id": bundle_id, "expected_findings": expected, "notes": notes}


def _emit_with_chaff(b: _Builder, root: TxRecord, rng: random.Random, groups: list, chaff: int) -> None:
    """Interleave the action groups with chaff calls at random gaps.

    Chaff branches carry no transfers, so pruning removes them before any
    merging happens; placement cannot perturb the lifted result."""
    slots: list[int] = [rng.randint(0, len(groups)) for _ in range(max(0, chaff))]
    slots.sort()
    idx = 0
    for gap in range(len(groups) + 1):
        while idx < len(slots) and slots[idx] == gap:
            _chaff(b, root, rng, ATTACKER)
            idx += 1
        if gap < len(groups):
            groups[gap]()


_GENERATORS = {
    DIRECT: _gen_direct,
    INDIRECT: _gen_indirect,
    BENIGN: _gen_benign,
    ARBITRAGE_CHAIN: _gen_arbitrage,
}


def iter_generate(
    kind: str, params: dict | None = None, seed: int = 0
) -> Iterator[tuple[TraceBundle, dict]]:
    """Yield (bundle, manifest entry) pairs, one per requested bundle."""
    full = scenario_params(kind, params)
    count = full["count"]
    if count < 1:
        raise InvalidParams("count must be at least 1")
    gen = _GENERATORS[kind]
    for i in range(count):
        rng = random.Random(f"{kind}:{seed}:{i}")
        bundle_id = f"{kind}-{seed}-{i}"
        yield gen(full, rng, bundle_id, block=1_000_000 + i)


def generate(kind: str, params: dict | None = None, seed: int = 0) -> ScenarioResult:
    full = scenario_params(kind, params)
    bundles: list[TraceBundle] = []
    entries: list[dict] = []
    lines: list[str] = []
    for bundle, entry in iter_generate(kind, params, seed):
        bundles.append(bundle)
        entries.append(entry)
        lines.extend(bundle_to_lines(bundle))
    manifest = {
        "schema": "cashtrace-manifest-v1",
        "kind": kind,
        "seed": seed,
        "params": {k: v for k, v in full.items()},
        "bundles": entries,
    }
    text = "\n".join(lines) + "\n"
    return ScenarioResult(bundles=tuple(bundles), manifest=manifest, text=text)


def emit_scenario(kind: str, params: dict | None = None, seed: int = 0) -> bytes:
    """Deterministic trace file bytes for one scenario configuration."""
    return generate(kind, params, seed).text.encode("utf-8")


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"
