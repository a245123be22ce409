"""Independent reference implementations used to check the real code.

Everything here is deliberately written as straight-line re-derivations:
exact rational pricing, a brute-force rule evaluator over full index
space, a leftmost-pair interpreter of the merge loop, and a single-pass
transfer extractor that never touches the tree code.
"""

from __future__ import annotations

import random
from fractions import Fraction

from cashtrace.actions import (
    BURNING,
    LIQUIDITY_CANCEL,
    LIQUIDITY_MINING,
    MINTING,
    NORMAL,
    TRADE,
    AdvancedAction,
    BasicAction,
)
from cashtrace.cft import TRANSFER_TOPIC
from cashtrace.detect import DetectorConfig, Finding
from cashtrace.model import ETHER, ZERO_ADDRESS, Address, AssetId, TraceBundle, erc20


# ---------------------------------------------------------------------------
# exact rational pricing

def swap_out_exact(x: int, reserve_in: int, reserve_out: int,
                   fee_num: int = 997, fee_den: int = 1000) -> Fraction:
    return Fraction(fee_num * x * reserve_out, fee_num * x + fee_den * reserve_in)


def vault_mint_exact(deposit, underlying, lp, rate: Fraction, supply) -> Fraction:
    return Fraction(deposit) * supply / (underlying + rate * lp)


def vault_redeem_exact(burn, underlying, lp, rate: Fraction, supply) -> Fraction:
    return Fraction(burn) * (underlying + rate * lp) / supply


# ---------------------------------------------------------------------------
# brute-force detection oracle

FindingKey = tuple


def finding_key(f: Finding) -> FindingKey:
    return (
        f.kind,
        tuple(f.witness),
        str(f.attacker),
        str(f.pool),
        "-" if f.victim is None else str(f.victim),
        str(f.profit_asset),
        f.profit_amount,
    )


def _amounts_eq(a: int, b: int, tol: Fraction) -> bool:
    if tol == 0:
        return a == b
    return abs(a - b) * tol.denominator <= tol.numerator * max(a, b)


def oracle_analyze(seq: list, cfg: DetectorConfig, bundle_id: str = "") -> list[FindingKey]:
    """Triple-loop evaluation of all three rules plus suppression,
    producing the same canonical keys as finding_key."""
    trades = [(i, a) for i, a in enumerate(seq) if isinstance(a, AdvancedAction) and a.kind == TRADE]

    def is_pair(t1: AdvancedAction, t2: AdvancedAction) -> bool:
        return (
            t1.operator == t1.recipient
            and t2.operator == t2.recipient
            and t1.operator == t2.operator
            and t1.pool == t2.pool
            and t1.asset_in == t2.asset_out
            and t1.asset_out == t2.asset_in
            and _amounts_eq(t1.amount_out, t2.amount_in, cfg.amount_eq_rel_tol)
        )

    pairs = [
        (i, j, a, b)
        for x, (i, a) in enumerate(trades)
        for j, b in [trades[y] for y in range(x + 1, len(trades))]
        if is_pair(a, b)
    ]

    results: list[FindingKey] = []
    for i, j, t1, t2 in pairs:
        if not t1.amount_in < t2.amount_out:
            continue
        seen: set[str] = set()
        for k in range(i + 1, j):
            m = seq[k]
            victim = None
            if isinstance(m, BasicAction):
                if m.spender != t1.operator and m.recipient == t1.pool and m.asset != t1.asset_out:
                    victim = m.spender
            elif m.kind == TRADE:
                if m.operator != t1.operator and m.pool == t1.pool and m.asset_out == t1.asset_out:
                    victim = m.operator
            if victim is None or str(victim) in seen:
                continue
            seen.add(str(victim))
            results.append(
                ("DirectManipulation", (i, k, j), str(t1.operator), str(t1.pool),
                 str(victim), str(t1.asset_in), t2.amount_out - t1.amount_in)
            )

    for i, j, t1, t2 in pairs:
        if not _amounts_eq(t1.amount_in, t2.amount_out, cfg.indirect_in_out_rel_tol):
            continue
        seen = set()
        for k in range(i + 1, j):
            m = seq[k]
            victim = None
            if isinstance(m, BasicAction):
                if m.recipient == t1.operator:
                    victim, p_asset, p_amount = m.spender, m.asset, m.amount
            else:
                if m.pool != t1.pool and m.recipient == t1.operator:
                    victim, p_asset, p_amount = m.pool, m.asset_out, m.amount_out
            if victim is None or str(victim) in seen:
                continue
            seen.add(str(victim))
            results.append(
                ("IndirectManipulation", (i, k, j), str(t1.operator), str(t1.pool),
                 str(victim), str(p_asset), p_amount)
            )

    n = len(trades)
    closed: list[tuple[int, int]] = []
    for p in range(n):
        for q in range(p + 1, n):
            span = trades[p : q + 1]
            linked = all(
                span[t][1].operator == span[t + 1][1].operator
                and span[t][1].pool != span[t + 1][1].pool
                and span[t][1].asset_out == span[t + 1][1].asset_in
                for t in range(len(span) - 1)
            )
            if linked and span[0][1].asset_in == span[-1][1].asset_out:
                closed.append((p, q))
    maximal = [
        c for c in closed
        if not any(d != c and d[0] <= c[0] and c[1] <= d[1] for d in closed)
    ]
    chains: list[FindingKey] = []
    chain_sets: list[set[int]] = []
    for p, q in maximal:
        span = trades[p : q + 1]
        witness = tuple(i for i, _ in span)
        first, last = span[0][1], span[-1][1]
        chains.append(
            ("Arbitrage", witness, str(first.operator), str(first.pool), "-",
             str(first.asset_in), last.amount_out - first.amount_in)
        )
        chain_sets.append(set(witness))

    kept = [
        r for r in results
        if not any({r[1][0], r[1][-1]} <= c for c in chain_sets)
    ]
    kept.extend(chains)
    kept.sort(key=lambda r: (r[1][0], r[1], r[0], r[4]))
    return kept


# ---------------------------------------------------------------------------
# leftmost-pair interpreter of the merge loop

def reference_merge_children(children: list, merge_fn) -> list:
    """Repeatedly merge the leftmost mergeable adjacent pair until no pair
    merges; equivalent semantics to the tail-stack loop, different code."""
    items = list(children)
    while True:
        for idx in range(len(items) - 1):
            merged, ok = merge_fn(items[idx], items[idx + 1])
            if ok:
                items[idx : idx + 2] = [merged]
                break
        else:
            return items


# ---------------------------------------------------------------------------
# single-pass transfer extraction straight off the bundle records

def extract_transfers_direct(bundle: TraceBundle) -> list[tuple]:
    """The transfer multiset a correct tree must contain, computed without
    any tree: value-bearing transactions plus decodable Transfer events."""
    out: list[tuple] = []
    for tx in bundle.tx_records():
        if tx.value > 0:
            out.append((tx.seq, str(tx.sender), str(tx.to), "ether", tx.value))
    for evt in bundle.events:
        if not evt.topics or evt.topics[0] != TRANSFER_TOPIC:
            continue
        if len(evt.topics) != 3 or len(evt.data) != 32:
            continue
        spender = "0x" + evt.topics[1][-20:].hex()
        recipient = "0x" + evt.topics[2][-20:].hex()
        if spender == str(ZERO_ADDRESS) and recipient == str(ZERO_ADDRESS):
            continue
        amount = int.from_bytes(evt.data, "big")
        if amount == 0:
            continue
        out.append((evt.seq, spender, recipient, str(evt.emitter), amount))
    return sorted(out)


# ---------------------------------------------------------------------------
# random generators shared by property suites

def _addr(label: str) -> Address:
    import hashlib

    return Address.from_bytes(hashlib.sha256(label.encode()).digest()[:20])


SEQ_PARTIES = [_addr(f"party-{i}") for i in range(3)]
SEQ_POOLS = [_addr(f"pool-{i}") for i in range(3)]
SEQ_ASSETS: list[AssetId] = [ETHER] + [erc20(_addr(f"token-{i}")) for i in range(3)]
SEQ_AMOUNTS = [5, 8, 13, 21, 34]


def random_sequence(rng: random.Random, max_len: int = 8) -> list:
    """Random action sequences with heavy coincidence bias so every rule
    path fires often even at zero tolerance."""
    n = rng.randint(0, max_len)
    seq: list = []
    for i in range(n):
        roll = rng.random()
        trades = [a for a in seq if isinstance(a, AdvancedAction) and a.kind == TRADE]
        if roll < 0.40 and trades:
            t = rng.choice(trades)
            pool = t.pool if rng.random() < 0.8 else rng.choice(SEQ_POOLS)
            amount_out = t.amount_in if rng.random() < 0.6 else rng.choice(SEQ_AMOUNTS)
            seq.append(
                AdvancedAction(
                    kind=TRADE,
                    operator=t.operator,
                    recipient=t.operator if rng.random() < 0.85 else rng.choice(SEQ_PARTIES),
                    pool=pool,
                    asset_in=t.asset_out,
                    asset_out=t.asset_in,
                    amount_in=t.amount_out,
                    amount_out=amount_out,
                    seq_span=(i, i),
                    parts=(),
                )
            )
        elif roll < 0.70:
            op = rng.choice(SEQ_PARTIES)
            a_in, a_out = rng.sample(SEQ_ASSETS, 2)
            seq.append(
                AdvancedAction(
                    kind=TRADE,
                    operator=op,
                    recipient=op if rng.random() < 0.75 else rng.choice(SEQ_PARTIES),
                    pool=rng.choice(SEQ_POOLS),
                    asset_in=a_in,
                    asset_out=a_out,
                    amount_in=rng.choice(SEQ_AMOUNTS),
                    amount_out=rng.choice(SEQ_AMOUNTS),
                    seq_span=(i, i),
                    parts=(),
                )
            )
        elif roll < 0.82:
            a_in, a_out = rng.sample(SEQ_ASSETS, 2)
            kind = rng.choice((LIQUIDITY_MINING, LIQUIDITY_CANCEL))
            seq.append(
                AdvancedAction(
                    kind=kind,
                    operator=rng.choice(SEQ_PARTIES),
                    recipient=rng.choice(SEQ_PARTIES),
                    pool=rng.choice(SEQ_POOLS + SEQ_PARTIES),
                    asset_in=a_in,
                    asset_out=a_out,
                    amount_in=rng.choice(SEQ_AMOUNTS),
                    amount_out=rng.choice(SEQ_AMOUNTS),
                    seq_span=(i, i),
                    parts=(),
                )
            )
        else:
            kind = rng.choice((NORMAL, MINTING, BURNING))
            if kind == NORMAL:
                spender, recipient = rng.sample(SEQ_PARTIES + SEQ_POOLS, 2)
            elif kind == MINTING:
                spender, recipient = ZERO_ADDRESS, rng.choice(SEQ_PARTIES + SEQ_POOLS)
            else:
                spender, recipient = rng.choice(SEQ_PARTIES + SEQ_POOLS), ZERO_ADDRESS
            seq.append(
                BasicAction(
                    kind=kind,
                    spender=spender,
                    recipient=recipient,
                    asset=rng.choice(SEQ_ASSETS),
                    amount=rng.choice(SEQ_AMOUNTS),
                    seq_span=(i, i),
                    parts=(),
                )
            )
    return seq
