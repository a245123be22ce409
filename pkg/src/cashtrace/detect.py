"""Pattern matching over lifted action sequences.

Three rules run over the flattened actions of one bundle:

* direct manipulation: a reverse trade pair by one account in one pool
  that comes out ahead, with someone else's transfer into the pool or
  someone else's same-direction trade squeezed between the two legs;
* indirect manipulation: a reverse trade pair that roughly breaks even,
  with a payout to the pair's operator (a plain transfer, or an advanced
  action in some other venue) in the middle;
* arbitrage: one account walking a closed asset cycle across adjacent
  distinct venues.

Arbitrage chains explain away reverse pairs embedded in them, so those
manipulation candidates are suppressed. Everything emitted is a
candidate for manual confirmation, never a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .actions import (
    TRADE,
    AdvancedAction,
    BasicAction,
    DefiAction,
)
from .model import Address, AssetId

DIRECT_MANIPULATION = "DirectManipulation"
INDIRECT_MANIPULATION = "IndirectManipulation"
ARBITRAGE = "Arbitrage"


@dataclass(frozen=True, slots=True)
class DetectorConfig:
    """Relative tolerances for the rule amount comparisons.

    Amount equality treats a and b as equal when |a-b| <= tol * max(a,b).
    The reverse-pair leg equality defaults to exact; the indirect rule's
    break-even check defaults to 1% to absorb venue fees.
    """

    amount_eq_rel_tol: Fraction = Fraction(0)
    indirect_in_out_rel_tol: Fraction = Fraction(1, 100)

    def __post_init__(self) -> None:
        for tol in (self.amount_eq_rel_tol, self.indirect_in_out_rel_tol):
            if not 0 <= tol < 1:
                raise ValueError("tolerances must be in [0, 1)")


DEFAULT_CONFIG = DetectorConfig()


def amounts_equal(a: int, b: int, tol: Fraction) -> bool:
    if tol == 0:
        return a == b
    return abs(a - b) * tol.denominator <= tol.numerator * max(a, b)


@dataclass(frozen=True, slots=True)
class ReverseTradePair:
    """Two opposite trades by one account in one pool, the first leg's
    proceeds feeding the second leg."""

    i: int
    j: int
    tr1: AdvancedAction
    tr2: AdvancedAction


@dataclass(frozen=True, slots=True)
class Finding:
    kind: str
    bundle_id: str
    witness: tuple[int, ...]
    attacker: Address
    pool: Address
    victim: Address | None
    profit_asset: AssetId
    profit_amount: int
    rule_trace: tuple[tuple[str, bool], ...] = field(default=())

    def sort_key(self) -> tuple:
        return (self.witness[0], self.witness, self.kind, str(self.victim))


def _pair_clauses(tr1: AdvancedAction, tr2: AdvancedAction, cfg: DetectorConfig) -> list[tuple[str, bool]]:
    return [
        ("tr1.operator == tr1.recipient", tr1.operator == tr1.recipient),
        ("tr2.operator == tr2.recipient", tr2.operator == tr2.recipient),
        ("tr1.operator == tr2.operator", tr1.operator == tr2.operator),
        ("tr1.pool == tr2.pool", tr1.pool == tr2.pool),
        ("tr1.asset_in == tr2.asset_out", tr1.asset_in == tr2.asset_out),
        ("tr1.asset_out == tr2.asset_in", tr1.asset_out == tr2.asset_in),
        (
            "tr1.amount_out == tr2.amount_in",
            amounts_equal(tr1.amount_out, tr2.amount_in, cfg.amount_eq_rel_tol),
        ),
    ]


def find_reverse_pairs(
    seq: list[DefiAction], cfg: DetectorConfig = DEFAULT_CONFIG
) -> list[ReverseTradePair]:
    """All index pairs (i < j) forming a reverse trade pair, in (i, j) order."""
    pairs: list[ReverseTradePair] = []
    trades = [(i, a) for i, a in enumerate(seq) if isinstance(a, AdvancedAction) and a.kind == TRADE]
    for x in range(len(trades)):
        i, tr1 = trades[x]
        for y in range(x + 1, len(trades)):
            j, tr2 = trades[y]
            if all(value for _, value in _pair_clauses(tr1, tr2, cfg)):
                pairs.append(ReverseTradePair(i=i, j=j, tr1=tr1, tr2=tr2))
    return pairs


def detect_direct(
    seq: list[DefiAction], cfg: DetectorConfig = DEFAULT_CONFIG, bundle_id: str = ""
) -> list[Finding]:
    """Reverse pairs that profit, with a foreign push on the pool between
    the legs. One finding per (pair, victim)."""
    findings: list[Finding] = []
    for pair in find_reverse_pairs(seq, cfg):
        tr1, tr2 = pair.tr1, pair.tr2
        if not tr1.amount_in < tr2.amount_out:
            continue
        seen_victims: set[Address] = set()
        for k in range(pair.i + 1, pair.j):
            mid = seq[k]
            victim: Address | None = None
            mid_clauses: list[tuple[str, bool]]
            if isinstance(mid, BasicAction):
                mid_clauses = [
                    ("mid.spender != tr1.operator", mid.spender != tr1.operator),
                    ("mid.recipient == tr1.pool", mid.recipient == tr1.pool),
                    ("mid.asset != tr1.asset_out", mid.asset != tr1.asset_out),
                ]
                if all(v for _, v in mid_clauses):
                    victim = mid.spender
            elif mid.kind == TRADE:
                mid_clauses = [
                    ("tr3.operator != tr1.operator", mid.operator != tr1.operator),
                    ("tr3.pool == tr1.pool", mid.pool == tr1.pool),
                    ("tr3.asset_out == tr1.asset_out", mid.asset_out == tr1.asset_out),
                ]
                if all(v for _, v in mid_clauses):
                    victim = mid.operator
            else:
                continue
            if victim is None or victim in seen_victims:
                continue
            seen_victims.add(victim)
            trace = (
                _pair_clauses(tr1, tr2, cfg)
                + [("tr1.amount_in < tr2.amount_out", True)]
                + mid_clauses
            )
            findings.append(
                Finding(
                    kind=DIRECT_MANIPULATION,
                    bundle_id=bundle_id,
                    witness=(pair.i, k, pair.j),
                    attacker=tr1.operator,
                    pool=tr1.pool,
                    victim=victim,
                    profit_asset=tr1.asset_in,
                    profit_amount=tr2.amount_out - tr1.amount_in,
                    rule_trace=tuple(trace),
                )
            )
    return findings


def detect_indirect(
    seq: list[DefiAction], cfg: DetectorConfig = DEFAULT_CONFIG, bundle_id: str = ""
) -> list[Finding]:
    """Break-even reverse pairs with a payout to the operator in between.

    The profit recorded is what the middle action delivered to the
    operator, in that action's asset."""
    findings: list[Finding] = []
    for pair in find_reverse_pairs(seq, cfg):
        tr1, tr2 = pair.tr1, pair.tr2
        if not amounts_equal(tr1.amount_in, tr2.amount_out, cfg.indirect_in_out_rel_tol):
            continue
        seen_victims: set[Address] = set()
        for k in range(pair.i + 1, pair.j):
            mid = seq[k]
            victim: Address | None = None
            profit_asset: AssetId
            profit_amount: int
            if isinstance(mid, BasicAction):
                mid_clauses = [("mid.recipient == tr1.operator", mid.recipient == tr1.operator)]
                if all(v for _, v in mid_clauses):
                    victim = mid.spender
                    profit_asset, profit_amount = mid.asset, mid.amount
            else:
                mid_clauses = [
                    ("mid.pool != tr1.pool", mid.pool != tr1.pool),
                    ("mid.recipient == tr1.operator", mid.recipient == tr1.operator),
                ]
                if all(v for _, v in mid_clauses):
                    victim = mid.pool
                    profit_asset, profit_amount = mid.asset_out, mid.amount_out
            if victim is None or victim in seen_victims:
                continue
            seen_victims.add(victim)
            trace = (
                _pair_clauses(tr1, tr2, cfg)
                + [
                    (
                        "tr1.amount_in ~= tr2.amount_out",
                        True,
                    )
                ]
                + mid_clauses
            )
            findings.append(
                Finding(
                    kind=INDIRECT_MANIPULATION,
                    bundle_id=bundle_id,
                    witness=(pair.i, k, pair.j),
                    attacker=tr1.operator,
                    pool=tr1.pool,
                    victim=victim,
                    profit_asset=profit_asset,
                    profit_amount=profit_amount,
                    rule_trace=tuple(trace),
                )
            )
    return findings


def _trade_runs(seq: list[DefiAction]) -> list[list[tuple[int, AdvancedAction]]]:
    """Split the trade subsequence into maximal linkable runs: consecutive
    trades by one operator, each hop feeding the next through a different
    venue."""
    trades = [(i, a) for i, a in enumerate(seq) if isinstance(a, AdvancedAction) and a.kind == TRADE]
    runs: list[list[tuple[int, AdvancedAction]]] = []
    current: list[tuple[int, AdvancedAction]] = []
    for item in trades:
        if current:
            _, prev = current[-1]
            _, here = item
            linked = (
                prev.operator == here.operator
                and prev.pool != here.pool
                and prev.asset_out == here.asset_in
            )
            if not linked:
                runs.append(current)
                current = []
        current.append(item)
    if current:
        runs.append(current)
    return runs


def detect_arbitrage(
    seq: list[DefiAction], cfg: DetectorConfig = DEFAULT_CONFIG, bundle_id: str = ""
) -> list[Finding]:
    """Closed asset cycles of two or more linked trades, maximal ones only.

    A shorter cycle nested inside a reported one is not reported again.
    """
    findings: list[Finding] = []
    for run in _trade_runs(seq):
        closed: list[tuple[int, int]] = []  # index range within run
        for p in range(len(run)):
            for q in range(p + 1, len(run)):
                if run[p][1].asset_in == run[q][1].asset_out:
                    closed.append((p, q))
        maximal = [
            (p, q)
            for (p, q) in closed
            if not any((p2 <= p and q <= q2) and (p2, q2) != (p, q) for (p2, q2) in closed)
        ]
        for p, q in sorted(maximal):
            chain = run[p : q + 1]
            first, last = chain[0][1], chain[-1][1]
            trace: list[tuple[str, bool]] = [
                ("tr1.asset_in == trn.asset_out", True),
                *[
                    (f"tr{t}.asset_out == tr{t + 1}.asset_in", True)
                    for t in range(1, len(chain))
                ],
            ]
            findings.append(
                Finding(
                    kind=ARBITRAGE,
                    bundle_id=bundle_id,
                    witness=tuple(i for i, _ in chain),
                    attacker=first.operator,
                    pool=first.pool,
                    victim=None,
                    profit_asset=first.asset_in,
                    profit_amount=last.amount_out - first.amount_in,
                    rule_trace=tuple(trace),
                )
            )
    return findings


def analyze(
    seq: list[DefiAction], cfg: DetectorConfig = DEFAULT_CONFIG, bundle_id: str = ""
) -> list[Finding]:
    """Run all three rules and suppress manipulation candidates whose
    reverse pair is part of a detected arbitrage cycle."""
    arb = detect_arbitrage(seq, cfg, bundle_id)
    chains = [set(f.witness) for f in arb]
    kept: list[Finding] = []
    for finding in detect_direct(seq, cfg, bundle_id) + detect_indirect(seq, cfg, bundle_id):
        pair = {finding.witness[0], finding.witness[-1]}
        if any(pair <= chain for chain in chains):
            continue
        kept.append(finding)
    kept.extend(arb)
    kept.sort(key=lambda f: f.sort_key())
    return kept
