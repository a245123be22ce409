"""The action algebra: basic transfers and the advanced actions built from them.

Basic actions are single transfers, split by endpoint shape:

* normal    spender != recipient, neither endpoint is the zero address
* minting   spender is the zero address
* burning   recipient is the zero address

Advanced actions pair two constituents:

* liquidity mining   a normal deposit plus a mint of a different asset
* liquidity cancel   a burn plus a normal payout of a different asset
* trade              either two normal transfers of different assets
                     pivoting through one account (the pool), or a
                     mining/cancel pair routed through one holder

Attribute values are always drawn verbatim from the constituent
transfers; nothing is synthesized. Pairing is only ever attempted on
adjacent leaves, so multi-leg exchanges are not collapsed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .cft import TransferRecordNode
from .model import ZERO_ADDRESS, Address, Amount, AssetId

NORMAL = "normal"
MINTING = "minting"
BURNING = "burning"

LIQUIDITY_MINING = "liquidity_mining"
LIQUIDITY_CANCEL = "liquidity_cancel"
TRADE = "trade"


@dataclass(frozen=True, slots=True)
class BasicAction:
    kind: str  # NORMAL | MINTING | BURNING
    spender: Address
    recipient: Address
    asset: AssetId
    amount: Amount
    seq_span: tuple[int, int]
    parts: tuple[TransferRecordNode, ...]


@dataclass(frozen=True, slots=True)
class AdvancedAction:
    kind: str  # LIQUIDITY_MINING | LIQUIDITY_CANCEL | TRADE
    operator: Address
    recipient: Address
    pool: Address
    asset_in: AssetId
    asset_out: AssetId
    amount_in: Amount
    amount_out: Amount
    seq_span: tuple[int, int]
    parts: tuple[TransferRecordNode, ...]

    def __post_init__(self) -> None:
        if self.asset_in == self.asset_out:
            raise ValueError("advanced actions exchange two distinct assets")
        if self.amount_in <= 0 or self.amount_out <= 0:
            raise ValueError("advanced action amounts must be positive")


DefiAction = Union[BasicAction, AdvancedAction]


def span_of(parts: tuple[TransferRecordNode, ...]) -> tuple[int, int]:
    seqs = [t.seq for t in parts]
    return (min(seqs), max(seqs))


def classify_transfer(t: TransferRecordNode) -> BasicAction | None:
    """Sort one transfer into its basic kind, or none when no kind fits
    (self-transfers, and the ambiguous zero-to-zero shape)."""
    if t.amount <= 0:
        return None
    kind: str
    if t.spender == ZERO_ADDRESS and t.recipient == ZERO_ADDRESS:
        return None
    if t.spender == ZERO_ADDRESS:
        kind = MINTING
    elif t.recipient == ZERO_ADDRESS:
        kind = BURNING
    elif t.spender != t.recipient:
        kind = NORMAL
    else:
        return None
    return BasicAction(
        kind=kind,
        spender=t.spender,
        recipient=t.recipient,
        asset=t.asset,
        amount=t.amount,
        seq_span=(t.seq, t.seq),
        parts=(t,),
    )


def _merged(a: BasicAction, b: BasicAction) -> tuple[tuple[int, int], tuple[TransferRecordNode, ...]]:
    parts = a.parts + b.parts
    return span_of(parts), parts


def try_liquidity_mining(a: BasicAction, b: BasicAction) -> AdvancedAction | None:
    """A normal deposit plus a mint of a different asset, in either order."""
    if {a.kind, b.kind} != {NORMAL, MINTING}:
        return None
    t, t_m = (a, b) if a.kind == NORMAL else (b, a)
    if t.asset == t_m.asset:
        return None
    span, parts = _merged(a, b)
    return AdvancedAction(
        kind=LIQUIDITY_MINING,
        operator=t.spender,
        recipient=t_m.recipient,
        pool=t.recipient,
        asset_in=t.asset,
        asset_out=t_m.asset,
        amount_in=t.amount,
        amount_out=t_m.amount,
        seq_span=span,
        parts=parts,
    )


def try_liquidity_cancel(a: BasicAction, b: BasicAction) -> AdvancedAction | None:
    """A burn plus a normal payout of a different asset, in either order."""
    if {a.kind, b.kind} != {NORMAL, BURNING}:
        return None
    t, t_b = (a, b) if a.kind == NORMAL else (b, a)
    if t.asset == t_b.asset:
        return None
    span, parts = _merged(a, b)
    return AdvancedAction(
        kind=LIQUIDITY_CANCEL,
        operator=t_b.spender,
        recipient=t.recipient,
        pool=t.spender,
        asset_in=t_b.asset,
        asset_out=t.asset,
        amount_in=t_b.amount,
        amount_out=t.amount,
        seq_span=span,
        parts=parts,
    )


def try_trade(a: DefiAction, b: DefiAction) -> AdvancedAction | None:
    """Merge two actions into a trade; ``a`` must precede ``b``.

    Form one: two normal transfers of different assets where the first
    pays the account the second spends from; that pivot account is the
    pool. Form two: a liquidity-mining then a liquidity-cancel whose
    operator received the mint, exchanging two outside assets.
    """
    if isinstance(a, BasicAction) and isinstance(b, BasicAction):
        if a.kind != NORMAL or b.kind != NORMAL:
            return None
        if a.asset == b.asset or a.recipient != b.spender:
            return None
        span, parts = _merged(a, b)
        return AdvancedAction(
            kind=TRADE,
            operator=a.spender,
            recipient=b.recipient,
            pool=a.recipient,
            asset_in=a.asset,
            asset_out=b.asset,
            amount_in=a.amount,
            amount_out=b.amount,
            seq_span=span,
            parts=parts,
        )
    if isinstance(a, AdvancedAction) and isinstance(b, AdvancedAction):
        if a.kind != LIQUIDITY_MINING or b.kind != LIQUIDITY_CANCEL:
            return None
        if a.recipient != b.operator:
            return None
        if a.asset_in == b.asset_out or a.asset_out == b.asset_in:
            return None
        parts = a.parts + b.parts
        return AdvancedAction(
            kind=TRADE,
            operator=a.operator,
            recipient=b.recipient,
            # the mining row already fixes pool as the deposit target, so
            # the composed trade inherits that pool
            pool=a.pool,
            asset_in=a.asset_in,
            asset_out=b.asset_out,
            amount_in=a.amount_in,
            amount_out=b.amount_out,
            seq_span=span_of(parts),
            parts=parts,
        )
    return None


def describe(action: DefiAction) -> str:
    """One-line summary used by reports and tree dumps."""
    if isinstance(action, BasicAction):
        return (
            f"{action.kind} {action.spender}->{action.recipient} "
            f"{action.amount} {action.asset}"
        )
    return (
        f"{action.kind} operator={action.operator} pool={action.pool} "
        f"{action.amount_in} {action.asset_in} -> {action.amount_out} {action.asset_out}"
    )
