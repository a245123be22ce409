"""Cash flow tree construction: tree building, transfer insertion, pruning.

The tree mirrors the call structure of one bundle. Transaction records
become inner nodes, events hang off the transaction that emitted them,
and the money movements are then materialized as transfer nodes:

* a transaction that carries native value gains an Ether transfer node
  as its first child, and
* every event whose topics decode as a standard token Transfer is
  replaced in place by a token transfer node.

Pruning then drops every call branch that moves no money. Event nodes
ride along with surviving transactions; they are discarded later, at the
end of semantic lifting, so that they keep separating leaves that were
never part of one action.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Union

from .model import (
    ZERO_ADDRESS,
    Address,
    Amount,
    AssetId,
    ETHER,
    EventRecord,
    TraceBundle,
    TxRecord,
    erc20,
)

if TYPE_CHECKING:  # circular at runtime: actions imports TransferRecordNode
    from .actions import DefiAction

# keccak256("Transfer(address,address,uint256)")
TRANSFER_TOPIC = bytes.fromhex(
    "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef"
)


@dataclass(frozen=True, slots=True)
class TransferRecordNode:
    """One concrete movement of value, Ether or token."""

    spender: Address
    recipient: Address
    asset: AssetId
    amount: Amount
    seq: int

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise ValueError("transfer nodes require amount > 0")


Payload = Union[TxRecord, EventRecord, TransferRecordNode, "DefiAction"]


@dataclass(slots=True)
class CftNode:
    payload: Payload
    children: list["CftNode"] = field(default_factory=list)

    @property
    def is_tx(self) -> bool:
        return isinstance(self.payload, TxRecord)

    @property
    def is_event(self) -> bool:
        return isinstance(self.payload, EventRecord)

    @property
    def is_transfer(self) -> bool:
        return isinstance(self.payload, TransferRecordNode)

    @property
    def is_action(self) -> bool:
        return not (self.is_tx or self.is_event or self.is_transfer)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(slots=True)
class BuildStats:
    """Bookkeeping gathered while materializing transfers."""

    malformed_transfer_events: int = 0
    zero_amount_transfers_dropped: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass(slots=True)
class Cft:
    root: CftNode
    bundle_id: str
    stats: BuildStats = field(default_factory=BuildStats)


def build_tree(bundle: TraceBundle) -> Cft:
    """Assemble the call tree: one node per transaction, events attached.

    Children end up ordered by seq because records are inserted in seq
    order and every parent precedes its children.
    """
    root = CftNode(bundle.external)
    nodes: dict[int, CftNode] = {bundle.external.seq: root}
    pending: list[tuple[int, CftNode]] = []
    for tx in bundle.internals:
        node = CftNode(tx)
        nodes[tx.seq] = node
        pending.append((tx.parent_seq, node))  # type: ignore[arg-type]
    for evt in bundle.events:
        pending.append((evt.parent_seq, CftNode(evt)))
    pending.sort(key=lambda pair: _payload_seq(pair[1].payload))
    for parent_seq, node in pending:
        nodes[parent_seq].children.append(node)
    return Cft(root=root, bundle_id=bundle.bundle_id)


def _payload_seq(payload: Payload) -> int:
    return payload.seq  # type: ignore[union-attr]


def decode_transfer_event(evt: EventRecord) -> TransferRecordNode | str:
    """Decode a token Transfer event, or return a reason string when the
    event carries the Transfer topic but is shaped wrong."""
    if len(evt.topics) != 3:
        return f"Transfer event with {len(evt.topics)} topics"
    if len(evt.data) != 32:
        return f"Transfer event with {len(evt.data)}-byte data"
    spender = Address.from_bytes(evt.topics[1][-20:])
    recipient = Address.from_bytes(evt.topics[2][-20:])
    if spender == ZERO_ADDRESS and recipient == ZERO_ADDRESS:
        return "Transfer event from zero address to zero address"
    amount = int.from_bytes(evt.data, "big")
    if amount == 0:
        return "zero-amount"
    return TransferRecordNode(
        spender=spender,
        recipient=recipient,
        asset=erc20(evt.emitter),
        amount=amount,
        seq=evt.seq,
    )


def insert_transfers(tree: Cft) -> Cft:
    """Materialize transfer nodes in place.

    Ether transfers (value > 0) become the first child of their
    transaction node. Decodable token Transfer events are replaced by
    transfer nodes at their position; malformed ones stay event nodes
    and are counted, zero-amount ones are dropped and counted.
    """
    stats = tree.stats

    def visit(node: CftNode) -> None:
        new_children: list[CftNode] = []
        for child in node.children:
            if child.is_event:
                evt = child.payload
                assert isinstance(evt, EventRecord)
                if evt.topics and evt.topics[0] == TRANSFER_TOPIC:
                    decoded = decode_transfer_event(evt)
                    if decoded == "zero-amount":
                        stats.zero_amount_transfers_dropped += 1
                        continue
                    if isinstance(decoded, str):
                        stats.malformed_transfer_events += 1
                        stats.warnings.append(f"seq {evt.seq}: {decoded}")
                        new_children.append(child)
                        continue
                    new_children.append(CftNode(decoded))
                    continue
            new_children.append(child)
            visit(child)
        tx = node.payload
        if isinstance(tx, TxRecord) and tx.value > 0:
            ether = TransferRecordNode(
                spender=tx.sender,
                recipient=tx.to,
                asset=ETHER,
                amount=tx.value,
                seq=tx.seq,
            )
            new_children.insert(0, CftNode(ether))
        node.children = new_children

    visit(tree.root)
    return tree


def _subtree_has_transfer(node: CftNode, memo: dict[int, bool]) -> bool:
    key = id(node)
    cached = memo.get(key)
    if cached is not None:
        return cached
    result = node.is_transfer or any(_subtree_has_transfer(c, memo) for c in node.children)
    memo[key] = result
    return result


def prune(tree: Cft) -> Cft:
    """Drop every call branch whose subtree moves no value.

    The root always survives. Event nodes are not branches of their own:
    they stay with a surviving parent (they still matter to lifting) and
    disappear with a removed one. When the whole tree is transfer-free
    only the root remains.
    """
    memo: dict[int, bool] = {}

    def walk(node: CftNode) -> None:
        parent_has = _subtree_has_transfer(node, memo)
        kept: list[CftNode] = []
        for child in node.children:
            if child.is_event:
                if parent_has:
                    kept.append(child)
            elif child.is_transfer or _subtree_has_transfer(child, memo):
                kept.append(child)
                walk(child)
        node.children = kept

    walk(tree.root)
    return tree


def iter_transfers(node: CftNode) -> Iterator[TransferRecordNode]:
    """In-order traversal of raw transfer nodes below (and at) a node."""
    if isinstance(node.payload, TransferRecordNode):
        yield node.payload
    for child in node.children:
        yield from iter_transfers(child)


def count_nodes(node: CftNode) -> int:
    return 1 + sum(count_nodes(c) for c in node.children)
