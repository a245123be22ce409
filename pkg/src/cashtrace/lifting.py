"""Semantic lifting: rewrite a pruned cash flow tree into action leaves.

The pass walks the tree post-order. At each inner node it repeatedly
tries to merge the tail of the accumulated children with the next child:

1. matching: adjacent leaves that satisfy an advanced-action condition
   become that action (mining and cancel are tried before trades, which
   only resolves ordering since their conditions are disjoint);
2. incorporating: when two adjacent leaves form a transfer chain (one
   account forwarding the same asset and amount it just received), the
   chain collapses into the absorbing construct. A chain between two
   plain transfers composes their endpoints; a chain into an action's
   inflow or out of its outflow is swallowed by the action unchanged.

A node left with a single leaf is removed and its leaf lifted, creating
new adjacencies one level up. Event nodes never merge; they deliberately
block adjacency while merging runs and are stripped afterwards. The
whole pass repeats until the tree stops changing, so lifting is
idempotent and a lifted tree is a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .actions import (
    AdvancedAction,
    BasicAction,
    DefiAction,
    classify_transfer,
    span_of,
    try_liquidity_cancel,
    try_liquidity_mining,
    try_trade,
)
from .cft import Cft, CftNode, TransferRecordNode
from .model import EventRecord, TxRecord


@dataclass(frozen=True, slots=True)
class LiftConfig:
    """Tolerance for chain amount equality; exact by default, a small
    relative slack admits fee-skimming intermediaries."""

    incorporate_amount_rel_tol: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if not 0 <= self.incorporate_amount_rel_tol < 1:
            raise ValueError("tolerance must be in [0, 1)")


DEFAULT_LIFT = LiftConfig()


def amounts_close(a: int, b: int, tol: Fraction) -> bool:
    if tol == 0:
        return a == b
    return abs(a - b) * tol.denominator <= tol.numerator * max(a, b)


def _leaf_action(node: CftNode) -> DefiAction | None:
    """View a leaf as an action: transfers classify lazily, actions pass
    through. Leaves that classify to nothing never participate."""
    payload = node.payload
    if isinstance(payload, TransferRecordNode):
        return classify_transfer(payload)
    if isinstance(payload, (BasicAction, AdvancedAction)):
        return payload
    return None


def _absorb(action: AdvancedAction, extra: BasicAction) -> AdvancedAction:
    parts = action.parts + extra.parts
    return replace(action, parts=parts, seq_span=span_of(parts))


def _compose_chain(first: BasicAction, second: BasicAction) -> BasicAction | None:
    """Collapse ``A sends x to B`` then ``B sends x on to C`` into a single
    A-to-C transfer, provided the composed endpoints still classify."""
    parts = first.parts + second.parts
    probe = TransferRecordNode(
        spender=first.spender,
        recipient=second.recipient,
        asset=first.asset,
        amount=first.amount,
        seq=first.seq_span[0],
    )
    composed = classify_transfer(probe)
    if composed is None:
        return None
    return BasicAction(
        kind=composed.kind,
        spender=first.spender,
        recipient=second.recipient,
        asset=first.asset,
        amount=first.amount,
        seq_span=span_of(parts),
        parts=parts,
    )


def merge_leaves(
    a: CftNode, b: CftNode, cfg: LiftConfig = DEFAULT_LIFT
) -> tuple[CftNode, bool]:
    """Try to merge two adjacent leaves, ``a`` preceding ``b``.

    Returns (merged node, True) on success and (a untouched, False)
    otherwise. Matching is attempted before incorporating.
    """
    if not (a.is_leaf and b.is_leaf):
        return a, False
    act_a = _leaf_action(a)
    act_b = _leaf_action(b)
    if act_a is None or act_b is None:
        return a, False

    if isinstance(act_a, BasicAction) and isinstance(act_b, BasicAction):
        for attempt in (try_liquidity_mining, try_liquidity_cancel, try_trade):
            merged = attempt(act_a, act_b)
            if merged is not None:
                return CftNode(merged), True
    else:
        merged = try_trade(act_a, act_b)
        if merged is not None:
            return CftNode(merged), True

    tol = cfg.incorporate_amount_rel_tol
    if isinstance(act_a, BasicAction) and isinstance(act_b, BasicAction):
        if (
            act_a.recipient == act_b.spender
            and act_a.asset == act_b.asset
            and amounts_close(act_a.amount, act_b.amount, tol)
        ):
            composed = _compose_chain(act_a, act_b)
            if composed is not None:
                return CftNode(composed), True
    elif isinstance(act_a, BasicAction) and isinstance(act_b, AdvancedAction):
        # an inbound leg feeding the action's deposit
        if (
            act_a.recipient == act_b.operator
            and act_a.asset == act_b.asset_in
            and amounts_close(act_a.amount, act_b.amount_in, tol)
        ):
            return CftNode(_absorb(act_b, act_a)), True
    elif isinstance(act_a, AdvancedAction) and isinstance(act_b, BasicAction):
        # an outbound leg forwarding the action's proceeds
        if (
            act_b.spender == act_a.recipient
            and act_b.asset == act_a.asset_out
            and amounts_close(act_b.amount, act_a.amount_out, tol)
        ):
            return CftNode(_absorb(act_a, act_b)), True
    return a, False


def merge_subtree(root: CftNode, cfg: LiftConfig = DEFAULT_LIFT) -> list[CftNode]:
    """Merge the children of one node pairwise until stable.

    The tail of the rebuilt child list is popped and retried against each
    incoming child; on failure it is pushed back. If exactly one child
    survives, the node itself is dropped and the child lifted.
    """
    new_children: list[CftNode] = []
    for child in root.children:
        while new_children:
            tail = new_children.pop()
            merged, did_merge = merge_leaves(tail, child, cfg)
            if did_merge:
                child = merged
            else:
                new_children.append(tail)
                break
        new_children.append(child)
    root.children = new_children
    if len(root.children) == 1:
        return root.children
    return [root]


def _lift_leaves(node: CftNode, cfg: LiftConfig) -> list[CftNode]:
    if node.is_leaf:
        return [node]
    new_children: list[CftNode] = []
    for child in node.children:
        new_children.extend(_lift_leaves(child, cfg))
    node.children = new_children
    return merge_subtree(node, cfg)


def _remove_event_leaves(node: CftNode) -> int:
    removed = 0
    kept: list[CftNode] = []
    for child in node.children:
        if child.is_event:
            removed += 1
            continue
        removed += _remove_event_leaves(child)
        kept.append(child)
    node.children = kept
    return removed


def _fingerprint(node: CftNode, out: list[str], depth: int = 0) -> None:
    out.append(f"{depth}:{_payload_key(node)}")
    for child in node.children:
        _fingerprint(child, out, depth + 1)


def _payload_key(node: CftNode) -> str:
    p = node.payload
    if isinstance(p, TxRecord):
        return f"tx{p.seq}"
    if isinstance(p, EventRecord):
        return f"ev{p.seq}"
    if isinstance(p, TransferRecordNode):
        return f"tr{p.seq}"
    return f"ac{p.seq_span}:{p.kind}:{len(p.parts)}"  # type: ignore[union-attr]


def lift(tree: Cft, cfg: LiftConfig = DEFAULT_LIFT) -> Cft:
    """Lift a pruned tree to its action normal form (idempotent)."""
    while True:
        before: list[str] = []
        _fingerprint(tree.root, before)
        # the root node is the tree handle: its children are rewritten in
        # place and it is never itself removed
        _lift_leaves(tree.root, cfg)
        _remove_event_leaves(tree.root)
        after: list[str] = []
        _fingerprint(tree.root, after)
        if before == after:
            return tree


def action_sequence(tree: Cft) -> list[DefiAction]:
    """Flatten a lifted tree into its actions in execution order.

    Unmerged transfer leaves enter as basic actions; leaves that classify
    to nothing (self-transfers) are skipped.
    """
    out: list[DefiAction] = []

    def walk(node: CftNode) -> None:
        if node.is_leaf and not node.is_tx:
            action = _leaf_action(node)
            if action is not None:
                out.append(action)
            return
        for child in node.children:
            walk(child)

    walk(tree.root)
    return out


# ---------------------------------------------------------------------------
# debug dump and its inverse, used by the CLI and the parse-back checks


def _dump_payload(node: CftNode) -> str:
    p = node.payload
    if isinstance(p, TxRecord):
        return (
            f"tx kind={p.kind} id={p.id} from={p.sender} to={p.to} "
            f"value={p.value} seq={p.seq}"
        )
    if isinstance(p, EventRecord):
        return f"event emitter={p.emitter} topics={len(p.topics)} seq={p.seq}"
    if isinstance(p, TransferRecordNode):
        return (
            f"transfer spender={p.spender} recipient={p.recipient} "
            f"asset={p.asset} amount={p.amount} seq={p.seq}"
        )
    if isinstance(p, BasicAction):
        return (
            f"action.{p.kind} spender={p.spender} recipient={p.recipient} "
            f"asset={p.asset} amount={p.amount} span={p.seq_span[0]}..{p.seq_span[1]}"
        )
    assert isinstance(p, AdvancedAction)
    return (
        f"action.{p.kind} operator={p.operator} recipient={p.recipient} "
        f"pool={p.pool} asset_in={p.asset_in} asset_out={p.asset_out} "
        f"amount_in={p.amount_in} amount_out={p.amount_out} "
        f"span={p.seq_span[0]}..{p.seq_span[1]}"
    )


def dump_tree(tree: Cft) -> str:
    """Indented one-node-per-line rendering of the tree."""
    lines: list[str] = []

    def walk(node: CftNode, depth: int) -> None:
        lines.append("  " * depth + _dump_payload(node))
        for child in node.children:
            walk(child, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines) + "\n"


@dataclass(slots=True)
class DumpNode:
    """Parsed form of one dump line: kind plus attribute map."""

    kind: str
    attrs: dict[str, str]
    children: list["DumpNode"]


def parse_dump(text: str) -> DumpNode:
    """Parse a dump back into a skeleton tree (inverse of dump_tree up to
    attribute stringification)."""
    root: DumpNode | None = None
    stack: list[tuple[int, DumpNode]] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        depth = (len(raw) - len(raw.lstrip(" "))) // 2
        head, *pairs = raw.strip().split(" ")
        node = DumpNode(kind=head, attrs=dict(p.split("=", 1) for p in pairs), children=[])
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if stack:
            stack[-1][1].children.append(node)
        else:
            if root is not None:
                raise ValueError("dump has more than one root line")
            root = node
        stack.append((depth, node))
    if root is None:
        raise ValueError("empty dump")
    return root


def dump_matches_tree(parsed: DumpNode, tree: Cft) -> bool:
    """True when a parsed dump is isomorphic to the tree it came from."""

    def same(d: DumpNode, n: CftNode) -> bool:
        line = _dump_payload(n)
        head, *pairs = line.split(" ")
        if d.kind != head or d.attrs != dict(p.split("=", 1) for p in pairs):
            return False
        if len(d.children) != len(n.children):
            return False
        return all(same(dc, nc) for dc, nc in zip(d.children, n.children))

    return same(parsed, tree.root)
