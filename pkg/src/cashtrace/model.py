"""Raw trace domain types and the line-delimited trace file schema.

A trace file is a stream of JSON objects, one per line. A line with
``"rec": "bundle"`` opens a new bundle and carries ``bundle_id`` and
``block``. The records that follow belong to that bundle until the next
header:

* ``"rec": "ext"``   the single external transaction (depth 0)
* ``"rec": "int"``   an internal transaction (depth >= 1, has parent_seq)
* ``"rec": "evt"``   an event log (emitter, topics, data, parent_seq)

All records carry ``seq``, the global execution order inside the bundle;
the seq values of a valid bundle form the dense range 0..N-1. Amounts are
decimal strings in token base units (wei scale), byte strings are 0x hex.

Bundles are immutable after construction and safe to hand to parallel
workers; the loader streams, so arbitrarily large files stay in bounded
memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator


class TraceError(Exception):
    """Base class for trace file schema failures."""


class MalformedRecord(TraceError):
    """A line could not be parsed; carries the line number and field."""

    def __init__(self, line_no: int, field_name: str, message: str):
        super().__init__(f"line {line_no}, field {field_name!r}: {message}")
        self.line_no = line_no
        self.field_name = field_name


class DanglingParent(TraceError):
    """A record's parent_seq never resolves within its bundle."""


class DuplicateSeq(TraceError):
    """Two records in one bundle claim the same seq."""


class Address(str):
    """A 20-byte account identifier, canonically rendered as lowercase hex."""

    __slots__ = ()

    def __new__(cls, value: str) -> "Address":
        v = value.lower()
        if not v.startswith("0x") or len(v) != 42:
            raise ValueError(f"address must be 0x + 40 hex chars, got {value!r}")
        int(v, 16)  # raises on non-hex
        return str.__new__(cls, v)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Address":
        if len(raw) != 20:
            raise ValueError(f"address must be exactly 20 bytes, got {len(raw)}")
        return cls("0x" + raw.hex())

    @property
    def raw(self) -> bytes:
        return bytes.fromhex(self[2:])


ZERO_ADDRESS = Address("0x" + "00" * 20)


@dataclass(frozen=True, slots=True)
class AssetId:
    """Either the native coin (contract is None) or a token contract."""

    contract: Address | None = None

    @property
    def is_ether(self) -> bool:
        return self.contract is None

    def __str__(self) -> str:
        return "ether" if self.contract is None else str(self.contract)


ETHER = AssetId()


def erc20(contract: Address) -> AssetId:
    return AssetId(contract)


# Amounts are plain ints in base units: arbitrary precision, never wraps.
Amount = int


@dataclass(frozen=True, slots=True)
class TxRecord:
    """One external or internal transaction."""

    id: str
    kind: str  # "ext" | "int"
    sender: Address
    to: Address
    value: Amount
    input: bytes
    depth: int
    seq: int
    parent_seq: int | None = None

    @property
    def is_external(self) -> bool:
        return self.kind == "ext"


@dataclass(frozen=True, slots=True)
class EventRecord:
    """One event log, interleaved with transactions by seq."""

    emitter: Address
    topics: tuple[bytes, ...]
    data: bytes
    seq: int
    parent_seq: int


@dataclass(frozen=True, slots=True)
class TraceBundle:
    """One external transaction plus its internal transactions and events."""

    external: TxRecord
    internals: tuple[TxRecord, ...]
    events: tuple[EventRecord, ...]
    block: int
    bundle_id: str

    def tx_records(self) -> Iterator[TxRecord]:
        yield self.external
        yield from self.internals

    def record_count(self) -> int:
        return 1 + len(self.internals) + len(self.events)


@dataclass(frozen=True, slots=True)
class Violation:
    """One invariant violation found by validate_bundle."""

    code: str
    seq: int | None
    detail: str


def _hex_bytes(value: str, line_no: int, name: str) -> bytes:
    if not isinstance(value, str) or not value.startswith("0x"):
        raise MalformedRecord(line_no, name, "expected 0x-prefixed hex string")
    try:
        return bytes.fromhex(value[2:])
    except ValueError as exc:
        raise MalformedRecord(line_no, name, f"bad hex: {exc}") from None


def _address(value: object, line_no: int, name: str) -> Address:
    if not isinstance(value, str):
        raise MalformedRecord(line_no, name, "expected address string")
    try:
        return Address(value)
    except ValueError as exc:
        raise MalformedRecord(line_no, name, str(exc)) from None


def _uint(value: object, line_no: int, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedRecord(line_no, name, f"expected unsigned integer, got {value!r}")
    return value


def _amount(value: object, line_no: int, name: str) -> Amount:
    if not isinstance(value, str):
        raise MalformedRecord(line_no, name, "amounts are decimal strings")
    try:
        amount = int(value, 10)
    except ValueError:
        raise MalformedRecord(line_no, name, f"bad decimal string {value!r}") from None
    if amount < 0:
        raise MalformedRecord(line_no, name, "amounts are non-negative")
    return amount


def _parse_tx(obj: dict, kind: str, line_no: int) -> TxRecord:
    parent = obj.get("parent_seq")
    if kind == "ext":
        if parent is not None:
            raise MalformedRecord(line_no, "parent_seq", "external records have no parent")
    else:
        parent = _uint(parent, line_no, "parent_seq")
    return TxRecord(
        id=str(obj.get("id", "")),
        kind=kind,
        sender=_address(obj.get("from"), line_no, "from"),
        to=_address(obj.get("to"), line_no, "to"),
        value=_amount(obj.get("value", "0"), line_no, "value"),
        input=_hex_bytes(obj.get("input", "0x"), line_no, "input"),
        depth=_uint(obj.get("depth", 0), line_no, "depth"),
        seq=_uint(obj.get("seq"), line_no, "seq"),
        parent_seq=parent,
    )


def _parse_evt(obj: dict, line_no: int) -> EventRecord:
    raw_topics = obj.get("topics")
    if not isinstance(raw_topics, list):
        raise MalformedRecord(line_no, "topics", "expected a list of 0x hex words")
    topics = []
    for i, t in enumerate(raw_topics):
        word = _hex_bytes(t, line_no, f"topics[{i}]")
        if len(word) != 32:
            raise MalformedRecord(line_no, f"topics[{i}]", "topics are 32-byte words")
        topics.append(word)
    return EventRecord(
        emitter=_address(obj.get("emitter"), line_no, "emitter"),
        topics=tuple(topics),
        data=_hex_bytes(obj.get("data", "0x"), line_no, "data"),
        seq=_uint(obj.get("seq"), line_no, "seq"),
        parent_seq=_uint(obj.get("parent_seq"), line_no, "parent_seq"),
    )


class _BundleAccumulator:
    def __init__(self, bundle_id: str, block: int, line_no: int):
        self.bundle_id = bundle_id
        self.block = block
        self.line_no = line_no
        self.external: TxRecord | None = None
        self.internals: list[TxRecord] = []
        self.events: list[EventRecord] = []
        self.seqs: set[int] = set()

    def add_seq(self, seq: int, line_no: int) -> None:
        if seq in self.seqs:
            raise DuplicateSeq(f"bundle {self.bundle_id!r}: duplicate seq {seq} at line {line_no}")
        self.seqs.add(seq)

    def finish(self) -> TraceBundle:
        if self.external is None:
            raise MalformedRecord(self.line_no, "rec", f"bundle {self.bundle_id!r} has no external record")
        tx_seqs = {self.external.seq} | {t.seq for t in self.internals}
        for t in self.internals:
            if t.parent_seq not in tx_seqs:
                raise DanglingParent(
                    f"bundle {self.bundle_id!r}: internal seq {t.seq} parent_seq {t.parent_seq} unresolved"
                )
        for e in self.events:
            if e.parent_seq not in tx_seqs:
                raise DanglingParent(
                    f"bundle {self.bundle_id!r}: event seq {e.seq} parent_seq {e.parent_seq} unresolved"
                )
        self.internals.sort(key=lambda t: t.seq)
        self.events.sort(key=lambda e: e.seq)
        return TraceBundle(
            external=self.external,
            internals=tuple(self.internals),
            events=tuple(self.events),
            block=self.block,
            bundle_id=self.bundle_id,
        )


def iter_bundles(source: str | IO[str]) -> Iterator[TraceBundle]:
    """Stream bundles out of a trace file path or an open text handle."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            yield from _iter_bundles(handle)
    else:
        yield from _iter_bundles(source)


def _iter_bundles(handle: IO[str]) -> Iterator[TraceBundle]:
    acc: _BundleAccumulator | None = None
    for line_no, line in enumerate(handle, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, "<line>", f"bad JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise MalformedRecord(line_no, "<line>", "each line must be a JSON object")
        rec = obj.get("rec")
        if rec == "bundle":
            if acc is not None:
                yield acc.finish()
            acc = _BundleAccumulator(
                bundle_id=str(obj.get("bundle_id", "")),
                block=_uint(obj.get("block", 0), line_no, "block"),
                line_no=line_no,
            )
            continue
        if acc is None:
            raise MalformedRecord(line_no, "rec", "record appears before any bundle header")
        if rec == "ext":
            tx = _parse_tx(obj, "ext", line_no)
            if acc.external is not None:
                raise MalformedRecord(line_no, "rec", "second external record in one bundle")
            acc.add_seq(tx.seq, line_no)
            acc.external = tx
        elif rec == "int":
            tx = _parse_tx(obj, "int", line_no)
            acc.add_seq(tx.seq, line_no)
            acc.internals.append(tx)
        elif rec == "evt":
            evt = _parse_evt(obj, line_no)
            acc.add_seq(evt.seq, line_no)
            acc.events.append(evt)
        else:
            raise MalformedRecord(line_no, "rec", f"unknown record kind {rec!r}")
    if acc is not None:
        yield acc.finish()


def load_bundles(source: str | IO[str]) -> list[TraceBundle]:
    """Load every bundle in file order; see iter_bundles for streaming."""
    return list(iter_bundles(source))


def _tx_line(tx: TxRecord) -> str:
    obj: dict[str, object] = {
        "rec": tx.kind,
        "id": tx.id,
        "from": str(tx.sender),
        "to": str(tx.to),
        "value": str(tx.value),
        "input": "0x" + tx.input.hex(),
        "depth": tx.depth,
        "seq": tx.seq,
    }
    if tx.parent_seq is not None:
        obj["parent_seq"] = tx.parent_seq
    return json.dumps(obj, separators=(",", ":"))


def _evt_line(evt: EventRecord) -> str:
    obj = {
        "rec": "evt",
        "emitter": str(evt.emitter),
        "topics": ["0x" + t.hex() for t in evt.topics],
        "data": "0x" + evt.data.hex(),
        "seq": evt.seq,
        "parent_seq": evt.parent_seq,
    }
    return json.dumps(obj, separators=(",", ":"))


def bundle_to_lines(bundle: TraceBundle) -> Iterator[str]:
    """Render one bundle back into trace file lines, records in seq order."""
    yield json.dumps(
        {"rec": "bundle", "bundle_id": bundle.bundle_id, "block": bundle.block},
        separators=(",", ":"),
    )
    records: list[tuple[int, str]] = [(bundle.external.seq, _tx_line(bundle.external))]
    records.extend((t.seq, _tx_line(t)) for t in bundle.internals)
    records.extend((e.seq, _evt_line(e)) for e in bundle.events)
    records.sort(key=lambda pair: pair[0])
    for _, line in records:
        yield line


def dump_bundles(bundles: Iterable[TraceBundle]) -> str:
    """Serialize bundles to trace file text; load(dump(b)) round-trips."""
    lines: list[str] = []
    for bundle in bundles:
        lines.extend(bundle_to_lines(bundle))
    return "\n".join(lines) + "\n" if lines else ""


def validate_bundle(bundle: TraceBundle) -> list[Violation]:
    """Check every bundle invariant; empty report means the bundle is valid.

    Violations are report entries, not exceptions, so callers can log and
    skip bad bundles in batch runs.
    """
    report: list[Violation] = []
    out = report.append

    if bundle.external.depth != 0:
        out(Violation("ExternalDepth", bundle.external.seq, "external record must have depth 0"))
    if bundle.external.parent_seq is not None:
        out(Violation("ExternalParent", bundle.external.seq, "external record must have no parent_seq"))
    for t in bundle.internals:
        if t.kind != "int":
            out(Violation("KindMismatch", t.seq, f"internal list holds kind {t.kind!r}"))

    seqs = [bundle.external.seq] + [t.seq for t in bundle.internals] + [e.seq for e in bundle.events]
    n = len(seqs)
    if len(set(seqs)) != n:
        dupes = sorted({s for s in seqs if seqs.count(s) > 1})
        for s in dupes:
            out(Violation("DuplicateSeq", s, "seq value appears more than once"))
    elif set(seqs) != set(range(n)):
        out(Violation("NonDenseSeq", None, f"seq values are not a permutation of 0..{n - 1}"))

    tx_by_seq = {t.seq: t for t in bundle.tx_records()}
    for t in bundle.internals:
        parent = tx_by_seq.get(t.parent_seq)  # type: ignore[arg-type]
        if parent is None:
            out(Violation("DanglingParent", t.seq, f"parent_seq {t.parent_seq} is not a transaction"))
            continue
        if t.parent_seq >= t.seq:  # type: ignore[operator]
            out(Violation("ParentOrder", t.seq, "parent_seq must refer to an earlier record"))
        if t.depth != parent.depth + 1:
            out(
                Violation(
                    "DepthMismatch",
                    t.seq,
                    f"depth {t.depth} but parent depth {parent.depth}",
                )
            )
    for e in bundle.events:
        if e.parent_seq not in tx_by_seq:
            out(Violation("DanglingParent", e.seq, f"parent_seq {e.parent_seq} is not a transaction"))

    for name, records in (("internals", bundle.internals), ("events", bundle.events)):
        order = [r.seq for r in records]
        if order != sorted(order):
            out(Violation("OrderViolation", None, f"{name} are not in seq order"))

    return report
