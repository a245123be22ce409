"""Rendering findings to the delimited report formats.

One line per finding, jsonl or text; summaries are kept out of the
report stream so its line count always equals the finding count. Every
record carries confidence "candidate": matches are inputs to manual
confirmation, not verdicts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .actions import DefiAction, describe
from .detect import Finding


@dataclass(slots=True)
class RunSummary:
    bundles: int = 0
    skipped: int = 0
    findings_by_kind: dict[str, int] = field(default_factory=dict)
    wall_seconds: float = 0.0

    def count(self, finding: Finding) -> None:
        self.findings_by_kind[finding.kind] = self.findings_by_kind.get(finding.kind, 0) + 1

    @property
    def total_findings(self) -> int:
        return sum(self.findings_by_kind.values())

    def line(self) -> str:
        per_kind = ", ".join(f"{k}={v}" for k, v in sorted(self.findings_by_kind.items())) or "none"
        return (
            f"bundles={self.bundles} skipped={self.skipped} "
            f"findings={self.total_findings} ({per_kind}) "
            f"wall={self.wall_seconds:.2f}s"
        )


def finding_record(finding: Finding, actions: list[DefiAction] | None = None) -> dict:
    record = {
        "kind": finding.kind,
        "bundle_id": finding.bundle_id,
        "attacker": str(finding.attacker),
        "pool": str(finding.pool),
        "victim": None if finding.victim is None else str(finding.victim),
        "profit_asset": str(finding.profit_asset),
        "profit_amount": finding.profit_amount,
        "witness": [
            {"index": i, "action": describe(actions[i])} if actions is not None else {"index": i}
            for i in finding.witness
        ],
        "rule_trace": [{"clause": clause, "value": value} for clause, value in finding.rule_trace],
        "confidence": "candidate",
    }
    return record


def render_jsonl(finding: Finding, actions: list[DefiAction] | None = None) -> str:
    return json.dumps(finding_record(finding, actions), separators=(",", ":"))


def render_text(finding: Finding, actions: list[DefiAction] | None = None) -> str:
    victim = finding.victim if finding.victim is not None else "-"
    witness = ",".join(str(i) for i in finding.witness)
    return (
        f"{finding.kind} bundle={finding.bundle_id} attacker={finding.attacker} "
        f"pool={finding.pool} victim={victim} "
        f"profit={finding.profit_amount} asset={finding.profit_asset} witness=[{witness}]"
    )


RENDERERS = {"jsonl": render_jsonl, "text": render_text}
