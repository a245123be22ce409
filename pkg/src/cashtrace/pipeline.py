"""End-to-end composition: bundle in, findings out.

This is exactly the module operations in sequence (validate, build,
insert transfers, prune, lift, flatten, analyze); the CLI adds nothing
beyond I/O and workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .actions import DefiAction
from .cft import Cft, build_tree, insert_transfers, prune
from .detect import DEFAULT_CONFIG, DetectorConfig, Finding, analyze
from .lifting import DEFAULT_LIFT, LiftConfig, action_sequence, lift
from .model import TraceBundle, validate_bundle

logger = logging.getLogger("cashtrace")


class BundleRejected(Exception):
    """The bundle failed invariant validation; carries the report."""

    def __init__(self, bundle_id: str, violations):
        super().__init__(
            f"bundle {bundle_id!r} rejected: "
            + "; ".join(f"{v.code}@{v.seq}" for v in violations)
        )
        self.violations = violations


@dataclass(slots=True)
class BundleResult:
    bundle_id: str
    findings: list[Finding]
    actions: list[DefiAction]
    node_count_before_prune: int = 0
    node_count_after_prune: int = 0


def lifted_tree(
    bundle: TraceBundle, lift_cfg: LiftConfig = DEFAULT_LIFT, validate: bool = True
) -> Cft:
    """Build, insert transfers, prune, and lift one bundle's tree."""
    if validate:
        violations = validate_bundle(bundle)
        if violations:
            raise BundleRejected(bundle.bundle_id, violations)
    tree = build_tree(bundle)
    insert_transfers(tree)
    prune(tree)
    return lift(tree, lift_cfg)


def analyze_bundle(
    bundle: TraceBundle,
    cfg: DetectorConfig = DEFAULT_CONFIG,
    lift_cfg: LiftConfig = DEFAULT_LIFT,
    validate: bool = True,
) -> BundleResult:
    tree = lifted_tree(bundle, lift_cfg, validate)
    actions = action_sequence(tree)
    findings = analyze(actions, cfg, bundle_id=bundle.bundle_id)
    return BundleResult(bundle_id=bundle.bundle_id, findings=findings, actions=actions)
