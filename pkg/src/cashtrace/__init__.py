"""Cash flow tree analysis and price manipulation detection for
EVM-style transaction traces, with a bundled AMM scenario simulator."""

from .actions import (
    AdvancedAction,
    BasicAction,
    DefiAction,
    classify_transfer,
    try_liquidity_cancel,
    try_liquidity_mining,
    try_trade,
)
from .amm import (
    LendingConfig,
    LpPricerState,
    PoolState,
    VaultState,
    apply_trade,
    lp_unit_price,
    max_borrow,
    swap_out,
    vault_mint,
    vault_redeem,
)
from .cft import Cft, CftNode, TransferRecordNode, build_tree, insert_transfers, prune
from .detect import (
    DetectorConfig,
    Finding,
    ReverseTradePair,
    analyze,
    detect_arbitrage,
    detect_direct,
    detect_indirect,
    find_reverse_pairs,
)
from .lifting import LiftConfig, action_sequence, dump_tree, lift, merge_leaves, merge_subtree
from .model import (
    ETHER,
    ZERO_ADDRESS,
    Address,
    AssetId,
    EventRecord,
    TraceBundle,
    TxRecord,
    erc20,
    iter_bundles,
    load_bundles,
    validate_bundle,
)
from .pipeline import BundleResult, analyze_bundle, lifted_tree
from .scenarios import emit_scenario, generate

__version__ = "0.1.0"

__all__ = [
    "Address",
    "AdvancedAction",
    "AssetId",
    "BasicAction",
    "BundleResult",
    "Cft",
    "CftNode",
    "DefiAction",
    "DetectorConfig",
    "ETHER",
    "EventRecord",
    "Finding",
    "LendingConfig",
    "LiftConfig",
    "LpPricerState",
    "PoolState",
    "ReverseTradePair",
    "TraceBundle",
    "TransferRecordNode",
    "TxRecord",
    "VaultState",
    "ZERO_ADDRESS",
    "action_sequence",
    "analyze",
    "analyze_bundle",
    "apply_trade",
    "build_tree",
    "classify_transfer",
    "detect_arbitrage",
    "detect_direct",
    "detect_indirect",
    "dump_tree",
    "emit_scenario",
    "erc20",
    "find_reverse_pairs",
    "generate",
    "insert_transfers",
    "iter_bundles",
    "lift",
    "lifted_tree",
    "load_bundles",
    "lp_unit_price",
    "max_borrow",
    "merge_leaves",
    "merge_subtree",
    "prune",
    "swap_out",
    "try_liquidity_cancel",
    "try_liquidity_mining",
    "try_trade",
    "validate_bundle",
    "vault_mint",
    "vault_redeem",
]
