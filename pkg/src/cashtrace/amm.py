"""Pricing math for the simulator: pool swaps, vault shares, collateral.

All token amounts are integers in base units. Intermediate arithmetic is
exact (Python ints and Fractions); each formula floors once at the end,
matching on-chain integer semantics. The swap fee is 0.3% by default,
expressed as the 997/1000 factor, and is configurable for sensitivity
tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Literal, Mapping

from .model import Address, Amount, AssetId

FEE_NUM = 997
FEE_DEN = 1000


class AmmError(Exception):
    pass


class InsufficientLiquidity(AmmError):
    pass


class EmptyVault(AmmError):
    pass


class BurnExceedsSupply(AmmError):
    pass


class InvalidParams(AmmError):
    pass


@dataclass(frozen=True, slots=True)
class PoolState:
    """A constant-product pool holding reserves of two assets."""

    reserve_x: Amount
    reserve_y: Amount
    asset_x: AssetId
    asset_y: AssetId
    address: Address

    def __post_init__(self) -> None:
        if self.reserve_x <= 0 or self.reserve_y <= 0:
            raise InvalidParams("pool reserves must be positive")
        if self.asset_x == self.asset_y:
            raise InvalidParams("pool assets must differ")

    def spot_price_x_in_y(self) -> Fraction:
        return Fraction(self.reserve_y, self.reserve_x)


def swap_out(
    x: Amount,
    reserve_in: Amount,
    reserve_out: Amount,
    fee_num: int = FEE_NUM,
    fee_den: int = FEE_DEN,
) -> Amount:
    """Output for selling x into a pool: fee_num*x*R_out / (fee_num*x + fee_den*R_in),
    floored. Zero when the output reserve is empty."""
    if x <= 0:
        raise InvalidParams("swap amount must be positive")
    if reserve_out == 0:
        return 0
    return (fee_num * x * reserve_out) // (fee_num * x + fee_den * reserve_in)


Side = Literal["x_for_y", "y_for_x"]


def apply_trade(
    pool: PoolState,
    side: Side,
    amount_in: Amount,
    fee_num: int = FEE_NUM,
    fee_den: int = FEE_DEN,
) -> tuple[PoolState, Amount]:
    """Execute one swap against the pool, returning the updated pool and
    the amount paid out. The paying reserve must stay positive."""
    if side == "x_for_y":
        reserve_in, reserve_out = pool.reserve_x, pool.reserve_y
    else:
        reserve_in, reserve_out = pool.reserve_y, pool.reserve_x
    amount_out = swap_out(amount_in, reserve_in, reserve_out, fee_num, fee_den)
    if amount_out >= reserve_out:
        raise InsufficientLiquidity(
            f"trade would drain the pool: out {amount_out} of {reserve_out}"
        )
    if side == "x_for_y":
        new_pool = replace(
            pool, reserve_x=pool.reserve_x + amount_in, reserve_y=pool.reserve_y - amount_out
        )
    else:
        new_pool = replace(
            pool, reserve_y=pool.reserve_y + amount_in, reserve_x=pool.reserve_x - amount_out
        )
    return new_pool, amount_out


@dataclass(frozen=True, slots=True)
class VaultState:
    """A portfolio vault: underlying reserves plus externally held
    certificates priced through a manipulable conversion rate."""

    reserve_underlying: Amount
    reserve_lp_external: Amount
    total_supply_shares: Amount
    external_rate: Fraction

    def locked_value(self) -> Fraction:
        return self.reserve_underlying + self.external_rate * self.reserve_lp_external


def vault_mint(vault: VaultState, deposit: Amount) -> Amount:
    """Shares minted for a deposit: deposit / locked value * total supply."""
    if deposit <= 0:
        raise InvalidParams("deposit must be positive")
    tvl = vault.locked_value()
    if tvl == 0:
        raise EmptyVault("vault holds nothing to price a deposit against")
    return int(Fraction(deposit) * vault.total_supply_shares / tvl)


def vault_redeem(vault: VaultState, burn: Amount) -> Amount:
    """Underlying returned for burning shares: burn / supply * locked value."""
    if burn <= 0:
        raise InvalidParams("burn must be positive")
    if burn > vault.total_supply_shares:
        raise BurnExceedsSupply(
            f"burn {burn} exceeds share supply {vault.total_supply_shares}"
        )
    return int(Fraction(burn) * vault.locked_value() / vault.total_supply_shares)


ETHER_DOUBLED = "ether_doubled"
FULL_RESERVES = "full_reserves"


@dataclass(frozen=True, slots=True)
class LpPricerState:
    """How a lender prices pool certificates off live pool reserves.

    ether_doubled values the pool at twice its Ether reserve;
    full_reserves sums the value of both reserves. Reserve and price
    keys: "eth" for the first mode, "token0"/"token1" for the second.
    """

    mode: str
    total_supply_lp: Amount
    reserves: Mapping[str, Amount]
    unit_prices: Mapping[str, Fraction]

    def __post_init__(self) -> None:
        if self.total_supply_lp <= 0:
            raise InvalidParams("LP supply must be positive")
        if self.mode not in (ETHER_DOUBLED, FULL_RESERVES):
            raise InvalidParams(f"unknown pricer mode {self.mode!r}")


def lp_unit_price(state: LpPricerState) -> Fraction:
    if state.mode == ETHER_DOUBLED:
        tvl = Fraction(state.reserves["eth"]) * 2 * state.unit_prices["eth"]
    else:
        tvl = (
            state.unit_prices["token0"] * state.reserves["token0"]
            + state.unit_prices["token1"] * state.reserves["token1"]
        )
    return tvl / state.total_supply_lp


@dataclass(frozen=True, slots=True)
class LendingConfig:
    """Required collateral value per unit borrowed; 150% by default."""

    collateral_ratio: Fraction = Fraction(3, 2)

    def __post_init__(self) -> None:
        if self.collateral_ratio <= 1:
            raise InvalidParams("collateral ratio must exceed 1")


def max_borrow(collateral_value: Fraction | int, cfg: LendingConfig = LendingConfig()) -> Fraction:
    if collateral_value < 0:
        raise InvalidParams("collateral value must be non-negative")
    return Fraction(collateral_value) / cfg.collateral_ratio
