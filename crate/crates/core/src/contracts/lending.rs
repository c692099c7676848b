//! Collateralized loans priced from the oracle feed.
//!
//! A position keeps the principal outstanding since its last balance change.
//! The current debt is `principal · (1 + rate)^elapsed`, rounded half up only
//! when read, so interest composes across any split of the elapsed ticks.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::contracts::ContractError;
use crate::primitives::{sha256_concat, Address, Digest, Rational};

/// Fractional bits of the fixed-point growth factor.
pub const FRAC_BITS: u64 = 192;

pub fn origination_floor() -> Rational {
    Rational::new(5, 4).expect("nonzero denominator")
}

pub fn default_rate_per_block() -> Rational {
    Rational::new(1, 1_000_000).expect("nonzero denominator")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoanState {
    Active,
    Repaid,
    Liquidated,
}

impl LoanState {
    pub fn name(self) -> &'static str {
        match self {
            LoanState::Active => "Active",
            LoanState::Repaid => "Repaid",
            LoanState::Liquidated => "Liquidated",
        }
    }
}

pub fn loan_id_for(open_tx_id: &Digest) -> Digest {
    sha256_concat(&[b"deedchain/loan", open_tx_id.as_bytes()])
}

/// `(1 + rate)^ticks` as a fixed-point integer with `FRAC_BITS` fractional bits.
pub fn growth_factor_fixed(rate: &Rational, ticks: u64) -> BigUint {
    let r = rate.as_big();
    let num = r.numer().magnitude() + r.denom().magnitude();
    let den = r.denom().magnitude();
    let mut base = (num << FRAC_BITS) / den;
    let mut acc = BigUint::one() << FRAC_BITS;
    let mut n = ticks;
    while n > 0 {
        if n & 1 == 1 {
            acc = (&acc * &base) >> FRAC_BITS;
        }
        n >>= 1;
        if n > 0 {
            base = (&base * &base) >> FRAC_BITS;
        }
    }
    acc
}

/// Debt in fixed point after `ticks` of compounding, without rounding.
pub fn accrue_fixed(debt_fixed: &BigUint, rate: &Rational, ticks: u64) -> BigUint {
    (debt_fixed * growth_factor_fixed(rate, ticks)) >> FRAC_BITS
}

pub fn to_fixed(amount: u128) -> BigUint {
    BigUint::from(amount) << FRAC_BITS
}

/// Round a fixed-point amount half up to an integer, saturating.
pub fn round_fixed(x: &BigUint) -> u128 {
    let half = BigUint::one() << (FRAC_BITS - 1);
    let (q, _) = (x + half).div_rem(&(BigUint::one() << FRAC_BITS));
    q.to_u128().unwrap_or(u128::MAX)
}

/// `debt · (1 + rate)^elapsed`, rounded half up.
pub fn accrue(debt: u128, rate: &Rational, elapsed: u64) -> u128 {
    if elapsed == 0 {
        return debt;
    }
    round_fixed(&accrue_fixed(&to_fixed(debt), rate, elapsed))
}

/// `collateral · price · threshold / debt`. `None` when there is no debt.
pub fn health_factor(collateral_amount: u128, price: &Rational, threshold: &Rational, debt: u128) -> Option<Rational> {
    price.mul_int(collateral_amount).mul(threshold).div_int(debt)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoanPosition {
    pub loan_id: Digest,
    pub borrower: Address,
    pub collateral_token: String,
    pub collateral_amount: u128,
    pub debt_token: String,
    /// Debt as of `accrued_at`.
    pub principal: u128,
    pub rate_per_block: Rational,
    pub liquidation_threshold: Rational,
    pub opened_at: u64,
    pub accrued_at: u64,
    pub state: LoanState,
}

impl LoanPosition {
    fn expect_active(&self) -> Result<(), ContractError> {
        match self.state {
            LoanState::Active => Ok(()),
            s => Err(ContractError::BadState(s.name())),
        }
    }

    pub fn debt_at(&self, tick: u64) -> u128 {
        accrue(self.principal, &self.rate_per_block, tick.saturating_sub(self.accrued_at))
    }

    pub fn health_factor(&self, price: &Rational, tick: u64) -> Result<Rational, ContractError> {
        self.expect_active()?;
        health_factor(self.collateral_amount, price, &self.liquidation_threshold, self.debt_at(tick))
            .ok_or(ContractError::BadState("Active"))
    }

    /// Apply a repayment. Returns true when the loan closes.
    pub fn repay(&mut self, amount: u128, tick: u64) -> Result<bool, ContractError> {
        self.expect_active()?;
        if amount == 0 {
            return Err(ContractError::ZeroAmount("repayment"));
        }
        let debt = self.debt_at(tick);
        if amount > debt {
            return Err(ContractError::Overpay { amount, debt });
        }
        self.principal = debt - amount;
        self.accrued_at = tick;
        if self.principal == 0 {
            self.state = LoanState::Repaid;
        }
        Ok(self.principal == 0)
    }

    /// Mark liquidated if `hf < 1`. Returns the debt the liquidator must cover.
    pub fn liquidate(&mut self, price: &Rational, tick: u64) -> Result<u128, ContractError> {
        let hf = self.health_factor(price, tick)?;
        if hf >= Rational::one() {
            return Err(ContractError::NotLiquidatable(hf.to_decimal_string(6)));
        }
        let debt = self.debt_at(tick);
        self.principal = 0;
        self.accrued_at = tick;
        self.state = LoanState::Liquidated;
        Ok(debt)
    }
}

impl Encode for LoanPosition {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(&self.loan_id)
            .address(&self.borrower)
            .str(&self.collateral_token)
            .u128(self.collateral_amount)
            .str(&self.debt_token)
            .u128(self.principal)
            .rational(&self.rate_per_block)
            .rational(&self.liquidation_threshold)
            .u64(self.opened_at)
            .u64(self.accrued_at)
            .u8(self.state as u8);
    }
}

impl Decode for LoanPosition {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(LoanPosition {
            loan_id: dec.digest()?,
            borrower: dec.address()?,
            collateral_token: dec.string()?,
            collateral_amount: dec.u128()?,
            debt_token: dec.string()?,
            principal: dec.u128()?,
            rate_per_block: dec.rational()?,
            liquidation_threshold: dec.rational()?,
            opened_at: dec.u64()?,
            accrued_at: dec.u64()?,
            state: match dec.u8()? {
                0 => LoanState::Active,
                1 => LoanState::Repaid,
                2 => LoanState::Liquidated,
                tag => return Err(CodecError::BadTag { what: "loan state", tag }),
            },
        })
    }
}
