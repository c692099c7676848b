//! Gas metering, the congestion-responsive base fee, and the cost comparison
//! between commissions, a PRO/PGas style platform fee and protocol gas.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::primitives::Rational;
use crate::tx::{Transaction, TxKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasError {
    #[error("no gas schedule entry for {0}")]
    UnknownKind(TxKind),
    #[error("commission rate {0} outside [0, 0.10]")]
    BadRate(f64),
    #[error("gas used {used} exceeds block limit {limit}")]
    OverLimit { used: u64, limit: u64 },
    #[error("negative or non-finite input '{0}'")]
    BadInput(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GasSchedule {
    pub base: BTreeMap<TxKind, u64>,
    pub per_byte: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        let base = TxKind::ALL
            .iter()
            .map(|k| {
                let g = match k {
                    TxKind::TokenTransfer => 21_000,
                    TxKind::DeedTransfer => 40_000,
                    TxKind::Settle => 90_000,
                    TxKind::OpenLoan => 80_000,
                    TxKind::Liquidate => 70_000,
                    _ => 30_000,
                };
                (*k, g)
            })
            .collect();
        GasSchedule { base, per_byte: 16 }
    }
}

impl GasSchedule {
    pub fn base_gas(&self, kind: TxKind) -> Result<u64, GasError> {
        self.base.get(&kind).copied().ok_or(GasError::UnknownKind(kind))
    }

    /// base(kind) + per_byte × payload body length.
    pub fn gas_cost(&self, tx: &Transaction) -> Result<u64, GasError> {
        self.cost_for(tx.kind(), tx.payload.body_bytes().len())
    }

    pub fn cost_for(&self, kind: TxKind, payload_len: usize) -> Result<u64, GasError> {
        Ok(self.base_gas(kind)? + self.per_byte * payload_len as u64)
    }
}

impl Encode for GasSchedule {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.len(self.base.len());
        for (k, g) in &self.base {
            enc.u8(k.tag()).u64(*g);
        }
        enc.u64(self.per_byte);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeeState {
    pub base_fee: u128,
    /// Target utilization as a fraction `num/den`.
    pub target_num: u64,
    pub target_den: u64,
    pub adjustment_quotient: u64,
    pub block_gas_limit: u64,
}

impl Default for FeeState {
    fn default() -> Self {
        FeeState { base_fee: 1_000, target_num: 1, target_den: 2, adjustment_quotient: 8, block_gas_limit: 1_000_000 }
    }
}

impl FeeState {
    /// `max(1, round(base · (1 + (u − t)/(t · q))))` with `u = used/limit`,
    /// computed exactly and rounded half up.
    pub fn next_base_fee(&self, gas_used: u64) -> Result<u128, GasError> {
        if gas_used > self.block_gas_limit {
            return Err(GasError::OverLimit { used: gas_used, limit: self.block_gas_limit });
        }
        let base = BigInt::from(self.base_fee);
        let (g, l) = (BigInt::from(gas_used), BigInt::from(self.block_gas_limit));
        let (tn, td, q) = (BigInt::from(self.target_num), BigInt::from(self.target_den), BigInt::from(self.adjustment_quotient));
        // 1 + (g/l − tn/td)/((tn/td)·q) = (l·tn·q + g·td − l·tn) / (l·tn·q)
        let den = &l * &tn * &q;
        let num = &den + &g * &td - &l * &tn;
        let scaled = base * num;
        // num ≥ 0 whenever q ≥ 1
        let two = BigInt::from(2);
        let rounded: BigInt = (scaled * &two + &den).div_floor(&(den * &two));
        let v = rounded.to_u128().unwrap_or(0);
        Ok(v.max(1))
    }

    pub fn validate(&self) -> Result<(), GasError> {
        let ok = self.base_fee >= 1
            && self.target_num > 0
            && self.target_num < self.target_den
            && self.adjustment_quotient >= 1
            && self.block_gas_limit > 0;
        if ok {
            Ok(())
        } else {
            Err(GasError::BadInput("fee state"))
        }
    }

    pub fn update(&mut self, gas_used: u64) -> Result<(), GasError> {
        self.base_fee = self.next_base_fee(gas_used)?;
        Ok(())
    }
}

impl Encode for FeeState {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u128(self.base_fee)
            .u64(self.target_num)
            .u64(self.target_den)
            .u64(self.adjustment_quotient)
            .u64(self.block_gas_limit);
    }
}

impl Decode for FeeState {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let f = FeeState {
            base_fee: dec.u128()?,
            target_num: dec.u64()?,
            target_den: dec.u64()?,
            adjustment_quotient: dec.u64()?,
            block_gas_limit: dec.u64()?,
        };
        f.validate().map_err(|e| CodecError::Invalid(e.to_string()))?;
        Ok(f)
    }
}

/// Split of one transaction's fee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxFee {
    pub burned: u128,
    pub tip: u128,
}

impl TxFee {
    pub fn total(&self) -> u128 {
        self.burned + self.tip
    }
}

/// `gas × base_fee + tip`; the base-fee part is burned, the tip goes to the
/// block proposer.
pub fn tx_fee(gas_units: u64, base_fee: u128, tip: u128) -> Option<TxFee> {
    let burned = (gas_units as u128).checked_mul(base_fee)?;
    burned.checked_add(tip)?;
    Some(TxFee { burned, tip })
}

fn non_negative(x: f64, what: &'static str) -> Result<f64, GasError> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(GasError::BadInput(what))
    }
}

/// Traditional brokerage commission, `price × rate`, rate capped at 10%.
pub fn commission_cost(price: f64, rate: f64) -> Result<f64, GasError> {
    non_negative(price, "price")?;
    if !(0.0..=0.10).contains(&rate) {
        return Err(GasError::BadRate(rate));
    }
    Ok(price * rate)
}

/// Platform fee with a PGas component and a PRO-token component. Every
/// parameter comes from configuration; the defaults are illustrative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropyParams {
    pub pro_token_price: f64,
    pub pro_units: f64,
    pub pgas_units: f64,
    pub pgas_unit_cost: f64,
}

impl Default for PropyParams {
    fn default() -> Self {
        PropyParams { pro_token_price: 2.99, pro_units: 100.0, pgas_units: 0.0, pgas_unit_cost: 1.0 }
    }
}

pub fn propy_fee(p: &PropyParams) -> Result<f64, GasError> {
    let pgas = non_negative(p.pgas_units, "pgas units")? * non_negative(p.pgas_unit_cost, "pgas unit cost")?;
    let pro = non_negative(p.pro_units, "pro units")? * non_negative(p.pro_token_price, "pro price")?;
    Ok(pgas + pro)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub price: f64,
    pub commission_cost: f64,
    pub propy_cost: f64,
    pub protocol_cost: f64,
}

pub fn compare_costs(
    price: f64,
    commission_rate: f64,
    propy: &PropyParams,
    protocol_gas: u64,
    base_fee: f64,
    token_fiat_price: f64,
) -> Result<CostReport, GasError> {
    let protocol_cost =
        protocol_gas as f64 * non_negative(base_fee, "base fee")? * non_negative(token_fiat_price, "token price")?;
    Ok(CostReport {
        price,
        commission_cost: commission_cost(price, commission_rate)?,
        propy_cost: propy_fee(propy)?,
        protocol_cost,
    })
}

impl CostReport {
    /// Channels from cheapest to most expensive.
    pub fn ranked(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("protocol", self.protocol_cost),
            ("propy", self.propy_cost),
            ("commission", self.commission_cost),
        ];
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>16} {:>10}", "channel", "cost", "of price");
        for (name, cost) in [
            ("commission", self.commission_cost),
            ("propy", self.propy_cost),
            ("protocol", self.protocol_cost),
        ] {
            let pct = if self.price > 0.0 { cost / self.price * 100.0 } else { 0.0 };
            let _ = writeln!(s, "{name:<12} {cost:>16.2} {pct:>9.4}%");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!(
            "channel,cost\ncommission,{:.6}\npropy,{:.6}\nprotocol,{:.6}\n",
            self.commission_cost, self.propy_cost, self.protocol_cost
        )
    }
}

/// Exact base-fee multiplier for a utilization, for reporting.
pub fn fee_multiplier(state: &FeeState, gas_used: u64) -> Option<Rational> {
    let next = state.next_base_fee(gas_used).ok()?;
    Rational::new(next, state.base_fee).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::Address;
    use crate::tx::TxPayload;

    #[test]
    fn zero_payload_costs_base_gas() {
        let s = GasSchedule::default();
        assert_eq!(s.cost_for(TxKind::TokenTransfer, 0).unwrap(), 21_000);
        assert_eq!(s.cost_for(TxKind::TokenTransfer, 100).unwrap(), 22_600);
        assert!(s.cost_for(TxKind::Settle, 40).unwrap() > s.cost_for(TxKind::TokenTransfer, 40).unwrap());
    }

    #[test]
    fn gas_cost_counts_payload_bytes() {
        let tx = Transaction {
            sender: Address::ZERO,
            payload: TxPayload::TokenTransfer { token: "DCT".into(), to: Address::ZERO, amount: 1 },
            gas_limit: 0,
            tip: 0,
            nonce: 0,
        };
        assert_eq!(GasSchedule::default().gas_cost(&tx).unwrap(), 21_000 + 16 * 55);
    }

    #[test]
    fn unknown_kind() {
        let mut s = GasSchedule::default();
        s.base.remove(&TxKind::Attest);
        assert_eq!(s.cost_for(TxKind::Attest, 0), Err(GasError::UnknownKind(TxKind::Attest)));
    }

    #[test]
    fn base_fee_rule() {
        let st = FeeState { base_fee: 1_000_000_000, ..FeeState::default() };
        let l = st.block_gas_limit;
        assert_eq!(st.next_base_fee(l / 2).unwrap(), 1_000_000_000);
        assert_eq!(st.next_base_fee(0).unwrap(), 875_000_000);
        assert_eq!(st.next_base_fee(l).unwrap(), 1_125_000_000);
        assert!(st.next_base_fee(l + 1).is_err());
        let tiny = FeeState { base_fee: 1, ..FeeState::default() };
        assert_eq!(tiny.next_base_fee(0).unwrap(), 1);
    }

    #[test]
    fn base_fee_rounds_half_up() {
        // 4 · 0.875 = 3.5 → 4
        let st = FeeState { base_fee: 4, ..FeeState::default() };
        assert_eq!(st.next_base_fee(0).unwrap(), 4);
        // 12 · 0.875 = 10.5 → 11
        let st = FeeState { base_fee: 12, ..FeeState::default() };
        assert_eq!(st.next_base_fee(0).unwrap(), 11);
    }

    #[test]
    fn fee_arithmetic() {
        assert_eq!(tx_fee(21_000, 2, 500).unwrap().total(), 42_500);
        let f = tx_fee(21_000, 2, 0).unwrap();
        assert_eq!((f.burned, f.tip), (42_000, 0));
    }

    #[test]
    fn commission() {
        assert_eq!(commission_cost(400_000.0, 0.0).unwrap(), 0.0);
        assert!((commission_cost(400_000.0, 0.055).unwrap() - 22_000.0).abs() < 1e-9);
        assert!(matches!(commission_cost(1.0, 0.11), Err(GasError::BadRate(_))));
    }

    #[test]
    fn propy_components() {
        let p = PropyParams { pro_token_price: 2.99, pro_units: 100.0, pgas_units: 0.0, pgas_unit_cost: 5.0 };
        assert!((propy_fee(&p).unwrap() - 299.0).abs() < 1e-9);
        let zero = PropyParams { pro_token_price: 0.0, pro_units: 0.0, pgas_units: 0.0, pgas_unit_cost: 0.0 };
        assert_eq!(propy_fee(&zero).unwrap(), 0.0);
        let double = PropyParams { pro_units: 200.0, ..p };
        assert!((propy_fee(&double).unwrap() - 2.0 * propy_fee(&p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn cost_report_composition() {
        let p = PropyParams::default();
        let r = compare_costs(400_000.0, 0.055, &p, 200_000, 10.0, 1e-6).unwrap();
        assert_eq!(r.commission_cost, commission_cost(400_000.0, 0.055).unwrap());
        assert_eq!(r.propy_cost, propy_fee(&p).unwrap());
        assert!((r.protocol_cost - 2.0).abs() < 1e-9);
        assert_eq!(r.ranked().iter().map(|c| c.0).collect::<Vec<_>>(), ["protocol", "propy", "commission"]);
        let zero = compare_costs(400_000.0, 0.055, &p, 0, 10.0, 1.0).unwrap();
        assert_eq!(zero.protocol_cost, 0.0);
    }
}
