//! Transaction dispatch with per-transaction atomicity and fee charging.

use thiserror::Error;

use crate::assets::AssetError;
use crate::contracts::covenant::{covenant_id_for, Covenant, Predicate, TransferContext};
use crate::contracts::escrow::{sale_id_for, DEFAULT_ATTESTATION_KIND};
use crate::contracts::lending::{health_factor, loan_id_for, origination_floor, LoanPosition, LoanState};
use crate::contracts::{ContractError, EscrowSale};
use crate::gas::{tx_fee, GasError, TxFee};
use crate::oracle::{submit_attestation, AttestPayload, OracleError};
use crate::primitives::{escrow_address, lending_pool_address, Address, Digest, Rational};
use crate::state::ChainState;
use crate::tx::{Transaction, TxKind, TxPayload};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxError {
    #[error("nonce {got} does not exceed last accepted nonce {last}")]
    BadNonce { got: u64, last: u64 },
    #[error("gas cost {cost} exceeds gas limit {limit}")]
    InsufficientGas { cost: u64, limit: u64 },
    #[error("block gas limit reached")]
    BlockFull,
    #[error("cannot pay fee {fee}: {source}")]
    FeeUnpaid { fee: u128, source: AssetError },
    #[error("gas schedule: {0}")]
    Gas(String),
    #[error("attestation tick {tick} is after current tick {now}")]
    FutureAttestation { tick: u64, now: u64 },
    #[error("reserve attestation must name the stablecoin, got '{0}'")]
    WrongReserveSubject(String),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

impl TxError {
    pub fn code(&self) -> &'static str {
        match self {
            TxError::BadNonce { .. } => "BadNonce",
            TxError::InsufficientGas { .. } => "InsufficientGas",
            TxError::BlockFull => "BlockFull",
            TxError::FeeUnpaid { .. } => "BadBalance",
            TxError::Gas(_) => "UnknownKind",
            TxError::FutureAttestation { .. } => "FutureAttestation",
            TxError::WrongReserveSubject(_) => "WrongReserveSubject",
            TxError::Contract(e) => e.code(),
        }
    }
}

impl From<AssetError> for TxError {
    fn from(e: AssetError) -> Self {
        TxError::Contract(e.into())
    }
}

impl From<OracleError> for TxError {
    fn from(e: OracleError) -> Self {
        TxError::Contract(e.into())
    }
}

impl From<GasError> for TxError {
    fn from(e: GasError) -> Self {
        TxError::Gas(e.to_string())
    }
}

/// Result of one accepted transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub tx_id: Digest,
    pub kind: TxKind,
    pub gas: u64,
    pub fee: TxFee,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub tx_id: Digest,
    pub kind: TxKind,
    pub error: TxError,
}

/// Block-level context for transaction execution.
#[derive(Debug, Clone, Copy)]
pub struct BlockContext {
    pub tick: u64,
    pub beneficiary: Address,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplyOutcome {
    pub accepted: Vec<Transaction>,
    pub receipts: Vec<Receipt>,
    pub rejections: Vec<Rejection>,
    pub gas_used: u64,
}

/// Apply `txs` in order. Each transaction either commits completely or
/// leaves the state exactly as it was.
pub fn apply_transactions(state: &mut ChainState, txs: &[Transaction], ctx: &BlockContext) -> ApplyOutcome {
    let mut out = ApplyOutcome::default();
    for tx in txs {
        match apply_one(state, tx, ctx, out.gas_used) {
            Ok(r) => {
                out.gas_used += r.gas;
                out.receipts.push(r);
                out.accepted.push(tx.clone());
            }
            Err(error) => out.rejections.push(Rejection { tx_id: tx.tx_id(), kind: tx.kind(), error }),
        }
    }
    out
}

/// Apply one transaction atomically.
pub fn apply_one(state: &mut ChainState, tx: &Transaction, ctx: &BlockContext, gas_so_far: u64) -> Result<Receipt, TxError> {
    let mut work = state.clone();
    let receipt = execute(&mut work, tx, ctx, gas_so_far)?;
    *state = work;
    Ok(receipt)
}

fn execute(st: &mut ChainState, tx: &Transaction, ctx: &BlockContext, gas_so_far: u64) -> Result<Receipt, TxError> {
    if let Some(&last) = st.nonces.get(&tx.sender) {
        if tx.nonce <= last {
            return Err(TxError::BadNonce { got: tx.nonce, last });
        }
    }
    let gas = st.params.gas.gas_cost(tx)?;
    if gas > tx.gas_limit {
        return Err(TxError::InsufficientGas { cost: gas, limit: tx.gas_limit });
    }
    if gas_so_far.saturating_add(gas) > st.fee.block_gas_limit {
        return Err(TxError::BlockFull);
    }
    let fee = tx_fee(gas, st.fee.base_fee, tx.tip).ok_or(TxError::Contract(AssetError::Overflow.into()))?;
    let tx_id = tx.tx_id();
    if let TxPayload::Settle { sale_id } = &tx.payload {
        settle(st, tx, sale_id, &fee, ctx)?;
    } else {
        charge_fee(st, &tx.sender, &fee, ctx)?;
        dispatch(st, tx, &tx_id, ctx)?;
    }
    st.nonces.insert(tx.sender, tx.nonce);
    Ok(Receipt { tx_id, kind: tx.kind(), gas, fee })
}

fn charge_fee(st: &mut ChainState, payer: &Address, fee: &TxFee, ctx: &BlockContext) -> Result<(), TxError> {
    let sym = st.params.fee_token.clone();
    let token = st.token_mut(&sym).expect("fee token exists");
    let have = token.balance(payer);
    if have < fee.total() {
        return Err(TxError::FeeUnpaid {
            fee: fee.total(),
            source: AssetError::BadBalance { have, need: fee.total() },
        });
    }
    token.burn(payer, fee.burned)?;
    token.transfer(payer, &ctx.beneficiary, fee.tip)?;
    Ok(())
}

fn token_mut<'a>(st: &'a mut ChainState, sym: &str) -> Result<&'a mut crate::assets::FungibleToken, ContractError> {
    st.token_mut(sym).ok_or_else(|| ContractError::UnknownToken(sym.to_string()))
}

fn check_covenants(st: &ChainState, deed_id: &Digest, from: Address, to: Address, tick: u64) -> Result<(), ContractError> {
    let deed = st.deeds.get(deed_id).ok_or(AssetError::UnknownDeed(*deed_id))?;
    let ctx = TransferContext { metadata: &deed.public_metadata, from, to, tick };
    for cid in &deed.covenant_ids {
        let cov = &st.covenants[cid];
        if !cov.predicate.evaluate(&ctx) {
            return Err(ContractError::CovenantViolated(*cid));
        }
    }
    Ok(())
}

fn sale_mut<'a>(st: &'a mut ChainState, id: &Digest) -> Result<&'a mut EscrowSale, ContractError> {
    st.sales.get_mut(id).ok_or(ContractError::UnknownSale(*id))
}

fn loan_mut<'a>(st: &'a mut ChainState, id: &Digest) -> Result<&'a mut LoanPosition, ContractError> {
    st.loans.get_mut(id).ok_or(ContractError::UnknownLoan(*id))
}

fn price_of(st: &ChainState, asset: &str, tick: u64) -> Result<Rational, ContractError> {
    Ok(st.feed.latest_price(asset, tick, st.params.staleness_bound)?)
}

fn dispatch(st: &mut ChainState, tx: &Transaction, tx_id: &Digest, ctx: &BlockContext) -> Result<(), TxError> {
    let sender = tx.sender;
    let tick = ctx.tick;
    match &tx.payload {
        TxPayload::TokenTransfer { token, to, amount } => {
            token_mut(st, token)?.transfer(&sender, to, *amount)?;
        }
        TxPayload::TokenApprove { token, spender, amount } => {
            token_mut(st, token)?.approve(&sender, spender, *amount);
        }
        TxPayload::StableMint { to, fiat_deposit } => {
            st.stable.mint(to, *fiat_deposit)?;
        }
        TxPayload::StableRedeem { amount, burn_only } => {
            if *burn_only {
                st.stable.burn(&sender, *amount)?;
            } else {
                st.stable.redeem(&sender, *amount)?;
            }
        }
        TxPayload::DeedMint { metadata, commitments } => {
            st.deeds.mint(tx_id, sender, metadata.clone(), commitments.clone(), tick)?;
        }
        TxPayload::DeedTransfer { deed_id, to } => {
            let owner = st.deeds.owner(deed_id).ok_or(AssetError::UnknownDeed(*deed_id))?;
            if owner != sender {
                return Err(ContractError::NotOwner.into());
            }
            if let Some(sale) = st.open_sale_for(deed_id) {
                return Err(ContractError::DeedLocked(sale.sale_id).into());
            }
            check_covenants(st, deed_id, sender, *to, tick)?;
            st.deeds.reassign(deed_id, &sender, *to, tick)?;
        }
        TxPayload::List { deed_id, token, ask_price, attestation_kind } => {
            let owner = st.deeds.owner(deed_id).ok_or(AssetError::UnknownDeed(*deed_id))?;
            if owner != sender {
                return Err(ContractError::NotOwner.into());
            }
            if st.open_sale_for(deed_id).is_some() {
                return Err(ContractError::AlreadyListed.into());
            }
            if st.token(token).is_none() {
                return Err(ContractError::UnknownToken(token.clone()).into());
            }
            if *ask_price == 0 {
                return Err(ContractError::ZeroAmount("ask price").into());
            }
            let kind = if attestation_kind.is_empty() { DEFAULT_ATTESTATION_KIND } else { attestation_kind };
            let sale_id = sale_id_for(tx_id);
            let sale = EscrowSale::new(sale_id, *deed_id, sender, token.clone(), *ask_price, kind.to_string(), tick);
            st.sales.insert(sale_id, sale);
        }
        TxPayload::Offer { sale_id, offer_price } => {
            sale_mut(st, sale_id)?.make_offer(sender, *offer_price)?;
        }
        TxPayload::FundEscrow { sale_id } => {
            let sale = sale_mut(st, sale_id)?;
            let (buyer, amount) = sale.funding_terms(&sender)?;
            let sym = sale.token.clone();
            let escrow = escrow_address();
            token_mut(st, &sym)?.transfer_from(&escrow, &buyer, &escrow, amount)?;
            sale_mut(st, sale_id)?.mark_escrowed(amount);
        }
        TxPayload::Settle { .. } => unreachable!("settle is handled before dispatch"),
        TxPayload::Cancel { sale_id } => {
            let sale = sale_mut(st, sale_id)?;
            let refund = sale.cancel(&sender)?;
            let sym = sale.token.clone();
            if let Some((buyer, amount)) = refund {
                token_mut(st, &sym)?.transfer(&escrow_address(), &buyer, amount)?;
            }
        }
        TxPayload::AttachCovenant { deed_id, predicate } => {
            let owner = st.deeds.owner(deed_id).ok_or(AssetError::UnknownDeed(*deed_id))?;
            if owner != sender {
                return Err(ContractError::NotOwner.into());
            }
            let predicate = Predicate::parse(predicate).map_err(ContractError::from)?;
            let covenant_id = covenant_id_for(tx_id);
            st.covenants.insert(covenant_id, Covenant { covenant_id, deed_id: *deed_id, predicate });
            st.deeds.get_mut(deed_id).expect("deed exists").covenant_ids.push(covenant_id);
        }
        TxPayload::OpenLoan { collateral_token, collateral_amount, borrow_amount, rate_per_block, liquidation_threshold } => {
            let debt_token = st.params.stable_symbol.clone();
            if *collateral_token == debt_token {
                return Err(ContractError::SameToken.into());
            }
            if st.token(collateral_token).is_none() {
                return Err(ContractError::UnknownToken(collateral_token.clone()).into());
            }
            if liquidation_threshold.is_zero() || *liquidation_threshold > Rational::one() {
                return Err(ContractError::BadThreshold.into());
            }
            if *borrow_amount == 0 {
                return Err(ContractError::ZeroAmount("borrow").into());
            }
            let price = price_of(st, collateral_token, tick)?;
            let hf = health_factor(*collateral_amount, &price, liquidation_threshold, *borrow_amount)
                .expect("nonzero borrow");
            if hf < origination_floor() {
                return Err(ContractError::UndercollateralizedAtOpen(hf.to_decimal_string(6)).into());
            }
            let pool = lending_pool_address();
            token_mut(st, collateral_token)?.transfer(&sender, &pool, *collateral_amount)?;
            token_mut(st, &debt_token)?.transfer(&pool, &sender, *borrow_amount)?;
            let loan_id = loan_id_for(tx_id);
            st.loans.insert(
                loan_id,
                LoanPosition {
                    loan_id,
                    borrower: sender,
                    collateral_token: collateral_token.clone(),
                    collateral_amount: *collateral_amount,
                    debt_token,
                    principal: *borrow_amount,
                    rate_per_block: rate_per_block.clone(),
                    liquidation_threshold: liquidation_threshold.clone(),
                    opened_at: tick,
                    accrued_at: tick,
                    state: LoanState::Active,
                },
            );
        }
        TxPayload::Repay { loan_id, amount } => {
            let loan = loan_mut(st, loan_id)?;
            if loan.borrower != sender {
                return Err(ContractError::NotParty.into());
            }
            let closed = loan.repay(*amount, tick)?;
            let (debt_sym, coll_sym, coll) =
                (loan.debt_token.clone(), loan.collateral_token.clone(), loan.collateral_amount);
            let pool = lending_pool_address();
            token_mut(st, &debt_sym)?.transfer(&sender, &pool, *amount)?;
            if closed {
                token_mut(st, &coll_sym)?.transfer(&pool, &sender, coll)?;
            }
        }
        TxPayload::Liquidate { loan_id } => {
            let coll_sym = loan_mut(st, loan_id)?.collateral_token.clone();
            let price = price_of(st, &coll_sym, tick)?;
            let loan = loan_mut(st, loan_id)?;
            let debt = loan.liquidate(&price, tick)?;
            let (debt_sym, coll) = (loan.debt_token.clone(), loan.collateral_amount);
            let pool = lending_pool_address();
            token_mut(st, &debt_sym)?.transfer(&sender, &pool, debt)?;
            token_mut(st, &coll_sym)?.transfer(&pool, &sender, coll)?;
        }
        TxPayload::Attest { attestation } => {
            if attestation.tick > tick {
                return Err(TxError::FutureAttestation { tick: attestation.tick, now: tick });
            }
            let att = attestation.clone();
            if let AttestPayload::ReserveHaircut(fraction) = &att.payload {
                if att.subject != st.params.stable_symbol {
                    return Err(TxError::WrongReserveSubject(att.subject.clone()));
                }
                let fraction = fraction.clone();
                st.feed.check_next(&att.subject, att.tick)?;
                submit_attestation(&st.params.oracles, &mut st.attestations, &mut st.feed, att.clone())?;
                let price = st.stable.depeg(&fraction)?;
                st.feed.push(&att.subject, att.tick, price)?;
            } else {
                submit_attestation(&st.params.oracles, &mut st.attestations, &mut st.feed, att)?;
            }
        }
        TxPayload::GrantAccess { deed_id, grantee } => {
            st.acl.grant_access(&st.deeds, deed_id, *grantee, &sender)?;
        }
    }
    Ok(())
}

/// Settlement: deed to buyer, proceeds less fee to seller, all or nothing.
/// The fee comes out of the escrowed proceeds in the sale token.
fn settle(st: &mut ChainState, tx: &Transaction, sale_id: &Digest, fee: &TxFee, ctx: &BlockContext) -> Result<(), TxError> {
    let sale = sale_mut(st, sale_id)?;
    let (buyer, proceeds) = sale.settlement_terms(&tx.sender)?;
    let (deed_id, seller, sym, kind, listed_at) =
        (sale.deed_id, sale.seller, sale.token.clone(), sale.required_attestation_kind.clone(), sale.listed_at);
    if st.attestations.find(&deed_id.to_hex(), &kind, listed_at).is_none() {
        return Err(ContractError::MissingAttestation(kind).into());
    }
    check_covenants(st, &deed_id, seller, buyer, ctx.tick)?;
    if fee.total() > proceeds {
        return Err(ContractError::FeeExceedsProceeds { fee: fee.total(), proceeds }.into());
    }
    let escrow = escrow_address();
    let token = token_mut(st, &sym)?;
    token.burn(&escrow, fee.burned)?;
    token.transfer(&escrow, &ctx.beneficiary, fee.tip)?;
    token.transfer(&escrow, &seller, proceeds - fee.total())?;
    st.deeds.reassign(&deed_id, &seller, buyer, ctx.tick)?;
    sale_mut(st, sale_id)?.mark_settled();
    Ok(())
}
