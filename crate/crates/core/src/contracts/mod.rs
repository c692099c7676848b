//! Sale escrow, covenants and collateralized lending.

pub mod covenant;
pub mod escrow;
pub mod lending;

use thiserror::Error;

use crate::assets::AssetError;
use crate::oracle::OracleError;
use crate::primitives::Digest;

pub use covenant::{Covenant, MalformedPredicate, Predicate, TransferContext};
pub use escrow::{EscrowSale, SaleState};
pub use lending::{LoanPosition, LoanState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error("caller is not the deed owner")]
    NotOwner,
    #[error("deed already has an open sale")]
    AlreadyListed,
    #[error("deed is locked by open sale {0}")]
    DeedLocked(Digest),
    #[error("operation not allowed in state {0}")]
    BadState(&'static str),
    #[error("seller cannot buy their own listing")]
    SelfDeal,
    #[error("no valid '{0}' attestation since listing")]
    MissingAttestation(String),
    #[error("covenant {0} rejects this transfer")]
    CovenantViolated(Digest),
    #[error("caller is not a party to this sale")]
    NotParty,
    #[error(transparent)]
    MalformedPredicate(#[from] MalformedPredicate),
    #[error("health factor {0} below origination floor")]
    UndercollateralizedAtOpen(String),
    #[error("health factor {0} is not below 1")]
    NotLiquidatable(String),
    #[error("repayment {amount} exceeds debt {debt}")]
    Overpay { amount: u128, debt: u128 },
    #[error("zero-amount {0}")]
    ZeroAmount(&'static str),
    #[error("fee {fee} exceeds sale proceeds {proceeds}")]
    FeeExceedsProceeds { fee: u128, proceeds: u128 },
    #[error("unknown sale {0}")]
    UnknownSale(Digest),
    #[error("unknown loan {0}")]
    UnknownLoan(Digest),
    #[error("unknown token '{0}'")]
    UnknownToken(String),
    #[error("collateral and debt must be different tokens")]
    SameToken,
    #[error("liquidation threshold must lie in (0, 1]")]
    BadThreshold,
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ContractError {
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::NotOwner => "NotOwner",
            ContractError::AlreadyListed => "AlreadyListed",
            ContractError::DeedLocked(_) => "DeedLocked",
            ContractError::BadState(_) => "BadState",
            ContractError::SelfDeal => "SelfDeal",
            ContractError::MissingAttestation(_) => "MissingAttestation",
            ContractError::CovenantViolated(_) => "CovenantViolated",
            ContractError::NotParty => "NotParty",
            ContractError::MalformedPredicate(_) => "MalformedPredicate",
            ContractError::UndercollateralizedAtOpen(_) => "UndercollateralizedAtOpen",
            ContractError::NotLiquidatable(_) => "NotLiquidatable",
            ContractError::Overpay { .. } => "Overpay",
            ContractError::ZeroAmount(_) => "BadBalance",
            ContractError::FeeExceedsProceeds { .. } => "InsufficientGas",
            ContractError::UnknownSale(_) => "UnknownSale",
            ContractError::UnknownLoan(_) => "UnknownLoan",
            ContractError::UnknownToken(_) => "UnknownToken",
            ContractError::SameToken => "SameToken",
            ContractError::BadThreshold => "BadThreshold",
            ContractError::Asset(e) => e.code(),
            ContractError::Oracle(e) => e.code(),
        }
    }
}
