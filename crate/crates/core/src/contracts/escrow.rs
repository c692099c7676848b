//! Per-property sale state machine:
//! `Listed → Offered → Escrowed → Settled`, with `Cancelled` reachable from
//! any non-terminal state. Token and deed movements are performed by the
//! ledger handlers; this type only guards the transitions.

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::contracts::ContractError;
use crate::primitives::{sha256_concat, Address, Digest};

pub const DEFAULT_ATTESTATION_KIND: &str = "legal-docs";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaleState {
    Listed,
    Offered,
    Escrowed,
    Settled,
    Cancelled,
}

impl SaleState {
    pub fn name(self) -> &'static str {
        match self {
            SaleState::Listed => "Listed",
            SaleState::Offered => "Offered",
            SaleState::Escrowed => "Escrowed",
            SaleState::Settled => "Settled",
            SaleState::Cancelled => "Cancelled",
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, SaleState::Listed | SaleState::Offered | SaleState::Escrowed)
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(t: u8) -> Option<SaleState> {
        [SaleState::Listed, SaleState::Offered, SaleState::Escrowed, SaleState::Settled, SaleState::Cancelled]
            .get(t as usize)
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscrowSale {
    pub sale_id: Digest,
    pub deed_id: Digest,
    pub seller: Address,
    pub token: String,
    pub ask_price: u128,
    pub state: SaleState,
    pub buyer: Option<Address>,
    pub offer_price: Option<u128>,
    pub escrowed_funds: u128,
    pub required_attestation_kind: String,
    pub listed_at: u64,
}

pub fn sale_id_for(list_tx_id: &Digest) -> Digest {
    sha256_concat(&[b"deedchain/sale", list_tx_id.as_bytes()])
}

impl EscrowSale {
    pub fn new(
        sale_id: Digest,
        deed_id: Digest,
        seller: Address,
        token: String,
        ask_price: u128,
        required_attestation_kind: String,
        listed_at: u64,
    ) -> Self {
        EscrowSale {
            sale_id,
            deed_id,
            seller,
            token,
            ask_price,
            state: SaleState::Listed,
            buyer: None,
            offer_price: None,
            escrowed_funds: 0,
            required_attestation_kind,
            listed_at,
        }
    }

    fn expect_state(&self, s: SaleState) -> Result<(), ContractError> {
        if self.state == s {
            Ok(())
        } else {
            Err(ContractError::BadState(self.state.name()))
        }
    }

    pub fn make_offer(&mut self, buyer: Address, offer_price: u128) -> Result<(), ContractError> {
        self.expect_state(SaleState::Listed)?;
        if buyer == self.seller {
            return Err(ContractError::SelfDeal);
        }
        if offer_price == 0 {
            return Err(ContractError::ZeroAmount("offer"));
        }
        self.state = SaleState::Offered;
        self.buyer = Some(buyer);
        self.offer_price = Some(offer_price);
        Ok(())
    }

    /// Buyer and amount a funding transaction must move.
    pub fn funding_terms(&self, caller: &Address) -> Result<(Address, u128), ContractError> {
        self.expect_state(SaleState::Offered)?;
        let buyer = self.buyer.expect("offered sale has a buyer");
        if *caller != buyer {
            return Err(ContractError::NotParty);
        }
        Ok((buyer, self.offer_price.expect("offered sale has a price")))
    }

    pub fn mark_escrowed(&mut self, amount: u128) {
        debug_assert_eq!(self.state, SaleState::Offered);
        self.state = SaleState::Escrowed;
        self.escrowed_funds = amount;
    }

    /// Buyer and escrowed amount for settlement by either party.
    pub fn settlement_terms(&self, caller: &Address) -> Result<(Address, u128), ContractError> {
        self.expect_state(SaleState::Escrowed)?;
        let buyer = self.buyer.expect("escrowed sale has a buyer");
        if *caller != buyer && *caller != self.seller {
            return Err(ContractError::NotParty);
        }
        Ok((buyer, self.escrowed_funds))
    }

    pub fn mark_settled(&mut self) {
        self.state = SaleState::Settled;
        self.escrowed_funds = 0;
    }

    /// The seller may cancel any open sale; the buyer only once funds are
    /// escrowed. Returns the refund owed to the buyer, if any.
    pub fn cancel(&mut self, caller: &Address) -> Result<Option<(Address, u128)>, ContractError> {
        if !self.state.is_open() {
            return Err(ContractError::BadState(self.state.name()));
        }
        let is_buyer = self.buyer == Some(*caller);
        let allowed = *caller == self.seller || (is_buyer && self.state == SaleState::Escrowed);
        if !allowed {
            return Err(ContractError::NotParty);
        }
        let refund = (self.state == SaleState::Escrowed).then(|| (self.buyer.expect("buyer"), self.escrowed_funds));
        self.state = SaleState::Cancelled;
        self.escrowed_funds = 0;
        Ok(refund)
    }
}

impl Encode for EscrowSale {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(&self.sale_id)
            .digest(&self.deed_id)
            .address(&self.seller)
            .str(&self.token)
            .u128(self.ask_price)
            .u8(self.state.tag())
            .option(&self.buyer);
        match self.offer_price {
            None => enc.u8(0),
            Some(p) => enc.u8(1).u128(p),
        };
        enc.u128(self.escrowed_funds).str(&self.required_attestation_kind).u64(self.listed_at);
    }
}

impl Decode for EscrowSale {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let sale_id = dec.digest()?;
        let deed_id = dec.digest()?;
        let seller = dec.address()?;
        let token = dec.string()?;
        let ask_price = dec.u128()?;
        let tag = dec.u8()?;
        let state = SaleState::from_tag(tag).ok_or(CodecError::BadTag { what: "sale state", tag })?;
        let buyer = dec.option()?;
        let offer_price = match dec.u8()? {
            0 => None,
            1 => Some(dec.u128()?),
            tag => return Err(CodecError::BadTag { what: "option", tag }),
        };
        Ok(EscrowSale {
            sale_id,
            deed_id,
            seller,
            token,
            ask_price,
            state,
            buyer,
            offer_price,
            escrowed_funds: dec.u128()?,
            required_attestation_kind: dec.string()?,
            listed_at: dec.u64()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sale() -> EscrowSale {
        EscrowSale::new(
            Digest([1; 32]),
            Digest([2; 32]),
            Address::derive("seller"),
            "DCT".into(),
            500_000_00,
            DEFAULT_ATTESTATION_KIND.into(),
            3,
        )
    }

    #[test]
    fn offer_rules() {
        let mut s = sale();
        assert_eq!(s.make_offer(Address::derive("seller"), 1), Err(ContractError::SelfDeal));
        s.make_offer(Address::derive("buyer"), 500_000_00).unwrap();
        assert_eq!(s.state, SaleState::Offered);
        assert_eq!(s.buyer, Some(Address::derive("buyer")));
        assert_eq!(s.offer_price, Some(500_000_00));
        let mut settled = sale();
        settled.state = SaleState::Settled;
        assert_eq!(settled.make_offer(Address::derive("buyer"), 1), Err(ContractError::BadState("Settled")));
    }

    #[test]
    fn cancel_rules() {
        let (seller, buyer, stranger) =
            (Address::derive("seller"), Address::derive("buyer"), Address::derive("stranger"));
        let mut listed = sale();
        assert_eq!(listed.cancel(&stranger), Err(ContractError::NotParty));
        assert_eq!(listed.cancel(&seller).unwrap(), None);
        assert_eq!(listed.state, SaleState::Cancelled);
        assert!(matches!(listed.cancel(&seller), Err(ContractError::BadState(_))));

        let mut offered = sale();
        offered.make_offer(buyer, 10).unwrap();
        assert_eq!(offered.cancel(&buyer), Err(ContractError::NotParty));

        let mut esc = sale();
        esc.make_offer(buyer, 10).unwrap();
        esc.mark_escrowed(10);
        assert_eq!(esc.cancel(&buyer).unwrap(), Some((buyer, 10)));
        assert_eq!(esc.escrowed_funds, 0);
    }

    #[test]
    fn encoding_round_trip() {
        let mut s = sale();
        s.make_offer(Address::derive("buyer"), 7).unwrap();
        let bytes = s.canonical_bytes();
        assert_eq!(crate::codec::decode_exact::<EscrowSale>(&bytes).unwrap(), s);
    }
}
