use std::collections::BTreeMap;

use chrono::NaiveDate;
use deedchain_core::assets::{deed_id_for, HistoryEntry, PublicMetadata};
use deedchain_core::chain::{BlockReport, Chain};
use deedchain_core::codec::Encode;
use deedchain_core::consensus::{Strategy, WorkParams};
use deedchain_core::contracts::escrow::sale_id_for;
use deedchain_core::contracts::lending::loan_id_for;
use deedchain_core::contracts::{LoanState, SaleState};
use deedchain_core::gas::GasSchedule;
use deedchain_core::ledger::{apply_transactions, BlockContext};
use deedchain_core::oracle::{AttestPayload, Attestation, OracleRegistry};
use deedchain_core::primitives::{escrow_address, lending_pool_address};
use deedchain_core::state::{GenesisConfig, FEE_TOKEN, STABLE_TOKEN};
use deedchain_core::wallet::Wallet;
use deedchain_core::{Digest, Rational, Transaction, TxPayload};

const KEY: &[u8] = b"notary key";

struct World {
    chain: Chain,
    alice: Wallet,
    bob: Wallet,
    carol: Wallet,
}

fn world() -> World {
    let (alice, bob, carol) = (Wallet::named("alice"), Wallet::named("bob"), Wallet::named("carol"));
    let mut oracles = OracleRegistry::default();
    oracles.register("notary", KEY.to_vec());
    let mut cfg = GenesisConfig {
        strategy: Strategy::Work(WorkParams::plain(2)),
        tokens: vec!["DOGE".into()],
        oracles,
        ..GenesisConfig::default()
    };
    for w in [&alice, &bob, &carol] {
        cfg.allocations.push((FEE_TOKEN.into(), w.address, 10_000_000_000_000));
        cfg.allocations.push(("DOGE".into(), w.address, 1_000_000));
    }
    cfg.allocations.push((STABLE_TOKEN.into(), bob.address, 10_000_000_000));
    cfg.allocations.push((STABLE_TOKEN.into(), carol.address, 1_000_000));
    cfg.allocations.push((STABLE_TOKEN.into(), lending_pool_address(), 1_000_000));
    World { chain: Chain::new(cfg).unwrap(), alice, bob, carol }
}

impl World {
    fn block(&mut self, txs: Vec<Transaction>) -> BlockReport {
        for t in txs {
            self.chain.submit(t);
        }
        self.chain.produce_block().unwrap()
    }

    fn codes(r: &BlockReport) -> Vec<&'static str> {
        r.rejections.iter().map(|x| x.error.code()).collect()
    }

    fn bal(&self, token: &str, w: &Wallet) -> u128 {
        self.chain.state().balance(token, &w.address)
    }

    fn mint_deed(&mut self) -> Digest {
        let tx = self.alice.tx(TxPayload::DeedMint { metadata: meta(), commitments: BTreeMap::new() });
        let id = deed_id_for(&tx.tx_id());
        assert!(self.block(vec![tx]).rejections.is_empty());
        id
    }

    fn attest(&self, subject: &str, payload: AttestPayload) -> TxPayload {
        TxPayload::Attest { attestation: Attestation::sign(KEY, "notary", subject, payload, self.chain.tick() + 1) }
    }

    /// Listed, offered and funded sale of a fresh deed at `price` USDS.
    fn escrowed_sale(&mut self, price: u128) -> (Digest, Digest) {
        let deed = self.mint_deed();
        let list = self.alice.tx(TxPayload::List {
            deed_id: deed,
            token: STABLE_TOKEN.into(),
            ask_price: price,
            attestation_kind: String::new(),
        });
        let sale = sale_id_for(&list.tx_id());
        let offer = self.bob.tx(TxPayload::Offer { sale_id: sale, offer_price: price });
        let approve =
            self.bob.tx(TxPayload::TokenApprove { token: STABLE_TOKEN.into(), spender: escrow_address(), amount: price });
        let fund = self.bob.tx(TxPayload::FundEscrow { sale_id: sale });
        let r = self.block(vec![list, offer, approve, fund]);
        assert!(r.rejections.is_empty(), "{:?}", r.rejections);
        (deed, sale)
    }
}

fn meta() -> PublicMetadata {
    PublicMetadata {
        square_footage: 1200,
        bedrooms: 3,
        last_renovation: NaiveDate::from_ymd_opt(2019, 6, 1).unwrap(),
    }
}

#[test]
fn empty_tx_list_leaves_state_unchanged() {
    let w = world();
    let mut st = w.chain.state().clone();
    let before = st.canonical_bytes();
    let out = apply_transactions(&mut st, &[], &BlockContext { tick: 1, beneficiary: w.alice.address });
    assert!(out.accepted.is_empty());
    assert_eq!(st.canonical_bytes(), before);
}

#[test]
fn double_spend_is_rejected() {
    let mut w = world();
    let dave = Wallet::named("dave");
    let t1 = w.alice.tx(TxPayload::TokenTransfer { token: "DOGE".into(), to: dave.address, amount: 600_000 });
    let t2 = w.alice.tx(TxPayload::TokenTransfer { token: "DOGE".into(), to: w.carol.address, amount: 600_000 });
    let r = w.block(vec![t1, t2]);
    assert_eq!(World::codes(&r), ["BadBalance"]);
    assert_eq!(w.bal("DOGE", &w.alice), 400_000);
    assert_eq!(w.chain.state().balance("DOGE", &dave.address), 600_000);
    assert_eq!(w.bal("DOGE", &w.carol), 1_000_000);
}

#[test]
fn nonce_and_gas_rules() {
    let mut w = world();
    let mut t = w.alice.tx(TxPayload::TokenTransfer { token: "DOGE".into(), to: w.bob.address, amount: 1 });
    let replay = t.clone();
    let mut short = w.alice.tx(TxPayload::TokenTransfer { token: "DOGE".into(), to: w.bob.address, amount: 1 });
    short.gas_limit = 21_000;
    let r = w.block(vec![t.clone(), replay, short]);
    assert_eq!(World::codes(&r), ["BadNonce", "InsufficientGas"]);
    t.nonce = 0;
    assert_eq!(World::codes(&w.block(vec![t])), ["BadNonce"]);
}

#[test]
fn fees_are_burned_and_tipped() {
    let mut w = world();
    let supply = w.chain.state().token(FEE_TOKEN).unwrap().total_supply;
    w.alice.tip = 500;
    let t = w.alice.tx(TxPayload::TokenTransfer { token: "DOGE".into(), to: w.bob.address, amount: 1 });
    let gas = GasSchedule::default().gas_cost(&t).unwrap();
    let r = w.block(vec![t]);
    let fee = r.receipts[0].fee;
    assert_eq!(fee.burned, gas as u128 * r.base_fee);
    assert_eq!(fee.tip, 500);
    let st = w.chain.state();
    assert_eq!(st.token(FEE_TOKEN).unwrap().total_supply, supply - fee.burned);
    assert_eq!(st.balance(FEE_TOKEN, &w.chain.config().beneficiary), 500);
}

#[test]
fn sale_settles_atomically() {
    let mut w = world();
    let (deed, sale) = w.escrowed_sale(10_000_000_000);
    assert_eq!(w.bal(STABLE_TOKEN, &w.bob), 0);
    assert_eq!(w.chain.state().balance(STABLE_TOKEN, &escrow_address()), 10_000_000_000);

    // no attestation yet
    let before = w.chain.state().clone();
    let r = w.block(vec![w.bob.clone().tx(TxPayload::Settle { sale_id: sale })]);
    assert_eq!(World::codes(&r), ["MissingAttestation"]);
    assert_eq!(w.chain.state().sales, before.sales);
    assert_eq!(w.chain.state().deeds, before.deeds);

    let att = w.attest(&deed.to_hex(), AttestPayload::LegalDocs(Digest([7; 32])));
    let att = w.carol.tx(att);
    let settle = w.bob.tx(TxPayload::Settle { sale_id: sale });
    let r = w.block(vec![att, settle]);
    assert!(r.rejections.is_empty(), "{:?}", r.rejections);
    let fee = r.receipts[1].fee.total();
    let st = w.chain.state();
    assert_eq!(st.deeds.owner(&deed), Some(w.bob.address));
    assert_eq!(st.balance(STABLE_TOKEN, &w.alice.address), 10_000_000_000 - fee);
    assert_eq!(st.balance(STABLE_TOKEN, &escrow_address()), 0);
    assert_eq!(st.sales[&sale].state, SaleState::Settled);
    let history = st.deeds.history(&deed).unwrap();
    assert!(matches!(history.last(), Some(HistoryEntry::Transfer { to, .. }) if *to == w.bob.address));
}

#[test]
fn covenant_blocks_early_settlement() {
    let mut w = world();
    let (deed, sale) = w.escrowed_sale(50_000);
    let cov = w.alice.tx(TxPayload::AttachCovenant { deed_id: deed, predicate: "(ge tick 50)".into() });
    let att = w.attest(&deed.to_hex(), AttestPayload::LegalDocs(Digest([1; 32])));
    let att = w.carol.tx(att);
    let settle = w.bob.tx(TxPayload::Settle { sale_id: sale });
    let r = w.block(vec![cov, att, settle]);
    assert_eq!(World::codes(&r), ["CovenantViolated"]);
    assert_eq!(w.chain.state().deeds.owner(&deed), Some(w.alice.address));
    assert_eq!(w.chain.state().balance(STABLE_TOKEN, &escrow_address()), 50_000);
}

#[test]
fn covenant_rules_for_plain_transfers() {
    let mut w = world();
    let deed = w.mint_deed();
    let blacklisted = Wallet::named("mallory").address;
    let bad = w.alice.tx(TxPayload::AttachCovenant { deed_id: deed, predicate: "(ne to".into() });
    let stranger = w.carol.tx(TxPayload::AttachCovenant { deed_id: deed, predicate: "true".into() });
    let good = w.alice.tx(TxPayload::AttachCovenant { deed_id: deed, predicate: format!("(ne to {blacklisted})") });
    let bedrooms = w.alice.tx(TxPayload::AttachCovenant { deed_id: deed, predicate: "(ge bedrooms 2)".into() });
    let to_bad = w.alice.tx(TxPayload::DeedTransfer { deed_id: deed, to: blacklisted });
    let to_bob = w.alice.tx(TxPayload::DeedTransfer { deed_id: deed, to: w.bob.address });
    let r = w.block(vec![bad, stranger, good, bedrooms, to_bad, to_bob]);
    assert_eq!(World::codes(&r), ["MalformedPredicate", "NotOwner", "CovenantViolated"]);
    assert_eq!(w.chain.state().deeds.owner(&deed), Some(w.bob.address));
}

#[test]
fn listing_rules_and_deed_lock() {
    let mut w = world();
    let deed = w.mint_deed();
    let not_owner = w.bob.tx(TxPayload::List {
        deed_id: deed,
        token: STABLE_TOKEN.into(),
        ask_price: 50_000_000_000,
        attestation_kind: String::new(),
    });
    let list = w.alice.tx(TxPayload::List {
        deed_id: deed,
        token: STABLE_TOKEN.into(),
        ask_price: 50_000_000_000,
        attestation_kind: String::new(),
    });
    let sale = sale_id_for(&list.tx_id());
    let again = w.alice.tx(TxPayload::List {
        deed_id: deed,
        token: STABLE_TOKEN.into(),
        ask_price: 1,
        attestation_kind: String::new(),
    });
    let self_deal = w.alice.tx(TxPayload::Offer { sale_id: sale, offer_price: 50_000_000_000 });
    let locked = w.alice.tx(TxPayload::DeedTransfer { deed_id: deed, to: w.carol.address });
    let r = w.block(vec![not_owner, list, again, self_deal, locked]);
    assert_eq!(World::codes(&r), ["NotOwner", "AlreadyListed", "SelfDeal", "DeedLocked"]);
    assert_eq!(w.chain.state().sales[&sale].state, SaleState::Listed);
    assert_eq!(w.chain.state().sales[&sale].required_attestation_kind, "legal-docs");
}

#[test]
fn funding_needs_balance_and_allowance() {
    let mut w = world();
    let deed = w.mint_deed();
    let list = w.alice.tx(TxPayload::List {
        deed_id: deed,
        token: STABLE_TOKEN.into(),
        ask_price: 20_000_000_000,
        attestation_kind: String::new(),
    });
    let sale = sale_id_for(&list.tx_id());
    let offer = w.bob.tx(TxPayload::Offer { sale_id: sale, offer_price: 20_000_000_000 });
    let no_allowance = w.bob.tx(TxPayload::FundEscrow { sale_id: sale });
    let approve =
        w.bob.tx(TxPayload::TokenApprove { token: STABLE_TOKEN.into(), spender: escrow_address(), amount: u128::MAX });
    let too_poor = w.bob.tx(TxPayload::FundEscrow { sale_id: sale });
    let r = w.block(vec![list, offer, no_allowance, approve, too_poor]);
    assert_eq!(World::codes(&r), ["BadAllowance", "BadBalance"]);
    assert_eq!(w.chain.state().sales[&sale].state, SaleState::Offered);
}

#[test]
fn exact_balance_buyer_and_refund() {
    let mut w = world();
    let (_, sale) = w.escrowed_sale(10_000_000_000);
    assert_eq!(w.bal(STABLE_TOKEN, &w.bob), 0);
    let stranger = w.carol.tx(TxPayload::Cancel { sale_id: sale });
    let cancel = w.bob.tx(TxPayload::Cancel { sale_id: sale });
    let r = w.block(vec![stranger, cancel]);
    assert_eq!(World::codes(&r), ["NotParty"]);
    assert_eq!(w.bal(STABLE_TOKEN, &w.bob), 10_000_000_000);
    assert_eq!(w.chain.state().sales[&sale].state, SaleState::Cancelled);
}

fn price(w: &World, p: &str) -> TxPayload {
    w.attest("DOGE", AttestPayload::Price(p.parse().unwrap()))
}

fn open_loan(w: &mut World, collateral: u128, borrow: u128) -> (Transaction, Digest) {
    let tx = w.alice.tx(TxPayload::OpenLoan {
        collateral_token: "DOGE".into(),
        collateral_amount: collateral,
        borrow_amount: borrow,
        rate_per_block: Rational::zero(),
        liquidation_threshold: "0.8".parse().unwrap(),
    });
    let id = loan_id_for(&tx.tx_id());
    (tx, id)
}

#[test]
fn loan_origination_floor() {
    let mut w = world();
    let p = w.carol.tx(price(&w, "1"));
    let (low, _) = open_loan(&mut w, 150, 100);
    let (zero, _) = open_loan(&mut w, 150, 0);
    let (ok, id) = open_loan(&mut w, 200, 100);
    let r = w.block(vec![p, low, zero, ok]);
    assert_eq!(World::codes(&r), ["UndercollateralizedAtOpen", "BadBalance"]);
    let st = w.chain.state();
    assert_eq!(st.loans[&id].state, LoanState::Active);
    assert_eq!(st.balance(STABLE_TOKEN, &w.alice.address), 100);
    assert_eq!(st.balance("DOGE", &lending_pool_address()), 200);
}

#[test]
fn liquidation_after_price_halves() {
    let mut w = world();
    let p = w.carol.tx(price(&w, "1"));
    let (open, id) = open_loan(&mut w, 200, 100);
    w.block(vec![p, open]);
    // HF 1.6: not liquidatable
    let r = w.block(vec![w.carol.clone().tx(TxPayload::Liquidate { loan_id: id })]);
    assert_eq!(World::codes(&r), ["NotLiquidatable"]);
    let mut carol = w.carol.clone();
    carol.next_nonce = 10;
    let drop = carol.tx(price(&w, "0.5"));
    let liq = carol.tx(TxPayload::Liquidate { loan_id: id });
    let r = w.block(vec![drop, liq]);
    assert!(r.rejections.is_empty(), "{:?}", r.rejections);
    let st = w.chain.state();
    assert_eq!(st.loans[&id].state, LoanState::Liquidated);
    assert_eq!(st.balance("DOGE", &w.carol.address), 1_000_000 + 200);
}

#[test]
fn liquidation_at_exactly_one_is_refused() {
    let mut w = world();
    let p = w.carol.tx(price(&w, "2"));
    let (open, id) = open_loan(&mut w, 125, 100);
    w.block(vec![p, open]);
    let mut carol = w.carol.clone();
    carol.next_nonce = 10;
    let drop = carol.tx(price(&w, "1"));
    let liq = carol.tx(TxPayload::Liquidate { loan_id: id });
    let r = w.block(vec![drop, liq]);
    assert_eq!(World::codes(&r), ["NotLiquidatable"]);
}

#[test]
fn repay_returns_collateral() {
    let mut w = world();
    let p = w.carol.tx(price(&w, "1"));
    let (open, id) = open_loan(&mut w, 200, 100);
    w.block(vec![p, open]);
    let over = w.alice.tx(TxPayload::Repay { loan_id: id, amount: 101 });
    let exact = w.alice.tx(TxPayload::Repay { loan_id: id, amount: 100 });
    let r = w.block(vec![over, exact]);
    assert_eq!(World::codes(&r), ["Overpay"]);
    let st = w.chain.state();
    assert_eq!(st.loans[&id].state, LoanState::Repaid);
    assert_eq!(st.balance("DOGE", &w.alice.address), 1_000_000);
}

#[test]
fn stale_price_blocks_loans() {
    let mut w = world();
    let p = w.carol.tx(price(&w, "1"));
    w.block(vec![p]);
    w.chain.advance_ticks(101).unwrap();
    let (open, _) = open_loan(&mut w, 200, 100);
    assert_eq!(World::codes(&w.block(vec![open])), ["StalePrice"]);
}

#[test]
fn oracle_rules() {
    let mut w = world();
    let forged = TxPayload::Attest {
        attestation: Attestation::sign(b"wrong", "notary", "DOGE", AttestPayload::Price(Rational::one()), 1),
    };
    let unknown = TxPayload::Attest {
        attestation: Attestation::sign(KEY, "nobody", "DOGE", AttestPayload::Price(Rational::one()), 1),
    };
    let first = price(&w, "16000");
    let txs = vec![w.carol.tx(forged), w.carol.tx(unknown), w.carol.tx(first.clone()), w.carol.tx(first)];
    let r = w.block(txs);
    assert_eq!(World::codes(&r), ["BadSignature", "UnknownOracle", "NonMonotonicTick"]);
    assert_eq!(w.chain.state().feed.latest_price("DOGE", 1, 100).unwrap(), "16000".parse().unwrap());
}

#[test]
fn depeg_and_rebalance() {
    let mut w = world();
    let mint = w.alice.tx(TxPayload::StableMint { to: w.alice.address, fiat_deposit: 1000 });
    w.block(vec![mint]);
    let supply = w.chain.state().stable.token.total_supply;
    let haircut = w.attest(STABLE_TOKEN, AttestPayload::ReserveHaircut("0.05".parse().unwrap()));
    let tx = w.carol.tx(haircut);
    let r = w.block(vec![tx]);
    assert!(r.rejections.is_empty(), "{:?}", r.rejections);
    let st = w.chain.state();
    assert!(st.stable.backing_suspended);
    let expected = Rational::new(st.stable.reserve, supply).unwrap();
    assert_eq!(st.feed.latest_price(STABLE_TOKEN, st.tick, 100).unwrap(), expected);
    let shortfall = supply - st.stable.reserve;
    let burn = w.bob.tx(TxPayload::StableRedeem { amount: shortfall, burn_only: true });
    assert!(w.block(vec![burn]).rejections.is_empty());
    let st = w.chain.state();
    assert!(!st.stable.backing_suspended);
    assert_eq!(st.stable.implied_price(), Rational::one());
}

#[test]
fn access_grants_follow_ownership() {
    let mut w = world();
    let deed = w.mint_deed();
    let st = w.chain.state();
    assert!(st.acl.check_access(&st.deeds, &deed, &w.alice.address));
    assert!(!st.acl.check_access(&st.deeds, &deed, &w.carol.address));
    let not_owner = w.bob.tx(TxPayload::GrantAccess { deed_id: deed, grantee: w.carol.address });
    let grant = w.alice.tx(TxPayload::GrantAccess { deed_id: deed, grantee: w.carol.address });
    let transfer = w.alice.tx(TxPayload::DeedTransfer { deed_id: deed, to: w.bob.address });
    let r = w.block(vec![not_owner, grant, transfer]);
    assert_eq!(World::codes(&r), ["NotOwner"]);
    let st = w.chain.state();
    assert!(st.acl.check_access(&st.deeds, &deed, &w.carol.address));
    assert!(st.acl.check_access(&st.deeds, &deed, &w.bob.address));
    assert!(!st.acl.check_access(&st.deeds, &deed, &w.alice.address));
}
