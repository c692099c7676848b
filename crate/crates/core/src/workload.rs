//! Seeded random workloads that drive the ledger and check its invariants
//! after every block: conservation, deed uniqueness, per-transaction
//! atomicity, escrow settlement atomicity and tamper evidence.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assets::PublicMetadata;
use crate::chain::Chain;
use crate::codec::Encode;
use crate::consensus::{Strategy, WorkParams};
use crate::contracts::{EscrowSale, SaleState};
use crate::ledger::{apply_one, BlockContext};
use crate::oracle::{AttestPayload, Attestation, OracleRegistry};
use crate::persist::{decode_chain, encode_chain};
use crate::primitives::{escrow_address, lending_pool_address, sha256, Address, Rational};
use crate::state::{ChainState, GenesisConfig, FEE_TOKEN, STABLE_TOKEN};
use crate::tx::{Transaction, TxKind, TxPayload};
use crate::wallet::Wallet;

pub const COLLATERAL_TOKEN: &str = "DOGE";
const NOTARY: &str = "notary";
const NOTARY_KEY: &[u8] = b"workload notary key";

const COVENANTS: &[&str] = &[
    "true",
    "(ge bedrooms 1)",
    "(gt tick 3)",
    "(or (gt sqft 900) (lt tick 40))",
    "(not (eq to 0x0000000000000000000000000000000000000000000000000000000000000000))",
    "(and (ge last_renovation 2001-01-01) (le bedrooms 9))",
    "(gt bedrooms",
    "(eq sqft true)",
];

fn notary_registry() -> OracleRegistry {
    let mut r = OracleRegistry::default();
    r.register(NOTARY, NOTARY_KEY.to_vec());
    r
}

/// Sums every token's supply. Used to check the no-value-creation rule.
fn supplies(st: &ChainState) -> BTreeMap<String, u128> {
    st.token_symbols().into_iter().map(|s| (s.clone(), st.token(&s).expect("listed").total_supply)).collect()
}

/// Violations of the structural invariants in one state.
pub fn check_state_invariants(st: &ChainState) -> Vec<String> {
    let mut v = Vec::new();
    for sym in st.token_symbols() {
        let t = st.token(&sym).expect("listed");
        if t.sum_of_balances() != t.total_supply {
            v.push(format!("{sym}: balances sum {} != supply {}", t.sum_of_balances(), t.total_supply));
        }
    }
    if !st.stable.backing_suspended && st.stable.token.total_supply > st.stable.reserve {
        v.push("stablecoin under-backed with flag clear".into());
    }
    for d in st.deeds.iter() {
        if d.history.last().map(|h| h.owner_after()) != Some(d.owner) {
            v.push(format!("deed {} owner differs from history", d.deed_id));
        }
    }
    let mut held: BTreeMap<&str, u128> = BTreeMap::new();
    for s in st.sales.values() {
        if s.state == SaleState::Escrowed {
            *held.entry(s.token.as_str()).or_default() += s.escrowed_funds;
        } else if s.escrowed_funds != 0 {
            v.push(format!("sale {} holds funds in state {}", s.sale_id, s.state.name()));
        }
        if s.state.is_open() && st.deeds.owner(&s.deed_id) != Some(s.seller) {
            v.push(format!("open sale {} but seller no longer owns deed", s.sale_id));
        }
    }
    for sym in st.token_symbols() {
        let bal = st.balance(&sym, &escrow_address());
        let want = held.get(sym.as_str()).copied().unwrap_or(0);
        if bal != want {
            v.push(format!("escrow holds {bal} {sym}, sales account for {want}"));
        }
    }
    for l in st.loans.values() {
        if l.state == crate::contracts::LoanState::Active && l.principal == 0 {
            v.push(format!("active loan {} without debt", l.loan_id));
        }
    }
    v
}

/// Expected supply change from one accepted transaction.
fn apply_supply_delta(expected: &mut BTreeMap<String, i128>, st: &ChainState, tx: &Transaction, burned: u128) {
    let fee_sym = match &tx.payload {
        TxPayload::Settle { sale_id } => st.sales[sale_id].token.clone(),
        _ => st.params.fee_token.clone(),
    };
    *expected.entry(fee_sym).or_default() -= burned as i128;
    match &tx.payload {
        TxPayload::StableMint { fiat_deposit, .. } => {
            *expected.entry(st.params.stable_symbol.clone()).or_default() += *fiat_deposit as i128
        }
        TxPayload::StableRedeem { amount, .. } => {
            *expected.entry(st.params.stable_symbol.clone()).or_default() -= *amount as i128
        }
        _ => {}
    }
}

#[derive(Debug, Clone)]
pub struct WorkloadConfig {
    pub seed: u64,
    pub ops: usize,
    pub txs_per_block: usize,
    pub strategy: Strategy,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig { seed: 1, ops: 1_000, txs_per_block: 10, strategy: Strategy::Work(WorkParams::plain(4)) }
    }
}

#[derive(Debug)]
pub struct WorkloadReport {
    pub chain: Chain,
    pub accepted: usize,
    pub rejected: usize,
    pub accepted_by_kind: BTreeMap<TxKind, usize>,
    pub violations: Vec<String>,
}

struct Generator {
    rng: ChaCha8Rng,
    wallets: Vec<Wallet>,
}

impl Generator {
    fn pick_wallet(&mut self) -> usize {
        self.rng.gen_range(0..self.wallets.len())
    }

    fn random_address(&mut self) -> Address {
        let i = self.pick_wallet();
        self.wallets[i].address
    }

    fn wallet_of(&self, a: &Address) -> Option<usize> {
        self.wallets.iter().position(|w| w.address == *a)
    }

    fn amount(&mut self, have: u128) -> u128 {
        match self.rng.gen_range(0..10) {
            0 => 0,
            1 => have + 1 + self.rng.gen_range(0..1_000),
            _ => self.rng.gen_range(0..=have.max(1)),
        }
    }

    /// A sale, usually one in state `want`.
    fn pick_sale(&mut self, sales: &[EscrowSale], want: SaleState) -> EscrowSale {
        let matching: Vec<&EscrowSale> = sales.iter().filter(|s| s.state == want).collect();
        if !matching.is_empty() && self.rng.gen_bool(0.85) {
            (*matching.choose(&mut self.rng).expect("nonempty")).clone()
        } else {
            sales.choose(&mut self.rng).expect("nonempty").clone()
        }
    }

    fn metadata(&mut self) -> PublicMetadata {
        PublicMetadata {
            square_footage: self.rng.gen_range(300..5_000),
            bedrooms: self.rng.gen_range(0..7),
            last_renovation: NaiveDate::from_ymd_opt(self.rng.gen_range(1950..2024), self.rng.gen_range(1..13), 1)
                .expect("valid date"),
        }
    }

    fn attest(&mut self, subject: &str, payload: AttestPayload, tick: u64) -> TxPayload {
        let key: &[u8] = if self.rng.gen_ratio(1, 20) { b"forged" } else { NOTARY_KEY };
        TxPayload::Attest { attestation: Attestation::sign(key, NOTARY, subject, payload, tick) }
    }

    /// One random transaction against the committed state `st`; the batch
    /// lands in the block at `tick`.
    fn next_tx(&mut self, st: &ChainState, tick: u64) -> Transaction {
        let w = self.pick_wallet();
        let me = self.wallets[w].address;
        let deeds: Vec<_> = st.deeds.iter().map(|d| (d.deed_id, d.owner)).collect();
        let sales: Vec<_> = st.sales.values().cloned().collect();
        let loans: Vec<_> = st.loans.values().cloned().collect();
        let tokens = [FEE_TOKEN, STABLE_TOKEN, COLLATERAL_TOKEN];
        let mut sender = w;
        let payload = match self.rng.gen_range(0..20) {
            0 | 1 => {
                let token = tokens.choose(&mut self.rng).expect("nonempty").to_string();
                let amount = self.amount(st.balance(&token, &me) / 4);
                let to = self.random_address();
                TxPayload::TokenTransfer { token, to, amount }
            }
            2 => {
                let token = tokens.choose(&mut self.rng).expect("nonempty").to_string();
                let spender =
                    if self.rng.gen_bool(0.7) { escrow_address() } else { self.random_address() };
                TxPayload::TokenApprove { token, spender, amount: self.rng.gen_range(0..10_000_000_000) }
            }
            3 => TxPayload::StableMint { to: me, fiat_deposit: self.rng.gen_range(0..5_000_000_000) },
            4 => {
                let amount = self.amount(st.balance(STABLE_TOKEN, &me) / 10);
                TxPayload::StableRedeem { amount, burn_only: self.rng.gen_ratio(1, 10) }
            }
            5 | 6 => TxPayload::DeedMint { metadata: self.metadata(), commitments: BTreeMap::new() },
            7 if !deeds.is_empty() => {
                let (deed_id, owner) = *deeds.choose(&mut self.rng).expect("nonempty");
                if self.rng.gen_bool(0.8) {
                    sender = self.wallet_of(&owner).unwrap_or(w);
                }
                TxPayload::DeedTransfer { deed_id, to: self.random_address() }
            }
            8 if !deeds.is_empty() => {
                let (deed_id, owner) = *deeds.choose(&mut self.rng).expect("nonempty");
                sender = self.wallet_of(&owner).unwrap_or(w);
                let predicate = COVENANTS.choose(&mut self.rng).expect("nonempty").to_string();
                TxPayload::AttachCovenant { deed_id, predicate }
            }
            9 if !deeds.is_empty() => {
                let (deed_id, owner) = *deeds.choose(&mut self.rng).expect("nonempty");
                if self.rng.gen_bool(0.9) {
                    sender = self.wallet_of(&owner).unwrap_or(w);
                }
                let token = if self.rng.gen_bool(0.8) { STABLE_TOKEN } else { FEE_TOKEN };
                TxPayload::List {
                    deed_id,
                    token: token.into(),
                    ask_price: self.rng.gen_range(0..2_000_000_000),
                    attestation_kind: String::new(),
                }
            }
            10 if !sales.is_empty() => {
                let s = self.pick_sale(&sales, SaleState::Listed);
                let offer_price = if self.rng.gen_bool(0.8) { s.ask_price } else { self.rng.gen_range(0..s.ask_price + 2) };
                TxPayload::Offer { sale_id: s.sale_id, offer_price }
            }
            11 if !sales.is_empty() => {
                let s = self.pick_sale(&sales, SaleState::Offered);
                if let Some(b) = s.buyer.and_then(|b| self.wallet_of(&b)) {
                    sender = b;
                }
                TxPayload::FundEscrow { sale_id: s.sale_id }
            }
            12 if !sales.is_empty() => {
                let s = self.pick_sale(&sales, SaleState::Escrowed);
                let party = if self.rng.gen_bool(0.5) { Some(s.seller) } else { s.buyer };
                if let Some(p) = party.and_then(|p| self.wallet_of(&p)) {
                    if self.rng.gen_bool(0.9) {
                        sender = p;
                    }
                }
                if self.rng.gen_bool(0.7) {
                    TxPayload::Settle { sale_id: s.sale_id }
                } else {
                    TxPayload::Cancel { sale_id: s.sale_id }
                }
            }
            13 if !deeds.is_empty() => {
                let (deed_id, _) = *deeds.choose(&mut self.rng).expect("nonempty");
                let docs = sha256(deed_id.as_bytes());
                let t = tick.saturating_sub(self.rng.gen_range(0..3));
                self.attest(&deed_id.to_hex(), AttestPayload::LegalDocs(docs), t)
            }
            14 => {
                let price = Rational::new(self.rng.gen_range(50..200), 100).expect("nonzero");
                self.attest(COLLATERAL_TOKEN, AttestPayload::Price(price), tick)
            }
            15 | 16 => {
                let collateral_amount = self.amount(st.balance(COLLATERAL_TOKEN, &me) / 5);
                let borrow_amount = collateral_amount * self.rng.gen_range(10..90) / 100;
                TxPayload::OpenLoan {
                    collateral_token: COLLATERAL_TOKEN.into(),
                    collateral_amount,
                    borrow_amount,
                    rate_per_block: Rational::new(self.rng.gen_range(0..100), 1_000_000).expect("nonzero"),
                    liquidation_threshold: Rational::new(self.rng.gen_range(0..=10), 10).expect("nonzero"),
                }
            }
            17 if !loans.is_empty() => {
                let l = loans.choose(&mut self.rng).expect("nonempty");
                if let Some(b) = self.wallet_of(&l.borrower) {
                    sender = b;
                }
                let debt = l.debt_at(tick);
                let amount = if self.rng.gen_bool(0.5) { debt } else { self.amount(debt) };
                TxPayload::Repay { loan_id: l.loan_id, amount }
            }
            18 if !loans.is_empty() => {
                let l = loans.choose(&mut self.rng).expect("nonempty");
                TxPayload::Liquidate { loan_id: l.loan_id }
            }
            19 if !deeds.is_empty() => {
                let (deed_id, owner) = *deeds.choose(&mut self.rng).expect("nonempty");
                if self.rng.gen_bool(0.8) {
                    sender = self.wallet_of(&owner).unwrap_or(w);
                }
                TxPayload::GrantAccess { deed_id, grantee: self.random_address() }
            }
            _ => {
                if self.rng.gen_ratio(1, 8) {
                    let haircut = Rational::new(self.rng.gen_range(1..10), 100).expect("nonzero");
                    self.attest(STABLE_TOKEN, AttestPayload::ReserveHaircut(haircut), tick)
                } else {
                    TxPayload::DeedMint { metadata: self.metadata(), commitments: BTreeMap::new() }
                }
            }
        };
        let wallet = &mut self.wallets[sender];
        let mut tx = wallet.tx(payload);
        match self.rng.gen_range(0..40) {
            0 => tx.nonce = tx.nonce.saturating_sub(2),
            1 => tx.gas_limit = 20_000,
            2 => tx.tip = self.rng.gen_range(1..1_000),
            _ => {}
        }
        tx
    }
}

pub fn workload_genesis(strategy: Strategy, actors: &[Wallet]) -> GenesisConfig {
    let mut allocations = Vec::new();
    for w in actors {
        allocations.push((FEE_TOKEN.to_string(), w.address, 1_000_000_000_000_000));
        allocations.push((STABLE_TOKEN.to_string(), w.address, 5_000_000_000));
        allocations.push((COLLATERAL_TOKEN.to_string(), w.address, 5_000_000_000));
    }
    allocations.push((STABLE_TOKEN.to_string(), lending_pool_address(), 50_000_000_000));
    GenesisConfig {
        strategy,
        tokens: vec![COLLATERAL_TOKEN.into()],
        allocations,
        oracles: notary_registry(),
        ..GenesisConfig::default()
    }
}

/// Run `cfg.ops` random transactions, checking invariants after each block.
pub fn run_ledger_workload(cfg: &WorkloadConfig) -> WorkloadReport {
    let wallets: Vec<Wallet> = (0..6).map(|i| Wallet::named(&format!("w{i}"))).collect();
    let genesis = workload_genesis(cfg.strategy.clone(), &wallets);
    let beneficiary = genesis.beneficiary;
    let mut chain = Chain::new(genesis).expect("valid genesis");
    let mut gen = Generator { rng: ChaCha8Rng::seed_from_u64(cfg.seed), wallets };
    let mut report = WorkloadReport {
        chain: chain.clone(),
        accepted: 0,
        rejected: 0,
        accepted_by_kind: BTreeMap::new(),
        violations: Vec::new(),
    };
    let mut produced = 0;
    while produced < cfg.ops {
        let n = cfg.txs_per_block.min(cfg.ops - produced);
        let tick = chain.tick() + 1;
        let batch: Vec<Transaction> = (0..n).map(|_| gen.next_tx(chain.state(), tick)).collect();
        produced += n;

        // shadow execution: per-tx atomicity and expected supplies
        let mut sim = chain.state().clone();
        sim.height += 1;
        sim.tick = tick;
        sim.proposer = beneficiary;
        let ctx = BlockContext { tick, beneficiary };
        let mut expected: BTreeMap<String, i128> =
            supplies(&sim).into_iter().map(|(k, v)| (k, v as i128)).collect();
        let mut gas = 0;
        for tx in &batch {
            let before = sim.canonical_bytes();
            let pre = sim.clone();
            match apply_one(&mut sim, tx, &ctx, gas) {
                Ok(r) => {
                    gas += r.gas;
                    apply_supply_delta(&mut expected, &pre, tx, r.fee.burned);
                }
                Err(e) => {
                    if sim.canonical_bytes() != before {
                        report.violations.push(format!("rejected {} ({}) changed state", tx.kind(), e.code()));
                    }
                }
            }
        }
        sim.fee.update(gas).expect("gas within limit");
        for (sym, supply) in supplies(&sim) {
            if expected.get(&sym).copied() != Some(supply as i128) {
                report.violations.push(format!("{sym} supply {supply} but expected {:?}", expected.get(&sym)));
            }
        }

        for tx in batch {
            chain.submit(tx);
        }
        let block = chain.produce_block().expect("block production");
        if !chain.pending().is_empty() {
            report.violations.push(format!("{} transactions deferred", chain.pending().len()));
        }
        if chain.state().state_root() != sim.state_root() {
            report.violations.push(format!("block {} differs from shadow execution", block.height));
        }
        report.accepted += block.receipts.len();
        report.rejected += block.rejections.len();
        for r in &block.receipts {
            *report.accepted_by_kind.entry(r.kind).or_default() += 1;
        }
        for v in check_state_invariants(chain.state()) {
            report.violations.push(format!("height {}: {v}", block.height));
        }
        let mut last: BTreeMap<Address, u64> = BTreeMap::new();
        for b in &chain.blocks()[1..] {
            for t in &b.txs {
                if last.get(&t.sender).is_some_and(|n| *n >= t.nonce) {
                    report.violations.push(format!("nonce regression for {}", t.sender.short()));
                }
                last.insert(t.sender, t.nonce);
            }
        }
    }
    report.chain = chain;
    report
}

/// Flip bytes of the persisted chain at `positions` and report those whose
/// mutation still validates.
pub fn undetected_mutations(chain: &Chain, positions: &[usize], seed: u64) -> Vec<usize> {
    let bytes = encode_chain(chain.blocks());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut missed = Vec::new();
    for &pos in positions {
        let mut m = bytes.clone();
        let delta: u8 = rng.gen_range(1..=255);
        m[pos] ^= delta;
        let ok = decode_chain(&m).ok().and_then(|blocks| Chain::from_blocks(blocks).ok()).is_some();
        if ok {
            missed.push(pos);
        }
    }
    missed
}

/// Outcome of one randomized sale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaleRun {
    pub final_state: SaleState,
    pub was_escrowed: bool,
    pub violations: Vec<String>,
}

/// One sale between a seller and a buyer with random interleavings of
/// funding, settlement, cancellation and transfer attempts.
pub fn run_sale_scenario(seed: u64) -> SaleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seller = Wallet::named("seller");
    let mut buyer = Wallet::named("buyer");
    let mut stranger = Wallet::named("stranger");
    let price: u128 = rng.gen_range(200_000_000..20_000_000_000);
    let buyer_funds = price * rng.gen_range(80..200) / 100;
    let mut genesis = workload_genesis(Strategy::Work(WorkParams::plain(0)), &[]);
    for w in [&seller, &buyer, &stranger] {
        genesis.allocations.push((FEE_TOKEN.into(), w.address, 1_000_000_000_000_000));
    }
    genesis.allocations.push((STABLE_TOKEN.into(), buyer.address, buyer_funds));
    genesis.allocations.push((STABLE_TOKEN.into(), seller.address, 1_000));
    let mut chain = Chain::new(genesis).expect("valid genesis");
    let mut violations = Vec::new();

    let mint = seller.tx(TxPayload::DeedMint {
        metadata: PublicMetadata {
            square_footage: rng.gen_range(500..3_000),
            bedrooms: rng.gen_range(1..5),
            last_renovation: NaiveDate::from_ymd_opt(2019, 6, 1).expect("valid"),
        },
        commitments: BTreeMap::new(),
    });
    let deed_id = crate::assets::deed_id_for(&mint.tx_id());
    chain.submit(mint);
    if rng.gen_bool(0.3) {
        let predicate = ["true".to_string(), "(gt tick 6)".to_string(), format!("(ne to {})", buyer.address)]
            .choose(&mut rng)
            .expect("nonempty")
            .clone();
        chain.submit(seller.tx(TxPayload::AttachCovenant { deed_id, predicate }));
    }
    let list = seller.tx(TxPayload::List {
        deed_id,
        token: STABLE_TOKEN.into(),
        ask_price: price,
        attestation_kind: String::new(),
    });
    let sale_id = crate::contracts::escrow::sale_id_for(&list.tx_id());
    chain.submit(list);
    chain.produce_block().expect("block");
    chain.submit(buyer.tx(TxPayload::Offer { sale_id, offer_price: price }));
    chain.produce_block().expect("block");

    let seller_start = chain.state().balance(STABLE_TOKEN, &seller.address);
    let buyer_start = chain.state().balance(STABLE_TOKEN, &buyer.address);
    let mut settle_fee: Option<u128> = None;
    let mut was_escrowed = false;

    for _ in 0..rng.gen_range(3..10) {
        let tick = chain.tick() + 1;
        for _ in 0..rng.gen_range(1..4) {
            let p = match rng.gen_range(0..9) {
                0 => (&mut buyer, TxPayload::TokenApprove {
                    token: STABLE_TOKEN.into(),
                    spender: escrow_address(),
                    amount: if rng.gen_bool(0.8) { price } else { price / 2 },
                }),
                1 => (&mut buyer, TxPayload::FundEscrow { sale_id }),
                2 => {
                    let payload = AttestPayload::LegalDocs(sha256(deed_id.as_bytes()));
                    let att = Attestation::sign(NOTARY_KEY, NOTARY, &deed_id.to_hex(), payload, tick);
                    (&mut stranger, TxPayload::Attest { attestation: att })
                }
                3 => (&mut buyer, TxPayload::Settle { sale_id }),
                4 => (&mut seller, TxPayload::Settle { sale_id }),
                5 => {
                    let w = [&mut seller, &mut buyer, &mut stranger].into_iter().nth(rng.gen_range(0..3)).expect("3");
                    (w, TxPayload::Cancel { sale_id })
                }
                6 => (&mut seller, TxPayload::DeedTransfer { deed_id, to: stranger.address }),
                7 => (&mut stranger, TxPayload::Settle { sale_id }),
                _ => (&mut buyer, TxPayload::TokenApprove {
                    token: STABLE_TOKEN.into(),
                    spender: escrow_address(),
                    amount: price,
                }),
            };
            let tx = p.0.tx(p.1);
            chain.submit(tx);
        }
        let report = chain.produce_block().expect("block");
        for (r, tx) in report.receipts.iter().zip(chain.tip().txs.iter()) {
            if tx.kind() == TxKind::Settle {
                settle_fee = Some(r.fee.total());
            }
        }
        let st = chain.state();
        let sale = &st.sales[&sale_id];
        was_escrowed |= sale.state == SaleState::Escrowed;
        let owner = st.deeds.owner(&deed_id);
        let escrow_bal = st.balance(STABLE_TOKEN, &escrow_address());
        let (sb, bb) = (st.balance(STABLE_TOKEN, &seller.address), st.balance(STABLE_TOKEN, &buyer.address));
        let ok = match sale.state {
            SaleState::Listed | SaleState::Offered => {
                owner == Some(seller.address) && escrow_bal == 0 && sb == seller_start && bb == buyer_start
            }
            SaleState::Escrowed => {
                owner == Some(seller.address)
                    && escrow_bal == price
                    && sale.escrowed_funds == price
                    && sb == seller_start
                    && bb == buyer_start - price
            }
            SaleState::Settled => {
                let fee = settle_fee.unwrap_or(u128::MAX);
                owner == Some(buyer.address)
                    && escrow_bal == 0
                    && sb.checked_sub(seller_start) == price.checked_sub(fee)
                    && bb == buyer_start - price
            }
            // once cancelled the seller may move the deed elsewhere
            SaleState::Cancelled => {
                owner != Some(buyer.address) && escrow_bal == 0 && sb == seller_start && bb == buyer_start
            }
        };
        if !ok {
            violations.push(format!(
                "height {} state {}: owner {:?} escrow {escrow_bal} seller {sb} buyer {bb}",
                report.height,
                sale.state.name(),
                owner.map(|a| a.short())
            ));
        }
        violations.extend(check_state_invariants(st));
    }
    SaleRun { final_state: chain.state().sales[&sale_id].state, was_escrowed, violations }
}
