//! Scenario files are TOML with `schema = 1`:
//!
//! ```toml
//! schema = 1
//! name = "example"
//! seed = 7
//! tokens = ["DOGE"]
//!
//! [consensus]
//! strategy = "pow"
//! difficulty = 6
//!
//! [[oracles]]
//! id = "notary"            # key = "hex" optional, else derived from the seed
//!
//! [[actors]]
//! name = "alice"
//! balances = { DCT = 1000000000000, DOGE = 5000 }
//! stake = 0                # counted under `pos`
//!
//! [[actions]]
//! op = "deed_mint"
//! from = "alice"
//! label = "house"
//! sqft = 1200
//! bedrooms = 3
//! last_renovation = "2019-06-01"
//!
//! [[actions]]
//! op = "advance_ticks"
//! n = 1
//!
//! [[actions]]
//! op = "expect"
//! check = "owner"
//! deed = "house"
//! actor = "alice"
//! ```
//!
//! Transaction actions queue into the pending pool and land in the next
//! block; `advance_ticks` seals one block per tick and `inject_shock` seals
//! one block per shock-path price. `expect` reads committed state.
//!
//! Transaction ops and their keys (all take `from`, optional `label`):
//!
//! | op | keys |
//! |---|---|
//! | transfer | token, to, amount |
//! | approve | token, spender, amount |
//! | stable_mint | amount, to? |
//! | stable_redeem | amount, burn_only? |
//! | deed_mint | sqft, bedrooms, last_renovation, private? |
//! | deed_transfer | deed, to |
//! | list | deed, token, price, attestation_kind? |
//! | offer | sale, price |
//! | fund / settle / cancel | sale |
//! | covenant | deed, predicate |
//! | open_loan | collateral, amount, borrow, threshold, rate? |
//! | repay | loan, amount |
//! | liquidate | loan |
//! | attest | oracle, subject, kind, value? / document? / text? |
//! | grant_access | deed, to |
//!
//! Other ops: `advance_ticks` (n), `inject_shock` (from, oracle, symbol,
//! base_price, event_pct, period_pct, horizon) and `expect` with `check`
//! one of owner, balance, loan_state, sale_state, outcome, health_factor,
//! price, pegged. Numeric checks take one of eq, ne, lt, le, gt, ge.
//!
//! Addresses (`to`, `spender`, `actor`) name an actor, `escrow`, `pool`, or
//! a `0x` hex address. Deed, sale and loan references name the label of the
//! action that created them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use deedchain_analytics::shock_path;
use deedchain_core::assets::{deed_id_for, PublicMetadata};
use deedchain_core::chain::{BlockReport, Chain};
use deedchain_core::consensus::StakeTable;
use deedchain_core::contracts::escrow::sale_id_for;
use deedchain_core::contracts::lending::{default_rate_per_block, loan_id_for};
use deedchain_core::contracts::LoanState;
use deedchain_core::oracle::{commit_field, AttestPayload, Attestation, OracleRegistry};
use deedchain_core::primitives::{escrow_address, lending_pool_address, sha256, sha256_concat};
use deedchain_core::state::{ChainState, GenesisConfig, FEE_TOKEN};
use deedchain_core::wallet::{actor_address, Wallet};
use deedchain_core::{Address, Digest, Rational, TxPayload};
use toml::{Table, Value};

use crate::analyze;
use crate::config::ConsensusSpec;
use crate::report::{ActionRecord, AnalyticsOutput, AssertionRecord, RunReport, ShockRow, Summary};
use crate::CliError;

pub const SCHEMA: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub consensus: ConsensusSpec,
    pub tokens: Vec<String>,
    pub oracles: Vec<(String, Option<Vec<u8>>)>,
    pub actors: Vec<Actor>,
    pub actions: Vec<Action>,
    pub analytics: Option<AnalyticsSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub name: String,
    pub balances: BTreeMap<String, u128>,
    pub stake: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticsSpec {
    pub symbols: Vec<String>,
    pub range: (NaiveDate, NaiveDate),
    pub event_date: NaiveDate,
    pub window: (NaiveDate, NaiveDate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: Option<String>,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    Tx { from: String, op: TxOp },
    AdvanceTicks(u64),
    InjectShock { from: String, oracle: String, symbol: String, base_price: f64, event_pct: f64, period_pct: f64, horizon: usize },
    Expect(Check),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Actor(String),
    Fixed(Address),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttestSpec {
    Price(Rational),
    LegalDocs(String),
    Spec(String),
    ReserveHaircut(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxOp {
    Transfer { token: String, to: Target, amount: u128 },
    Approve { token: String, spender: Target, amount: u128 },
    StableMint { to: Option<Target>, amount: u128 },
    StableRedeem { amount: u128, burn_only: bool },
    DeedMint { metadata: PublicMetadata, private: BTreeMap<String, String> },
    DeedTransfer { deed: String, to: Target },
    List { deed: String, token: String, price: u128, attestation_kind: String },
    Offer { sale: String, price: u128 },
    Fund { sale: String },
    Settle { sale: String },
    Cancel { sale: String },
    Covenant { deed: String, predicate: String },
    OpenLoan { collateral: String, amount: u128, borrow: u128, rate: Rational, threshold: Rational },
    Repay { loan: String, amount: u128 },
    Liquidate { loan: String },
    Attest { oracle: String, subject: String, payload: AttestSpec },
    GrantAccess { deed: String, to: Target },
}

impl TxOp {
    pub fn name(&self) -> &'static str {
        match self {
            TxOp::Transfer { .. } => "transfer",
            TxOp::Approve { .. } => "approve",
            TxOp::StableMint { .. } => "stable_mint",
            TxOp::StableRedeem { .. } => "stable_redeem",
            TxOp::DeedMint { .. } => "deed_mint",
            TxOp::DeedTransfer { .. } => "deed_transfer",
            TxOp::List { .. } => "list",
            TxOp::Offer { .. } => "offer",
            TxOp::Fund { .. } => "fund",
            TxOp::Settle { .. } => "settle",
            TxOp::Cancel { .. } => "cancel",
            TxOp::Covenant { .. } => "covenant",
            TxOp::OpenLoan { .. } => "open_loan",
            TxOp::Repay { .. } => "repay",
            TxOp::Liquidate { .. } => "liquidate",
            TxOp::Attest { .. } => "attest",
            TxOp::GrantAccess { .. } => "grant_access",
        }
    }

    /// Label kind this op defines, if any.
    fn defines(&self) -> Option<RefKind> {
        match self {
            TxOp::DeedMint { .. } => Some(RefKind::Deed),
            TxOp::List { .. } => Some(RefKind::Sale),
            TxOp::OpenLoan { .. } => Some(RefKind::Loan),
            _ => None,
        }
    }

    fn references(&self) -> Vec<(RefKind, &str)> {
        match self {
            TxOp::DeedTransfer { deed, .. } | TxOp::List { deed, .. } | TxOp::Covenant { deed, .. } | TxOp::GrantAccess { deed, .. } => {
                vec![(RefKind::Deed, deed)]
            }
            TxOp::Offer { sale, .. } | TxOp::Fund { sale } | TxOp::Settle { sale } | TxOp::Cancel { sale } => {
                vec![(RefKind::Sale, sale)]
            }
            TxOp::Repay { loan, .. } | TxOp::Liquidate { loan } => vec![(RefKind::Loan, loan)],
            _ => vec![],
        }
    }

    fn targets(&self) -> Vec<&Target> {
        match self {
            TxOp::Transfer { to, .. } | TxOp::DeedTransfer { to, .. } | TxOp::GrantAccess { to, .. } => vec![to],
            TxOp::Approve { spender, .. } => vec![spender],
            TxOp::StableMint { to: Some(t), .. } => vec![t],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    const KEYS: [(&'static str, Cmp); 6] =
        [("eq", Cmp::Eq), ("ne", Cmp::Ne), ("lt", Cmp::Lt), ("le", Cmp::Le), ("gt", Cmp::Gt), ("ge", Cmp::Ge)];

    pub fn holds<T: PartialOrd>(self, a: &T, b: &T) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = Cmp::KEYS.iter().find(|(_, c)| c == self).map(|(k, _)| *k).unwrap_or("?");
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Owner { deed: String, actor: Target },
    Balance { actor: Target, token: String, cmp: Cmp, value: u128 },
    LoanState { loan: String, state: String },
    SaleState { sale: String, state: String },
    Outcome { action: String, expected: String },
    HealthFactor { loan: String, cmp: Cmp, value: Rational },
    Price { symbol: String, cmp: Cmp, value: Rational },
    Pegged(bool),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Owner { deed, actor } => write!(f, "owner of {deed} is {actor}"),
            Check::Balance { actor, token, cmp, value } => write!(f, "balance {token} of {actor} {cmp} {value}"),
            Check::LoanState { loan, state } => write!(f, "loan {loan} is {state}"),
            Check::SaleState { sale, state } => write!(f, "sale {sale} is {state}"),
            Check::Outcome { action, expected } => write!(f, "action {action} is {expected}"),
            Check::HealthFactor { loan, cmp, value } => {
                write!(f, "health factor of {loan} {cmp} {}", value.to_decimal_string(4))
            }
            Check::Price { symbol, cmp, value } => write!(f, "price of {symbol} {cmp} {}", value.to_decimal_string(6)),
            Check::Pegged(b) => write!(f, "stablecoin pegged = {b}"),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Actor(a) => f.write_str(a),
            Target::Fixed(a) if *a == escrow_address() => f.write_str("escrow"),
            Target::Fixed(a) if *a == lending_pool_address() => f.write_str("pool"),
            Target::Fixed(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefKind {
    Deed,
    Sale,
    Loan,
}

fn perr(ctx: &str, msg: impl fmt::Display) -> CliError {
    CliError::Scenario(format!("{ctx}: {msg}"))
}

/// Key reader that rejects leftovers.
struct Fields<'a> {
    ctx: String,
    table: &'a Table,
    used: BTreeSet<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(ctx: String, table: &'a Table) -> Self {
        Fields { ctx, table, used: BTreeSet::new() }
    }

    fn err(&self, msg: impl fmt::Display) -> CliError {
        perr(&self.ctx, msg)
    }

    fn get(&mut self, key: &'a str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.insert(key);
        }
        v
    }

    fn opt_str(&mut self, key: &'a str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(self.err(format!("'{key}' must be a string, got {}", v.type_str()))),
        }
    }

    fn str(&mut self, key: &'a str) -> Result<String, CliError> {
        self.opt_str(key)?.ok_or_else(|| self.err(format!("missing '{key}'")))
    }

    fn opt_u128(&mut self, key: &'a str) -> Result<Option<u128>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u128)),
            Some(Value::String(s)) => {
                s.replace('_', "").parse().map(Some).map_err(|_| self.err(format!("'{key}' = '{s}' is not an amount")))
            }
            Some(v) => Err(self.err(format!("'{key}' must be a non-negative integer, got {v}"))),
        }
    }

    fn u128(&mut self, key: &'a str) -> Result<u128, CliError> {
        self.opt_u128(key)?.ok_or_else(|| self.err(format!("missing '{key}'")))
    }

    fn u64(&mut self, key: &'a str) -> Result<u64, CliError> {
        let v = self.u128(key)?;
        u64::try_from(v).map_err(|_| self.err(format!("'{key}' too large")))
    }

    fn f64(&mut self, key: &'a str) -> Result<f64, CliError> {
        match self.get(key) {
            Some(Value::Float(x)) => Ok(*x),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(Value::String(s)) => s.parse().map_err(|_| self.err(format!("'{key}' = '{s}' is not a number"))),
            Some(v) => Err(self.err(format!("'{key}' must be a number, got {v}"))),
            None => Err(self.err(format!("missing '{key}'"))),
        }
    }

    fn opt_rational(&mut self, key: &'a str) -> Result<Option<Rational>, CliError> {
        let text = match self.get(key) {
            None => return Ok(None),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Integer(i)) => i.to_string(),
            Some(Value::Float(x)) => x.to_string(),
            Some(v) => return Err(self.err(format!("'{key}' must be a number, got {v}"))),
        };
        text.parse().map(Some).map_err(|e| self.err(format!("'{key}': {e}")))
    }

    fn rational(&mut self, key: &'a str) -> Result<Rational, CliError> {
        self.opt_rational(key)?.ok_or_else(|| self.err(format!("missing '{key}'")))
    }

    fn opt_bool(&mut self, key: &'a str) -> Result<Option<bool>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(self.err(format!("'{key}' must be a boolean, got {v}"))),
        }
    }

    fn date(&mut self, key: &'a str) -> Result<NaiveDate, CliError> {
        let text = match self.get(key) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Datetime(d)) => d.to_string(),
            Some(v) => return Err(self.err(format!("'{key}' must be a date, got {v}"))),
            None => return Err(self.err(format!("missing '{key}'"))),
        };
        NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(|_| self.err(format!("'{key}' = '{text}' is not YYYY-MM-DD")))
    }

    fn target(&mut self, key: &'a str) -> Result<Target, CliError> {
        let s = self.str(key)?;
        parse_target(&s).map_err(|e| self.err(e))
    }

    fn cmp<T>(&mut self, parse: impl Fn(&mut Self, &'a str) -> Result<T, CliError>) -> Result<(Cmp, T), CliError> {
        let present: Vec<_> = Cmp::KEYS.iter().filter(|(k, _)| self.table.contains_key(*k)).collect();
        match present.as_slice() {
            [(k, c)] => Ok((*c, parse(self, k)?)),
            _ => Err(self.err("expected exactly one of eq, ne, lt, le, gt, ge")),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.table.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(perr(&self.ctx, format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

fn parse_target(s: &str) -> Result<Target, String> {
    match s {
        "escrow" => Ok(Target::Fixed(escrow_address())),
        "pool" => Ok(Target::Fixed(lending_pool_address())),
        _ if s.starts_with("0x") => s.parse().map(Target::Fixed).map_err(|e| format!("address '{s}': {e}")),
        _ => Ok(Target::Actor(s.to_string())),
    }
}

fn parse_tx(op: &str, f: &mut Fields<'_>) -> Result<TxOp, CliError> {
    Ok(match op {
        "transfer" => TxOp::Transfer { token: f.str("token")?, to: f.target("to")?, amount: f.u128("amount")? },
        "approve" => TxOp::Approve { token: f.str("token")?, spender: f.target("spender")?, amount: f.u128("amount")? },
        "stable_mint" => {
            let to = match f.opt_str("to")? {
                Some(s) => Some(parse_target(&s).map_err(|e| f.err(e))?),
                None => None,
            };
            TxOp::StableMint { to, amount: f.u128("amount")? }
        }
        "stable_redeem" => TxOp::StableRedeem { amount: f.u128("amount")?, burn_only: f.opt_bool("burn_only")?.unwrap_or(false) },
        "deed_mint" => {
            let metadata = PublicMetadata {
                square_footage: f.u64("sqft")?,
                bedrooms: u32::try_from(f.u64("bedrooms")?).map_err(|_| f.err("bedrooms too large"))?,
                last_renovation: f.date("last_renovation")?,
            };
            let private = match f.get("private") {
                None => BTreeMap::new(),
                Some(Value::Table(t)) => t
                    .iter()
                    .map(|(k, v)| match v {
                        Value::String(s) => Ok((k.clone(), s.clone())),
                        other => Ok((k.clone(), other.to_string())),
                    })
                    .collect::<Result<_, CliError>>()?,
                Some(v) => return Err(f.err(format!("'private' must be a table, got {v}"))),
            };
            TxOp::DeedMint { metadata, private }
        }
        "deed_transfer" => TxOp::DeedTransfer { deed: f.str("deed")?, to: f.target("to")? },
        "list" => TxOp::List {
            deed: f.str("deed")?,
            token: f.str("token")?,
            price: f.u128("price")?,
            attestation_kind: f.opt_str("attestation_kind")?.unwrap_or_default(),
        },
        "offer" => TxOp::Offer { sale: f.str("sale")?, price: f.u128("price")? },
        "fund" => TxOp::Fund { sale: f.str("sale")? },
        "settle" => TxOp::Settle { sale: f.str("sale")? },
        "cancel" => TxOp::Cancel { sale: f.str("sale")? },
        "covenant" => TxOp::Covenant { deed: f.str("deed")?, predicate: f.str("predicate")? },
        "open_loan" => TxOp::OpenLoan {
            collateral: f.str("collateral")?,
            amount: f.u128("amount")?,
            borrow: f.u128("borrow")?,
            rate: f.opt_rational("rate")?.unwrap_or_else(default_rate_per_block),
            threshold: f.rational("threshold")?,
        },
        "repay" => TxOp::Repay { loan: f.str("loan")?, amount: f.u128("amount")? },
        "liquidate" => TxOp::Liquidate { loan: f.str("loan")? },
        "attest" => {
            let oracle = f.str("oracle")?;
            let subject = f.str("subject")?;
            let payload = match f.str("kind")?.as_str() {
                "price" => AttestSpec::Price(f.rational("value")?),
                "legal-docs" => AttestSpec::LegalDocs(f.str("document")?),
                "spec" => AttestSpec::Spec(f.str("text")?),
                "reserve-haircut" => AttestSpec::ReserveHaircut(f.rational("value")?),
                other => return Err(f.err(format!("unknown attestation kind '{other}'"))),
            };
            TxOp::Attest { oracle, subject, payload }
        }
        "grant_access" => TxOp::GrantAccess { deed: f.str("deed")?, to: f.target("to")? },
        other => return Err(f.err(format!("unknown op '{other}'"))),
    })
}

fn parse_check(f: &mut Fields<'_>) -> Result<Check, CliError> {
    let check = f.str("check")?;
    Ok(match check.as_str() {
        "owner" => Check::Owner { deed: f.str("deed")?, actor: f.target("actor")? },
        "balance" => {
            let actor = f.target("actor")?;
            let token = f.str("token")?;
            let (cmp, value) = f.cmp(|f, k| f.u128(k))?;
            Check::Balance { actor, token, cmp, value }
        }
        "loan_state" => Check::LoanState { loan: f.str("loan")?, state: f.str("state")? },
        "sale_state" => Check::SaleState { sale: f.str("sale")?, state: f.str("state")? },
        "outcome" => Check::Outcome { action: f.str("action")?, expected: f.str("expected")? },
        "health_factor" => {
            let loan = f.str("loan")?;
            let (cmp, value) = f.cmp(|f, k| f.rational(k))?;
            Check::HealthFactor { loan, cmp, value }
        }
        "price" => {
            let symbol = f.str("symbol")?;
            let (cmp, value) = f.cmp(|f, k| f.rational(k))?;
            Check::Price { symbol, cmp, value }
        }
        "pegged" => Check::Pegged(f.opt_bool("value")?.unwrap_or(true)),
        other => return Err(f.err(format!("unknown check '{other}'"))),
    })
}

fn parse_action(i: usize, table: &Table) -> Result<Action, CliError> {
    let mut f = Fields::new(format!("action {}", i + 1), table);
    let op = f.str("op")?;
    let label = f.opt_str("label")?;
    let kind = match op.as_str() {
        "advance_ticks" => ActionKind::AdvanceTicks(f.opt_u128("n")?.unwrap_or(1) as u64),
        "inject_shock" => ActionKind::InjectShock {
            from: f.str("from")?,
            oracle: f.str("oracle")?,
            symbol: f.str("symbol")?,
            base_price: f.f64("base_price")?,
            event_pct: f.f64("event_pct")?,
            period_pct: f.f64("period_pct")?,
            horizon: f.u64("horizon")? as usize,
        },
        "expect" => ActionKind::Expect(parse_check(&mut f)?),
        _ => {
            let from = f.str("from")?;
            ActionKind::Tx { from, op: parse_tx(&op, &mut f)? }
        }
    };
    f.finish()?;
    Ok(Action { label, kind })
}

fn table_list<'a>(root: &'a Table, key: &str) -> Result<Vec<&'a Table>, CliError> {
    match root.get(key) {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_table().ok_or_else(|| perr(key, "entries must be tables")))
            .collect(),
        Some(_) => Err(perr(key, "must be an array of tables")),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| CliError::Scenario(e.to_string()))?;
        let mut f = Fields::new("scenario".into(), &root);
        match f.get("schema") {
            Some(Value::Integer(SCHEMA)) => {}
            Some(v) => return Err(f.err(format!("unsupported schema {v}"))),
            None => return Err(f.err("missing 'schema'")),
        }
        let name = f.str("name")?;
        let seed = f.opt_u128("seed")?.unwrap_or(0) as u64;
        let tokens = match f.get("tokens") {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| perr("tokens", "must be strings")))
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(f.err("'tokens' must be an array")),
        };
        let consensus = match f.get("consensus") {
            None => ConsensusSpec::default(),
            Some(v) => v.clone().try_into().map_err(|e: toml::de::Error| perr("consensus", e.message()))?,
        };
        f.get("oracles");
        f.get("actors");
        f.get("actions");
        let analytics = match f.get("analytics") {
            None => None,
            Some(Value::Table(t)) => Some(parse_analytics(t)?),
            Some(_) => return Err(f.err("'analytics' must be a table")),
        };
        f.finish()?;

        let mut oracles = Vec::new();
        for (i, t) in table_list(&root, "oracles")?.into_iter().enumerate() {
            let mut f = Fields::new(format!("oracle {}", i + 1), t);
            let id = f.str("id")?;
            let key = match f.opt_str("key")? {
                Some(k) => Some(hex::decode(k.trim_start_matches("0x")).map_err(|e| f.err(e))?),
                None => None,
            };
            f.finish()?;
            oracles.push((id, key));
        }
        let mut actors = Vec::new();
        for (i, t) in table_list(&root, "actors")?.into_iter().enumerate() {
            let mut f = Fields::new(format!("actor {}", i + 1), t);
            let name = f.str("name")?;
            let stake = f.opt_u128("stake")?.unwrap_or(0);
            let mut balances = BTreeMap::new();
            match f.get("balances") {
                None => {}
                Some(Value::Table(b)) => {
                    let mut bf = Fields::new(format!("actor {name} balances"), b);
                    for k in b.keys() {
                        balances.insert(k.clone(), bf.u128(k)?);
                    }
                }
                Some(_) => return Err(f.err("'balances' must be a table")),
            }
            f.finish()?;
            actors.push(Actor { name, balances, stake });
        }
        let actions = table_list(&root, "actions")?
            .into_iter()
            .enumerate()
            .map(|(i, t)| parse_action(i, t))
            .collect::<Result<Vec<_>, _>>()?;
        let s = Scenario { name, seed, consensus, tokens, oracles, actors, actions, analytics };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        let mut actors = BTreeSet::new();
        for a in &self.actors {
            if a.name.is_empty() || !actors.insert(a.name.as_str()) {
                return Err(perr("actors", format!("duplicate or empty name '{}'", a.name)));
            }
        }
        let oracles: BTreeSet<&str> = self.oracles.iter().map(|(id, _)| id.as_str()).collect();
        let actor_ok = |ctx: &str, t: &Target| match t {
            Target::Actor(n) if !actors.contains(n.as_str()) => Err(perr(ctx, format!("unknown actor '{n}'"))),
            _ => Ok(()),
        };
        let mut labels: BTreeMap<&str, Option<RefKind>> = BTreeMap::new();
        let resolve = |labels: &BTreeMap<&str, Option<RefKind>>, ctx: &str, kind: RefKind, name: &str| {
            match labels.get(name) {
                Some(Some(k)) if *k == kind => Ok(()),
                _ => Err(perr(ctx, format!("'{name}' is not an earlier {kind:?} label").to_lowercase())),
            }
        };
        for (i, a) in self.actions.iter().enumerate() {
            let ctx = format!("action {}", i + 1);
            match &a.kind {
                ActionKind::Tx { from, op } => {
                    actor_ok(&ctx, &Target::Actor(from.clone()))?;
                    for t in op.targets() {
                        actor_ok(&ctx, t)?;
                    }
                    for (k, name) in op.references() {
                        resolve(&labels, &ctx, k, name)?;
                    }
                    if let TxOp::Attest { oracle, .. } = op {
                        if !oracles.contains(oracle.as_str()) {
                            return Err(perr(&ctx, format!("unknown oracle '{oracle}'")));
                        }
                    }
                }
                ActionKind::InjectShock { from, oracle, horizon, .. } => {
                    actor_ok(&ctx, &Target::Actor(from.clone()))?;
                    if !oracles.contains(oracle.as_str()) {
                        return Err(perr(&ctx, format!("unknown oracle '{oracle}'")));
                    }
                    if *horizon < 2 {
                        return Err(perr(&ctx, "horizon must be at least 2"));
                    }
                }
                ActionKind::Expect(c) => match c {
                    Check::Owner { deed, actor } => {
                        resolve(&labels, &ctx, RefKind::Deed, deed)?;
                        actor_ok(&ctx, actor)?;
                    }
                    Check::Balance { actor, .. } => actor_ok(&ctx, actor)?,
                    Check::LoanState { loan, .. } | Check::HealthFactor { loan, .. } => {
                        resolve(&labels, &ctx, RefKind::Loan, loan)?
                    }
                    Check::SaleState { sale, .. } => resolve(&labels, &ctx, RefKind::Sale, sale)?,
                    Check::Outcome { action, .. } => {
                        if !labels.contains_key(action.as_str()) {
                            return Err(perr(&ctx, format!("'{action}' is not an earlier action label")));
                        }
                    }
                    Check::Price { .. } | Check::Pegged(_) => {}
                },
                ActionKind::AdvanceTicks(_) => {}
            }
            if let Some(l) = &a.label {
                let kind = match &a.kind {
                    ActionKind::Tx { op, .. } => op.defines(),
                    _ => None,
                };
                if labels.insert(l.as_str(), kind).is_some() {
                    return Err(perr(&ctx, format!("label '{l}' reused")));
                }
            }
        }
        Ok(())
    }
}

fn parse_analytics(t: &Table) -> Result<AnalyticsSpec, CliError> {
    let mut f = Fields::new("analytics".into(), t);
    let symbols = match f.get("symbols") {
        None => analyze::DEFAULT_SYMBOLS.iter().map(|s| s.to_string()).collect(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| perr("analytics", "symbols must be strings")))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(f.err("'symbols' must be an array")),
    };
    let range = match (t.contains_key("from"), t.contains_key("to")) {
        (false, false) => analyze::year_2022(),
        _ => (f.date("from")?, f.date("to")?),
    };
    let event_date = if t.contains_key("event_date") { f.date("event_date")? } else { analyze::ftx_event_date() };
    let window = match (t.contains_key("window_start"), t.contains_key("window_end")) {
        (false, false) => analyze::november_2022(),
        _ => (f.date("window_start")?, f.date("window_end")?),
    };
    f.finish()?;
    Ok(AnalyticsSpec { symbols, range, event_date, window })
}

/// Oracle key derived from the run seed when the file gives none.
pub fn oracle_key(seed: u64, id: &str) -> Vec<u8> {
    sha256_concat(&[b"deedchain/oracle-key", &seed.to_be_bytes(), id.as_bytes()]).0.to_vec()
}

fn salt(seed: u64, label: &str, field: &str) -> Digest {
    sha256_concat(&[b"deedchain/salt", &seed.to_be_bytes(), label.as_bytes(), &[0], field.as_bytes()])
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub data_dir: Option<std::path::PathBuf>,
}

pub fn genesis_for(s: &Scenario, seed: u64) -> Result<GenesisConfig, CliError> {
    let stakes: StakeTable = s.actors.iter().filter(|a| a.stake > 0).map(|a| (a.name.clone(), a.stake)).collect();
    let mut oracles = OracleRegistry::default();
    for (id, key) in &s.oracles {
        oracles.register(id.clone(), key.clone().unwrap_or_else(|| oracle_key(seed, id)));
    }
    let mut g = GenesisConfig {
        strategy: s.consensus.to_strategy(seed, &stakes)?,
        tokens: s.tokens.clone(),
        oracles,
        ..GenesisConfig::default()
    };
    for a in &s.actors {
        for (token, amount) in &a.balances {
            g.allocations.push((token.clone(), actor_address(&a.name), *amount));
        }
    }
    Ok(g)
}

struct Runner<'s> {
    scenario: &'s Scenario,
    seed: u64,
    chain: Chain,
    keys: BTreeMap<String, Vec<u8>>,
    wallets: BTreeMap<String, Wallet>,
    ids: BTreeMap<String, Digest>,
    /// Action label → action index.
    labelled: BTreeMap<String, usize>,
    pending: Vec<(usize, Digest)>,
    report: RunReport,
}

impl Runner<'_> {
    fn address(&self, t: &Target) -> Address {
        match t {
            Target::Actor(n) => actor_address(n),
            Target::Fixed(a) => *a,
        }
    }

    fn id(&self, label: &str) -> Digest {
        self.ids[label]
    }

    fn payload(&self, from: &str, label: Option<&str>, op: &TxOp, index: usize) -> Result<TxPayload, CliError> {
        Ok(match op {
            TxOp::Transfer { token, to, amount } => {
                TxPayload::TokenTransfer { token: token.clone(), to: self.address(to), amount: *amount }
            }
            TxOp::Approve { token, spender, amount } => {
                TxPayload::TokenApprove { token: token.clone(), spender: self.address(spender), amount: *amount }
            }
            TxOp::StableMint { to, amount } => TxPayload::StableMint {
                to: to.as_ref().map_or(actor_address(from), |t| self.address(t)),
                fiat_deposit: *amount,
            },
            TxOp::StableRedeem { amount, burn_only } => TxPayload::StableRedeem { amount: *amount, burn_only: *burn_only },
            TxOp::DeedMint { metadata, private } => {
                let tag = label.map_or_else(|| format!("#{index}"), str::to_string);
                let mut commitments = BTreeMap::new();
                for (field, value) in private {
                    let c = commit_field(field, value, salt(self.seed, &tag, field).as_bytes())
                        .map_err(|e| CliError::Scenario(e.to_string()))?;
                    commitments.insert(field.clone(), c.digest);
                }
                TxPayload::DeedMint { metadata: metadata.clone(), commitments }
            }
            TxOp::DeedTransfer { deed, to } => TxPayload::DeedTransfer { deed_id: self.id(deed), to: self.address(to) },
            TxOp::List { deed, token, price, attestation_kind } => TxPayload::List {
                deed_id: self.id(deed),
                token: token.clone(),
                ask_price: *price,
                attestation_kind: attestation_kind.clone(),
            },
            TxOp::Offer { sale, price } => TxPayload::Offer { sale_id: self.id(sale), offer_price: *price },
            TxOp::Fund { sale } => TxPayload::FundEscrow { sale_id: self.id(sale) },
            TxOp::Settle { sale } => TxPayload::Settle { sale_id: self.id(sale) },
            TxOp::Cancel { sale } => TxPayload::Cancel { sale_id: self.id(sale) },
            TxOp::Covenant { deed, predicate } => {
                TxPayload::AttachCovenant { deed_id: self.id(deed), predicate: predicate.clone() }
            }
            TxOp::OpenLoan { collateral, amount, borrow, rate, threshold } => TxPayload::OpenLoan {
                collateral_token: collateral.clone(),
                collateral_amount: *amount,
                borrow_amount: *borrow,
                rate_per_block: rate.clone(),
                liquidation_threshold: threshold.clone(),
            },
            TxOp::Repay { loan, amount } => TxPayload::Repay { loan_id: self.id(loan), amount: *amount },
            TxOp::Liquidate { loan } => TxPayload::Liquidate { loan_id: self.id(loan) },
            TxOp::Attest { oracle, subject, payload } => {
                let subject = match self.ids.get(subject) {
                    Some(d) => d.to_hex(),
                    None => subject.clone(),
                };
                let payload = match payload {
                    AttestSpec::Price(p) => AttestPayload::Price(p.clone()),
                    AttestSpec::LegalDocs(doc) => AttestPayload::LegalDocs(sha256(doc.as_bytes())),
                    AttestSpec::Spec(t) => AttestPayload::Spec(t.clone()),
                    AttestSpec::ReserveHaircut(f) => AttestPayload::ReserveHaircut(f.clone()),
                };
                let att = Attestation::sign(&self.keys[oracle], oracle, &subject, payload, self.chain.tick() + 1);
                TxPayload::Attest { attestation: att }
            }
            TxOp::GrantAccess { deed, to } => TxPayload::GrantAccess { deed_id: self.id(deed), grantee: self.address(to) },
        })
    }

    fn submit(&mut self, index: usize, from: &str, payload: TxPayload) -> Digest {
        let wallet = self.wallets.get_mut(from).expect("validated actor");
        let tx = wallet.tx(payload);
        let id = tx.tx_id();
        self.chain.submit(tx);
        self.pending.push((index, id));
        id
    }

    fn absorb(&mut self, report: &BlockReport) {
        let mut still = Vec::new();
        for (index, tx_id) in std::mem::take(&mut self.pending) {
            let outcome = if report.receipts.iter().any(|r| r.tx_id == tx_id) {
                Some(format!("accepted at height {}", report.height))
            } else {
                report
                    .rejections
                    .iter()
                    .find(|r| r.tx_id == tx_id)
                    .map(|r| format!("rejected {}: {}", r.error.code(), r.error))
            };
            match outcome {
                Some(o) => {
                    if let Some(rec) = self.report.actions.iter_mut().find(|a| a.index == index && a.tx_id == Some(tx_id)) {
                        rec.outcome = o;
                    }
                }
                None => still.push((index, tx_id)),
            }
        }
        self.pending = still;
    }

    fn produce(&mut self) -> Result<(), CliError> {
        let r = self.chain.produce_block()?;
        self.absorb(&r);
        Ok(())
    }

    fn record(&mut self, index: usize, op: &str, label: Option<&str>, tx_id: Option<Digest>, outcome: String) {
        self.report.actions.push(ActionRecord {
            index,
            op: op.to_string(),
            label: label.unwrap_or("").to_string(),
            tx_id,
            outcome,
        });
    }

    fn step(&mut self, index: usize, action: &Action) {
        let label = action.label.as_deref();
        match &action.kind {
            ActionKind::Tx { from, op } => match self.payload(from, label, op, index) {
                Ok(payload) => {
                    let id = self.submit(index, from, payload);
                    if let (Some(l), Some(kind)) = (label, op.defines()) {
                        let derived = match kind {
                            RefKind::Deed => deed_id_for(&id),
                            RefKind::Sale => sale_id_for(&id),
                            RefKind::Loan => loan_id_for(&id),
                        };
                        self.ids.insert(l.to_string(), derived);
                    }
                    if let Some(l) = label {
                        self.labelled.insert(l.to_string(), index);
                    }
                    self.record(index, op.name(), label, Some(id), "pending".into());
                }
                Err(e) => self.record(index, op.name(), label, None, format!("error: {e}")),
            },
            ActionKind::AdvanceTicks(n) => {
                let mut outcome = format!("{n} block(s)");
                for _ in 0..*n {
                    if let Err(e) = self.produce() {
                        outcome = format!("error: {e}");
                        break;
                    }
                }
                self.record(index, "advance_ticks", label, None, outcome);
            }
            ActionKind::InjectShock { from, oracle, symbol, base_price, event_pct, period_pct, horizon } => {
                let outcome = self.shock(index, from, oracle, symbol, *base_price, *event_pct, *period_pct, *horizon);
                let outcome = match outcome {
                    Ok(()) => format!("{} block(s)", horizon + 1),
                    Err(e) => format!("error: {e}"),
                };
                self.record(index, "inject_shock", label, None, outcome);
            }
            ActionKind::Expect(check) => {
                let (passed, detail) = self.evaluate(check);
                self.report.assertions.push(AssertionRecord { index, check: check.to_string(), passed, detail });
                let outcome = if passed { "pass" } else { "FAIL" };
                self.record(index, "expect", label, None, outcome.into());
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn shock(
        &mut self,
        index: usize,
        from: &str,
        oracle: &str,
        symbol: &str,
        base: f64,
        event_pct: f64,
        period_pct: f64,
        horizon: usize,
    ) -> Result<(), CliError> {
        let path = shock_path(base, event_pct, period_pct, horizon)?;
        for (k, price) in path.iter().enumerate() {
            let p = Rational::from_f64_approx(*price).map_err(|e| CliError::Scenario(e.to_string()))?;
            let tick = self.chain.tick() + 1;
            let att = Attestation::sign(&self.keys[oracle], oracle, symbol, AttestPayload::Price(p.clone()), tick);
            let tx_id = self.submit(index, from, TxPayload::Attest { attestation: att });
            let r = self.chain.produce_block()?;
            if let Some(rej) = r.rejections.iter().find(|r| r.tx_id == tx_id) {
                return Err(CliError::Scenario(format!("shock price at step {k} rejected: {}", rej.error)));
            }
            self.pending.retain(|(_, t)| *t != tx_id);
            self.absorb(&r);
            self.report.shocks.push(ShockRow { symbol: symbol.to_string(), step: k, tick, price: p });
        }
        Ok(())
    }

    fn evaluate(&self, check: &Check) -> (bool, String) {
        let st = self.chain.state();
        match check {
            Check::Owner { deed, actor } => {
                let owner = st.deeds.owner(&self.id(deed));
                let want = self.address(actor);
                (owner == Some(want), format!("owner {}", owner.map_or("none".into(), |o| self.name_of(&o))))
            }
            Check::Balance { actor, token, cmp, value } => {
                let b = st.balance(token, &self.address(actor));
                (cmp.holds(&b, value), format!("balance {b}"))
            }
            Check::LoanState { loan, state } => match st.loans.get(&self.id(loan)) {
                Some(l) => (l.state.name().eq_ignore_ascii_case(state), format!("state {}", l.state.name())),
                None => (false, "loan not opened".into()),
            },
            Check::SaleState { sale, state } => match st.sales.get(&self.id(sale)) {
                Some(s) => (s.state.name().eq_ignore_ascii_case(state), format!("state {}", s.state.name())),
                None => (false, "sale not listed".into()),
            },
            Check::Outcome { action, expected } => {
                let index = self.labelled.get(action);
                let rec = index.and_then(|i| self.report.actions.iter().find(|a| a.index == *i));
                match rec {
                    Some(r) => {
                        let ok = if expected == "accepted" {
                            r.outcome.starts_with("accepted")
                        } else {
                            r.outcome.starts_with(&format!("rejected {expected}:"))
                        };
                        (ok, r.outcome.clone())
                    }
                    None => (false, "no such action".into()),
                }
            }
            Check::HealthFactor { loan, cmp, value } => match health(st, &self.id(loan)) {
                Ok(hf) => (cmp.holds(&hf, value), format!("health factor {}", hf.to_decimal_string(4))),
                Err(e) => (false, e),
            },
            Check::Price { symbol, cmp, value } => match st.feed.latest_price(symbol, st.tick, st.params.staleness_bound) {
                Ok(p) => (cmp.holds(&p, value), format!("price {}", p.to_decimal_string(6))),
                Err(e) => (false, e.to_string()),
            },
            Check::Pegged(want) => {
                let pegged = !st.stable.backing_suspended;
                (pegged == *want, format!("implied price {}", st.stable.implied_price().to_decimal_string(6)))
            }
        }
    }

    fn name_of(&self, a: &Address) -> String {
        self.scenario
            .actors
            .iter()
            .find(|x| actor_address(&x.name) == *a)
            .map_or_else(|| a.short(), |x| x.name.clone())
    }

    fn summary(&self) -> Summary {
        let st = self.chain.state();
        let mut balances = Vec::new();
        for a in &self.scenario.actors {
            let addr = actor_address(&a.name);
            for token in st.token_symbols() {
                balances.push((a.name.clone(), token.clone(), st.balance(&token, &addr)));
            }
        }
        let mut deeds = Vec::new();
        let mut sales = Vec::new();
        let mut loans = Vec::new();
        for (label, id) in &self.ids {
            if let Some(owner) = st.deeds.owner(id) {
                deeds.push((label.clone(), *id, self.name_of(&owner)));
            } else if let Some(s) = st.sales.get(id) {
                sales.push((label.clone(), s.state.name().to_string()));
            } else if let Some(l) = st.loans.get(id) {
                let hf = match l.state {
                    LoanState::Active => health(st, id).map_or_else(|e| e, |h| h.to_decimal_string(4)),
                    _ => "-".into(),
                };
                loans.push((label.clone(), l.state.name().to_string(), l.debt_at(st.tick), hf));
            }
        }
        Summary {
            height: self.chain.height(),
            tick: self.chain.tick(),
            tip_hash: self.chain.tip().hash(),
            state_root: st.state_root(),
            base_fee: st.fee.base_fee,
            balances,
            deeds,
            sales,
            loans,
            fee_token_supply: st.token(FEE_TOKEN).map_or(0, |t| t.total_supply),
        }
    }
}

fn health(st: &ChainState, id: &Digest) -> Result<Rational, String> {
    let loan = st.loans.get(id).ok_or("loan not opened")?;
    let price = st.feed.latest_price(&loan.collateral_token, st.tick, st.params.staleness_bound).map_err(|e| e.to_string())?;
    loan.health_factor(&price, st.tick).map_err(|e| e.to_string())
}

/// Runs every action in order; per-action failures are recorded in the
/// report rather than aborting the run.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<(RunReport, Chain), CliError> {
    let seed = opts.seed.unwrap_or(s.seed);
    let genesis = genesis_for(s, seed)?;
    let keys = s
        .oracles
        .iter()
        .map(|(id, k)| (id.clone(), k.clone().unwrap_or_else(|| oracle_key(seed, id))))
        .collect();
    let chain = Chain::new(genesis)?;
    let wallets = s.actors.iter().map(|a| (a.name.clone(), Wallet::named(&a.name))).collect();
    let mut runner = Runner {
        scenario: s,
        seed,
        chain,
        keys,
        wallets,
        ids: BTreeMap::new(),
        labelled: BTreeMap::new(),
        pending: Vec::new(),
        report: RunReport {
            name: s.name.clone(),
            seed,
            strategy: s.consensus.strategy.clone(),
            ..RunReport::default()
        },
    };
    for (i, a) in s.actions.iter().enumerate() {
        runner.step(i + 1, a);
    }
    runner.report.summary = runner.summary();
    if let Some(spec) = &s.analytics {
        runner.report.analytics = Some(run_analytics(spec, opts.data_dir.as_deref()));
    }
    Ok((runner.report, runner.chain))
}

fn run_analytics(spec: &AnalyticsSpec, dir: Option<&std::path::Path>) -> AnalyticsOutput {
    let Some(dir) = dir else {
        return AnalyticsOutput { error: Some("no data directory".into()), ..AnalyticsOutput::default() };
    };
    let symbols: Vec<&str> = spec.symbols.iter().map(String::as_str).collect();
    let result = (|| -> Result<AnalyticsOutput, CliError> {
        let series = analyze::load_symbols(dir, &symbols)?;
        Ok(AnalyticsOutput {
            volatilities: analyze::volatilities(&series, spec.range)?,
            correlations: Some(analyze::correlations(&series, spec.range)?),
            events: Some(analyze::events(&series, spec.event_date, spec.window)?),
            error: None,
        })
    })();
    result.unwrap_or_else(|e| AnalyticsOutput { error: Some(e.to_string()), ..AnalyticsOutput::default() })
}

pub const SALE_HAPPY_PATH: &str = include_str!("../scenarios/sale_happy_path.toml");
pub const FTX_STRESS: &str = include_str!("../scenarios/ftx_stress.toml");

/// Bundled scenario text by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "sale_happy_path" => Some(SALE_HAPPY_PATH),
        "ftx_stress" => Some(FTX_STRESS),
        _ => None,
    }
}
