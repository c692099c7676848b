use std::fmt::Write;
use std::str::FromStr;

use deedchain_analytics::{CorrelationMatrix, EventReport};
use deedchain_core::{Digest, Rational};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRecord {
    pub index: usize,
    pub op: String,
    pub label: String,
    pub tx_id: Option<Digest>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionRecord {
    pub index: usize,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShockRow {
    pub symbol: String,
    pub step: usize,
    pub tick: u64,
    pub price: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub height: u64,
    pub tick: u64,
    pub tip_hash: Digest,
    pub state_root: Digest,
    pub base_fee: u128,
    pub fee_token_supply: u128,
    /// (actor, token, amount)
    pub balances: Vec<(String, String, u128)>,
    /// (label, id, owner)
    pub deeds: Vec<(String, Digest, String)>,
    /// (label, state)
    pub sales: Vec<(String, String)>,
    /// (label, state, debt, health factor)
    pub loans: Vec<(String, String, u128, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalyticsOutput {
    pub volatilities: Vec<(String, f64)>,
    pub correlations: Option<CorrelationMatrix>,
    pub events: Option<EventReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub strategy: String,
    pub actions: Vec<ActionRecord>,
    pub assertions: Vec<AssertionRecord>,
    pub shocks: Vec<ShockRow>,
    pub summary: Summary,
    pub analytics: Option<AnalyticsOutput>,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.assertions.iter().filter(|a| !a.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::UnknownFormat(other.to_string())),
        }
    }
}

/// Output files as `(file name, contents)`.
pub fn render_report(r: &RunReport, format: Format) -> Vec<(String, String)> {
    match format {
        Format::Text => vec![("report.txt".into(), render_text(r))],
        Format::Csv => render_csv(r),
    }
}

fn width<'a>(items: impl Iterator<Item = &'a str>, min: usize) -> usize {
    items.map(str::len).max().unwrap_or(0).max(min)
}

pub fn render_text(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {}, {})", r.name, r.seed, r.strategy);
    let _ = writeln!(s);
    if !r.actions.is_empty() {
        let op_w = width(r.actions.iter().map(|a| a.op.as_str()), 2);
        let label_w = width(r.actions.iter().map(|a| a.label.as_str()), 5);
        let _ = writeln!(s, "{:>4}  {:<op_w$}  {:<label_w$}  outcome", "#", "op", "label");
        for a in &r.actions {
            let _ = writeln!(s, "{:>4}  {:<op_w$}  {:<label_w$}  {}", a.index, a.op, a.label, a.outcome);
        }
        let _ = writeln!(s);
    }
    if !r.shocks.is_empty() {
        let _ = writeln!(s, "{:<8} {:>5} {:>6} {:>16}", "shock", "step", "tick", "price");
        for x in &r.shocks {
            let _ = writeln!(s, "{:<8} {:>5} {:>6} {:>16}", x.symbol, x.step, x.tick, x.price.to_decimal_string(6));
        }
        let _ = writeln!(s);
    }
    let m = &r.summary;
    let _ = writeln!(s, "height      {}", m.height);
    let _ = writeln!(s, "tick        {}", m.tick);
    let _ = writeln!(s, "tip         {}", m.tip_hash);
    let _ = writeln!(s, "state root  {}", m.state_root);
    let _ = writeln!(s, "base fee    {}", m.base_fee);
    let _ = writeln!(s, "DCT supply  {}", m.fee_token_supply);
    let _ = writeln!(s);
    let who_w = width(m.balances.iter().map(|b| b.0.as_str()), 5);
    let _ = writeln!(s, "{:<who_w$}  {:<6}  {:>24}", "actor", "token", "balance");
    for (who, token, amount) in &m.balances {
        let _ = writeln!(s, "{who:<who_w$}  {token:<6}  {amount:>24}");
    }
    for (label, id, owner) in &m.deeds {
        let _ = writeln!(s, "deed {label} {} owned by {owner}", id.to_hex());
    }
    for (label, state) in &m.sales {
        let _ = writeln!(s, "sale {label} {state}");
    }
    for (label, state, debt, hf) in &m.loans {
        let _ = writeln!(s, "loan {label} {state} debt {debt} health {hf}");
    }
    if let Some(a) = &r.analytics {
        let _ = writeln!(s);
        match &a.error {
            Some(e) => {
                let _ = writeln!(s, "analytics unavailable: {e}");
            }
            None => {
                for (sym, v) in &a.volatilities {
                    let _ = writeln!(s, "volatility {sym:<6} {v:>8.2}%");
                }
                if let Some(c) = &a.correlations {
                    s.push_str(&c.to_csv());
                }
                if let Some(e) = &a.events {
                    s.push_str(&e.to_table());
                }
            }
        }
    }
    let _ = writeln!(s);
    for x in &r.assertions {
        let _ = writeln!(s, "{} #{} {} ({})", if x.passed { "PASS" } else { "FAIL" }, x.index, x.check, x.detail);
    }
    let _ = writeln!(s, "{} of {} assertions passed", r.assertions.len() - r.failures(), r.assertions.len());
    s
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn render_csv(r: &RunReport) -> Vec<(String, String)> {
    let mut actions = String::from("index,op,label,tx_id,outcome\n");
    for a in &r.actions {
        let tx = a.tx_id.map(|d| d.to_hex()).unwrap_or_default();
        let _ = writeln!(actions, "{},{},{},{},{}", a.index, a.op, csv_field(&a.label), tx, csv_field(&a.outcome));
    }
    let mut assertions = String::from("index,check,passed,detail\n");
    for x in &r.assertions {
        let _ = writeln!(assertions, "{},{},{},{}", x.index, csv_field(&x.check), x.passed, csv_field(&x.detail));
    }
    let mut balances = String::from("actor,token,balance\n");
    for (who, token, amount) in &r.summary.balances {
        let _ = writeln!(balances, "{},{},{amount}", csv_field(who), csv_field(token));
    }
    let mut shocks = String::from("symbol,step,tick,price\n");
    for x in &r.shocks {
        let _ = writeln!(shocks, "{},{},{},{}", x.symbol, x.step, x.tick, x.price.to_decimal_string(9));
    }
    let analytics = r.analytics.as_ref();
    let events = analytics
        .and_then(|a| a.events.as_ref())
        .map(EventReport::to_csv)
        .unwrap_or_else(|| "symbol,event_date,event_day_pct,window_start,window_end,period_pct\n".into());
    let correlations =
        analytics.and_then(|a| a.correlations.as_ref()).map(CorrelationMatrix::to_csv).unwrap_or_else(|| "symbol\n".into());
    vec![
        ("actions.csv".into(), actions),
        ("assertions.csv".into(), assertions),
        ("balances.csv".into(), balances),
        ("shocks.csv".into(), shocks),
        ("events.csv".into(), events),
        ("correlations.csv".into(), correlations),
    ]
}
