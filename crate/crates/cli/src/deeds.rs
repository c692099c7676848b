//! Deed metadata CSV: `deed_id,sqft,bedrooms,last_renovation,owner`, the
//! `deed_id` column optional. Rows without an id are minted by the named
//! owner; rows whose id already exists on chain are checked and skipped.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use deedchain_core::assets::{deed_id_for, PublicMetadata};
use deedchain_core::chain::Chain;
use deedchain_core::state::ChainState;
use deedchain_core::wallet::Wallet;
use deedchain_core::{Digest, TxPayload};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeedRow {
    pub deed_id: Option<Digest>,
    pub metadata: PublicMetadata,
    pub owner: String,
}

fn row_err(line: u64, reason: impl Into<String>) -> CliError {
    CliError::Parse { line, reason: reason.into() }
}

pub fn parse_deeds(input: impl Read) -> Result<Vec<DeedRow>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let need = |name: &str| col(name).ok_or_else(|| row_err(1, format!("missing column '{name}'")));
    let (sqft, beds, reno, owner) = (need("sqft")?, need("bedrooms")?, need("last_renovation")?, need("owner")?);
    let id_col = col("deed_id");
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| row_err(line, e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let deed_id = match id_col.map(field).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse().map_err(|e| row_err(line, format!("deed_id: {e}")))?),
            None => None,
        };
        let metadata = PublicMetadata {
            square_footage: field(sqft).parse().map_err(|_| row_err(line, format!("sqft '{}'", field(sqft))))?,
            bedrooms: field(beds).parse().map_err(|_| row_err(line, format!("bedrooms '{}'", field(beds))))?,
            last_renovation: NaiveDate::parse_from_str(field(reno), "%Y-%m-%d")
                .map_err(|_| row_err(line, format!("last_renovation '{}'", field(reno))))?,
        };
        let owner = field(owner).to_string();
        if owner.is_empty() {
            return Err(row_err(line, "empty owner"));
        }
        rows.push(DeedRow { deed_id, metadata, owner });
    }
    Ok(rows)
}

/// Every deed on chain in import format, owners as addresses.
pub fn export_deeds(state: &ChainState) -> String {
    let mut out = String::from("deed_id,sqft,bedrooms,last_renovation,owner\n");
    for d in state.deeds.iter() {
        let m = &d.public_metadata;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            d.deed_id, m.square_footage, m.bedrooms, m.last_renovation, d.owner
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOutcome {
    Minted(Digest),
    Existing(Digest),
    Rejected(String),
}

/// Submits one mint per new row and seals them into a single block.
pub fn import_deeds(chain: &mut Chain, rows: &[DeedRow]) -> Result<Vec<RowOutcome>, CliError> {
    let mut wallets: BTreeMap<String, Wallet> = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    let mut submitted = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if let Some(id) = row.deed_id {
            let deed = chain.state().deeds.get(&id).ok_or_else(|| row_err(i as u64 + 2, format!("unknown deed {id}")))?;
            if deed.public_metadata != row.metadata {
                return Err(row_err(i as u64 + 2, format!("metadata differs from deed {id}")));
            }
            out.push(RowOutcome::Existing(id));
            continue;
        }
        let w = wallets.entry(row.owner.clone()).or_insert_with(|| {
            let mut w = Wallet::named(&row.owner);
            w.next_nonce = chain.state().nonces.get(&w.address).map_or(1, |n| n + 1);
            w
        });
        let tx = w.tx(TxPayload::DeedMint { metadata: row.metadata.clone(), commitments: BTreeMap::new() });
        submitted.push((i, tx.tx_id()));
        out.push(RowOutcome::Minted(deed_id_for(&tx.tx_id())));
        chain.submit(tx);
    }
    if !submitted.is_empty() {
        let report = chain.produce_block()?;
        for (i, tx_id) in submitted {
            if let Some(r) = report.rejections.iter().find(|r| r.tx_id == tx_id) {
                out[i] = RowOutcome::Rejected(format!("{}: {}", r.error.code(), r.error));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_id_column() {
        let rows = parse_deeds("sqft,bedrooms,last_renovation,owner\n1200,3,2019-06-01,alice\n".as_bytes()).unwrap();
        assert_eq!(rows[0].deed_id, None);
        assert_eq!(rows[0].metadata.square_footage, 1200);
        let id = "ab".repeat(32);
        let text = format!("deed_id,sqft,bedrooms,last_renovation,owner\n{id},900,2,2001-01-31,bob\n,1,1,2000-01-01,c\n");
        let rows = parse_deeds(text.as_bytes()).unwrap();
        assert_eq!(rows[0].deed_id.unwrap().to_hex(), id);
        assert_eq!(rows[1].deed_id, None);
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(parse_deeds("sqft,owner\n".as_bytes()), Err(CliError::Parse { line: 1, .. })));
        let bad_date = "sqft,bedrooms,last_renovation,owner\n1,1,2019-13-01,a\n";
        assert!(matches!(parse_deeds(bad_date.as_bytes()), Err(CliError::Parse { line: 2, .. })));
        let no_owner = "sqft,bedrooms,last_renovation,owner\n1,1,2019-01-01,\n";
        assert!(parse_deeds(no_owner.as_bytes()).is_err());
    }
}
