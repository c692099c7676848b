//! `deedchain.toml`:
//!
//! ```toml
//! data_dir = "data"          # price CSVs; DEEDCHAIN_DATA_DIR overrides
//! chain = "chain.dcl"        # chain file for `chain` and `ingest`
//! oracles = "oracles.csv"    # oracle_id,hex_key lines
//! tokens = ["DOGE"]          # fungible tokens besides DCT and USDS
//!
//! [consensus]
//! strategy = "pow"           # pow | pow-memory | pos | quorum
//! difficulty = 8
//! memory_cost = 32           # pow-memory only
//! stakes = { a = 1, b = 3 }  # pos only
//! validators = ["v0", "v1"]  # quorum only
//! threshold = "4/5"
//!
//! [balances.alice]           # actor name or 0x address
//! DCT = 1000000000000
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use deedchain_core::consensus::{QuorumConfig, StakeTable, Strategy, WorkParams};
use deedchain_core::oracle::OracleRegistry;
use deedchain_core::primitives::sha256_concat;
use deedchain_core::state::GenesisConfig;
use deedchain_core::wallet::actor_address;
use deedchain_core::Address;
use serde::Deserialize;

use crate::CliError;

pub const DATA_DIR_ENV: &str = "DEEDCHAIN_DATA_DIR";
pub const DEFAULT_CONFIG: &str = "deedchain.toml";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusSpec {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    pub difficulty: Option<u8>,
    pub memory_cost: Option<u32>,
    #[serde(default)]
    pub stakes: BTreeMap<String, u128>,
    #[serde(default)]
    pub validators: Vec<String>,
    pub threshold: Option<String>,
}

fn default_strategy() -> String {
    "pow".into()
}

impl Default for ConsensusSpec {
    fn default() -> Self {
        ConsensusSpec {
            strategy: default_strategy(),
            difficulty: None,
            memory_cost: None,
            stakes: BTreeMap::new(),
            validators: Vec::new(),
            threshold: None,
        }
    }
}

/// Quorum signing key for `id`, derived from the run seed.
pub fn validator_key(seed: u64, id: &str) -> Vec<u8> {
    sha256_concat(&[b"deedchain/validator-key", &seed.to_be_bytes(), id.as_bytes()]).0.to_vec()
}

impl ConsensusSpec {
    pub fn to_strategy(&self, seed: u64, extra_stakes: &StakeTable) -> Result<Strategy, CliError> {
        let bad = |m: String| CliError::Config(m);
        match self.strategy.as_str() {
            "pow" => Ok(Strategy::Work(WorkParams::plain(self.difficulty.unwrap_or(8)))),
            "pow-memory" => Ok(Strategy::Work(WorkParams::memory_mixed(
                self.difficulty.unwrap_or(6),
                self.memory_cost.unwrap_or(32),
            ))),
            "pos" => {
                let mut stakes = self.stakes.clone();
                for (k, v) in extra_stakes {
                    *stakes.entry(k.clone()).or_default() += v;
                }
                if stakes.values().all(|s| *s == 0) {
                    return Err(bad("pos needs at least one nonzero stake".into()));
                }
                Ok(Strategy::Stake(stakes))
            }
            "quorum" => {
                if self.validators.is_empty() {
                    return Err(bad("quorum needs validators".into()));
                }
                let mut q = QuorumConfig::new(self.validators.iter().map(|v| (v.clone(), validator_key(seed, v))).collect());
                if let Some(t) = &self.threshold {
                    let (n, d) = t.split_once('/').ok_or_else(|| bad(format!("threshold '{t}' is not n/d")))?;
                    q.threshold_num = n.trim().parse().map_err(|_| bad(format!("threshold '{t}'")))?;
                    q.threshold_den = d.trim().parse().map_err(|_| bad(format!("threshold '{t}'")))?;
                }
                q.validate().map_err(|e| bad(e.to_string()))?;
                Ok(Strategy::Quorum(q))
            }
            other => Err(bad(format!("unknown consensus strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data_dir: Option<PathBuf>,
    pub chain: Option<PathBuf>,
    pub oracles: Option<PathBuf>,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub consensus: ConsensusSpec,
    #[serde(default)]
    pub balances: BTreeMap<String, BTreeMap<String, u128>>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Actor name, or a `0x`-prefixed 64-digit hex address.
pub fn resolve_address(name: &str) -> Result<Address, CliError> {
    match name.strip_prefix("0x") {
        Some(_) => name.parse().map_err(|e| CliError::Config(format!("address '{name}': {e}"))),
        None => Ok(actor_address(name)),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Explicit path, else `deedchain.toml` in the working directory if
    /// present, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
            None => return Ok(Config::default()),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn rel(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Flag, then `DEEDCHAIN_DATA_DIR`, then the config file.
    pub fn data_dir(&self, flag: Option<&Path>) -> Option<PathBuf> {
        if let Some(f) = flag {
            return Some(f.to_path_buf());
        }
        if let Some(v) = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
            return Some(PathBuf::from(v));
        }
        self.data_dir.as_deref().map(|p| self.rel(p))
    }

    pub fn chain_path(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(f) => f.to_path_buf(),
            None => self.rel(self.chain.as_deref().unwrap_or(Path::new("chain.dcl"))),
        }
    }

    pub fn genesis(&self) -> Result<GenesisConfig, CliError> {
        let oracles = match &self.oracles {
            Some(p) => {
                let p = self.rel(p);
                let text = std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                OracleRegistry::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => OracleRegistry::default(),
        };
        let mut g = GenesisConfig {
            strategy: self.consensus.to_strategy(0, &StakeTable::new())?,
            tokens: self.tokens.clone(),
            oracles,
            ..GenesisConfig::default()
        };
        for (who, balances) in &self.balances {
            let addr = resolve_address(who)?;
            for (token, amount) in balances {
                g.allocations.push((token.clone(), addr, *amount));
            }
        }
        Ok(g)
    }
}
