use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deedchain::analyze;
use deedchain::config::Config;
use deedchain::deeds::{export_deeds, import_deeds, parse_deeds, RowOutcome};
use deedchain::scenario::bundled;
use deedchain::{render_report, run_scenario, CliError, Format, RunOptions, Scenario};
use deedchain_analytics::{load_series, standardize};
use deedchain_core::chain::{validate_chain, Chain};
use deedchain_core::gas::{compare_costs, PropyParams};
use deedchain_core::persist::read_chain;

#[derive(Parser)]
#[command(name = "deedchain", version, about = "Deed tokenization ledger laboratory")]
struct Cli {
    /// Config file (default: ./deedchain.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create, inspect or verify a chain file.
    Chain {
        #[command(subcommand)]
        action: ChainCmd,
    },
    /// Run scenario scripts.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCmd,
    },
    /// Price-series analytics over a data directory.
    Analyze {
        what: AnalyzeKind,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Event day for `event`.
        #[arg(long, default_value = "2022-11-11")]
        event_date: String,
        /// `start,end`: the sample for vol/corr, the change window for event.
        #[arg(long)]
        window: Option<String>,
        /// Comma-separated symbols.
        #[arg(long, default_value = "BTC,DOGE,ETH,USDT,XRP,GSPC")]
        symbols: String,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Transaction cost comparison.
    Costs {
        #[command(subcommand)]
        action: CostsCmd,
    },
    /// Validate price CSVs (copied into the data directory when one is
    /// configured) or import deed CSVs into the chain.
    Ingest {
        files: Vec<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        chain: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ChainCmd {
    Init {
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    Show {
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Print deeds as CSV instead of blocks.
        #[arg(long)]
        deeds: bool,
    },
    Verify {
        #[arg(long)]
        chain: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a scenario file, or `sale_happy_path` / `ftx_stress`.
    Run {
        file: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the report and chain file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CostsCmd {
    Compare {
        #[arg(long)]
        price: f64,
        #[arg(long, default_value_t = 0.055)]
        commission_rate: f64,
        #[arg(long, default_value_t = 2.99)]
        pro_price: f64,
        #[arg(long, default_value_t = 100.0)]
        pro_units: f64,
        #[arg(long, default_value_t = 0.0)]
        pgas: f64,
        #[arg(long, default_value_t = 150_000)]
        gas: u64,
        /// Fee-token units per gas.
        #[arg(long, default_value_t = 1e-6)]
        base_fee: f64,
        /// Fiat per fee-token unit.
        #[arg(long, default_value_t = 1.0)]
        token_price: f64,
        /// Write CSV here as well as printing the table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeKind {
    Vol,
    Corr,
    Event,
    Standardize,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn chain_cmd(cfg: &Config, action: ChainCmd) -> Result<bool, CliError> {
    match action {
        ChainCmd::Init { chain, force } => {
            let path = cfg.chain_path(chain.as_deref());
            if path.exists() && !force {
                return Err(CliError::Usage(format!("{} exists; pass --force to overwrite", path.display())));
            }
            let c = Chain::create(&path, cfg.genesis()?)?;
            println!("created {} genesis {}", path.display(), c.tip().hash());
        }
        ChainCmd::Show { chain, deeds } => {
            let path = cfg.chain_path(chain.as_deref());
            let c = Chain::open(&path)?;
            if deeds {
                print!("{}", export_deeds(c.state()));
                return Ok(true);
            }
            println!("{:>6}  {:<64}  {:>4}  {:>12}", "height", "hash", "txs", "base fee");
            for b in c.blocks() {
                println!("{:>6}  {}  {:>4}  {:>12}", b.header.height, b.hash(), b.txs.len(), b.header.base_fee);
            }
            println!("strategy {}, tick {}, state root {}", c.config().strategy.name(), c.tick(), c.state().state_root());
        }
        ChainCmd::Verify { chain } => {
            let path = cfg.chain_path(chain.as_deref());
            let blocks = read_chain(&path)?;
            match validate_chain(&blocks) {
                Ok(st) => println!("ok: {} blocks, state root {}", blocks.len(), st.state_root()),
                Err(f) => {
                    println!("fault at height {}: {} ({})", f.height, f.error.code(), f.error);
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn scenario_cmd(cfg: &Config, action: ScenarioCmd) -> Result<bool, CliError> {
    let ScenarioCmd::Run { file, seed, out, format, data_dir } = action;
    let format: Format = format.parse()?;
    let text = match bundled(&file) {
        Some(t) if !Path::new(&file).exists() => t.to_string(),
        _ => std::fs::read_to_string(&file).map_err(|e| CliError::Io(format!("{file}: {e}")))?,
    };
    let scenario = Scenario::parse(&text)?;
    let opts = RunOptions { seed, data_dir: cfg.data_dir(data_dir.as_deref()) };
    let (report, chain) = run_scenario(&scenario, &opts)?;
    let files = render_report(&report, format);
    match &out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for (name, body) in &files {
                write(&dir.join(name), body)?;
            }
            deedchain_core::persist::write_chain(&dir.join("chain.dcl"), chain.blocks())?;
            println!("{}: {} of {} assertions passed", report.name, report.assertions.len() - report.failures(), report.assertions.len());
        }
        None => {
            for (name, body) in &files {
                if files.len() > 1 {
                    println!("== {name}");
                }
                print!("{body}");
            }
        }
    }
    Ok(report.passed())
}

fn analyze_cmd(
    cfg: &Config,
    what: AnalyzeKind,
    data_dir: Option<PathBuf>,
    event_date: &str,
    window: Option<&str>,
    symbols: &str,
    format: &str,
) -> Result<bool, CliError> {
    let format: Format = format.parse()?;
    let dir = cfg
        .data_dir(data_dir.as_deref())
        .ok_or_else(|| CliError::Usage(format!("no data directory: pass --data-dir or set {}", deedchain::config::DATA_DIR_ENV)))?;
    let symbols: Vec<&str> = symbols.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let series = analyze::load_symbols(&dir, &symbols)?;
    let out = match what {
        AnalyzeKind::Vol => {
            let range = window.map(analyze::window).transpose()?.unwrap_or_else(analyze::year_2022);
            let rows = analyze::volatilities(&series, range)?;
            match format {
                Format::Text => analyze::volatility_table(&rows),
                Format::Csv => analyze::volatility_csv(&rows),
            }
        }
        AnalyzeKind::Corr => {
            let range = window.map(analyze::window).transpose()?.unwrap_or_else(analyze::year_2022);
            analyze::correlations(&series, range)?.to_csv()
        }
        AnalyzeKind::Event => {
            let w = window.map(analyze::window).transpose()?.unwrap_or_else(analyze::november_2022);
            let r = analyze::events(&series, analyze::date(event_date)?, w)?;
            match format {
                Format::Text => r.to_table(),
                Format::Csv => r.to_csv(),
            }
        }
        AnalyzeKind::Standardize => {
            let range = window.map(analyze::window).transpose()?.unwrap_or_else(analyze::year_2022);
            let mut out = String::from("symbol,date,standardized\n");
            for s in &series {
                for (d, v) in standardize(&s.between(range.0, range.1))?.observations {
                    out.push_str(&format!("{},{d},{v:.6}\n", s.symbol));
                }
            }
            out
        }
    };
    print!("{out}");
    Ok(true)
}

fn ingest_cmd(cfg: &Config, files: &[PathBuf], data_dir: Option<PathBuf>, chain: Option<PathBuf>) -> Result<bool, CliError> {
    let dir = cfg.data_dir(data_dir.as_deref());
    for f in files {
        let head = std::fs::read_to_string(f).map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?;
        let header = head.lines().next().unwrap_or("").to_ascii_lowercase();
        if header.split(',').any(|h| h.trim() == "sqft") {
            let rows = parse_deeds(head.as_bytes())?;
            let path = cfg.chain_path(chain.as_deref());
            let mut c = Chain::open(&path)?;
            let outcomes = import_deeds(&mut c, &rows)?;
            for (row, o) in rows.iter().zip(outcomes) {
                match o {
                    RowOutcome::Minted(id) => println!("minted {id} for {}", row.owner),
                    RowOutcome::Existing(id) => println!("exists {id}"),
                    RowOutcome::Rejected(e) => println!("rejected row for {}: {e}", row.owner),
                }
            }
            continue;
        }
        let s = load_series(f)?;
        let (first, last) = match (s.observations.first(), s.observations.last()) {
            (Some(a), Some(b)) => (a.0.to_string(), b.0.to_string()),
            _ => ("-".into(), "-".into()),
        };
        println!("{:<6} {:>6} rows  {first} .. {last}", s.symbol, s.len());
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
            let mut body = String::from("date,close\n");
            for (date, p) in &s.observations {
                body.push_str(&format!("{date},{p}\n"));
            }
            write(&d.join(format!("{}.csv", s.symbol)), &body)?;
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn costs_cmd(action: CostsCmd) -> Result<bool, CliError> {
    let CostsCmd::Compare { price, commission_rate, pro_price, pro_units, pgas, gas, base_fee, token_price, csv } = action;
    let propy = PropyParams { pro_token_price: pro_price, pro_units, pgas_units: pgas, ..PropyParams::default() };
    let r = compare_costs(price, commission_rate, &propy, gas, base_fee, token_price)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", r.to_table());
    match csv {
        Some(p) => write(&p, &r.to_csv())?,
        None => {
            println!();
            print!("{}", r.to_csv());
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Chain { action } => chain_cmd(&cfg, action),
        Command::Scenario { action } => scenario_cmd(&cfg, action),
        Command::Analyze { what, data_dir, event_date, window, symbols, format } => {
            analyze_cmd(&cfg, what, data_dir, &event_date, window.as_deref(), &symbols, &format)
        }
        Command::Costs { action } => costs_cmd(action),
        Command::Ingest { files, data_dir, chain } => ingest_cmd(&cfg, &files, data_dir, chain),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
