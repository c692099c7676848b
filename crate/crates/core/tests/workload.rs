use std::time::Instant;

use deedchain_core::contracts::SaleState;
use deedchain_core::workload::{run_ledger_workload, run_sale_scenario, undetected_mutations, WorkloadConfig};

#[test]
fn random_ledger_workload_keeps_invariants() {
    let t = Instant::now();
    let report = run_ledger_workload(&WorkloadConfig::default());
    eprintln!(
        "accepted {} rejected {} in {:?}: {:?}",
        report.accepted,
        report.rejected,
        t.elapsed(),
        report.accepted_by_kind
    );
    assert!(report.violations.is_empty(), "{:#?}", &report.violations[..report.violations.len().min(10)]);
    assert!(report.accepted > 300);
    let t = Instant::now();
    let bytes = deedchain_core::persist::encode_chain(report.chain.blocks());
    let positions: Vec<usize> = (0..bytes.len()).step_by(bytes.len() / 50).collect();
    let missed = undetected_mutations(&report.chain, &positions, 7);
    eprintln!("{} mutations in {:?}", positions.len(), t.elapsed());
    assert!(missed.is_empty(), "{missed:?}");
}

#[test]
fn random_sales_settle_atomically() {
    let mut finals = std::collections::BTreeMap::new();
    for seed in 0..100 {
        let run = run_sale_scenario(seed);
        assert!(run.violations.is_empty(), "seed {seed}: {:?}", run.violations);
        *finals.entry(format!("{:?}", run.final_state)).or_insert(0) += 1;
    }
    eprintln!("{finals:?}");
    assert!(finals.contains_key(&format!("{:?}", SaleState::Settled)));
}
