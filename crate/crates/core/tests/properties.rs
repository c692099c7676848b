use std::collections::{BTreeMap, BTreeSet};

use deedchain_core::consensus::{
    pos_round_seed, pos_select_proposer, pow_seal, quorum_round, verify_pow, work_hash, ConsensusError, QuorumConfig,
    StakeTable, WorkParams,
};
use deedchain_core::contracts::lending::{accrue, health_factor, LoanPosition, LoanState};
use deedchain_core::gas::FeeState;
use deedchain_core::primitives::sha256;
use deedchain_core::{Address, Digest, Rational};
use proptest::prelude::*;

fn digest(i: u64) -> Digest {
    sha256(&i.to_be_bytes())
}

#[test]
fn pow_round_trips_up_to_sixteen_bits() {
    for bits in 0..=16u8 {
        let p = WorkParams::plain(bits);
        for i in 0..3 {
            let d = digest(bits as u64 * 10 + i);
            let n = pow_seal(&d, &p, 0).unwrap();
            assert!(verify_pow(&d, n, &p));
            assert!(work_hash(&d, n, &p).leading_zero_bits() >= bits as u32);
        }
    }
}

#[test]
fn pow_nonce_is_minimal() {
    for bits in 0..=12u8 {
        for variant in [WorkParams::plain(bits), WorkParams::memory_mixed(bits, 4)] {
            let d = digest(1000 + bits as u64);
            let n = pow_seal(&d, &variant, 0).unwrap();
            assert!((0..n).all(|k| !verify_pow(&d, k, &variant)));
        }
    }
    assert_eq!(pow_seal(&digest(0), &WorkParams::plain(25), 0), Err(ConsensusError::DifficultyTooHigh(25)));
}

#[test]
fn pos_frequency_tracks_stake() {
    let stakes = StakeTable::from([("A".to_string(), 1), ("B".to_string(), 3)]);
    let rounds = 10_000u64;
    let b = (0..rounds)
        .filter(|h| pos_select_proposer(&stakes, &pos_round_seed(&digest(7), *h)).unwrap() == "B")
        .count();
    let freq = b as f64 / rounds as f64;
    assert!((freq - 0.75).abs() <= 0.02, "{freq}");
    assert_eq!(pos_select_proposer(&StakeTable::new(), &digest(0)), Err(ConsensusError::EmptyStake));
}

fn brute_force(matrix: &[Vec<bool>], n: usize, d: usize, num: usize) -> Vec<usize> {
    (0..d).filter(|&t| matrix.iter().filter(|row| row[t]).count() * 5 >= num * n).collect()
}

#[test]
fn quorum_matches_brute_force() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let n = rng.gen_range(1..=9);
        let d = rng.gen_range(1..=8);
        let matrix: Vec<Vec<bool>> = (0..n).map(|_| (0..d).map(|_| rng.gen_bool(0.7)).collect()).collect();
        let cfg = QuorumConfig::new((0..n).map(|i| (format!("v{i}"), vec![i as u8])).collect());
        let txs: Vec<Digest> = (0..d as u64).map(digest).collect();
        let proposals: BTreeMap<String, BTreeSet<Digest>> = matrix
            .iter()
            .enumerate()
            .map(|(i, row)| (format!("v{i}"), (0..d).filter(|&t| row[t]).map(|t| txs[t]).collect()))
            .collect();
        let mut expected: Vec<Digest> = brute_force(&matrix, n, d, 4).into_iter().map(|t| txs[t]).collect();
        expected.sort();
        match quorum_round(&proposals, &cfg) {
            Ok(agreed) => assert_eq!(agreed, expected),
            Err(ConsensusError::NoQuorum) => assert!(expected.is_empty()),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn quorum_rejects_strangers() {
    let cfg = QuorumConfig::new(BTreeMap::from([("v0".to_string(), vec![0])]));
    let proposals = BTreeMap::from([("x".to_string(), BTreeSet::new())]);
    assert_eq!(quorum_round(&proposals, &cfg), Err(ConsensusError::UnknownValidator("x".into())));
}

fn fee(base_fee: u128) -> FeeState {
    FeeState { base_fee, ..FeeState::default() }
}

#[test]
fn base_fee_extremes() {
    let f = fee(80_000);
    assert_eq!(f.next_base_fee(500_000).unwrap(), 80_000);
    assert_eq!(f.next_base_fee(0).unwrap(), 70_000);
    assert_eq!(f.next_base_fee(1_000_000).unwrap(), 90_000);
    assert_eq!(fee(1).next_base_fee(0).unwrap(), 1);
}

proptest! {
    #[test]
    fn base_fee_fixed_point_and_bounds(base in 1u128..10_000_000_000, used in 0u64..=1_000_000) {
        let f = fee(base);
        prop_assert_eq!(f.next_base_fee(500_000).unwrap(), base);
        let next = f.next_base_fee(used).unwrap();
        let lo = (base * 875 + 500) / 1000;
        let hi = (base * 1125 + 500) / 1000;
        prop_assert!(next >= lo.max(1) && next <= hi);
    }

    #[test]
    fn base_fee_monotone(base in 1u128..10_000_000_000, a in 0u64..=1_000_000, b in 0u64..=1_000_000) {
        let f = fee(base);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(f.next_base_fee(lo).unwrap() <= f.next_base_fee(hi).unwrap());
    }

    #[test]
    fn liquidation_iff_health_below_one(
        collateral in 1u128..1_000_000_000,
        debt in 1u128..1_000_000_000,
        price_num in 1u128..100_000,
        threshold_pct in 1u128..=100,
    ) {
        let price = Rational::new(price_num, 1000).unwrap();
        let threshold = Rational::new(threshold_pct, 100).unwrap();
        let mut loan = LoanPosition {
            loan_id: Digest([0; 32]),
            borrower: Address::derive("b"),
            collateral_token: "DOGE".into(),
            collateral_amount: collateral,
            debt_token: "USDS".into(),
            principal: debt,
            rate_per_block: Rational::zero(),
            liquidation_threshold: threshold.clone(),
            opened_at: 0,
            accrued_at: 0,
            state: LoanState::Active,
        };
        let hf = health_factor(collateral, &price, &threshold, debt).unwrap();
        let below = collateral * price_num * threshold_pct < debt * 1000 * 100;
        prop_assert_eq!(hf < Rational::one(), below);
        prop_assert_eq!(loan.liquidate(&price, 0).is_ok(), below);
    }

    #[test]
    fn accrual_composes(debt in 1u128..1_000_000_000_000, a in 0u64..5_000, b in 0u64..5_000) {
        let r = Rational::new(1, 1_000_000).unwrap();
        let once = accrue(debt, &r, a + b);
        let twice = accrue(accrue(debt, &r, a), &r, b);
        prop_assert!(once.abs_diff(twice) <= 1 + once / 1_000_000_000);
        prop_assert!(once >= debt);
    }
}
