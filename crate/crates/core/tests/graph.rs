mod support;

use kabp::graph::{
    count_girth_cycles, dfs_cycle_oracle, girth, peg_construct, DegreeProfile, ParityCheckMatrix,
    SystematicEncoder,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_matrix() -> impl Strategy<Value = ParityCheckMatrix> {
    (2usize..=12, 1usize..=8, 0.2f64..0.6, any::<u64>())
        .prop_filter("fits the oracle", |(n, m, _, _)| n + m <= 30)
        .prop_map(|(n, m, p, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            support::random_sparse(&mut rng, n, m, p)
        })
}

/// Shortest cycle by exhaustive enumeration over all lengths the oracle accepts.
fn oracle_girth(h: &ParityCheckMatrix) -> Option<usize> {
    let limit = 2 * h.n().min(h.m());
    (4..=limit)
        .step_by(2)
        .find(|&len| dfs_cycle_oracle(h, len).unwrap().iter().any(|&c| c > 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn census_matches_oracle(h in arb_matrix()) {
        let census = count_girth_cycles(&h);
        prop_assert_eq!(census.girth, oracle_girth(&h));
        match census.girth {
            Some(g) => prop_assert_eq!(&census.per_check_counts, &dfs_cycle_oracle(&h, g).unwrap()),
            None => prop_assert!(census.per_check_counts.iter().all(|&c| c == 0)),
        }
        let mean = census.per_check_counts.iter().sum::<u64>() as f64 / h.m() as f64;
        prop_assert!((census.mu_g - mean).abs() < 1e-12);
    }

    #[test]
    fn alist_round_trip(h in arb_matrix()) {
        let back = ParityCheckMatrix::from_alist(&h.to_alist()).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn rows_and_columns_agree(h in arb_matrix()) {
        let mut from_cols: Vec<(usize, usize)> = h
            .cols()
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |&i| (i, j)))
            .collect();
        from_cols.sort_unstable();
        let from_rows: Vec<(usize, usize)> = h.edges().collect();
        prop_assert_eq!(from_rows, from_cols);
    }

    #[test]
    fn encoder_output_is_codeword(h in arb_matrix(), seed in any::<u64>()) {
        let enc = SystematicEncoder::new(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let info: Vec<u8> = (0..enc.k()).map(|_| rng.gen_range(0..2u8)).collect();
        let cw = enc.encode(&info).unwrap();
        prop_assert!(h.is_codeword(&cw));
        prop_assert_eq!(enc.extract_info(&cw), info);
    }

    #[test]
    fn single_flip_syndrome_is_column(h in arb_matrix(), j in 0usize..64) {
        let j = j % h.n();
        let mut bits = vec![0u8; h.n()];
        bits[j] = 1;
        let s = h.syndrome(&bits).unwrap();
        let expected: Vec<u8> = (0..h.m()).map(|i| h.contains(i, j) as u8).collect();
        prop_assert_eq!(s, expected);
    }
}

#[test]
fn small_examples() {
    let h = ParityCheckMatrix::from_dense(&[[1u8, 1], [1, 1]]).unwrap();
    assert_eq!(girth(&h), Some(4));
    assert_eq!(count_girth_cycles(&h).per_check_counts, vec![1, 1]);
    assert_eq!(dfs_cycle_oracle(&h, 6).unwrap(), vec![0, 0]);

    let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [1, 1, 1]]).unwrap();
    assert_eq!(count_girth_cycles(&h).per_check_counts, vec![1, 1]);

    let h = ParityCheckMatrix::from_dense(&[[1u8, 1]]).unwrap();
    assert_eq!(girth(&h), None);
    assert_eq!(peg_construct(2, 1, &[1, 1], 0).unwrap(), h);

    let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
    assert_eq!(h.syndrome(&[1, 0, 0]).unwrap(), vec![1, 0]);
}

#[test]
fn peg_two_regular_matches_brute_force() {
    let h = peg_construct(6, 3, &[2; 6], 0).unwrap();
    assert!(h.cols().iter().all(|c| c.len() == 2));
    assert_eq!(girth(&h), oracle_girth(&h));
}

#[test]
fn peg_is_deterministic() {
    let a = peg_construct(120, 60, &[3; 120], 5).unwrap();
    let b = peg_construct(120, 60, &[3; 120], 5).unwrap();
    assert_eq!(a.to_alist(), b.to_alist());
    assert!(peg_construct(10, 3, &[4; 10], 0).is_err());
}

#[test]
fn reference_code() {
    let h = peg_construct(1000, 500, &[3; 1000], 0).unwrap();
    assert!(h.cols().iter().all(|c| c.len() == 3));
    assert!(h.rows().iter().all(|r| r.len() == 6));
    assert_eq!(girth(&h), Some(6));
    let enc = SystematicEncoder::new(&h);
    assert_eq!(enc.k(), 500);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let info: Vec<u8> = (0..enc.k()).map(|_| rng.gen_range(0..2u8)).collect();
        assert!(h.is_codeword(&enc.encode(&info).unwrap()));
    }
}

#[test]
fn exhaustive_encoding_small_code() {
    let h = ParityCheckMatrix::from_dense(&[
        [1u8, 1, 0, 1, 0, 0, 1, 0],
        [0, 1, 1, 0, 1, 0, 0, 1],
        [1, 0, 1, 0, 0, 1, 1, 0],
        [0, 0, 0, 1, 1, 1, 0, 1],
    ])
    .unwrap();
    let enc = SystematicEncoder::new(&h);
    assert_eq!(enc.k(), 8 - enc.rank());
    let mut seen = std::collections::HashSet::new();
    for w in 0..(1u32 << enc.k()) {
        let info: Vec<u8> = (0..enc.k()).map(|b| ((w >> b) & 1) as u8).collect();
        let cw = enc.encode(&info).unwrap();
        assert!(h.is_codeword(&cw));
        assert!(seen.insert(cw));
    }
}

#[test]
fn peg_beats_random_placement_on_girth() {
    let mut wins = 0;
    for seed in 0..100u64 {
        let peg = peg_construct(60, 30, &[3; 60], seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // random sockets matching: each column picks 3 distinct checks
        let rows = loop {
            let mut rows = vec![Vec::new(); 30];
            for j in 0..60 {
                let mut picked = Vec::new();
                while picked.len() < 3 {
                    let c = rng.gen_range(0..30);
                    if !picked.contains(&c) {
                        picked.push(c);
                    }
                }
                for c in picked {
                    rows[c].push(j);
                }
            }
            if rows.iter().all(|r| r.len() >= 2) {
                break rows;
            }
        };
        let random = ParityCheckMatrix::from_rows(60, rows).unwrap();
        let g = |h: &ParityCheckMatrix| girth(h).unwrap_or(usize::MAX);
        if g(&peg) >= g(&random) {
            wins += 1;
        }
    }
    assert!(wins >= 90, "{wins}");
}

#[test]
fn average_connectivity_examples() {
    let third = DegreeProfile::from_polynomials(vec![0.0, 0.0, 1.0], vec![1.0]).unwrap();
    assert_eq!(third.average_connectivity().unwrap(), 3.0);
    let one = DegreeProfile::from_polynomials(vec![1.0], vec![1.0]).unwrap();
    assert_eq!(one.average_connectivity().unwrap(), 1.0);
    let fifth = DegreeProfile::from_polynomials(vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![1.0]).unwrap();
    assert!((fifth.average_connectivity().unwrap() - 5.0).abs() < 1e-12);
    assert!(DegreeProfile::from_polynomials(vec![0.0], vec![1.0]).is_err());
}
