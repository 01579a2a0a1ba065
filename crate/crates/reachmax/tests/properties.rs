//! Cross-module property tests over the random instance corpus.

mod common;

use proptest::prelude::*;

use reachmax::chain::StateSet;
use reachmax::lup::{LupFactors, RowReplacement, UpdatePolicy};
use reachmax::objective::{eval_reach, one_step_value};
use reachmax::oracle::{dense_solve_f, random_chain_spec};
use reachmax::sparse::SparseMatrix;

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        .. ProptestConfig::default()
    })]

    /// Objective and reach vector never shrink when the selection grows.
    #[test]
    fn reach_is_monotone(seed in 0u64..10_000, n in 2usize..16, z in 1usize..16, pick in 0usize..1000) {
        let n = n.min(15);
        let z = (z % n) + 1;
        let spec = random_chain_spec(n, seed);
        let mut rng = rand::SeedableRng::seed_from_u64(pick as u64);
        let s = common::random_subset(n, pick % n, &mut rng);
        prop_assume!(!s.contains(z));
        let base = eval_reach(&spec, &s).unwrap();
        let grown = eval_reach(&spec, &s.with(z)).unwrap();
        prop_assert!(grown.f >= base.f - 1e-10);
        for (cb, cg) in base.c.iter().zip(&grown.c) {
            prop_assert!(cg >= &(cb - 1e-10));
        }
    }

    /// Truncated power sums of the transition series approach the solved
    /// reach vector from below.
    #[test]
    fn truncated_series_converges_from_below(seed in 0u64..10_000, n in 2usize..12) {
        let spec = random_chain_spec(n, seed);
        let s = StateSet::from_slice(&[1]);
        let solved = eval_reach(&spec, &s).unwrap();
        let asm = spec.assemble(&s).unwrap();
        let mut partial = vec![0.0; n];
        let mut previous = -1.0;
        for _ in 0..400 {
            // c_{t+1} = b + A c_t
            let ac = asm.a.mul_vec(&partial);
            partial = asm.b.iter().zip(&ac).map(|(&b, &v)| b + v).collect();
            let f: f64 = spec.pi().iter().zip(&partial).map(|(&p, &c)| p * c).sum();
            prop_assert!(f >= previous - 1e-12, "series not monotone");
            prop_assert!(f <= solved.f + 1e-9, "series overshot the solution");
            previous = f;
        }
        prop_assert!((previous - solved.f).abs() < 1e-6);
    }

    /// The myopic one-step value never exceeds the full objective.
    #[test]
    fn one_step_is_a_lower_bound(seed in 0u64..10_000, n in 2usize..16, pick in 0usize..1000) {
        let spec = random_chain_spec(n, seed);
        let mut rng = rand::SeedableRng::seed_from_u64(seed ^ 0x5eed);
        let s = common::random_subset(n, pick % (n + 1), &mut rng);
        let f = eval_reach(&spec, &s).unwrap().f;
        prop_assert!(one_step_value(&spec, &s) <= f + 1e-10);
    }

    /// Sparse-update evaluation matches dense elimination.
    #[test]
    fn solver_routes_agree(seed in 0u64..10_000, n in 2usize..16, pick in 0usize..1000) {
        let spec = random_chain_spec(n, seed);
        let mut rng = rand::SeedableRng::seed_from_u64(seed ^ 0xace);
        let s = common::random_subset(n, pick % (n + 1), &mut rng);
        let lup = eval_reach(&spec, &s).unwrap().f;
        let dense = dense_solve_f(&spec, &s).unwrap();
        prop_assert!((lup - dense).abs() <= 1e-9);
    }

    /// Any sequence of row replacements solves like a fresh factorization
    /// of the final matrix.
    #[test]
    fn update_path_equals_fresh_path(seed in 0u64..10_000, steps in 1usize..12) {
        let n = 10;
        let spec = random_chain_spec(n, seed);
        let asm = spec.assemble(&StateSet::new()).unwrap();
        let policy = UpdatePolicy { refactor_after: 5, fill_ratio: 4.0 };
        let mut factors = LupFactors::factorize_with(&asm.system_matrix(), policy).unwrap();
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        for _ in 0..steps {
            let z = rand::Rng::random_range(&mut rng, 1..=n);
            let linked = rand::Rng::random::<bool>(&mut rng);
            let row = spec.system_row(z, linked).unwrap();
            factors = factors.replace_row(&RowReplacement::new(z - 1, row)).unwrap();
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let updated = factors.solve(&rhs).unwrap();
        let current = SparseMatrix::from_rows(n, factors.represented_rows()).unwrap();
        let fresh = LupFactors::factorize(&current).unwrap().solve(&rhs).unwrap();
        for (a, b) in updated.iter().zip(&fresh) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
