use dscrowd_core::harness::random_pool;
use dscrowd_core::*;
use proptest::prelude::*;

fn arb_pool() -> impl Strategy<Value = WorkerPool> {
    (2usize..=4, 1usize..=6, 0.0f64..3.0, any::<u64>())
        .prop_map(|(k, m, boost, seed)| random_pool(k, m, boost, 0.01, seed).unwrap())
}

fn arb_accuracies() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..0.99, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_moment_is_convex_and_pinned(pool in arb_pool(), g in 1u32..=3, h in 2u32..=4) {
        let h = h.min(pool.k() as u32);
        let g = g.min(h - 1);
        let f: Vec<f64> = (0..=100).map(|s| log_bt(&pool, g, h, s as f64 / 100.0).unwrap()).collect();
        prop_assert!(f[0].abs() <= 1e-12);
        prop_assert!(f[100].abs() <= 1e-12);
        for w in f.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
        prop_assert!(f.iter().all(|&v| v <= 1e-12));

        let c = chernoff_pair(&pool, g, h).unwrap();
        prop_assert!(c.value >= 0.0 && (0.0..=1.0).contains(&c.t_star));
        if c.value > 1e-8 {
            prop_assert!(c.t_star > 0.0 && c.t_star < 1.0);
        }
        let grid_best = f.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(-c.value * pool.m() as f64 <= grid_best + 1e-12);
    }

    #[test]
    fn majority_exponent_never_beats_optimal(p in arb_accuracies()) {
        let pool = OneCoinPool::new(p).unwrap();
        let i = one_coin_exponent(&pool).unwrap();
        let j = majority_vote_exponent(&pool).unwrap();
        prop_assert!(j.value <= i + 1e-10, "J = {} > I = {i}", j.value);
        prop_assert!(j.value >= 0.0);
    }

    #[test]
    fn equal_accuracies_make_exponents_coincide(p in 0.5f64..0.99, m in 1usize..20) {
        let pool = OneCoinPool::uniform(p, m).unwrap();
        let i = one_coin_exponent(&pool).unwrap();
        let j = majority_vote_exponent(&pool).unwrap();
        prop_assert!((i - j.value).abs() <= 1e-8);
    }

    #[test]
    fn one_coin_exponent_flip_symmetry(p in arb_accuracies(), mask in any::<u16>()) {
        let flipped: Vec<f64> = p.iter().enumerate().map(|(i, &x)| if mask >> (i % 16) & 1 == 1 { 1.0 - x } else { x }).collect();
        let a = one_coin_exponent(&OneCoinPool::new(p).unwrap()).unwrap();
        let b = one_coin_exponent(&OneCoinPool::new(flipped).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn one_coin_minimax_is_closed_form(p in arb_accuracies()) {
        let coin = OneCoinPool::new(p).unwrap();
        let report = minimax_exponent(&coin.to_pool()).unwrap();
        prop_assert!((report.i_pi - one_coin_exponent(&coin).unwrap()).abs() <= 1e-9);
        prop_assert!(report.expert_set_size <= coin.m());
    }

    #[test]
    fn aggregators_commute_with_relabeling(pool in arb_pool(), seed in any::<u64>(), rot in 1u32..4) {
        let k = pool.k() as u32;
        let perm: Vec<Label> = (0..k).map(|g| (g + rot) % k + 1).collect();
        let truth = GroundTruth::with_proportions(60, pool.k(), None).unwrap();
        let labels = generate_labels(&pool, &truth, seed).unwrap();
        let moved_labels = labels.relabeled(&perm).unwrap();
        let moved_pool = pool.relabeled(&perm).unwrap();

        let oracle = oracle_mle(&labels, &pool).unwrap();
        let moved = oracle_mle(&moved_labels, &moved_pool).unwrap();
        for (a, b) in moved.labels().iter().zip(oracle.labels()) {
            prop_assert_eq!(*a, perm[*b as usize - 1]);
        }
        // plurality ties break towards small labels, so only untied columns commute
        let mv = majority_vote(&labels).unwrap();
        let moved_mv = majority_vote(&moved_labels).unwrap();
        let mut column = vec![0; labels.m()];
        for j in 0..labels.n() {
            labels.column_into(j, &mut column);
            let mut votes = vec![0; pool.k()];
            for &x in &column { votes[x as usize - 1] += 1; }
            let top = *votes.iter().max().unwrap();
            if votes.iter().filter(|&&v| v == top).count() == 1 {
                prop_assert_eq!(moved_mv.labels()[j], perm[mv.labels()[j] as usize - 1]);
            }
        }
    }

    #[test]
    fn spammer_shift_leaves_mle_unchanged(pool in arb_pool(), seed in any::<u64>()) {
        // a worker whose rows all agree adds the same log term to every class
        let k = pool.k();
        let row: Vec<f64> = (0..k).map(|h| (h + 1) as f64).collect();
        let total: f64 = row.iter().sum();
        let row: Vec<f64> = row.iter().map(|x| x / total).collect();
        let spammer = ConfusionMatrix::new(vec![row; k]).unwrap();
        let mut workers = pool.workers().to_vec();
        workers.push(spammer);
        let bigger = WorkerPool::new(workers).unwrap();

        let truth = GroundTruth::with_proportions(40, k, None).unwrap();
        let labels = generate_labels(&bigger, &truth, seed).unwrap();
        let full = oracle_mle(&labels, &bigger).unwrap();
        let without = oracle_mle(&labels.prefix(pool.m()).unwrap(), &pool).unwrap();
        prop_assert_eq!(full, without);
    }

    #[test]
    fn generation_is_reproducible(pool in arb_pool(), seed in any::<u64>()) {
        let truth = GroundTruth::with_proportions(50, pool.k(), None).unwrap();
        prop_assert_eq!(generate_labels(&pool, &truth, seed).unwrap(), generate_labels(&pool, &truth, seed).unwrap());
    }

    #[test]
    fn smoothing_gives_stochastic_positive_rows(counts in prop::collection::vec(0.0f64..50.0, 9), lambda in 1e-6f64..5.0) {
        let est = smooth_confusion(3, &[counts], lambda).unwrap();
        for row in est.pool().worker(0).rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn em_objective_never_decreases(pool in arb_pool(), seed in any::<u64>()) {
        let truth = GroundTruth::with_proportions(120, pool.k(), None).unwrap();
        let labels = generate_labels(&pool, &truth, seed).unwrap();
        let init = PosteriorMatrix::from_majority(&labels).unwrap();
        let out = em_run(&labels, &init, &EmOptions { max_iters: 30, ..EmOptions::default() }).unwrap();
        for w in out.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        for row in out.posterior.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}
