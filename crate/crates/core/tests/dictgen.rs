mod common;

use proptest::prelude::*;

use convsparse::build_global;
use convsparse::dictgen::*;
use convsparse::measures::{l0, mutual_coherence, welch_lower_bound};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn signals_are_reproducible_and_consistent(seed in any::<u64>(), card in 1usize..30) {
        let d = build_global(random_local(5, 3, seed).unwrap(), 12).unwrap();
        let (code, x) = gen_signal(&d, card, seed).unwrap();
        prop_assert_eq!(l0(&code), card);
        prop_assert_eq!(&x, &d.apply(&code).unwrap());
        let again = gen_signal(&d, card, seed).unwrap();
        prop_assert_eq!(code, again.0);
    }

    #[test]
    fn streams_are_independent(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        let ca = random_code_with(40, 2, 5, &mut stream(seed, a)).unwrap();
        let cb = random_code_with(40, 2, 5, &mut stream(seed, b)).unwrap();
        prop_assert_ne!(&ca, &cb);
        prop_assert_eq!(ca, random_code_with(40, 2, 5, &mut stream(seed, a)).unwrap());
    }

    #[test]
    fn designed_coherence_is_reported_faithfully(n in 2usize..10, m in 1usize..4, seed in any::<u64>()) {
        let design = low_coherence_local(n, m, seed, 50).unwrap();
        let d = build_global(design.dict.clone(), 2 * n + 3).unwrap();
        prop_assert!((mutual_coherence(&d) - design.mu).abs() < 1e-12);
        prop_assert!(design.mu >= welch_lower_bound(n, m) - 1e-12);
        prop_assert_eq!(design.best_history.len(), 50);
        prop_assert_eq!(*design.best_history.last().unwrap(), design.mu);
    }
}

#[test]
fn coherence_reducer_improves_on_its_start() {
    for seed in 0..3 {
        let start = shifted_max_coherence(&random_local(64, 2, seed).unwrap());
        let design = low_coherence_local(64, 2, seed, 1000).unwrap();
        assert!(design.mu < 0.12, "seed {seed}: {}", design.mu);
        assert!(design.mu < start);
    }
}
