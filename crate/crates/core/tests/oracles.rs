mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use verdict_facts::align::{ground, levenshtein, locate_span, normalize_text, similarity, similarity_with, Levenshtein};

#[test]
fn locate_span_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..250 {
        let n = rng.gen_range(1..=200);
        let source = if round % 2 == 0 { random_text(&mut rng, n) } else { random_narrow(&mut rng, n) };
        let candidate = if rng.gen_bool(0.7) {
            adversarial_candidate(&mut rng, &source)
        } else {
            let m = rng.gen_range(1..12);
            random_narrow(&mut rng, m)
        };
        let got = locate_span(&candidate, &source);
        match brute_force_span(&candidate, &source) {
            None => assert_eq!(got.end_offset, got.start_offset, "{candidate:?} in {source:?}"),
            Some(b) => {
                assert_eq!(
                    (got.start_offset, got.end_offset, got.score),
                    (b.start, b.end, ratio(b.distance, b.scale)),
                    "{candidate:?} in {source:?}"
                );
            }
        }
    }
}

#[test]
fn similarity_matches_matrix_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..500 {
        let la = rng.gen_range(0..80);
        let a = random_text(&mut rng, la);
        let b = if rng.gen_bool(0.5) {
            let k = rng.gen_range(0..10);
            mutate(&mut rng, &a, k)
        } else {
            let lb = rng.gen_range(0..80);
            random_text(&mut rng, lb)
        };
        let (d, s) = similarity_oracle(&a, &b);
        let got = similarity_with(&Levenshtein, &a, &b);
        assert_eq!((got.distance, got.scale), (d, s), "{a:?} vs {b:?}");
        assert_eq!(similarity(&a, &b), ratio(d, s));
    }
}

#[test]
fn folding_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..500 {
        let n = rng.gen_range(0..120);
        let t = random_text(&mut rng, n);
        assert_eq!(normalize_text(&t).chars(), fold(&t).as_slice());
    }
}

#[test]
fn long_sources_find_planted_excerpts() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..40 {
        let n = rng.gen_range(800..4000);
        let source = random_text(&mut rng, n);
        let a = rng.gen_range(0..n - 200);
        let b = a + rng.gen_range(40..200);
        let excerpt = slice(&source, a, b);
        let got = locate_span(&excerpt, &source);
        assert_eq!(got.score, 1.0);
        assert_eq!(normalize_text(&slice(&source, got.start_offset, got.end_offset)).folded, normalize_text(&excerpt).folded);

        let noisy = mutate(&mut rng, &excerpt, 2);
        let (d, s) = similarity_oracle(&noisy, &excerpt);
        let got = locate_span(&noisy, &source);
        assert!(got.score >= ratio(d, s) - 1e-12, "seeded search lost the planted span");
    }
}

proptest! {
    #[test]
    fn edit_distance_agrees(a in "[abcá ]{0,30}", b in "[abcá ]{0,30}") {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        prop_assert_eq!(levenshtein(&a, &b), edit_distance(&a, &b));
    }

    #[test]
    fn normalization_is_idempotent(t in "\\PC{0,80}") {
        let once = normalize_text(&t).folded;
        prop_assert_eq!(normalize_text(&once).folded, once);
    }

    #[test]
    fn projection_round_trips(seed in any::<u64>(), len in 1usize..150) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_text(&mut rng, len);
        let n = normalize_text(&t);
        if !n.is_empty() {
            let a = rng.gen_range(0..n.len());
            let b = rng.gen_range(a + 1..=n.len());
            let sub: String = n.chars()[a..b].iter().collect();
            let (s, e) = n.project(a, b).unwrap();
            prop_assert_eq!(normalize_text(&slice(&t, s, e)).folded, sub.trim().to_string());
        }
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in "\\PC{0,40}", b in "\\PC{0,40}") {
        let x = similarity(&a, &b);
        prop_assert_eq!(x, similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn grounded_text_is_a_source_slice(seed in any::<u64>(), len in 1usize..300, threshold in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = random_text(&mut rng, len);
        let cand = adversarial_candidate(&mut rng, &source);
        if let Some(g) = ground(&cand, &source, threshold).unwrap() {
            prop_assert_eq!(&g.text, &slice(&source, g.start_offset, g.end_offset));
            prop_assert!(source.contains(&g.text));
            prop_assert!(g.score >= threshold);
        }
    }
}
