use proptest::prelude::*;

use ictrait::corpus::IndividualCorpus;
use ictrait::regressor::{complexity_index, from_complexity_index, HIDDEN_UNIT_GRID, MAX_BOOST};
use ictrait::selection::{mfpr2, select_top_k, FeatureRanking};
use ictrait::splitting::make_cv_folds;
use ictrait::stats::pearson_r;

proptest! {
    #[test]
    fn mfpr2_matches_piecewise_form(t in -1.0f64..1.0, v in -1.0f64..1.0) {
        let m = mfpr2(t, v);
        let piecewise = if t <= v { t } else { 2.0 * v - t };
        prop_assert!((m - piecewise).abs() < 1e-12);
        prop_assert!(m <= v + 1e-15 && m <= t + 1e-15);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 5..40),
        a in 0.1f64..5.0,
        b in -5.0f64..5.0,
        flip in any::<bool>(),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let Ok(r) = pearson_r(&x, &y) else { return Ok(()); };
        let a = if flip { -a } else { a };
        let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let rt = pearson_r(&xt, &y).unwrap();
        prop_assert!((rt - a.signum() * r).abs() < 1e-9, "{} vs {}", rt, r);
    }

    #[test]
    fn frequency_table_accounts_for_every_token(words in prop::collection::vec("[a-f]{1,3}", 0..200)) {
        let ic = IndividualCorpus::from_tokens("p", words.clone());
        let total: usize = ic.freq_table().values().sum();
        prop_assert_eq!(total, words.len());
        prop_assert_eq!(ic.token_count(), words.len());
        let distinct: std::collections::BTreeSet<&String> = words.iter().collect();
        prop_assert_eq!(ic.type_count(), distinct.len());
    }

    #[test]
    fn top_k_is_a_prefix_of_top_k_plus_one(scores in prop::collection::vec(0.0f64..1.0, 2..30), k in 0usize..29) {
        let mut entries: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, s)| (format!("l{i}"), *s)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        let ranking = FeatureRanking { entries };
        prop_assume!(k < ranking.len());
        let small = select_top_k(&ranking, k).unwrap();
        let big = select_top_k(&ranking, k + 1).unwrap();
        prop_assert_eq!(&big[..k], &small[..]);
    }

    #[test]
    fn complexity_index_round_trips(h in 0usize..HIDDEN_UNIT_GRID.len(), b in 0usize..=MAX_BOOST) {
        let units = HIDDEN_UNIT_GRID[h];
        let c = complexity_index(units, b).unwrap();
        prop_assert!((1..=162).contains(&c));
        prop_assert_eq!(from_complexity_index(c).unwrap(), (units, b));
    }

    #[test]
    fn cv_folds_are_balanced(n in 10usize..200, folds in 2usize..10, seed in any::<u64>()) {
        let f = make_cv_folds(n, folds, seed).unwrap();
        let mut sizes = vec![0usize; folds];
        for &i in &f {
            sizes[i] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1 && *lo > 0);
    }
}
