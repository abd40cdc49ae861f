use proptest::prelude::*;

use ovo_rank::learn::{self, BinaryClassifier, BinaryView, Flipped, Stump};
use ovo_rank::perm::{self, Metric, Permutation, ScoreVector, TieBreakPolicy, Tournament};
use ovo_rank::synth::{self, PosteriorOracle};

fn permutation(k: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=k).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|r| Permutation::new(r).unwrap())
}

fn perm_pair() -> impl Strategy<Value = (Permutation, Permutation)> {
    (1usize..=9).prop_flat_map(|k| (permutation(k), permutation(k)))
}

fn perm_triple() -> impl Strategy<Value = (Permutation, Permutation, Permutation)> {
    (1usize..=8).prop_flat_map(|k| (permutation(k), permutation(k), permutation(k)))
}

fn signed_points() -> impl Strategy<Value = Vec<(f64, i8)>> {
    prop::collection::vec(
        (
            (0u8..12).prop_map(|v| v as f64 / 11.0),
            prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }),
        ),
        0..40,
    )
}

proptest! {
    #[test]
    fn metrics_are_metrics((a, b, c) in perm_triple()) {
        for m in Metric::ALL {
            let d = |p: &Permutation, q: &Permutation| perm::distance(m, p, q).unwrap();
            prop_assert_eq!(d(&a, &a), 0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert_eq!(d(&a, &b) == 0, a == b);
            if m != Metric::SpearmanRho {
                prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
            }
        }
    }

    #[test]
    fn kendall_is_right_invariant((a, b) in perm_pair()) {
        // Relabelling both rankings the same way keeps discordant pairs.
        let k = a.len();
        let relabel = |p: &Permutation| {
            let order = p.order();
            let mut ranks = vec![0; k];
            for (pos, &label) in order.iter().enumerate() {
                ranks[k - 1 - label] = pos + 1;
            }
            Permutation::new(ranks).unwrap()
        };
        prop_assert_eq!(perm::kendall_tau(&a, &b), perm::kendall_tau(&relabel(&a), &relabel(&b)));
        let max = (k * (k - 1) / 2) as u64;
        prop_assert!(perm::kendall_tau(&a, &b) <= max);
    }

    #[test]
    fn invert_is_an_involution((a, _) in perm_pair()) {
        prop_assert_eq!(a.invert().invert(), a.clone());
        for rank in 1..=a.len() {
            prop_assert_eq!(a.rank_of(a.label_at(rank)), rank);
            prop_assert_eq!(a.invert().rank_of(rank - 1), a.label_at(rank) + 1);
        }
        prop_assert_eq!(a.top(a.len()), a.order());
    }

    #[test]
    fn transitive_tournaments_recover_their_ranking((a, _) in perm_pair()) {
        let t = Tournament::from_permutation(&a);
        prop_assert!(t.is_acyclic());
        let scores = perm::copeland_ranks(&t);
        prop_assert_eq!(scores.as_permutation(), Some(a.clone()));
        for tb in [TieBreakPolicy::LowestLabelFirst, TieBreakPolicy::SeededRandom(9)] {
            prop_assert_eq!(perm::ranks_from_scores(&scores, tb), a.clone());
        }
    }

    #[test]
    fn ranks_from_scores_respects_scores(
        raw in prop::collection::vec(0usize..6, 1..9),
        seed in any::<u64>(),
    ) {
        let k = raw.len();
        let scores: Vec<usize> = raw.iter().map(|&s| s.min(k - 1) + 1).collect();
        let sv = ScoreVector::new(scores.clone()).unwrap();
        for tb in [TieBreakPolicy::LowestLabelFirst, TieBreakPolicy::SeededRandom(seed)] {
            let p = perm::ranks_from_scores(&sv, tb);
            // idempotent once the scores form a permutation
            let again = ScoreVector::new(p.ranks().to_vec()).unwrap();
            prop_assert_eq!(perm::ranks_from_scores(&again, tb), p.clone());
            for i in 0..k {
                for j in 0..k {
                    if scores[i] < scores[j] {
                        prop_assert!(p.rank_of(i) < p.rank_of(j));
                    }
                }
            }
        }
    }

    #[test]
    fn stump_erm_beats_every_candidate(points in signed_points(), s in -0.2f64..1.2, pos in any::<bool>()) {
        let view = BinaryView::from_signed((0, 1), points).unwrap();
        let best = learn::misclassified(&learn::fit_stump_erm(&view), &view);
        let other = Stump { threshold: s, polarity: if pos { 1 } else { -1 } };
        prop_assert!(best <= learn::misclassified(&other, &view));
    }

    #[test]
    fn stump_erm_is_invariant_to_monotone_reparametrization(points in signed_points()) {
        let view = BinaryView::from_signed((0, 1), points.clone()).unwrap();
        let warped: Vec<(f64, i8)> = points.iter().map(|&(x, y)| (3.0 * x.powi(3) - 7.0, y)).collect();
        let warped = BinaryView::from_signed((0, 1), warped).unwrap();
        prop_assert_eq!(
            learn::misclassified(&learn::fit_stump_erm(&view), &view),
            learn::misclassified(&learn::fit_stump_erm(&warped), &warped)
        );
    }

    #[test]
    fn flipping_a_classifier_complements_its_risk(points in signed_points(), s in 0.0f64..1.0) {
        let view = BinaryView::from_signed((0, 1), points).unwrap();
        let stump = Stump { threshold: s, polarity: 1 };
        let flipped = Flipped(stump);
        prop_assert_eq!(
            learn::misclassified(&stump, &view) + learn::misclassified(&flipped, &view),
            view.len()
        );
        for &(x, _) in view.points() {
            prop_assert_eq!(flipped.predict(x), -stump.predict(x));
        }
    }

    #[test]
    fn oracle_posteriors_form_a_distribution(
        depth in 0usize..4,
        alpha in 0.05f64..=1.0,
        x in 0.0f64..=1.0,
    ) {
        let oracle = PosteriorOracle::spread(depth, alpha).unwrap();
        let eta = oracle.eta(x);
        prop_assert_eq!(eta.len(), 1 << (depth + 1));
        prop_assert!(eta.iter().all(|&e| (0.0..=1.0).contains(&e)));
        prop_assert!((eta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_star_orders_by_posterior(raw in prop::collection::vec(0.001f64..1.0, 2..9)) {
        let total: f64 = raw.iter().sum();
        let eta: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if let Ok(p) = synth::sigma_star(&eta) {
            for i in 0..eta.len() {
                for j in 0..eta.len() {
                    if eta[i] > eta[j] {
                        prop_assert!(p.rank_of(i) < p.rank_of(j));
                    }
                }
            }
        }
    }
}
