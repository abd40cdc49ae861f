//! One-Versus-One label ranking.
//!
//! [`fit_ovo`] trains one binary classifier per pair `k < l` on the points
//! labelled `k` or `l`. At a query point the classifiers orient every duel
//! (`+1` means `l` wins, `−1` means `k` wins), each label is scored by one
//! plus its number of lost duels, and the scores are turned into a ranking.
//! When the duels are transitive the scores already form a permutation;
//! otherwise ties are broken by the ranker's [`TieBreakPolicy`].

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{BinaryClassifier, BinaryModel, BinaryView, Flipped, LearnerSpec};
use crate::perm::{
    self, copeland_ranks, kendall_tau, pair_count, pair_index, ranks_from_scores, Permutation,
    ScoreVector, TieBreakPolicy, Tournament,
};
use crate::rng;
use crate::synth::{self, LabeledDataset, PosteriorOracle};

/// One classifier per unordered label pair, stored for `k < l` in
/// [`perm::pair_index`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRanker<C = BinaryModel> {
    k_count: usize,
    classifiers: Vec<C>,
    tie_break: TieBreakPolicy,
}

/// Outcome of ranking the labels at one point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: ScoreVector,
    pub permutation: Permutation,
    pub was_cyclic: bool,
}

impl<C: BinaryClassifier> LabelRanker<C> {
    /// `classifiers[pair_index(k, l)]` decides the duel `k < l`.
    pub fn from_classifiers(
        k_count: usize,
        classifiers: Vec<C>,
        tie_break: TieBreakPolicy,
    ) -> Result<Self> {
        if k_count < 2 {
            return Err(Error::param("k_count", format!("{k_count} < 2 labels")));
        }
        if classifiers.len() != pair_count(k_count) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(k_count),
                got: classifiers.len(),
            });
        }
        Ok(LabelRanker {
            k_count,
            classifiers,
            tie_break,
        })
    }

    pub fn k_count(&self) -> usize {
        self.k_count
    }

    pub fn tie_break(&self) -> TieBreakPolicy {
        self.tie_break
    }

    pub fn classifiers(&self) -> &[C] {
        &self.classifiers
    }

    pub fn classifier(&self, k: usize, l: usize) -> &C {
        &self.classifiers[pair_index(self.k_count, k, l)]
    }

    /// `ĝ_{k,l}(x)` for any `k ≠ l`, using `ĝ_{l,k} = −ĝ_{k,l}`.
    pub fn duel(&self, k: usize, l: usize, x: f64) -> i8 {
        match k.cmp(&l) {
            std::cmp::Ordering::Less => self.classifier(k, l).predict(x),
            std::cmp::Ordering::Greater => -self.classifier(l, k).predict(x),
            std::cmp::Ordering::Equal => panic!("a label does not duel itself"),
        }
    }

    pub fn tournament_at(&self, x: f64) -> Tournament {
        Tournament::from_duels(self.k_count, |k, l| self.duel(k, l, x) == 1)
    }

    pub fn score_labels(&self, x: f64) -> ScoreVector {
        copeland_ranks(&self.tournament_at(x))
    }

    pub fn predict_permutation(&self, x: f64) -> Prediction {
        let tournament = self.tournament_at(x);
        let scores = copeland_ranks(&tournament);
        let permutation = ranks_from_scores(&scores, self.tie_break);
        Prediction {
            was_cyclic: !tournament.is_acyclic(),
            scores,
            permutation,
        }
    }

    /// The OVO multiclass prediction: the label ranked first.
    pub fn classify(&self, x: f64) -> usize {
        self.predict_permutation(x).permutation.label_at(1)
    }

    /// The same ranker with every duel reversed.
    pub fn inverted(self) -> LabelRanker<Flipped<C>> {
        LabelRanker {
            k_count: self.k_count,
            classifiers: self.classifiers.into_iter().map(Flipped).collect(),
            tie_break: self.tie_break,
        }
    }
}

/// Fits every duel classifier on its binary view of `data`.
///
/// Pairs are fitted in parallel; the result does not depend on scheduling.
pub fn fit_ovo(
    data: &LabeledDataset,
    learner: LearnerSpec,
    tie_break: TieBreakPolicy,
) -> Result<LabelRanker> {
    let k_count = data.k_count();
    if k_count < 2 {
        return Err(Error::param("k_count", format!("{k_count} < 2 labels")));
    }
    let all_pairs: Vec<(usize, usize)> = perm::pairs(k_count).collect();
    let classifiers = all_pairs
        .par_iter()
        .map(|&(k, l)| learner.fit(&BinaryView::extract(data, k, l)?))
        .collect::<Result<Vec<_>>>()?;
    LabelRanker::from_classifiers(k_count, classifiers, tie_break)
}

/// Bayes rule for the duel `k < l` of a synthetic posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesDuel {
    oracle: PosteriorOracle,
    k: usize,
    l: usize,
}

impl BinaryClassifier for BayesDuel {
    /// `+1` iff `η_l(x) > η_k(x)`. Exact ties (measure zero) go to `k`.
    fn predict(&self, x: f64) -> i8 {
        let eta = self.oracle.eta(x);
        if eta[self.l] > eta[self.k] {
            1
        } else {
            -1
        }
    }
}

/// The OVO ranker whose duels are decided by the Bayes binary rules.
pub fn bayes_ranker(oracle: &PosteriorOracle, tie_break: TieBreakPolicy) -> LabelRanker<BayesDuel> {
    let k_count = oracle.k_count();
    let classifiers = perm::pairs(k_count)
        .map(|(k, l)| BayesDuel {
            oracle: oracle.clone(),
            k,
            l,
        })
        .collect();
    LabelRanker::from_classifiers(k_count, classifiers, tie_break)
        .expect("oracles have at least two labels")
}

/// A map from points to full rankings of the labels.
pub trait RankingRule {
    fn k_count(&self) -> usize;
    fn rank(&self, x: f64) -> Permutation;
}

impl<C: BinaryClassifier> RankingRule for LabelRanker<C> {
    fn k_count(&self) -> usize {
        self.k_count
    }

    fn rank(&self, x: f64) -> Permutation {
        self.predict_permutation(x).permutation
    }
}

/// Sorts labels by decreasing posterior; ties go to the lower label.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesRankingRule(pub PosteriorOracle);

impl RankingRule for BayesRankingRule {
    fn k_count(&self) -> usize {
        self.0.k_count()
    }

    fn rank(&self, x: f64) -> Permutation {
        Permutation::sorting_decreasing(&self.0.eta(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingRiskReport {
    /// Fraction of test points where the predicted ranking differs from the
    /// posterior-optimal one.
    pub mismatch_rate: f64,
    /// Mean Kendall τ distance to the posterior-optimal ranking.
    pub mean_kendall: f64,
    /// Fraction of test points whose duel tournament has a cycle.
    pub cycle_rate: f64,
    pub n_test: usize,
    /// Test points discarded because the posterior had tied entries there.
    pub redraws: usize,
}

/// Redraws allowed per requested test point before the oracle is declared
/// degenerate.
const MAX_REDRAWS_PER_POINT: usize = 100;

/// Monte Carlo estimate of the ranking risks against the exact optimum
/// `σ*_x`, on `n_test` uniform test points.
///
/// Points where `η(x)` has tied entries are skipped and redrawn.
pub fn estimate_ranking_risk<C: BinaryClassifier>(
    ranker: &LabelRanker<C>,
    oracle: &PosteriorOracle,
    n_test: usize,
    seed: u64,
) -> Result<RankingRiskReport> {
    use rand::Rng;

    if oracle.k_count() != ranker.k_count() {
        return Err(Error::DimensionMismatch {
            expected: ranker.k_count(),
            got: oracle.k_count(),
        });
    }
    if n_test == 0 {
        return Err(Error::param("n_test", "must be positive"));
    }
    let mut rng = rng::seeded(seed);
    let mut eta = vec![0.0; oracle.k_count()];
    let (mut mismatches, mut kendall_sum, mut cycles) = (0usize, 0u64, 0usize);
    let mut redraws = 0usize;
    let mut accepted = 0usize;
    while accepted < n_test {
        let x: f64 = rng.gen();
        oracle.eta_into(x, &mut eta);
        let optimal = match synth::sigma_star(&eta) {
            Ok(p) => p,
            Err(_) => {
                redraws += 1;
                if redraws > MAX_REDRAWS_PER_POINT * n_test {
                    return Err(Error::Degenerate(format!(
                        "posterior has tied entries at {redraws} of the sampled test points"
                    )));
                }
                continue;
            }
        };
        accepted += 1;
        let pred = ranker.predict_permutation(x);
        let d = kendall_tau(&pred.permutation, &optimal);
        mismatches += usize::from(d != 0);
        kendall_sum += d;
        cycles += usize::from(pred.was_cyclic);
    }
    if redraws > 0 {
        debug!("estimate_ranking_risk: redrew {redraws} tied test points");
    }
    let n = n_test as f64;
    Ok(RankingRiskReport {
        mismatch_rate: mismatches as f64 / n,
        mean_kendall: kendall_sum as f64 / n,
        cycle_rate: cycles as f64 / n,
        n_test,
        redraws,
    })
}

/// Empirical top-`k` risk: the fraction of test points whose label is not
/// among the `k` best-ranked labels. `k` counts from 1.
pub fn topk_error<R: RankingRule + ?Sized>(
    rule: &R,
    test: &LabeledDataset,
    k: usize,
) -> Result<f64> {
    let k_count = rule.k_count();
    if k == 0 || k > k_count {
        return Err(Error::param("k", format!("{k} not in 1..={k_count}")));
    }
    if test.k_count() != k_count {
        return Err(Error::DimensionMismatch {
            expected: k_count,
            got: test.k_count(),
        });
    }
    if test.is_empty() {
        return Ok(0.0);
    }
    let misses = test
        .points()
        .iter()
        .filter(|&&(x, y)| rule.rank(x).rank_of(y) > k)
        .count();
    Ok(misses as f64 / test.len() as f64)
}

/// Constants entering the fast-rate bound for the OVO duels.
///
/// * `alpha`: noise exponent, in `[0, 1]`;
/// * `b`: noise constant `B > 0`;
/// * `eps`: lower bound `ε ∈ (0, 1]` on `η_k + η_l`;
/// * `v`: VC dimension of the duel classifiers;
/// * `c`: absolute constant of the localized Rademacher bound
///   `ψ(r) ≤ C r √(V log n / n)`. Its value is not known in closed form, so
///   the bounds below are only meaningful up to this choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBoundParams {
    pub alpha: f64,
    pub b: f64,
    pub eps: f64,
    pub v: f64,
    pub c: f64,
}

impl RateBoundParams {
    pub fn new(alpha: f64, b: f64, eps: f64, v: f64, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} not in [0, 1]")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::param("B", format!("{b} must be positive")));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::param("eps", format!("{eps} not in (0, 1]")));
        }
        if !(v >= 1.0 && v.is_finite()) {
            return Err(Error::param("V", format!("{v} must be at least 1")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("C", format!("{c} must be positive")));
        }
        Ok(RateBoundParams {
            alpha,
            b,
            eps,
            v,
            c,
        })
    }

    /// `h = ε^(3−2α) (1−α)^(1−α) α^α / B^(1−α)`, with `0^0 = 1`.
    pub fn h(&self) -> f64 {
        let a = self.alpha;
        self.eps.powf(3.0 - 2.0 * a) * (1.0 - a).powf(1.0 - a) * a.powf(a) / self.b.powf(1.0 - a)
    }

    /// `β = B^(1−α) / ((1−α)^(1−α) α^α)`, with `0^0 = 1`.
    pub fn beta(&self) -> f64 {
        let a = self.alpha;
        self.b.powf(1.0 - a) / ((1.0 - a).powf(1.0 - a) * a.powf(a))
    }

    fn require_interior(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(Error::Endpoint {
                alpha: self.alpha,
                reason: "the bound's exponents require 0 < alpha < 1; see the README for the limit conventions",
            })
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("{delta} not in (0, 1)")))
    }
}

/// Excess-risk rate of one duel's empirical risk minimizer, holding with
/// probability at least `1 − δ`:
///
/// `r_n(δ) = 2 (1/(n h))^(1/(2−α)) [(64 C² V log n)^(1/(2−α)) + (32 log(2/δ))^(1/(2−α))]`.
pub fn rate_bound(params: &RateBoundParams, n: u64, delta: f64) -> Result<f64> {
    params.require_interior()?;
    check_delta(delta)?;
    if n < 2 {
        return Err(Error::param(
            "n",
            format!("{n} < 2; log n must be positive"),
        ));
    }
    let p = 1.0 / (2.0 - params.alpha);
    let n = n as f64;
    let complexity = (64.0 * params.c * params.c * params.v * n.ln()).powf(p);
    let confidence = (32.0 * (2.0 / delta).ln()).powf(p);
    Ok(2.0 * (1.0 / (n * params.h())).powf(p) * (complexity + confidence))
}

/// Sample size beyond which [`rate_bound`] applies:
///
/// `max{(2/δ)^(1/(2C²V)), log(2/δ) ((16/3)^(2−α) / (32 β ε^α))^(1/(1−α))}`,
/// rounded up, and at least 1.
pub fn n0_upper_bound(params: &RateBoundParams, delta: f64) -> Result<u64> {
    params.require_interior()?;
    check_delta(delta)?;
    let a = params.alpha;
    let log_term = (2.0 / delta).ln();
    let first = (2.0 / delta).powf(1.0 / (2.0 * params.c * params.c * params.v));
    let second = log_term
        * ((16.0_f64 / 3.0).powf(2.0 - a) / (32.0 * params.beta() * params.eps.powf(a)))
            .powf(1.0 / (1.0 - a));
    let bound = first.max(second).ceil();
    if !bound.is_finite() || bound >= u64::MAX as f64 {
        return Err(Error::param("n0", format!("bound {bound} overflows")));
    }
    Ok((bound as u64).max(1))
}

#[derive(Serialize, Deserialize)]
struct RankerFile<C> {
    k_count: usize,
    tie_break: TieBreakPolicy,
    classifiers: Vec<PairEntry<C>>,
}

#[derive(Serialize, Deserialize)]
struct PairEntry<C> {
    k: usize,
    l: usize,
    model: C,
}

impl<C: Serialize + Clone> Serialize for LabelRanker<C> {
    /// `{k_count, tie_break, classifiers: [{k, l, model}]}` with 1-based labels.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RankerFile {
            k_count: self.k_count,
            tie_break: self.tie_break,
            classifiers: perm::pairs(self.k_count)
                .zip(&self.classifiers)
                .map(|((k, l), model)| PairEntry {
                    k: k + 1,
                    l: l + 1,
                    model: model.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de, C: Deserialize<'de> + BinaryClassifier> Deserialize<'de> for LabelRanker<C> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;

        let file = RankerFile::<C>::deserialize(d)?;
        let k_count = file.k_count;
        if k_count < 2 {
            return Err(D::Error::custom(format!("k_count {k_count} < 2")));
        }
        let mut slots: Vec<Option<C>> = (0..pair_count(k_count)).map(|_| None).collect();
        for entry in file.classifiers {
            let (k, l) = (entry.k, entry.l);
            if !(1 <= k && k < l && l <= k_count) {
                return Err(D::Error::custom(format!("invalid pair ({k}, {l})")));
            }
            let slot = &mut slots[pair_index(k_count, k - 1, l - 1)];
            if slot.replace(entry.model).is_some() {
                return Err(D::Error::custom(format!("duplicate pair ({k}, {l})")));
            }
        }
        let classifiers = slots
            .into_iter()
            .zip(perm::pairs(k_count))
            .map(|(slot, (k, l))| {
                slot.ok_or_else(|| D::Error::custom(format!("missing pair ({}, {})", k + 1, l + 1)))
            })
            .collect::<std::result::Result<Vec<C>, _>>()?;
        LabelRanker::from_classifiers(k_count, classifiers, file.tie_break)
            .map_err(D::Error::custom)
    }
}
