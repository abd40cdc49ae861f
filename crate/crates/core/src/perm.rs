//! Permutations of labels, distances between them, and tournaments.
//!
//! A [`Permutation`] is stored as ranks-of-labels: `ranks[k]` is the 1-based
//! rank of label `k`, rank 1 being the top. [`Permutation::invert`] gives the
//! labels-at-ranks view.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    ranks: Vec<usize>,
}

impl Permutation {
    /// Validates that `ranks` is a bijection onto `1..=K`.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let k = ranks.len();
        if k == 0 {
            return Err(Error::InvalidPermutation {
                index: 0,
                reason: "empty rank vector".into(),
            });
        }
        let mut seen = vec![false; k];
        for (index, &r) in ranks.iter().enumerate() {
            if r == 0 || r > k {
                return Err(Error::InvalidPermutation {
                    index,
                    reason: format!("rank {r} outside 1..={k}"),
                });
            }
            if std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::InvalidPermutation {
                    index,
                    reason: format!("duplicate rank {r}"),
                });
            }
        }
        Ok(Permutation { ranks })
    }

    pub fn identity(k: usize) -> Self {
        Permutation {
            ranks: (1..=k).collect(),
        }
    }

    /// Labels ranked by decreasing order of `values` with ties broken towards
    /// the lower label index.
    pub fn sorting_decreasing(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Self::from_order(&order)
    }

    /// Builds the permutation that puts `order[0]` first, `order[1]` second
    /// and so on. `order` must list every label exactly once.
    pub(crate) fn from_order(order: &[usize]) -> Self {
        let mut ranks = vec![0; order.len()];
        for (pos, &label) in order.iter().enumerate() {
            ranks[label] = pos + 1;
        }
        debug_assert!(Permutation::new(ranks.clone()).is_ok());
        Permutation { ranks }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Rank (1-based) of label `label` (0-based).
    pub fn rank_of(&self, label: usize) -> usize {
        self.ranks[label]
    }

    /// Label (0-based) holding rank `rank` (1-based).
    pub fn label_at(&self, rank: usize) -> usize {
        self.ranks
            .iter()
            .position(|&r| r == rank)
            .expect("rank within 1..=K")
    }

    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0; self.ranks.len()];
        for (k, &r) in self.ranks.iter().enumerate() {
            inv[r - 1] = k + 1;
        }
        Permutation { ranks: inv }
    }

    /// Labels (0-based) in rank order, top first.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.ranks.len()];
        for (k, &r) in self.ranks.iter().enumerate() {
            order[r - 1] = k;
        }
        order
    }

    /// The `k` labels (0-based) holding ranks `1..=k`.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut order = self.order();
        order.truncate(k);
        order
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(ranks: Vec<usize>) -> Result<Self> {
        Permutation::new(ranks)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.ranks
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Number of discordant label pairs.
    Kendall,
    /// Spearman footrule, `Σ |σ(i) − σ'(i)|`.
    Footrule,
    /// Spearman ρ distance, `Σ (σ(i) − σ'(i))²`.
    SpearmanRho,
    /// Number of labels whose ranks differ.
    Hamming,
    /// 0 if equal, 1 otherwise.
    ZeroOne,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Kendall,
        Metric::Footrule,
        Metric::SpearmanRho,
        Metric::Hamming,
        Metric::ZeroOne,
    ];
}

pub fn distance(metric: Metric, a: &Permutation, b: &Permutation) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let pairs = a
        .ranks
        .iter()
        .zip(&b.ranks)
        .map(|(&x, &y)| (x as i64, y as i64));
    let d = match metric {
        Metric::Kendall => kendall_tau(a, b),
        Metric::Footrule => pairs.map(|(x, y)| (x - y).unsigned_abs()).sum(),
        Metric::SpearmanRho => pairs.map(|(x, y)| ((x - y) * (x - y)) as u64).sum(),
        Metric::Hamming => pairs.filter(|(x, y)| x != y).count() as u64,
        Metric::ZeroOne => u64::from(a != b),
    };
    Ok(d)
}

/// Kendall τ distance by an O(K²) pair scan. Panics on mismatched lengths.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> u64 {
    assert_eq!(a.len(), b.len(), "permutations of different sizes");
    let (ra, rb) = (&a.ranks, &b.ranks);
    let mut discordant = 0;
    for i in 0..ra.len() {
        for j in i + 1..ra.len() {
            if (ra[i] < ra[j]) != (rb[i] < rb[j]) {
                discordant += 1;
            }
        }
    }
    discordant
}

/// Orientation of every duel between `k_count` labels.
///
/// Stored as one flag per unordered pair `k < l`: set when `l` beats `k`.
/// Completeness and antisymmetry hold by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tournament {
    k_count: usize,
    upper_wins: Vec<bool>,
}

/// Position of the unordered pair `k < l` in row-major upper-triangle order.
pub fn pair_index(k_count: usize, k: usize, l: usize) -> usize {
    debug_assert!(k < l && l < k_count);
    k * (2 * k_count - k - 1) / 2 + (l - k - 1)
}

/// All pairs `(k, l)` with `k < l`, in [`pair_index`] order.
pub fn pairs(k_count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k_count).flat_map(move |k| (k + 1..k_count).map(move |l| (k, l)))
}

pub fn pair_count(k_count: usize) -> usize {
    k_count * k_count.saturating_sub(1) / 2
}

impl Tournament {
    /// `higher_wins(k, l)` is queried once per pair `k < l` and returns true
    /// when `l` beats `k`.
    pub fn from_duels(k_count: usize, mut higher_wins: impl FnMut(usize, usize) -> bool) -> Self {
        let upper_wins = pairs(k_count).map(|(k, l)| higher_wins(k, l)).collect();
        Tournament {
            k_count,
            upper_wins,
        }
    }

    /// Tournament whose pair flags are the low bits of `mask`, in
    /// [`pair_index`] order. Useful for exhaustive enumeration.
    pub fn from_mask(k_count: usize, mask: u64) -> Self {
        assert!(
            pair_count(k_count) <= 64,
            "mask too narrow for {k_count} labels"
        );
        let mut i = 0;
        Tournament::from_duels(k_count, |_, _| {
            let bit = (mask >> i) & 1 == 1;
            i += 1;
            bit
        })
    }

    /// The tournament induced by a strict ranking: better rank wins.
    pub fn from_permutation(p: &Permutation) -> Self {
        Tournament::from_duels(p.len(), |k, l| p.rank_of(l) < p.rank_of(k))
    }

    pub fn k_count(&self) -> usize {
        self.k_count
    }

    /// True when `winner` beats `loser`. Panics when they are equal.
    pub fn beats(&self, winner: usize, loser: usize) -> bool {
        assert_ne!(winner, loser, "a label does not duel itself");
        if winner < loser {
            !self.upper_wins[pair_index(self.k_count, winner, loser)]
        } else {
            self.upper_wins[pair_index(self.k_count, loser, winner)]
        }
    }

    pub fn losses(&self) -> Vec<usize> {
        let mut losses = vec![0; self.k_count];
        for ((k, l), &l_wins) in pairs(self.k_count).zip(&self.upper_wins) {
            losses[if l_wins { k } else { l }] += 1;
        }
        losses
    }

    /// Copeland score of every label: wins minus losses.
    pub fn copeland_scores(&self) -> Vec<i64> {
        let last = self.k_count as i64 - 1;
        self.losses()
            .into_iter()
            .map(|lost| last - 2 * lost as i64)
            .collect()
    }

    /// True iff the beats relation is transitive.
    ///
    /// A tournament is transitive exactly when its loss counts are pairwise
    /// distinct; this checks for a directed 3-cycle instead so that the two
    /// characterizations can be tested against each other.
    pub fn is_acyclic(&self) -> bool {
        let k = self.k_count;
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    let ab = self.beats(a, b);
                    let bc = self.beats(b, c);
                    let ca = self.beats(c, a);
                    if ab == bc && bc == ca {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Per-label score: 1 plus the number of duels lost. Lower is better.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector {
    scores: Vec<usize>,
}

impl ScoreVector {
    pub fn new(scores: Vec<usize>) -> Result<Self> {
        let k = scores.len();
        if let Some(index) = scores.iter().position(|&s| s == 0 || s > k) {
            return Err(Error::param(
                "scores",
                format!("score {} at index {index} outside 1..={k}", scores[index]),
            ));
        }
        Ok(ScoreVector { scores })
    }

    pub fn scores(&self) -> &[usize] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// The scores as a permutation, if they already are one.
    pub fn as_permutation(&self) -> Option<Permutation> {
        Permutation::new(self.scores.clone()).ok()
    }
}

/// Scores `1 + losses` of every label, equal to `(K + 1 − C) / 2` with `C`
/// the Copeland score.
pub fn copeland_ranks(t: &Tournament) -> ScoreVector {
    ScoreVector {
        scores: t.losses().into_iter().map(|lost| lost + 1).collect(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreakPolicy {
    /// Among tied labels the lowest index gets the better rank.
    #[default]
    LowestLabelFirst,
    /// Tied labels are ordered by a fixed random priority drawn from the seed.
    SeededRandom(u64),
}

/// Orders labels by ascending score, resolving ties with `tie_break`.
///
/// Scores that already form a permutation are returned unchanged.
pub fn ranks_from_scores(s: &ScoreVector, tie_break: TieBreakPolicy) -> Permutation {
    if let Some(p) = s.as_permutation() {
        return p;
    }
    let k = s.len();
    let mut priority: Vec<usize> = (0..k).collect();
    if let TieBreakPolicy::SeededRandom(seed) = tie_break {
        priority.shuffle(&mut rng::seeded(seed));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&label| (s.scores[label], priority[label]));
    Permutation::from_order(&order)
}
