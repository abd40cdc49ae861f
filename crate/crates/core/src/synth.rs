//! Synthetic posteriors on `[0, 1]` and samplers built on them.
//!
//! [`PosteriorOracle`] defines `K = 2^(D+1)` class probabilities as products
//! of `D + 1` warped noise profiles. Label `k` (0-based) is read as a
//! `(D+1)`-bit word; level `d` contributes `h_{α,s_d}(x)` when bit `d` is set
//! and `1 − h_{α,s_d}(x)` otherwise, so the probabilities sum to one at
//! every `x`. The exponent `α ∈ (0, 1]` controls how much posterior mass sits
//! near the pairwise decision boundaries: `α = 1` gives hard steps, small `α`
//! gives flat, noisy profiles.

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} not in (0, 1]")))
    }
}

fn h_alpha_unchecked(alpha: f64, x: f64) -> f64 {
    let exponent = (1.0 - alpha) / alpha;
    let sign = if 2.0 * x > 1.0 { 1.0 } else { -1.0 };
    // powf(0, 0) == 1, which is the α = 1 convention.
    0.5 + 0.5 * sign * (2.0 * x - 1.0).abs().powf(exponent)
}

fn h_alpha_warped_unchecked(alpha: f64, x0: f64, x: f64) -> f64 {
    let u = if x < x0 {
        x / (2.0 * x0)
    } else {
        0.5 + (x - x0) / (2.0 * (1.0 - x0))
    };
    h_alpha_unchecked(alpha, u)
}

/// `1/2 + 1/2 · ε(x) · |2x − 1|^((1−α)/α)` with `ε(x) = ±1` on either side
/// of `1/2` (`−1` at `x = 1/2`).
pub fn h_alpha(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(h_alpha_unchecked(alpha, x))
}

/// [`h_alpha`] composed with the piecewise-linear map sending `0 → 0`,
/// `x0 → 1/2`, `1 → 1`.
pub fn h_alpha_warped(alpha: f64, x0: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_split(x0)?;
    Ok(h_alpha_warped_unchecked(alpha, x0, x))
}

fn check_split(x0: f64) -> Result<()> {
    if x0 > 0.0 && x0 < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "x0",
            format!("split point {x0} not in (0, 1)"),
        ))
    }
}

/// Base-2 van der Corput points `1/2, 1/4, 3/4, 1/8, 5/8, …`, one per level.
///
/// With all splits at `1/2`, labels whose bit words have the same popcount
/// get identical probabilities everywhere; spreading the splits removes
/// those ties.
pub fn spread_splits(depth: usize) -> Vec<f64> {
    (1..=depth as u64 + 1)
        .map(|mut i| {
            let (mut value, mut scale) = (0.0, 0.5);
            while i > 0 {
                if i & 1 == 1 {
                    value += scale;
                }
                i >>= 1;
                scale *= 0.5;
            }
            value
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OracleParams", into = "OracleParams")]
pub struct PosteriorOracle {
    depth: usize,
    alpha: f64,
    splits: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OracleParams {
    depth: usize,
    alpha: f64,
    #[serde(default)]
    splits: Option<Vec<f64>>,
}

impl TryFrom<OracleParams> for PosteriorOracle {
    type Error = Error;

    fn try_from(p: OracleParams) -> Result<Self> {
        match p.splits {
            Some(splits) => PosteriorOracle::with_splits(p.depth, p.alpha, splits),
            None => PosteriorOracle::new(p.depth, p.alpha),
        }
    }
}

impl From<PosteriorOracle> for OracleParams {
    fn from(o: PosteriorOracle) -> Self {
        OracleParams {
            depth: o.depth,
            alpha: o.alpha,
            splits: Some(o.splits),
        }
    }
}

/// Deepest supported tree; `K = 2^(D+1)` labels must stay manageable.
pub const MAX_DEPTH: usize = 15;

impl PosteriorOracle {
    /// All split points at `1/2`.
    pub fn new(depth: usize, alpha: f64) -> Result<Self> {
        Self::with_splits(depth, alpha, vec![0.5; depth + 1])
    }

    /// Split points from [`spread_splits`].
    pub fn spread(depth: usize, alpha: f64) -> Result<Self> {
        Self::with_splits(depth, alpha, spread_splits(depth))
    }

    pub fn with_splits(depth: usize, alpha: f64, splits: Vec<f64>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::param(
                "depth",
                format!("{depth} exceeds {MAX_DEPTH}"),
            ));
        }
        check_alpha(alpha)?;
        if splits.len() != depth + 1 {
            return Err(Error::param(
                "splits",
                format!("expected {} split points, got {}", depth + 1, splits.len()),
            ));
        }
        for &s in &splits {
            check_split(s).map_err(|_| Error::param("splits", format!("{s} not in (0, 1)")))?;
        }
        Ok(PosteriorOracle {
            depth,
            alpha,
            splits,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    pub fn k_count(&self) -> usize {
        1 << (self.depth + 1)
    }

    /// Posterior probabilities `η(x)`, one entry per label.
    pub fn eta(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.k_count()];
        self.eta_into(x, &mut out);
        out
    }

    /// Writes `η(x)` into `out`, which must hold `k_count()` entries.
    pub fn eta_into(&self, x: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.k_count());
        let levels: Vec<f64> = self
            .splits
            .iter()
            .map(|&s| h_alpha_warped_unchecked(self.alpha, s, x))
            .collect();
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = levels
                .iter()
                .enumerate()
                .map(|(d, &h)| if (k >> d) & 1 == 1 { h } else { 1.0 - h })
                .product();
        }
    }
}

/// The posterior-optimal permutation: labels sorted by decreasing `η`.
///
/// Ties make the optimum non-unique and are reported as
/// [`Error::Degenerate`].
pub fn sigma_star(eta: &[f64]) -> Result<Permutation> {
    let p = Permutation::sorting_decreasing(eta);
    let order = p.order();
    for w in order.windows(2) {
        if eta[w[0]] == eta[w[1]] {
            return Err(Error::Degenerate(format!(
                "labels {} and {} share posterior {}",
                w[0] + 1,
                w[1] + 1,
                eta[w[0]]
            )));
        }
    }
    Ok(p)
}

/// Bayes rule for the duel `k < l`: `+1` when `l` is more probable, `−1`
/// when `k` is.
pub fn bayes_binary(eta: &[f64], k: usize, l: usize) -> Result<i8> {
    if k >= l || l >= eta.len() {
        return Err(Error::param(
            "pair",
            format!("need k < l < {}, got ({k}, {l})", eta.len()),
        ));
    }
    if eta[k] == eta[l] {
        return Err(Error::Degenerate(format!(
            "labels {} and {} share posterior {}",
            k + 1,
            l + 1,
            eta[k]
        )));
    }
    Ok(if eta[l] > eta[k] { 1 } else { -1 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    k_count: usize,
    points: Vec<(f64, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    y: usize,
}

impl LabeledDataset {
    /// Labels are 0-based and must be below `k_count`.
    pub fn new(k_count: usize, points: Vec<(f64, usize)>) -> Result<Self> {
        if k_count == 0 {
            return Err(Error::param("k_count", "must be positive"));
        }
        if let Some(i) = points.iter().position(|&(_, y)| y >= k_count) {
            return Err(Error::Data(format!(
                "point {i} has label {} outside 1..={k_count}",
                points[i].1 + 1
            )));
        }
        Ok(LabeledDataset { k_count, points })
    }

    pub fn empty(k_count: usize) -> Self {
        LabeledDataset {
            k_count,
            points: Vec::new(),
        }
    }

    pub fn k_count(&self) -> usize {
        self.k_count
    }

    pub fn points(&self) -> &[(f64, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points carrying each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k_count];
        for &(_, y) in &self.points {
            counts[y] += 1;
        }
        counts
    }

    /// Empirical label frequencies; all zero on an empty dataset.
    pub fn label_proportions(&self) -> Vec<f64> {
        let n = self.points.len();
        self.label_counts()
            .into_iter()
            .map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }

    /// CSV with header `x,y`, labels 1-based.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for &(x, y) in &self.points {
            w.serialize(CsvRow { x, y: y + 1 })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `x,y` CSV format. `k_count` defaults to the largest label seen.
    pub fn read_csv<R: io::Read>(reader: R, k_count: Option<usize>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        for (i, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            if row.y == 0 {
                return Err(Error::Data(format!(
                    "row {} has label 0; labels are 1-based",
                    i + 1
                )));
            }
            if !row.x.is_finite() {
                return Err(Error::Data(format!("row {} has non-finite x", i + 1)));
            }
            points.push((row.x, row.y - 1));
        }
        let k = match k_count {
            Some(k) => k,
            None => points.iter().map(|&(_, y)| y + 1).max().unwrap_or(0),
        };
        LabeledDataset::new(k, points)
    }
}

/// Inverse-CDF draw from a discrete distribution given by nonnegative
/// `weights`. Falls back to the last positive weight on rounding overshoot.
fn draw_categorical<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("at least one positive weight")
}

/// `n` i.i.d. pairs with `X ~ U[0, 1]` and `Y | X ~ η(X)`.
pub fn sample_dataset(oracle: &PosteriorOracle, n: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng::seeded(seed);
    let mut eta = vec![0.0; oracle.k_count()];
    let points = (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            oracle.eta_into(x, &mut eta);
            (x, draw_categorical(&eta, 1.0, &mut rng))
        })
        .collect();
    LabeledDataset {
        k_count: oracle.k_count(),
        points,
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::param("weights", "empty weight vector"));
    }
    if let Some(i) = weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::param(
            "weights",
            format!("weight {} at label {} is not positive", weights[i], i + 1),
        ));
    }
    Ok(())
}

/// Sequential Plackett-Luce draw of the labels listed in `pool`, appended
/// to `order` top first. `pool` is consumed.
fn plackett_luce_fill<R: Rng + ?Sized>(
    weights: &[f64],
    mut pool: Vec<usize>,
    order: &mut Vec<usize>,
    rng: &mut R,
) {
    let mut remaining: Vec<f64> = pool.iter().map(|&k| weights[k]).collect();
    while !pool.is_empty() {
        let total: f64 = remaining.iter().sum();
        let i = draw_categorical(&remaining, total, rng);
        order.push(pool.swap_remove(i));
        remaining.swap_remove(i);
    }
}

/// One Plackett-Luce permutation: the top label is drawn with probability
/// proportional to its weight, the next one from the remaining labels with
/// renormalized weights, and so on.
pub fn plackett_luce_with<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Permutation> {
    check_weights(weights)?;
    let mut order = Vec::with_capacity(weights.len());
    plackett_luce_fill(weights, (0..weights.len()).collect(), &mut order, rng);
    Ok(Permutation::from_order(&order))
}

pub fn plackett_luce_sample(weights: &[f64], seed: u64) -> Result<Permutation> {
    plackett_luce_with(weights, &mut rng::seeded(seed))
}

/// A full ranking whose top label is the observed `y` and whose remaining
/// labels follow a Plackett-Luce draw with weights `η`.
///
/// Labels with zero posterior (possible at `α = 1`) go last, in random
/// order; they are never drawn ahead of a positive-weight label.
pub fn couple_sigma_with<R: Rng + ?Sized>(
    y: usize,
    eta: &[f64],
    rng: &mut R,
) -> Result<Permutation> {
    if y >= eta.len() {
        return Err(Error::param(
            "y",
            format!("label {} outside 1..={}", y + 1, eta.len()),
        ));
    }
    if eta[y].is_nan() || eta[y] <= 0.0 {
        return Err(Error::param(
            "y",
            format!("observed label {} has zero posterior", y + 1),
        ));
    }
    if let Some(i) = eta.iter().position(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::param(
            "eta",
            format!("entry {} is {}", i + 1, eta[i]),
        ));
    }
    let mut order = Vec::with_capacity(eta.len());
    order.push(y);
    let (positive, zero): (Vec<usize>, Vec<usize>) = (0..eta.len())
        .filter(|&k| k != y)
        .partition(|&k| eta[k] > 0.0);
    plackett_luce_fill(eta, positive, &mut order, rng);
    let uniform = vec![1.0; eta.len()];
    plackett_luce_fill(&uniform, zero, &mut order, rng);
    Ok(Permutation::from_order(&order))
}

pub fn couple_sigma(y: usize, eta: &[f64], seed: u64) -> Result<Permutation> {
    couple_sigma_with(y, eta, &mut rng::seeded(seed))
}

/// Grid minima of the pairwise margin and of the pairwise posterior mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDiagnostics {
    /// `min |p_{i,j}(x) − 1/2|` with `p_{i,j} = η_i / (η_i + η_j)`, over grid
    /// points and pairs where `η_i + η_j > 0`.
    pub h_margin: f64,
    /// `min η_i(x) + η_j(x)` over grid points and pairs `i ≠ j`.
    pub eps_min: f64,
}

/// Evaluates [`NoiseDiagnostics`] on the uniform grid `i / (grid_size − 1)`.
pub fn noise_diagnostics(oracle: &PosteriorOracle, grid_size: usize) -> Result<NoiseDiagnostics> {
    if grid_size < 2 {
        return Err(Error::param("grid_size", format!("{grid_size} < 2")));
    }
    let k = oracle.k_count();
    let mut eta = vec![0.0; k];
    let mut h_margin = 0.5_f64;
    let mut eps_min = 1.0_f64;
    for i in 0..grid_size {
        let x = i as f64 / (grid_size - 1) as f64;
        oracle.eta_into(x, &mut eta);
        for a in 0..k {
            for b in a + 1..k {
                let mass = eta[a] + eta[b];
                eps_min = eps_min.min(mass);
                if mass > 0.0 {
                    h_margin = h_margin.min((eta[a] / mass - 0.5).abs());
                }
            }
        }
    }
    Ok(NoiseDiagnostics {
        h_margin,
        eps_min: eps_min.max(0.0),
    })
}
