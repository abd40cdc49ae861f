//! Binary classifiers for a single duel and their empirical risk.
//!
//! Decision stumps are fitted by exact empirical risk minimization: sort the
//! points once, sweep every threshold interval, keep the best. The linear
//! model is a plain logistic regression trained by full-batch gradient
//! descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::LabeledDataset;

/// A rule mapping a point of `[0, 1]` to a sign in `{-1, +1}`.
pub trait BinaryClassifier {
    fn predict(&self, x: f64) -> i8;
}

impl<C: BinaryClassifier + ?Sized> BinaryClassifier for &C {
    fn predict(&self, x: f64) -> i8 {
        (**self).predict(x)
    }
}

impl<C: BinaryClassifier + ?Sized> BinaryClassifier for Box<C> {
    fn predict(&self, x: f64) -> i8 {
        (**self).predict(x)
    }
}

/// Always predicts the same sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant(pub i8);

impl BinaryClassifier for Constant {
    fn predict(&self, _: f64) -> i8 {
        self.0
    }
}

/// Predicts the opposite of the wrapped classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flipped<C>(pub C);

impl<C: BinaryClassifier> BinaryClassifier for Flipped<C> {
    fn predict(&self, x: f64) -> i8 {
        -self.0.predict(x)
    }
}

/// The points of one duel `k < l`, relabelled `−1` for `k` and `+1` for `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryView {
    pair: (usize, usize),
    points: Vec<(f64, i8)>,
    n_k: usize,
    n_l: usize,
}

impl BinaryView {
    /// Filters `data` down to labels `k` and `l` (0-based, `k < l`).
    pub fn extract(data: &LabeledDataset, k: usize, l: usize) -> Result<Self> {
        if k >= l || l >= data.k_count() {
            return Err(Error::param(
                "pair",
                format!(
                    "need k < l <= {}, got ({}, {})",
                    data.k_count(),
                    k + 1,
                    l + 1
                ),
            ));
        }
        let mut view = BinaryView {
            pair: (k, l),
            points: Vec::new(),
            n_k: 0,
            n_l: 0,
        };
        for &(x, y) in data.points() {
            if y == k {
                view.points.push((x, -1));
                view.n_k += 1;
            } else if y == l {
                view.points.push((x, 1));
                view.n_l += 1;
            }
        }
        Ok(view)
    }

    /// A view from raw signed points, for callers that do not start from a
    /// labelled dataset. Signs must be `±1`.
    pub fn from_signed(pair: (usize, usize), points: Vec<(f64, i8)>) -> Result<Self> {
        if let Some(i) = points.iter().position(|&(_, s)| s != 1 && s != -1) {
            return Err(Error::Data(format!("point {i} has sign {}", points[i].1)));
        }
        let n_l = points.iter().filter(|&&(_, s)| s == 1).count();
        Ok(BinaryView {
            pair,
            n_k: points.len() - n_l,
            n_l,
            points,
        })
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn points(&self) -> &[(f64, i8)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(n_k, n_l)`.
    pub fn counts(&self) -> (usize, usize) {
        (self.n_k, self.n_l)
    }
}

/// Number of points of `view` that `clf` gets wrong.
pub fn misclassified<C: BinaryClassifier + ?Sized>(clf: &C, view: &BinaryView) -> usize {
    view.points
        .iter()
        .filter(|&&(x, y)| clf.predict(x) != y)
        .count()
}

/// Fraction of misclassified points; 0 on an empty view (`0/0 = 0`).
pub fn empirical_binary_risk<C: BinaryClassifier + ?Sized>(clf: &C, view: &BinaryView) -> f64 {
    if view.is_empty() {
        0.0
    } else {
        misclassified(clf, view) as f64 / view.len() as f64
    }
}

/// `x ↦ 2·1{(x − s)·ε ≥ 0} − 1`.
///
/// Thresholds may be `±∞`, making the stump constant. In JSON the infinite
/// thresholds are written as the strings `"-inf"` and `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    #[serde(rename = "s", with = "extended_f64")]
    pub threshold: f64,
    #[serde(rename = "eps")]
    pub polarity: i8,
}

impl Stump {
    /// The stump fitted to an empty view: `+1` everywhere.
    pub const SENTINEL: Stump = Stump {
        threshold: f64::NEG_INFINITY,
        polarity: 1,
    };
}

impl BinaryClassifier for Stump {
    fn predict(&self, x: f64) -> i8 {
        // Compared without multiplying so that `x − s` never meets `0·∞`.
        let on_positive_side = if self.polarity >= 0 {
            x >= self.threshold
        } else {
            x <= self.threshold
        };
        if on_positive_side {
            1
        } else {
            -1
        }
    }
}

/// A threshold strictly between `lo < hi` when one exists in floating point;
/// otherwise the endpoint that keeps `lo` and `hi` on opposite sides for the
/// given polarity.
fn split_between(lo: f64, hi: f64, polarity: i8) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid < hi {
        mid
    } else if polarity > 0 {
        hi
    } else {
        lo
    }
}

/// Exact ERM over stumps.
///
/// Candidates are the `G + 1` cuts around the `G` distinct input values
/// (midpoints between neighbours plus `±∞`), each with both polarities.
/// Among equally good stumps the smallest threshold wins, then `ε = +1`.
/// An empty view yields [`Stump::SENTINEL`].
pub fn fit_stump_erm(view: &BinaryView) -> Stump {
    let mut pts = view.points.clone();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Cut c puts distinct values 0..c on the left. Errors:
    //   ε = +1 (right side positive): positives on the left + negatives on the right
    //   ε = −1 (left side positive):  negatives on the left + positives on the right
    let total_pos = view.n_l;
    let total_neg = view.n_k;
    let (mut left_pos, mut left_neg) = (0usize, 0usize);

    let mut best_errors = total_neg; // cut 0, ε = +1: everything predicted +1
    let mut best_cut = (0usize, 1i8);
    let mut consider = |errors: usize, cut: (usize, i8)| {
        if errors < best_errors {
            best_errors = errors;
            best_cut = cut;
        }
    };
    consider(total_pos, (0, -1));

    // (value left of the cut, value right of the cut) for cuts 1..=G
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        while i < pts.len() && pts[i].0 == x {
            if pts[i].1 > 0 {
                left_pos += 1;
            } else {
                left_neg += 1;
            }
            i += 1;
        }
        let cut = cuts.len() + 1;
        cuts.push((x, pts.get(i).map_or(f64::INFINITY, |p| p.0)));
        consider(left_pos + (total_neg - left_neg), (cut, 1));
        consider(left_neg + (total_pos - left_pos), (cut, -1));
    }

    let (cut, polarity) = best_cut;
    let threshold = if cut == 0 {
        f64::NEG_INFINITY
    } else {
        let (lo, hi) = cuts[cut - 1];
        if hi.is_infinite() {
            f64::INFINITY
        } else {
            split_between(lo, hi, polarity)
        }
    };
    Stump {
        threshold,
        polarity,
    }
}

/// `sign(⟨w, x⟩ + b)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBinaryModel {
    #[serde(rename = "w")]
    pub weight: Vec<f64>,
    #[serde(rename = "b")]
    pub bias: f64,
}

impl LinearBinaryModel {
    pub fn zero(dim: usize) -> Self {
        LinearBinaryModel {
            weight: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision(&self, features: &[f64]) -> f64 {
        self.weight
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }

    pub fn predict_features(&self, features: &[f64]) -> i8 {
        if self.decision(features) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

impl BinaryClassifier for LinearBinaryModel {
    fn predict(&self, x: f64) -> i8 {
        self.predict_features(&[x])
    }
}

/// `log(1 + e^{−m})` without overflow.
fn softplus_neg(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// `1 / (1 + e^{m})`.
fn sigmoid_neg(margin: f64) -> f64 {
    if margin > 0.0 {
        let e = (-margin).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + margin.exp())
    }
}

/// Mean logistic loss of `model` on `view`; 0 on an empty view.
pub fn logistic_loss(model: &LinearBinaryModel, view: &BinaryView) -> f64 {
    if view.is_empty() {
        return 0.0;
    }
    view.points
        .iter()
        .map(|&(x, y)| softplus_neg(f64::from(y) * model.decision(&[x])))
        .sum::<f64>()
        / view.len() as f64
}

/// Full-batch gradient descent on the mean logistic loss, from zero.
///
/// The result depends only on the view and the step settings; `_seed` is
/// reserved for a future mini-batch mode and has no effect here.
pub fn fit_linear(
    view: &BinaryView,
    steps: usize,
    step_size: f64,
    _seed: u64,
) -> Result<LinearBinaryModel> {
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::param(
            "step_size",
            format!("{step_size} must be positive"),
        ));
    }
    if let Some(i) = view.points.iter().position(|p| !p.0.is_finite()) {
        return Err(Error::Data(format!(
            "point {i} has non-finite feature {}",
            view.points[i].0
        )));
    }
    let mut model = LinearBinaryModel::zero(1);
    if view.is_empty() {
        return Ok(model);
    }
    let n = view.len() as f64;
    for _ in 0..steps {
        let (mut gw, mut gb) = (0.0, 0.0);
        for &(x, y) in &view.points {
            let y = f64::from(y);
            let g = -y * sigmoid_neg(y * model.decision(&[x]));
            gw += g * x;
            gb += g;
        }
        model.weight[0] -= step_size * gw / n;
        model.bias -= step_size * gb / n;
    }
    Ok(model)
}

/// Which binary learner to run on every duel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerSpec {
    #[default]
    Stump,
    Linear {
        steps: usize,
        step_size: f64,
    },
}

impl LearnerSpec {
    pub const DEFAULT_LINEAR: LearnerSpec = LearnerSpec::Linear {
        steps: 500,
        step_size: 1.0,
    };

    pub fn fit(&self, view: &BinaryView) -> Result<BinaryModel> {
        Ok(match *self {
            LearnerSpec::Stump => BinaryModel::Stump(fit_stump_erm(view)),
            LearnerSpec::Linear { steps, step_size } => {
                BinaryModel::Linear(fit_linear(view, steps, step_size, 0)?)
            }
        })
    }
}

/// A fitted duel classifier, serialized as `{"stump": {s, eps}}` or
/// `{"linear": {w, b}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryModel {
    Stump(Stump),
    Linear(LinearBinaryModel),
}

impl BinaryClassifier for BinaryModel {
    fn predict(&self, x: f64) -> i8 {
        match self {
            BinaryModel::Stump(s) => s.predict(x),
            BinaryModel::Linear(m) => m.predict(x),
        }
    }
}

mod extended_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ExtendedF64;

    impl Visitor<'_> for ExtendedF64 {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtendedF64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(points: &[(f64, i8)]) -> BinaryView {
        BinaryView::from_signed((0, 1), points.to_vec()).unwrap()
    }

    #[test]
    fn binary_view_examples() {
        let data = LabeledDataset::new(3, vec![(0.1, 0), (0.2, 0), (0.3, 1), (0.4, 2)]).unwrap();
        let v = BinaryView::extract(&data, 0, 1).unwrap();
        assert_eq!(v.len(), 3);
        let signs: Vec<i8> = v.points().iter().map(|p| p.1).collect();
        assert_eq!(signs, vec![-1, -1, 1]);
        assert_eq!(v.counts(), (2, 1));
        assert_eq!(BinaryView::extract(&data, 1, 2).unwrap().len(), 2);
        assert!(BinaryView::extract(&data, 1, 1).is_err());
        assert!(BinaryView::extract(&data, 1, 3).is_err());
    }

    #[test]
    fn views_cover_each_point_k_minus_one_times() {
        let data =
            LabeledDataset::new(4, (0..40).map(|i| (i as f64 / 40.0, (i * 7) % 4)).collect())
                .unwrap();
        let total: usize = crate::perm::pairs(4)
            .map(|(k, l)| BinaryView::extract(&data, k, l).unwrap().len())
            .sum();
        assert_eq!(total, 40 * 3);
    }

    #[test]
    fn risk_examples() {
        let empty = view(&[]);
        assert_eq!(empirical_binary_risk(&Constant(1), &empty), 0.0);
        let v = view(&[(0.1, -1), (0.2, -1), (0.3, -1), (0.4, 1), (0.5, 1)]);
        assert_eq!(empirical_binary_risk(&Constant(1), &v), 0.6);
        let perfect = Stump {
            threshold: 0.35,
            polarity: 1,
        };
        assert_eq!(empirical_binary_risk(&perfect, &v), 0.0);
        assert_eq!(empirical_binary_risk(&Flipped(perfect), &v), 1.0);
    }

    #[test]
    fn stump_predict_with_sentinels() {
        let up = Stump {
            threshold: f64::NEG_INFINITY,
            polarity: 1,
        };
        let down = Stump {
            threshold: f64::NEG_INFINITY,
            polarity: -1,
        };
        let hi = Stump {
            threshold: f64::INFINITY,
            polarity: 1,
        };
        let hi_down = Stump {
            threshold: f64::INFINITY,
            polarity: -1,
        };
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(up.predict(x), 1);
            assert_eq!(down.predict(x), -1);
            assert_eq!(hi.predict(x), -1);
            assert_eq!(hi_down.predict(x), 1);
        }
        let s = Stump {
            threshold: 0.5,
            polarity: -1,
        };
        assert_eq!(s.predict(0.5), 1);
        assert_eq!(s.predict(0.6), -1);
        let s = Stump {
            threshold: 0.5,
            polarity: 1,
        };
        assert_eq!(s.predict(0.5), 1);
        assert_eq!(s.predict(0.4), -1);
    }

    #[test]
    fn stump_erm_examples() {
        let s = fit_stump_erm(&view(&[(0.1, -1), (0.2, -1), (0.8, 1)]));
        assert_eq!(
            s,
            Stump {
                threshold: 0.5,
                polarity: 1
            }
        );

        let s = fit_stump_erm(&view(&[(0.3, 1), (0.1, 1), (0.9, 1)]));
        assert_eq!(s, Stump::SENTINEL);

        assert_eq!(fit_stump_erm(&view(&[])), Stump::SENTINEL);

        // all negative: -inf with eps = -1 beats +inf with eps = +1 on threshold
        let s = fit_stump_erm(&view(&[(0.1, -1), (0.7, -1)]));
        assert_eq!(
            s,
            Stump {
                threshold: f64::NEG_INFINITY,
                polarity: -1
            }
        );

        let s = fit_stump_erm(&view(&[(0.1, 1), (0.2, 1), (0.8, -1)]));
        assert_eq!(
            s,
            Stump {
                threshold: 0.5,
                polarity: -1
            }
        );
    }

    #[test]
    fn stump_erm_handles_duplicates() {
        // Same x with both labels: no threshold separates them.
        let v = view(&[(0.5, -1), (0.5, 1), (0.5, 1), (0.9, 1)]);
        let s = fit_stump_erm(&v);
        assert_eq!(misclassified(&s, &v), 1);
        assert_eq!(s, Stump::SENTINEL);
    }

    #[test]
    fn stump_erm_adjacent_floats() {
        let lo = 0.3_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let v = view(&[(lo, -1), (hi, 1)]);
        let s = fit_stump_erm(&v);
        assert_eq!(misclassified(&s, &v), 0);
        let v = view(&[(lo, 1), (hi, -1)]);
        let s = fit_stump_erm(&v);
        assert_eq!(misclassified(&s, &v), 0);
    }

    #[test]
    fn linear_examples() {
        let v = view(&[
            (0.1, -1),
            (0.2, -1),
            (0.3, -1),
            (0.7, 1),
            (0.8, 1),
            (0.9, 1),
        ]);
        let zero = fit_linear(&v, 0, 0.5, 0).unwrap();
        assert_eq!(zero, LinearBinaryModel::zero(1));
        assert!((0..=10).all(|i| zero.predict(i as f64 / 10.0) == 1));

        let m = fit_linear(&v, 500, 1.0, 0).unwrap();
        assert_eq!(empirical_binary_risk(&m, &v), 0.0);

        assert!(fit_linear(&v, 10, 0.0, 0).is_err());
        assert!(fit_linear(&view(&[(f64::NAN, 1)]), 10, 0.1, 0).is_err());
        assert_eq!(
            fit_linear(&view(&[]), 10, 0.1, 0).unwrap(),
            LinearBinaryModel::zero(1)
        );
    }

    #[test]
    fn logistic_loss_does_not_increase() {
        let v = view(&[
            (0.1, -1),
            (0.25, 1),
            (0.3, -1),
            (0.6, -1),
            (0.7, 1),
            (0.95, 1),
        ]);
        let mut prev = f64::INFINITY;
        for steps in 0..200 {
            let loss = logistic_loss(&fit_linear(&v, steps, 0.5, 0).unwrap(), &v);
            assert!(loss <= prev + 1e-15, "step {steps}: {loss} > {prev}");
            prev = loss;
        }
    }

    #[test]
    fn model_json() {
        let m = BinaryModel::Stump(Stump {
            threshold: 0.25,
            polarity: -1,
        });
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"stump":{"s":0.25,"eps":-1}}"#
        );
        let m = BinaryModel::Stump(Stump::SENTINEL);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"stump":{"s":"-inf","eps":1}}"#);
        assert_eq!(serde_json::from_str::<BinaryModel>(&s).unwrap(), m);
        let m = BinaryModel::Linear(LinearBinaryModel {
            weight: vec![2.0],
            bias: -1.0,
        });
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"linear":{"w":[2.0],"b":-1.0}}"#);
        assert_eq!(serde_json::from_str::<BinaryModel>(&s).unwrap(), m);
        assert_eq!(
            serde_json::from_str::<BinaryModel>(r#"{"stump":{"s":1,"eps":1}}"#).unwrap(),
            BinaryModel::Stump(Stump {
                threshold: 1.0,
                polarity: 1
            })
        );
    }

    #[test]
    fn learner_spec_json() {
        assert_eq!(
            serde_json::to_string(&LearnerSpec::Stump).unwrap(),
            "\"stump\""
        );
        let l: LearnerSpec =
            serde_json::from_str(r#"{"linear":{"steps":10,"step_size":0.5}}"#).unwrap();
        assert_eq!(
            l,
            LearnerSpec::Linear {
                steps: 10,
                step_size: 0.5
            }
        );
    }
}
