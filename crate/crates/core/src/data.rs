//! Observational datasets: covariates, binary treatment, outcome, optional
//! per-row potential-outcome means, and the index of the anchor covariate.
//!
//! File parsing and serialization live in the companion crate; this module
//! owns the in-memory representation and the pure transforms on it
//! (confounding induction, splitting, standardization).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::Matrix;
use crate::subseed;
use crate::{Error, Result};

/// A tabular treatment/outcome dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Matrix,
    t: Vec<bool>,
    y: Vec<f64>,
    mu0: Option<Vec<f64>>,
    mu1: Option<Vec<f64>>,
    y_cfactual: Option<Vec<f64>>,
    /// Per-row flag marking membership in a randomized subset, when known.
    e_flags: Option<Vec<bool>>,
    anchor_index: usize,
    feature_names: Vec<String>,
    /// Names of covariates removed by `induce_confounding`; they act as the
    /// dataset's hidden confounders from the model's point of view.
    dropped_features: Vec<String>,
}

impl Dataset {
    /// Validates and assembles a dataset. `feature_names` defaults to
    /// `x0, x1, ...` when `None`.
    pub fn new(
        x: Matrix,
        t: Vec<bool>,
        y: Vec<f64>,
        mu0: Option<Vec<f64>>,
        mu1: Option<Vec<f64>>,
        anchor_index: usize,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = x.rows();
        if n < 2 {
            return Err(Error::Data(format!("dataset needs at least 2 rows, got {n}")));
        }
        if t.len() != n || y.len() != n {
            return Err(Error::Data(format!(
                "row count mismatch: x has {n}, t has {}, y has {}",
                t.len(),
                y.len()
            )));
        }
        if anchor_index >= x.cols() {
            return Err(Error::Data(format!(
                "anchor index {anchor_index} out of range for {} covariates",
                x.cols()
            )));
        }
        if mu0.is_some() != mu1.is_some() {
            return Err(Error::Data("mu0 and mu1 must both be present or both absent".into()));
        }
        for (name, mu) in [("mu0", &mu0), ("mu1", &mu1)] {
            if let Some(m) = mu {
                if m.len() != n {
                    return Err(Error::Data(format!("{name} has {} rows, expected {n}", m.len())));
                }
            }
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite values in covariates or outcome".into()));
        }
        let feature_names = match feature_names {
            Some(names) => {
                if names.len() != x.cols() {
                    return Err(Error::Data(format!(
                        "{} feature names for {} columns",
                        names.len(),
                        x.cols()
                    )));
                }
                names
            }
            None => (0..x.cols()).map(|i| format!("x{i}")).collect(),
        };
        Ok(Self {
            x,
            t,
            y,
            mu0,
            mu1,
            y_cfactual: None,
            e_flags: None,
            anchor_index,
            feature_names,
            dropped_features: Vec::new(),
        })
    }

    pub fn with_y_cfactual(mut self, y_cf: Vec<f64>) -> Result<Self> {
        if y_cf.len() != self.len() {
            return Err(Error::Data("counterfactual outcome length mismatch".into()));
        }
        self.y_cfactual = Some(y_cf);
        Ok(self)
    }

    pub fn with_e_flags(mut self, e: Vec<bool>) -> Result<Self> {
        if e.len() != self.len() {
            return Err(Error::Data("randomized-subset flag length mismatch".into()));
        }
        self.e_flags = Some(e);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_features(&self) -> usize {
        self.x.cols()
    }

    pub fn covariates(&self) -> &Matrix {
        &self.x
    }

    pub fn treatment(&self) -> &[bool] {
        &self.t
    }

    pub fn outcome(&self) -> &[f64] {
        &self.y
    }

    pub fn mu0(&self) -> Option<&[f64]> {
        self.mu0.as_deref()
    }

    pub fn mu1(&self) -> Option<&[f64]> {
        self.mu1.as_deref()
    }

    pub fn y_cfactual(&self) -> Option<&[f64]> {
        self.y_cfactual.as_deref()
    }

    pub fn e_flags(&self) -> Option<&[bool]> {
        self.e_flags.as_deref()
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn anchor_name(&self) -> &str {
        &self.feature_names[self.anchor_index]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn dropped_features(&self) -> &[String] {
        &self.dropped_features
    }

    /// Per-row true individual effect, when ground truth is available.
    pub fn true_ite(&self) -> Option<Vec<f64>> {
        match (&self.mu0, &self.mu1) {
            (Some(m0), Some(m1)) => Some(m1.iter().zip(m0).map(|(a, b)| a - b).collect()),
            _ => None,
        }
    }

    pub fn anchor_values(&self) -> Vec<f64> {
        self.x.column_values(self.anchor_index)
    }

    /// Covariate matrix with the anchor column removed; this is what the
    /// representation networks consume.
    pub fn features_without_anchor(&self) -> Matrix {
        self.x.without_column(self.anchor_index)
    }

    pub fn treated_count(&self) -> usize {
        self.t.iter().filter(|&&b| b).count()
    }

    /// Both treatment groups present?
    pub fn has_both_groups(&self) -> bool {
        let treated = self.treated_count();
        treated > 0 && treated < self.len()
    }

    /// Row subset, preserving metadata.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.len() < 2 {
            return Err(Error::Data("dataset slice needs at least 2 rows".into()));
        }
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect::<Vec<f64>>();
        Ok(Dataset {
            x: self.x.select_rows(rows),
            t: rows.iter().map(|&r| self.t[r]).collect(),
            y: pick(&self.y),
            mu0: self.mu0.as_ref().map(pick),
            mu1: self.mu1.as_ref().map(pick),
            y_cfactual: self.y_cfactual.as_ref().map(pick),
            e_flags: self.e_flags.as_ref().map(|e| rows.iter().map(|&r| e[r]).collect()),
            anchor_index: self.anchor_index,
            feature_names: self.feature_names.clone(),
            dropped_features: self.dropped_features.clone(),
        })
    }

    /// Removes the named covariate columns, recording them as hidden
    /// confounders. The anchor cannot be dropped; `t` and `y` are not
    /// covariates and are never touched.
    pub fn induce_confounding(&self, drop_names: &[&str]) -> Result<Dataset> {
        if drop_names.is_empty() {
            return Ok(self.clone());
        }
        let mut drop_cols = Vec::new();
        for name in drop_names {
            let Some(col) = self.feature_names.iter().position(|f| f == name) else {
                return Err(Error::Data(format!("no covariate named {name:?}")));
            };
            if col == self.anchor_index {
                return Err(Error::Data(format!(
                    "refusing to drop the anchor covariate {name:?}; it must stay observed"
                )));
            }
            drop_cols.push(col);
        }
        drop_cols.sort_unstable();
        drop_cols.dedup();

        let keep: Vec<usize> = (0..self.x.cols()).filter(|c| !drop_cols.contains(c)).collect();
        let x = Matrix::from_fn(self.len(), keep.len(), |r, c| self.x.get(r, keep[c]));
        let anchor_index = keep
            .iter()
            .position(|&c| c == self.anchor_index)
            .expect("anchor survives the drop");
        let feature_names: Vec<String> =
            keep.iter().map(|&c| self.feature_names[c].clone()).collect();
        let mut dropped = self.dropped_features.clone();
        dropped.extend(drop_cols.iter().map(|&c| self.feature_names[c].clone()));

        Ok(Dataset {
            x,
            t: self.t.clone(),
            y: self.y.clone(),
            mu0: self.mu0.clone(),
            mu1: self.mu1.clone(),
            y_cfactual: self.y_cfactual.clone(),
            e_flags: self.e_flags.clone(),
            anchor_index,
            feature_names,
            dropped_features: dropped,
        })
    }

    /// Random row split into `(train, test)` with `round(ratio * n)` training
    /// rows. Reshuffles up to a retry cap until both treatment groups appear
    /// in the training side.
    pub fn split(&self, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!("split ratio must lie in (0, 1), got {ratio}")));
        }
        let n = self.len();
        let train_n = libm::round(ratio * n as f64) as usize;
        if train_n < 2 || n - train_n < 1 {
            return Err(Error::Data(format!(
                "split of {n} rows at ratio {ratio} leaves a degenerate side"
            )));
        }
        const RETRY_CAP: u64 = 64;
        for attempt in 0..RETRY_CAP {
            let mut rows: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, 0x73706c69 ^ attempt));
            rows.shuffle(&mut rng);
            let train_rows = &rows[..train_n];
            let treated = train_rows.iter().filter(|&&r| self.t[r]).count();
            if treated == 0 || treated == train_n {
                continue;
            }
            let mut train_sorted = train_rows.to_vec();
            let mut test_sorted = rows[train_n..].to_vec();
            train_sorted.sort_unstable();
            test_sorted.sort_unstable();
            return Ok((self.select_rows(&train_sorted)?, self.select_rows(&test_sorted)?));
        }
        Err(Error::DegenerateTreatment(format!(
            "could not find a split with both treatment groups in train after {RETRY_CAP} tries"
        )))
    }
}

/// Column-wise affine transform fitted on training data. Binary and constant
/// columns are left untouched.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnScaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl ColumnScaler {
    /// Fits z-scoring parameters per column, skipping columns whose values
    /// all lie in {0, 1} and columns with zero variance.
    pub fn fit(x: &Matrix) -> ColumnScaler {
        let n = x.rows() as f64;
        let mut means = vec![0.0; x.cols()];
        let mut stds = vec![1.0; x.cols()];
        for c in 0..x.cols() {
            let col = x.column_values(c);
            let binary = col.iter().all(|&v| v == 0.0 || v == 1.0);
            if binary {
                continue;
            }
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = libm::sqrt(var);
            if std > 0.0 {
                means[c] = mean;
                stds[c] = std;
            }
        }
        ColumnScaler { means, stds }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, input has {}",
                self.means.len(),
                x.cols()
            )));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |r, c| {
            (x.get(r, c) - self.means[c]) / self.stds[c]
        }))
    }
}

/// Mean/std transform for the outcome.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeScaler {
    pub mean: f64,
    pub std: f64,
}

impl OutcomeScaler {
    pub fn fit(y: &[f64]) -> OutcomeScaler {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = libm::sqrt(var);
        OutcomeScaler { mean, std: if std > 0.0 { std } else { 1.0 } }
    }

    pub fn transform(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v * self.std + self.mean).collect()
    }

    /// Effects are differences of outcomes, so only the scale applies.
    pub fn inverse_effect(&self, tau: &[f64]) -> Vec<f64> {
        tau.iter().map(|v| v * self.std).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let x = Matrix::from_fn(n, 3, |r, c| (r * 3 + c) as f64 * 0.1);
        let t: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Dataset::new(x, t, y, None, None, 1, None).unwrap()
    }

    #[test]
    fn construction_validates() {
        let x = Matrix::zeros(1, 2);
        assert!(Dataset::new(x, vec![true], vec![0.0], None, None, 0, None).is_err());

        let x = Matrix::zeros(3, 2);
        assert!(
            Dataset::new(x.clone(), vec![true; 3], vec![0.0; 3], None, None, 5, None).is_err()
        );
        assert!(Dataset::new(
            x.clone(),
            vec![true; 3],
            vec![0.0; 3],
            Some(vec![0.0; 3]),
            None,
            0,
            None
        )
        .is_err());
        assert!(Dataset::new(x, vec![true; 2], vec![0.0; 3], None, None, 0, None).is_err());
    }

    #[test]
    fn induce_confounding_drops_columns() {
        let ds = toy(9);
        assert_eq!(ds.num_features(), 3);
        let smaller = ds.induce_confounding(&["x2"]).unwrap();
        assert_eq!(smaller.num_features(), 2);
        assert_eq!(smaller.dropped_features(), &[String::from("x2")]);
        assert_eq!(smaller.anchor_name(), "x1");
        // Identity on an empty drop list.
        let same = ds.induce_confounding(&[]).unwrap();
        assert_eq!(same.num_features(), 3);
    }

    #[test]
    fn induce_confounding_refuses_anchor() {
        let ds = toy(6);
        assert!(ds.induce_confounding(&["x1"]).is_err());
        assert!(ds.induce_confounding(&["nope"]).is_err());
    }

    #[test]
    fn anchor_index_tracks_dropped_columns() {
        let ds = toy(6);
        let smaller = ds.induce_confounding(&["x0"]).unwrap();
        assert_eq!(smaller.anchor_index(), 0);
        assert_eq!(smaller.anchor_name(), "x1");
        assert_eq!(smaller.anchor_values(), ds.anchor_values());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(100);
        let (train, test) = ds.split(0.8, 7).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let (train2, _) = ds.split(0.8, 7).unwrap();
        assert_eq!(train.outcome(), train2.outcome());
        assert!(train.has_both_groups());
    }

    #[test]
    fn split_is_a_partition() {
        let ds = toy(57);
        let (train, test) = ds.split(0.7, 3).unwrap();
        let mut ys: Vec<f64> = train.outcome().iter().chain(test.outcome()).cloned().collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want: Vec<f64> = (0..57).map(|i| i as f64).collect();
        assert_eq!(ys, want);
    }

    #[test]
    fn split_ratio_validation() {
        let ds = toy(10);
        assert!(ds.split(0.0, 1).is_err());
        assert!(ds.split(1.0, 1).is_err());
    }

    #[test]
    fn features_without_anchor_shape() {
        let ds = toy(5);
        let f = ds.features_without_anchor();
        assert_eq!(f.cols(), 2);
        assert_eq!(f.get(0, 0), ds.covariates().get(0, 0));
        assert_eq!(f.get(0, 1), ds.covariates().get(0, 2));
    }

    #[test]
    fn scaler_skips_binary_columns() {
        let x = Matrix::from_vec(
            4,
            2,
            vec![1.0, 10.0, 0.0, 20.0, 1.0, 30.0, 0.0, 40.0],
        )
        .unwrap();
        let scaler = ColumnScaler::fit(&x);
        let z = scaler.transform(&x).unwrap();
        // Binary column untouched.
        assert_eq!(z.column_values(0), vec![1.0, 0.0, 1.0, 0.0]);
        // Continuous column standardized.
        let col = z.column_values(1);
        let mean: f64 = col.iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn outcome_scaler_roundtrip() {
        let y = vec![3.0, -1.0, 4.5, 0.0];
        let scaler = OutcomeScaler::fit(&y);
        let z = scaler.transform(&y);
        let back = scaler.inverse(&z);
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        let tau = vec![1.0, 2.0];
        let scaled = scaler.inverse_effect(&tau);
        assert!((scaled[0] - scaler.std).abs() < 1e-12);
    }
}
