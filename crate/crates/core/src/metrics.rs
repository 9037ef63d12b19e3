//! Evaluation quantities for tabular treatment-effect estimation: ATE error,
//! root-PEHE, ATT/ATC errors, and factual RMSE.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which side of the train/test split a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SampleSplit {
    Within,
    Out,
}

impl SampleSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleSplit::Within => "within",
            SampleSplit::Out => "out",
        }
    }
}

/// One evaluation row; ground-truth-dependent entries are `None` when the
/// dataset carries no ground truth.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub split: SampleSplit,
    pub ate_error: Option<f64>,
    pub sqrt_pehe: Option<f64>,
    pub att_error: Option<f64>,
    pub atc_error: Option<f64>,
    pub factual_rmse: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str =
        "split,ate_error,sqrt_pehe,att_error,atc_error,factual_rmse";

    pub fn to_csv_row(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.split.as_str(),
            cell(self.ate_error),
            cell(self.sqrt_pehe),
            cell(self.att_error),
            cell(self.atc_error),
            self.factual_rmse
        )
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `|mean(tau_hat) - true_ate|`.
pub fn ate_error(tau_hat: &[f64], true_ate: f64) -> Result<f64> {
    if tau_hat.is_empty() {
        return Err(Error::DegenerateInput("ate_error over an empty prediction vector".into()));
    }
    Ok(libm::fabs(mean(tau_hat) - true_ate))
}

/// Root of the mean squared difference between predicted and true
/// individual effects.
pub fn sqrt_pehe(tau_hat: &[f64], tau_true: Option<&[f64]>) -> Result<f64> {
    let Some(tau_true) = tau_true else {
        return Err(Error::MissingGroundTruth(
            "sqrt_pehe needs per-row true effects (mu0/mu1 columns)".into(),
        ));
    };
    if tau_hat.len() != tau_true.len() {
        return Err(Error::Shape(format!(
            "tau_hat has {} rows, tau_true has {}",
            tau_hat.len(),
            tau_true.len()
        )));
    }
    if tau_hat.is_empty() {
        return Err(Error::DegenerateInput("sqrt_pehe over empty vectors".into()));
    }
    let mse = tau_hat
        .iter()
        .zip(tau_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / tau_hat.len() as f64;
    Ok(libm::sqrt(mse))
}

/// Error of the mean predicted effect over the treated rows against a known
/// ATT constant. The normalized variant divides by `|true_att|`.
pub fn att_error(tau_hat: &[f64], t: &[bool], true_att: f64, normalize: bool) -> Result<f64> {
    if tau_hat.len() != t.len() {
        return Err(Error::Shape("tau_hat and t must have equal length".into()));
    }
    let treated: Vec<f64> =
        tau_hat.iter().zip(t).filter_map(|(v, &b)| b.then_some(*v)).collect();
    if treated.is_empty() {
        return Err(Error::DegenerateTreatment("att_error needs at least one treated row".into()));
    }
    let raw = libm::fabs(mean(&treated) - true_att);
    if normalize {
        if true_att == 0.0 {
            return Err(Error::Config("cannot normalize att_error by zero".into()));
        }
        Ok(raw / libm::fabs(true_att))
    } else {
        Ok(raw)
    }
}

/// ATC error for datasets with a randomized subset `E`:
/// the true control-group effect `mean_{i in C}(y_i) - mean_{i in T∩E}(y_i)`
/// against the model threshold `mean_{i in C}(f(x_i, 1) - f(x_i, 0))`.
pub fn atc_error(
    f_control_arm: &[f64],
    f_treated_arm: &[f64],
    y: &[f64],
    t: &[bool],
    e_flags: &[bool],
) -> Result<f64> {
    let n = y.len();
    if f_control_arm.len() != n || f_treated_arm.len() != n || t.len() != n || e_flags.len() != n {
        return Err(Error::Shape("atc_error inputs must all have equal length".into()));
    }
    let mut control_y = Vec::new();
    let mut treated_e_y = Vec::new();
    let mut threshold_terms = Vec::new();
    for i in 0..n {
        if !t[i] {
            control_y.push(y[i]);
            threshold_terms.push(f_treated_arm[i] - f_control_arm[i]);
        } else if e_flags[i] {
            treated_e_y.push(y[i]);
        }
    }
    if control_y.is_empty() {
        return Err(Error::DegenerateTreatment("atc_error needs a nonempty control group".into()));
    }
    if treated_e_y.is_empty() {
        return Err(Error::DegenerateTreatment(
            "atc_error needs a nonempty treated-and-randomized group".into(),
        ));
    }
    let true_atc = mean(&control_y) - mean(&treated_e_y);
    let threshold = mean(&threshold_terms);
    Ok(libm::fabs(threshold - true_atc))
}

/// Root mean squared error between factual predictions and observed
/// outcomes.
pub fn factual_rmse(pred: &[f64], y: &[f64]) -> Result<f64> {
    if pred.len() != y.len() {
        return Err(Error::Shape("factual_rmse inputs must have equal length".into()));
    }
    if pred.is_empty() {
        return Err(Error::DegenerateInput("factual_rmse over empty vectors".into()));
    }
    let mse =
        pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pred.len() as f64;
    Ok(libm::sqrt(mse))
}
