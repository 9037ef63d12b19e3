//! Two-phase treatment-effect trainer.
//!
//! Phase one (gradient matching) shapes the representation network on
//! anchor-generated domains: each outer iteration clones the weights, takes
//! one weighted-MSE step per domain in a random order on the clone, then
//! moves the weights a fraction of the way toward the adapted clone. Phase
//! two (covariate matching) trains the counterfactual-regression stack on
//! top of the frozen representation: factual rows route through a per-arm
//! outcome head, and an integral probability metric between treated and
//! control projections regularizes the shared projection layers.
//!
//! Sequential mode runs phase one to completion before phase two; the
//! alternating variant interleaves one gradient-matching pass with one
//! covariate-matching epoch.

mod cfr;
mod fish;
mod idgm;

pub use cfr::{cfr_batch_step, cfr_phase, CfrBatchStats};
pub use fish::{fish_phase, FishOutcome};
pub use idgm::{domain_expected_gradient, idgm_loss, idgm_loss_oracle, IdgmValue};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{ColumnScaler, Dataset, OutcomeScaler};
use crate::domains::{
    check_general_position, generate_domains, DomainConfig, DomainPartition,
    GeneralPositionReport,
};
use crate::ipm::IpmKind;
use crate::metrics::{self, MetricsReport, SampleSplit};
use crate::numerics::{init_params, Activation, Matrix, MlpParams};
use crate::subseed;
use crate::{Error, Result};

/// Phase ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TrainMode {
    Sequential,
    Alternating,
}

/// Direction of the outer gradient-matching update.
///
/// `TowardAdapted` moves the weights toward the adapted clone
/// (`W += eps * (W_adapted - W)`), the behavior the first-order
/// gradient-matching literature describes and the default here.
/// `PaperLiteral` applies the opposite sign
/// (`W += eps * (W - W_adapted)`), which moves away from the adapted
/// weights; it exists as an escape hatch for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FishSign {
    TowardAdapted,
    PaperLiteral,
}

/// Hyperparameters of a training run.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Outer gradient-matching iterations (N).
    pub fish_iters: usize,
    /// Inner per-domain step size (beta).
    pub fish_inner_lr: f64,
    /// Outer interpolation step (epsilon), in (0, 1].
    pub fish_step: f64,
    /// Covariate-matching learning rate (eta).
    pub cfr_lr: f64,
    /// Covariate-matching epoch budget (the convergence proxy).
    pub cfr_epochs: usize,
    /// IPM penalty weight (alpha); 0 disables balancing (the TAR variant).
    pub ipm_weight: f64,
    /// Head weight decay (lambda), applied as `2 * lambda * V`.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub ipm_kind: IpmKind,
    /// Per-epoch learning-rate multiplier (gamma), in (0, 1].
    pub lr_decay: f64,
    pub mode: TrainMode,
    pub fish_sign: FishSign,
    pub seed: u64,
    /// Width of every hidden layer and of the representation outputs.
    pub hidden_dim: usize,
    /// Weight layers in the gradient-matched representation network.
    pub rep_layers: usize,
    /// Weight layers in the covariate-matching projection network.
    pub cfr_layers: usize,
    /// Weight layers in each outcome head.
    pub head_layers: usize,
    pub dropout: f64,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            fish_iters: 1000,
            fish_inner_lr: 1e-4,
            fish_step: 0.9,
            cfr_lr: 1e-4,
            cfr_epochs: 1000,
            ipm_weight: 10.0,
            weight_decay: 0.5,
            batch_size: 128,
            ipm_kind: IpmKind::LinearMmd,
            lr_decay: 0.97,
            mode: TrainMode::Sequential,
            fish_sign: FishSign::TowardAdapted,
            seed: 0,
            hidden_dim: 48,
            rep_layers: 3,
            cfr_layers: 3,
            head_layers: 3,
            dropout: 0.145,
            activation: Activation::Elu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fish_inner_lr > 0.0) || !(self.cfr_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(self.fish_step > 0.0 && self.fish_step <= 1.0) {
            return Err(Error::Config(format!(
                "fish step must lie in (0, 1], got {}",
                self.fish_step
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr decay must lie in (0, 1], got {}",
                self.lr_decay
            )));
        }
        if self.ipm_weight < 0.0 || self.weight_decay < 0.0 {
            return Err(Error::Config("ipm weight and weight decay must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.hidden_dim == 0
            || self.rep_layers == 0
            || self.cfr_layers == 0
            || self.head_layers == 0
        {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    /// Learning rate at a zero-based epoch: `eta * gamma^epoch`.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        self.cfr_lr * libm::pow(self.lr_decay, epoch as f64)
    }
}

/// The three-network stack: representation, projection, and one outcome head
/// per treatment arm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelBundle {
    pub rep_net: MlpParams,
    pub cfr_net: MlpParams,
    pub head0: MlpParams,
    pub head1: MlpParams,
}

impl ModelBundle {
    /// Initializes all four networks for `input_dim` anchor-free covariates.
    pub fn init(input_dim: usize, config: &TrainConfig, seed: u64) -> Result<ModelBundle> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("model needs at least one covariate".into()));
        }
        let h = config.hidden_dim;
        let mut rep_dims = Vec::with_capacity(config.rep_layers + 1);
        rep_dims.push(input_dim);
        rep_dims.extend(core::iter::repeat(h).take(config.rep_layers));
        let cfr_dims: Vec<usize> = core::iter::repeat(h).take(config.cfr_layers + 1).collect();
        let mut head_dims = Vec::with_capacity(config.head_layers + 1);
        head_dims.extend(core::iter::repeat(h).take(config.head_layers));
        head_dims.push(1);

        Ok(ModelBundle {
            rep_net: init_params(&rep_dims, config.activation, config.dropout, subseed(seed, 1))?,
            cfr_net: init_params(&cfr_dims, config.activation, config.dropout, subseed(seed, 2))?,
            head0: init_params(&head_dims, config.activation, config.dropout, subseed(seed, 3))?,
            head1: init_params(&head_dims, config.activation, config.dropout, subseed(seed, 4))?,
        })
    }

    /// Shape compatibility along the stack.
    pub fn validate(&self) -> Result<()> {
        if self.rep_net.output_dim() != self.cfr_net.input_dim() {
            return Err(Error::Shape("representation output does not feed the projection".into()));
        }
        for (name, head) in [("head0", &self.head0), ("head1", &self.head1)] {
            if head.input_dim() != self.cfr_net.output_dim() {
                return Err(Error::Shape(format!("{name} input does not match the projection")));
            }
            if head.output_dim() != 1 {
                return Err(Error::Shape(format!("{name} must output a single value")));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.rep_net.all_finite()
            && self.cfr_net.all_finite()
            && self.head0.all_finite()
            && self.head1.all_finite()
    }
}

/// Balancing weights from the treated fraction `u`:
/// `w_i = t_i / (2u) + (1 - t_i) / (2(1 - u))`.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleWeights {
    pub treated_fraction: f64,
    pub weights: Vec<f64>,
}

pub fn compute_sample_weights(t: &[bool]) -> Result<SampleWeights> {
    let n = t.len();
    let treated = t.iter().filter(|&&b| b).count();
    if treated == 0 || treated == n {
        return Err(Error::DegenerateTreatment(format!(
            "sample weights need both groups; found {treated} treated of {n}"
        )));
    }
    let u = treated as f64 / n as f64;
    let weights = t
        .iter()
        .map(|&ti| if ti { 1.0 / (2.0 * u) } else { 1.0 / (2.0 * (1.0 - u)) })
        .collect();
    Ok(SampleWeights { treated_fraction: u, weights })
}

/// One row of the training log, emitted per phase per epoch.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainLogRow {
    pub epoch: usize,
    pub phase: Phase,
    pub loss: f64,
    pub ipm_value: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Phase {
    GradientMatching,
    CovariateMatching,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::GradientMatching => "fish",
            Phase::CovariateMatching => "cfr",
        }
    }
}

impl TrainLogRow {
    pub const CSV_HEADER: &'static str = "epoch,phase,loss,ipm_value,lr";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch,
            self.phase.as_str(),
            self.loss,
            self.ipm_value.map(|v| format!("{v}")).unwrap_or_default(),
            self.lr
        )
    }
}

/// A trained model together with the standardization fitted on its training
/// data; predictions come back in original outcome units.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainedModel {
    pub bundle: ModelBundle,
    pub x_scaler: ColumnScaler,
    pub y_scaler: OutcomeScaler,
    pub anchor_index: usize,
}

impl TrainedModel {
    fn standardized_features(&self, x_raw: &Matrix) -> Result<Matrix> {
        Ok(self.x_scaler.transform(x_raw)?.without_column(self.anchor_index))
    }

    /// Per-row effect estimates in original outcome units. `x_raw` carries
    /// all covariate columns including the anchor.
    pub fn predict_ite(&self, x_raw: &Matrix) -> Result<Vec<f64>> {
        let features = self.standardized_features(x_raw)?;
        let tau_std = predict_ite(&self.bundle, &features)?;
        Ok(self.y_scaler.inverse_effect(&tau_std))
    }

    /// Factual predictions routed by the given treatment arm, original units.
    pub fn predict_factual(&self, x_raw: &Matrix, t: &[bool]) -> Result<Vec<f64>> {
        if t.len() != x_raw.rows() {
            return Err(Error::Shape("treatment length does not match rows".into()));
        }
        let features = self.standardized_features(x_raw)?;
        let z = self.bundle.cfr_net.eval(&self.bundle.rep_net.eval(&features)?)?;
        let y0 = self.bundle.head0.eval(&z)?;
        let y1 = self.bundle.head1.eval(&z)?;
        let std_pred: Vec<f64> = (0..z.rows())
            .map(|r| if t[r] { y1.get(r, 0) } else { y0.get(r, 0) })
            .collect();
        Ok(self.y_scaler.inverse(&std_pred))
    }

    /// Balanced-space projections (eval mode), for diagnostics.
    pub fn representations(&self, x_raw: &Matrix) -> Result<Matrix> {
        let features = self.standardized_features(x_raw)?;
        self.bundle.cfr_net.eval(&self.bundle.rep_net.eval(&features)?)
    }
}

/// Effect estimates on already-standardized, anchor-free feature rows:
/// `head1(proj(rep(x))) - head0(proj(rep(x)))`, eval mode throughout.
pub fn predict_ite(bundle: &ModelBundle, features: &Matrix) -> Result<Vec<f64>> {
    bundle.validate()?;
    let z = bundle.cfr_net.eval(&bundle.rep_net.eval(features)?)?;
    let y0 = bundle.head0.eval(&z)?;
    let y1 = bundle.head1.eval(&z)?;
    Ok((0..z.rows()).map(|r| y1.get(r, 0) - y0.get(r, 0)).collect())
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub log: Vec<TrainLogRow>,
    pub partition: DomainPartition,
    pub sample_weights: SampleWeights,
    pub general_position: Option<GeneralPositionReport>,
    /// Set when the partition collapsed to one nonempty domain and the
    /// gradient-matching phase degenerated to plain SGD.
    pub single_domain_warning: bool,
}

/// Runs the full pipeline on a training dataset: standardization, domain
/// generation, sample weights, then the two phases in the configured order.
/// Deterministic for fixed `(dataset, config, domain_config)`.
pub fn train(
    dataset: &Dataset,
    config: &TrainConfig,
    domain_config: &DomainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if !dataset.has_both_groups() {
        return Err(Error::DegenerateTreatment(
            "training needs both treated and control rows".into(),
        ));
    }

    // Standardize: z-score covariates (binary columns pass through), then
    // zero-mean/unit-variance outcome. Metrics are computed back in original
    // units by the caller through `TrainedModel`.
    let x_scaler = ColumnScaler::fit(dataset.covariates());
    let y_scaler = OutcomeScaler::fit(dataset.outcome());
    let x_std = x_scaler.transform(dataset.covariates())?;
    let features = x_std.without_column(dataset.anchor_index());
    let targets = Matrix::column(&y_scaler.transform(dataset.outcome()));

    // Domains come from the standardized anchor column so the logit slopes
    // act on a unit-scale variable.
    let anchor_std = x_std.column_values(dataset.anchor_index());
    let partition = generate_domains(&anchor_std, domain_config)?;

    let weights = compute_sample_weights(dataset.treatment())?;

    let mut bundle = ModelBundle::init(features.cols(), config, subseed(config.seed, 0xb0d1))?;
    let head_stub = fish::init_head_stub(config, subseed(config.seed, 0x57ab))?;

    let mut log = Vec::new();
    let mut single_domain_warning = false;

    match config.mode {
        TrainMode::Sequential => {
            if config.fish_iters > 0 {
                let mut driver = fish::FishDriver::new(
                    &features,
                    &targets,
                    &weights.weights,
                    &partition,
                    config,
                    subseed(config.seed, 0xf15b),
                )?;
                single_domain_warning = driver.single_domain();
                for iter in 0..config.fish_iters {
                    let loss = driver.outer_iteration(&mut bundle.rep_net, &head_stub)?;
                    log.push(TrainLogRow {
                        epoch: iter,
                        phase: Phase::GradientMatching,
                        loss,
                        ipm_value: None,
                        lr: config.fish_inner_lr,
                    });
                }
            }
            let mut driver = cfr::CfrDriver::new(
                &features,
                &targets,
                &weights.weights,
                dataset.treatment(),
                config,
                subseed(config.seed, 0xcf12),
            );
            for epoch in 0..config.cfr_epochs {
                let stats = driver.run_epoch(&mut bundle, epoch)?;
                log.push(TrainLogRow {
                    epoch,
                    phase: Phase::CovariateMatching,
                    loss: stats.loss,
                    ipm_value: stats.ipm,
                    lr: config.lr_at_epoch(epoch),
                });
            }
        }
        TrainMode::Alternating => {
            let mut fish_driver = fish::FishDriver::new(
                &features,
                &targets,
                &weights.weights,
                &partition,
                config,
                subseed(config.seed, 0xf15b),
            )?;
            single_domain_warning = fish_driver.single_domain();
            let mut cfr_driver = cfr::CfrDriver::new(
                &features,
                &targets,
                &weights.weights,
                dataset.treatment(),
                config,
                subseed(config.seed, 0xcf12),
            );
            for epoch in 0..config.cfr_epochs {
                let fish_loss = fish_driver.outer_iteration(&mut bundle.rep_net, &head_stub)?;
                log.push(TrainLogRow {
                    epoch,
                    phase: Phase::GradientMatching,
                    loss: fish_loss,
                    ipm_value: None,
                    lr: config.fish_inner_lr,
                });
                let stats = cfr_driver.run_epoch(&mut bundle, epoch)?;
                log.push(TrainLogRow {
                    epoch,
                    phase: Phase::CovariateMatching,
                    loss: stats.loss,
                    ipm_value: stats.ipm,
                    lr: config.lr_at_epoch(epoch),
                });
            }
        }
    }

    if !bundle.all_finite() {
        return Err(Error::Numeric(
            "training produced non-finite parameters; lower the learning rates".into(),
        ));
    }

    // Advisory non-degeneracy diagnostic, on the raw covariates: once
    // columns are centered, the size-weighted domain means sum to zero and
    // the mean matrix loses a rank by construction, which would make the
    // check vacuous.
    let general_position = check_general_position(dataset, &partition).ok();

    Ok(TrainOutcome {
        model: TrainedModel {
            bundle,
            x_scaler,
            y_scaler,
            anchor_index: dataset.anchor_index(),
        },
        log,
        partition,
        sample_weights: weights,
        general_position,
        single_domain_warning,
    })
}

/// Scores a trained model on a dataset, reporting whichever metrics the
/// dataset's ground truth supports.
pub fn evaluate(
    model: &TrainedModel,
    dataset: &Dataset,
    split: SampleSplit,
) -> Result<MetricsReport> {
    let tau_hat = model.predict_ite(dataset.covariates())?;
    let factual = model.predict_factual(dataset.covariates(), dataset.treatment())?;
    let rmse = metrics::factual_rmse(&factual, dataset.outcome())?;

    let true_ite = dataset.true_ite();
    let (ate_err, pehe, att_err) = match &true_ite {
        Some(ite) => {
            let true_ate = ite.iter().sum::<f64>() / ite.len() as f64;
            let treated_ite: Vec<f64> = ite
                .iter()
                .zip(dataset.treatment())
                .filter_map(|(v, &t)| t.then_some(*v))
                .collect();
            let att = if treated_ite.is_empty() {
                None
            } else {
                let true_att = treated_ite.iter().sum::<f64>() / treated_ite.len() as f64;
                metrics::att_error(&tau_hat, dataset.treatment(), true_att, false).ok()
            };
            (
                Some(metrics::ate_error(&tau_hat, true_ate)?),
                Some(metrics::sqrt_pehe(&tau_hat, Some(ite))?),
                att,
            )
        }
        None => (None, None, None),
    };

    let atc = match dataset.e_flags() {
        Some(e) => {
            let x = dataset.covariates();
            let all_false: Vec<bool> = alloc::vec![false; x.rows()];
            let all_true: Vec<bool> = alloc::vec![true; x.rows()];
            let f0 = model.predict_factual(x, &all_false)?;
            let f1 = model.predict_factual(x, &all_true)?;
            metrics::atc_error(&f0, &f1, dataset.outcome(), dataset.treatment(), e).ok()
        }
        None => None,
    };

    Ok(MetricsReport {
        split,
        ate_error: ate_err,
        sqrt_pehe: pehe,
        att_error: att_err,
        atc_error: atc,
        factual_rmse: rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::{confounded_benchmark, synth_dataset};

    #[test]
    fn sample_weights_balanced_case() {
        let w = compute_sample_weights(&[true, false]).unwrap();
        assert_eq!(w.treated_fraction, 0.5);
        assert_eq!(w.weights, alloc::vec![1.0, 1.0]);
    }

    #[test]
    fn sample_weights_formula() {
        let w = compute_sample_weights(&[true, true, true, false]).unwrap();
        assert_eq!(w.treated_fraction, 0.75);
        for i in 0..3 {
            assert!((w.weights[i] - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!((w.weights[3] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sample_weight_group_sums_are_half_n() {
        for (n, k) in [(10usize, 3usize), (7, 1), (100, 99), (23, 11)] {
            let t: Vec<bool> = (0..n).map(|i| i < k).collect();
            let w = compute_sample_weights(&t).unwrap();
            let treated_sum: f64 =
                w.weights.iter().zip(&t).filter_map(|(v, &b)| b.then_some(*v)).sum();
            let control_sum: f64 =
                w.weights.iter().zip(&t).filter_map(|(v, &b)| (!b).then_some(*v)).sum();
            let half = n as f64 / 2.0;
            assert!((treated_sum - half).abs() < 1e-9, "treated sum {treated_sum} vs {half}");
            assert!((control_sum - half).abs() < 1e-9);
            assert!((treated_sum + control_sum - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_weights_degenerate() {
        assert!(compute_sample_weights(&[true, true]).is_err());
        assert!(compute_sample_weights(&[false, false]).is_err());
    }

    #[test]
    fn bundle_shapes_check_out() {
        let config = TrainConfig { hidden_dim: 8, ..TrainConfig::default() };
        let bundle = ModelBundle::init(5, &config, 3).unwrap();
        bundle.validate().unwrap();
        assert_eq!(bundle.rep_net.input_dim(), 5);
        assert_eq!(bundle.rep_net.output_dim(), 8);
        assert_eq!(bundle.head1.output_dim(), 1);
    }

    #[test]
    fn predict_ite_trivials() {
        let config = TrainConfig { hidden_dim: 6, ..TrainConfig::default() };
        let mut bundle = ModelBundle::init(4, &config, 5).unwrap();
        let x = Matrix::from_fn(7, 4, |r, c| (r + c) as f64 * 0.1);

        // Identical heads: effects vanish identically.
        bundle.head1 = bundle.head0.clone();
        let tau = predict_ite(&bundle, &x).unwrap();
        assert!(tau.iter().all(|&v| v == 0.0));

        // Constant heads: effect is the difference of the constants.
        let constant_head = |c: f64, params: &MlpParams| {
            let mut p = params.clone();
            let n = p.param_count();
            let mut flat = alloc::vec![0.0; n];
            // Bias of the last layer is the final entry.
            flat[n - 1] = c;
            p.set_flat(&flat).unwrap();
            p
        };
        bundle.head0 = constant_head(1.25, &bundle.head0);
        bundle.head1 = constant_head(3.5, &bundle.head1);
        let tau = predict_ite(&bundle, &x).unwrap();
        for v in tau {
            assert!((v - 2.25).abs() < 1e-12);
        }
    }

    #[test]
    fn train_is_deterministic_and_fish0_reduces_to_cfr() {
        let sem = confounded_benchmark();
        let dataset = synth_dataset(&sem, 120, 5).unwrap().dataset;
        let config = TrainConfig {
            fish_iters: 4,
            cfr_epochs: 3,
            hidden_dim: 8,
            rep_layers: 2,
            cfr_layers: 1,
            head_layers: 1,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let dconf = DomainConfig::new(3, 9);
        let a = train(&dataset, &config, &dconf).unwrap();
        let b = train(&dataset, &config, &dconf).unwrap();
        assert_eq!(a.model.bundle, b.model.bundle);
        assert!(!a.log.is_empty());

        // fish_iters = 0 leaves the representation at its initialization:
        // the run equals plain covariate-matching training.
        let config0 = TrainConfig { fish_iters: 0, ..config.clone() };
        let c = train(&dataset, &config0, &dconf).unwrap();
        let init_bundle = ModelBundle::init(
            dataset.num_features() - 1,
            &config0,
            subseed(config0.seed, 0xb0d1),
        )
        .unwrap();
        assert_eq!(c.model.bundle.rep_net, init_bundle.rep_net);
        assert!(c.log.iter().all(|row| row.phase == Phase::CovariateMatching));
    }

    #[test]
    fn evaluate_reports_ground_truth_metrics() {
        let sem = confounded_benchmark();
        let dataset = synth_dataset(&sem, 150, 11).unwrap().dataset;
        let config = TrainConfig {
            fish_iters: 2,
            cfr_epochs: 2,
            hidden_dim: 6,
            rep_layers: 1,
            cfr_layers: 1,
            head_layers: 1,
            batch_size: 64,
            ..TrainConfig::default()
        };
        let outcome = train(&dataset, &config, &DomainConfig::new(3, 1)).unwrap();
        let report = evaluate(&outcome.model, &dataset, SampleSplit::Within).unwrap();
        assert!(report.ate_error.is_some());
        assert!(report.sqrt_pehe.is_some());
        assert!(report.att_error.is_some());
        assert!(report.atc_error.is_none());
        assert!(report.factual_rmse.is_finite());
    }

    #[test]
    fn lr_schedule_is_exponential() {
        let config = TrainConfig::default();
        for epoch in [0usize, 1, 5, 17] {
            let want = config.cfr_lr * libm::pow(config.lr_decay, epoch as f64);
            assert_eq!(config.lr_at_epoch(epoch), want);
        }
    }
}
