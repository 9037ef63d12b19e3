//! The gradient-matching phase: clone, adapt per domain, interpolate.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{compute_sample_weights, FishSign, TrainConfig};
use crate::data::Dataset;
use crate::domains::DomainPartition;
use crate::numerics::{init_params, weighted_mse, Matrix, MlpParams};
use crate::{Error, Result};

/// Diagnostics from a completed gradient-matching phase.
#[derive(Debug, Clone)]
pub struct FishOutcome {
    /// Mean inner-step loss per outer iteration.
    pub iteration_losses: Vec<f64>,
    /// True when only one domain was nonempty and the phase degenerated to
    /// plain SGD.
    pub single_domain: bool,
}

/// Head used on top of the representation during gradient matching only: a
/// single linear readout, so the representation is shaped toward linearly
/// decodable outcome structure rather than toward inverting a fixed random
/// nonlinear map.
pub(super) fn init_head_stub(config: &TrainConfig, seed: u64) -> Result<MlpParams> {
    init_params(&[config.hidden_dim, 1], config.activation, 0.0, seed)
}

/// Inner state shared by the sequential and alternating schedules.
pub(super) struct FishDriver<'a> {
    features: &'a Matrix,
    targets: &'a Matrix,
    weights: &'a [f64],
    domains: Vec<Vec<usize>>,
    config: &'a TrainConfig,
    rng: ChaCha8Rng,
}

impl<'a> FishDriver<'a> {
    pub(super) fn new(
        features: &'a Matrix,
        targets: &'a Matrix,
        weights: &'a [f64],
        partition: &DomainPartition,
        config: &'a TrainConfig,
        seed: u64,
    ) -> Result<FishDriver<'a>> {
        if partition.labels().len() != features.rows() {
            return Err(Error::Shape(
                "partition row count does not match the feature matrix".into(),
            ));
        }
        let domains: Vec<Vec<usize>> = (0..partition.num_domains())
            .map(|k| partition.members(k).to_vec())
            .filter(|rows| !rows.is_empty())
            .collect();
        if domains.is_empty() {
            return Err(Error::DegenerateInput("no nonempty domains to match across".into()));
        }
        Ok(FishDriver {
            features,
            targets,
            weights,
            domains,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub(super) fn single_domain(&self) -> bool {
        self.domains.len() < 2
    }

    /// One outer iteration: adapt a clone across a fresh domain permutation,
    /// then move the weights toward (or away from) the clone by the
    /// configured step. Returns the mean inner-step loss.
    pub(super) fn outer_iteration(
        &mut self,
        phi: &mut MlpParams,
        head_stub: &MlpParams,
    ) -> Result<f64> {
        let mut adapted = phi.clone();
        let mut order: Vec<usize> = (0..self.domains.len()).collect();
        if order.len() > 1 {
            order.shuffle(&mut self.rng);
        }

        let mut loss_total = 0.0;
        for &k in &order {
            let rows = &self.domains[k];
            let batch: Vec<usize> = if rows.len() <= self.config.batch_size {
                rows.clone()
            } else {
                rand::seq::index::sample(&mut self.rng, rows.len(), self.config.batch_size)
                    .iter()
                    .map(|i| rows[i])
                    .collect()
            };
            let x = self.features.select_rows(&batch);
            let y = self.targets.select_rows(&batch);
            let w: Vec<f64> = batch.iter().map(|&r| self.weights[r]).collect();

            let rep_seed = self.rng.random::<u64>();
            let head_seed = self.rng.random::<u64>();
            let (rep, rep_trace) = adapted.forward(&x, true, rep_seed)?;
            let (pred, head_trace) = head_stub.forward(&rep, true, head_seed)?;
            let (loss, grad_pred) = weighted_mse(&pred, &y, &w)?;
            let (_, grad_rep) = head_stub.backward(&head_trace, &grad_pred)?;
            let (phi_grads, _) = adapted.backward(&rep_trace, &grad_rep)?;
            adapted.apply_step(&phi_grads, self.config.fish_inner_lr)?;
            loss_total += loss;
        }

        let step = match self.config.fish_sign {
            FishSign::TowardAdapted => self.config.fish_step,
            FishSign::PaperLiteral => -self.config.fish_step,
        };
        phi.move_toward(&adapted, step)?;
        Ok(loss_total / order.len() as f64)
    }
}

/// Runs the full gradient-matching phase on a dataset: the anchor column is
/// excluded from the inputs, sample weights come from the treatment vector,
/// and `config.fish_iters` outer iterations update a copy of `phi`.
pub fn fish_phase(
    partition: &DomainPartition,
    dataset: &Dataset,
    phi: &MlpParams,
    head_stub: &MlpParams,
    config: &TrainConfig,
) -> Result<(MlpParams, FishOutcome)> {
    config.validate()?;
    let features = dataset.features_without_anchor();
    let targets = Matrix::column(dataset.outcome());
    let weights = compute_sample_weights(dataset.treatment())?;
    let mut driver = FishDriver::new(
        &features,
        &targets,
        &weights.weights,
        partition,
        config,
        crate::subseed(config.seed, 0xf15b),
    )?;
    let mut phi = phi.clone();
    let mut iteration_losses = Vec::with_capacity(config.fish_iters);
    for _ in 0..config.fish_iters {
        iteration_losses.push(driver.outer_iteration(&mut phi, head_stub)?);
    }
    let single_domain = driver.single_domain();
    Ok((phi, FishOutcome { iteration_losses, single_domain }))
}
