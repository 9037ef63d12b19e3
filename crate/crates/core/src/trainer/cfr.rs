//! The covariate-matching phase: factual regression through per-arm heads
//! plus an IPM penalty between treated and control projections.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelBundle, TrainConfig, TrainLogRow};
use crate::data::Dataset;
use crate::ipm;
use crate::numerics::{weighted_mse, Matrix};
use crate::{Error, Result};

/// Loss and penalty values realized by one batch update.
#[derive(Debug, Clone, Copy)]
pub struct CfrBatchStats {
    /// Weighted factual loss, normalized by the batch size.
    pub loss: f64,
    /// IPM value between the batch's treated and control projections; `None`
    /// when the penalty was skipped (zero weight or an empty group).
    pub ipm: Option<f64>,
}

/// One covariate-matching update on an explicit batch.
///
/// The representation network stays frozen (eval mode). Factual rows route
/// through `head1`/`head0` by treatment arm; the per-arm weighted MSE
/// gradients flow into the heads and the shared projection; when
/// `config.ipm_weight > 0` and both arms appear in the batch, the IPM
/// gradient (scaled by the weight) flows into the projection only. Heads
/// update with the `2 * weight_decay * V` term added to their gradients.
///
/// `dropout_seeds` are `[projection, head1, head0]`.
pub fn cfr_batch_step(
    bundle: &mut ModelBundle,
    features: &Matrix,
    targets: &Matrix,
    weights: &[f64],
    treatment: &[bool],
    batch_rows: &[usize],
    lr: f64,
    config: &TrainConfig,
    dropout_seeds: [u64; 3],
) -> Result<CfrBatchStats> {
    if batch_rows.is_empty() {
        return Err(Error::DegenerateInput("empty batch".into()));
    }
    let n_batch = batch_rows.len();
    let x = features.select_rows(batch_rows);
    let rep = bundle.rep_net.eval(&x)?;
    let (z, z_trace) = bundle.cfr_net.forward(&rep, true, dropout_seeds[0])?;

    let treated_pos: Vec<usize> =
        (0..n_batch).filter(|&i| treatment[batch_rows[i]]).collect();
    let control_pos: Vec<usize> =
        (0..n_batch).filter(|&i| !treatment[batch_rows[i]]).collect();

    let mut dz = Matrix::zeros(n_batch, z.cols());
    let mut loss = 0.0;

    // (head, positions, dropout seed) per arm; gradients are rescaled from
    // the per-group 1/n_g normalization to the batch-level 1/n.
    let mut head_updates = Vec::with_capacity(2);
    for (is_treated, positions, seed) in [
        (true, &treated_pos, dropout_seeds[1]),
        (false, &control_pos, dropout_seeds[2]),
    ] {
        if positions.is_empty() {
            continue;
        }
        let head = if is_treated { &bundle.head1 } else { &bundle.head0 };
        let z_group = z.select_rows(positions);
        let y_group = Matrix::from_fn(positions.len(), 1, |r, _| {
            targets.get(batch_rows[positions[r]], 0)
        });
        let w_group: Vec<f64> =
            positions.iter().map(|&i| weights[batch_rows[i]]).collect();
        let (pred, head_trace) = head.forward(&z_group, true, seed)?;
        let (group_loss, grad_pred) = weighted_mse(&pred, &y_group, &w_group)?;
        let scale = positions.len() as f64 / n_batch as f64;
        loss += group_loss * scale;
        let (head_grads, dz_group) = head.backward(&head_trace, &grad_pred.scale(scale))?;
        for (local, &pos) in positions.iter().enumerate() {
            for c in 0..dz.cols() {
                dz.set(pos, c, dz.get(pos, c) + dz_group.get(local, c));
            }
        }
        head_updates.push((is_treated, head_grads));
    }

    // Balancing penalty between the arms' projections, gradient into the
    // projection network only.
    let mut ipm_value = None;
    if config.ipm_weight > 0.0 && !treated_pos.is_empty() && !control_pos.is_empty() {
        let z_treated = z.select_rows(&treated_pos);
        let z_control = z.select_rows(&control_pos);
        let eval = ipm::evaluate(config.ipm_kind, &z_treated, &z_control)?;
        ipm_value = Some(eval.value);
        for (local, &pos) in treated_pos.iter().enumerate() {
            for c in 0..dz.cols() {
                dz.set(pos, c, dz.get(pos, c) + config.ipm_weight * eval.grad_a.get(local, c));
            }
        }
        for (local, &pos) in control_pos.iter().enumerate() {
            for c in 0..dz.cols() {
                dz.set(pos, c, dz.get(pos, c) + config.ipm_weight * eval.grad_b.get(local, c));
            }
        }
    }

    let (cfr_grads, _) = bundle.cfr_net.backward(&z_trace, &dz)?;
    bundle.cfr_net.apply_step(&cfr_grads, lr)?;

    // Heads: gradient plus decay; arms absent from the batch still decay.
    for (is_treated, mut grads) in head_updates {
        let head = if is_treated { &mut bundle.head1 } else { &mut bundle.head0 };
        if config.weight_decay > 0.0 {
            grads.add_scaled_params(head, 2.0 * config.weight_decay)?;
        }
        head.apply_step(&grads, lr)?;
    }
    if config.weight_decay > 0.0 {
        for (head, touched) in [
            (&mut bundle.head1, !treated_pos.is_empty()),
            (&mut bundle.head0, !control_pos.is_empty()),
        ] {
            if !touched {
                let mut decay = crate::numerics::MlpGradients::zeros_like(head);
                decay.add_scaled_params(head, 2.0 * config.weight_decay)?;
                head.apply_step(&decay, lr)?;
            }
        }
    }

    Ok(CfrBatchStats { loss, ipm: ipm_value })
}

/// Epoch-granular driver shared by the sequential and alternating schedules.
pub(super) struct CfrDriver<'a> {
    features: &'a Matrix,
    targets: &'a Matrix,
    weights: &'a [f64],
    treatment: &'a [bool],
    config: &'a TrainConfig,
    rng: ChaCha8Rng,
}

impl<'a> CfrDriver<'a> {
    pub(super) fn new(
        features: &'a Matrix,
        targets: &'a Matrix,
        weights: &'a [f64],
        treatment: &'a [bool],
        config: &'a TrainConfig,
        seed: u64,
    ) -> CfrDriver<'a> {
        CfrDriver {
            features,
            targets,
            weights,
            treatment,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One pass over shuffled mini-batches at the epoch's learning rate.
    pub(super) fn run_epoch(
        &mut self,
        bundle: &mut ModelBundle,
        epoch: usize,
    ) -> Result<CfrBatchStats> {
        let n = self.features.rows();
        let lr = self.config.lr_at_epoch(epoch);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let mut loss_sum = 0.0;
        let mut ipm_sum = 0.0;
        let mut ipm_batches = 0usize;
        for chunk in order.chunks(self.config.batch_size) {
            let seeds = [
                self.rng.random::<u64>(),
                self.rng.random::<u64>(),
                self.rng.random::<u64>(),
            ];
            let stats = cfr_batch_step(
                bundle,
                self.features,
                self.targets,
                self.weights,
                self.treatment,
                chunk,
                lr,
                self.config,
                seeds,
            )?;
            loss_sum += stats.loss * chunk.len() as f64;
            if let Some(v) = stats.ipm {
                ipm_sum += v;
                ipm_batches += 1;
            }
        }
        Ok(CfrBatchStats {
            loss: loss_sum / n as f64,
            ipm: (ipm_batches > 0).then(|| ipm_sum / ipm_batches as f64),
        })
    }
}

/// Runs the covariate-matching phase on a dataset for the configured epoch
/// budget. The anchor column is excluded; sample weights come from the
/// treatment vector; the representation network stays frozen.
pub fn cfr_phase(
    dataset: &Dataset,
    bundle: &ModelBundle,
    weights: &super::SampleWeights,
    config: &TrainConfig,
) -> Result<(ModelBundle, Vec<TrainLogRow>)> {
    config.validate()?;
    bundle.validate()?;
    if weights.weights.len() != dataset.len() {
        return Err(Error::Shape("sample weights do not match the dataset".into()));
    }
    let features = dataset.features_without_anchor();
    let targets = Matrix::column(dataset.outcome());
    let mut trained = bundle.clone();
    let mut driver = CfrDriver::new(
        &features,
        &targets,
        &weights.weights,
        dataset.treatment(),
        config,
        crate::subseed(config.seed, 0xcf12),
    );
    let mut log = Vec::with_capacity(config.cfr_epochs);
    for epoch in 0..config.cfr_epochs {
        let stats = driver.run_epoch(&mut trained, epoch)?;
        log.push(TrainLogRow {
            epoch,
            phase: super::Phase::CovariateMatching,
            loss: stats.loss,
            ipm_value: stats.ipm,
            lr: config.lr_at_epoch(epoch),
        });
    }
    Ok((trained, log))
}
