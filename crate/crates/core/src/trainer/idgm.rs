//! Explicit gradient-inner-product objective, used as a small-scale oracle
//! for what the clone-adapt-interpolate phase optimizes implicitly.
//!
//! For domains `D_1..D_S` and a model mapping anchor-free features to a
//! prediction, the objective is
//!
//! ```text
//! L = mse(all rows) - gamma * mean over unordered domain pairs of (G_i . G_j)
//! ```
//!
//! with `G_k` the exact full-domain gradient of the per-domain mean squared
//! error. Gradients of `L` come from central finite differences (the pair
//! term is second-order in the model), which caps the oracle at tiny models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::domains::DomainPartition;
use crate::numerics::{weighted_mse, Matrix, MlpParams};
use crate::{Error, Result};

const PARAM_CAP: usize = 500;

/// Exact mean-squared-error gradient over the given rows, flattened in
/// parameter order. Eval-mode forward (the oracle is dropout-free).
pub fn domain_expected_gradient(
    params: &MlpParams,
    features: &Matrix,
    targets: &Matrix,
    rows: &[usize],
) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::DegenerateInput("expected gradient over an empty domain".into()));
    }
    let x = features.select_rows(rows);
    let y = targets.select_rows(rows);
    let ones = vec![1.0; rows.len()];
    let (pred, trace) = params.forward(&x, false, 0)?;
    let (_, grad_pred) = weighted_mse(&pred, &y, &ones)?;
    let (grads, _) = params.backward(&trace, &grad_pred)?;
    Ok(grads.flatten())
}

/// Value pieces of the objective.
#[derive(Debug, Clone, Copy)]
pub struct IdgmValue {
    pub total: f64,
    /// Pooled mean squared error over all rows.
    pub erm: f64,
    /// Mean gradient inner product over unordered domain pairs
    /// (`2 / (S (S - 1))` times the sum over `i < j`); zero with fewer than
    /// two nonempty domains.
    pub pair_term: f64,
}

/// Evaluates the objective at `params` on anchor-free `features`.
pub fn idgm_loss(
    partition: &DomainPartition,
    features: &Matrix,
    targets: &Matrix,
    params: &MlpParams,
    gamma_weight: f64,
) -> Result<IdgmValue> {
    if partition.labels().len() != features.rows() {
        return Err(Error::Shape("partition does not match the feature matrix".into()));
    }
    let all_rows: Vec<usize> = (0..features.rows()).collect();
    let ones = vec![1.0; all_rows.len()];
    let (pred, _) = params.forward(features, false, 0)?;
    let (erm, _) = weighted_mse(&pred, targets, &ones)?;

    let domains: Vec<&[usize]> = (0..partition.num_domains())
        .map(|k| partition.members(k))
        .filter(|rows| !rows.is_empty())
        .collect();
    let s = domains.len();
    let pair_term = if s < 2 {
        0.0
    } else {
        let grads: Vec<Vec<f64>> = domains
            .iter()
            .map(|rows| domain_expected_gradient(params, features, targets, rows))
            .collect::<Result<_>>()?;
        let mut sum = 0.0;
        for i in 0..s {
            for j in i + 1..s {
                sum += grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        2.0 * sum / (s as f64 * (s as f64 - 1.0))
    };
    Ok(IdgmValue { total: erm - gamma_weight * pair_term, erm, pair_term })
}

/// Oracle-scale evaluation with a central-finite-difference gradient over
/// every parameter. Works on the dataset directly (anchor column excluded)
/// and refuses models above 500 parameters.
pub fn idgm_loss_oracle(
    partition: &DomainPartition,
    dataset: &Dataset,
    params: &MlpParams,
    gamma_weight: f64,
) -> Result<(IdgmValue, Vec<f64>)> {
    if params.param_count() > PARAM_CAP {
        return Err(Error::OracleGuard(format!(
            "{} parameters exceed the oracle cap of {PARAM_CAP}",
            params.param_count()
        )));
    }
    let features = dataset.features_without_anchor();
    let targets = Matrix::column(dataset.outcome());
    let value = idgm_loss(partition, &features, &targets, params, gamma_weight)?;

    let step = 1e-5;
    let flat = params.flatten();
    let mut gradient = Vec::with_capacity(flat.len());
    let mut work = params.clone();
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += step;
        work.set_flat(&plus)?;
        let up = idgm_loss(partition, &features, &targets, &work, gamma_weight)?.total;
        let mut minus = flat.clone();
        minus[i] -= step;
        work.set_flat(&minus)?;
        let down = idgm_loss(partition, &features, &targets, &work, gamma_weight)?.total;
        gradient.push((up - down) / (2.0 * step));
    }
    Ok((value, gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{init_params, Activation};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = Matrix::from_fn(n, 1, |r, _| x.get(r, 0) - 0.5 * x.get(r, 1));
        (x, y)
    }

    #[test]
    fn gamma_zero_reduces_to_pooled_erm() {
        let (x, y) = toy(20, 1);
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let partition = DomainPartition::from_labels(labels, 2).unwrap();
        let params = init_params(&[2, 3, 1], Activation::Elu, 0.0, 5).unwrap();
        let value = idgm_loss(&partition, &x, &y, &params, 0.0).unwrap();
        assert_eq!(value.total, value.erm);

        let ones = vec![1.0; 20];
        let (pred, _) = params.forward(&x, false, 0).unwrap();
        let (erm, _) = weighted_mse(&pred, &y, &ones).unwrap();
        assert_eq!(value.erm, erm);
    }

    #[test]
    fn identical_domains_pair_term_is_gradient_norm() {
        // Rows 0..10 and 10..20 hold bitwise-identical data, so the two
        // domain gradients coincide and their inner product is a squared
        // norm, strictly positive away from a stationary point.
        let (x_half, y_half) = toy(10, 2);
        let x = Matrix::from_fn(20, 2, |r, c| x_half.get(r % 10, c));
        let y = Matrix::from_fn(20, 1, |r, c| y_half.get(r % 10, c));
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let partition = DomainPartition::from_labels(labels, 2).unwrap();
        let params = init_params(&[2, 3, 1], Activation::Elu, 0.0, 7).unwrap();

        let value = idgm_loss(&partition, &x, &y, &params, 1.0).unwrap();
        let g = domain_expected_gradient(&params, &x, &y, &(0..10).collect::<Vec<_>>()).unwrap();
        let norm2: f64 = g.iter().map(|v| v * v).sum();
        assert!(norm2 > 0.0);
        assert!((value.pair_term - norm2).abs() < 1e-12 * (1.0 + norm2));
    }

    #[test]
    fn two_domain_pair_term_matches_explicit_dot_product() {
        let (x, y) = toy(30, 3);
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 14)).collect();
        let partition = DomainPartition::from_labels(labels, 2).unwrap();
        let params = init_params(&[2, 4, 1], Activation::Elu, 0.0, 9).unwrap();

        let value = idgm_loss(&partition, &x, &y, &params, 2.5).unwrap();
        let rows_a: Vec<usize> = (0..14).collect();
        let rows_b: Vec<usize> = (14..30).collect();
        let ga = domain_expected_gradient(&params, &x, &y, &rows_a).unwrap();
        let gb = domain_expected_gradient(&params, &x, &y, &rows_b).unwrap();
        let dot: f64 = ga.iter().zip(&gb).map(|(a, b)| a * b).sum();
        let rel = (value.pair_term - dot).abs() / dot.abs().max(1e-300);
        assert!(rel < 1e-10, "relative error {rel}");
        assert!((value.total - (value.erm - 2.5 * value.pair_term)).abs() < 1e-15);
    }

    #[test]
    fn oracle_guard_refuses_big_models() {
        use crate::data::Dataset;
        let (x, y) = toy(10, 4);
        let t: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let dataset =
            Dataset::new(x, t, y.column_values(0), None, None, 0, None).unwrap();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let partition = DomainPartition::from_labels(labels, 2).unwrap();
        let big = init_params(&[1, 40, 40, 1], Activation::Elu, 0.0, 1).unwrap();
        assert!(big.param_count() > 500);
        assert!(matches!(
            idgm_loss_oracle(&partition, &dataset, &big, 1.0),
            Err(Error::OracleGuard(_))
        ));
    }

    #[test]
    fn oracle_gradient_matches_analytic_at_gamma_zero() {
        use crate::data::Dataset;
        // With gamma = 0 the objective is the pooled ERM, whose exact
        // gradient the backward pass provides: the central differences must
        // agree closely.
        let (x, y) = toy(16, 8);
        let t: Vec<bool> = (0..16).map(|i| i % 2 == 0).collect();
        let dataset =
            Dataset::new(x.clone(), t, y.column_values(0), None, None, 0, None).unwrap();
        let labels: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let partition = DomainPartition::from_labels(labels, 2).unwrap();
        let params = init_params(&[1, 3, 1], Activation::Elu, 0.0, 6).unwrap();

        let (_, fd) = idgm_loss_oracle(&partition, &dataset, &params, 0.0).unwrap();
        let features = dataset.features_without_anchor();
        let targets = Matrix::column(dataset.outcome());
        let all: Vec<usize> = (0..16).collect();
        let analytic = domain_expected_gradient(&params, &features, &targets, &all).unwrap();
        for (a, b) in fd.iter().zip(&analytic) {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
            assert!(rel < 1e-5, "{a} vs {b}");
        }
    }
}
