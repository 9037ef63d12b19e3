//! Synthesizes discrete domain labels from a designated anchor covariate and
//! partitions datasets for gradient matching.
//!
//! Each row gets a categorical distribution `softmax(theta * (x - mean(x)))`
//! over `m` domains, where `x` is the row's anchor value, and its label is
//! sampled from that distribution with a row-specific sub-seed. Centering
//! makes the probabilities invariant to a common shift of the anchor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::numerics::{rank, Matrix};
use crate::subseed;
use crate::{Error, Result};

/// Configuration for domain synthesis.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainConfig {
    /// Number of domains to generate; at least 2.
    pub num_domains: usize,
    pub seed: u64,
    /// Per-domain logit slopes. When absent, entries are drawn from
    /// Uniform(1, 2) except the middle entry, which is zero.
    pub theta: Option<Vec<f64>>,
}

impl DomainConfig {
    pub fn new(num_domains: usize, seed: u64) -> Self {
        Self { num_domains, seed, theta: None }
    }
}

/// An exact cover of dataset rows by domain.
#[derive(Debug, Clone)]
pub struct DomainPartition {
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl DomainPartition {
    /// Per-row domain index, each below `num_domains`.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_domains(&self) -> usize {
        self.members.len()
    }

    /// Row indices belonging to domain `k`, ascending.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn nonempty_domains(&self) -> usize {
        self.members.iter().filter(|m| !m.is_empty()).count()
    }

    /// Restricts the partition to a subset of rows (e.g. a train split),
    /// renumbering rows to their position in `rows`.
    pub fn restrict(&self, rows: &[usize]) -> DomainPartition {
        let mut labels = Vec::with_capacity(rows.len());
        let mut members = vec![Vec::new(); self.members.len()];
        for (new_idx, &old_idx) in rows.iter().enumerate() {
            let lab = self.labels[old_idx];
            labels.push(lab);
            members[lab].push(new_idx);
        }
        DomainPartition { labels, members }
    }

    /// Builds a partition from explicit labels.
    pub fn from_labels(labels: Vec<usize>, num_domains: usize) -> Result<Self> {
        let mut members = vec![Vec::new(); num_domains];
        for (row, &lab) in labels.iter().enumerate() {
            if lab >= num_domains {
                return Err(Error::Config(format!(
                    "label {lab} at row {row} exceeds domain count {num_domains}"
                )));
            }
            members[lab].push(row);
        }
        Ok(DomainPartition { labels, members })
    }
}

fn resolve_theta(config: &DomainConfig) -> Result<Vec<f64>> {
    let m = config.num_domains;
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 domains, got {m}")));
    }
    match &config.theta {
        Some(theta) => {
            if theta.len() != m {
                return Err(Error::Config(format!(
                    "theta has {} entries for {} domains",
                    theta.len(),
                    m
                )));
            }
            Ok(theta.clone())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(config.seed, 0x7468_6574));
            let middle = m.div_ceil(2) - 1;
            let theta = (0..m)
                .map(|k| if k == middle { 0.0 } else { 1.0 + rng.random::<f64>() })
                .collect();
            Ok(theta)
        }
    }
}

/// Per-row label probabilities: row `i` of the result is
/// `softmax(theta * (anchor_i - mean(anchor)))`. Rows sum to one with all
/// entries strictly positive.
pub fn assignment_probabilities(anchor_values: &[f64], config: &DomainConfig) -> Result<Matrix> {
    if anchor_values.is_empty() {
        return Err(Error::Config("cannot generate domains from an empty anchor column".into()));
    }
    let theta = resolve_theta(config)?;
    let mean = anchor_values.iter().sum::<f64>() / anchor_values.len() as f64;
    let m = theta.len();
    let mut probs = Matrix::zeros(anchor_values.len(), m);
    for (i, &x) in anchor_values.iter().enumerate() {
        let centered = x - mean;
        let logits: Vec<f64> = theta.iter().map(|t| t * centered).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        let exps: Vec<f64> = logits
            .iter()
            .map(|&l| {
                let e = libm::exp(l - max);
                denom += e;
                e
            })
            .collect();
        for (k, e) in exps.iter().enumerate() {
            probs.set(i, k, e / denom);
        }
    }
    Ok(probs)
}

/// Samples a domain label for every row. Deterministic for a fixed
/// `(anchor_values, config)`: each row draws from its own sub-seeded stream,
/// so labels do not depend on evaluation order.
pub fn generate_domains(anchor_values: &[f64], config: &DomainConfig) -> Result<DomainPartition> {
    let probs = assignment_probabilities(anchor_values, config)?;
    let m = probs.cols();
    let mut labels = Vec::with_capacity(anchor_values.len());
    let mut members = vec![Vec::new(); m];
    for i in 0..anchor_values.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(config.seed, 0x726f_7700 ^ i as u64));
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = m - 1;
        for k in 0..m {
            acc += probs.get(i, k);
            if u < acc {
                label = k;
                break;
            }
        }
        labels.push(label);
        members[label].push(i);
    }
    Ok(DomainPartition { labels, members })
}

/// Diagnostic for the non-degeneracy of a partition: the rank of the matrix
/// of per-domain covariate means. Advisory only; training never blocks on it.
#[derive(Debug, Clone)]
pub struct GeneralPositionReport {
    /// One row per domain; empty domains contribute a zero row.
    pub domain_means: Matrix,
    pub rank: usize,
    /// True when the mean matrix has full row rank over the nonempty domains.
    pub full_row_rank: bool,
    pub empty_domains: Vec<usize>,
    pub notes: Vec<String>,
}

/// Computes per-domain covariate means (anchor column included) and their
/// rank. Requires at least two nonempty domains.
pub fn check_general_position(
    dataset: &Dataset,
    partition: &DomainPartition,
) -> Result<GeneralPositionReport> {
    let nonempty = partition.nonempty_domains();
    if nonempty < 2 {
        return Err(Error::Config(format!(
            "general-position check needs at least 2 nonempty domains, got {nonempty}"
        )));
    }
    let x = dataset.covariates();
    let m = partition.num_domains();
    let mut means = Matrix::zeros(m, x.cols());
    let mut empty_domains = Vec::new();
    let mut notes = Vec::new();
    for k in 0..m {
        let rows = partition.members(k);
        if rows.is_empty() {
            empty_domains.push(k);
            notes.push(format!("domain {k} is empty; its mean row is zero"));
            continue;
        }
        let sub = x.select_rows(rows);
        let mu = sub.column_means()?;
        for (c, v) in mu.iter().enumerate() {
            means.set(k, c, *v);
        }
    }
    let r = rank(&means, 1e-9);
    Ok(GeneralPositionReport {
        domain_means: means,
        rank: r,
        full_row_rank: r == nonempty.min(x.cols()),
        empty_domains,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn mean_anchor_row_gets_uniform_probabilities() {
        let config = DomainConfig { num_domains: 3, seed: 1, theta: Some(vec![1.5, 0.0, 1.2]) };
        // Third value sits exactly at the mean of [0, 2, 1].
        let probs = assignment_probabilities(&[0.0, 2.0, 1.0], &config).unwrap();
        for k in 0..3 {
            assert!((probs.get(2, k) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_are_a_distribution() {
        let config = DomainConfig::new(4, 9);
        let anchors: Vec<f64> = (0..50).map(|i| (i as f64) * 0.3 - 7.0).collect();
        let probs = assignment_probabilities(&anchors, &config).unwrap();
        for i in 0..probs.rows() {
            let sum: f64 = probs.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.row(i).iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn empty_anchor_is_config_error() {
        let config = DomainConfig::new(3, 0);
        assert!(matches!(generate_domains(&[], &config), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_theta_standard_normal_anchors_fill_all_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let anchors: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let config = DomainConfig { num_domains: 3, seed: 5, theta: Some(vec![1.0, 0.0, 1.0]) };
        let partition = generate_domains(&anchors, &config).unwrap();
        let sizes = partition.domain_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 10_000);
        for (k, &size) in sizes.iter().enumerate() {
            assert!(size >= 1000, "domain {k} holds only {size} of 10000 rows");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let anchors: Vec<f64> = (0..200).map(|i| (i % 17) as f64 * 0.21).collect();
        let config = DomainConfig::new(3, 77);
        let a = generate_domains(&anchors, &config).unwrap();
        let b = generate_domains(&anchors, &config).unwrap();
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn restrict_renumbers_rows() {
        let anchors: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let config = DomainConfig::new(2, 3);
        let partition = generate_domains(&anchors, &config).unwrap();
        let rows = [2usize, 5, 7];
        let sub = partition.restrict(&rows);
        assert_eq!(sub.labels().len(), 3);
        for (new_idx, &old_idx) in rows.iter().enumerate() {
            assert_eq!(sub.labels()[new_idx], partition.labels()[old_idx]);
        }
        let total: usize = sub.domain_sizes().iter().sum();
        assert_eq!(total, 3);
    }

    fn dataset_from_x(x: Matrix) -> Dataset {
        let n = x.rows();
        let t: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let y = vec![0.0; n];
        Dataset::new(x, t, y, None, None, 0, None).unwrap()
    }

    #[test]
    fn identical_covariates_have_rank_one_means() {
        let x = Matrix::from_fn(8, 3, |_, c| c as f64 + 1.0);
        let dataset = dataset_from_x(x);
        let partition =
            DomainPartition::from_labels(vec![0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        let report = check_general_position(&dataset, &partition).unwrap();
        assert_eq!(report.rank, 1);
        assert!(!report.full_row_rank);
    }

    #[test]
    fn independent_means_have_full_rank() {
        // Domain 0 rows average to (1, 0); domain 1 rows to (0, 1).
        let x = Matrix::from_vec(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let dataset = dataset_from_x(x);
        let partition = DomainPartition::from_labels(vec![0, 0, 1, 1], 2).unwrap();
        let report = check_general_position(&dataset, &partition).unwrap();
        assert_eq!(report.rank, 2);
        assert!(report.full_row_rank);
    }

    #[test]
    fn random_gaussian_domains_have_full_rank() {
        // m = 3 domains, d = 10 covariates: sampled means are full row rank.
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let x = Matrix::from_fn(90, 10, |_, _| normal.sample(&mut rng));
            let dataset = dataset_from_x(x);
            let labels: Vec<usize> = (0..90).map(|i| i % 3).collect();
            let partition = DomainPartition::from_labels(labels, 3).unwrap();
            let report = check_general_position(&dataset, &partition).unwrap();
            assert_eq!(report.rank, 3, "seed {seed}");
            assert!(report.full_row_rank);
        }
    }

    #[test]
    fn empty_domain_reported_not_fatal() {
        let x = Matrix::from_fn(4, 2, |r, c| (r * 2 + c) as f64);
        let dataset = dataset_from_x(x);
        let partition = DomainPartition::from_labels(vec![0, 0, 2, 2], 3).unwrap();
        let report = check_general_position(&dataset, &partition).unwrap();
        assert_eq!(report.empty_domains, vec![1]);
    }

    proptest! {
        #[test]
        fn partition_is_exact_cover(n in 1usize..120, m in 2usize..5, seed in any::<u64>()) {
            let anchors: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 0.7) * 3.0).collect();
            let config = DomainConfig::new(m, seed);
            let partition = generate_domains(&anchors, &config).unwrap();
            let total: usize = partition.domain_sizes().iter().sum();
            prop_assert_eq!(total, n);
            let mut seen = vec![false; n];
            for k in 0..m {
                for &row in partition.members(k) {
                    prop_assert!(!seen[row], "row {} covered twice", row);
                    seen[row] = true;
                    prop_assert_eq!(partition.labels()[row], k);
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
            prop_assert!(partition.labels().iter().all(|&l| l < m));
        }

        #[test]
        fn probabilities_shift_invariant(shift in -50.0f64..50.0, seed in any::<u64>()) {
            let anchors: Vec<f64> = (0..40).map(|i| libm::cos(i as f64) * 2.0).collect();
            let shifted: Vec<f64> = anchors.iter().map(|a| a + shift).collect();
            let config = DomainConfig::new(3, seed);
            let p0 = assignment_probabilities(&anchors, &config).unwrap();
            let p1 = assignment_probabilities(&shifted, &config).unwrap();
            for (a, b) in p0.data().iter().zip(p1.data()) {
                prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            }
        }
    }
}
