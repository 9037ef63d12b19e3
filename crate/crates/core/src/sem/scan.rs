//! Invariance-versus-adjustment scans and the randomized validation harness
//! for the approximate-invariance identification claim.
//!
//! For a subset `Z` of observed non-anchor covariates, two closed-form
//! quantities are compared:
//!
//! * the invariance premise `cov(Y, X_t | T, Z)` from the observational
//!   covariance, and
//! * the post-interventional `cov(Y', T | Z)`, computed from the model with
//!   the treatment -> outcome edge severed. Splitting the treatment into a
//!   collider `T` and an exogenous do-input adds only a component of `Y'`
//!   independent of `T` and of every covariate, so severing the edge yields
//!   exactly the same cross-covariances.
//!
//! Both quantities are compared in absolute value against the threshold.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{random_sem, RandomSemConfig};
use super::{conditional_cov, covariance_from, LinearSem};
use crate::subseed;
use crate::{Error, Result};

/// One `(Z, covariances)` record from a scan.
#[derive(Debug, Clone)]
pub struct InvarianceRecord {
    pub z: Vec<usize>,
    /// `cov(Y, X_t | T ∪ Z)` in the observational model.
    pub premise_cov: f64,
    /// `cov(Y', T | Z)` after intervention.
    pub adjusted_cov: f64,
    /// `cov(Y', X_t | T ∪ Z)`: the intermediate quantity whose smallness the
    /// determinant-term side condition asserts.
    pub post_anchor_cov: f64,
    pub premise_holds: bool,
    pub conclusion_holds: bool,
    /// Side condition `|cov(Y', X_t | T, Z)| < epsilon`, evaluated only
    /// where the premise holds (true elsewhere).
    pub side_condition_ok: bool,
}

const SUBSET_GUARD: usize = 12;

/// Enumerates every subset of the observed non-anchor covariates and reports
/// both covariances with pass/fail flags at threshold `epsilon`. Refuses
/// models with more than 12 candidate covariates.
pub fn invariance_scan(sem: &LinearSem, epsilon: f64) -> Result<Vec<InvarianceRecord>> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("threshold must be positive, got {epsilon}")));
    }
    let pool = sem.observed_nonanchor_covariates();
    if pool.len() > SUBSET_GUARD {
        return Err(Error::OracleGuard(format!(
            "subset enumeration over {} covariates exceeds the cap of {SUBSET_GUARD}",
            pool.len()
        )));
    }
    let sigma = sem.covariance()?;
    let severed = covariance_from(&sem.outcome_severed_edges(), sem.noise_variances())?;

    let y = sem.outcome();
    let t = sem.treatment();
    let anchor = sem.anchor();

    let mut records = Vec::with_capacity(1 << pool.len());
    for mask in 0..(1u32 << pool.len()) {
        let z: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &v)| v)
            .collect();
        let z_set: BTreeSet<usize> = z.iter().cloned().collect();
        let mut with_t = z_set.clone();
        with_t.insert(t);

        let premise_cov = conditional_cov(&sigma, y, anchor, &with_t)?;
        let adjusted_cov = conditional_cov(&severed, y, t, &z_set)?;
        let post_anchor_cov = conditional_cov(&severed, y, anchor, &with_t)?;

        let premise_holds = libm::fabs(premise_cov) < epsilon;
        let conclusion_holds = libm::fabs(adjusted_cov) < epsilon;
        let side_condition_ok = !premise_holds || libm::fabs(post_anchor_cov) < epsilon;
        records.push(InvarianceRecord {
            z,
            premise_cov,
            adjusted_cov,
            post_anchor_cov,
            premise_holds,
            conclusion_holds,
            side_condition_ok,
        });
    }
    Ok(records)
}

/// Configuration for the randomized validation runs.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremTrialConfig {
    pub trials: usize,
    pub p_min: usize,
    pub p_max: usize,
    pub epsilon: f64,
    /// Anchor edge strength lower bound; at least 0.9.
    pub alpha_min: f64,
    /// Cap on non-anchor treatment parents; at most 0.1.
    pub beta_max: f64,
    pub seed: u64,
}

impl Default for TheoremTrialConfig {
    fn default() -> Self {
        TheoremTrialConfig {
            trials: 200,
            p_min: 4,
            p_max: 8,
            epsilon: 0.01,
            alpha_min: 0.95,
            beta_max: 0.05,
            seed: 0,
        }
    }
}

impl TheoremTrialConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        if self.p_min < 4 || self.p_max < self.p_min {
            return Err(Error::Config(format!(
                "node range [{}, {}] must satisfy 4 <= p_min <= p_max",
                self.p_min, self.p_max
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.alpha_min < 0.9 || self.alpha_min > 1.0 {
            return Err(Error::Config(format!(
                "alpha_min must lie in [0.9, 1], got {}",
                self.alpha_min
            )));
        }
        if !(0.0..=0.1).contains(&self.beta_max) {
            return Err(Error::Config(format!(
                "beta_max must lie in [0, 0.1], got {}",
                self.beta_max
            )));
        }
        Ok(())
    }
}

/// Per-trial tallies.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremTrialRow {
    pub trial: usize,
    pub nodes: usize,
    pub hidden_count: usize,
    pub anchor_edge: f64,
    pub pairs: usize,
    pub premise_pairs: usize,
    pub violations: usize,
    pub side_condition_failures: usize,
    /// Largest `|cov(Y', T | Z)|` seen among premise-holding subsets.
    pub max_adjusted_given_premise: f64,
}

/// Aggregated report over all trials.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremReport {
    pub rows: Vec<TheoremTrialRow>,
    pub total_pairs: usize,
    pub premise_pairs: usize,
    pub violations: usize,
    pub side_condition_failures: usize,
    /// Violations over all enumerated pairs.
    pub violation_fraction: f64,
    /// Violations over premise-holding pairs (0 when none hold).
    pub violation_fraction_given_premise: f64,
}

/// Runs a single seeded trial; trial `index` under a fixed config is fully
/// deterministic, independent of the others, and safe to evaluate
/// concurrently.
pub fn theorem_trial(config: &TheoremTrialConfig, index: usize) -> Result<TheoremTrialRow> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(config.seed, 0x7468_6d32 ^ index as u64));
    let sem_config = RandomSemConfig {
        p_min: config.p_min,
        p_max: config.p_max,
        alpha_min: config.alpha_min,
        beta_max: config.beta_max,
        extra_hidden: true,
    };
    let sem = random_sem(&sem_config, &mut rng)?;
    let records = invariance_scan(&sem, config.epsilon)?;

    let mut premise_pairs = 0;
    let mut violations = 0;
    let mut side_condition_failures = 0;
    let mut max_adjusted: f64 = 0.0;
    for record in &records {
        if record.premise_holds {
            premise_pairs += 1;
            max_adjusted = max_adjusted.max(libm::fabs(record.adjusted_cov));
            if !record.conclusion_holds {
                violations += 1;
            }
            if !record.side_condition_ok {
                side_condition_failures += 1;
            }
        }
    }
    Ok(TheoremTrialRow {
        trial: index,
        nodes: sem.num_nodes(),
        hidden_count: sem.hidden().len(),
        anchor_edge: sem.edge_weights().get(sem.anchor(), sem.treatment()),
        pairs: records.len(),
        premise_pairs,
        violations,
        side_condition_failures,
        max_adjusted_given_premise: max_adjusted,
    })
}

/// Runs all trials sequentially and aggregates. Deterministic per seed.
pub fn validate_theorem2(config: &TheoremTrialConfig) -> Result<TheoremReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.trials);
    for index in 0..config.trials {
        rows.push(theorem_trial(config, index)?);
    }
    Ok(aggregate_trials(rows))
}

/// Merges per-trial rows (in trial order) into a report; used by the
/// sequential driver above and by concurrent callers after collecting.
pub fn aggregate_trials(mut rows: Vec<TheoremTrialRow>) -> TheoremReport {
    rows.sort_by_key(|r| r.trial);
    let total_pairs: usize = rows.iter().map(|r| r.pairs).sum();
    let premise_pairs: usize = rows.iter().map(|r| r.premise_pairs).sum();
    let violations: usize = rows.iter().map(|r| r.violations).sum();
    let side_condition_failures: usize =
        rows.iter().map(|r| r.side_condition_failures).sum();
    TheoremReport {
        rows,
        total_pairs,
        premise_pairs,
        violations,
        side_condition_failures,
        violation_fraction: if total_pairs == 0 {
            0.0
        } else {
            violations as f64 / total_pairs as f64
        },
        violation_fraction_given_premise: if premise_pairs == 0 {
            0.0
        } else {
            violations as f64 / premise_pairs as f64
        },
    }
}
