//! Random SEM generation for the validation harnesses.
//!
//! Sampled models satisfy every [`super::LinearSem`] invariant plus two
//! regime constraints: the anchor is a root whose only child is the
//! treatment (keeping the anchor's association with the outcome entirely
//! mediated by the treatment's backdoor structure), and every non-anchor
//! parent of the treatment has weight magnitude at most `beta_max` while the
//! anchor edge lies in `[alpha_min, 1]`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::LinearSem;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Knobs for one random draw.
#[derive(Debug, Clone, Copy)]
pub struct RandomSemConfig {
    pub p_min: usize,
    pub p_max: usize,
    /// Lower bound for the anchor -> treatment weight (upper bound is 1).
    pub alpha_min: f64,
    /// Magnitude cap for all other treatment parents.
    pub beta_max: f64,
    /// Allow a second hidden node on larger graphs.
    pub extra_hidden: bool,
}

const EDGE_PROB: f64 = 0.4;

fn signed_weight<R: Rng>(rng: &mut R) -> f64 {
    let magnitude = 0.5 + rng.random::<f64>();
    if rng.random::<f64>() < 0.5 {
        magnitude
    } else {
        -magnitude
    }
}

/// Seeded convenience wrapper around [`random_sem`].
pub fn random_sem_seeded(config: &RandomSemConfig, seed: u64) -> Result<LinearSem> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_sem(config, &mut rng)
}

/// Draws a model. Node layout in topological order: hidden nodes first, then
/// covariates (anchor at a random covariate position), then treatment, then
/// outcome.
pub fn random_sem<R: Rng>(config: &RandomSemConfig, rng: &mut R) -> Result<LinearSem> {
    if config.p_min < 4 || config.p_max < config.p_min {
        return Err(Error::Config(format!(
            "node range [{}, {}] must satisfy 4 <= p_min <= p_max",
            config.p_min, config.p_max
        )));
    }
    let p = config.p_min + rng.random_range(0..=(config.p_max - config.p_min));
    let mut hidden_count = 1;
    if config.extra_hidden && p >= 6 && rng.random::<f64>() < 0.5 {
        hidden_count = 2;
    }
    let covariate_lo = hidden_count;
    let treatment = p - 2;
    let outcome = p - 1;
    let anchor = rng.random_range(covariate_lo..treatment);

    let mut b = Matrix::zeros(p, p);

    // Hidden roots: at most two children each; half the time the classic
    // confounding pair (treatment, outcome).
    for u in 0..hidden_count {
        let (c1, c2) = if rng.random::<f64>() < 0.5 {
            (treatment, outcome)
        } else {
            let candidates: Vec<usize> =
                (covariate_lo..p).filter(|&v| v != anchor && v != u).collect();
            let first = candidates[rng.random_range(0..candidates.len())];
            let mut second = candidates[rng.random_range(0..candidates.len())];
            while second == first {
                second = candidates[rng.random_range(0..candidates.len())];
            }
            (first, second)
        };
        for child in [c1, c2] {
            let w = if child == treatment {
                let magnitude = rng.random::<f64>() * config.beta_max;
                if rng.random::<f64>() < 0.5 {
                    magnitude
                } else {
                    -magnitude
                }
            } else {
                signed_weight(rng)
            };
            b.set(u, child, w);
        }
    }

    // Covariate-to-covariate edges follow the index order; the anchor takes
    // part in neither side.
    for i in covariate_lo..treatment {
        if i == anchor {
            continue;
        }
        for j in i + 1..treatment {
            if j == anchor {
                continue;
            }
            if rng.random::<f64>() < EDGE_PROB {
                b.set(i, j, signed_weight(rng));
            }
        }
    }

    // Treatment parents: anchor always, others capped.
    b.set(anchor, treatment, config.alpha_min + rng.random::<f64>() * (1.0 - config.alpha_min));
    for i in covariate_lo..treatment {
        if i == anchor {
            continue;
        }
        if rng.random::<f64>() < EDGE_PROB {
            let magnitude = rng.random::<f64>() * config.beta_max;
            let w = if rng.random::<f64>() < 0.5 { magnitude } else { -magnitude };
            b.set(i, treatment, w);
        }
    }

    // Outcome parents: treatment always, covariates at the usual rate.
    b.set(treatment, outcome, signed_weight(rng));
    for i in covariate_lo..treatment {
        if i == anchor {
            continue;
        }
        if rng.random::<f64>() < EDGE_PROB {
            b.set(i, outcome, signed_weight(rng));
        }
    }

    let mut omega: Vec<f64> = (0..p).map(|_| 0.5 + rng.random::<f64>()).collect();
    // The treatment keeps only a sliver of its own noise so that it stays
    // highly correlated with the anchor; the post-interventional covariance
    // carries a var(T)/alpha factor over the invariance premise, and that
    // factor only drops below one when the treatment noise is small next to
    // alpha (1 - alpha).
    omega[treatment] = 0.005 + 0.015 * rng.random::<f64>();
    let hidden: BTreeSet<usize> = (0..hidden_count).collect();
    LinearSem::new(b, omega, treatment, outcome, anchor, hidden)
}
