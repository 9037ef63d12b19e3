//! Linear-Gaussian semi-Markovian SEM laboratory.
//!
//! A model over nodes `0..p` is `V = Bᵀ V + ε`: node `j`'s structural
//! equation is `v_j = Σ_i b[i][j] v_i + ε_j` with independent zero-mean
//! Gaussian noise of variance `omega[j]`, so `b[i][j] != 0` exactly when the
//! graph has edge `i -> j`. The exact joint covariance is
//! `Σ = (I - Bᵀ)⁻¹ Ω (I - B)⁻¹`.
//!
//! Roles: one treatment node whose only child is the outcome, one childless
//! outcome node, one anchor covariate with a direct edge into the treatment,
//! and a set of hidden nodes that are roots with at most two children each.

mod fixtures;
mod graph;
mod random;
mod scan;
mod synth;
mod text;

pub use fixtures::{confounded_benchmark, confounded_four};
pub use graph::DagStructure;
pub use random::{random_sem, random_sem_seeded, RandomSemConfig};
pub use scan::{
    aggregate_trials, invariance_scan, theorem_trial, validate_theorem2, InvarianceRecord,
    TheoremReport, TheoremTrialConfig, TheoremTrialRow,
};
pub use synth::{synth_dataset, SynthOutput};
pub use text::{parse_sem, render_sem};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::numerics::{condition_number, invert, solve, Matrix};
use crate::{Error, Result};

/// A validated linear-Gaussian SEM with role labels.
#[derive(Debug, Clone)]
pub struct LinearSem {
    b: Matrix,
    omega: Vec<f64>,
    treatment: usize,
    outcome: usize,
    anchor: usize,
    hidden: BTreeSet<usize>,
    topo_order: Vec<usize>,
}

impl LinearSem {
    /// Validates every structural invariant and builds the model.
    pub fn new(
        b: Matrix,
        omega: Vec<f64>,
        treatment: usize,
        outcome: usize,
        anchor: usize,
        hidden: BTreeSet<usize>,
    ) -> Result<LinearSem> {
        let p = b.rows();
        if b.cols() != p {
            return Err(Error::Data(format!("edge matrix must be square, got {}x{}", p, b.cols())));
        }
        if omega.len() != p {
            return Err(Error::Data(format!("{} noise variances for {p} nodes", omega.len())));
        }
        if omega.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Data("all noise variances must be positive and finite".into()));
        }
        if !b.is_finite() {
            return Err(Error::Data("edge weights must be finite".into()));
        }
        for idx in [treatment, outcome, anchor] {
            if idx >= p {
                return Err(Error::Data(format!("role index {idx} out of range for p = {p}")));
            }
        }
        if treatment == outcome || treatment == anchor || outcome == anchor {
            return Err(Error::Data("treatment, outcome and anchor must be distinct nodes".into()));
        }
        for &h in &hidden {
            if h >= p {
                return Err(Error::Data(format!("hidden node {h} out of range")));
            }
            if h == treatment || h == outcome || h == anchor {
                return Err(Error::Data("treatment, outcome and anchor must be observed".into()));
            }
        }
        for i in 0..p {
            if b.get(i, i) != 0.0 {
                return Err(Error::Data(format!("self-loop at node {i}")));
            }
        }
        let structure = DagStructure::from_edge_matrix(&b);
        let topo_order = structure.topological_order()?;

        if b.get(anchor, treatment) == 0.0 {
            return Err(Error::Data(
                "anchor must have a direct edge into the treatment".into(),
            ));
        }
        if !structure.children_of(outcome).is_empty() {
            return Err(Error::Data("outcome must have no children".into()));
        }
        let t_children = structure.children_of(treatment);
        if t_children != [outcome] {
            return Err(Error::Data(format!(
                "treatment must have exactly the outcome as child, found {t_children:?}"
            )));
        }
        for &h in &hidden {
            if !structure.parents_of(h).is_empty() {
                return Err(Error::Data(format!("hidden node {h} must have no parents")));
            }
            if structure.children_of(h).len() > 2 {
                return Err(Error::Data(format!("hidden node {h} has more than two children")));
            }
        }
        Ok(LinearSem { b, omega, treatment, outcome, anchor, hidden, topo_order })
    }

    pub fn num_nodes(&self) -> usize {
        self.b.rows()
    }

    pub fn edge_weights(&self) -> &Matrix {
        &self.b
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.omega
    }

    pub fn treatment(&self) -> usize {
        self.treatment
    }

    pub fn outcome(&self) -> usize {
        self.outcome
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn hidden(&self) -> &BTreeSet<usize> {
        &self.hidden
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn structure(&self) -> DagStructure {
        DagStructure::from_edge_matrix(&self.b)
    }

    pub fn is_hidden(&self, node: usize) -> bool {
        self.hidden.contains(&node)
    }

    /// Observed nodes that are plain covariates (not treatment/outcome), the
    /// anchor included, ascending.
    pub fn observed_covariates(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&v| v != self.treatment && v != self.outcome && !self.is_hidden(v))
            .collect()
    }

    /// Observed covariates without the anchor; the candidate adjustment pool.
    pub fn observed_nonanchor_covariates(&self) -> Vec<usize> {
        self.observed_covariates().into_iter().filter(|&v| v != self.anchor).collect()
    }

    /// Exact joint covariance `Σ = (I - Bᵀ)⁻¹ Ω (I - B)⁻¹`.
    pub fn covariance(&self) -> Result<Matrix> {
        covariance_from(&self.b, &self.omega)
    }

    /// Surgical do-intervention: removes every edge into `target` while
    /// keeping its noise term, so the target becomes exogenous with its
    /// original noise variance. Role invariants of the original model are not
    /// re-checked (surgery on the treatment removes the anchor edge by
    /// design).
    pub fn intervene(&self, target: usize) -> Result<LinearSem> {
        if target >= self.num_nodes() {
            return Err(Error::Data(format!("intervention target {target} out of range")));
        }
        if self.is_hidden(target) {
            return Err(Error::Data(format!("cannot intervene on hidden node {target}")));
        }
        let mut b = self.b.clone();
        for i in 0..self.num_nodes() {
            b.set(i, target, 0.0);
        }
        Ok(LinearSem {
            b,
            omega: self.omega.clone(),
            treatment: self.treatment,
            outcome: self.outcome,
            anchor: self.anchor,
            hidden: self.hidden.clone(),
            topo_order: self.topo_order.clone(),
        })
    }

    /// Edge matrix with the treatment -> outcome edge removed. The covariance
    /// of this severed model gives post-interventional cross-covariances
    /// between the outcome and any pre-treatment variable: splitting the
    /// treatment into (collider T, exogenous do-input) only adds an
    /// independent component to the outcome, which cancels from every
    /// covariance with T or with covariates.
    pub(crate) fn outcome_severed_edges(&self) -> Matrix {
        let mut b = self.b.clone();
        b.set(self.treatment, self.outcome, 0.0);
        b
    }

    /// d-separation of `a` and `b` by `s` in the model's graph.
    pub fn d_separated(&self, a: usize, b: usize, s: &BTreeSet<usize>) -> bool {
        self.structure().d_separated(a, b, s)
    }

    /// Backdoor criterion for `z` relative to (treatment, outcome): no member
    /// of `z` descends from the treatment and `z` blocks every path into the
    /// treatment that reaches the outcome (checked as d-separation after
    /// cutting the treatment's outgoing edges).
    pub fn is_valid_backdoor(&self, z: &BTreeSet<usize>) -> bool {
        if z.contains(&self.treatment) || z.contains(&self.outcome) {
            return false;
        }
        let structure = self.structure();
        let descendants = structure.descendants_of(self.treatment);
        if z.iter().any(|&v| descendants[v]) {
            return false;
        }
        let mut cut = self.b.clone();
        for j in 0..self.num_nodes() {
            cut.set(self.treatment, j, 0.0);
        }
        DagStructure::from_edge_matrix(&cut).d_separated(self.treatment, self.outcome, z)
    }

    /// Causal effect of the treatment on the outcome computed from the
    /// mutilated model: after surgery the treatment is exogenous, so the
    /// regression of outcome on treatment identifies the effect.
    pub fn interventional_effect(&self) -> Result<f64> {
        let mutilated = self.intervene(self.treatment)?;
        let sigma = mutilated.covariance()?;
        Ok(sigma.get(self.treatment, self.outcome) / sigma.get(self.treatment, self.treatment))
    }

    /// Population regression coefficient of the treatment when the outcome is
    /// regressed on the treatment together with `z`, from the observational
    /// covariance.
    pub fn adjusted_effect(&self, z: &BTreeSet<usize>) -> Result<f64> {
        if z.contains(&self.treatment) || z.contains(&self.outcome) {
            return Err(Error::Config("adjustment set must exclude treatment and outcome".into()));
        }
        let sigma = self.covariance()?;
        let mut regressors: Vec<usize> = Vec::with_capacity(z.len() + 1);
        regressors.push(self.treatment);
        regressors.extend(z.iter().cloned());
        let k = regressors.len();
        let gram = Matrix::from_fn(k, k, |r, c| sigma.get(regressors[r], regressors[c]));
        let rhs = Matrix::from_fn(k, 1, |r, _| sigma.get(regressors[r], self.outcome));
        let beta = solve(&gram, &rhs)?;
        Ok(beta.get(0, 0))
    }
}

/// Joint covariance for a raw `(B, Ω)` pair (also used for mutilated and
/// augmented edge matrices that do not satisfy the role invariants).
pub fn covariance_from(b: &Matrix, omega: &[f64]) -> Result<Matrix> {
    let p = b.rows();
    let mut i_minus_bt = Matrix::from_fn(p, p, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - b.get(c, r)
    });
    let minv = match invert(&i_minus_bt) {
        Ok(m) => m,
        Err(_) => {
            // Impossible for a DAG; a singular system signals a broken invariant.
            return Err(Error::Numeric("(I - B) is singular; the model is not a DAG".into()));
        }
    };
    // Σ = M Ω Mᵀ with Ω diagonal.
    for r in 0..p {
        for c in 0..p {
            i_minus_bt.set(r, c, minv.get(r, c) * omega[c]);
        }
    }
    i_minus_bt.matmul(&minv.transpose())
}

/// Gaussian conditional covariance `cov(i, j | s)` via the Schur complement
/// `Σ_ij - Σ_iS Σ_SS⁻¹ Σ_Sj`. Errors when `Σ_SS` is numerically
/// ill-conditioned (condition number above 1e12).
pub fn conditional_cov(sigma: &Matrix, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<f64> {
    if s.contains(&i) || s.contains(&j) {
        return Err(Error::Config(format!(
            "conditioning set must not contain the queried nodes {i}, {j}"
        )));
    }
    if s.is_empty() {
        return Ok(sigma.get(i, j));
    }
    let idx: Vec<usize> = s.iter().cloned().collect();
    let k = idx.len();
    let sigma_ss = Matrix::from_fn(k, k, |r, c| sigma.get(idx[r], idx[c]));
    let cond = condition_number(&sigma_ss);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned {
            condition: cond,
            context: format!("Σ over conditioning set {idx:?}"),
        });
    }
    let sigma_si = Matrix::from_fn(k, 1, |r, _| sigma.get(idx[r], i));
    let sigma_sj = Matrix::from_fn(k, 1, |r, _| sigma.get(idx[r], j));
    let solved = solve(&sigma_ss, &sigma_sj)?;
    let correction = sigma_si.dot(&solved)?;
    Ok(sigma.get(i, j) - correction)
}
