//! Hypothesis spaces, per-agent likelihood models and the learning objective.
//!
//! The objective of the network is `F(θ) = Σ_i D_KL(f_i ‖ ℓ_i(·|θ))`; the
//! optimal set `Θ*` collects its minimizers. Every logarithm is natural.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used to decide whether two objective values tie.
pub const DEFAULT_OPTIMAL_TOLERANCE: f64 = 1e-9;

/// Probability vectors must sum to one within this bound.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisError {
    #[error("hypothesis space must contain at least one hypothesis")]
    EmptyHypotheses,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("agent {agent} has no signals")]
    EmptySignals { agent: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite probability at {0}")]
    NonFinite(String),
    #[error("not a probability vector: {0}")]
    NotDistribution(String),
    #[error("support sizes differ ({left} vs {right})")]
    SupportMismatch { left: usize, right: usize },
    #[error("KL divergence is infinite: p({index}) > 0 but q({index}) = 0")]
    DivergenceInfinite { index: usize },
}

/// A validated probability vector over a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DistributionVector(Vec<f64>);

impl DistributionVector {
    pub fn new(masses: Vec<f64>) -> Result<Self, HypothesisError> {
        if masses.is_empty() {
            return Err(HypothesisError::NotDistribution("empty support".into()));
        }
        if let Some(i) = masses.iter().position(|p| !p.is_finite()) {
            return Err(HypothesisError::NonFinite(format!("index {i}")));
        }
        if let Some(i) = masses.iter().position(|&p| p < 0.0) {
            return Err(HypothesisError::NotDistribution(format!(
                "negative mass {} at index {i}",
                masses[i]
            )));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(HypothesisError::NotDistribution(format!("sums to {sum}")));
        }
        Ok(Self(masses))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    /// Point mass on `index`.
    pub fn vertex(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for DistributionVector {
    type Error = HypothesisError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<DistributionVector> for Vec<f64> {
    fn from(d: DistributionVector) -> Self {
        d.0
    }
}

impl std::ops::Index<usize> for DistributionVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_unique(labels: &[String]) -> Result<(), HypothesisError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(HypothesisError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Ordered hypothesis labels; indices `0..m` are the canonical handles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    labels: Vec<String>,
}

impl HypothesisSpace {
    pub fn new(labels: Vec<String>) -> Result<Self, HypothesisError> {
        if labels.is_empty() {
            return Err(HypothesisError::EmptyHypotheses);
        }
        check_unique(&labels)?;
        Ok(Self { labels })
    }

    /// Labels `h0, h1, ...`.
    pub fn indexed(m: usize) -> Result<Self, HypothesisError> {
        Self::new((0..m).map(|i| format!("h{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Per-agent signal alphabets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSpace {
    per_agent: Vec<Vec<String>>,
}

impl SignalSpace {
    pub fn new(per_agent: Vec<Vec<String>>) -> Result<Self, HypothesisError> {
        for (agent, labels) in per_agent.iter().enumerate() {
            if labels.is_empty() {
                return Err(HypothesisError::EmptySignals { agent });
            }
            check_unique(labels)?;
        }
        Ok(Self { per_agent })
    }

    /// Signals `0, 1, ...` with the given alphabet size per agent.
    pub fn indexed(sizes: &[usize]) -> Result<Self, HypothesisError> {
        Self::new(sizes.iter().map(|&s| (0..s).map(|i| i.to_string()).collect()).collect())
    }

    pub fn agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn size(&self, agent: usize) -> usize {
        self.per_agent[agent].len()
    }

    pub fn labels(&self, agent: usize) -> &[String] {
        &self.per_agent[agent]
    }
}

/// The likelihood family `{ℓ(·|θ)}` of one agent: one row per hypothesis,
/// one column per signal. Log-likelihoods are cached by signal so update
/// rules can read `ln ℓ(s|·)` as a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLikelihoods {
    rows: Vec<Vec<f64>>,
    log_by_signal: Vec<Vec<f64>>,
}

impl AgentLikelihoods {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, HypothesisError> {
        let signals = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() {
            return Err(HypothesisError::EmptyHypotheses);
        }
        if signals == 0 {
            return Err(HypothesisError::Shape("likelihood rows are empty".into()));
        }
        for (theta, row) in rows.iter().enumerate() {
            if row.len() != signals {
                return Err(HypothesisError::Shape(format!(
                    "hypothesis {theta} has {} signal entries, expected {signals}",
                    row.len()
                )));
            }
            if let Some(s) = row.iter().position(|p| !p.is_finite()) {
                return Err(HypothesisError::NonFinite(format!("hypothesis {theta}, signal {s}")));
            }
        }
        let log_by_signal = (0..signals).map(|s| rows.iter().map(|r| r[s].ln()).collect()).collect();
        Ok(Self { rows, log_by_signal })
    }

    pub fn hypotheses(&self) -> usize {
        self.rows.len()
    }

    pub fn signals(&self) -> usize {
        self.log_by_signal.len()
    }

    /// `ℓ(·|θ)` over signals.
    pub fn row(&self, theta: usize) -> &[f64] {
        &self.rows[theta]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `ℓ(s|θ)` for every θ.
    pub fn likelihood_of(&self, signal: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[signal]).collect()
    }

    /// `ln ℓ(s|θ)` for every θ.
    pub fn log_likelihood_of(&self, signal: usize) -> &[f64] {
        &self.log_by_signal[signal]
    }
}

/// Ground truth of an experiment: every agent's likelihood family together
/// with the distribution `f_i` its signals are actually drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    hypotheses: HypothesisSpace,
    signals: SignalSpace,
    agents: Vec<AgentLikelihoods>,
    truth: Vec<Vec<f64>>,
    declared_alpha: Option<f64>,
}

impl LikelihoodModel {
    /// Builds a model after shape checks only; probabilistic invariants are
    /// reported by [`validate_model`].
    pub fn new(
        hypotheses: HypothesisSpace,
        signals: SignalSpace,
        likelihoods: Vec<Vec<Vec<f64>>>,
        truth: Vec<Vec<f64>>,
    ) -> Result<Self, HypothesisError> {
        let n = likelihoods.len();
        if n == 0 {
            return Err(HypothesisError::Shape("model has no agents".into()));
        }
        if truth.len() != n || signals.agents() != n {
            return Err(HypothesisError::Shape(format!(
                "{n} likelihood families, {} truth vectors, {} signal alphabets",
                truth.len(),
                signals.agents()
            )));
        }
        let m = hypotheses.len();
        let mut agents = Vec::with_capacity(n);
        for (i, rows) in likelihoods.into_iter().enumerate() {
            let a = AgentLikelihoods::new(rows)?;
            if a.hypotheses() != m {
                return Err(HypothesisError::Shape(format!(
                    "agent {i} has {} likelihood rows, expected {m}",
                    a.hypotheses()
                )));
            }
            if a.signals() != signals.size(i) || truth[i].len() != signals.size(i) {
                return Err(HypothesisError::Shape(format!(
                    "agent {i}: signal alphabet has {} entries, likelihood rows {}, truth {}",
                    signals.size(i),
                    a.signals(),
                    truth[i].len()
                )));
            }
            if let Some(s) = truth[i].iter().position(|p| !p.is_finite()) {
                return Err(HypothesisError::NonFinite(format!("truth of agent {i}, signal {s}")));
            }
            agents.push(a);
        }
        Ok(Self {
            hypotheses,
            signals,
            agents,
            truth,
            declared_alpha: None,
        })
    }

    /// Shorthand with indexed labels.
    pub fn from_tables(likelihoods: Vec<Vec<Vec<f64>>>, truth: Vec<Vec<f64>>) -> Result<Self, HypothesisError> {
        let m = likelihoods.first().map(Vec::len).unwrap_or(0);
        let sizes: Vec<usize> = truth.iter().map(Vec::len).collect();
        Self::new(
            HypothesisSpace::indexed(m)?,
            SignalSpace::indexed(&sizes)?,
            likelihoods,
            truth,
        )
    }

    /// Records a user-supplied α; [`validate_model`] checks it against the
    /// model's largest feasible value.
    pub fn with_declared_alpha(mut self, alpha: f64) -> Self {
        self.declared_alpha = Some(alpha);
        self
    }

    pub fn agents(&self) -> usize {
        self.agents.len()
    }

    pub fn hypotheses(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn hypothesis_space(&self) -> &HypothesisSpace {
        &self.hypotheses
    }

    pub fn signal_space(&self) -> &SignalSpace {
        &self.signals
    }

    pub fn agent(&self, i: usize) -> &AgentLikelihoods {
        &self.agents[i]
    }

    pub fn truth(&self, i: usize) -> &[f64] {
        &self.truth[i]
    }

    pub fn declared_alpha(&self) -> Option<f64> {
        self.declared_alpha
    }

    /// Largest α with `ℓ_i(s|θ) ≥ α` wherever `f_i(s) > 0`.
    pub fn computed_alpha(&self) -> f64 {
        let mut alpha = f64::INFINITY;
        for (agent, f) in self.agents.iter().zip(&self.truth) {
            for (s, &fs) in f.iter().enumerate() {
                if fs > 0.0 {
                    for row in agent.rows() {
                        alpha = alpha.min(row[s]);
                    }
                }
            }
        }
        alpha
    }

    /// α used by the theorem constants: the declared value when present,
    /// otherwise the computed one.
    pub fn alpha(&self) -> f64 {
        self.declared_alpha.unwrap_or_else(|| self.computed_alpha())
    }
}

/// `Σ p ln(p/q)` on raw slices; `+inf` on an absolute-continuity violation.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&ps, &qs) in p.iter().zip(q) {
        if ps > 0.0 {
            if qs <= 0.0 {
                return f64::INFINITY;
            }
            acc += ps * (ps / qs).ln();
        }
    }
    acc
}

/// Kullback-Leibler divergence `D_KL(p ‖ q)` in nats, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &DistributionVector, q: &DistributionVector) -> Result<f64, HypothesisError> {
    if p.len() != q.len() {
        return Err(HypothesisError::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if let Some(index) = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .position(|(&a, &b)| a > 0.0 && b <= 0.0)
    {
        return Err(HypothesisError::DivergenceInfinite { index });
    }
    // Rounding can push an identical pair a hair below zero.
    Ok(kl_raw(p.as_slice(), q.as_slice()).max(0.0))
}

/// `F_i(θ) = D_KL(f_i ‖ ℓ_i(·|θ))`.
pub fn agent_objective(model: &LikelihoodModel, agent: usize, theta: usize) -> f64 {
    kl_raw(model.truth(agent), model.agent(agent).row(theta)).max(0.0)
}

/// `F(θ) = Σ_i F_i(θ)`.
pub fn global_objective(model: &LikelihoodModel, theta: usize) -> f64 {
    (0..model.agents()).map(|i| agent_objective(model, i, theta)).sum()
}

/// `F(θ)` for every hypothesis.
pub fn objective_values(model: &LikelihoodModel) -> Vec<f64> {
    (0..model.hypotheses()).map(|t| global_objective(model, t)).collect()
}

/// Indices within `tolerance` of the minimum of `values`.
pub fn near_minimal(values: &[f64], tolerance: f64) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + tolerance)
        .map(|(i, _)| i)
        .collect()
}

/// `Θ* = { θ : F(θ) ≤ min F + tolerance }`.
pub fn optimal_set(model: &LikelihoodModel, tolerance: f64) -> Vec<usize> {
    near_minimal(&objective_values(model), tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelViolation {
    LikelihoodNotNormalized {
        agent: usize,
        hypothesis: usize,
        sum: f64,
    },
    NegativeLikelihood {
        agent: usize,
        hypothesis: usize,
        signal: usize,
        value: f64,
    },
    TruthNotNormalized {
        agent: usize,
        sum: f64,
    },
    NegativeTruth {
        agent: usize,
        signal: usize,
        value: f64,
    },
    /// `ℓ_i(s|θ) = 0` although `f_i(s) > 0`.
    MissingSupport {
        agent: usize,
        hypothesis: usize,
        signal: usize,
    },
    DeclaredAlphaInfeasible {
        declared: f64,
        computed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub violations: Vec<ModelViolation>,
    /// Largest feasible α, the minimum of `ℓ_i(s|θ)` over `f_i(s) > 0`.
    pub alpha: f64,
}

impl ModelReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every probabilistic invariant of the model and returns all
/// violations with their coordinates.
pub fn validate_model(model: &LikelihoodModel) -> ModelReport {
    let mut violations = Vec::new();
    for i in 0..model.agents() {
        let f = model.truth(i);
        let fsum: f64 = f.iter().sum();
        if (fsum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            violations.push(ModelViolation::TruthNotNormalized { agent: i, sum: fsum });
        }
        for (s, &v) in f.iter().enumerate() {
            if v < 0.0 {
                violations.push(ModelViolation::NegativeTruth {
                    agent: i,
                    signal: s,
                    value: v,
                });
            }
        }
        for (theta, row) in model.agent(i).rows().iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                violations.push(ModelViolation::LikelihoodNotNormalized {
                    agent: i,
                    hypothesis: theta,
                    sum,
                });
            }
            for (s, &v) in row.iter().enumerate() {
                if v < 0.0 {
                    violations.push(ModelViolation::NegativeLikelihood {
                        agent: i,
                        hypothesis: theta,
                        signal: s,
                        value: v,
                    });
                }
                if f[s] > 0.0 && v <= 0.0 {
                    violations.push(ModelViolation::MissingSupport {
                        agent: i,
                        hypothesis: theta,
                        signal: s,
                    });
                }
            }
        }
    }
    let alpha = model.computed_alpha();
    if let Some(declared) = model.declared_alpha() {
        if !(declared > 0.0 && declared <= alpha) {
            violations.push(ModelViolation::DeclaredAlphaInfeasible {
                declared,
                computed: alpha,
            });
        }
    }
    ModelReport { violations, alpha }
}
