//! Belief update rules.
//!
//! Every rule is a pure step function from the current state, one signal per
//! agent and the mixing weights (or graph) to the next state. Beliefs are
//! kept as normalized log-masses so that exponentially decaying hypotheses
//! never underflow; a mass of exactly zero is `-inf` and stays there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypothesis::{DistributionVector, HypothesisError};
use crate::numeric::normalize_log_row;

mod accelerated;
mod dual_averaging;
mod push_sum;
mod single;
mod social;

pub use accelerated::{accelerated_update, AcceleratedState};
pub use dual_averaging::{dual_averaging_closed_form, gossip_dual_averaging_step, DualAveragingState, StepSizes};
pub use push_sum::{push_sum_update, PushSumState};
pub use single::{bayes_update, reaction_update};
pub use social::{
    bayes_then_geometric, degroot_social_update, geometric_then_bayes, independent_bayes, independent_reaction,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpdateError {
    #[error("agent {agent}: signal {signal} has zero probability under every hypothesis with positive belief")]
    ZeroNormalizer { agent: usize, signal: usize },
    #[error("reaction coefficient {0} exceeds 1")]
    InvalidReaction(f64),
    #[error(
        "over-reaction (gamma = {gamma}) drives hypothesis {hypothesis} of agent {agent} to negative mass {value}"
    )]
    OverReactionInfeasible {
        agent: usize,
        hypothesis: usize,
        gamma: f64,
        value: f64,
    },
    #[error("momentum sigma = {0} outside [0, 1)")]
    InvalidSigma(f64),
    #[error(
        "agent {agent}: previous-step memory assigns zero mass to hypothesis {hypothesis} that is still supported"
    )]
    DegenerateMemory { agent: usize, hypothesis: usize },
    #[error("activated pair ({0}, {1}) is not an edge of the gossip graph")]
    NotAnEdge(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
}

/// `n × m` matrix of beliefs stored as normalized log-masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefMatrix {
    agents: usize,
    hypotheses: usize,
    log: Vec<f64>,
}

impl BeliefMatrix {
    pub fn uniform(agents: usize, hypotheses: usize) -> Self {
        let v = -(hypotheses as f64).ln();
        Self {
            agents,
            hypotheses,
            log: vec![v; agents * hypotheses],
        }
    }

    /// Rows must be probability vectors of equal length.
    pub fn from_probabilities(rows: Vec<Vec<f64>>) -> Result<Self, UpdateError> {
        let rows = rows
            .into_iter()
            .map(DistributionVector::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_distributions(&rows)
    }

    pub fn from_distributions(rows: &[DistributionVector]) -> Result<Self, UpdateError> {
        let m = rows.first().map(DistributionVector::len).unwrap_or(0);
        if rows.is_empty() || m == 0 {
            return Err(UpdateError::Shape(
                "belief matrix needs at least one agent and hypothesis".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(UpdateError::Shape("belief rows have different lengths".into()));
        }
        let mut log = Vec::with_capacity(rows.len() * m);
        for r in rows {
            log.extend(r.as_slice().iter().map(|p| p.ln()));
        }
        let mut b = Self {
            agents: rows.len(),
            hypotheses: m,
            log,
        };
        for i in 0..b.agents {
            normalize_log_row(b.log_row_mut(i));
        }
        Ok(b)
    }

    /// Unnormalized log rows; each is shifted to exponentiate to a
    /// probability vector.
    pub fn from_log_rows(rows: Vec<Vec<f64>>) -> Result<Self, UpdateError> {
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(UpdateError::Shape("log rows must be non-empty and rectangular".into()));
        }
        let agents = rows.len();
        let mut b = Self {
            agents,
            hypotheses: m,
            log: rows.into_iter().flatten().collect(),
        };
        for i in 0..agents {
            if b.log_row(i).iter().any(|v| v.is_nan() || *v == f64::INFINITY) || !normalize_log_row(b.log_row_mut(i)) {
                return Err(UpdateError::Shape(format!("log row {i} has no finite mass")));
            }
        }
        Ok(b)
    }

    pub(crate) fn from_raw(agents: usize, hypotheses: usize, log: Vec<f64>) -> Self {
        debug_assert_eq!(log.len(), agents * hypotheses);
        Self {
            agents,
            hypotheses,
            log,
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn log_row(&self, i: usize) -> &[f64] {
        &self.log[i * self.hypotheses..(i + 1) * self.hypotheses]
    }

    pub(crate) fn log_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.log[i * self.hypotheses..(i + 1) * self.hypotheses]
    }

    pub fn log_belief(&self, i: usize, theta: usize) -> f64 {
        self.log[i * self.hypotheses + theta]
    }

    pub fn belief(&self, i: usize, theta: usize) -> f64 {
        self.log_belief(i, theta).exp()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.log_row(i).iter().map(|v| v.exp()).collect()
    }

    pub fn to_probabilities(&self) -> Vec<Vec<f64>> {
        (0..self.agents).map(|i| self.row(i)).collect()
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log
    }

    fn check(&self, signals: &[usize], model_agents: usize, model_hypotheses: usize) -> Result<(), UpdateError> {
        if self.agents != model_agents || self.hypotheses != model_hypotheses {
            return Err(UpdateError::Shape(format!(
                "beliefs are {}×{}, model is {}×{}",
                self.agents, self.hypotheses, model_agents, model_hypotheses
            )));
        }
        if signals.len() != self.agents {
            return Err(UpdateError::Shape(format!(
                "{} signals for {} agents",
                signals.len(),
                self.agents
            )));
        }
        Ok(())
    }
}

/// Adds `ln ℓ(s|·)` to a log row and renormalizes.
pub(crate) fn bayes_log(
    row: &mut [f64],
    log_likelihood: &[f64],
    agent: usize,
    signal: usize,
) -> Result<(), UpdateError> {
    for (v, &l) in row.iter_mut().zip(log_likelihood) {
        *v += l;
    }
    if normalize_log_row(row) {
        Ok(())
    } else {
        Err(UpdateError::ZeroNormalizer { agent, signal })
    }
}
