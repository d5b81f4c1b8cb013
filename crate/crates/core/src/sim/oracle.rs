use thiserror::Error;

use crate::hypothesis::{DistributionVector, LikelihoodModel};
use crate::numeric::{normalize_log_row, total_variation};
use crate::rules::BeliefMatrix;

const MAX_ITERATIONS: usize = 100_000;
const TV_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("no hypothesis has finite objective")]
    Infeasible,
    #[error("weights row has {found} entries for {expected} agents")]
    Shape { expected: usize, found: usize },
    #[error("no convergence after {iterations} iterations (last change {change:e})")]
    NotConverged { iterations: usize, change: f64 },
}

/// Solves
///
/// `min_{π ∈ Δ} E_π[−ln ℓ_i(s|·)] + Σ_j w_j D_KL(π ‖ μ_j)`
///
/// by entropic mirror descent (exponentiated gradient) with step
/// `0.5 / Σ w_j`, started from the uniform distribution on the hypotheses
/// where the objective is finite, until successive iterates differ by less
/// than `1e-10` in total variation.
pub fn mirror_descent_oracle(
    beliefs: &BeliefMatrix,
    agent: usize,
    signal: usize,
    weights: &[f64],
    model: &LikelihoodModel,
) -> Result<DistributionVector, OracleError> {
    let n = beliefs.agents();
    let m = beliefs.hypotheses();
    if weights.len() != n {
        return Err(OracleError::Shape {
            expected: n,
            found: weights.len(),
        });
    }
    let loglik = model.agent(agent).log_likelihood_of(signal);
    let feasible: Vec<bool> = (0..m)
        .map(|t| {
            loglik[t] > f64::NEG_INFINITY
                && (0..n).all(|j| weights[j] == 0.0 || beliefs.log_belief(j, t) > f64::NEG_INFINITY)
        })
        .collect();
    let count = feasible.iter().filter(|&&f| f).count();
    if count == 0 {
        return Err(OracleError::Infeasible);
    }
    let total: f64 = weights.iter().sum();
    let step = 0.5 / total;

    let mut log_pi: Vec<f64> = feasible
        .iter()
        .map(|&f| if f { -(count as f64).ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut pi: Vec<f64> = log_pi.iter().map(|v| v.exp()).collect();
    let mut change = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        for t in 0..m {
            if !feasible[t] {
                continue;
            }
            // ∂/∂π(θ) of the objective, up to a constant shared by all θ
            let mut grad = -loglik[t];
            for (j, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    grad += w * (log_pi[t] - beliefs.log_belief(j, t));
                }
            }
            log_pi[t] -= step * grad;
        }
        normalize_log_row(&mut log_pi);
        let next: Vec<f64> = log_pi.iter().map(|v| v.exp()).collect();
        change = total_variation(&pi, &next);
        pi = next;
        if change < TV_TOLERANCE {
            let s: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= s);
            return Ok(DistributionVector::new(pi).expect("normalized"));
        }
    }
    Err(OracleError::NotConverged {
        iterations: MAX_ITERATIONS,
        change,
    })
}
