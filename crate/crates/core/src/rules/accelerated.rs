use crate::graph::Matrix;
use crate::hypothesis::LikelihoodModel;
use crate::numeric::{normalize_log_row, weighted_log_sum};

use super::social::geometric_mix;
use super::{BeliefMatrix, UpdateError};

/// State of the one-step-memory rule: current and previous beliefs, the
/// signals that produced the current beliefs, and the momentum `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceleratedState {
    current: BeliefMatrix,
    previous: BeliefMatrix,
    previous_signals: Option<Vec<usize>>,
    sigma: f64,
}

impl AcceleratedState {
    /// Starts with `μ₋₁ = μ₀` and no previous signal: the log-likelihood
    /// term of the memory is zero on the first step.
    pub fn new(initial: BeliefMatrix, sigma: f64) -> Result<Self, UpdateError> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(UpdateError::InvalidSigma(sigma));
        }
        Ok(Self {
            previous: initial.clone(),
            current: initial,
            previous_signals: None,
            sigma,
        })
    }

    /// Supplies the signals `s₀` that the first step's memory term uses.
    pub fn with_previous_signals(mut self, signals: Vec<usize>) -> Self {
        self.previous_signals = Some(signals);
        self
    }

    pub fn beliefs(&self) -> &BeliefMatrix {
        &self.current
    }

    pub fn previous_beliefs(&self) -> &BeliefMatrix {
        &self.previous
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// One step of the accelerated rule on a static lazy-Metropolis matrix `Ā`:
///
/// `ln μ_i ← (1+σ) Σ_j Ā_ij ln μ_j + ln ℓ_i(s_i|·) − σ Σ_j Ā_ij (ln μ'_j + ln ℓ_j(s'_j|·))`
///
/// where primes denote the previous step. With `σ = 0` the memory term is
/// skipped entirely, so the result is bit-identical to geometric-then-Bayes.
pub fn accelerated_update(
    state: &AcceleratedState,
    signals: &[usize],
    model: &LikelihoodModel,
    a_bar: &Matrix,
) -> Result<AcceleratedState, UpdateError> {
    let cur = &state.current;
    cur.check(signals, model.agents(), model.hypotheses())?;
    let n = cur.agents();
    let m = cur.hypotheses();
    if a_bar.size() != n {
        return Err(UpdateError::Shape(format!(
            "{}×{} weights for {n} agents",
            a_bar.size(),
            a_bar.size()
        )));
    }
    let sigma = state.sigma;

    // ln μ'_j + ln ℓ_j(s'_j|·), the quantity the memory term averages.
    let memory_rows: Option<Vec<Vec<f64>>> = (sigma != 0.0).then(|| {
        (0..n)
            .map(|j| {
                let mut r = state.previous.log_row(j).to_vec();
                if let Some(prev) = &state.previous_signals {
                    for (v, &l) in r.iter_mut().zip(model.agent(j).log_likelihood_of(prev[j])) {
                        *v += l;
                    }
                }
                r
            })
            .collect()
    });

    let mut out = vec![0.0; n * m];
    let mut memory = vec![0.0; m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        geometric_mix(cur, a_bar, i, row);
        let lik = model.agent(i).log_likelihood_of(signals[i]);
        if let Some(rows) = &memory_rows {
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            weighted_log_sum(a_bar.row(i), &refs, &mut memory);
        }
        for t in 0..m {
            let mut v = (1.0 + sigma) * row[t] + lik[t];
            if memory_rows.is_some() && v != f64::NEG_INFINITY {
                if memory[t] == f64::NEG_INFINITY {
                    return Err(UpdateError::DegenerateMemory {
                        agent: i,
                        hypothesis: t,
                    });
                }
                v -= sigma * memory[t];
            }
            row[t] = v;
        }
        if !normalize_log_row(row) {
            return Err(UpdateError::ZeroNormalizer {
                agent: i,
                signal: signals[i],
            });
        }
    }
    Ok(AcceleratedState {
        previous: cur.clone(),
        current: BeliefMatrix::from_raw(n, m, out),
        previous_signals: Some(signals.to_vec()),
        sigma,
    })
}
