use crate::hypothesis::{AgentLikelihoods, DistributionVector};
use crate::numeric::{log_sum_exp, normalize_log_row};

use super::{bayes_log, UpdateError};

pub(crate) fn to_distribution(log_row: &[f64]) -> Result<DistributionVector, UpdateError> {
    let mut v: Vec<f64> = log_row.iter().map(|l| l.exp()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
    Ok(DistributionVector::new(v)?)
}

fn log_of(d: &DistributionVector) -> Vec<f64> {
    d.as_slice().iter().map(|p| p.ln()).collect()
}

fn check_len(prior: &DistributionVector, likelihoods: &AgentLikelihoods, signal: usize) -> Result<(), UpdateError> {
    if prior.len() != likelihoods.hypotheses() {
        return Err(UpdateError::Shape(format!(
            "prior over {} hypotheses, likelihood family over {}",
            prior.len(),
            likelihoods.hypotheses()
        )));
    }
    if signal >= likelihoods.signals() {
        return Err(UpdateError::Shape(format!("signal {signal} out of range")));
    }
    Ok(())
}

/// Bayes' rule: posterior `∝ prior(θ) · ℓ(s|θ)`.
pub fn bayes_update(
    prior: &DistributionVector,
    signal: usize,
    likelihoods: &AgentLikelihoods,
) -> Result<DistributionVector, UpdateError> {
    check_len(prior, likelihoods, signal)?;
    let mut row = log_of(prior);
    bayes_log(&mut row, likelihoods.log_likelihood_of(signal), 0, signal)?;
    to_distribution(&row)
}

/// Log-domain `(1 − γ)·BU(prior; s) + γ·prior` for one agent.
pub(crate) fn reaction_log(
    prior: &[f64],
    log_likelihood: &[f64],
    gamma: f64,
    agent: usize,
    signal: usize,
) -> Result<Vec<f64>, UpdateError> {
    if gamma > 1.0 || gamma.is_nan() {
        return Err(UpdateError::InvalidReaction(gamma));
    }
    let mut posterior = prior.to_vec();
    bayes_log(&mut posterior, log_likelihood, agent, signal)?;
    let mut out = vec![0.0; prior.len()];
    if gamma >= 0.0 {
        let lw_post = (1.0 - gamma).ln();
        let lw_prior = gamma.ln();
        for (t, o) in out.iter_mut().enumerate() {
            let mut terms = [f64::NEG_INFINITY; 2];
            if gamma < 1.0 {
                terms[0] = lw_post + posterior[t];
            }
            if gamma > 0.0 {
                terms[1] = lw_prior + prior[t];
            }
            *o = log_sum_exp(&terms);
        }
    } else {
        // Affine extrapolation; negative results are infeasible, never clamped.
        for (t, o) in out.iter_mut().enumerate() {
            let b = posterior[t].exp();
            let v = b + gamma * (prior[t].exp() - b);
            if v < 0.0 {
                return Err(UpdateError::OverReactionInfeasible {
                    agent,
                    hypothesis: t,
                    gamma,
                    value: v,
                });
            }
            *o = v.ln();
        }
    }
    if !normalize_log_row(&mut out) {
        return Err(UpdateError::ZeroNormalizer { agent, signal });
    }
    Ok(out)
}

/// Under/over-reaction: `(1 − γ)·BU(prior; s) + γ·prior` with `γ ≤ 1`.
pub fn reaction_update(
    prior: &DistributionVector,
    signal: usize,
    likelihoods: &AgentLikelihoods,
    gamma: f64,
) -> Result<DistributionVector, UpdateError> {
    check_len(prior, likelihoods, signal)?;
    let row = reaction_log(&log_of(prior), likelihoods.log_likelihood_of(signal), gamma, 0, signal)?;
    to_distribution(&row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DistributionVector {
        DistributionVector::new(v.to_vec()).unwrap()
    }

    /// Two hypotheses, two signals; signal 0 has likelihood `l0` per hypothesis.
    fn family(l0: [f64; 2]) -> AgentLikelihoods {
        AgentLikelihoods::new(vec![vec![l0[0], 1.0 - l0[0]], vec![l0[1], 1.0 - l0[1]]]).unwrap()
    }

    fn close(a: &DistributionVector, b: &[f64]) {
        for (x, y) in a.as_slice().iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{:?} vs {:?}", a.as_slice(), b);
        }
    }

    #[test]
    fn bayes_examples() {
        let lik = family([0.8, 0.2]);
        close(&bayes_update(&dv(&[0.5, 0.5]), 0, &lik).unwrap(), &[0.8, 0.2]);
        close(&bayes_update(&dv(&[1.0, 0.0]), 0, &lik).unwrap(), &[1.0, 0.0]);
        let flat = family([0.5, 0.5]);
        close(&bayes_update(&dv(&[0.25, 0.75]), 0, &flat).unwrap(), &[0.25, 0.75]);
    }

    #[test]
    fn bayes_zero_normalizer() {
        let lik = family([0.0, 0.5]);
        assert_eq!(
            bayes_update(&dv(&[1.0, 0.0]), 0, &lik),
            Err(UpdateError::ZeroNormalizer { agent: 0, signal: 0 })
        );
    }

    #[test]
    fn reaction_examples() {
        let lik = family([0.8, 0.2]);
        let prior = dv(&[0.5, 0.5]);
        close(&reaction_update(&prior, 0, &lik, 0.0).unwrap(), &[0.8, 0.2]);
        close(&reaction_update(&prior, 0, &lik, 1.0).unwrap(), &[0.5, 0.5]);
        close(&reaction_update(&prior, 0, &lik, 0.5).unwrap(), &[0.65, 0.35]);
    }

    #[test]
    fn over_reaction() {
        let lik = family([0.8, 0.2]);
        let prior = dv(&[0.5, 0.5]);
        // -0.5: 1.5·(0.8, 0.2) − 0.5·(0.5, 0.5) = (0.95, 0.05)
        close(&reaction_update(&prior, 0, &lik, -0.5).unwrap(), &[0.95, 0.05]);
        assert!(matches!(
            reaction_update(&prior, 0, &lik, -1.0),
            Err(UpdateError::OverReactionInfeasible { hypothesis: 1, .. })
        ));
        assert_eq!(
            reaction_update(&prior, 0, &lik, 1.5),
            Err(UpdateError::InvalidReaction(1.5))
        );
    }
}
