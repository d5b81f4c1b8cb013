use crate::graph::Matrix;
use crate::hypothesis::LikelihoodModel;
use crate::numeric::{log_sum_exp, normalize_log_row, weighted_log_sum};

use super::single::reaction_log;
use super::{bayes_log, BeliefMatrix, UpdateError};

fn check_weights(beliefs: &BeliefMatrix, a: &Matrix) -> Result<(), UpdateError> {
    if a.size() != beliefs.agents() {
        return Err(UpdateError::Shape(format!(
            "{}×{} weights for {} agents",
            a.size(),
            a.size(),
            beliefs.agents()
        )));
    }
    Ok(())
}

/// Each agent's own Bayesian posterior, as a log matrix.
fn local_posteriors(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
) -> Result<BeliefMatrix, UpdateError> {
    beliefs.check(signals, model.agents(), model.hypotheses())?;
    let mut out = beliefs.clone();
    for (i, &s) in signals.iter().enumerate() {
        bayes_log(out.log_row_mut(i), model.agent(i).log_likelihood_of(s), i, s)?;
    }
    Ok(out)
}

/// Every agent runs Bayes' rule on its own signal, ignoring the network.
pub fn independent_bayes(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
) -> Result<BeliefMatrix, UpdateError> {
    local_posteriors(beliefs, signals, model)
}

/// Every agent applies the under/over-reaction rule with coefficient `γ`.
pub fn independent_reaction(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
    gamma: f64,
) -> Result<BeliefMatrix, UpdateError> {
    beliefs.check(signals, model.agents(), model.hypotheses())?;
    let mut out = beliefs.clone();
    for (i, &s) in signals.iter().enumerate() {
        let row = reaction_log(beliefs.log_row(i), model.agent(i).log_likelihood_of(s), gamma, i, s)?;
        out.log_row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// DeGroot-style mixing: `μ_i ← a_ii·BU(μ_i; s_i) + Σ_{j≠i} a_ij μ_j`,
/// an arithmetic mixture evaluated by log-sum-exp.
pub fn degroot_social_update(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
    a: &Matrix,
) -> Result<BeliefMatrix, UpdateError> {
    check_weights(beliefs, a)?;
    let posterior = local_posteriors(beliefs, signals, model)?;
    let n = beliefs.agents();
    let m = beliefs.hypotheses();
    let mut out = vec![0.0; n * m];
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        for t in 0..m {
            terms.clear();
            for j in 0..n {
                let w = a.get(i, j);
                if w <= 0.0 {
                    continue;
                }
                let src = if j == i {
                    posterior.log_belief(i, t)
                } else {
                    beliefs.log_belief(j, t)
                };
                terms.push(w.ln() + src);
            }
            out[i * m + t] = log_sum_exp(&terms);
        }
        if !normalize_log_row(&mut out[i * m..(i + 1) * m]) {
            return Err(UpdateError::ZeroNormalizer {
                agent: i,
                signal: signals[i],
            });
        }
    }
    Ok(BeliefMatrix::from_raw(n, m, out))
}

/// Weighted geometric mean of rows, unnormalized: `Σ_j A_ij ln x_j`.
pub(crate) fn geometric_mix(rows: &BeliefMatrix, a: &Matrix, i: usize, out: &mut [f64]) {
    let n = rows.agents();
    let refs: Vec<&[f64]> = (0..n).map(|j| rows.log_row(j)).collect();
    weighted_log_sum(a.row(i), &refs, out);
}

/// Local Bayes first, then geometric aggregation:
/// `μ_i ∝ Π_j BU(μ_j; s_j)^{A_ij}`.
pub fn bayes_then_geometric(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
    a: &Matrix,
) -> Result<BeliefMatrix, UpdateError> {
    check_weights(beliefs, a)?;
    let posterior = local_posteriors(beliefs, signals, model)?;
    let n = beliefs.agents();
    let m = beliefs.hypotheses();
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        geometric_mix(&posterior, a, i, row);
        if !normalize_log_row(row) {
            return Err(UpdateError::ZeroNormalizer {
                agent: i,
                signal: signals[i],
            });
        }
    }
    Ok(BeliefMatrix::from_raw(n, m, out))
}

/// Geometric aggregation first, then agent `i`'s own Bayesian update:
/// `μ_i ∝ BU(Π_j μ_j^{A_ij}; s_i)`.
pub fn geometric_then_bayes(
    beliefs: &BeliefMatrix,
    signals: &[usize],
    model: &LikelihoodModel,
    a: &Matrix,
) -> Result<BeliefMatrix, UpdateError> {
    check_weights(beliefs, a)?;
    beliefs.check(signals, model.agents(), model.hypotheses())?;
    let n = beliefs.agents();
    let m = beliefs.hypotheses();
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        geometric_mix(beliefs, a, i, row);
        bayes_log(row, model.agent(i).log_likelihood_of(signals[i]), i, signals[i])?;
    }
    Ok(BeliefMatrix::from_raw(n, m, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two agents, two hypotheses, two signals. Under signal 0 agent 0 has
    /// likelihoods (0.8, 0.2) and agent 1 has (0.4, 0.6).
    fn model() -> LikelihoodModel {
        LikelihoodModel::from_tables(
            vec![
                vec![vec![0.8, 0.2], vec![0.2, 0.8]],
                vec![vec![0.4, 0.6], vec![0.6, 0.4]],
            ],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap()
    }

    fn half() -> Matrix {
        Matrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn assert_rows(b: &BeliefMatrix, expected: &[&[f64]], tol: f64) {
        for (i, row) in expected.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                assert!((b.belief(i, t) - v).abs() < tol, "row {i}: {:?} vs {:?}", b.row(i), row);
            }
        }
    }

    #[test]
    fn degroot_example() {
        let b = BeliefMatrix::uniform(2, 2);
        let out = degroot_social_update(&b, &[0, 0], &model(), &half()).unwrap();
        assert_rows(&out, &[&[0.65, 0.35], &[0.45, 0.55]], 1e-12);
    }

    #[test]
    fn bayes_then_geometric_example() {
        let b = BeliefMatrix::uniform(2, 2);
        let out = bayes_then_geometric(&b, &[0, 0], &model(), &half()).unwrap();
        // (√(0.8·0.4), √(0.2·0.6)) normalized, evaluated at 50 digits
        let expected: &[f64] = &[0.620_204_102_886_728_8, 0.379_795_897_113_271_2];
        assert_rows(&out, &[expected, expected], 1e-12);
    }

    #[test]
    fn geometric_then_bayes_example() {
        let m = LikelihoodModel::from_tables(
            vec![
                vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let b = BeliefMatrix::from_probabilities(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let out = geometric_then_bayes(&b, &[0, 0], &m, &half()).unwrap();
        assert_rows(&out, &[&[0.9, 0.1], &[0.5, 0.5]], 1e-12);
    }

    #[test]
    fn identity_weights_reduce_to_independent_bayes() {
        let b = BeliefMatrix::from_probabilities(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let id = Matrix::identity(2);
        let bayes = independent_bayes(&b, &[1, 0], &model()).unwrap();
        for rule in [degroot_social_update, bayes_then_geometric, geometric_then_bayes] {
            let out = rule(&b, &[1, 0], &model(), &id).unwrap();
            assert_rows(&out, &[&bayes.row(0), &bayes.row(1)], 1e-14);
        }
    }

    #[test]
    fn identical_beliefs_aggregate_to_themselves() {
        let b = BeliefMatrix::from_probabilities(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let out = geometric_then_bayes(&b, &[0, 1], &model(), &half()).unwrap();
        let bayes = independent_bayes(&b, &[0, 1], &model()).unwrap();
        assert_rows(&out, &[&bayes.row(0), &bayes.row(1)], 1e-14);
    }

    #[test]
    fn zero_mass_is_absorbing() {
        let b = BeliefMatrix::from_probabilities(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let out = geometric_then_bayes(&b, &[0, 0], &model(), &half()).unwrap();
        assert_eq!(out.log_belief(0, 1), f64::NEG_INFINITY);
        assert_eq!(out.log_belief(1, 1), f64::NEG_INFINITY);
    }

    #[test]
    fn shape_errors() {
        let b = BeliefMatrix::uniform(2, 2);
        assert!(matches!(
            geometric_then_bayes(&b, &[0], &model(), &half()),
            Err(UpdateError::Shape(_))
        ));
        assert!(matches!(
            bayes_then_geometric(&b, &[0, 0], &model(), &Matrix::identity(3)),
            Err(UpdateError::Shape(_))
        ));
    }
}
