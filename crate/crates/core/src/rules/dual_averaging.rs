use serde::{Deserialize, Serialize};

use crate::graph::{Graph, Matrix};
use crate::hypothesis::LikelihoodModel;
use crate::numeric::normalize_log_row;

use super::{BeliefMatrix, UpdateError};

/// Non-increasing step sizes `α_k` of dual averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum StepSizes {
    /// `α_k = c`.
    Constant(f64),
    /// `α_k = c / √(k+1)`.
    InverseSqrt(f64),
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes::Constant(1.0)
    }
}

impl StepSizes {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            StepSizes::Constant(c) => c,
            StepSizes::InverseSqrt(c) => c / ((k + 1) as f64).sqrt(),
        }
    }
}

/// Accumulated log-likelihood gradients `z_i` per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveragingState {
    z: Vec<f64>,
    initial: BeliefMatrix,
    steps: usize,
    step_sizes: StepSizes,
}

impl DualAveragingState {
    /// `z₀ = 0` for every agent.
    pub fn new(initial: BeliefMatrix, step_sizes: StepSizes) -> Self {
        let z = vec![0.0; initial.agents() * initial.hypotheses()];
        Self {
            z,
            initial,
            steps: 0,
            step_sizes,
        }
    }

    pub fn accumulator(&self, i: usize) -> &[f64] {
        let m = self.initial.hypotheses();
        &self.z[i * m..(i + 1) * m]
    }

    /// A step in which no pair communicates.
    pub(crate) fn idle(mut self) -> Self {
        self.steps += 1;
        self
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// KL-proximal closed form `μ_i ∝ μ₀_i · exp(α z_i)`.
    pub fn beliefs(&self) -> BeliefMatrix {
        let alpha = self.step_sizes.at(self.steps.saturating_sub(1));
        recover(&self.initial, &self.z, alpha)
    }
}

fn recover(initial: &BeliefMatrix, z: &[f64], alpha: f64) -> BeliefMatrix {
    let n = initial.agents();
    let m = initial.hypotheses();
    let mut log: Vec<f64> = initial
        .log_values()
        .iter()
        .zip(z)
        .map(|(&l, &zv)| l + alpha * zv)
        .collect();
    for i in 0..n {
        normalize_log_row(&mut log[i * m..(i + 1) * m]);
    }
    BeliefMatrix::from_raw(n, m, log)
}

/// One gossip exchange on edge `{i, j}`: both agents replace their
/// accumulators by the pair average and add their own fresh gradient
/// `ln ℓ(s|·)`. Nobody else changes.
pub fn gossip_dual_averaging_step(
    state: &DualAveragingState,
    pair: (usize, usize),
    signals: [usize; 2],
    model: &LikelihoodModel,
    g: &Graph,
) -> Result<DualAveragingState, UpdateError> {
    let (i, j) = pair;
    if i == j || !g.has_edge(i, j) || !g.has_edge(j, i) {
        return Err(UpdateError::NotAnEdge(i, j));
    }
    let m = state.initial.hypotheses();
    if model.hypotheses() != m || model.agents() != state.initial.agents() {
        return Err(UpdateError::Shape(
            "model does not match the dual-averaging state".into(),
        ));
    }
    let mut next = state.clone();
    let gi = model.agent(i).log_likelihood_of(signals[0]);
    let gj = model.agent(j).log_likelihood_of(signals[1]);
    for t in 0..m {
        let avg = 0.5 * (state.z[i * m + t] + state.z[j * m + t]);
        next.z[i * m + t] = avg + gi[t];
        next.z[j * m + t] = avg + gj[t];
    }
    next.steps += 1;
    Ok(next)
}

/// Gossip averaging matrix `I − (e_i − e_j)(e_i − e_j)'/2`.
fn gossip_matrix(n: usize, (i, j): (usize, usize)) -> Matrix {
    let mut a = Matrix::identity(n);
    a.set(i, i, 0.5);
    a.set(j, j, 0.5);
    a.set(i, j, 0.5);
    a.set(j, i, 0.5);
    a
}

/// Beliefs after `k` gossip exchanges from the explicit product formula
///
/// `z_k^i = Σ_{τ<k} Σ_j [A_{k−1} ⋯ A_{τ+1}]_ij ln ℓ_j(s_τ^j|·)`,
///
/// where only the two agents activated at step `τ` contribute a gradient.
/// `signal_history[τ][a]` is agent `a`'s signal at step `τ`.
pub fn dual_averaging_closed_form(
    initial: &BeliefMatrix,
    signal_history: &[Vec<usize>],
    activations: &[(usize, usize)],
    model: &LikelihoodModel,
    k: usize,
    step_sizes: StepSizes,
) -> BeliefMatrix {
    let n = initial.agents();
    let m = initial.hypotheses();
    let mut z = vec![0.0; n * m];
    let mut product = Matrix::identity(n);
    for tau in (0..k).rev() {
        let (a, b) = activations[tau];
        for src in [a, b] {
            let grad = model.agent(src).log_likelihood_of(signal_history[tau][src]);
            for dst in 0..n {
                let w = product.get(dst, src);
                if w == 0.0 {
                    continue;
                }
                for t in 0..m {
                    z[dst * m + t] += w * grad[t];
                }
            }
        }
        product = product.mul(&gossip_matrix(n, (a, b)));
    }
    if k == 0 {
        return initial.clone();
    }
    recover(initial, &z, step_sizes.at(k - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::total_variation;
    use crate::rules::independent_bayes;

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

    #[test]
    fn first_exchange_adds_own_gradient() {
        let g = Graph::undirected(2, [(0, 1)]).unwrap();
        let s = DualAveragingState::new(BeliefMatrix::uniform(2, 2), StepSizes::default());
        let next = gossip_dual_averaging_step(&s, (0, 1), [0, 0], &model(), &g).unwrap();
        let b = next.beliefs();
        assert!((b.belief(0, 0) - 0.8).abs() < 1e-12);
        assert!((b.belief(1, 0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_agent_closed_form_is_cumulative_bayes() {
        let m = LikelihoodModel::from_tables(vec![vec![vec![0.8, 0.2], vec![0.3, 0.7]]], vec![vec![0.5, 0.5]]).unwrap();
        let history = vec![vec![0], vec![1], vec![0], vec![0]];
        // a lone agent "pairs" with itself in the formula: both terms are its own
        let init = BeliefMatrix::uniform(1, 2);
        let mut bayes = init.clone();
        for s in &history {
            bayes = independent_bayes(&bayes, s, &m).unwrap();
        }
        let mut z = vec![0.0; 2];
        for s in &history {
            for (t, v) in z.iter_mut().enumerate() {
                *v += m.agent(0).log_likelihood_of(s[0])[t];
            }
        }
        let closed = recover(&init, &z, 1.0);
        assert!(total_variation(&closed.row(0), &bayes.row(0)) < 1e-14);
    }

    #[test]
    fn equal_accumulators_only_add_gradients() {
        let g = Graph::undirected(2, [(0, 1)]).unwrap();
        let mut s = DualAveragingState::new(BeliefMatrix::uniform(2, 2), StepSizes::default());
        s.z = vec![0.3, -0.1, 0.3, -0.1];
        let next = gossip_dual_averaging_step(&s, (0, 1), [1, 0], &model(), &g).unwrap();
        let g0 = model().agent(0).log_likelihood_of(1).to_vec();
        assert!((next.accumulator(0)[0] - (0.3 + g0[0])).abs() < 1e-15);
    }

    #[test]
    fn closed_form_at_zero_is_initial() {
        let init = BeliefMatrix::from_probabilities(vec![vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        assert_eq!(
            dual_averaging_closed_form(&init, &[], &[], &model(), 0, StepSizes::default()),
            init
        );
    }

    #[test]
    fn closed_form_matches_iteration() {
        let g = Graph::complete(2);
        let init = BeliefMatrix::uniform(2, 2);
        let mut s = DualAveragingState::new(init.clone(), StepSizes::default());
        let history: Vec<Vec<usize>> = (0..12).map(|k| vec![k % 2, (k / 3) % 2]).collect();
        let acts = vec![(0, 1); 12];
        for (k, sig) in history.iter().enumerate() {
            s = gossip_dual_averaging_step(&s, (0, 1), [sig[0], sig[1]], &model(), &g).unwrap();
            let closed = dual_averaging_closed_form(&init, &history, &acts, &model(), k + 1, StepSizes::default());
            for i in 0..2 {
                assert!(total_variation(&closed.row(i), &s.beliefs().row(i)) < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_edges() {
        let g = Graph::empty(2, false);
        let s = DualAveragingState::new(BeliefMatrix::uniform(2, 2), StepSizes::default());
        assert_eq!(
            gossip_dual_averaging_step(&s, (0, 1), [0, 0], &model(), &g),
            Err(UpdateError::NotAnEdge(0, 1))
        );
    }

    #[test]
    fn step_sizes() {
        assert_eq!(StepSizes::Constant(1.0).at(10), 1.0);
        assert_eq!(StepSizes::InverseSqrt(2.0).at(3), 1.0);
    }
}
