use std::collections::BTreeMap;

use crate::graph::Graph;
use crate::hypothesis::LikelihoodModel;
use crate::numeric::normalize_log_row;

use super::{BeliefMatrix, UpdateError};

/// Beliefs plus the push-sum weights `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PushSumState {
    beliefs: BeliefMatrix,
    y: Vec<f64>,
}

impl PushSumState {
    /// `y₀ = 1` for every agent.
    pub fn new(beliefs: BeliefMatrix) -> Self {
        let y = vec![1.0; beliefs.agents()];
        Self { beliefs, y }
    }

    pub fn beliefs(&self) -> &BeliefMatrix {
        &self.beliefs
    }

    pub fn weights(&self) -> &[f64] {
        &self.y
    }
}

/// One push-sum step on the directed graph `g` (edge `(j, i)`: `j` sends
/// to `i`). Each node also sends to itself, so the out-degree `d_j` counts
/// the self-loop and every node is its own in-neighbour.
///
/// `y_i ← Σ_{j→i} y_j / d_j`,
/// `ln μ_i ← (Σ_{j→i} (y_j/d_j) ln μ_j + ln ℓ_i(s_i|·)) / y_i`, normalized.
pub fn push_sum_update(
    state: &PushSumState,
    signals: &[usize],
    model: &LikelihoodModel,
    g: &Graph,
) -> Result<PushSumState, UpdateError> {
    let cur = &state.beliefs;
    cur.check(signals, model.agents(), model.hypotheses())?;
    let n = cur.agents();
    let m = cur.hypotheses();
    if g.node_count() != n {
        return Err(UpdateError::Shape(format!(
            "graph has {} nodes for {n} agents",
            g.node_count()
        )));
    }
    let degree: Vec<usize> = (0..n).map(|j| g.out_degree(j) + 1).collect();
    let share: Vec<f64> = (0..n).map(|j| state.y[j] / degree[j] as f64).collect();

    let mut y = vec![0.0; n];
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let senders: Vec<usize> = std::iter::once(i).chain(g.in_neighbors(i)).collect();
        // Summing y within equal-degree groups before dividing keeps y = 1
        // exact on regular graphs.
        let mut by_degree: BTreeMap<usize, f64> = BTreeMap::new();
        for &j in &senders {
            *by_degree.entry(degree[j]).or_default() += state.y[j];
        }
        y[i] = by_degree.iter().map(|(&d, &s)| s / d as f64).sum();

        let row = &mut out[i * m..(i + 1) * m];
        let lik = model.agent(i).log_likelihood_of(signals[i]);
        for (t, v) in row.iter_mut().enumerate() {
            let mut acc = lik[t];
            for &j in &senders {
                acc += share[j] * cur.log_belief(j, t);
            }
            *v = acc / y[i];
        }
        if !normalize_log_row(row) {
            return Err(UpdateError::ZeroNormalizer {
                agent: i,
                signal: signals[i],
            });
        }
    }
    Ok(PushSumState {
        beliefs: BeliefMatrix::from_raw(n, m, out),
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::independent_bayes;

    fn model(n: usize) -> LikelihoodModel {
        let rows = vec![vec![0.7, 0.3], vec![0.4, 0.6]];
        LikelihoodModel::from_tables(vec![rows; n], vec![vec![0.7, 0.3]; n]).unwrap()
    }

    #[test]
    fn single_agent_is_bayes() {
        let s = PushSumState::new(BeliefMatrix::uniform(1, 2));
        let next = push_sum_update(&s, &[1], &model(1), &Graph::empty(1, true)).unwrap();
        assert_eq!(next.weights(), &[1.0]);
        let bayes = independent_bayes(&BeliefMatrix::uniform(1, 2), &[1], &model(1)).unwrap();
        assert!((next.beliefs().belief(0, 0) - bayes.belief(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn two_cycle_keeps_unit_weights() {
        let g = Graph::directed_cycle(2);
        let s = PushSumState::new(BeliefMatrix::uniform(2, 2));
        let next = push_sum_update(&s, &[0, 1], &model(2), &g).unwrap();
        assert_eq!(next.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn regular_graphs_keep_unit_weights_exactly() {
        // complete digraph on 6 nodes: every degree is 6 with the self-loop
        let g = Graph::directed(
            6,
            (0..6).flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j))),
        )
        .unwrap();
        let mut s = PushSumState::new(BeliefMatrix::uniform(6, 2));
        for k in 0..50 {
            s = push_sum_update(&s, &[k % 2; 6], &model(6), &g).unwrap();
            assert!(s.weights().iter().all(|&y| y == 1.0));
        }
    }

    #[test]
    fn mass_is_conserved_on_irregular_graphs() {
        let g = Graph::directed(3, [(0, 1), (0, 2), (1, 2), (2, 0)]).unwrap();
        let mut s = PushSumState::new(BeliefMatrix::uniform(3, 2));
        for k in 0..100 {
            s = push_sum_update(&s, &[k % 2, 0, 1], &model(3), &g).unwrap();
            let total: f64 = s.weights().iter().sum();
            assert!((total - 3.0).abs() < 1e-12);
            assert!(s.weights().iter().all(|&y| y > 0.0));
        }
        assert!(s.weights().iter().any(|&y| (y - 1.0).abs() > 1e-3));
    }
}
