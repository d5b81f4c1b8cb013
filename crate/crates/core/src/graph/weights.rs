use serde::{Deserialize, Serialize};

use super::{lcm, Graph, GraphError, GraphSequence, Matrix};

/// Row and column sums must equal one within this bound.
const STOCHASTIC_TOLERANCE: f64 = 1e-10;

/// Metropolis weights: `A_ij = 1 / max(d_i + 1, d_j + 1)` on edges, the
/// diagonal takes the remaining row mass.
pub fn metropolis_weights(g: &Graph) -> Result<Matrix, GraphError> {
    if g.is_directed() {
        return Err(GraphError::Directed);
    }
    let n = g.node_count();
    let mut a = Matrix::zeros(n);
    for (i, j) in g.edges() {
        let d = (g.degree(i) + 1).max(g.degree(j) + 1);
        a.set(i, j, 1.0 / d as f64);
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j)).sum();
        a.set(i, i, 1.0 - off);
    }
    Ok(a)
}

/// `½ I + ½ A` with `A` the Metropolis matrix.
pub fn lazy_metropolis_weights(g: &Graph) -> Result<Matrix, GraphError> {
    let mut a = metropolis_weights(g)?;
    let n = a.size();
    for i in 0..n {
        for j in 0..n {
            let v = 0.5 * a.get(i, j) + if i == j { 0.5 } else { 0.0 };
            a.set(i, j, v);
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Metropolis,
    LazyMetropolis,
}

/// Periodic weight matrices `A_k = matrices[k mod period]` with a declared
/// floor `η` on positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    matrices: Vec<Matrix>,
    eta: f64,
}

impl WeightSchedule {
    /// Explicit matrices; `η` defaults to their smallest positive entry.
    pub fn explicit(matrices: Vec<Matrix>, eta: Option<f64>) -> Result<Self, GraphError> {
        let first = matrices.first().ok_or(GraphError::EmptySequence)?;
        let n = first.size();
        if let Some(m) = matrices.iter().find(|m| m.size() != n) {
            return Err(GraphError::SizeMismatch {
                expected: n,
                found: m.size(),
            });
        }
        let eta = eta.unwrap_or_else(|| min_positive(&matrices));
        Ok(Self { matrices, eta })
    }

    /// One matrix per graph of the sequence.
    pub fn from_graphs(gs: &GraphSequence, scheme: WeightScheme, eta: Option<f64>) -> Result<Self, GraphError> {
        let matrices = gs
            .graphs()
            .iter()
            .map(|g| match scheme {
                WeightScheme::Metropolis => metropolis_weights(g),
                WeightScheme::LazyMetropolis => lazy_metropolis_weights(g),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::explicit(matrices, eta)
    }

    pub fn matrix_at(&self, k: usize) -> &Matrix {
        &self.matrices[k % self.matrices.len()]
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn period(&self) -> usize {
        self.matrices.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn node_count(&self) -> usize {
        self.matrices[0].size()
    }
}

fn min_positive(ms: &[Matrix]) -> f64 {
    ms.iter().filter_map(Matrix::min_positive).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightViolationKind {
    RowSum {
        sum: f64,
    },
    ColumnSum {
        sum: f64,
    },
    Negative {
        value: f64,
    },
    /// Positive weight on a pair that is not an edge of `𝒢_k`.
    NonConforming {
        value: f64,
    },
    NonPositiveDiagonal {
        value: f64,
    },
    /// Positive entry below the declared floor `η`.
    BelowFloor {
        value: f64,
        eta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightViolation {
    pub k: usize,
    pub i: Option<usize>,
    pub j: Option<usize>,
    #[serde(flatten)]
    pub kind: WeightViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub violations: Vec<WeightViolation>,
    /// Steps actually inspected; the joint period of graphs and weights
    /// makes later steps repeat earlier ones.
    pub checked_steps: usize,
}

impl WeightReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks stochasticity, graph conformance, positive diagonals and the
/// `η` floor for `k` in `0..horizon`.
pub fn validate_weight_schedule(
    ws: &WeightSchedule,
    gs: &GraphSequence,
    horizon: usize,
    require_doubly: bool,
) -> WeightReport {
    let steps = horizon.min(lcm(ws.period(), gs.period()));
    let eta = ws.eta();
    let mut violations = Vec::new();
    let mut push = |k, i, j, kind| violations.push(WeightViolation { k, i, j, kind });
    for k in 0..steps {
        let a = ws.matrix_at(k);
        let g = gs.graph_at(k);
        let n = a.size();
        if n != g.node_count() {
            push(k, None, None, WeightViolationKind::NonConforming { value: f64::NAN });
            continue;
        }
        for i in 0..n {
            let sum: f64 = a.row(i).iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                push(k, Some(i), None, WeightViolationKind::RowSum { sum });
            }
            if require_doubly {
                let col: f64 = (0..n).map(|r| a.get(r, i)).sum();
                if (col - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    push(k, None, Some(i), WeightViolationKind::ColumnSum { sum: col });
                }
            }
            for j in 0..n {
                let v = a.get(i, j);
                if v < 0.0 {
                    push(k, Some(i), Some(j), WeightViolationKind::Negative { value: v });
                }
                if i == j {
                    if v <= 0.0 {
                        push(
                            k,
                            Some(i),
                            Some(j),
                            WeightViolationKind::NonPositiveDiagonal { value: v },
                        );
                    }
                } else if v > 0.0 && !g.has_edge(j, i) {
                    push(k, Some(i), Some(j), WeightViolationKind::NonConforming { value: v });
                }
                if v > 0.0 && v < eta {
                    push(k, Some(i), Some(j), WeightViolationKind::BelowFloor { value: v, eta });
                }
            }
        }
    }
    WeightReport {
        violations,
        checked_steps: steps,
    }
}
