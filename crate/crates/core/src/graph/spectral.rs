use crate::hypothesis::DistributionVector;

use super::{Graph, GraphError, Matrix};

const MAX_ITERATIONS: usize = 1_000_000;
const RESIDUAL: f64 = 1e-12;

fn support_graph(a: &Matrix) -> Graph {
    let n = a.size();
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && a.get(i, j) > 0.0)
        .collect();
    Graph::directed(n, edges).expect("indices in range")
}

fn left_residual(pi: &[f64], a: &Matrix) -> f64 {
    let n = a.size();
    (0..n)
        .map(|j| ((0..n).map(|i| pi[i] * a.get(i, j)).sum::<f64>() - pi[j]).abs())
        .sum()
}

/// Stationary distribution `π' A = π'` of an irreducible row-stochastic
/// matrix. Iterates the lazy chain `½(I + A)`, which has the same fixed
/// point and no periodicity, until `‖π'A − π'‖₁ ≤ 1e-12`.
pub fn stationary_distribution(a: &Matrix) -> Result<DistributionVector, GraphError> {
    let n = a.size();
    let support = support_graph(a);
    let seq = super::GraphSequence::fixed(support);
    if !super::b_connectivity_check(&seq, 1, 1)?.connected {
        return Err(GraphError::Reducible);
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = left_residual(&pi, a);
    let mut iterations = 0;
    // Past the threshold, keep going while the residual still shrinks so the
    // returned vector sits at the floating-point fixed point.
    loop {
        if iterations == MAX_ITERATIONS {
            if residual <= RESIDUAL {
                break;
            }
            return Err(GraphError::NotConverged { iterations, residual });
        }
        for (j, nj) in next.iter_mut().enumerate() {
            let flow: f64 = (0..n).map(|i| pi[i] * a.get(i, j)).sum();
            *nj = 0.5 * (pi[j] + flow);
        }
        let s: f64 = next.iter().sum();
        let candidate: Vec<f64> = next.iter().map(|v| v / s).collect();
        let r = left_residual(&candidate, a);
        iterations += 1;
        if residual <= RESIDUAL && r >= residual {
            break;
        }
        pi = candidate;
        residual = r;
    }
    // Summation order can leave the total a few ulps away from one.
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    DistributionVector::new(pi).map_err(|_| GraphError::Reducible)
}

fn max_abs(m: &Matrix) -> f64 {
    (0..m.size())
        .flat_map(|i| m.row(i).iter().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// Second-largest eigenvalue modulus of a stochastic matrix.
///
/// The eigenvalue 1 (right eigenvector `1`) is deflated with
/// `B = A − 1 u'` for the uniform `u`: since `u'1 = 1`, `B` keeps every
/// other eigenvalue of `A` and replaces 1 by 0. The spectral radius of `B`
/// is then read off `‖B^(2^j)‖^(1/2^j)` by repeated squaring.
pub fn second_eigenvalue_modulus(a: &Matrix) -> f64 {
    let n = a.size();
    if n <= 1 {
        return 0.0;
    }
    let inv = 1.0 / n as f64;
    let mut b = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, a.get(i, j) - inv);
        }
    }
    // Entries left by deflating an exactly rank-one matrix are pure rounding.
    let scale = max_abs(&b);
    if scale <= 1e-14 {
        return 0.0;
    }
    // b = B^(2^j) / exp(log_scale)
    let mut log_scale = 0.0;
    let mut estimate = f64::NAN;
    let mut power = 1.0f64;
    for _ in 0..60 {
        let s = max_abs(&b);
        if s == 0.0 || !s.is_finite() {
            return 0.0;
        }
        log_scale += s.ln();
        for i in 0..n {
            for j in 0..n {
                b.set(i, j, b.get(i, j) / s);
            }
        }
        let next = (log_scale / power).exp();
        if (next - estimate).abs() <= 1e-15 {
            estimate = next;
            break;
        }
        estimate = next;
        b = b.mul(&b);
        log_scale *= 2.0;
        power *= 2.0;
    }
    if estimate < 1e-12 {
        0.0
    } else {
        estimate.min(1.0)
    }
}
