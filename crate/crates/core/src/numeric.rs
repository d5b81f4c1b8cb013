//! Log-domain helpers shared by the update rules.

/// `ln Σ exp(x)` with the maximum factored out. Returns `-inf` when every
/// input is `-inf` (or the slice is empty).
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Shift a row of log-masses so that it exponentiates to a probability
/// vector. Returns `false` (row untouched) if the row has no finite entry.
pub fn normalize_log_row(row: &mut [f64]) -> bool {
    let lse = log_sum_exp(row);
    if !lse.is_finite() {
        return false;
    }
    for v in row.iter_mut() {
        *v -= lse;
    }
    true
}

/// Weighted arithmetic mean of log vectors, `Σ_j w_j x_j`, skipping zero
/// weights so that `0 · (-inf)` never produces NaN.
pub fn weighted_log_sum(weights: &[f64], rows: &[&[f64]], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (&w, row) in weights.iter().zip(rows) {
        if w == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(row.iter()) {
            *o += w * x;
        }
    }
}

/// Total variation distance, `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
