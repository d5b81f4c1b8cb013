use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, TheoremTag};

use super::{ExperimentConfig, SimError, Simulation, TrajectoryLog};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Running least-squares fit of `y` on `x`.
#[derive(Debug, Clone, Default)]
struct LineFit {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    sxy: f64,
    hit_zero: bool,
}

impl LineFit {
    fn push(&mut self, x: f64, y: f64) {
        if y == f64::NEG_INFINITY {
            self.hit_zero = true;
            return;
        }
        self.n += 1.0;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.n;
        self.mean_y += (y - self.mean_y) / self.n;
        self.sxx += dx * (x - self.mean_x);
        self.sxy += dx * (y - self.mean_y);
    }

    /// Negated slope; `+inf` once the series reached exact zero.
    fn rate(&self) -> Option<f64> {
        if self.hit_zero {
            return Some(f64::INFINITY);
        }
        if self.n < 2.0 || self.sxx == 0.0 {
            return None;
        }
        Some(-self.sxy / self.sxx)
    }
}

/// Least-squares decay rate of `ln μ_k` over `k > burn_in`. `None` when
/// fewer than two points remain, `+inf` when the belief hit exact zero.
pub fn decay_rate_from_series(series: &[(usize, f64)], burn_in: usize) -> Option<f64> {
    let mut fit = LineFit::default();
    for &(k, y) in series.iter().filter(|(k, _)| *k > burn_in) {
        fit.push(k as f64, y);
    }
    fit.rate()
}

pub fn empirical_decay_rate(log: &TrajectoryLog, agent: usize, theta: usize, burn_in: usize) -> Option<f64> {
    decay_rate_from_series(&log.log_series(agent, theta), burn_in)
}

/// Decay rates of one (agent, θ ∉ Θ*) pair across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySlope {
    pub agent: usize,
    pub hypothesis: usize,
    /// Median over replicates with a finite fit.
    pub median_rate: Option<f64>,
    pub mean_rate: Option<f64>,
    /// Replicates in which the belief reached exact zero.
    pub zero_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub rule: String,
    pub theorem: TheoremTag,
    pub replicates: usize,
    pub violations: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub rho: f64,
    /// `wilson_low ≤ ρ`: the observed frequency is consistent with `≤ ρ`.
    pub consistent: bool,
    pub n_rho: Option<u64>,
    /// Logged steps `first..=last` at which the bound was checked; absent
    /// when the horizon ends before `N(ρ)`.
    pub checked_window: Option<(u64, u64)>,
    pub horizon: usize,
    pub stride: usize,
    pub burn_in: usize,
    pub gamma2: f64,
    pub slopes: Vec<DecaySlope>,
}

struct ReplicateOutcome {
    violated: bool,
    rates: Vec<Option<f64>>,
}

fn run_checked(
    cfg: &ExperimentConfig,
    report: &BoundReport,
    r: usize,
    pairs: &[(usize, usize)],
    burn_in: usize,
) -> Result<ReplicateOutcome, SimError> {
    let mut sim = Simulation::new(cfg, cfg.replicate_seed(r))?;
    let mut fits = vec![LineFit::default(); pairs.len()];
    let mut violated = false;
    let n_rho = report.n_rho;
    for k in 1..=cfg.horizon {
        sim.step()?;
        if k % cfg.stride != 0 && k != cfg.horizon {
            continue;
        }
        let b = sim.beliefs();
        let checked = n_rho.is_some_and(|n| k as u64 >= n);
        for (p, &(i, t)) in pairs.iter().enumerate() {
            let l = b.log_belief(i, t);
            if k > burn_in {
                fits[p].push(k as f64, l);
            }
            if checked && !violated && l > report.log_belief_bound(i, k as u64) {
                violated = true;
            }
        }
    }
    Ok(ReplicateOutcome {
        violated,
        rates: fits.iter().map(LineFit::rate).collect(),
    })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    })
}

/// Runs every replicate and counts those in which some `μ_kⁱ(θ)`, `θ ∉ Θ*`,
/// exceeds the theorem's bound at a logged `k ≥ N(ρ)`.
pub fn monte_carlo_validate(cfg: &ExperimentConfig, report: &BoundReport) -> Result<ValidationSummary, SimError> {
    cfg.check()?;
    let n = cfg.model.agents();
    let m = cfg.model.hypotheses();
    let bad = report.non_optimal(m);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| bad.iter().map(move |&t| (i, t))).collect();
    let burn_in = report.n_rho.map_or(50, |v| ((v / 4) as usize).max(50));

    let outcomes = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_checked(cfg, report, r, &pairs, burn_in))
        .collect::<Result<Vec<_>, _>>()?;

    let violations = outcomes.iter().filter(|o| o.violated).count();
    let (lo, hi) = wilson_interval(violations, cfg.replicates);
    let slopes = pairs
        .iter()
        .enumerate()
        .map(|(p, &(agent, hypothesis))| {
            let rates: Vec<f64> = outcomes.iter().filter_map(|o| o.rates[p]).collect();
            let zero_hits = rates.iter().filter(|r| r.is_infinite()).count();
            let finite: Vec<f64> = rates.into_iter().filter(|r| r.is_finite()).collect();
            let mean_rate = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
            DecaySlope {
                agent,
                hypothesis,
                median_rate: median(finite),
                mean_rate,
                zero_hits,
            }
        })
        .collect();
    let checked_window = report.n_rho.and_then(|first| {
        let first = first.max(1);
        let last = cfg.horizon as u64;
        // first logged step at or after N(ρ)
        let stride = cfg.stride as u64;
        let first_logged = first.div_ceil(stride) * stride;
        let first_logged = if first_logged > last && first <= last {
            last
        } else {
            first_logged
        };
        (first_logged <= last).then_some((first_logged, last))
    });
    let frequency = violations as f64 / cfg.replicates as f64;
    Ok(ValidationSummary {
        rule: cfg.rule.name().to_string(),
        theorem: report.rule,
        replicates: cfg.replicates,
        violations,
        frequency,
        wilson_low: lo,
        wilson_high: hi,
        rho: report.rho,
        consistent: lo <= report.rho,
        n_rho: report.n_rho,
        checked_window,
        horizon: cfg.horizon,
        stride: cfg.stride,
        burn_in,
        gamma2: report.gamma2,
        slopes,
    })
}
