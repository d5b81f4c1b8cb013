//! Closed-form constants of the convergence theorems.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{second_eigenvalue_modulus, stationary_distribution, GraphError, Matrix};
use crate::hypothesis::{
    agent_objective, kl_raw, objective_values, optimal_set, LikelihoodModel, DEFAULT_OPTIMAL_TOLERANCE,
};
use crate::rules::BeliefMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("every hypothesis is optimal; gamma2 is undefined")]
    AllOptimal,
    #[error("gamma2 = {0} is not positive; the model is not identifiable")]
    NotIdentifiable(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("agent {agent} has zero initial belief on quantified optimal hypothesis {hypothesis}")]
    ZeroInitialBelief { agent: usize, hypothesis: usize },
    #[error("quantified optimal set is empty")]
    EmptyQuantifiedSet,
    #[error("upper bound U = {u} is smaller than the number of agents {n}")]
    UpperBoundTooSmall { u: usize, n: usize },
    #[error("the concentration bound needs a unique optimal hypothesis, found {0}")]
    NotSingleton(usize),
    #[error("transient time {0:e} does not fit in a 64-bit integer")]
    Overflow(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which theorem a set of constants belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    #[serde(rename = "theorem-1")]
    Theorem1,
    #[serde(rename = "theorem-2")]
    Theorem2,
    #[serde(rename = "theorem-3-general")]
    Theorem3General,
    #[serde(rename = "theorem-3-regular")]
    Theorem3Regular,
}

impl TheoremTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremTag::Theorem1 => "theorem-1",
            TheoremTag::Theorem2 => "theorem-2",
            TheoremTag::Theorem3General => "theorem-3-general",
            TheoremTag::Theorem3Regular => "theorem-3-regular",
        }
    }

    fn is_theorem3(&self) -> bool {
        matches!(self, TheoremTag::Theorem3General | TheoremTag::Theorem3Regular)
    }
}

/// Base of the logarithm inside the constants. Natural by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Binary,
}

impl LogBase {
    pub fn log(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Binary => x.log2(),
        }
    }

    /// Converts a quantity measured in nats.
    fn nats(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x,
            LogBase::Binary => x / std::f64::consts::LN_2,
        }
    }
}

fn non_optimal(m: usize, optimal: &[usize]) -> Vec<usize> {
    (0..m).filter(|t| !optimal.contains(t)).collect()
}

/// `γ₂ = (1/n) min_{θ∉Θ*} (F(θ) − F(θ*))`.
pub fn gamma2(model: &LikelihoodModel) -> Result<f64, BoundError> {
    gamma2_in(model, LogBase::Natural)
}

pub fn gamma2_in(model: &LikelihoodModel, base: LogBase) -> Result<f64, BoundError> {
    let f = objective_values(model);
    let opt = optimal_set(model, DEFAULT_OPTIMAL_TOLERANCE);
    let rest = non_optimal(f.len(), &opt);
    if rest.is_empty() {
        return Err(BoundError::AllOptimal);
    }
    let best = opt.iter().map(|&t| f[t]).fold(f64::INFINITY, f64::min);
    let gap = rest.iter().map(|&t| f[t] - best).fold(f64::INFINITY, f64::min);
    Ok(base.nats(gap / model.agents() as f64))
}

/// Default `Θ̂*`: optimal hypotheses every agent starts with positive belief on.
pub fn default_quantified_set(model: &LikelihoodModel, initial: &BeliefMatrix) -> Vec<usize> {
    optimal_set(model, DEFAULT_OPTIMAL_TOLERANCE)
        .into_iter()
        .filter(|&t| (0..initial.agents()).all(|i| initial.log_belief(i, t) > f64::NEG_INFINITY))
        .collect()
}

/// `8 log n / (1 − λ) · log(1/α)`; zero for a single agent whatever `λ` is.
fn network_term(n: usize, one_minus_lambda: f64, alpha: f64, base: LogBase) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    8.0 * base.log(n as f64) / one_minus_lambda * base.log(1.0 / alpha)
}

/// `γ₁ⁱ = max_{θ∉Θ*, θ*∈Θ̂*} { log(μ₀ⁱ(θ)/μ₀ⁱ(θ*)) + 8 log n/(1−λ) · log(1/α) + Fⁱ(θ) − Fⁱ(θ*) }`.
///
/// `quantified` defaults to [`default_quantified_set`].
pub fn gamma1_i(
    model: &LikelihoodModel,
    initial: &BeliefMatrix,
    agent: usize,
    lambda: f64,
    alpha: f64,
    quantified: Option<&[usize]>,
) -> Result<f64, BoundError> {
    gamma1_i_in(model, initial, agent, 1.0 - lambda, alpha, quantified, LogBase::Natural)
}

fn gamma1_i_in(
    model: &LikelihoodModel,
    initial: &BeliefMatrix,
    agent: usize,
    one_minus_lambda: f64,
    alpha: f64,
    quantified: Option<&[usize]>,
    base: LogBase,
) -> Result<f64, BoundError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoundError::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let m = model.hypotheses();
    let opt = optimal_set(model, DEFAULT_OPTIMAL_TOLERANCE);
    let rest = non_optimal(m, &opt);
    if rest.is_empty() {
        return Err(BoundError::AllOptimal);
    }
    let default_set;
    let hat = match quantified {
        Some(q) => q,
        None => {
            default_set = default_quantified_set(model, initial);
            &default_set
        }
    };
    if hat.is_empty() {
        return Err(BoundError::EmptyQuantifiedSet);
    }
    let network = network_term(model.agents(), one_minus_lambda, alpha, base);
    let mut best = f64::NEG_INFINITY;
    for &star in hat {
        let l_star = initial.log_belief(agent, star);
        if l_star == f64::NEG_INFINITY {
            return Err(BoundError::ZeroInitialBelief {
                agent,
                hypothesis: star,
            });
        }
        let f_star = agent_objective(model, agent, star);
        for &t in &rest {
            let ratio = base.nats(initial.log_belief(agent, t) - l_star);
            let gap = base.nats(agent_objective(model, agent, t) - f_star);
            best = best.max(ratio + network + gap);
        }
    }
    Ok(best)
}

/// `λ = (1 − η/(4n²))^{1/B}`.
pub fn lambda_theorem1(eta: f64, n: usize, b: usize) -> f64 {
    let x = eta / (4.0 * (n as f64).powi(2));
    ((-x).ln_1p() / b as f64).exp()
}

fn one_minus_lambda_theorem1(eta: f64, n: usize, b: usize) -> f64 {
    let x = eta / (4.0 * (n as f64).powi(2));
    -((-x).ln_1p() / b as f64).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Constants {
    pub sigma: f64,
    pub lambda: f64,
}

/// `σ = 1 − 2/(9U+1)`, `λ = 1 − 1/(18U)`; with `n` known, `U ≥ n` is enforced.
pub fn constants_theorem2(u: usize, n: Option<usize>) -> Result<Theorem2Constants, BoundError> {
    if u == 0 {
        return Err(BoundError::InvalidParameter("U must be at least 1".into()));
    }
    if let Some(n) = n {
        if u < n {
            return Err(BoundError::UpperBoundTooSmall { u, n });
        }
    }
    let u = u as f64;
    Ok(Theorem2Constants {
        sigma: 1.0 - 2.0 / (9.0 * u + 1.0),
        lambda: 1.0 - 1.0 / (18.0 * u),
    })
}

/// Theorem-3 constants. `n^{nB}` is handled in log space: when it is beyond
/// `f64` range `lambda` rounds to 1 and `delta` to 0, and the `ln_*` fields
/// still carry the exact magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Constants {
    pub c: f64,
    pub lambda: f64,
    pub delta: f64,
    pub ln_one_minus_lambda: f64,
    pub ln_delta: f64,
}

impl Theorem3Constants {
    pub fn one_minus_lambda(&self) -> f64 {
        self.ln_one_minus_lambda.exp()
    }
}

pub fn constants_theorem3(n: usize, b: usize, regular: bool) -> Result<Theorem3Constants, BoundError> {
    if n == 0 || b == 0 {
        return Err(BoundError::InvalidParameter("n and B must be at least 1".into()));
    }
    let nf = n as f64;
    let bf = b as f64;
    // ln x with λ = (1 − x)^{1/B}
    let (c, ln_x, ln_delta) = if regular {
        (std::f64::consts::SQRT_2, -(4.0 * nf.powi(3)).ln(), 0.0)
    } else {
        let l = -nf * bf * nf.ln();
        (4.0, l, l)
    };
    let x = ln_x.exp();
    let lambda = ((-x).ln_1p() / bf).exp();
    let ln_one_minus_lambda = if x == 1.0 {
        0.0
    } else if x > 1e-300 {
        (-((-x).ln_1p() / bf).exp_m1()).ln()
    } else {
        // 1 − (1 − x)^{1/B} = x/B + O(x²)
        ln_x - bf.ln()
    };
    Ok(Theorem3Constants {
        c,
        lambda,
        delta: ln_delta.exp(),
        ln_one_minus_lambda,
        ln_delta,
    })
}

/// `N(ρ)` of the selected theorem, before the ceiling.
pub fn transient_time_value(
    tag: TheoremTag,
    rho: f64,
    alpha: f64,
    gamma2: f64,
    n: usize,
    delta: f64,
    base: LogBase,
) -> Result<f64, BoundError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(BoundError::InvalidParameter(format!("rho = {rho} outside (0, 1)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundError::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
    }
    if gamma2.is_nan() || gamma2 <= 0.0 {
        return Err(BoundError::NotIdentifiable(gamma2));
    }
    let la2 = base.log(alpha).powi(2);
    let lr = base.log(1.0 / rho);
    let g2 = gamma2 * gamma2;
    Ok(match tag {
        TheoremTag::Theorem1 => 8.0 * la2 * lr / g2 + 1.0,
        TheoremTag::Theorem2 => 72.0 * la2 * n as f64 * lr / g2,
        TheoremTag::Theorem3General | TheoremTag::Theorem3Regular => {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(BoundError::InvalidParameter(format!("delta = {delta} outside (0, 1]")));
            }
            8.0 * la2 * lr / (delta * delta * g2) + 1.0
        }
    })
}

/// `N(ρ)`: the ceiling of [`transient_time_value`], never below 1.
pub fn transient_time(
    tag: TheoremTag,
    rho: f64,
    alpha: f64,
    gamma2: f64,
    n: usize,
    delta: f64,
) -> Result<u64, BoundError> {
    ceil_steps(transient_time_value(
        tag,
        rho,
        alpha,
        gamma2,
        n,
        delta,
        LogBase::Natural,
    )?)
}

fn ceil_steps(v: f64) -> Result<u64, BoundError> {
    let c = v.ceil();
    if !c.is_finite() || c >= u64::MAX as f64 {
        return Err(BoundError::Overflow(v));
    }
    Ok((c as u64).max(1))
}

/// `ln` of the belief bound, capped at 0: `min(0, −kγ₂/2 + γ₁ⁱ/δ)` with
/// `δ = 1` outside Theorem 3.
pub fn log_belief_bound(tag: TheoremTag, k: u64, gamma2: f64, gamma1: f64, delta: f64) -> f64 {
    let offset = if tag.is_theorem3() { gamma1 / delta } else { gamma1 };
    (-(k as f64) * gamma2 / 2.0 + offset).min(0.0)
}

/// `exp(−kγ₂/2 + γ₁ⁱ)` (Theorems 1, 2) or `exp(−kγ₂/2 + γ₁ⁱ/δ)` (Theorem 3), capped at 1.
pub fn belief_bound(tag: TheoremTag, k: u64, gamma2: f64, gamma1: f64, delta: f64) -> f64 {
    log_belief_bound(tag, k, gamma2, gamma1, delta).exp()
}

/// Right-hand side of the static-graph total-variation concentration bound,
/// term by term. `bound` is the implied `min(1, exp(η · rhs))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvConcentration {
    pub drift: f64,
    pub deviation: f64,
    pub network: f64,
    pub prior: f64,
    pub rhs: f64,
    pub bound: f64,
    pub second_eigenvalue: f64,
}

/// Evaluates
/// `−k min_{θ≠θ*} Σ_j π_j D(ℓ_j(θ*)‖ℓ_j(θ)) + √(2 (log α)² k log(|Θ|/δ)) + 8 log(1/α) log n/(1 − λ₂(A)) + log|Θ|/η`
/// with `π` the stationary distribution of `A` and `λ₂` its second-largest
/// eigenvalue modulus.
pub fn tv_concentration_bound(
    model: &LikelihoodModel,
    a: &Matrix,
    k: u64,
    delta_prob: f64,
    eta_step: f64,
) -> Result<TvConcentration, BoundError> {
    if !(delta_prob > 0.0 && delta_prob < 1.0) {
        return Err(BoundError::InvalidParameter(format!(
            "delta = {delta_prob} outside (0, 1)"
        )));
    }
    if eta_step.is_nan() || eta_step <= 0.0 {
        return Err(BoundError::InvalidParameter(format!(
            "step size {eta_step} is not positive"
        )));
    }
    let n = model.agents();
    if a.size() != n {
        return Err(BoundError::InvalidParameter(format!(
            "{} weights for {n} agents",
            a.size()
        )));
    }
    let opt = optimal_set(model, DEFAULT_OPTIMAL_TOLERANCE);
    if opt.len() != 1 {
        return Err(BoundError::NotSingleton(opt.len()));
    }
    let star = opt[0];
    let pi = stationary_distribution(a)?;
    let lambda2 = second_eigenvalue_modulus(a);
    let m = model.hypotheses();
    let alpha = model.alpha();
    let kf = k as f64;

    let rate = (0..m)
        .filter(|&t| t != star)
        .map(|t| {
            (0..n)
                .map(|j| pi[j] * kl_raw(model.agent(j).row(star), model.agent(j).row(t)))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let drift = if m == 1 { 0.0 } else { -kf * rate };
    let deviation = (2.0 * alpha.ln().powi(2) * kf * (m as f64 / delta_prob).ln()).sqrt();
    let network = network_term(n, 1.0 - lambda2, alpha, LogBase::Natural);
    let prior = (m as f64).ln() / eta_step;
    let rhs = drift + deviation + network + prior;
    Ok(TvConcentration {
        drift,
        deviation,
        network,
        prior,
        rhs,
        bound: (eta_step * rhs).min(0.0).exp(),
        second_eigenvalue: lambda2,
    })
}

/// Everything needed to assemble a [`BoundReport`].
#[derive(Debug, Clone)]
pub struct BoundInputs<'a> {
    pub model: &'a LikelihoodModel,
    pub initial: &'a BeliefMatrix,
    pub tag: TheoremTag,
    pub rho: f64,
    /// Weight floor `η` (Theorem 1).
    pub eta: Option<f64>,
    pub b: usize,
    /// Upper bound `U` on the number of agents (Theorem 2).
    pub u: Option<usize>,
    pub quantified: Option<Vec<usize>>,
    pub lazy_metropolis: bool,
    pub base: LogBase,
}

impl<'a> BoundInputs<'a> {
    pub fn new(model: &'a LikelihoodModel, initial: &'a BeliefMatrix, tag: TheoremTag, rho: f64) -> Self {
        Self {
            model,
            initial,
            tag,
            rho,
            eta: None,
            b: 1,
            u: None,
            quantified: None,
            lazy_metropolis: false,
            base: LogBase::Natural,
        }
    }
}

/// All theorem constants for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rule: TheoremTag,
    pub gamma2: f64,
    pub gamma1: Vec<f64>,
    pub lambda: f64,
    pub one_minus_lambda: f64,
    pub n_rho: Option<u64>,
    pub n_rho_value: f64,
    pub c: Option<f64>,
    pub delta: f64,
    pub ln_delta: f64,
    pub sigma: Option<f64>,
    pub u: Option<usize>,
    pub alpha: f64,
    pub eta: Option<f64>,
    pub b: usize,
    pub rho: f64,
    pub agents: usize,
    pub optimal_set: Vec<usize>,
    pub quantified_set: Vec<usize>,
    /// `2γ₁ⁱ/γ₂` (or `2γ₁ⁱ/(δγ₂)`): where each agent's bound first drops below 1.
    pub crossing: Vec<f64>,
    pub log_base: LogBase,
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn log_belief_bound(&self, agent: usize, k: u64) -> f64 {
        log_belief_bound(self.rule, k, self.gamma2, self.gamma1[agent], self.delta)
    }

    pub fn belief_bound(&self, agent: usize, k: u64) -> f64 {
        self.log_belief_bound(agent, k).exp()
    }

    /// Hypotheses the bound is about: `θ ∉ Θ*`.
    pub fn non_optimal(&self, m: usize) -> Vec<usize> {
        non_optimal(m, &self.optimal_set)
    }
}

pub fn bound_report(inp: &BoundInputs) -> Result<BoundReport, BoundError> {
    let model = inp.model;
    let n = model.agents();
    if inp.initial.agents() != n || inp.initial.hypotheses() != model.hypotheses() {
        return Err(BoundError::InvalidParameter(
            "initial beliefs do not match the model".into(),
        ));
    }
    if inp.b == 0 {
        return Err(BoundError::InvalidParameter("B must be at least 1".into()));
    }
    let base = inp.base;
    let alpha = model.alpha();
    let gamma2 = gamma2_in(model, base)?;
    let mut flags = Vec::new();
    if base == LogBase::Binary {
        flags.push("log-base-2".to_string());
    }

    let (lambda, one_minus_lambda, c, delta, ln_delta, sigma) = match inp.tag {
        TheoremTag::Theorem1 => {
            let eta = inp
                .eta
                .ok_or_else(|| BoundError::InvalidParameter("theorem-1 needs the weight floor eta".into()))?;
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(BoundError::InvalidParameter(format!("eta = {eta} outside (0, 1]")));
            }
            if inp.lazy_metropolis && inp.b == 1 {
                flags.push("lazy-metropolis: lambda = 1 - 1/O(n^2)".to_string());
            }
            (
                lambda_theorem1(eta, n, inp.b),
                one_minus_lambda_theorem1(eta, n, inp.b),
                None,
                1.0,
                0.0,
                None,
            )
        }
        TheoremTag::Theorem2 => {
            let u = inp
                .u
                .ok_or_else(|| BoundError::InvalidParameter("theorem-2 needs the upper bound U".into()))?;
            let t2 = constants_theorem2(u, Some(n))?;
            (t2.lambda, 1.0 / (18.0 * u as f64), None, 1.0, 0.0, Some(t2.sigma))
        }
        TheoremTag::Theorem3General | TheoremTag::Theorem3Regular => {
            let regular = inp.tag == TheoremTag::Theorem3Regular;
            let t3 = constants_theorem3(n, inp.b, regular)?;
            if !regular {
                flags.push("delta is the lower bound n^-(nB); transient time is an upper estimate".to_string());
            }
            if t3.delta == 0.0 || t3.lambda == 1.0 {
                flags.push("n^(nB) beyond f64 range; see ln_delta".to_string());
            }
            flags.push("constant C enters no stated inequality".to_string());
            (
                t3.lambda,
                t3.one_minus_lambda(),
                Some(t3.c),
                t3.delta,
                t3.ln_delta,
                None,
            )
        }
    };

    let opt = optimal_set(model, DEFAULT_OPTIMAL_TOLERANCE);
    let quantified = inp
        .quantified
        .clone()
        .unwrap_or_else(|| default_quantified_set(model, inp.initial));
    let gamma1 = match inp.tag {
        // Uniform start, no local gap: only the network term remains.
        TheoremTag::Theorem2 => vec![network_term(n, one_minus_lambda, alpha, base); n],
        _ => (0..n)
            .map(|i| gamma1_i_in(model, inp.initial, i, one_minus_lambda, alpha, Some(&quantified), base))
            .collect::<Result<Vec<_>, _>>()?,
    };

    let n_rho_value = transient_time_value(inp.tag, inp.rho, alpha, gamma2, n, delta, base)?;
    let n_rho = ceil_steps(n_rho_value).ok();
    let scale = if inp.tag.is_theorem3() { delta } else { 1.0 };
    let crossing = gamma1.iter().map(|g| 2.0 * g / (scale * gamma2)).collect();

    Ok(BoundReport {
        rule: inp.tag,
        gamma2,
        gamma1,
        lambda,
        one_minus_lambda,
        n_rho,
        n_rho_value,
        c,
        delta,
        ln_delta,
        sigma,
        u: inp.u,
        alpha,
        eta: inp.eta,
        b: inp.b,
        rho: inp.rho,
        agents: n,
        optimal_set: opt,
        quantified_set: quantified,
        crossing,
        log_base: base,
        flags,
    })
}
