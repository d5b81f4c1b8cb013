//! Seeded simulation of the update rules.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{constants_theorem2, BoundError, TheoremTag};
use crate::graph::{GraphSequence, WeightSchedule};
use crate::hypothesis::LikelihoodModel;
use crate::rules::{
    accelerated_update, bayes_then_geometric, degroot_social_update, geometric_then_bayes, gossip_dual_averaging_step,
    independent_bayes, independent_reaction, push_sum_update, AcceleratedState, BeliefMatrix, DualAveragingState,
    PushSumState, StepSizes, UpdateError,
};

mod oracle;
mod validate;

pub use oracle::{mirror_descent_oracle, OracleError};
pub use validate::{
    decay_rate_from_series, empirical_decay_rate, monte_carlo_validate, wilson_interval, DecaySlope, ValidationSummary,
};

/// Identity of the generator recorded with every trajectory.
pub const RNG_NAME: &str = "chacha8 (rand_chacha 0.9); signals: stream 0, uniform = (next_u64 >> 11) * 2^-53, inverse cdf; gossip activation: stream 1, next_u64 mod |E|";

const SIGNAL_STREAM: u64 = 0;
const ACTIVATION_STREAM: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("step {step}: {source}")]
    Step { step: usize, source: UpdateError },
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A uniform draw in `[0, 1)` with 53 random bits.
fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw from a probability vector. Indices of zero mass are
/// never returned.
fn draw(dist: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (s, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = s;
            if u < cum {
                return s;
            }
        }
    }
    last
}

/// One signal per agent, agent `i` from `f_i`.
pub fn sample_signals(model: &LikelihoodModel, rng: &mut impl RngCore) -> Vec<usize> {
    (0..model.agents())
        .map(|i| draw(model.truth(i), uniform(rng)))
        .collect()
}

/// Update rule and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Rule {
    Bayes,
    Reaction {
        gamma: f64,
    },
    Degroot,
    BayesThenGeometric,
    GeometricThenBayes,
    Accelerated {
        u: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    PushSum,
    Gossip {
        #[serde(default)]
        step_size: StepSizes,
    },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Bayes => "bayes",
            Rule::Reaction { .. } => "reaction",
            Rule::Degroot => "degroot",
            Rule::BayesThenGeometric => "bayes-then-geometric",
            Rule::GeometricThenBayes => "geometric-then-bayes",
            Rule::Accelerated { .. } => "accelerated",
            Rule::PushSum => "push-sum",
            Rule::Gossip { .. } => "gossip",
        }
    }

    pub fn needs_weights(&self) -> bool {
        matches!(
            self,
            Rule::Degroot | Rule::BayesThenGeometric | Rule::GeometricThenBayes | Rule::Accelerated { .. }
        )
    }

    /// Theorem whose bound applies, if any.
    pub fn theorem(&self, regular: bool) -> Option<TheoremTag> {
        match self {
            Rule::GeometricThenBayes => Some(TheoremTag::Theorem1),
            Rule::Accelerated { .. } => Some(TheoremTag::Theorem2),
            Rule::PushSum if regular => Some(TheoremTag::Theorem3Regular),
            Rule::PushSum => Some(TheoremTag::Theorem3General),
            _ => None,
        }
    }

    /// Momentum actually used: the given `σ`, else `1 − 2/(9U+1)`.
    pub fn sigma(&self, n: usize) -> Result<Option<f64>, SimError> {
        match self {
            Rule::Accelerated { u, sigma } => {
                let c = constants_theorem2(*u, Some(n))?;
                Ok(Some(sigma.unwrap_or(c.sigma)))
            }
            _ => Ok(None),
        }
    }
}

/// Everything a simulation needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: LikelihoodModel,
    pub graphs: GraphSequence,
    pub weights: Option<WeightSchedule>,
    pub rule: Rule,
    pub initial: BeliefMatrix,
    pub horizon: usize,
    pub replicates: usize,
    pub rho: f64,
    pub seed: u64,
    pub stride: usize,
}

impl ExperimentConfig {
    /// Seed of replicate `r`: base seed plus index.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    pub fn check(&self) -> Result<(), SimError> {
        let n = self.model.agents();
        let bad = |s: String| Err(SimError::Config(s));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.graphs.node_count() != n {
            return bad(format!(
                "graph has {} nodes, model has {n} agents",
                self.graphs.node_count()
            ));
        }
        if self.initial.agents() != n || self.initial.hypotheses() != self.model.hypotheses() {
            return bad("initial beliefs do not match the model".into());
        }
        if self.rule.needs_weights() {
            match &self.weights {
                None => return bad(format!("rule {} needs weight matrices", self.rule.name())),
                Some(w) if w.node_count() != n => return bad("weight matrices do not match the model".into()),
                _ => {}
            }
        }
        if let Rule::Accelerated { .. } = self.rule {
            let w = self.weights.as_ref().expect("checked above");
            if w.period() != 1 || !self.graphs.is_static() {
                return bad("the accelerated rule needs a static graph and weight matrix".into());
            }
            let sigma = self.rule.sigma(n)?.expect("accelerated");
            if !(0.0..1.0).contains(&sigma) {
                return bad(format!("sigma = {sigma} outside [0, 1)"));
            }
        }
        if let Rule::Gossip { .. } = self.rule {
            if self.graphs.is_directed() {
                return bad("gossip needs undirected graphs".into());
            }
        }
        Ok(())
    }
}

enum State {
    Plain(BeliefMatrix),
    Accelerated(AcceleratedState),
    PushSum(PushSumState),
    Gossip(DualAveragingState),
}

/// Signals drawn at a step and the gossip pair, if any.
pub type StepOutcome = (Vec<usize>, Option<(usize, usize)>);

/// A single replicate advanced one step at a time.
pub struct Simulation<'a> {
    cfg: &'a ExperimentConfig,
    state: State,
    k: usize,
    signal_rng: ChaCha8Rng,
    activation_rng: ChaCha8Rng,
    beliefs_cache: Option<BeliefMatrix>,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a ExperimentConfig, seed: u64) -> Result<Self, SimError> {
        cfg.check()?;
        let init = cfg.initial.clone();
        let state = match &cfg.rule {
            Rule::Accelerated { .. } => {
                let sigma = cfg.rule.sigma(cfg.model.agents())?.expect("accelerated");
                State::Accelerated(
                    AcceleratedState::new(init, sigma).map_err(|source| SimError::Step { step: 0, source })?,
                )
            }
            Rule::PushSum => State::PushSum(PushSumState::new(init)),
            Rule::Gossip { step_size } => State::Gossip(DualAveragingState::new(init, *step_size)),
            _ => State::Plain(init),
        };
        Ok(Self {
            cfg,
            state,
            k: 0,
            signal_rng: rng_for(seed, SIGNAL_STREAM),
            activation_rng: rng_for(seed, ACTIVATION_STREAM),
            beliefs_cache: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn beliefs(&mut self) -> &BeliefMatrix {
        match &self.state {
            State::Plain(b) => b,
            State::Accelerated(s) => s.beliefs(),
            State::PushSum(s) => s.beliefs(),
            State::Gossip(s) => self.beliefs_cache.get_or_insert_with(|| s.beliefs()),
        }
    }

    pub fn push_sum_weights(&self) -> Option<&[f64]> {
        match &self.state {
            State::PushSum(s) => Some(s.weights()),
            _ => None,
        }
    }

    /// Draws `s_{k+1}` and applies the rule with `A_k` / `𝒢_k`. Returns the
    /// signals and, for gossip, the activated pair.
    pub fn step(&mut self) -> Result<StepOutcome, SimError> {
        let cfg = self.cfg;
        let k = self.k;
        let signals = sample_signals(&cfg.model, &mut self.signal_rng);
        let model = &cfg.model;
        let wrap = |source| SimError::Step { step: k + 1, source };
        let mut pair = None;
        self.state = match &self.state {
            State::Plain(b) => {
                let a = cfg.weights.as_ref().map(|w| w.matrix_at(k));
                State::Plain(
                    match &cfg.rule {
                        Rule::Bayes => independent_bayes(b, &signals, model),
                        Rule::Reaction { gamma } => independent_reaction(b, &signals, model, *gamma),
                        Rule::Degroot => degroot_social_update(b, &signals, model, a.expect("checked")),
                        Rule::BayesThenGeometric => bayes_then_geometric(b, &signals, model, a.expect("checked")),
                        Rule::GeometricThenBayes => geometric_then_bayes(b, &signals, model, a.expect("checked")),
                        _ => unreachable!("stateful rules have their own state"),
                    }
                    .map_err(wrap)?,
                )
            }
            State::Accelerated(s) => {
                let a = cfg.weights.as_ref().expect("checked").matrix_at(0);
                State::Accelerated(accelerated_update(s, &signals, model, a).map_err(wrap)?)
            }
            State::PushSum(s) => {
                State::PushSum(push_sum_update(s, &signals, model, cfg.graphs.graph_at(k)).map_err(wrap)?)
            }
            State::Gossip(s) => {
                let g = cfg.graphs.graph_at(k);
                let edges: Vec<(usize, usize)> = g.edge_list();
                // An edgeless step still consumes one activation draw so that
                // later draws do not depend on the graph history.
                let r = self.activation_rng.next_u64();
                if edges.is_empty() {
                    State::Gossip(s.clone().idle())
                } else {
                    let (i, j) = edges[(r % edges.len() as u64) as usize];
                    pair = Some((i, j));
                    State::Gossip(
                        gossip_dual_averaging_step(s, (i, j), [signals[i], signals[j]], model, g).map_err(wrap)?,
                    )
                }
            }
        };
        self.beliefs_cache = None;
        self.k += 1;
        Ok((signals, pair))
    }
}

/// Beliefs at one logged step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub k: usize,
    pub beliefs: BeliefMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

/// Replayable record of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub replicate: usize,
    pub seed: u64,
    pub rng: String,
    pub rule: String,
    pub stride: usize,
    pub horizon: usize,
    pub snapshots: Vec<Snapshot>,
    /// `signals[k]` are the signals `s_{k+1}` used by step `k → k+1`.
    pub signals: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activations: Vec<(usize, usize)>,
}

impl TrajectoryLog {
    pub fn final_beliefs(&self) -> &BeliefMatrix {
        &self.snapshots.last().expect("initial snapshot always present").beliefs
    }

    /// `(k, ln μ_kⁱ(θ))` over the logged steps.
    pub fn log_series(&self, agent: usize, theta: usize) -> Vec<(usize, f64)> {
        self.snapshots
            .iter()
            .map(|s| (s.k, s.beliefs.log_belief(agent, theta)))
            .collect()
    }
}

fn snapshot(sim: &mut Simulation) -> Snapshot {
    let y = sim.push_sum_weights().map(<[f64]>::to_vec);
    Snapshot {
        k: sim.k(),
        beliefs: sim.beliefs().clone(),
        y,
    }
}

/// Runs replicate `r`. Beliefs are logged at every multiple of the stride
/// and at the horizon.
pub fn run_replicate(cfg: &ExperimentConfig, r: usize) -> Result<TrajectoryLog, SimError> {
    let seed = cfg.replicate_seed(r);
    let mut sim = Simulation::new(cfg, seed)?;
    let mut snapshots = vec![snapshot(&mut sim)];
    let mut signals = Vec::with_capacity(cfg.horizon);
    let mut activations = Vec::new();
    for k in 1..=cfg.horizon {
        let (s, pair) = sim.step()?;
        signals.push(s);
        activations.extend(pair);
        if k % cfg.stride == 0 || k == cfg.horizon {
            snapshots.push(snapshot(&mut sim));
        }
    }
    Ok(TrajectoryLog {
        replicate: r,
        seed,
        rng: RNG_NAME.to_string(),
        rule: cfg.rule.name().to_string(),
        stride: cfg.stride,
        horizon: cfg.horizon,
        snapshots,
        signals,
        activations,
    })
}

/// Replicate 0.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrajectoryLog, SimError> {
    run_replicate(cfg, 0)
}

/// All replicates, in parallel.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<TrajectoryLog>, SimError> {
    use rayon::prelude::*;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{lazy_metropolis_weights, Graph, WeightScheme};

    fn ring_model() -> LikelihoodModel {
        let rows = vec![vec![0.8, 0.2], vec![0.2, 0.8], vec![0.5, 0.5]];
        LikelihoodModel::from_tables(vec![rows; 3], vec![vec![0.8, 0.2]; 3]).unwrap()
    }

    fn ring_cfg(rule: Rule, horizon: usize) -> ExperimentConfig {
        let graphs = GraphSequence::fixed(Graph::ring(3));
        let weights = WeightSchedule::from_graphs(&graphs, WeightScheme::LazyMetropolis, None).unwrap();
        ExperimentConfig {
            model: ring_model(),
            graphs,
            weights: Some(weights),
            rule,
            initial: BeliefMatrix::uniform(3, 3),
            horizon,
            replicates: 1,
            rho: 0.1,
            seed: 7,
            stride: 1,
        }
    }

    #[test]
    fn degenerate_truth_always_gives_signal_zero() {
        let m = LikelihoodModel::from_tables(vec![vec![vec![0.5, 0.5]]], vec![vec![1.0, 0.0]]).unwrap();
        let mut rng = rng_for(3, 0);
        assert!((0..1000).all(|_| sample_signals(&m, &mut rng) == vec![0]));
    }

    #[test]
    fn sampling_is_deterministic_and_calibrated() {
        let m = LikelihoodModel::from_tables(vec![vec![vec![0.5, 0.5]]], vec![vec![0.7, 0.3]]).unwrap();
        let mut a = rng_for(11, 0);
        let mut b = rng_for(11, 0);
        let xs: Vec<usize> = (0..100_000).map(|_| sample_signals(&m, &mut a)[0]).collect();
        let ys: Vec<usize> = (0..100_000).map(|_| sample_signals(&m, &mut b)[0]).collect();
        assert_eq!(xs, ys);
        let freq = xs.iter().filter(|&&s| s == 0).count() as f64 / 1e5;
        assert!((freq - 0.7).abs() < 0.01, "{freq}");
    }

    #[test]
    fn zero_horizon_logs_initial_only() {
        let log = run_experiment(&ring_cfg(Rule::GeometricThenBayes, 0)).unwrap();
        assert_eq!(log.snapshots.len(), 1);
        assert_eq!(log.final_beliefs(), &BeliefMatrix::uniform(3, 3));
    }

    #[test]
    fn single_agent_geometric_is_bayes() {
        let rows = vec![vec![0.6, 0.4], vec![0.3, 0.7]];
        let model = LikelihoodModel::from_tables(vec![rows], vec![vec![0.6, 0.4]]).unwrap();
        let graphs = GraphSequence::fixed(Graph::empty(1, false));
        let mk = |rule| ExperimentConfig {
            model: model.clone(),
            graphs: graphs.clone(),
            weights: Some(
                WeightSchedule::explicit(vec![lazy_metropolis_weights(&Graph::empty(1, false)).unwrap()], None)
                    .unwrap(),
            ),
            rule,
            initial: BeliefMatrix::uniform(1, 2),
            horizon: 40,
            replicates: 1,
            rho: 0.1,
            seed: 5,
            stride: 1,
        };
        let a = run_experiment(&mk(Rule::GeometricThenBayes)).unwrap();
        let b = run_experiment(&mk(Rule::Bayes)).unwrap();
        assert_eq!(a.signals, b.signals);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert!((x.beliefs.belief(0, 0) - y.beliefs.belief(0, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_learns_truth() {
        let log = run_experiment(&ring_cfg(Rule::GeometricThenBayes, 500)).unwrap();
        for i in 0..3 {
            assert!(log.final_beliefs().belief(i, 0) > 0.99);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        for rule in [
            Rule::Degroot,
            Rule::Accelerated { u: 3, sigma: None },
            Rule::PushSum,
            Rule::Gossip {
                step_size: StepSizes::default(),
            },
        ] {
            let cfg = ring_cfg(rule, 60);
            assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
        }
    }

    #[test]
    fn stride_keeps_multiples_and_final() {
        let mut cfg = ring_cfg(Rule::BayesThenGeometric, 10);
        cfg.stride = 4;
        let ks: Vec<usize> = run_experiment(&cfg).unwrap().snapshots.iter().map(|s| s.k).collect();
        assert_eq!(ks, vec![0, 4, 8, 10]);
    }

    #[test]
    fn accelerated_rejects_small_u() {
        let cfg = ring_cfg(Rule::Accelerated { u: 2, sigma: None }, 5);
        assert!(matches!(
            cfg.check(),
            Err(SimError::Bound(BoundError::UpperBoundTooSmall { .. }))
        ));
    }

    #[test]
    fn step_errors_carry_index() {
        let mut cfg = ring_cfg(Rule::Reaction { gamma: -50.0 }, 5);
        cfg.initial = BeliefMatrix::uniform(3, 3);
        match run_experiment(&cfg) {
            Err(SimError::Step { step: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
