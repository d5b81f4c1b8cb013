//! Experiment configuration documents.

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, BoundError, BoundInputs, BoundReport, LogBase, TheoremTag};
use crate::graph::{
    b_connectivity_check, validate_weight_schedule, ConnectivityReport, Graph, GraphSequence, Matrix, WeightReport,
    WeightSchedule, WeightScheme,
};
use crate::hypothesis::{validate_model, HypothesisSpace, LikelihoodModel, ModelReport, SignalSpace};
use crate::rules::BeliefMatrix;
use crate::sim::{ExperimentConfig, Rule};

use super::IoError;

pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_REPLICATES: usize = 1;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_STRIDE: usize = 1;
pub const DEFAULT_RHO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Vec<String>>,
    /// `likelihoods[i][θ][s]`.
    pub likelihoods: Vec<Vec<Vec<f64>>>,
    /// `truth[i][s]`.
    pub truth: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Initial beliefs, one row per agent; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSection {
    Ring {
        n: usize,
    },
    Path {
        n: usize,
    },
    Complete {
        n: usize,
    },
    DirectedCycle {
        n: usize,
    },
    Static {
        n: usize,
        #[serde(default)]
        directed: bool,
        edges: Vec<(usize, usize)>,
    },
    Periodic {
        n: usize,
        #[serde(default)]
        directed: bool,
        edges: Vec<Vec<(usize, usize)>>,
    },
    /// One uniformly drawn edge of `base` per step.
    Gossip {
        base: Box<GraphSection>,
        seed: u64,
    },
}

impl GraphSection {
    /// Expands to an explicit sequence; gossip draws cover `horizon` steps.
    pub fn build(&self, horizon: usize) -> Result<GraphSequence, IoError> {
        let g = |r: Result<Graph, crate::graph::GraphError>| r.map_err(|e| IoError::Semantic(format!("graph: {e}")));
        Ok(match self {
            GraphSection::Ring { n } => GraphSequence::fixed(Graph::ring(*n)),
            GraphSection::Path { n } => GraphSequence::fixed(Graph::path(*n)),
            GraphSection::Complete { n } => GraphSequence::fixed(Graph::complete(*n)),
            GraphSection::DirectedCycle { n } => GraphSequence::fixed(Graph::directed_cycle(*n)),
            GraphSection::Static { n, directed, edges } => GraphSequence::fixed(g(make(*n, *directed, edges))?),
            GraphSection::Periodic { n, directed, edges } => {
                let graphs = edges
                    .iter()
                    .map(|e| g(make(*n, *directed, e)))
                    .collect::<Result<Vec<_>, _>>()?;
                GraphSequence::periodic(graphs).map_err(|e| IoError::Semantic(format!("graph: {e}")))?
            }
            GraphSection::Gossip { base, seed } => {
                let b = base.build(horizon)?;
                if !b.is_static() {
                    return Err(IoError::Semantic("gossip base graph must be static".into()));
                }
                GraphSequence::gossip(b.graph_at(0), *seed, horizon.max(1))
                    .map_err(|e| IoError::Semantic(format!("graph: {e}")))?
            }
        })
    }
}

fn make(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Graph, crate::graph::GraphError> {
    if directed {
        Graph::directed(n, edges.iter().copied())
    } else {
        Graph::undirected(n, edges.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<WeightScheme>,
    /// Explicit periodic matrices, used instead of a scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Matrix>>,
    /// Floor on positive entries; the smallest positive entry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require_doubly_stochastic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Connectivity window `B`; the graph period when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_base: Option<LogBase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantified_set: Option<Vec<usize>>,
    /// Proceed despite failed assumption checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub model: ModelSection,
    pub graph: GraphSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSection>,
    pub rule: Rule,
    #[serde(default = "empty_run")]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn empty_run() -> RunSection {
    RunSection {
        horizon: None,
        replicates: None,
        seed: None,
        stride: None,
        rho: None,
        b: None,
        log_base: None,
        quantified_set: None,
        waive: None,
    }
}

/// Parses a JSON document; schema errors carry the JSON path.
pub fn parse_config(text: &str) -> Result<ConfigDocument, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ConfigDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let mut message = e.inner().to_string();
        if message.contains("missing field `u`") {
            message =
                format!("the accelerated rule requires an upper bound u >= n on the number of agents ({message})");
        }
        IoError::Schema { path, message }
    })?;
    check_rule_keys(text)?;
    if let Rule::Accelerated { u, .. } = doc.rule {
        let n = doc.model.likelihoods.len();
        if u < n {
            return Err(IoError::Schema {
                path: "rule.u".into(),
                message: format!("the accelerated rule requires u >= n (u = {u}, n = {n})"),
            });
        }
    }
    Ok(doc)
}

/// Unit variants of an internally tagged enum accept any extra key, so the
/// rule's keys are checked by hand.
fn check_rule_keys(text: &str) -> Result<(), IoError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    let Some(rule) = v.get("rule").and_then(|r| r.as_object()) else {
        return Ok(());
    };
    let allowed: &[&str] = match rule.get("name").and_then(|n| n.as_str()) {
        Some("reaction") => &["gamma"],
        Some("accelerated") => &["u", "sigma"],
        Some("gossip") => &["step_size"],
        _ => &[],
    };
    match rule.keys().find(|k| *k != "name" && !allowed.contains(&k.as_str())) {
        Some(k) => Err(IoError::Schema {
            path: format!("rule.{k}"),
            message: format!("unknown field `{k}`"),
        }),
        None => Ok(()),
    }
}

pub fn serialize_config(doc: &ConfigDocument) -> String {
    serde_json::to_string_pretty(doc).expect("config serializes")
}

impl ConfigDocument {
    /// Rules whose theorem assumes doubly stochastic weights.
    fn doubly_stochastic_default(&self) -> bool {
        matches!(self.rule, Rule::GeometricThenBayes | Rule::Accelerated { .. })
    }

    fn graph_period(&self) -> usize {
        match &self.graph {
            GraphSection::Periodic { edges, .. } => edges.len().max(1),
            GraphSection::Gossip { .. } => 1,
            _ => 1,
        }
    }

    /// Every default made explicit. Parsing the serialized result gives the
    /// same document back.
    pub fn resolved(&self) -> ConfigDocument {
        let mut d = self.clone();
        let n = d.model.likelihoods.len();
        let m = d.model.likelihoods.first().map_or(0, Vec::len);
        if d.model.hypotheses.is_none() {
            d.model.hypotheses = Some((0..m).map(|t| t.to_string()).collect());
        }
        if d.model.initial.is_none() {
            d.model.initial = Some(vec![vec![1.0 / m as f64; m]; n]);
        }
        if d.rule.needs_weights() || d.weights.is_some() {
            let doubly = d.doubly_stochastic_default();
            let w = d.weights.get_or_insert(WeightsSection {
                scheme: None,
                matrices: None,
                eta: None,
                require_doubly_stochastic: None,
            });
            if w.scheme.is_none() && w.matrices.is_none() {
                w.scheme = Some(WeightScheme::LazyMetropolis);
            }
            w.require_doubly_stochastic.get_or_insert(doubly);
        }
        let period = self.graph_period();
        let r = &mut d.run;
        r.horizon.get_or_insert(DEFAULT_HORIZON);
        r.replicates.get_or_insert(DEFAULT_REPLICATES);
        r.seed.get_or_insert(DEFAULT_SEED);
        r.stride.get_or_insert(DEFAULT_STRIDE);
        r.rho.get_or_insert(DEFAULT_RHO);
        r.b.get_or_insert(period);
        r.log_base.get_or_insert(LogBase::Natural);
        r.waive.get_or_insert(false);
        d
    }

    /// Assumption requirements switched off in the document.
    pub fn waivers(&self) -> Vec<String> {
        let mut out = Vec::new();
        let requested = self.weights.as_ref().and_then(|w| w.require_doubly_stochastic);
        if self.doubly_stochastic_default() && requested == Some(false) {
            out.push("doubly-stochastic".to_string());
        }
        if self.run.waive == Some(true) {
            out.push("assumptions".to_string());
        }
        out
    }

    /// Builds the simulation inputs from the resolved document.
    pub fn build(&self) -> Result<Experiment, IoError> {
        let d = self.resolved();
        let sem = |s: String| IoError::Semantic(s);
        let n = d.model.likelihoods.len();
        if n == 0 {
            return Err(sem("model.likelihoods: at least one agent is required".into()));
        }
        let labels = d.model.hypotheses.clone().expect("resolved");
        let hyp = HypothesisSpace::new(labels).map_err(|e| sem(format!("model.hypotheses: {e}")))?;
        let sizes: Vec<usize> = d.model.truth.iter().map(Vec::len).collect();
        let signals = SignalSpace::indexed(&sizes).map_err(|e| sem(format!("model.truth: {e}")))?;
        let mut model = LikelihoodModel::new(hyp, signals, d.model.likelihoods.clone(), d.model.truth.clone())
            .map_err(|e| sem(format!("model: {e}")))?;
        if let Some(a) = d.model.alpha {
            model = model.with_declared_alpha(a);
        }
        let initial = BeliefMatrix::from_probabilities(d.model.initial.clone().expect("resolved"))
            .map_err(|e| sem(format!("model.initial: {e}")))?;

        let run = &d.run;
        let horizon = run.horizon.expect("resolved");
        let graphs = d.graph.build(horizon)?;
        if graphs.node_count() != n {
            return Err(sem(format!(
                "graph has {} nodes, model has {n} agents",
                graphs.node_count()
            )));
        }
        let weights = match &d.weights {
            None => None,
            Some(w) => Some(
                match (&w.scheme, &w.matrices) {
                    (Some(_), Some(_)) => return Err(sem("weights: give either scheme or matrices, not both".into())),
                    (Some(s), None) => WeightSchedule::from_graphs(&graphs, *s, w.eta),
                    (None, Some(ms)) => WeightSchedule::explicit(ms.clone(), w.eta),
                    (None, None) => unreachable!("resolved"),
                }
                .map_err(|e| sem(format!("weights: {e}")))?,
            ),
        };
        let sim = ExperimentConfig {
            model,
            graphs,
            weights,
            rule: d.rule.clone(),
            initial,
            horizon,
            replicates: run.replicates.expect("resolved"),
            rho: run.rho.expect("resolved"),
            seed: run.seed.expect("resolved"),
            stride: run.stride.expect("resolved"),
        };
        sim.check().map_err(|e| sem(e.to_string()))?;
        Ok(Experiment { doc: d, sim })
    }
}

/// A resolved document and the simulation it describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub doc: ConfigDocument,
    pub sim: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub model: ModelReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightReport>,
    pub connectivity: ConnectivityReport,
    pub b: usize,
    pub theorem: Option<TheoremTag>,
    /// Problems found while computing the theorem constants.
    pub bound_issues: Vec<String>,
    pub passed: bool,
}

impl Experiment {
    pub fn b(&self) -> usize {
        self.doc.run.b.expect("resolved")
    }

    /// Theorem 3 case (2) needs every graph regular and `B = 1`.
    pub fn theorem(&self) -> Option<TheoremTag> {
        let regular = self.b() == 1 && self.sim.graphs.graphs().iter().all(Graph::is_regular);
        self.sim.rule.theorem(regular)
    }

    pub fn bounds(&self) -> Option<Result<BoundReport, BoundError>> {
        let tag = self.theorem()?;
        let mut inp = BoundInputs::new(&self.sim.model, &self.sim.initial, tag, self.sim.rho);
        inp.eta = self.sim.weights.as_ref().map(WeightSchedule::eta);
        inp.b = self.b();
        inp.u = match self.sim.rule {
            Rule::Accelerated { u, .. } => Some(u),
            _ => None,
        };
        inp.quantified = self.doc.run.quantified_set.clone();
        inp.lazy_metropolis = self
            .doc
            .weights
            .as_ref()
            .is_some_and(|w| w.scheme == Some(WeightScheme::LazyMetropolis));
        inp.base = self.doc.run.log_base.expect("resolved");
        Some(bound_report(&inp))
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let s = &self.sim;
        let model = validate_model(&s.model);
        let doubly = self
            .doc
            .weights
            .as_ref()
            .and_then(|w| w.require_doubly_stochastic)
            .unwrap_or(false);
        let weights = s
            .weights
            .as_ref()
            .map(|w| validate_weight_schedule(w, &s.graphs, s.horizon.max(1), doubly));
        let b = self.b();
        let connectivity = b_connectivity_check(&s.graphs, b, s.horizon.max(b)).unwrap_or(ConnectivityReport {
            connected: false,
            first_failing_window: Some(0),
            windows_checked: 0,
        });
        let theorem = self.theorem();
        let bound_issues = match self.bounds() {
            Some(Err(e)) => vec![e.to_string()],
            _ => Vec::new(),
        };
        let passed = model.is_valid()
            && weights.as_ref().is_none_or(WeightReport::is_valid)
            && (connectivity.connected || !needs_connectivity(&s.rule))
            && bound_issues.is_empty();
        AssumptionReport {
            model,
            weights,
            connectivity,
            b,
            theorem,
            bound_issues,
            passed,
        }
    }
}

fn needs_connectivity(rule: &Rule) -> bool {
    !matches!(rule, Rule::Bayes | Rule::Reaction { .. })
}
