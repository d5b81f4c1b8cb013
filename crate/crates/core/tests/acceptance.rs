//! Acceptance criteria, one PASS/FAIL line each.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use social_learning::bounds::{
    bound_report, constants_theorem2, constants_theorem3, gamma1_i, gamma2, lambda_theorem1, transient_time,
    BoundInputs, TheoremTag,
};
use social_learning::graph::{
    b_connectivity_check, lazy_metropolis_weights, Graph, GraphSequence, Matrix, WeightSchedule, WeightScheme,
};
use social_learning::hypothesis::{agent_objective, kl_divergence, DistributionVector, LikelihoodModel};
use social_learning::numeric::total_variation;
use social_learning::rules::{
    bayes_then_geometric, degroot_social_update, dual_averaging_closed_form, geometric_then_bayes, BeliefMatrix,
    StepSizes,
};
use social_learning::sim::{
    empirical_decay_rate, mirror_descent_oracle, monte_carlo_validate, run_replicate, ExperimentConfig, Rule,
    Simulation,
};

type Outcome = Result<String, String>;

fn random_distribution(rng: &mut ChaCha8Rng, len: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LikelihoodModel {
    let mut lik = Vec::new();
    let mut truth = Vec::new();
    for _ in 0..n {
        let s = rng.random_range(2..=4);
        lik.push((0..m).map(|_| random_distribution(rng, s, 0.05)).collect());
        truth.push(random_distribution(rng, s, 0.05));
    }
    LikelihoodModel::from_tables(lik, truth).unwrap()
}

fn random_beliefs(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BeliefMatrix {
    BeliefMatrix::from_probabilities((0..n).map(|_| random_distribution(rng, m, 0.01)).collect()).unwrap()
}

fn connected_graph(n: usize) -> Graph {
    if n <= 3 {
        Graph::complete(n)
    } else {
        Graph::ring(n)
    }
}

fn config(model: LikelihoodModel, graphs: GraphSequence, rule: Rule, horizon: usize, seed: u64) -> ExperimentConfig {
    let weights = WeightSchedule::from_graphs(&graphs, WeightScheme::LazyMetropolis, None).ok();
    let initial = BeliefMatrix::uniform(model.agents(), model.hypotheses());
    ExperimentConfig {
        model,
        graphs,
        weights,
        rule,
        initial,
        horizon,
        replicates: 1,
        rho: 0.1,
        seed,
        stride: 1,
    }
}

fn check_simplex(b: &BeliefMatrix) -> Result<(), String> {
    for i in 0..b.agents() {
        let row = b.row(i);
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-10 || row.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(format!("agent {i}: row {row:?} sums to {s}"));
        }
    }
    Ok(())
}

fn simplex_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut steps = 0;
    let per_instance = 50;
    while steps < 10_000 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(2..=6);
        let model = random_model(&mut rng, n, m);
        let rules = [
            Rule::Bayes,
            Rule::Reaction {
                gamma: rng.random_range(0.0..1.0),
            },
            Rule::Degroot,
            Rule::BayesThenGeometric,
            Rule::GeometricThenBayes,
            Rule::Accelerated { u: n, sigma: None },
            Rule::PushSum,
            Rule::Gossip {
                step_size: StepSizes::Constant(1.0),
            },
        ];
        for rule in rules {
            let mut cfg = config(
                model.clone(),
                GraphSequence::fixed(connected_graph(n)),
                rule,
                per_instance,
                0,
            );
            cfg.initial = random_beliefs(&mut rng, n, m);
            let mut sim = Simulation::new(&cfg, rng.random()).map_err(|e| e.to_string())?;
            for _ in 0..per_instance {
                sim.step().map_err(|e| format!("{}: {e}", cfg.rule.name()))?;
                check_simplex(sim.beliefs()).map_err(|e| format!("{} step {}: {e}", cfg.rule.name(), sim.k()))?;
                steps += 1;
            }
        }
    }
    Ok(format!("{steps} steps over 8 rules"))
}

fn mirror_descent_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for instance in 0..1000 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(2..=6);
        let model = random_model(&mut rng, n, m);
        let beliefs = random_beliefs(&mut rng, n, m);
        let a = Matrix::from_rows((0..n).map(|_| random_distribution(&mut rng, n, 0.0)).collect()).unwrap();
        let signals: Vec<usize> = (0..n).map(|i| rng.random_range(0..model.agent(i).signals())).collect();
        let next = geometric_then_bayes(&beliefs, &signals, &model, &a).map_err(|e| e.to_string())?;
        for i in 0..n {
            let q = mirror_descent_oracle(&beliefs, i, signals[i], a.row(i), &model)
                .map_err(|e| format!("instance {instance}: {e}"))?;
            let tv = total_variation(q.as_slice(), &next.row(i));
            worst = worst.max(tv);
            if tv > 1e-8 {
                return Err(format!("instance {instance}, agent {i}: TV {tv:e}"));
            }
        }
    }
    Ok(format!("1000 instances, max TV {worst:.2e}"))
}

fn gossip_closed_form() -> Outcome {
    let model = LikelihoodModel::from_tables(
        vec![
            vec![vec![0.6, 0.4], vec![0.3, 0.7], vec![0.5, 0.5]],
            vec![vec![0.2, 0.8], vec![0.4, 0.6], vec![0.7, 0.3]],
            vec![vec![0.5, 0.5], vec![0.9, 0.1], vec![0.25, 0.75]],
        ],
        vec![vec![0.6, 0.4], vec![0.3, 0.7], vec![0.5, 0.5]],
    )
    .unwrap();
    let step_size = StepSizes::Constant(1.0);
    let mut cfg = config(
        model,
        GraphSequence::fixed(Graph::complete(3)),
        Rule::Gossip { step_size },
        50,
        17,
    );
    cfg.initial =
        BeliefMatrix::from_probabilities(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.2, 0.6], vec![1.0 / 3.0; 3]]).unwrap();
    let log = run_replicate(&cfg, 0).map_err(|e| e.to_string())?;
    if log.activations.len() != 50 {
        return Err(format!("{} activations logged", log.activations.len()));
    }
    let mut worst: f64 = 0.0;
    for snap in &log.snapshots {
        let closed = dual_averaging_closed_form(
            &cfg.initial,
            &log.signals,
            &log.activations,
            &cfg.model,
            snap.k,
            step_size,
        );
        for i in 0..3 {
            let tv = total_variation(&closed.row(i), &snap.beliefs.row(i));
            worst = worst.max(tv);
            if tv > 1e-10 {
                return Err(format!("k = {}, agent {i}: TV {tv:e}", snap.k));
            }
        }
    }
    Ok(format!("51 states, max TV {worst:.2e}"))
}

/// Three agents on a ring. Agents 0 and 1 each confuse θ0 with a different
/// hypothesis; agent 2 separates θ0 from both.
fn theorem1_instance() -> LikelihoodModel {
    let good = vec![0.8, 0.2];
    let bad = vec![0.2, 0.8];
    LikelihoodModel::from_tables(
        vec![
            vec![good.clone(), bad.clone(), good.clone()],
            vec![good.clone(), good.clone(), bad.clone()],
            vec![good.clone(), bad.clone(), bad.clone()],
        ],
        vec![good; 3],
    )
    .unwrap()
}

fn theorem1_validation() -> Outcome {
    let model = theorem1_instance();
    let n = model.agents();
    let mut cfg = config(
        model,
        GraphSequence::fixed(Graph::ring(n)),
        Rule::GeometricThenBayes,
        1,
        2024,
    );
    let eta = cfg.weights.as_ref().unwrap().eta();
    let mut inputs = BoundInputs::new(&cfg.model, &cfg.initial, TheoremTag::Theorem1, 0.1);
    inputs.eta = Some(eta);
    inputs.lazy_metropolis = true;
    let report = bound_report(&inputs).map_err(|e| e.to_string())?;
    let n_rho = report.n_rho.ok_or("N(rho) not representable")?;
    let crossing = report
        .gamma1
        .iter()
        .map(|g| 2.0 * g / report.gamma2)
        .fold(0.0, f64::max);
    cfg.horizon = (1.5 * (n_rho as f64).max(crossing)).ceil() as usize;
    cfg.replicates = 200;
    let s = monte_carlo_validate(&cfg, &report).map_err(|e| e.to_string())?;
    let detail = format!(
        "gamma2 {:.4}, alpha {:.2}, N {n_rho}, horizon {}, violations {}/{} (Wilson [{:.4}, {:.4}], rho {})",
        report.gamma2, report.alpha, cfg.horizon, s.violations, s.replicates, s.wilson_low, s.wilson_high, s.rho
    );
    if n_rho > 2000 || report.gamma2 < 0.3 || report.alpha < 0.2 {
        return Err(format!("instance outside the required regime: {detail}"));
    }
    if s.checked_window.is_none() || !s.consistent {
        return Err(detail);
    }
    Ok(detail)
}

fn asymptotic_rate() -> Outcome {
    let truth = vec![0.6, 0.4];
    let rows = vec![vec![0.6, 0.4], vec![0.5, 0.5], vec![0.4, 0.6], vec![0.7, 0.3]];
    let model = LikelihoodModel::from_tables(vec![rows.clone()], vec![truth.clone()]).unwrap();
    let f = DistributionVector::new(truth).unwrap();
    let star = kl_divergence(&f, &DistributionVector::new(rows[0].clone()).unwrap()).unwrap();
    let mut cfg = config(model, GraphSequence::fixed(Graph::complete(1)), Rule::Bayes, 50_000, 0);
    cfg.stride = 10;
    let mut rates = vec![Vec::new(); rows.len()];
    for seed in 0..20 {
        cfg.seed = 1000 + seed;
        let log = run_replicate(&cfg, 0).map_err(|e| e.to_string())?;
        for (t, r) in rates.iter_mut().enumerate().skip(1) {
            r.push(empirical_decay_rate(&log, 0, t, 1000).ok_or("no decay fit")?);
        }
    }
    let mut parts = Vec::new();
    let mut ok = true;
    for t in 1..rows.len() {
        let expected = kl_divergence(&f, &DistributionVector::new(rows[t].clone()).unwrap()).unwrap() - star;
        let r = &mut rates[t];
        r.sort_by(f64::total_cmp);
        let median = 0.5 * (r[9] + r[10]);
        let rel = (median - expected).abs() / expected;
        ok &= rel <= 0.15;
        parts.push(format!("theta{t} {median:.5} vs {expected:.5} ({:.1}%)", 100.0 * rel));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sigma_zero_degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 5;
    let model = random_model(&mut rng, n, 4);
    let graphs = GraphSequence::fixed(Graph::path(n));
    let acc = config(
        model.clone(),
        graphs.clone(),
        Rule::Accelerated { u: n, sigma: Some(0.0) },
        500,
        99,
    );
    let gtb = config(model, graphs, Rule::GeometricThenBayes, 500, 99);
    let a = run_replicate(&acc, 0).map_err(|e| e.to_string())?;
    let b = run_replicate(&gtb, 0).map_err(|e| e.to_string())?;
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        let same = x
            .beliefs
            .log_values()
            .iter()
            .zip(y.beliefs.log_values())
            .all(|(p, q)| p.to_bits() == q.to_bits());
        if !same {
            return Err(format!("first difference at k = {}", x.k));
        }
    }
    Ok(format!("{} states bit-identical", a.snapshots.len()))
}

/// `b` graphs whose union contains a random Hamiltonian cycle, plus a few
/// extra edges.
fn random_directed_sequence(rng: &mut ChaCha8Rng, n: usize, b: usize) -> GraphSequence {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = vec![Vec::new(); b];
    for k in 0..n {
        edges[rng.random_range(0..b)].push((order[k], order[(k + 1) % n]));
    }
    for e in edges.iter_mut() {
        for _ in 0..rng.random_range(0..n) {
            let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
            if x != y {
                e.push((x, y));
            }
        }
    }
    GraphSequence::periodic(edges.into_iter().map(|e| Graph::directed(n, e).unwrap()).collect()).unwrap()
}

fn push_sum_mass() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let n = rng.random_range(2..=6);
        let b = rng.random_range(1..=3);
        let graphs = random_directed_sequence(&mut rng, n, b);
        if !b_connectivity_check(&graphs, b, 1000)
            .map_err(|e| e.to_string())?
            .connected
        {
            return Err(format!("instance {instance} is not {b}-strongly-connected"));
        }
        let model = random_model(&mut rng, n, 3);
        let cfg = config(model, graphs, Rule::PushSum, 1000, instance);
        let mut sim = Simulation::new(&cfg, instance).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            sim.step().map_err(|e| e.to_string())?;
            let total: f64 = sim.push_sum_weights().unwrap().iter().sum();
            worst = worst.max((total - n as f64).abs());
            if (total - n as f64).abs() > 1e-12 {
                return Err(format!("instance {instance}, k = {}: sum y = {total}", sim.k()));
            }
        }
    }
    for (name, g) in [
        ("directed cycle", Graph::directed_cycle(6)),
        ("ring", Graph::ring(5)),
        ("complete", Graph::complete(4)),
    ] {
        let n = g.node_count();
        let model = random_model(&mut rng, n, 3);
        let cfg = config(model, GraphSequence::fixed(g), Rule::PushSum, 1000, 3);
        let mut sim = Simulation::new(&cfg, 3).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            sim.step().map_err(|e| e.to_string())?;
            if sim.push_sum_weights().unwrap().iter().any(|&y| y != 1.0) {
                return Err(format!("{name}: y != 1 at k = {}", sim.k()));
            }
        }
    }
    Ok(format!(
        "20 random sequences, max |sum y - n| {worst:.1e}; regular graphs keep y = 1"
    ))
}

fn consensus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 4;
    let m = 5;
    let one = random_model(&mut rng, 1, m);
    let lik: Vec<Vec<Vec<f64>>> = vec![one.agent(0).rows().to_vec(); n];
    let model = LikelihoodModel::from_tables(lik, vec![one.truth(0).to_vec(); n]).unwrap();
    let a = lazy_metropolis_weights(&Graph::ring(n)).unwrap();
    let row = random_distribution(&mut rng, m, 0.01);
    let start = BeliefMatrix::from_probabilities(vec![row; n]).unwrap();
    type Step = fn(
        &BeliefMatrix,
        &[usize],
        &LikelihoodModel,
        &Matrix,
    ) -> Result<BeliefMatrix, social_learning::rules::UpdateError>;
    let rules: [(&str, Step); 3] = [
        ("degroot", degroot_social_update),
        ("bayes-then-geometric", bayes_then_geometric),
        ("geometric-then-bayes", geometric_then_bayes),
    ];
    let signal_count = model.agent(0).signals();
    let mut worst: f64 = 0.0;
    for (name, rule) in rules {
        let mut b = start.clone();
        for k in 1..=1000 {
            let s = rng.random_range(0..signal_count);
            b = rule(&b, &vec![s; n], &model, &a).map_err(|e| format!("{name}: {e}"))?;
            let first = b.row(0);
            for i in 1..n {
                let d = first
                    .iter()
                    .zip(b.row(i))
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(d);
                if d > 1e-12 {
                    return Err(format!("{name}: agent {i} differs by {d:e} at k = {k}"));
                }
            }
        }
    }
    Ok(format!("3 rules x 1000 steps, max difference {worst:.1e}"))
}

fn constant_regression() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };
    let single =
        LikelihoodModel::from_tables(vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]]], vec![vec![1.0, 0.0]]).unwrap();
    check("gamma2 n=1", gamma2(&single).unwrap(), std::f64::consts::LN_2, 1e-15);
    let rows = vec![vec![0.7, 0.3], vec![0.4, 0.6]];
    let pair = LikelihoodModel::from_tables(vec![rows.clone(), rows], vec![vec![0.7, 0.3]; 2]).unwrap();
    check("gamma2 n=2", gamma2(&pair).unwrap(), 0.183_786_897_386_812_29, 1e-15);

    let three = LikelihoodModel::from_tables(
        vec![vec![vec![0.5, 0.5], vec![0.6, 0.4], vec![0.7, 0.3]]],
        vec![vec![0.5, 0.5]],
    )
    .unwrap();
    let gap = agent_objective(&three, 0, 2);
    check(
        "gamma1 n=1",
        gamma1_i(&three, &BeliefMatrix::uniform(1, 3), 0, 0.9, 0.3, None).unwrap(),
        gap,
        1e-15,
    );
    let g1 = gamma1_i(&pair, &BeliefMatrix::uniform(2, 2), 0, 0.984375, 0.1, None).unwrap();
    check("gamma1 n=2", g1, 817.351_333_883_976_1, 1e-9);

    check("lambda n=2", lambda_theorem1(0.25, 2, 1), 0.984375, 0.0);
    check(
        "lambda n=3 B=2",
        lambda_theorem1(1.0 / 6.0, 3, 2),
        0.997_682_499_781_553_9,
        1e-15,
    );

    let t2 = constants_theorem2(3, None).unwrap();
    check("sigma U=3", t2.sigma, 13.0 / 14.0, 1e-15);
    check("lambda U=3", t2.lambda, 53.0 / 54.0, 1e-15);
    let t2 = constants_theorem2(1, None).unwrap();
    check("sigma U=1", t2.sigma, 0.8, 1e-15);
    check("lambda U=1", t2.lambda, 17.0 / 18.0, 1e-15);

    let reg = constants_theorem3(2, 1, true).unwrap();
    check("C regular", reg.c, std::f64::consts::SQRT_2, 0.0);
    check("lambda regular", reg.lambda, 0.96875, 1e-15);
    check("delta regular", reg.delta, 1.0, 0.0);
    let gen = constants_theorem3(2, 1, false).unwrap();
    check("C general", gen.c, 4.0, 0.0);
    check("lambda general", gen.lambda, 0.75, 1e-15);
    check("delta general", gen.delta, 0.25, 1e-15);
    check("lambda n=1", constants_theorem3(1, 1, false).unwrap().lambda, 0.0, 0.0);

    // integers recomputed with 50-digit arithmetic
    let n = |tag, n, delta| {
        transient_time(tag, 0.05, 0.1, 0.05, n, delta)
            .map(|v| v as f64)
            .unwrap_or(f64::NAN)
    };
    check("N theorem-1", n(TheoremTag::Theorem1, 1, 1.0), 50827.0, 0.0);
    check(
        "N theorem-3 delta=1",
        n(TheoremTag::Theorem3Regular, 1, 1.0),
        50827.0,
        0.0,
    );
    check("N theorem-2", n(TheoremTag::Theorem2, 3, 1.0), 1_372_298.0, 0.0);
    check(
        "N theorem-3 delta=1/4",
        n(TheoremTag::Theorem3General, 3, 0.25),
        813_215.0,
        0.0,
    );
    let limit = transient_time(TheoremTag::Theorem1, 1.0 - 1e-15, 0.1, 0.05, 1, 1.0).unwrap();
    check("N rho->1", limit as f64, 2.0, 0.0);

    if failures.is_empty() {
        Ok("25 values".into())
    } else {
        Err(failures.join("; "))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "model": {
    "likelihoods": [
      [[0.8, 0.2], [0.2, 0.8], [0.8, 0.2]],
      [[0.8, 0.2], [0.8, 0.2], [0.2, 0.8]],
      [[0.8, 0.2], [0.2, 0.8], [0.2, 0.8]]
    ],
    "truth": [[0.8, 0.2], [0.8, 0.2], [0.8, 0.2]]
  },
  "graph": {"kind": "ring", "n": 3},
  "rule": {"name": "geometric-then-bayes"},
  "run": {"horizon": 300, "replicates": 4, "seed": 11}
}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_social-learning"))
            .arg("run")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--quiet")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run {run} exited with {status}"));
        }
        outputs.push(std::fs::read(out.join("trajectory.csv")).map_err(|e| e.to_string())?);
    }
    if outputs[0] == outputs[1] && !outputs[0].is_empty() {
        Ok(format!("{} bytes identical", outputs[0].len()))
    } else {
        Err("trajectory files differ".into())
    }
}

struct Criterion {
    id: usize,
    name: &'static str,
    check: fn() -> Outcome,
    budget: Option<Duration>,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "simplex preservation",
            check: simplex_preservation,
            budget: Some(Duration::from_secs(10)),
        },
        Criterion {
            id: 2,
            name: "mirror-descent equivalence",
            check: mirror_descent_equivalence,
            budget: Some(Duration::from_secs(60)),
        },
        Criterion {
            id: 3,
            name: "gossip closed form",
            check: gossip_closed_form,
            budget: None,
        },
        Criterion {
            id: 4,
            name: "theorem 1 bound validation",
            check: theorem1_validation,
            budget: None,
        },
        Criterion {
            id: 5,
            name: "asymptotic decay rate",
            check: asymptotic_rate,
            budget: None,
        },
        Criterion {
            id: 6,
            name: "sigma = 0 degeneration",
            check: sigma_zero_degeneration,
            budget: None,
        },
        Criterion {
            id: 7,
            name: "push-sum mass conservation",
            check: push_sum_mass,
            budget: None,
        },
        Criterion {
            id: 8,
            name: "consensus",
            check: consensus,
            budget: None,
        },
        Criterion {
            id: 9,
            name: "theorem constants",
            check: constant_regression,
            budget: None,
        },
        Criterion {
            id: 10,
            name: "determinism",
            check: determinism,
            budget: None,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let mut outcome = (c.check)();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(budget)) = (&outcome, c.budget) {
            if elapsed > budget {
                outcome = Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {}: {detail} [{elapsed:.2?}]", c.id, c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {}: {detail} [{elapsed:.2?}]", c.id, c.name);
            }
        }
    }
    println!("{} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
