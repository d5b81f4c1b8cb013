//! Empirical log-beliefs next to the theorem bound, in long format.

use std::fmt::Write as _;

use crate::bounds::BoundReport;

use super::results::TrajectoryRow;

pub const PLOT_HEADER: &str = "replicate,agent,hypothesis,k,log_belief,log_bound";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub replicate: usize,
    pub agent: usize,
    pub hypothesis: usize,
    pub k: usize,
    pub log_belief: f64,
    /// `ln` of the capped bound; 0 while the bound is at least 1.
    pub log_bound: f64,
}

/// One block of rows per (replicate, agent, θ ∉ Θ*), ordered by `k`.
pub fn emit_plot_data(rows: &[TrajectoryRow], report: &BoundReport) -> Vec<PlotRow> {
    let m = rows.iter().map(|r| r.hypothesis + 1).max().unwrap_or(0);
    let bad = report.non_optimal(m);
    let mut out: Vec<PlotRow> = rows
        .iter()
        .filter(|r| bad.contains(&r.hypothesis))
        .map(|r| PlotRow {
            replicate: r.replicate,
            agent: r.agent,
            hypothesis: r.hypothesis,
            k: r.k,
            log_belief: r.log_belief,
            log_bound: report.log_belief_bound(r.agent, r.k as u64),
        })
        .collect();
    out.sort_by_key(|r| (r.replicate, r.agent, r.hypothesis, r.k));
    out
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::new();
    out.push_str(PLOT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.replicate, r.agent, r.hypothesis, r.k, r.log_belief, r.log_bound
        );
    }
    out
}
