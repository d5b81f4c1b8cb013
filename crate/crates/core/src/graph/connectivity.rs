use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use super::{lcm, Graph, GraphError, GraphSequence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectivityReport {
    pub connected: bool,
    /// Index `w` of the first window `[wB, (w+1)B - 1]` whose union graph
    /// is not (strongly) connected.
    pub first_failing_window: Option<usize>,
    pub windows_checked: usize,
}

fn strongly_connected(g: &Graph) -> bool {
    let n = g.node_count();
    if n <= 1 {
        return true;
    }
    let mut dg = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| dg.add_node(())).collect();
    for (a, b) in g.edges() {
        dg.add_edge(nodes[a], nodes[b], ());
    }
    tarjan_scc(&dg).len() == 1
}

fn connected_undirected(g: &Graph) -> bool {
    let n = g.node_count();
    let mut uf = UnionFind::<usize>::new(n);
    for (a, b) in g.edges() {
        uf.union(a, b);
    }
    (1..n).all(|i| uf.equiv(0, i))
}

/// Tests that every length-`b` window union of the sequence is connected,
/// strongly connected when the sequence is directed. Only complete windows
/// inside `0..horizon` are checked, and at most one joint period of
/// windows since later windows repeat.
pub fn b_connectivity_check(gs: &GraphSequence, b: usize, horizon: usize) -> Result<ConnectivityReport, GraphError> {
    if b == 0 {
        return Err(GraphError::ZeroWindow);
    }
    let windows = (horizon / b).min(lcm(gs.period(), b) / b).max(1);
    let directed = gs.is_directed();
    for w in 0..windows {
        let mut union = gs.graph_at(w * b).clone();
        for k in w * b + 1..(w + 1) * b {
            union = union.union(gs.graph_at(k));
        }
        let ok = if directed {
            strongly_connected(&union)
        } else {
            connected_undirected(&union)
        };
        if !ok {
            return Ok(ConnectivityReport {
                connected: false,
                first_failing_window: Some(w),
                windows_checked: w + 1,
            });
        }
    }
    Ok(ConnectivityReport {
        connected: true,
        first_failing_window: None,
        windows_checked: windows,
    })
}
