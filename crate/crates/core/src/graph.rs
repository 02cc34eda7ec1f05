//! Synthetic social networks: Barabási–Albert scale-free and Watts–Strogatz
//! small-world generators, plus degree statistics and an edge-list dump.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense node identifier in `0..N`.
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Ba,
    Ws,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ba" => Ok(GraphKind::Ba),
            "ws" => Ok(GraphKind::Ws),
            other => Err(Error::InvalidSpec(format!(
                "network must be ba or ws, got {other:?}"
            ))),
        }
    }
}

/// Recipe for a synthetic network. Generation is a pure function of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n: usize,
    /// Target mean degree for BA; the (even) lattice degree `k` for WS.
    pub target_avg_degree: f64,
    /// Per-edge rewiring probability; ignored for BA.
    pub rewire_prob: f64,
    pub seed: u64,
}

impl GraphSpec {
    pub fn ba(n: usize, target_avg_degree: f64, seed: u64) -> Self {
        GraphSpec {
            kind: GraphKind::Ba,
            n,
            target_avg_degree,
            rewire_prob: 0.0,
            seed,
        }
    }

    pub fn ws(n: usize, k: usize, rewire_prob: f64, seed: u64) -> Self {
        GraphSpec {
            kind: GraphKind::Ws,
            n,
            target_avg_degree: k as f64,
            rewire_prob,
            seed,
        }
    }

    /// Size of the complete seed graph used by the BA generator.
    pub fn ba_seed_size(&self) -> usize {
        (self.target_avg_degree / 2.0).ceil() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.target_avg_degree;
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "average degree must be positive, got {k}"
            )));
        }
        match self.kind {
            GraphKind::Ba => {
                let m0 = self.ba_seed_size();
                if self.n < m0 {
                    return Err(Error::InvalidSpec(format!(
                        "n = {} smaller than BA seed clique of {m0} nodes",
                        self.n
                    )));
                }
            }
            GraphKind::Ws => {
                if (self.n as f64) < k + 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "n = {} too small for lattice degree {k}",
                        self.n
                    )));
                }
                if k.fract() != 0.0 || !(k as usize).is_multiple_of(2) {
                    return Err(Error::InvalidSpec(format!(
                        "WS lattice degree must be an even integer, got {k}"
                    )));
                }
                if k as usize >= self.n {
                    return Err(Error::InvalidSpec(format!(
                        "WS lattice degree {k} must be below n = {}",
                        self.n
                    )));
                }
                if !(0.0..=1.0).contains(&self.rewire_prob) {
                    return Err(Error::InvalidSpec(format!(
                        "rewire probability {} outside [0, 1]",
                        self.rewire_prob
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<NetworkGraph> {
        match self.kind {
            GraphKind::Ba => generate_ba(self),
            GraphKind::Ws => generate_ws(self),
        }
    }
}

/// Immutable undirected simple graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    edge_count: usize,
    max_degree: usize,
}

/// Degree summary of a graph. `avg_degree` is `degree_sum / node_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    pub degrees: Vec<usize>,
    pub degree_sum: usize,
    pub node_count: usize,
    pub avg_degree: f64,
    pub max_degree: usize,
}

impl NetworkGraph {
    /// Builds a graph from an undirected edge list, rejecting self-loops,
    /// parallel edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "graph must have at least one node".into(),
            ));
        }
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut edge_count = 0usize;
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
            edge_count += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * edge_count);
        offsets.push(0);
        let mut max_degree = 0;
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!("parallel edge at node {u}")));
            }
            max_degree = max_degree.max(list.len());
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Ok(NetworkGraph {
            offsets,
            neighbors,
            edge_count,
            max_degree,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor list of `node`.
    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        let u = node as usize;
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        let u = node as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Mean degree `2|E| / N` in the requested scalar type.
    pub fn avg_degree<T: Scalar>(&self) -> T {
        T::from_count(2 * self.edge_count) / T::from_count(self.node_count())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let degrees: Vec<usize> = (0..self.node_count() as NodeId)
            .map(|u| self.degree(u))
            .collect();
        let degree_sum: usize = degrees.iter().sum();
        DegreeStats {
            node_count: degrees.len(),
            avg_degree: degree_sum as f64 / degrees.len() as f64,
            max_degree: degrees.iter().copied().max().unwrap_or(0),
            degree_sum,
            degrees,
        }
    }

    /// Mean local clustering coefficient; nodes of degree < 2 contribute 0.
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.node_count();
        let mut total = 0.0;
        for u in 0..n as NodeId {
            let nb = self.neighbors(u);
            let k = nb.len();
            if k < 2 {
                continue;
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if self.has_edge(a, b) {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
        total / n as f64
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0 as NodeId];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Edge list text: one `u v` line per edge, `u < v`, lines sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 12);
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_edge_list().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Free-function form of [`NetworkGraph::degree_stats`].
pub fn degree_stats(g: &NetworkGraph) -> DegreeStats {
    g.degree_stats()
}

/// Number of edges the `index`-th arriving node brings when the per-arrival
/// half-degree `half` is fractional: a floor/ceil mix whose running mean is `half`.
fn attachment_count(half: f64, index: usize) -> usize {
    let hi = ((index + 1) as f64 * half).floor();
    let lo = (index as f64 * half).floor();
    (hi - lo) as usize
}

/// Barabási–Albert growth from a complete seed graph of
/// `ceil(<k>/2) + 1` nodes. Arrivals attach preferentially, without
/// replacement, alternating between `floor(<k>/2)` and `ceil(<k>/2)` edges.
pub fn generate_ba(spec: &GraphSpec) -> Result<NetworkGraph> {
    if spec.kind != GraphKind::Ba {
        return Err(Error::InvalidSpec(
            "generate_ba called with a WS spec".into(),
        ));
    }
    spec.validate()?;
    let n = spec.n;
    let m0 = spec.ba_seed_size();
    let half = spec.target_avg_degree / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity((n as f64 * half) as usize + m0 * m0);
    // Every edge endpoint, so a uniform pick is a degree-proportional pick.
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..m0 as NodeId {
        for v in (u + 1)..m0 as NodeId {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }

    let mut chosen: Vec<NodeId> = Vec::with_capacity(half.ceil() as usize);
    for (arrival, v) in (m0..n).enumerate() {
        let m = attachment_count(half, arrival).max(1).min(v);
        chosen.clear();
        while chosen.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v as NodeId));
            endpoints.push(t);
            endpoints.push(v as NodeId);
        }
    }
    NetworkGraph::from_edges(n, edges)
}

/// Watts–Strogatz: ring lattice of even degree `k`, each lattice edge
/// rewired with probability `p`. Colliding rewires are redrawn, so the
/// edge count stays `n * k / 2`.
pub fn generate_ws(spec: &GraphSpec) -> Result<NetworkGraph> {
    if spec.kind != GraphKind::Ws {
        return Err(Error::InvalidSpec(
            "generate_ws called with a BA spec".into(),
        ));
    }
    spec.validate()?;
    let n = spec.n;
    let k = spec.target_avg_degree as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v as NodeId);
            adj[v].insert(u as NodeId);
        }
    }

    if spec.rewire_prob > 0.0 {
        for j in 1..=k / 2 {
            for u in 0..n {
                let v = ((u + j) % n) as NodeId;
                if !rng.gen_bool(spec.rewire_prob) {
                    continue;
                }
                // The lattice edge may already be gone if it was rewired from v's side.
                if !adj[u].contains(&v) || adj[u].len() >= n - 1 {
                    continue;
                }
                let w = loop {
                    let w = rng.gen_range(0..n) as NodeId;
                    if w as usize != u && !adj[u].contains(&w) {
                        break w;
                    }
                };
                adj[u].remove(&v);
                adj[v as usize].remove(&(u as NodeId));
                adj[u].insert(w);
                adj[w as usize].insert(u as NodeId);
            }
        }
    }

    let edges = adj.iter().enumerate().flat_map(|(u, set)| {
        set.iter()
            .copied()
            .filter(move |&v| v as usize > u)
            .map(move |v| (u as NodeId, v))
    });
    NetworkGraph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> NetworkGraph {
        NetworkGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_degree_stats() {
        let s = path3().degree_stats();
        assert_eq!(s.degrees, vec![1, 2, 1]);
        assert_eq!((s.degree_sum, s.node_count), (4, 3));
        assert!((s.avg_degree - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.max_degree, 2);
    }

    #[test]
    fn complete_k4_stats() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = NetworkGraph::from_edges(4, edges).unwrap();
        let s = degree_stats(&g);
        assert_eq!(s.degrees, vec![3; 4]);
        assert_eq!(s.avg_degree, 3.0);
        assert_eq!(g.avg_degree::<f32>(), 3.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(NetworkGraph::from_edges(3, [(1, 1)]).is_err());
        assert!(NetworkGraph::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(NetworkGraph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn attachment_counts_alternate() {
        let ms: Vec<usize> = (0..6).map(|i| attachment_count(2.5, i)).collect();
        assert_eq!(ms, vec![2, 3, 2, 3, 2, 3]);
        assert!((0..10).all(|i| attachment_count(3.0, i) == 3));
    }

    #[test]
    fn ba_degenerate_is_seed_clique() {
        let g = generate_ba(&GraphSpec::ba(4, 5.0, 1)).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(g.degree_stats().degrees.iter().all(|&d| d == 3));
    }

    #[test]
    fn ba_too_small_is_rejected() {
        assert!(matches!(
            generate_ba(&GraphSpec::ba(3, 5.0, 1)),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn ba_mean_degree_near_target() {
        let g = generate_ba(&GraphSpec::ba(2000, 5.0, 7)).unwrap();
        let s = g.degree_stats();
        assert!((4.8..=5.2).contains(&s.avg_degree), "{}", s.avg_degree);
        assert_eq!(s.degree_sum, 2 * g.edge_count());
        assert!(g.is_connected());
    }

    #[test]
    fn ba_is_deterministic() {
        let spec = GraphSpec::ba(500, 5.0, 99);
        assert_eq!(generate_ba(&spec).unwrap(), generate_ba(&spec).unwrap());
        let other = GraphSpec { seed: 100, ..spec };
        assert_ne!(
            generate_ba(&other).unwrap(),
            generate_ba(&GraphSpec::ba(500, 5.0, 99)).unwrap()
        );
    }

    #[test]
    fn ws_lattice_without_rewiring() {
        let g = generate_ws(&GraphSpec::ws(2000, 4, 0.0, 3)).unwrap();
        assert_eq!(g.edge_count(), 4000);
        assert!(g.degree_stats().degrees.iter().all(|&d| d == 4));
        assert!(g.has_edge(0, 1999) && g.has_edge(0, 1998) && !g.has_edge(0, 1997));
    }

    #[test]
    fn ws_full_rewiring_conserves_edges() {
        let g = generate_ws(&GraphSpec::ws(2000, 4, 1.0, 3)).unwrap();
        assert_eq!(g.edge_count(), 4000);
        let s = g.degree_stats();
        let var = s
            .degrees
            .iter()
            .map(|&d| (d as f64 - 4.0).powi(2))
            .sum::<f64>()
            / 2000.0;
        assert!(var > 0.0);
    }

    #[test]
    fn ws_rejects_odd_or_large_k() {
        assert!(generate_ws(&GraphSpec::ws(100, 3, 0.1, 0)).is_err());
        assert!(generate_ws(&GraphSpec::ws(4, 4, 0.1, 0)).is_err());
        assert!(generate_ws(&GraphSpec::ws(100, 4, 1.5, 0)).is_err());
    }

    #[test]
    fn edge_list_is_sorted() {
        let g = NetworkGraph::from_edges(4, [(3, 1), (2, 0), (1, 0)]).unwrap();
        assert_eq!(g.to_edge_list(), "0 1\n0 2\n1 3\n");
    }
}
