//! Network graphs: generators, path-length and clustering metrics, and the
//! degree law for holding a target average path length.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Graphs up to this size get exact all-pairs path lengths.
pub const EXACT_PATH_LIMIT: usize = 10_000;

pub const EDGE_LIST_MAGIC: &str = "soen-topology v1";

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("infeasible degree: {requested} distinct targets requested but only {available} available")]
    InfeasibleDegree { requested: usize, available: usize },
    #[error("invalid topology parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(u32, u32),
    #[error("edge {src} -> {dst} references a node outside 0..{n}")]
    NodeOutOfRange { src: u32, dst: u32, n: usize },
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("edge list line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> TopologyError {
    TopologyError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Directed graph in compressed sparse row form. Out-edges of every node are
/// sorted by target, so edge indices are canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n_nodes: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    seed: u64,
}

impl Topology {
    /// Builds a topology from per-node out-edge lists.
    pub fn from_adjacency(adjacency: Vec<Vec<(u32, f64)>>, seed: u64) -> Result<Self, TopologyError> {
        let n = adjacency.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (src, mut out) in adjacency.into_iter().enumerate() {
            let src = src as u32;
            out.sort_by_key(|&(dst, _)| dst);
            for (i, &(dst, w)) in out.iter().enumerate() {
                if dst as usize >= n {
                    return Err(TopologyError::NodeOutOfRange { src, dst, n });
                }
                if dst == src {
                    return Err(TopologyError::SelfLoop(src));
                }
                if i > 0 && out[i - 1].0 == dst {
                    return Err(TopologyError::DuplicateEdge(src, dst));
                }
                targets.push(dst);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            n_nodes: n,
            offsets,
            targets,
            weights,
            seed,
        })
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)], weight: f64) -> Result<Self, TopologyError> {
        let mut adj = vec![Vec::new(); n];
        for &(s, d) in edges {
            if s as usize >= n {
                return Err(TopologyError::NodeOutOfRange { src: s, dst: d, n });
            }
            adj[s as usize].push((d, weight));
        }
        Self::from_adjacency(adj, 0)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Edge index range of `node`'s out-edges.
    pub fn out_range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    pub fn targets_of(&self, node: usize) -> &[u32] {
        &self.targets[self.out_range(node)]
    }

    pub fn target(&self, edge: usize) -> u32 {
        self.targets[edge]
    }

    pub fn weight(&self, edge: usize) -> f64 {
        self.weights[edge]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Source node of an edge index.
    pub fn source(&self, edge: usize) -> u32 {
        (self.offsets.partition_point(|&o| o <= edge) - 1) as u32
    }

    /// All edges as `(src, dst, weight)` in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.n_nodes).flat_map(move |s| {
            self.out_range(s)
                .map(move |e| (s as u32, self.targets[e], self.weights[e]))
        })
    }

    pub fn edge_index(&self, src: u32, dst: u32) -> Option<usize> {
        let r = self.out_range(src as usize);
        self.targets[r.clone()]
            .binary_search(&dst)
            .ok()
            .map(|i| r.start + i)
    }

    pub fn set_uniform_weight(&mut self, weight: f64) {
        self.weights.iter_mut().for_each(|w| *w = weight);
    }

    /// Incoming edge indices per node, in ascending edge order.
    pub fn incoming(&self) -> Vec<Vec<u32>> {
        let mut inc = vec![Vec::new(); self.n_nodes];
        for (e, &d) in self.targets.iter().enumerate() {
            inc[d as usize].push(e as u32);
        }
        inc
    }

    /// Symmetrized neighbor lists, sorted and deduplicated.
    pub fn undirected_neighbors(&self) -> Vec<Vec<u32>> {
        let mut nb = vec![Vec::new(); self.n_nodes];
        for (s, d, _) in self.edges() {
            nb[s as usize].push(d);
            nb[d as usize].push(s);
        }
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
        }
        nb
    }

    pub fn out_degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for n in 0..self.n_nodes {
            *h.entry(self.out_degree(n)).or_insert(0) += 1;
        }
        h
    }

    /// Writes the edge-list format: a header line followed by one
    /// `src dst weight` triple per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{EDGE_LIST_MAGIC}, n={}", self.n_nodes)?;
        let mut line = String::new();
        for (s, d, wt) in self.edges() {
            line.clear();
            let _ = writeln!(line, "{s} {d} {wt}");
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self, TopologyError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or(TopologyError::Format {
            line: 1,
            reason: "missing header".into(),
        })?;
        let n = header
            .strip_prefix(EDGE_LIST_MAGIC)
            .and_then(|rest| rest.strip_prefix(", n="))
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| TopologyError::Format {
                line: 1,
                reason: format!("expected `{EDGE_LIST_MAGIC}, n=<N>`, got `{header}`"),
            })?;
        let mut adj = vec![Vec::new(); n];
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let fmt_err = |reason: String| TopologyError::Format { line: lineno, reason };
            if fields.len() != 3 {
                return Err(fmt_err(format!("expected `src dst weight`, got `{line}`")));
            }
            let src: u32 = fields[0].parse().map_err(|e| fmt_err(format!("src: {e}")))?;
            let dst: u32 = fields[1].parse().map_err(|e| fmt_err(format!("dst: {e}")))?;
            let w: f64 = fields[2].parse().map_err(|e| fmt_err(format!("weight: {e}")))?;
            if src as usize >= n || dst as usize >= n {
                return Err(TopologyError::NodeOutOfRange { src, dst, n });
            }
            adj[src as usize].push((dst, w));
        }
        Self::from_adjacency(adj, 0)
    }
}

/// Out-degree needed for a random graph of `n_total` nodes to have average
/// path length `path_length`: the smallest k with `k^L >= N`.
pub fn required_degree(n_total: u64, path_length: f64) -> u64 {
    let estimate = (n_total as f64).powf(1.0 / path_length).ceil().max(1.0) as u64;
    let reaches = |k: u64| (k as f64).powf(path_length) >= n_total as f64 - 0.5;
    // Integer path lengths can be checked exactly.
    let exact = path_length.fract() == 0.0 && path_length <= 64.0;
    let reaches_exact = |k: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..path_length as u32 {
            acc = acc.saturating_mul(u128::from(k));
            if acc >= u128::from(n_total) {
                return true;
            }
        }
        acc >= u128::from(n_total)
    };
    let ok = |k: u64| if exact { reaches_exact(k) } else { reaches(k) };
    let mut k = estimate;
    while k > 1 && ok(k - 1) {
        k -= 1;
    }
    while !ok(k) {
        k += 1;
    }
    k
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each node draws exactly `k` distinct out-neighbors uniformly from the
/// other `n - 1` nodes.
pub fn generate_random(n: usize, k: usize, seed: u64) -> Result<Topology, TopologyError> {
    if k >= n.max(1) && !(n == 0 && k == 0) {
        return Err(TopologyError::InfeasibleDegree {
            requested: k,
            available: n.saturating_sub(1),
        });
    }
    let mut rng = rng_for(seed);
    let adj = (0..n)
        .map(|i| {
            index::sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|j| {
                    let j = if j >= i { j + 1 } else { j };
                    (j as u32, 1.0)
                })
                .collect()
        })
        .collect();
    Topology::from_adjacency(adj, seed)
}

/// Watts–Strogatz construction on directed edges: every node links to its
/// `k/2` nearest ring neighbors on each side, then each out-edge is rewired
/// with probability `beta` to a uniformly random non-duplicate target.
pub fn generate_small_world(n: usize, k: usize, beta: f64, seed: u64) -> Result<Topology, TopologyError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("{beta} must lie in [0, 1]")));
    }
    if !k.is_multiple_of(2) {
        return Err(invalid("k", format!("{k} must be even for a ring lattice")));
    }
    if k >= n.max(1) && k > 0 {
        return Err(TopologyError::InfeasibleDegree {
            requested: k,
            available: n.saturating_sub(1),
        });
    }
    let mut rng = rng_for(seed);
    let half = k / 2;
    let mut adj: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            (1..=half)
                .flat_map(|d| [(i + d) % n, (i + n - d) % n])
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    let mut present = vec![false; n];
    for (i, out) in adj.iter_mut().enumerate() {
        out.iter().for_each(|&j| present[j as usize] = true);
        for slot in 0..out.len() {
            if !rng.gen_bool(beta) {
                continue;
            }
            // n - 1 - k candidates remain outside the current target set.
            if out.len() + 1 >= n {
                continue;
            }
            let new = loop {
                let c = rng.gen_range(0..n);
                if c != i && !present[c] {
                    break c;
                }
            };
            present[out[slot] as usize] = false;
            present[new] = true;
            out[slot] = new as u32;
        }
        out.iter().for_each(|&j| present[j as usize] = false);
    }
    let adj = adj
        .into_iter()
        .map(|out| out.into_iter().map(|j| (j, 1.0)).collect())
        .collect();
    Topology::from_adjacency(adj, seed)
}

/// One level of a hierarchical-modular network. Level 0 groups individual
/// nodes; level `l` groups `group_size` units of level `l - 1`. Each node
/// sends `degree` edges to nodes inside its level-`l` group but outside its
/// level-`l - 1` unit (for level 0: any other node of its group).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyLevel {
    pub group_size: usize,
    pub degree: usize,
}

pub fn hierarchy_size(levels: &[HierarchyLevel]) -> usize {
    levels.iter().map(|l| l.group_size).product()
}

pub fn generate_hierarchical(levels: &[HierarchyLevel], seed: u64) -> Result<Topology, TopologyError> {
    if levels.is_empty() {
        return Err(invalid("levels", "at least one level is required"));
    }
    if levels.iter().any(|l| l.group_size == 0) {
        return Err(invalid("levels", "group sizes must be >= 1"));
    }
    // block[l] = nodes in one level-l group; block_below = nodes in one unit.
    let mut blocks = Vec::with_capacity(levels.len());
    let mut below = 1usize;
    for l in levels {
        let block = below * l.group_size;
        let available = block - below;
        if l.degree > available {
            return Err(TopologyError::InfeasibleDegree {
                requested: l.degree,
                available,
            });
        }
        blocks.push((below, block));
        below = block;
    }
    let n = below;
    let mut rng = rng_for(seed);
    let mut adj = Vec::with_capacity(n);
    for i in 0..n {
        let mut out = Vec::with_capacity(levels.iter().map(|l| l.degree).sum());
        for (l, &(unit, block)) in levels.iter().zip(&blocks) {
            let block_start = i / block * block;
            let unit_start = i / unit * unit;
            let unit_offset = unit_start - block_start;
            for j in index::sample(&mut rng, block - unit, l.degree) {
                // Skip over the node's own unit inside the block.
                let j = if j >= unit_offset { j + unit } else { j };
                out.push(((block_start + j) as u32, 1.0));
            }
        }
        adj.push(out);
    }
    Topology::from_adjacency(adj, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLengthStats {
    /// Mean shortest-path length over ordered reachable pairs; `None` when no
    /// pair is reachable.
    pub mean: Option<f64>,
    pub reachable_pairs: u64,
    /// Fraction of ordered (source, target) pairs, over the sources visited,
    /// with no directed path.
    pub disconnected_fraction: f64,
    pub sources: usize,
    pub exact: bool,
}

impl PathLengthStats {
    pub fn connected(&self) -> bool {
        self.disconnected_fraction == 0.0
    }
}

fn bfs_from(t: &Topology, src: usize, dist: &mut [u32], queue: &mut Vec<u32>) -> (u64, u64) {
    dist.fill(u32::MAX);
    queue.clear();
    dist[src] = 0;
    queue.push(src as u32);
    let mut head = 0;
    let (mut sum, mut count) = (0u64, 0u64);
    while head < queue.len() {
        let u = queue[head] as usize;
        head += 1;
        let du = dist[u];
        for &v in t.targets_of(u) {
            let v = v as usize;
            if dist[v] == u32::MAX {
                dist[v] = du + 1;
                sum += u64::from(du + 1);
                count += 1;
                queue.push(v as u32);
            }
        }
    }
    (sum, count)
}

/// Average directed shortest-path length. Exact over all sources when
/// `n <= EXACT_PATH_LIMIT`, otherwise over `sample_size` sources drawn
/// uniformly without replacement.
pub fn avg_path_length(t: &Topology, sample_size: usize, seed: u64) -> Result<PathLengthStats, TopologyError> {
    let n = t.n_nodes();
    if n == 0 {
        return Err(TopologyError::UndefinedMetric("path length of an empty graph"));
    }
    let exact = n <= EXACT_PATH_LIMIT || sample_size >= n;
    let sources: Vec<usize> = if exact {
        (0..n).collect()
    } else {
        if sample_size == 0 {
            return Err(invalid("sample_size", "must be >= 1 for sampled path lengths"));
        }
        let mut s = index::sample(&mut rng_for(seed), n, sample_size).into_vec();
        s.sort_unstable();
        s
    };
    let per_source: Vec<(u64, u64)> = sources
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::with_capacity(n)),
            |(dist, queue), &s| bfs_from(t, s, dist, queue),
        )
        .collect();
    let (sum, count) = per_source
        .iter()
        .fold((0u64, 0u64), |(a, b), &(s, c)| (a + s, b + c));
    let possible = sources.len() as u64 * (n as u64 - 1);
    Ok(PathLengthStats {
        mean: (count > 0).then(|| sum as f64 / count as f64),
        reachable_pairs: count,
        disconnected_fraction: if possible == 0 {
            0.0
        } else {
            (possible - count) as f64 / possible as f64
        },
        sources: sources.len(),
        exact,
    })
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Local clustering coefficient of every node on the symmetrized graph.
pub fn local_clustering(t: &Topology) -> Vec<f64> {
    let nb = t.undirected_neighbors();
    nb.par_iter()
        .map(|list| {
            let d = list.len();
            if d < 2 {
                return 0.0;
            }
            let links: usize = list
                .iter()
                .map(|&v| sorted_intersection_len(list, &nb[v as usize]))
                .sum();
            // Each neighbor-neighbor link is counted from both ends.
            links as f64 / (d * (d - 1)) as f64
        })
        .collect()
}

/// Mean local clustering over all nodes; degree < 2 contributes 0.
pub fn clustering_coefficient(t: &Topology) -> f64 {
    if t.n_nodes() == 0 {
        return 0.0;
    }
    let local = local_clustering(t);
    local.iter().sum::<f64>() / local.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub avg_path_length: PathLengthStats,
    pub clustering: f64,
    pub out_degree_histogram: BTreeMap<usize, usize>,
}

pub fn graph_metrics(t: &Topology, sample_size: usize, seed: u64) -> Result<GraphMetrics, TopologyError> {
    Ok(GraphMetrics {
        n_nodes: t.n_nodes(),
        n_edges: t.n_edges(),
        avg_path_length: avg_path_length(t, sample_size, seed)?,
        clustering: clustering_coefficient(t),
        out_degree_histogram: t.out_degree_histogram(),
    })
}
