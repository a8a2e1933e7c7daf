//! Chimera processor graphs and one-to-one chain embeddings.
//!
//! Node numbering follows the usual linear Chimera index
//! `t * (2 * (n * row + col) + shore) + k`, where shore 0 is the vertical
//! half of a unit cell (coupled to the same node in the row below) and shore 1
//! is the horizontal half (coupled to the same node in the next column).
//! Every cell is a complete bipartite `K_{t,t}` between its two shores.
//!
//! The graph is ideal: there is no broken-qubit mask. A mask would be applied
//! by filtering `nodes()`/`edges()` in the export and by the embedding walk.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChimeraGraph {
    pub m: usize,
    pub n: usize,
    pub t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shore {
    Vertical = 0,
    Horizontal = 1,
}

/// Builds an `m x n` grid of `K_{t,t}` cells.
pub fn chimera_graph(m: usize, n: usize, t: usize) -> Result<ChimeraGraph> {
    if m == 0 || n == 0 || t == 0 {
        return Err(Error::Parameter(format!(
            "chimera dimensions must be positive, got ({m}, {n}, {t})"
        )));
    }
    Ok(ChimeraGraph { m, n, t })
}

impl ChimeraGraph {
    pub fn node_count(&self) -> usize {
        2 * self.m * self.n * self.t
    }

    /// `mn t^2 + t (m(n-1) + n(m-1))`.
    pub fn edge_count_closed_form(&self) -> usize {
        let (m, n, t) = (self.m, self.n, self.t);
        m * n * t * t + t * (m * (n - 1) + n * (m - 1))
    }

    fn node(&self, row: usize, col: usize, shore: Shore, k: usize) -> usize {
        self.t * (2 * (self.n * row + col) + shore as usize) + k
    }

    /// `(row, col, shore, k)` of a node id.
    pub fn coordinates(&self, id: usize) -> (usize, usize, usize, usize) {
        let k = id % self.t;
        let rest = id / self.t;
        let shore = rest % 2;
        let cell = rest / 2;
        (cell / self.n, cell % self.n, shore, k)
    }

    pub fn contains(&self, id: usize) -> bool {
        id < self.node_count()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        if !self.contains(a) || !self.contains(b) || a == b {
            return false;
        }
        let (ra, ca, sa, ka) = self.coordinates(a);
        let (rb, cb, sb, kb) = self.coordinates(b);
        if ra == rb && ca == cb {
            return sa != sb;
        }
        if sa != sb || ka != kb {
            return false;
        }
        if sa == Shore::Horizontal as usize {
            ra == rb && ca.abs_diff(cb) == 1
        } else {
            ca == cb && ra.abs_diff(rb) == 1
        }
    }

    pub fn degree(&self, id: usize) -> usize {
        let (r, c, s, _) = self.coordinates(id);
        let external = if s == Shore::Horizontal as usize {
            usize::from(c > 0) + usize::from(c + 1 < self.n)
        } else {
            usize::from(r > 0) + usize::from(r + 1 < self.m)
        };
        self.t + external
    }

    /// All edges `(a, b)` with `a < b`, intra-cell first then inter-cell.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count_closed_form());
        for r in 0..self.m {
            for c in 0..self.n {
                for kv in 0..self.t {
                    for kh in 0..self.t {
                        out.push((
                            self.node(r, c, Shore::Vertical, kv),
                            self.node(r, c, Shore::Horizontal, kh),
                        ));
                    }
                }
            }
        }
        for r in 0..self.m {
            for c in 0..self.n {
                for k in 0..self.t {
                    if c + 1 < self.n {
                        out.push((
                            self.node(r, c, Shore::Horizontal, k),
                            self.node(r, c + 1, Shore::Horizontal, k),
                        ));
                    }
                    if r + 1 < self.m {
                        out.push((
                            self.node(r, c, Shore::Vertical, k),
                            self.node(r + 1, c, Shore::Vertical, k),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Physical node for each logical spin of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub mapping: Vec<usize>,
}

/// Longest serpentine path through the grid.
///
/// Rows are visited boustrophedon-style. Inside a cell the walk alternates
/// shores; horizontal couplers join cells along a row and a vertical coupler
/// drops to the next row at the row's end. A cell entered and left through the
/// same shore skips one node of the other shore.
fn serpentine(g: &ChimeraGraph) -> Vec<usize> {
    let t = g.t;
    let mut path = Vec::with_capacity(g.node_count());
    // (shore, k) through which the walk enters the next cell
    let mut entry: Option<(Shore, usize)> = None;
    for r in 0..g.m {
        let cols: Vec<usize> = if r % 2 == 0 {
            (0..g.n).collect()
        } else {
            (0..g.n).rev().collect()
        };
        for (pos, &c) in cols.iter().enumerate() {
            let last_cell = r + 1 == g.m && pos + 1 == cols.len();
            let exit = if last_cell {
                None
            } else if pos + 1 == cols.len() {
                Some(Shore::Vertical)
            } else {
                Some(Shore::Horizontal)
            };
            let start = match entry {
                Some((shore, _)) => shore,
                None => match exit {
                    Some(Shore::Horizontal) | None => Shore::Vertical,
                    Some(Shore::Vertical) => Shore::Horizontal,
                },
            };
            let first_k = entry.map(|e| e.1).unwrap_or(0);
            let other = |s: Shore| {
                if s == Shore::Vertical {
                    Shore::Horizontal
                } else {
                    Shore::Vertical
                }
            };
            // number of nodes used on the starting shore and the other shore
            let (n_start, n_other) = match exit {
                Some(e) if e == start => (t, t - 1),
                _ => (t, t),
            };
            let mut start_ks: Vec<usize> = std::iter::once(first_k)
                .chain((0..t).filter(|&k| k != first_k))
                .collect();
            start_ks.truncate(n_start);
            let other_ks: Vec<usize> = (0..n_other).collect();
            let mut last = (start, first_k);
            for i in 0..t {
                if i < start_ks.len() {
                    path.push(g.node(r, c, start, start_ks[i]));
                    last = (start, start_ks[i]);
                }
                if i < other_ks.len() {
                    path.push(g.node(r, c, other(start), other_ks[i]));
                    last = (other(start), other_ks[i]);
                }
            }
            entry = exit.map(|e| {
                debug_assert_eq!(e, last.0);
                last
            });
        }
    }
    path
}

/// Deterministic one-to-one embedding of a `length`-spin chain.
pub fn embed_chain(graph: &ChimeraGraph, length: usize) -> Result<Embedding> {
    if length == 0 {
        return Err(Error::Parameter("chain length must be positive".into()));
    }
    let path = serpentine(graph);
    if length > path.len() {
        return Err(Error::EmbeddingInfeasible {
            requested: length,
            achieved: path.len(),
        });
    }
    Ok(Embedding {
        mapping: path[..length].to_vec(),
    })
}

/// Violations naming offending chain positions; empty when the embedding is valid.
pub fn validate_embedding(graph: &ChimeraGraph, embedding: &Embedding) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    for (i, &node) in embedding.mapping.iter().enumerate() {
        if !graph.contains(node) {
            out.push(format!("position {i}: node {node} is not in the graph"));
        } else if !seen.insert(node) {
            out.push(format!(
                "position {i}: node {node} already used (not injective)"
            ));
        }
    }
    for (i, w) in embedding.mapping.windows(2).enumerate() {
        if graph.contains(w[0])
            && graph.contains(w[1])
            && w[0] != w[1]
            && !graph.are_adjacent(w[0], w[1])
        {
            out.push(format!(
                "positions {i}-{}: nodes {} and {} are not adjacent",
                i + 1,
                w[0],
                w[1]
            ));
        }
    }
    out
}

/// JSON export for visualisation tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<Vec<usize>>,
}

impl GraphExport {
    pub fn new(graph: &ChimeraGraph, embedding: Option<&Embedding>) -> Self {
        GraphExport {
            m: graph.m,
            n: graph.n,
            t: graph.t,
            nodes: (0..graph.node_count()).collect(),
            edges: graph.edges(),
            mapping: embedding.map(|e| e.mapping.clone()),
        }
    }
}
