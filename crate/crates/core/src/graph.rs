//! Finite undirected simple graphs with positive edge weights.
//!
//! Vertices are dense integers `0..n`, the edge set is stored symmetrically,
//! and adjacency lists are kept sorted so iteration order is deterministic.

use std::collections::BTreeMap;

use crate::{Error, Result, Vertex};

/// Finite connected undirected simple graph with per-edge weights.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    vertex_count: usize,
    /// Canonical edge list, `i < j`, sorted.
    edges: Vec<(Vertex, Vertex)>,
    /// Weight per canonical edge, parallel to `edges`.
    weights: Vec<f64>,
    adjacency: Vec<Vec<Vertex>>,
    weight_by_pair: BTreeMap<(Vertex, Vertex), f64>,
}

impl Graph {
    /// Build a graph from explicit weighted edges. Weights must be positive
    /// and finite; the graph must be loop-free and connected from vertex 0.
    pub fn new(vertex_count: usize, edges: &[(Vertex, Vertex, f64)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut canonical: BTreeMap<(Vertex, Vertex), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("loop at vertex {a}")));
            }
            for v in [a, b] {
                if v as usize >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        vertex: v,
                        count: vertex_count,
                    });
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{a},{b}}} has non-positive weight {w}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if canonical.insert(key, w).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {{{},{}}}",
                    key.0, key.1
                )));
            }
        }

        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut weight_by_pair = BTreeMap::new();
        for (&(i, j), &w) in &canonical {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
            weight_by_pair.insert((i, j), w);
            weight_by_pair.insert((j, i), w);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let graph = Graph {
            vertex_count,
            edges: canonical.keys().copied().collect(),
            weights: canonical.values().copied().collect(),
            adjacency,
            weight_by_pair,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    /// Build with every weight set to 1.
    pub fn with_unit_weights(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::new(vertex_count, &weighted)
    }

    /// Complete graph on three vertices, unit weights.
    pub fn triangle() -> Self {
        Self::with_unit_weights(3, &[(0, 1), (1, 2), (0, 2)]).expect("triangle is valid")
    }

    /// Cycle on four vertices, unit weights.
    pub fn square() -> Self {
        Self::with_unit_weights(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).expect("cycle is valid")
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0 as Vertex];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in self.neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    stack.push(u);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(Error::InvalidGraph(format!(
                "vertex {v} is not reachable from vertex 0"
            ))),
            None => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if (v as usize) < self.vertex_count {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                count: self.vertex_count,
            })
        }
    }

    /// Adjacent vertices of `v` in ascending order.
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v as usize]
    }

    /// Like [`neighbors`](Self::neighbors) but with the range check the
    /// public contract requires.
    pub fn try_neighbors(&self, v: Vertex) -> Result<&[Vertex]> {
        self.check_vertex(v)?;
        Ok(self.neighbors(v))
    }

    pub fn is_adjacent(&self, i: Vertex, j: Vertex) -> bool {
        self.weight_by_pair.contains_key(&(i, j))
    }

    /// Canonical edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.edges.iter().copied()
    }

    /// Weight of the edge `{i, j}`, if present.
    pub fn weight(&self, i: Vertex, j: Vertex) -> Option<f64> {
        self.weight_by_pair.get(&(i, j)).copied()
    }

    /// Weights keyed by ordered adjacent pair; both orders present.
    pub fn ordered_weights(&self) -> BTreeMap<(Vertex, Vertex), f64> {
        self.weight_by_pair.clone()
    }

    /// Ordered adjacent pairs, both directions, sorted.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.weight_by_pair.keys().copied()
    }

    /// All edges not on any simple cycle (bridges), via one low-link
    /// depth-first pass. Returned in canonical `(min, max)` form, sorted.
    pub fn bridges(&self) -> Vec<(Vertex, Vertex)> {
        const UNSET: usize = usize::MAX;
        let n = self.vertex_count;
        let mut order = vec![UNSET; n];
        let mut low = vec![UNSET; n];
        let mut next_order = 0usize;
        let mut out = Vec::new();

        // Iterative DFS: (vertex, parent, index into adjacency list).
        let mut stack: Vec<(Vertex, Option<Vertex>, usize)> = Vec::new();
        for root in 0..n as Vertex {
            if order[root as usize] != UNSET {
                continue;
            }
            order[root as usize] = next_order;
            low[root as usize] = next_order;
            next_order += 1;
            stack.push((root, None, 0));
            while let Some(&mut (v, parent, ref mut idx)) = stack.last_mut() {
                let vu = v as usize;
                if *idx < self.adjacency[vu].len() {
                    let to = self.adjacency[vu][*idx];
                    *idx += 1;
                    // Simple graph: the single edge back to the parent is not
                    // a cycle witness.
                    if Some(to) == parent {
                        continue;
                    }
                    if order[to as usize] == UNSET {
                        order[to as usize] = next_order;
                        low[to as usize] = next_order;
                        next_order += 1;
                        stack.push((to, Some(v), 0));
                    } else {
                        low[vu] = low[vu].min(order[to as usize]);
                    }
                } else {
                    stack.pop();
                    if let Some(&mut (p, _, _)) = stack.last_mut() {
                        let pu = p as usize;
                        low[pu] = low[pu].min(low[vu]);
                        if low[vu] > order[pu] {
                            out.push((p.min(v), p.max(v)));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Result of the every-edge-on-a-cycle validation.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CycleCoverReport {
    pub pass: bool,
    /// One edge on no cycle (a bridge), when the check fails.
    pub offending_edge: Option<(Vertex, Vertex)>,
}

/// Check that every edge of `g` lies on a simple cycle, i.e. that `g` has no
/// bridges. On failure one offending edge is reported.
pub fn validate_strongly_connected(g: &Graph) -> CycleCoverReport {
    let bridges = g.bridges();
    CycleCoverReport {
        pass: bridges.is_empty(),
        offending_edge: bridges.first().copied(),
    }
}
