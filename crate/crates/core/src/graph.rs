//! Thresholded correlation graph and the maximum-independent-set QUBO.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::qubo::QuboProblem;

/// Penalty on each edge in the MIS Hamiltonian `-sum x_i + 2 sum_E x_i x_j`.
pub const MIS_PENALTY: f64 = 2.0;

/// Undirected graph over assets with an edge wherever `|corr| >= alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketGraph {
    n: usize,
    alpha: f64,
    /// `(i, j, weight)` with `i < j`, sorted.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl MarketGraph {
    pub fn new(n: usize, alpha: f64, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        check_alpha(alpha)?;
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Index(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidProblem(format!("self-loop at vertex {a}")));
            }
            if !(w >= alpha && w <= 1.0) {
                return Err(Error::InvalidProblem(format!(
                    "edge ({a}, {b}) weight {w} outside [{alpha}, 1]"
                )));
            }
            list.push((a.min(b), a.max(b), w));
        }
        list.sort_by_key(|x| (x.0, x.1));
        if let Some(dup) = list.windows(2).find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::InvalidProblem(format!(
                "edge ({}, {}) listed twice",
                dup[0].0, dup[0].1
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in &list {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(v, _)| v);
        }
        Ok(MarketGraph {
            n,
            alpha,
            edges: list,
            adjacency,
        })
    }

    /// Edge `(i, j)` iff `|corr_ij| >= alpha`, weighted by `|corr_ij|`.
    pub fn from_model(m: &MarketModel, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n = m.n();
        let corr = m.corr();
        let edges = (0..n).flat_map(|i| {
            ((i + 1)..n).filter_map(move |j| {
                let w = corr[i][j].abs();
                (w >= alpha).then_some((i, j, w))
            })
        });
        Self::new(n, alpha, edges.collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of `v` with edge weights, ordered by vertex index.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |&(v, _)| v).is_ok()
    }

    /// Fraction of the `n (n - 1) / 2` possible edges that are present.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    /// `-sum_i x_i + 2 sum_{(i,j) in E} x_i x_j`, split symmetrically off the diagonal.
    pub fn mis_qubo(&self) -> QuboProblem {
        let n = self.n;
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = -1.0;
        }
        for &(a, b, _) in &self.edges {
            q[a * n + b] = MIS_PENALTY / 2.0;
            q[b * n + a] = MIS_PENALTY / 2.0;
        }
        QuboProblem::from_dense(n, q, 0.0).expect("MIS QUBO is symmetric")
    }

    /// Checks that the selected vertices are pairwise non-adjacent.
    pub fn validate_independent_set(&self, selection: &[u8]) -> Result<IndependentSet> {
        if selection.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: selection.len(),
            });
        }
        if let Some(&(a, b, _)) = self
            .edges
            .iter()
            .find(|&&(a, b, _)| selection[a] != 0 && selection[b] != 0)
        {
            return Err(Error::Independence(a, b));
        }
        let members: Vec<usize> = (0..self.n).filter(|&v| selection[v] != 0).collect();
        let maximal = (0..self.n)
            .filter(|&v| selection[v] == 0)
            .all(|v| self.adjacency[v].iter().any(|&(u, _)| selection[u] != 0));
        Ok(IndependentSet { members, maximal })
    }

    /// Turns an arbitrary selection into a maximal independent set.
    ///
    /// Violated edges are resolved in edge order by dropping the endpoint of
    /// lower degree (the larger index on ties); the result is then augmented
    /// greedily with the lowest-degree admissible vertices.
    pub fn repair_independent_set(&self, selection: &[u8]) -> Result<IndependentSet> {
        if selection.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: selection.len(),
            });
        }
        let mut chosen: Vec<bool> = selection.iter().map(|&s| s != 0).collect();
        for &(a, b, _) in &self.edges {
            if chosen[a] && chosen[b] {
                let drop = match self.degree(a).cmp(&self.degree(b)) {
                    std::cmp::Ordering::Less => a,
                    std::cmp::Ordering::Greater => b,
                    std::cmp::Ordering::Equal => b,
                };
                chosen[drop] = false;
            }
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| (self.degree(v), v));
        for v in order {
            if !chosen[v] && self.adjacency[v].iter().all(|&(u, _)| !chosen[u]) {
                chosen[v] = true;
            }
        }
        let bits: Vec<u8> = chosen.iter().map(|&c| u8::from(c)).collect();
        let set = self.validate_independent_set(&bits)?;
        debug_assert!(set.maximal);
        Ok(set)
    }

    /// Edge-list text: a `# n alpha` header, then one `i j weight` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} {}\n", self.n, self.alpha);
        for &(a, b, w) in &self.edges {
            let _ = writeln!(out, "{a} {b} {w}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.trim().strip_prefix('#'))
            .ok_or_else(|| Error::InvalidProblem("missing \"# n alpha\" header".into()))?;
        let mut fields = header.split_whitespace();
        let bad = |what: &str| Error::InvalidProblem(format!("malformed edge list: {what}"));
        let n: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header n"))?;
        let alpha: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header alpha"))?;
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(line));
            }
            let a = parts[0].parse().map_err(|_| bad(line))?;
            let b = parts[1].parse().map_err(|_| bad(line))?;
            let w = parts[2].parse().map_err(|_| bad(line))?;
            edges.push((a, b, w));
        }
        Self::new(n, alpha, edges)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependentSet {
    /// Sorted vertex indices.
    pub members: Vec<usize>,
    /// No further vertex can be added without breaking independence.
    pub maximal: bool,
}

impl IndependentSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
