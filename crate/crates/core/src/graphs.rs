//! Problem instances: weighted Ising models and their unweighted problem
//! graphs, with graph6 and edge-list readers and a seeded random regular
//! graph generator.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("empty graph6 line")]
    Empty,
    #[error("graph6 size byte {0:#04x} is invalid or encodes more than 62 vertices")]
    BadHeader(u8),
    #[error("graph6 byte {byte:#04x} at offset {offset} is outside the printable range")]
    BadByte { offset: usize, byte: u8 },
    #[error("graph6 payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("graph6 payload has {0} trailing bytes")]
    TrailingGarbage(usize),
    #[error("graph6 padding bits are not zero")]
    NonZeroPadding,
    #[error("graph6 encoding supports at most 62 vertices, got {0}")]
    TooLarge(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("no {degree}-regular connected simple graph exists on {n} vertices")]
    Infeasible { n: usize, degree: usize },
    #[error("gave up after {0} attempts to draw a simple connected regular graph")]
    RetryLimit(usize),
}

fn canonical(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// An unweighted simple graph. Edges are stored as `(i, j)` with `i < j`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl ProblemGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::IndexOutOfRange { index: v, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let e = canonical(i, j);
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|j| (0..j).map(move |i| (i, j)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&canonical(i, j)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// `2|E| / n`. Zero for the empty vertex set.
    pub fn average_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Encodes the graph in graph6 (without the optional `>>graph6<<` header).
    pub fn to_graph6(&self) -> Result<String, GraphError> {
        if self.n > 62 {
            return Err(GraphError::TooLarge(self.n));
        }
        let nbits = self.n * self.n.saturating_sub(1) / 2;
        let mut bits = vec![false; nbits.div_ceil(6) * 6];
        for &(i, j) in &self.edges {
            bits[j * (j - 1) / 2 + i] = true;
        }
        let mut out = String::with_capacity(1 + bits.len() / 6);
        out.push((self.n as u8 + 63) as char);
        for chunk in bits.chunks(6) {
            let v = chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
            out.push((v + 63) as char);
        }
        Ok(out)
    }
}

impl fmt::Display for ProblemGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} edges={:?}", self.n, self.edges)
    }
}

/// Decodes a single graph6 line. Only the one-byte size form (n ≤ 62) is
/// accepted.
pub fn parse_graph6(line: &str) -> Result<ProblemGraph, GraphError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let line = line.strip_prefix(">>graph6<<").unwrap_or(line);
    let bytes = line.as_bytes();
    let (&head, payload) = bytes.split_first().ok_or(GraphError::Empty)?;
    if !(63..=125).contains(&head) {
        return Err(GraphError::BadHeader(head));
    }
    let n = (head - 63) as usize;
    let nbits = n * n.saturating_sub(1) / 2;
    let expected = nbits.div_ceil(6);
    for (offset, &b) in payload.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(GraphError::BadByte { offset: offset + 1, byte: b });
        }
    }
    if payload.len() < expected {
        return Err(GraphError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(GraphError::TrailingGarbage(payload.len() - expected));
    }
    let bit = |k: usize| (payload[k / 6] - 63) >> (5 - k % 6) & 1 == 1;
    if (nbits..expected * 6).any(bit) {
        return Err(GraphError::NonZeroPadding);
    }
    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    ProblemGraph::new(n, edges)
}

/// Reads a graph6 file, one graph per line. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn read_graph6_corpus(text: &str) -> Result<Vec<ProblemGraph>, GraphError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            parse_graph6(l.trim()).map_err(|e| GraphError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// An Ising cost function `Σ h_i Z_i + Σ J_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingInstance {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
}

impl IsingInstance {
    pub fn new(
        n: usize,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        fields: Vec<f64>,
    ) -> Result<Self, GraphError> {
        if fields.len() != n {
            return Err(GraphError::Parse {
                line: 0,
                msg: format!("expected {n} field values, got {}", fields.len()),
            });
        }
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, j, w) in couplings {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::IndexOutOfRange { index: v, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let (a, b) = canonical(i, j);
            if !seen.insert((a, b)) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
            edges.push((a, b, w));
        }
        edges.sort_by_key(|&(a, b, _)| (a, b));
        Ok(Self { n, edges, fields })
    }

    /// Unit couplings on every edge of `g` and the same field on every vertex.
    pub fn from_graph(g: &ProblemGraph, coupling: f64, field: f64) -> Self {
        Self {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| (i, j, coupling)).collect(),
            fields: vec![field; g.n],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Number of nonzero fields.
    pub fn eta(&self) -> usize {
        self.fields.iter().filter(|h| **h != 0.0).count()
    }

    /// The graph of nonzero couplings.
    pub fn problem_graph(&self) -> ProblemGraph {
        ProblemGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .filter(|e| e.2 != 0.0)
                .map(|&(i, j, _)| (i, j))
                .collect(),
        }
    }
}

/// Parses the Ising edge-list format: the first data line holds `n`, then
/// `i j J` lines for couplings and `i h` lines for fields. `#` starts a
/// comment. Missing fields default to zero.
pub fn parse_ising(text: &str) -> Result<IsingInstance, GraphError> {
    let mut n: Option<usize> = None;
    let mut couplings = Vec::new();
    let mut fields: Vec<Option<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| GraphError::Parse { line: line_no, msg };
        let data = raw.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            continue;
        }
        let toks: Vec<&str> = data.split_whitespace().collect();
        let index = |t: &str| -> Result<usize, GraphError> {
            t.parse::<usize>()
                .map_err(|_| err(format!("invalid vertex index {t:?}")))
        };
        let value = |t: &str| -> Result<f64, GraphError> {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("invalid weight {t:?}")))
        };
        let Some(size) = n else {
            if toks.len() != 1 {
                return Err(err("first line must hold the vertex count".into()));
            }
            let size = index(toks[0])?;
            n = Some(size);
            fields = vec![None; size];
            continue;
        };
        let check = |v: usize| -> Result<usize, GraphError> {
            if v >= size {
                Err(err(GraphError::IndexOutOfRange { index: v, n: size }.to_string()))
            } else {
                Ok(v)
            }
        };
        match toks.as_slice() {
            [i, j, w] => {
                let (i, j) = (check(index(i)?)?, check(index(j)?)?);
                if i == j {
                    return Err(err(GraphError::SelfLoop(i).to_string()));
                }
                couplings.push((i, j, value(w)?));
            }
            [i, h] => {
                let i = check(index(i)?)?;
                if fields[i].replace(value(h)?).is_some() {
                    return Err(err(format!("duplicate field for vertex {i}")));
                }
            }
            _ => return Err(err(format!("expected 2 or 3 columns, got {}", toks.len()))),
        }
    }
    let n = n.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing vertex count".into(),
    })?;
    let mut seen = BTreeSet::new();
    for &(i, j, _) in &couplings {
        let e = canonical(i, j);
        if !seen.insert(e) {
            return Err(GraphError::DuplicateEdge(e.0, e.1));
        }
    }
    IsingInstance::new(n, couplings, fields.into_iter().map(|h| h.unwrap_or(0.0)).collect())
}

const REGULAR_RETRY_LIMIT: usize = 100_000;

/// Draws a simple connected `degree`-regular graph with the pairing model,
/// rejecting loops, multi-edges and disconnected results. Deterministic in
/// `seed`.
pub fn gen_random_regular(n: usize, degree: usize, seed: u64) -> Result<ProblemGraph, GraphError> {
    let infeasible = GraphError::Infeasible { n, degree };
    if !(n * degree).is_multiple_of(2) || (n > 0 && degree >= n) {
        return Err(infeasible);
    }
    // Only K1 and K2 are connected with degree below 2.
    if (degree == 0 && n > 1) || (degree == 1 && n != 2) {
        return Err(infeasible);
    }
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    for attempt in 0..REGULAR_RETRY_LIMIT {
        let mut rng = rng::rng_from(seed, &[attempt as u64]);
        points.shuffle(&mut rng);
        let mut set = BTreeSet::new();
        let simple = points.chunks(2).all(|pair| pair[0] != pair[1] && set.insert(canonical(pair[0], pair[1])));
        if !simple {
            continue;
        }
        let g = ProblemGraph {
            n,
            edges: set.into_iter().collect(),
        };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RetryLimit(REGULAR_RETRY_LIMIT))
}
