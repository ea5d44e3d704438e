//! Planar coupling lattices and their distance tables.
//!
//! Sites of the grid families are numbered row-major. The hexagon family is
//! a brick wall: every horizontal neighbour pair is coupled and the vertical
//! pair `(r, c)-(r+1, c)` is coupled when `r + c` is even. Heavy-hex takes
//! the brick wall on `rows × cols` lattice sites and inserts one bridge site
//! on every coupling; bridge sites are numbered after the lattice sites in
//! edge order.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HardwareError {
    #[error("unknown lattice kind {0:?}")]
    UnknownKind(String),
    #[error("degenerate lattice extents {rows}x{cols}")]
    DegenerateExtents { rows: usize, cols: usize },
    #[error("hardware graph is disconnected")]
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    HeavyHex,
    Hexagon,
    Square,
    Triangle,
    FullyConnected,
}

impl LatticeKind {
    /// The four sparse lattices in increasing order of connectivity.
    pub const PLANAR: [LatticeKind; 4] = [
        LatticeKind::HeavyHex,
        LatticeKind::Hexagon,
        LatticeKind::Square,
        LatticeKind::Triangle,
    ];

    pub const ALL: [LatticeKind; 5] = [
        LatticeKind::HeavyHex,
        LatticeKind::Hexagon,
        LatticeKind::Square,
        LatticeKind::Triangle,
        LatticeKind::FullyConnected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::HeavyHex => "heavy_hex",
            LatticeKind::Hexagon => "hexagon",
            LatticeKind::Square => "square",
            LatticeKind::Triangle => "triangle",
            LatticeKind::FullyConnected => "fully_connected",
        }
    }

    /// Published hardware degree `d_H` of the family. `None` for fully
    /// connected hardware, whose degree grows with the register.
    pub fn nominal_degree(self) -> Option<f64> {
        match self {
            LatticeKind::HeavyHex => Some(2.5),
            LatticeKind::Hexagon => Some(3.0),
            LatticeKind::Square => Some(4.0),
            LatticeKind::Triangle => Some(6.0),
            LatticeKind::FullyConnected => None,
        }
    }

    /// Largest problem size `n₀` for which every graph maps without SWAPs.
    /// `None` for fully connected hardware, where `n₀ = n`.
    pub fn swap_free_size(self) -> Option<usize> {
        match self {
            LatticeKind::Triangle => Some(3),
            LatticeKind::FullyConnected => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = HardwareError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "heavy_hex" | "heavyhex" | "heavy_hexagon" => Ok(LatticeKind::HeavyHex),
            "hexagon" | "hex" => Ok(LatticeKind::Hexagon),
            "square" => Ok(LatticeKind::Square),
            "triangle" | "triangular" => Ok(LatticeKind::Triangle),
            "fully_connected" | "full" | "fc" => Ok(LatticeKind::FullyConnected),
            _ => Err(HardwareError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum SiteRole {
    Lattice,
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareGraph {
    kind: LatticeKind,
    rows: usize,
    cols: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    roles: Vec<SiteRole>,
}

/// Average degree over non-perimeter sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorDegree {
    pub value: f64,
    pub interior_sites: usize,
    /// True when the lattice has no interior site and `value` is the
    /// family's nominal degree instead of a measurement.
    pub fallback: bool,
}

impl HardwareGraph {
    fn from_edges(kind: LatticeKind, rows: usize, cols: usize, num_sites: usize, mut edges: Vec<(usize, usize)>, roles: Vec<SiteRole>) -> Self {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); num_sites];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in adjacency.iter_mut() {
            nb.sort_unstable();
        }
        Self {
            kind,
            rows,
            cols,
            edges,
            adjacency,
            roles,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_sites(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.adjacency[site]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.adjacency[site].len()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency
            .get(a)
            .is_some_and(|nb| nb.binary_search(&b).is_ok())
    }

    /// Maximum site degree of this particular graph.
    pub fn h_max(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximum connections per site of the lattice family, which small
    /// registers cut off before any site reaches it.
    pub fn family_h_max(&self) -> usize {
        match self.kind {
            LatticeKind::HeavyHex | LatticeKind::Hexagon => 3,
            LatticeKind::Square => 4,
            LatticeKind::Triangle => 6,
            LatticeKind::FullyConnected => self.num_sites().saturating_sub(1),
        }
    }

    fn target_degree(&self, site: usize) -> usize {
        match (self.kind, self.roles[site]) {
            (_, SiteRole::Bridge) => 2,
            (LatticeKind::HeavyHex | LatticeKind::Hexagon, _) => 3,
            (LatticeKind::Square, _) => 4,
            (LatticeKind::Triangle, _) => 6,
            (LatticeKind::FullyConnected, _) => self.num_sites() - 1,
        }
    }

    /// Perimeter sites have fewer couplings than the family's interior
    /// degree. A heavy-hex bridge is perimeter when either lattice site it
    /// joins is.
    pub fn perimeter(&self) -> Vec<bool> {
        let short: Vec<bool> = (0..self.num_sites())
            .map(|s| self.degree(s) < self.target_degree(s))
            .collect();
        (0..self.num_sites())
            .map(|s| match self.roles[s] {
                SiteRole::Bridge => short[s] || self.adjacency[s].iter().any(|&t| short[t]),
                SiteRole::Lattice => short[s],
            })
            .collect()
    }

    pub fn interior_average_degree(&self) -> InteriorDegree {
        let perimeter = self.perimeter();
        let interior: Vec<usize> = (0..self.num_sites()).filter(|&s| !perimeter[s]).collect();
        if interior.is_empty() {
            return InteriorDegree {
                value: self.kind.nominal_degree().unwrap_or(0.0),
                interior_sites: 0,
                fallback: true,
            };
        }
        let total: usize = interior.iter().map(|&s| self.degree(s)).sum();
        InteriorDegree {
            value: total as f64 / interior.len() as f64,
            interior_sites: interior.len(),
            fallback: false,
        }
    }

    /// `# comment` header followed by one `a b` line per coupling.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "# lattice={} rows={} cols={} sites={} edges={}\n",
            self.kind,
            self.rows,
            self.cols,
            self.num_sites(),
            self.edges.len()
        );
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    /// Dense 0/1 adjacency matrix, one CSV row per site.
    pub fn to_adjacency_csv(&self) -> String {
        let n = self.num_sites();
        let mut out = String::with_capacity(n * n * 2);
        for s in 0..n {
            let row: Vec<&str> = (0..n)
                .map(|t| if self.is_adjacent(s, t) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn grid_edges(rows: usize, cols: usize, keep_vertical: impl Fn(usize, usize) -> bool, diagonals: bool) -> Vec<(usize, usize)> {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows && keep_vertical(r, c) {
                edges.push((id(r, c), id(r + 1, c)));
            }
            if diagonals && r + 1 < rows && c + 1 < cols {
                edges.push((id(r, c), id(r + 1, c + 1)));
            }
        }
    }
    edges
}

pub fn build_lattice(kind: LatticeKind, rows: usize, cols: usize) -> Result<HardwareGraph, HardwareError> {
    if rows == 0 || cols == 0 {
        return Err(HardwareError::DegenerateExtents { rows, cols });
    }
    let sites = rows * cols;
    let lattice_roles = vec![SiteRole::Lattice; sites];
    let brick = |r: usize, c: usize| (r + c).is_multiple_of(2);
    let hw = match kind {
        LatticeKind::Square => HardwareGraph::from_edges(kind, rows, cols, sites, grid_edges(rows, cols, |_, _| true, false), lattice_roles),
        LatticeKind::Triangle => HardwareGraph::from_edges(kind, rows, cols, sites, grid_edges(rows, cols, |_, _| true, true), lattice_roles),
        LatticeKind::Hexagon => HardwareGraph::from_edges(kind, rows, cols, sites, grid_edges(rows, cols, brick, false), lattice_roles),
        LatticeKind::HeavyHex => {
            let base = grid_edges(rows, cols, brick, false);
            let mut roles = lattice_roles;
            let mut edges = Vec::with_capacity(2 * base.len());
            for (k, &(a, b)) in base.iter().enumerate() {
                let bridge = sites + k;
                roles.push(SiteRole::Bridge);
                edges.push((a, bridge));
                edges.push((b, bridge));
            }
            HardwareGraph::from_edges(kind, rows, cols, sites + base.len(), edges, roles)
        }
        LatticeKind::FullyConnected => {
            let edges = (0..sites).flat_map(|b| (0..b).map(move |a| (a, b))).collect();
            HardwareGraph::from_edges(kind, rows, cols, sites, edges, lattice_roles)
        }
    };
    Ok(hw)
}

fn ceil_sqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

/// Smallest near-square lattice of the family holding `n` qubits. Square,
/// triangle and hexagon use a `⌈√n⌉ × ⌈√n⌉` grid. Heavy-hex grows its
/// brick-wall base through `s × s`, `s × (s+1)`, `(s+1) × (s+1)`, … until
/// the bridged lattice has at least `n` sites. Fully connected hardware is
/// a single row of `n` sites.
pub fn grid_for(n: usize, kind: LatticeKind) -> HardwareGraph {
    let n = n.max(1);
    let build = |r, c| build_lattice(kind, r, c).expect("extents are positive");
    match kind {
        LatticeKind::FullyConnected => build(1, n),
        LatticeKind::HeavyHex => {
            let mut s = 1;
            loop {
                for (r, c) in [(s, s), (s, s + 1)] {
                    let hw = build(r, c);
                    if hw.num_sites() >= n {
                        return hw;
                    }
                }
                s += 1;
            }
        }
        _ => {
            let s = ceil_sqrt(n);
            build(s, s)
        }
    }
}

/// Hop counts between every pair of sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn from_adjacency(adjacency: &[Vec<usize>]) -> Result<Self, HardwareError> {
        let n = adjacency.len();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(v) = queue.pop_front() {
                let d = row[v] + 1;
                for &w in &adjacency[v] {
                    if row[w] == u32::MAX {
                        row[w] = d;
                        queue.push_back(w);
                    }
                }
            }
            if row.contains(&u32::MAX) {
                return Err(HardwareError::Disconnected);
            }
        }
        Ok(Self { n, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.n + b]
    }
}

pub fn all_pairs_distance(hw: &HardwareGraph) -> Result<DistanceMatrix, HardwareError> {
    DistanceMatrix::from_adjacency(&hw.adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattices() {
        let sq = build_lattice(LatticeKind::Square, 2, 2).unwrap();
        assert_eq!((sq.num_sites(), sq.edges().len(), sq.h_max()), (4, 4, 2));

        let tri = build_lattice(LatticeKind::Triangle, 2, 2).unwrap();
        assert_eq!((tri.num_sites(), tri.edges().len()), (4, 5));

        let sq3 = build_lattice(LatticeKind::Square, 3, 3).unwrap();
        assert_eq!((sq3.num_sites(), sq3.edges().len()), (9, 12));
        assert_eq!(sq3.degree(4), 4);

        let fc = build_lattice(LatticeKind::FullyConnected, 1, 5).unwrap();
        assert_eq!(fc.edges().len(), 10);
    }

    #[test]
    fn hexagon_cells_are_six_cycles() {
        // 2x4 brick wall: one hexagon 0-1-2-6-5-4.
        let hex = build_lattice(LatticeKind::Hexagon, 2, 4).unwrap();
        assert_eq!(hex.edges().len(), 6 + 2);
        assert_eq!(hex.h_max(), 3);
        let heavy = build_lattice(LatticeKind::HeavyHex, 2, 4).unwrap();
        assert_eq!(heavy.num_sites(), 8 + 8);
        assert_eq!(heavy.edges().len(), 16);
        assert_eq!(heavy.h_max(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_lattice(LatticeKind::Square, 0, 3), Err(HardwareError::DegenerateExtents { .. })));
        assert!(matches!("octagon".parse::<LatticeKind>(), Err(HardwareError::UnknownKind(_))));
        assert_eq!("heavy-hex".parse::<LatticeKind>().unwrap(), LatticeKind::HeavyHex);
    }

    #[test]
    fn grid_sizing() {
        let g = grid_for(7, LatticeKind::Square);
        assert_eq!((g.rows(), g.cols(), g.num_sites()), (3, 3, 9));
        let g = grid_for(4, LatticeKind::Square);
        assert_eq!((g.rows(), g.cols(), g.num_sites()), (2, 2, 4));
        let g = grid_for(20, LatticeKind::Square);
        assert_eq!((g.rows(), g.cols(), g.num_sites()), (5, 5, 25));
        for kind in LatticeKind::ALL {
            for n in 1..80 {
                assert!(grid_for(n, kind).num_sites() >= n, "{kind} {n}");
            }
        }
        assert_eq!(grid_for(7, LatticeKind::HeavyHex).num_sites(), 7);
    }

    #[test]
    fn distances() {
        let sq = build_lattice(LatticeKind::Square, 2, 2).unwrap();
        let d = all_pairs_distance(&sq).unwrap();
        assert_eq!(d.get(0, 3), 2);
        let path = build_lattice(LatticeKind::Square, 1, 3).unwrap();
        assert_eq!(all_pairs_distance(&path).unwrap().get(0, 2), 2);
        let fc = build_lattice(LatticeKind::FullyConnected, 1, 6).unwrap();
        let d = all_pairs_distance(&fc).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(d.get(a, b), u32::from(a != b));
            }
        }
        let broken = vec![vec![1], vec![0], vec![]];
        assert_eq!(DistanceMatrix::from_adjacency(&broken), Err(HardwareError::Disconnected));
    }

    #[test]
    fn tiny_lattices_fall_back_to_nominal_degree() {
        let d = build_lattice(LatticeKind::Square, 2, 2).unwrap().interior_average_degree();
        assert!(d.fallback);
        assert_eq!(d.value, 4.0);
    }

    #[test]
    fn exports() {
        let sq = build_lattice(LatticeKind::Square, 2, 2).unwrap();
        assert_eq!(sq.to_edge_list().lines().count(), 5);
        assert_eq!(sq.to_adjacency_csv(), "0,1,1,0\n1,0,0,1\n1,0,0,1\n0,1,1,0\n");
    }
}
