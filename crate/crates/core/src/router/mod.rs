//! Qubit placement and SWAP routing of single QAOA layers.
//!
//! [`optimize`] runs two nested loops: an outer loop over random orderings
//! of the commuting cost trios and an inner loop over random initial
//! placements, each refined by a forward/backward/forward SABRE sweep. The
//! trial with the fewest CNOTs after cancellation wins.

mod sabre;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    self, cancel_adjacent_cnots, cancel_first_layer, count_gates, expand_swaps, shuffle_edge_terms, synthesize_qaoa, Circuit, Frame,
    Gate, GateCounts, QaoaAngles,
};
use crate::graphs::{IsingInstance, ProblemGraph};
use crate::hardware::{all_pairs_distance, DistanceMatrix, HardwareError, HardwareGraph};
use crate::rng;

pub use verify::verify_routed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("{qubits} logical qubits do not fit on {sites} hardware sites")]
    TooManyQubits { qubits: usize, sites: usize },
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("invalid routing config: {0}")]
    InvalidConfig(String),
    #[error("circuit is not a single cost layer: Hadamard inside the cost section")]
    NotSingleLayer,
    #[error("routing exceeded the cap of {0} SWAPs")]
    SwapLimit(usize),
    #[error("lower bound needs a maximum hardware degree of at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error(transparent)]
    Hardware(#[from] HardwareError),
}

/// Injective map from logical qubits to hardware sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlacementRepr", into = "PlacementRepr")]
pub struct Placement {
    sites: Vec<usize>,
    inverse: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PlacementRepr {
    num_sites: usize,
    sites: Vec<usize>,
}

impl TryFrom<PlacementRepr> for Placement {
    type Error = RouteError;

    fn try_from(r: PlacementRepr) -> Result<Self, Self::Error> {
        Placement::new(r.sites, r.num_sites)
    }
}

impl From<Placement> for PlacementRepr {
    fn from(p: Placement) -> Self {
        PlacementRepr {
            num_sites: p.inverse.len(),
            sites: p.sites,
        }
    }
}

impl Placement {
    pub fn new(sites: Vec<usize>, num_sites: usize) -> Result<Self, RouteError> {
        let mut inverse = vec![None; num_sites];
        for (q, &s) in sites.iter().enumerate() {
            let slot = inverse
                .get_mut(s)
                .ok_or_else(|| RouteError::InvalidPlacement(format!("site {s} out of range for {num_sites} sites")))?;
            if let Some(other) = slot.replace(q) {
                return Err(RouteError::InvalidPlacement(format!("qubits {other} and {q} share site {s}")));
            }
        }
        Ok(Self { sites, inverse })
    }

    pub fn identity(n: usize, num_sites: usize) -> Result<Self, RouteError> {
        if n > num_sites {
            return Err(RouteError::TooManyQubits { qubits: n, sites: num_sites });
        }
        Self::new((0..n).collect(), num_sites)
    }

    pub fn num_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn num_sites(&self) -> usize {
        self.inverse.len()
    }

    pub fn site(&self, qubit: usize) -> usize {
        self.sites[qubit]
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn logical_at(&self, site: usize) -> Option<usize> {
        self.inverse.get(site).copied().flatten()
    }
}

/// Uniform random injective placement, deterministic in `seed`.
pub fn random_placement(n: usize, hw: &HardwareGraph, seed: u64) -> Result<Placement, RouteError> {
    use rand::seq::SliceRandom;
    let sites = hw.num_sites();
    if n > sites {
        return Err(RouteError::TooManyQubits { qubits: n, sites });
    }
    let mut order: Vec<usize> = (0..sites).collect();
    order.shuffle(&mut rng::rng_from(seed, &[0x91ac]));
    order.truncate(n);
    Placement::new(order, sites)
}

/// Problem edges whose endpoints are not on adjacent sites.
pub fn count_unsatisfied_edges(g: &ProblemGraph, pl: &Placement, hw: &HardwareGraph) -> usize {
    g.edges()
        .iter()
        .filter(|&&(i, j)| !hw.is_adjacent(pl.site(i), pl.site(j)))
        .count()
}

/// Degree-based lower bound on the SWAPs any routing needs:
/// `⌈½ Σ_j ⌈δ_j / (h_max − 1)⌉⌉` with `δ_j = max(0, deg_j − h_max)`, using
/// the family's `h_max` (3 on heavy-hex).
pub fn swap_lower_bound(g: &ProblemGraph, hw: &HardwareGraph) -> Result<usize, RouteError> {
    swap_lower_bound_for_degree(g, hw.family_h_max())
}

pub fn swap_lower_bound_for_degree(g: &ProblemGraph, h_max: usize) -> Result<usize, RouteError> {
    if h_max < 2 {
        return Err(RouteError::DegreeTooSmall(h_max));
    }
    let per_vertex: usize = g
        .degrees()
        .into_iter()
        .map(|d| d.saturating_sub(h_max).div_ceil(h_max - 1))
        .sum();
    Ok(per_vertex.div_ceil(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    /// Random orderings of the cost trios (outer loop).
    pub shuffles: usize,
    /// Random initial placements per ordering (inner loop).
    pub iterations: usize,
    /// Number of upcoming two-qubit gates in the lookahead window; 0
    /// disables lookahead.
    pub lookahead: usize,
    pub seed: u64,
    /// Each SWAP divides the penalty of both sites by `decay`; penalties
    /// reset whenever a two-qubit gate executes.
    pub decay: f64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            shuffles: 50,
            iterations: 20,
            lookahead: 10,
            seed: 0,
            decay: 0.999,
        }
    }
}

impl RoutingConfig {
    /// Loop sizes used for the published ensembles, keyed by problem size.
    pub fn preset_for(n: usize) -> Self {
        let (iterations, lookahead) = match n {
            0..=7 => (20, 10),
            8..=20 => (40, 40),
            21..=40 => (100, 100),
            _ => (140, 140),
        };
        Self {
            iterations,
            lookahead,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RouteError> {
        if self.shuffles == 0 || self.iterations == 0 {
            return Err(RouteError::InvalidConfig("shuffles and iterations must be at least 1".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(RouteError::InvalidConfig(format!("decay {} outside (0, 1]", self.decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutedStats {
    pub counts: GateCounts,
    /// Unsatisfied problem edges under the initial placement.
    pub n_u: usize,
    /// Depth after SWAP expansion and cancellation.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedResult {
    pub circuit: Circuit,
    pub initial: Placement,
    #[serde(rename = "final")]
    pub final_placement: Placement,
    pub stats: RoutedStats,
}

/// Splits a layer circuit into its leading Hadamard wall, the cost section
/// (through the last two-qubit gate) and the trailing single-qubit gates.
pub(crate) fn split_layer(c: &Circuit) -> (&[Gate], &[Gate], &[Gate]) {
    let gates = c.gates();
    let wall = circuit::hadamard_wall_len(c);
    let body_end = gates.iter().rposition(Gate::is_two_qubit).map_or(wall, |k| (k + 1).max(wall));
    (&gates[..wall], &gates[wall..body_end], &gates[body_end..])
}

/// Routes layers on one piece of hardware, reusing its distance table.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    hw: &'a HardwareGraph,
    dist: DistanceMatrix,
}

impl<'a> Router<'a> {
    pub fn new(hw: &'a HardwareGraph) -> Result<Self, RouteError> {
        Ok(Self {
            hw,
            dist: all_pairs_distance(hw)?,
        })
    }

    pub fn hardware(&self) -> &HardwareGraph {
        self.hw
    }

    fn check(&self, layer: &Circuit, pl: &Placement) -> Result<(), RouteError> {
        if pl.num_sites() != self.hw.num_sites() || pl.num_qubits() != layer.num_qubits() {
            return Err(RouteError::InvalidPlacement(format!(
                "placement maps {} qubits onto {} sites, expected {} onto {}",
                pl.num_qubits(),
                pl.num_sites(),
                layer.num_qubits(),
                self.hw.num_sites()
            )));
        }
        Ok(())
    }

    /// One forward SABRE pass from `pl`, then SWAP expansion, adjacent CNOT
    /// cancellation and first-layer cancellation.
    pub fn route(&self, layer: &Circuit, pl: &Placement, cfg: &RoutingConfig, seed: u64) -> Result<RoutedResult, RouteError> {
        self.check(layer, pl)?;
        let (wall, body, tail) = split_layer(layer);
        let dag = sabre::BodyDag::new(body, layer.num_qubits())?;
        let mut pass = sabre::Pass::new(&dag, self.hw, &self.dist, pl, cfg, seed, true);
        pass.run()?;
        let (routed_body, final_sites) = pass.finish();
        let final_placement = Placement::new(final_sites, self.hw.num_sites())?;

        let mut physical = Circuit::new(self.hw.num_sites(), Frame::Physical).with_layers(layer.layers());
        for g in wall {
            physical.push_unchecked(g.remap(|q| pl.site(q)));
        }
        for g in routed_body {
            physical.push_unchecked(g);
        }
        for g in tail {
            physical.push_unchecked(g.remap(|q| final_placement.site(q)));
        }
        let (physical, _) = cancel_first_layer(&cancel_adjacent_cnots(&expand_swaps(&physical)));
        let n_u = dag
            .pairs()
            .filter(|&(a, b)| !self.hw.is_adjacent(pl.site(a), pl.site(b)))
            .count();
        let stats = RoutedStats {
            counts: count_gates(&physical),
            n_u,
            depth: circuit::depth(&physical),
        };
        Ok(RoutedResult {
            circuit: physical,
            initial: pl.clone(),
            final_placement,
            stats,
        })
    }

    /// Forward pass then a pass over the reversed cost section; the
    /// placement the reverse pass ends on is a better starting point.
    pub fn refine_placement(&self, layer: &Circuit, pl: &Placement, cfg: &RoutingConfig, seed: u64) -> Result<Placement, RouteError> {
        self.check(layer, pl)?;
        let (_, body, _) = split_layer(layer);
        let forward = sabre::BodyDag::new(body, layer.num_qubits())?;
        let mut pass = sabre::Pass::new(&forward, self.hw, &self.dist, pl, cfg, rng::derive_seed(seed, &[1]), false);
        pass.run()?;
        let mid = Placement::new(pass.finish().1, self.hw.num_sites())?;
        let reversed: Vec<Gate> = body.iter().rev().copied().collect();
        let backward = sabre::BodyDag::new(&reversed, layer.num_qubits())?;
        let mut pass = sabre::Pass::new(&backward, self.hw, &self.dist, &mid, cfg, rng::derive_seed(seed, &[2]), false);
        pass.run()?;
        Placement::new(pass.finish().1, self.hw.num_sites())
    }
}

/// Single forward routing pass of `layer` from placement `pl`.
pub fn route_sabre(layer: &Circuit, hw: &HardwareGraph, pl: &Placement, cfg: &RoutingConfig) -> Result<RoutedResult, RouteError> {
    cfg.validate()?;
    Router::new(hw)?.route(layer, pl, cfg, cfg.seed)
}

/// Summary of one (shuffle, placement) trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub shuffle: usize,
    pub iteration: usize,
    pub n_cnot: usize,
    pub n_swap: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub best: RoutedResult,
    /// Every trial in index order (`shuffle * iterations + iteration`).
    pub trials: Vec<TrialSummary>,
}

/// Angles used for the routed layer. Routing depends only on the two-qubit
/// structure, so any fixed values serve.
pub const ROUTING_ANGLES: (f64, f64) = (0.5, 0.5);

pub fn optimize_with_trials(inst: &IsingInstance, hw: &HardwareGraph, cfg: &RoutingConfig) -> Result<Optimized, RouteError> {
    cfg.validate()?;
    let n = inst.num_qubits();
    if n > hw.num_sites() {
        return Err(RouteError::TooManyQubits {
            qubits: n,
            sites: hw.num_sites(),
        });
    }
    let router = Router::new(hw)?;
    let layer = synthesize_qaoa(inst, &QaoaAngles::uniform(1, ROUTING_ANGLES.0, ROUTING_ANGLES.1));
    let shuffled: Vec<Circuit> = (0..cfg.shuffles)
        .map(|s| shuffle_edge_terms(&layer, rng::derive_seed(cfg.seed, &[1, s as u64])))
        .collect();
    let outcomes: Vec<(TrialSummary, RoutedResult)> = (0..cfg.shuffles * cfg.iterations)
        .into_par_iter()
        .map(|t| {
            let (s, i) = (t / cfg.iterations, t % cfg.iterations);
            let trial_seed = rng::derive_seed(cfg.seed, &[2, s as u64, i as u64]);
            let start = random_placement(n, hw, trial_seed)?;
            let refined = router.refine_placement(&shuffled[s], &start, cfg, trial_seed)?;
            let routed = router.route(&shuffled[s], &refined, cfg, rng::derive_seed(trial_seed, &[3]))?;
            let summary = TrialSummary {
                shuffle: s,
                iteration: i,
                n_cnot: routed.stats.counts.n_cnot,
                n_swap: routed.stats.counts.n_swap,
                depth: routed.stats.depth,
            };
            Ok((summary, routed))
        })
        .collect::<Result<_, RouteError>>()?;
    let key = |s: &TrialSummary| (s.n_cnot, s.depth, s.shuffle * cfg.iterations + s.iteration);
    let best = outcomes
        .iter()
        .min_by_key(|(s, _)| key(s))
        .map(|(_, r)| r.clone())
        .expect("at least one trial");
    Ok(Optimized {
        best,
        trials: outcomes.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Best routed single layer over `shuffles × iterations` trials, by fewest
/// CNOTs, then lower depth, then lower trial index.
pub fn optimize(inst: &IsingInstance, hw: &HardwareGraph, cfg: &RoutingConfig) -> Result<RoutedResult, RouteError> {
    optimize_with_trials(inst, hw, cfg).map(|o| o.best)
}

/// Whole-circuit counts for `p` layers when each layer repeats the routed
/// single layer mirrored: `N_CNOT = N_CNOT^fc + p·σ·N_SWAP`.
pub fn mirror_counts(single: &GateCounts, n: usize, p: usize) -> GateCounts {
    let terms2 = single.n_cnot_fc + single.n0;
    let extra = single.n_cnot - single.n_cnot_fc;
    let fc = (p * terms2).saturating_sub(if p > 0 { single.n0 } else { 0 });
    GateCounts {
        n_h: 2 * n * p + n,
        n_r: p * single.n_r,
        n_cnot: fc + p * extra,
        n_swap: p * single.n_swap,
        n0: if p > 0 { single.n0 } else { 0 },
        n_cnot_fc: fc,
        sigma: if p > 0 { single.sigma } else { None },
    }
}

pub fn mirror_layers(single_layer: &RoutedResult, p: usize) -> GateCounts {
    mirror_counts(&single_layer.stats.counts, single_layer.initial.num_qubits(), p)
}
