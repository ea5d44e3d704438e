//! Gate-level circuits over the {H, R(θ), CNOT, SWAP} gate set, QAOA
//! synthesis, gate counting and the two QAOA-specific cancellation passes.
//!
//! A cost term `exp(-iγJ Z_i Z_j)` is emitted as the trio
//! `CNOT(i,j) · R_j(2γJ) · CNOT(i,j)`; all three gates carry the same
//! [`EdgeTag`].

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::IsingInstance;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("operand {qubit} out of range for {num_qubits} qubits")]
    OperandOutOfRange { qubit: usize, num_qubits: usize },
    #[error("two-qubit gate on repeated operand {0}")]
    RepeatedOperand(usize),
    #[error("angle lists differ in length: {gammas} gammas, {betas} betas")]
    AngleMismatch { gammas: usize, betas: usize },
    #[error("invalid count input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Identifies the cost term a gate implements: layer index and the index
/// of the coupling in the instance's canonical edge order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeTag {
    pub layer: u32,
    pub edge: u32,
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.edge)
    }
}

impl FromStr for EdgeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, e) = s.split_once(':').ok_or_else(|| format!("bad tag {s:?}"))?;
        Ok(EdgeTag {
            layer: l.parse().map_err(|_| format!("bad tag layer {l:?}"))?,
            edge: e.parse().map_err(|_| format!("bad tag edge {e:?}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    /// Z rotation `exp(-i(θ/2)Z)`.
    R { qubit: usize, angle: f64, tag: Option<EdgeTag> },
    Cnot { control: usize, target: usize, tag: Option<EdgeTag> },
    Swap(usize, usize),
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target, tag: None }
    }

    pub fn rz(qubit: usize, angle: f64) -> Gate {
        Gate::R { qubit, angle, tag: None }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Swap(..))
    }

    /// Operands; the second is `None` for single-qubit gates.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::R { qubit: q, .. } => (q, None),
            Gate::Cnot { control, target, .. } => (control, Some(target)),
            Gate::Swap(a, b) => (a, Some(b)),
        }
    }

    pub fn tag(&self) -> Option<EdgeTag> {
        match *self {
            Gate::R { tag, .. } | Gate::Cnot { tag, .. } => tag,
            _ => None,
        }
    }

    /// Same gate with operands sent through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(f(q)),
            Gate::R { qubit, angle, tag } => Gate::R { qubit: f(qubit), angle, tag },
            Gate::Cnot { control, target, tag } => Gate::Cnot {
                control: f(control),
                target: f(target),
                tag,
            },
            Gate::Swap(a, b) => Gate::Swap(f(a), f(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Logical,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    frame: Frame,
    layers: usize,
    gates: Vec<Gate>,
    n0: usize,
    expanded_swaps: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize, frame: Frame) -> Self {
        Self {
            num_qubits,
            frame,
            layers: 0,
            gates: Vec::new(),
            n0: 0,
            expanded_swaps: 0,
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Number of QAOA layers the circuit implements.
    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// First-layer CNOTs removed so far by [`cancel_first_layer`].
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// SWAPs already replaced by CNOT triples.
    pub fn expanded_swaps(&self) -> usize {
        self.expanded_swaps
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        let (a, b) = gate.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= self.num_qubits {
                return Err(CircuitError::OperandOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        if b == Some(a) {
            return Err(CircuitError::RepeatedOperand(a));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        debug_assert!({
            let (a, b) = gate.qubits();
            a < self.num_qubits && b.is_none_or(|b| b < self.num_qubits && b != a)
        });
        self.gates.push(gate);
    }

    fn with_gates(&self, gates: Vec<Gate>) -> Circuit {
        Circuit {
            gates,
            ..self.clone()
        }
    }

    /// Serializes to the line-per-gate text format: a few `key value`
    /// header lines, then `KIND q0 [q1] [angle] [tag=L:E]` per gate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let frame = match self.frame {
            Frame::Logical => "logical",
            Frame::Physical => "physical",
        };
        let _ = writeln!(out, "# qscale circuit");
        let _ = writeln!(out, "qubits {}", self.num_qubits);
        let _ = writeln!(out, "frame {frame}");
        let _ = writeln!(out, "layers {}", self.layers);
        let _ = writeln!(out, "n0 {}", self.n0);
        let _ = writeln!(out, "expanded_swaps {}", self.expanded_swaps);
        for g in &self.gates {
            let _ = match *g {
                Gate::H(q) => writeln!(out, "H {q}"),
                Gate::R { qubit, angle, tag } => match tag {
                    Some(t) => writeln!(out, "R {qubit} {angle:?} tag={t}"),
                    None => writeln!(out, "R {qubit} {angle:?}"),
                },
                Gate::Cnot { control, target, tag } => match tag {
                    Some(t) => writeln!(out, "CNOT {control} {target} tag={t}"),
                    None => writeln!(out, "CNOT {control} {target}"),
                },
                Gate::Swap(a, b) => writeln!(out, "SWAP {a} {b}"),
            };
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(0, Frame::Logical);
        let mut have_qubits = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| CircuitError::Parse { line, msg };
            let data = raw.split('#').next().unwrap_or("").trim();
            if data.is_empty() {
                continue;
            }
            let toks: Vec<&str> = data.split_whitespace().collect();
            let num = |t: &str| t.parse::<usize>().map_err(|_| err(format!("invalid integer {t:?}")));
            let mut tag = None;
            let mut args: Vec<&str> = Vec::new();
            for t in &toks[1..] {
                match t.strip_prefix("tag=") {
                    Some(v) => tag = Some(v.parse::<EdgeTag>().map_err(&err)?),
                    None => args.push(t),
                }
            }
            let gate = match (toks[0], args.as_slice()) {
                ("qubits", [v]) => {
                    c.num_qubits = num(v)?;
                    have_qubits = true;
                    continue;
                }
                ("frame", [v]) => {
                    c.frame = match *v {
                        "logical" => Frame::Logical,
                        "physical" => Frame::Physical,
                        other => return Err(err(format!("unknown frame {other:?}"))),
                    };
                    continue;
                }
                ("layers", [v]) => {
                    c.layers = num(v)?;
                    continue;
                }
                ("n0", [v]) => {
                    c.n0 = num(v)?;
                    continue;
                }
                ("expanded_swaps", [v]) => {
                    c.expanded_swaps = num(v)?;
                    continue;
                }
                ("H", [q]) => Gate::H(num(q)?),
                ("R", [q, a]) => Gate::R {
                    qubit: num(q)?,
                    angle: a.parse().map_err(|_| err(format!("invalid angle {a:?}")))?,
                    tag,
                },
                ("CNOT", [a, b]) => Gate::Cnot {
                    control: num(a)?,
                    target: num(b)?,
                    tag,
                },
                ("SWAP", [a, b]) => Gate::Swap(num(a)?, num(b)?),
                (kind, _) => return Err(err(format!("unrecognised line {kind:?} with {} operands", args.len()))),
            };
            if !have_qubits {
                return Err(err("gate before `qubits` header".into()));
            }
            c.push(gate).map_err(|e| err(e.to_string()))?;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaAngles {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl QaoaAngles {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, CircuitError> {
        if gammas.len() != betas.len() {
            return Err(CircuitError::AngleMismatch {
                gammas: gammas.len(),
                betas: betas.len(),
            });
        }
        Ok(Self { gammas, betas })
    }

    /// `p` layers sharing the same angles.
    pub fn uniform(p: usize, gamma: f64, beta: f64) -> Self {
        Self {
            gammas: vec![gamma; p],
            betas: vec![beta; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

/// Hadamard wall, then per layer: one trio per nonzero coupling in
/// canonical edge order, one `R_i(2γh_i)` per nonzero field, and the mixer
/// `H R(2β) H` on every qubit.
pub fn synthesize_qaoa(inst: &IsingInstance, angles: &QaoaAngles) -> Circuit {
    let n = inst.num_qubits();
    let mut c = Circuit::new(n, Frame::Logical).with_layers(angles.p());
    for q in 0..n {
        c.push_unchecked(Gate::H(q));
    }
    for (layer, (&gamma, &beta)) in angles.gammas.iter().zip(&angles.betas).enumerate() {
        for (edge, &(i, j, w)) in inst.couplings().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let tag = Some(EdgeTag {
                layer: layer as u32,
                edge: edge as u32,
            });
            c.push_unchecked(Gate::Cnot { control: i, target: j, tag });
            c.push_unchecked(Gate::R {
                qubit: j,
                angle: 2.0 * gamma * w,
                tag,
            });
            c.push_unchecked(Gate::Cnot { control: i, target: j, tag });
        }
        for (q, &h) in inst.fields().iter().enumerate() {
            if h != 0.0 {
                c.push_unchecked(Gate::rz(q, 2.0 * gamma * h));
            }
        }
        for q in 0..n {
            c.push_unchecked(Gate::H(q));
            c.push_unchecked(Gate::rz(q, 2.0 * beta));
            c.push_unchecked(Gate::H(q));
        }
    }
    c
}

/// Gate tallies for a circuit or a closed-form estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GateCounts {
    pub n_h: usize,
    pub n_r: usize,
    /// CNOTs including the three-CNOT cost of every SWAP still present.
    pub n_cnot: usize,
    pub n_swap: usize,
    pub n0: usize,
    /// CNOTs the same circuit needs on fully connected hardware.
    pub n_cnot_fc: usize,
    /// Net CNOTs per SWAP beyond `n_cnot_fc`; `None` without SWAPs.
    pub sigma: Option<f64>,
}

/// Gate counts on fully connected hardware:
/// `N_H = 2np + n`, `N_R = p(η + n(d_G+2)/2)`, `N_CNOT = p·n·d_G − n0`.
pub fn closed_form_counts(n: usize, p: usize, d_g: f64, eta: usize, n0: usize) -> Result<GateCounts, CircuitError> {
    if !d_g.is_finite() || d_g < 0.0 {
        return Err(CircuitError::InvalidInput(format!("average degree {d_g} must be finite and nonnegative")));
    }
    let twice_edges = n as f64 * d_g;
    if (twice_edges - twice_edges.round()).abs() > 1e-9 || !(twice_edges.round() as usize).is_multiple_of(2) {
        return Err(CircuitError::InvalidInput(format!("n·d_G = {twice_edges} is not an even integer")));
    }
    if eta > n {
        return Err(CircuitError::InvalidInput(format!("eta {eta} exceeds n {n}")));
    }
    if n0 > n / 2 {
        return Err(CircuitError::InvalidInput(format!("n0 {n0} exceeds floor(n/2) = {}", n / 2)));
    }
    let edges = twice_edges.round() as usize / 2;
    let fc = (p * 2 * edges)
        .checked_sub(n0)
        .ok_or_else(|| CircuitError::InvalidInput(format!("n0 {n0} exceeds the {} cost CNOTs", p * 2 * edges)))?;
    Ok(GateCounts {
        n_h: 2 * n * p + n,
        n_r: p * (eta + edges + n),
        n_cnot: fc,
        n_swap: 0,
        n0,
        n_cnot_fc: fc,
        sigma: None,
    })
}

/// Exact tallies. `n_cnot_fc` is twice the number of distinct tagged cost
/// terms minus the circuit's `n0`.
pub fn count_gates(c: &Circuit) -> GateCounts {
    let mut counts = GateCounts {
        n0: c.n0,
        n_swap: c.expanded_swaps,
        ..GateCounts::default()
    };
    let mut terms = std::collections::HashSet::new();
    for g in &c.gates {
        match *g {
            Gate::H(_) => counts.n_h += 1,
            Gate::R { tag, .. } => {
                counts.n_r += 1;
                if let Some(t) = tag {
                    terms.insert(t);
                }
            }
            Gate::Cnot { .. } => counts.n_cnot += 1,
            Gate::Swap(..) => {
                counts.n_swap += 1;
                counts.n_cnot += 3;
            }
        }
    }
    counts.n_cnot_fc = (2 * terms.len()).saturating_sub(c.n0);
    if counts.n_swap > 0 {
        counts.sigma = Some((counts.n_cnot as f64 - counts.n_cnot_fc as f64) / counts.n_swap as f64);
    }
    counts
}

/// Length of the maximal prefix of Hadamards.
pub(crate) fn hadamard_wall_len(c: &Circuit) -> usize {
    c.gates.iter().take_while(|g| matches!(g, Gate::H(_))).count()
}

/// Removes tagged cost CNOTs whose operands are both still in `|+⟩`: scans
/// left to right after the leading Hadamard wall, and a qubit stays fresh
/// until any gate touches it. Qubits missing from the wall never count as
/// fresh. Returns the circuit and the number of CNOTs removed.
pub fn cancel_first_layer(c: &Circuit) -> (Circuit, usize) {
    let wall = hadamard_wall_len(c);
    let mut fresh = vec![false; c.num_qubits];
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in &c.gates[..wall] {
        let (q, _) = g.qubits();
        fresh[q] = !fresh[q];
        gates.push(*g);
    }
    let mut removed = 0;
    for g in &c.gates[wall..] {
        let (a, b) = g.qubits();
        if let Gate::Cnot { tag: Some(_), .. } = g {
            let b = b.expect("cnot has two operands");
            if fresh[a] && fresh[b] {
                fresh[a] = false;
                fresh[b] = false;
                removed += 1;
                continue;
            }
        }
        fresh[a] = false;
        if let Some(b) = b {
            fresh[b] = false;
        }
        gates.push(*g);
    }
    let mut out = c.with_gates(gates);
    out.n0 += removed;
    (out, removed)
}

/// Deletes pairs of identical CNOTs with no gate on either operand between
/// them, to a fixpoint. SWAPs block cancellation; expand them first.
pub fn cancel_adjacent_cnots(c: &Circuit) -> Circuit {
    // Per-qubit stacks of surviving gate indices: a CNOT cancels against the
    // gate on top of both of its operands' stacks.
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); c.num_qubits];
    let mut alive = vec![true; c.gates.len()];
    for (k, g) in c.gates.iter().enumerate() {
        let (a, b) = g.qubits();
        if let (Gate::Cnot { control, target, .. }, Some(b)) = (g, b) {
            if let (Some(&ta), Some(&tb)) = (stacks[a].last(), stacks[b].last()) {
                if ta == tb {
                    if let Gate::Cnot { control: pc, target: pt, .. } = c.gates[ta] {
                        if pc == *control && pt == *target {
                            stacks[a].pop();
                            stacks[b].pop();
                            alive[ta] = false;
                            alive[k] = false;
                            continue;
                        }
                    }
                }
            }
        }
        stacks[a].push(k);
        if let Some(b) = b {
            stacks[b].push(k);
        }
    }
    let gates = c
        .gates
        .iter()
        .zip(&alive)
        .filter(|(_, &keep)| keep)
        .map(|(g, _)| *g)
        .collect();
    c.with_gates(gates)
}

/// Replaces each SWAP by three alternating CNOTs, oriented so the outer
/// CNOTs match an adjacent CNOT on the same pair when there is one.
pub fn expand_swaps(c: &Circuit) -> Circuit {
    let len = c.gates.len();
    let mut prev = vec![usize::MAX; len];
    let mut next = vec![usize::MAX; len];
    let mut last = vec![usize::MAX; c.num_qubits];
    // For SWAPs, prev/next hold the neighbouring gate when it is the same
    // gate on both operands.
    for (k, g) in c.gates.iter().enumerate() {
        let (a, b) = g.qubits();
        if let Some(b) = b {
            if last[a] == last[b] {
                prev[k] = last[a];
            }
            last[b] = k;
        }
        last[a] = k;
    }
    last.fill(usize::MAX);
    for (k, g) in c.gates.iter().enumerate().rev() {
        let (a, b) = g.qubits();
        if let Some(b) = b {
            if last[a] == last[b] {
                next[k] = last[a];
            }
            last[b] = k;
        }
        last[a] = k;
    }
    let control_of = |idx: usize| match c.gates.get(idx) {
        Some(Gate::Cnot { control, .. }) => Some(*control),
        _ => None,
    };
    let mut gates = Vec::with_capacity(len + 2 * len / 3);
    let mut expanded = 0;
    for (k, g) in c.gates.iter().enumerate() {
        let Gate::Swap(a, b) = *g else {
            gates.push(*g);
            continue;
        };
        let x = control_of(next[k]).or_else(|| control_of(prev[k])).unwrap_or(a.min(b));
        let y = if x == a { b } else { a };
        gates.extend([Gate::cnot(x, y), Gate::cnot(y, x), Gate::cnot(x, y)]);
        expanded += 1;
    }
    let mut out = c.with_gates(gates);
    out.expanded_swaps += expanded;
    out
}

/// Randomly permutes the tagged trios within each run of cost terms,
/// keeping each trio contiguous and every other gate in place.
pub fn shuffle_edge_terms(c: &Circuit, seed: u64) -> Circuit {
    let mut rng = rng::rng_from(seed, &[0x5ffe]);
    let gates = &c.gates;
    let mut out = Vec::with_capacity(gates.len());
    let mut k = 0;
    while k < gates.len() {
        let Some(tag) = gates[k].tag() else {
            out.push(gates[k]);
            k += 1;
            continue;
        };
        // Collect consecutive blocks of one layer, each block one tag.
        let mut blocks: Vec<&[Gate]> = Vec::new();
        while k < gates.len() {
            let Some(t) = gates[k].tag() else { break };
            if t.layer != tag.layer {
                break;
            }
            let start = k;
            while k < gates.len() && gates[k].tag() == Some(t) {
                k += 1;
            }
            blocks.push(&gates[start..k]);
        }
        blocks.shuffle(&mut rng);
        for b in blocks {
            out.extend_from_slice(b);
        }
    }
    c.with_gates(out)
}

/// Number of time steps when every gate takes one step and gates on
/// disjoint qubits run in parallel. An unexpanded SWAP takes three steps.
pub fn depth(c: &Circuit) -> usize {
    let mut level = vec![0usize; c.num_qubits];
    let mut max = 0;
    for g in &c.gates {
        let (a, b) = g.qubits();
        let cost = if matches!(g, Gate::Swap(..)) { 3 } else { 1 };
        let start = b.map_or(level[a], |b| level[a].max(level[b]));
        let end = start + cost;
        level[a] = end;
        if let Some(b) = b {
            level[b] = end;
        }
        max = max.max(end);
    }
    max
}
