use rand::Rng as _;

use super::{Placement, RouteError, RoutingConfig};
use crate::circuit::Gate;
use crate::hardware::{DistanceMatrix, HardwareGraph};
use crate::rng;

const NONE: usize = usize::MAX;
const EXTENDED_WEIGHT: f64 = 0.5;
const TIE_EPS: f64 = 1e-10;

/// Per-qubit dependency DAG of the cost section of a layer.
pub(crate) struct BodyDag {
    gates: Vec<Gate>,
    /// Next gate on each operand.
    succ: Vec<[usize; 2]>,
    npred: Vec<u8>,
    two_qubit: usize,
}

impl BodyDag {
    pub(crate) fn new(body: &[Gate], n: usize) -> Result<Self, RouteError> {
        let mut succ = vec![[NONE; 2]; body.len()];
        let mut npred = vec![0u8; body.len()];
        let mut last: Vec<(usize, usize)> = vec![(NONE, 0); n];
        let mut two_qubit = 0;
        for (k, g) in body.iter().enumerate() {
            if matches!(g, Gate::H(_)) {
                return Err(RouteError::NotSingleLayer);
            }
            let (a, b) = g.qubits();
            let mut preds = [NONE; 2];
            for (slot, q) in [Some(a), b].into_iter().enumerate() {
                let Some(q) = q else { continue };
                let (p, pslot) = last[q];
                if p != NONE {
                    succ[p][pslot] = k;
                    preds[slot] = p;
                }
                last[q] = (k, slot);
            }
            npred[k] = match preds {
                [NONE, NONE] => 0,
                [x, y] if x == y || x == NONE || y == NONE => 1,
                _ => 2,
            };
            if b.is_some() {
                two_qubit += 1;
            }
        }
        Ok(Self {
            gates: body.to_vec(),
            succ,
            npred,
            two_qubit,
        })
    }

    /// Distinct unordered logical pairs acted on by two-qubit gates.
    pub(crate) fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .gates
            .iter()
            .filter_map(|g| match g.qubits() {
                (a, Some(b)) => Some((a.min(b), a.max(b))),
                _ => None,
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.into_iter()
    }
}

/// One SABRE sweep over a [`BodyDag`].
pub(crate) struct Pass<'a> {
    dag: &'a BodyDag,
    hw: &'a HardwareGraph,
    dist: &'a DistanceMatrix,
    lookahead: usize,
    decay: f64,
    rng: rng::Rng,
    emit: bool,

    site_of: Vec<usize>,
    at_site: Vec<usize>,
    remaining: Vec<u8>,
    front: Vec<usize>,
    out: Vec<Gate>,

    penalty: Vec<f64>,
    last_op: Vec<u64>,
    last_was_swap: Vec<bool>,
    op_counter: u64,

    // Scratch for the lookahead window.
    stamp: Vec<u32>,
    generation: u32,
    extended: Vec<usize>,
    queue: Vec<usize>,
    candidates: Vec<(usize, usize)>,
}

impl<'a> Pass<'a> {
    pub(crate) fn new(
        dag: &'a BodyDag,
        hw: &'a HardwareGraph,
        dist: &'a DistanceMatrix,
        pl: &Placement,
        cfg: &RoutingConfig,
        seed: u64,
        emit: bool,
    ) -> Self {
        let sites = hw.num_sites();
        let mut at_site = vec![NONE; sites];
        for (q, &s) in pl.sites().iter().enumerate() {
            at_site[s] = q;
        }
        Self {
            dag,
            hw,
            dist,
            lookahead: cfg.lookahead,
            decay: cfg.decay,
            rng: rng::rng_from(seed, &[0x5ab2e]),
            emit,
            site_of: pl.sites().to_vec(),
            at_site,
            remaining: dag.npred.clone(),
            front: Vec::new(),
            out: Vec::with_capacity(if emit { dag.gates.len() * 2 } else { 0 }),
            penalty: vec![1.0; sites],
            last_op: vec![0; sites],
            last_was_swap: vec![false; sites],
            op_counter: 0,
            stamp: vec![0; dag.gates.len()],
            generation: 0,
            extended: Vec::new(),
            queue: Vec::new(),
            candidates: Vec::new(),
        }
    }

    fn touch(&mut self, s: usize, swap: bool) {
        self.last_op[s] = self.op_counter;
        self.last_was_swap[s] = swap;
    }

    fn executable(&self, g: usize) -> bool {
        match self.dag.gates[g].qubits() {
            (a, Some(b)) => self.hw.is_adjacent(self.site_of[a], self.site_of[b]),
            _ => true,
        }
    }

    fn execute(&mut self, g: usize, ready: &mut Vec<usize>) {
        let gate = self.dag.gates[g];
        self.op_counter += 1;
        let (a, b) = gate.qubits();
        self.touch(self.site_of[a], false);
        if let Some(b) = b {
            self.touch(self.site_of[b], false);
            self.penalty.iter_mut().for_each(|p| *p = 1.0);
        }
        if self.emit {
            self.out.push(gate.remap(|q| self.site_of[q]));
        }
        // A successor shared by both operands is released once.
        let [s0, s1] = self.dag.succ[g];
        let mut release = |s: usize, remaining: &mut Vec<u8>| {
            if s != NONE {
                remaining[s] -= 1;
                if remaining[s] == 0 {
                    ready.push(s);
                }
            }
        };
        release(s0, &mut self.remaining);
        if s1 != s0 {
            release(s1, &mut self.remaining);
        }
    }

    /// Executes everything reachable without SWAPs; blocked two-qubit
    /// gates join the front.
    fn drain(&mut self, mut ready: Vec<usize>) -> bool {
        let mut progressed = false;
        while let Some(g) = ready.pop() {
            if self.executable(g) {
                self.execute(g, &mut ready);
                progressed = true;
            } else {
                self.front.push(g);
            }
        }
        progressed
    }

    fn retry_front(&mut self) -> bool {
        let mut ready = Vec::new();
        let mut k = 0;
        while k < self.front.len() {
            if self.executable(self.front[k]) {
                ready.push(self.front.swap_remove(k));
            } else {
                k += 1;
            }
        }
        ready.sort_unstable();
        ready.reverse();
        let any = !ready.is_empty();
        let mut queue = Vec::new();
        for g in ready {
            self.execute(g, &mut queue);
        }
        self.drain(queue);
        any
    }

    fn apply_swap(&mut self, s: usize, t: usize) {
        let (qa, qb) = (self.at_site[s], self.at_site[t]);
        self.at_site[s] = qb;
        self.at_site[t] = qa;
        if qa != NONE {
            self.site_of[qa] = t;
        }
        if qb != NONE {
            self.site_of[qb] = s;
        }
        self.op_counter += 1;
        self.touch(s, true);
        self.touch(t, true);
        self.penalty[s] /= self.decay;
        self.penalty[t] /= self.decay;
        if self.emit {
            self.out.push(Gate::Swap(s, t));
        }
    }

    fn fill_extended(&mut self) {
        self.extended.clear();
        if self.lookahead == 0 {
            return;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.queue.clear();
        for &g in &self.front {
            self.stamp[g] = self.generation;
            self.queue.push(g);
        }
        let mut head = 0;
        while head < self.queue.len() && self.extended.len() < self.lookahead {
            let g = self.queue[head];
            head += 1;
            for s in self.dag.succ[g] {
                if s == NONE || self.stamp[s] == self.generation {
                    continue;
                }
                self.stamp[s] = self.generation;
                self.queue.push(s);
                if self.dag.gates[s].is_two_qubit() {
                    self.extended.push(s);
                    if self.extended.len() == self.lookahead {
                        break;
                    }
                }
            }
        }
    }

    fn cost(&self, set: &[usize], s: usize, t: usize) -> f64 {
        let (qa, qb) = (self.at_site[s], self.at_site[t]);
        let pos = |q: usize| {
            if q == qa {
                t
            } else if q == qb {
                s
            } else {
                self.site_of[q]
            }
        };
        set.iter()
            .map(|&g| match self.dag.gates[g].qubits() {
                (a, Some(b)) => self.dist.get(pos(a), pos(b)) as f64,
                _ => 0.0,
            })
            .sum()
    }

    fn choose_swap(&mut self) -> (usize, usize) {
        self.candidates.clear();
        for &g in &self.front {
            if let (a, Some(b)) = self.dag.gates[g].qubits() {
                for q in [a, b] {
                    let s = self.site_of[q];
                    for &t in self.hw.neighbors(s) {
                        self.candidates.push((s.min(t), s.max(t)));
                    }
                }
            }
        }
        self.candidates.sort_unstable();
        self.candidates.dedup();
        // Undoing the previous SWAP before either site was used again can
        // only cancel against it.
        let undo = |me: &Self, (s, t): (usize, usize)| me.last_was_swap[s] && me.last_op[s] == me.last_op[t];
        if self.candidates.len() > 1 {
            let filtered: Vec<_> = self.candidates.iter().copied().filter(|&c| !undo(self, c)).collect();
            if !filtered.is_empty() {
                self.candidates = filtered;
            }
        }
        self.fill_extended();
        let nf = self.front.len().max(1) as f64;
        let ne = self.extended.len().max(1) as f64;
        let scores: Vec<f64> = self
            .candidates
            .iter()
            .map(|&(s, t)| {
                let mut h = self.cost(&self.front, s, t) / nf;
                if !self.extended.is_empty() {
                    h += EXTENDED_WEIGHT * self.cost(&self.extended, s, t) / ne;
                }
                self.penalty[s].max(self.penalty[t]) * h
            })
            .collect();
        let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..scores.len()).filter(|&k| scores[k] <= best + TIE_EPS).collect();
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            tied[self.rng.random_range(0..tied.len())]
        };
        self.candidates[pick]
    }

    /// Walks the closest front gate together along a shortest path.
    fn force_route(&mut self) {
        let &g = self
            .front
            .iter()
            .min_by_key(|&&g| {
                let (a, b) = self.dag.gates[g].qubits();
                (self.dist.get(self.site_of[a], self.site_of[b.unwrap()]), g)
            })
            .expect("front is non-empty");
        let (a, b) = self.dag.gates[g].qubits();
        let b = b.unwrap();
        loop {
            let (sa, sb) = (self.site_of[a], self.site_of[b]);
            let d = self.dist.get(sa, sb);
            if d <= 1 {
                break;
            }
            let next = *self
                .hw
                .neighbors(sa)
                .iter()
                .find(|&&t| self.dist.get(t, sb) + 1 == d)
                .expect("shortest path step exists");
            self.apply_swap(sa.min(next), sa.max(next));
        }
    }

    pub(crate) fn run(&mut self) -> Result<(), RouteError> {
        let initial: Vec<usize> = (0..self.dag.gates.len()).rev().filter(|&g| self.remaining[g] == 0).collect();
        self.drain(initial);
        let cap = (self.dag.two_qubit * self.hw.num_sites()).max(1);
        let stall_limit = 10 * self.hw.num_sites().max(4);
        let mut swaps = 0usize;
        let mut stalled = 0usize;
        while !self.front.is_empty() {
            if stalled >= stall_limit {
                self.force_route();
                stalled = 0;
            } else {
                let (s, t) = self.choose_swap();
                self.apply_swap(s, t);
                stalled += 1;
            }
            swaps += 1;
            if swaps > cap {
                return Err(RouteError::SwapLimit(cap));
            }
            if self.retry_front() {
                stalled = 0;
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> (Vec<Gate>, Vec<usize>) {
        (self.out, self.site_of)
    }
}
