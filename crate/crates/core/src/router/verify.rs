//! Equivalence check for routed layers.
//!
//! The section after the Hadamard wall and before each qubit's next
//! Hadamard holds only CNOT, SWAP and Z rotations, so the state there is
//! `Σ_x exp(iφ(x)) |Ax⟩` over the wall qubits `x`, with `A` a GF(2) matrix
//! and `φ` a sum of rotations on parities of `x`. Two circuits agree on that
//! section iff their `A` match row by row (through the final placement) up to
//! an invertible change of variables `B`, and `φ` transforms accordingly.
//! Everything after a qubit's closing Hadamard must be single-qubit and
//! identical gate for gate.

use std::collections::HashMap;

use super::RoutedResult;
use crate::circuit::{Circuit, Gate};
use crate::hardware::HardwareGraph;

type Bits = Vec<u64>;

struct Summary {
    parity: Vec<Bits>,
    phases: HashMap<Bits, f64>,
    tails: Vec<Vec<Gate>>,
}

fn unit(words: usize, i: usize) -> Bits {
    let mut b = vec![0; words];
    b[i / 64] |= 1 << (i % 64);
    b
}

fn xor_into(dst: &mut Bits, src: &Bits) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

fn is_zero(b: &Bits) -> bool {
    b.iter().all(|&w| w == 0)
}

fn bit(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

/// `var_of[q]` names the variable fed into qubit `q` by the wall, if any.
fn summarize(c: &Circuit, wall: usize, var_of: &[Option<usize>], words: usize) -> Option<Summary> {
    let n = c.num_qubits();
    let mut parity: Vec<Bits> = var_of
        .iter()
        .map(|v| v.map_or_else(|| vec![0; words], |i| unit(words, i)))
        .collect();
    let mut closed = vec![false; n];
    let mut tails = vec![Vec::new(); n];
    let mut phases: HashMap<Bits, f64> = HashMap::new();
    for g in &c.gates()[wall..] {
        match *g {
            Gate::H(q) => {
                closed[q] = true;
                tails[q].push(*g);
            }
            Gate::R { qubit, .. } if closed[qubit] => tails[qubit].push(*g),
            Gate::R { qubit, angle, .. } => {
                if !is_zero(&parity[qubit]) {
                    *phases.entry(parity[qubit].clone()).or_insert(0.0) += angle;
                }
            }
            Gate::Cnot { control, target, .. } => {
                if closed[control] || closed[target] {
                    return None;
                }
                let src = parity[control].clone();
                xor_into(&mut parity[target], &src);
            }
            Gate::Swap(a, b) => {
                if closed[a] || closed[b] {
                    return None;
                }
                parity.swap(a, b);
            }
        }
    }
    phases.retain(|_, v| v.abs() > 1e-12);
    Some(Summary { parity, phases, tails })
}

/// Solves `L_q · B = R_q` for all rows; `None` if no invertible `B` fits.
fn change_of_variables(lhs: &[Bits], rhs: &[Bits], k: usize) -> Option<Vec<Bits>> {
    let mut rows: Vec<(Bits, Bits)> = lhs.iter().cloned().zip(rhs.iter().cloned()).collect();
    let mut b = vec![Vec::new(); k];
    for (top, col) in (0..k).enumerate() {
        let pivot = (top..rows.len()).find(|&r| bit(&rows[r].0, col))?;
        rows.swap(top, pivot);
        let (pl, pr) = rows[top].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != top && bit(&row.0, col) {
                xor_into(&mut row.0, &pl);
                xor_into(&mut row.1, &pr);
            }
        }
    }
    for (l, r) in &rows[..k] {
        let col = (0..k).find(|&i| bit(l, i))?;
        b[col] = r.clone();
    }
    if rows[k..].iter().any(|(_, r)| !is_zero(r)) {
        return None;
    }
    // B must be invertible.
    let mut m = b.clone();
    for col in 0..k {
        let pivot = (col..k).find(|&r| bit(&m[r], col))?;
        m.swap(col, pivot);
        let p = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && bit(row, col) {
                xor_into(row, &p);
            }
        }
    }
    Some(b)
}

fn wall_parity(c: &Circuit, wall: usize) -> Vec<bool> {
    let mut odd = vec![false; c.num_qubits()];
    for g in &c.gates()[..wall] {
        odd[g.qubits().0] ^= true;
    }
    odd
}

/// Checks that `routed` implements the logical layer `logical` on `hw`:
/// every two-qubit gate sits on a hardware edge and the output state
/// matches up to the final placement.
pub fn verify_routed(logical: &Circuit, routed: &RoutedResult, hw: &HardwareGraph) -> bool {
    let rc = &routed.circuit;
    let (init, fin) = (&routed.initial, &routed.final_placement);
    let n = logical.num_qubits();
    let sites = hw.num_sites();
    if rc.num_qubits() != sites
        || init.num_qubits() != n
        || fin.num_qubits() != n
        || init.num_sites() != sites
        || fin.num_sites() != sites
    {
        return false;
    }
    if rc.gates().iter().any(|g| match g.qubits() {
        (a, Some(b)) => !hw.is_adjacent(a, b),
        (a, None) => a >= sites,
    }) {
        return false;
    }

    let lwall = crate::circuit::hadamard_wall_len(logical);
    let rwall = crate::circuit::hadamard_wall_len(rc);
    let lodd = wall_parity(logical, lwall);
    let rodd = wall_parity(rc, rwall);
    for (s, &odd) in rodd.iter().enumerate() {
        let expected = init.logical_at(s).is_some_and(|q| lodd[q]);
        if odd != expected {
            return false;
        }
    }

    let mut var_of_logical = vec![None; n];
    let mut k = 0;
    for q in 0..n {
        if lodd[q] {
            var_of_logical[q] = Some(k);
            k += 1;
        }
    }
    let var_of_site: Vec<Option<usize>> = (0..sites)
        .map(|s| init.logical_at(s).and_then(|q| var_of_logical[q]))
        .collect();
    let words = k.div_ceil(64).max(1);
    let (Some(ls), Some(rs)) = (
        summarize(logical, lwall, &var_of_logical, words),
        summarize(rc, rwall, &var_of_site, words),
    ) else {
        return false;
    };

    for s in 0..sites {
        if fin.logical_at(s).is_none() && (!is_zero(&rs.parity[s]) || !rs.tails[s].is_empty()) {
            return false;
        }
    }
    for q in 0..n {
        let s = fin.site(q);
        let expected: Vec<Gate> = ls.tails[q].iter().map(|g| g.remap(|_| s)).collect();
        if rs.tails[s] != expected {
            return false;
        }
    }

    let rhs: Vec<Bits> = (0..n).map(|q| rs.parity[fin.site(q)].clone()).collect();
    let Some(b) = change_of_variables(&ls.parity, &rhs, k) else {
        return false;
    };
    let mut mapped: HashMap<Bits, f64> = HashMap::new();
    for (c, v) in &ls.phases {
        let mut image = vec![0; words];
        for (i, row) in b.iter().enumerate() {
            if bit(c, i) {
                xor_into(&mut image, row);
            }
        }
        *mapped.entry(image).or_insert(0.0) += v;
    }
    mapped.retain(|_, v| v.abs() > 1e-12);
    mapped.len() == rs.phases.len()
        && mapped
            .iter()
            .all(|(c, v)| rs.phases.get(c).is_some_and(|w| (v - w).abs() <= 1e-9 * (1.0 + v.abs())))
}
