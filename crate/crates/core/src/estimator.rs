//! Scalar noise model, measurement-count bound and the empirical SWAP laws.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{closed_form_counts, CircuitError, GateCounts};
use crate::hardware::LatticeKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("error probability {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error("target probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("fidelity {0} outside (0, 1]")]
    InvalidFidelity(f64),
    #[error("hardware degree {0} must be positive")]
    InvalidDegree(f64),
    #[error("problem size {n} below the swap-free size {n0}")]
    SizeBelowOffset { n: usize, n0: usize },
    #[error("sweep range `{0}` is empty")]
    EmptyRange(&'static str),
    #[error(transparent)]
    Counts(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eps_cnot: f64,
    pub eps_h: f64,
    pub eps_r: f64,
}

impl NoiseModel {
    pub fn new(eps_cnot: f64, eps_h: f64, eps_r: f64) -> Result<Self, EstimateError> {
        let nm = Self { eps_cnot, eps_h, eps_r };
        nm.validate()?;
        Ok(nm)
    }

    /// Single-qubit error rates a tenth of the CNOT rate.
    pub fn from_cnot(eps_cnot: f64) -> Result<Self, EstimateError> {
        Self::new(eps_cnot, eps_cnot / 10.0, eps_cnot / 10.0)
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        for e in [self.eps_cnot, self.eps_h, self.eps_r] {
            if !(0.0..1.0).contains(&e) {
                return Err(EstimateError::InvalidEpsilon(e));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub f0: f64,
    pub log_f0: f64,
    pub m_upper: f64,
    pub log_m: f64,
    pub m_ceil: f64,
    pub p_target: f64,
    pub counts: GateCounts,
}

/// `ln F₀` for possibly fractional gate counts.
pub fn log_fidelity(n_cnot: f64, n_h: f64, n_r: f64, nm: &NoiseModel) -> Result<f64, EstimateError> {
    nm.validate()?;
    Ok(n_cnot * (-nm.eps_cnot).ln_1p() + n_h * (-nm.eps_h).ln_1p() + n_r * (-nm.eps_r).ln_1p())
}

pub fn fidelity_lower_bound(counts: &GateCounts, nm: &NoiseModel) -> Result<f64, EstimateError> {
    log_fidelity(counts.n_cnot as f64, counts.n_h as f64, counts.n_r as f64, nm).map(f64::exp)
}

/// `ln M` from `ln F₀`; stays finite when `F₀` underflows.
pub fn log_measurements_upper_bound(log_f0: f64, p_target: f64) -> Result<f64, EstimateError> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(EstimateError::InvalidProbability(p_target));
    }
    if log_f0.is_nan() || log_f0 > 0.0 {
        return Err(EstimateError::InvalidFidelity(log_f0.exp()));
    }
    if log_f0 == 0.0 {
        return Ok(0.0);
    }
    let num = (-(-p_target).ln_1p()).ln();
    // -ln(1 - F0), with F0 = exp(log_f0)
    let den = if log_f0 < -30.0 {
        log_f0
    } else {
        (-(-log_f0.exp()).ln_1p()).ln()
    };
    Ok((num - den).max(0.0))
}

pub fn measurements_upper_bound(f0: f64, p_target: f64) -> Result<f64, EstimateError> {
    if !(f0 > 0.0 && f0 <= 1.0) {
        return Err(EstimateError::InvalidFidelity(f0));
    }
    log_measurements_upper_bound(f0.ln(), p_target).map(f64::exp)
}

pub fn estimate(counts: &GateCounts, nm: &NoiseModel, p_target: f64) -> Result<Estimate, EstimateError> {
    let log_f0 = log_fidelity(counts.n_cnot as f64, counts.n_h as f64, counts.n_r as f64, nm)?;
    let log_m = log_measurements_upper_bound(log_f0, p_target)?;
    let m_upper = log_m.exp();
    Ok(Estimate {
        f0: log_f0.exp(),
        log_f0,
        m_upper,
        log_m,
        m_ceil: m_upper.ceil(),
        p_target,
        counts: *counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    /// Largest problem size that maps without SWAPs.
    pub n0: usize,
}

impl EmpiricalParams {
    pub const A: f64 = 5.9;
    pub const B: f64 = -2.5;
    pub const MU: f64 = 0.73;

    pub fn published(n0: usize) -> Self {
        Self {
            a: Self::A,
            b: Self::B,
            mu: Self::MU,
            n0,
        }
    }

    pub fn for_lattice(kind: LatticeKind, n: usize) -> Self {
        Self::published(swap_free_size(kind, n))
    }
}

/// `n₀`: 3 on the triangle lattice, 2 on the other planar lattices and
/// `n` itself with all-to-all connectivity.
pub fn swap_free_size(kind: LatticeKind, n: usize) -> usize {
    kind.swap_free_size().unwrap_or(n)
}

/// Effective hardware degree used by the empirical laws.
pub fn effective_degree(kind: LatticeKind, n: usize) -> f64 {
    kind.nominal_degree().unwrap_or((n.max(2) - 1) as f64)
}

pub fn empirical_nswap_degree(d_g: f64, d_h: f64, params: &EmpiricalParams) -> Result<f64, EstimateError> {
    if d_h.is_nan() || d_h <= 0.0 {
        return Err(EstimateError::InvalidDegree(d_h));
    }
    Ok((params.a * d_g / d_h + params.b).max(0.0))
}

pub fn empirical_nswap_size(n: usize, d_h: f64, params: &EmpiricalParams) -> Result<f64, EstimateError> {
    if d_h.is_nan() || d_h <= 0.0 {
        return Err(EstimateError::InvalidDegree(d_h));
    }
    if n < params.n0 {
        return Err(EstimateError::SizeBelowOffset { n, n0: params.n0 });
    }
    Ok(params.mu * (n - params.n0) as f64 * (n as f64).sqrt() / d_h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub ps: Vec<usize>,
    pub lattices: Vec<LatticeKind>,
    pub d_gs: Vec<f64>,
    pub eps_cnots: Vec<f64>,
    /// Single-qubit error rate as a fraction of the CNOT rate.
    pub single_qubit_ratio: f64,
    pub p_target: f64,
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ns: (1..=10).map(|k| 100 * k).collect(),
            ps: vec![20],
            lattices: LatticeKind::ALL.to_vec(),
            d_gs: vec![3.0],
            eps_cnots: vec![5e-5],
            single_qubit_ratio: 0.1,
            p_target: 0.99,
            sigma: 3.0,
            a: EmpiricalParams::A,
            b: EmpiricalParams::B,
            mu: EmpiricalParams::MU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: usize,
    pub lattice: LatticeKind,
    pub d_g: f64,
    pub eps_cnot: f64,
    /// SWAPs per layer from the size law.
    pub n_swap: f64,
    pub n_cnot: f64,
    pub f0: f64,
    pub m: f64,
    pub log_f0: f64,
    pub log_m: f64,
}

pub const SWEEP_HEADER: &str = "n,p,lattice,d_G,eps_cnot,N_SWAP,N_CNOT,F0,M";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.n,
            self.p,
            self.lattice.name(),
            self.d_g,
            self.eps_cnot,
            self.n_swap,
            self.n_cnot,
            self.f0,
            self.m
        )
    }
}

/// One sweep point: closed-form counts with `η = n` and no first-layer
/// cancellation, plus `p·σ·N_SWAP` routing CNOTs.
pub fn sweep_point(n: usize, p: usize, lattice: LatticeKind, d_g: f64, eps_cnot: f64, spec: &SweepSpec) -> Result<SweepRow, EstimateError> {
    let nm = NoiseModel::new(eps_cnot, eps_cnot * spec.single_qubit_ratio, eps_cnot * spec.single_qubit_ratio)?;
    let counts = closed_form_counts(n, p, d_g, n, 0)?;
    let params = EmpiricalParams {
        a: spec.a,
        b: spec.b,
        mu: spec.mu,
        n0: swap_free_size(lattice, n),
    };
    let n_swap = empirical_nswap_size(n, effective_degree(lattice, n), &params)?;
    let n_cnot = counts.n_cnot_fc as f64 + p as f64 * spec.sigma * n_swap;
    let log_f0 = log_fidelity(n_cnot, counts.n_h as f64, counts.n_r as f64, &nm)?;
    let log_m = log_measurements_upper_bound(log_f0, spec.p_target)?;
    Ok(SweepRow {
        n,
        p,
        lattice,
        d_g,
        eps_cnot,
        n_swap,
        n_cnot,
        f0: log_f0.exp(),
        m: log_m.exp(),
        log_f0,
        log_m,
    })
}

/// Rows ordered by n, then p, lattice, d_G and ε_CNOT.
pub fn scaling_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, EstimateError> {
    for (name, empty) in [
        ("n", spec.ns.is_empty()),
        ("p", spec.ps.is_empty()),
        ("lattice", spec.lattices.is_empty()),
        ("d_G", spec.d_gs.is_empty()),
        ("eps_cnot", spec.eps_cnots.is_empty()),
    ] {
        if empty {
            return Err(EstimateError::EmptyRange(name));
        }
    }
    if !(spec.p_target > 0.0 && spec.p_target < 1.0) {
        return Err(EstimateError::InvalidProbability(spec.p_target));
    }
    let mut rows = Vec::new();
    for &n in &spec.ns {
        for &p in &spec.ps {
            for &lattice in &spec.lattices {
                for &d_g in &spec.d_gs {
                    for &eps in &spec.eps_cnots {
                        rows.push(sweep_point(n, p, lattice, d_g, eps, spec)?);
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn fidelity_examples() {
        let zero = NoiseModel::new(0.0, 0.0, 0.0).unwrap();
        let counts = closed_form_counts(500, 20, 3.0, 500, 0).unwrap();
        assert_eq!(fidelity_lower_bound(&counts, &zero).unwrap(), 1.0);
        let one = GateCounts {
            n_cnot: 1,
            ..GateCounts::default()
        };
        let nm = NoiseModel::new(0.5, 0.0, 0.0).unwrap();
        assert!(close(fidelity_lower_bound(&one, &nm).unwrap(), 0.5, 1e-15));
        assert_eq!((counts.n_cnot, counts.n_h, counts.n_r), (30000, 20500, 35000));
        let f0 = fidelity_lower_bound(&counts, &NoiseModel::from_cnot(5e-5).unwrap()).unwrap();
        assert!(close(f0, 0.169, 0.005), "{f0}");
        let m = measurements_upper_bound(f0, 0.99).unwrap();
        assert!((24.0..26.0).contains(&m), "{m}");
        assert!(NoiseModel::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn measurement_examples() {
        assert!(close(measurements_upper_bound(0.99, 0.99).unwrap(), 1.0, 1e-12));
        assert!(close(measurements_upper_bound(0.5, 0.99).unwrap(), 6.643856189774724, 1e-12));
        assert_eq!(measurements_upper_bound(1.0, 0.99).unwrap(), 1.0);
        assert!(measurements_upper_bound(0.0, 0.99).is_err());
        assert!(measurements_upper_bound(0.5, 1.0).is_err());
        // Underflowed F0 still yields a finite log M.
        let lm = log_measurements_upper_bound(-1000.0, 0.99).unwrap();
        assert!(close(lm, (0.01f64.ln().abs()).ln() + 1000.0, 1e-12));
    }

    #[test]
    fn empirical_examples() {
        let p = EmpiricalParams::published(2);
        assert!(close(empirical_nswap_degree(6.0, 4.0, &p).unwrap(), 6.35, 1e-12));
        assert_eq!(empirical_nswap_degree(1.0, 4.0, &p).unwrap(), 0.0);
        assert_eq!(empirical_nswap_degree(3.0, 1e12, &p).unwrap(), 0.0);
        assert!(close(empirical_nswap_size(60, 4.0, &p).unwrap(), 82.0, 0.001));
        assert_eq!(empirical_nswap_size(2, 4.0, &p).unwrap(), 0.0);
        assert!(close(empirical_nswap_size(500, 2.5, &p).unwrap(), 3251.6, 1e-4));
        assert!(empirical_nswap_size(1, 4.0, &p).is_err());
        let fc = EmpiricalParams::for_lattice(LatticeKind::FullyConnected, 500);
        assert_eq!(empirical_nswap_size(500, 499.0, &fc).unwrap(), 0.0);
    }

    #[test]
    fn sweep_reference_points() {
        let spec = SweepSpec::default();
        let m = |kind, d_g| sweep_point(500, 20, kind, d_g, 5e-5, &spec).unwrap();
        let hh = m(LatticeKind::HeavyHex, 3.0);
        assert!(close(hh.n_cnot, 225097.0, 1e-4), "{}", hh.n_cnot);
        assert!(close(hh.m, 4.7e5, 0.05), "{}", hh.m);
        assert!(close(m(LatticeKind::Triangle, 3.0).m, 1.6e3, 0.1));
        assert!(close(m(LatticeKind::FullyConnected, 25.0).m, 2.8e6, 0.05));
        assert_eq!(scaling_sweep(&spec).unwrap().len(), 50);
        let bad = SweepSpec {
            p_target: 1.0,
            ..SweepSpec::default()
        };
        assert!(scaling_sweep(&bad).is_err());
    }

    #[test]
    fn monotone_in_counts_and_eps() {
        let nm = NoiseModel::from_cnot(1e-3).unwrap();
        let mut prev = 1.0;
        for k in 0..50 {
            let f = log_fidelity(k as f64 * 10.0, 5.0, 5.0, &nm).unwrap().exp();
            assert!(f <= prev);
            prev = f;
        }
        let m1 = measurements_upper_bound(0.3, 0.9).unwrap();
        let m2 = measurements_upper_bound(0.3, 0.99).unwrap();
        let m3 = measurements_upper_bound(0.4, 0.99).unwrap();
        assert!(m1 <= m2 && m3 <= m2);
    }
}
