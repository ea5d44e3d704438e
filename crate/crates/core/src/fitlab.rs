//! Ordinary least squares for the scaling laws, all linear in their
//! parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hardware::LatticeKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("{points} points cannot determine {params} parameters")]
    InsufficientPoints { points: usize, params: usize },
    #[error("design matrix has rank {rank} < {params}")]
    RankDeficient { rank: usize, params: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no data")]
    Empty,
    #[error("non-finite value in fit input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Asymptotic standard errors, scaled by `rmse_adj`.
    pub stderr: Vec<f64>,
    /// `√(RSS / n_points)`.
    pub rmse: f64,
    /// `√(RSS / (n_points − #params))`.
    pub rmse_adj: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rmse: f64,
    pub rmse_adj: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn report(&self, model: &str) -> FitReport {
        FitReport {
            model: model.to_string(),
            params: self.params.clone(),
            stderr: self.stderr.clone(),
            rmse: self.rmse,
            rmse_adj: self.rmse_adj,
            n_points: self.n_points,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.params).map(|(x, p)| x * p).sum()
    }
}

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64, FitError> {
    if pred.len() != obs.len() {
        return Err(FitError::LengthMismatch(pred.len(), obs.len()));
    }
    if pred.is_empty() {
        return Err(FitError::Empty);
    }
    let ss: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// OLS fit of `y ≈ X·params`.
pub fn fit_linear_model(design: &DMatrix<f64>, y: &[f64]) -> Result<FitResult, FitError> {
    let (m, k) = design.shape();
    if m != y.len() {
        return Err(FitError::LengthMismatch(m, y.len()));
    }
    if m <= k {
        return Err(FitError::InsufficientPoints { points: m, params: k });
    }
    if design.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let sv = design.clone().singular_values();
    let tol = sv.max() * m.max(k) as f64 * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < k {
        return Err(FitError::RankDeficient { rank, params: k });
    }
    let yv = DVector::from_column_slice(y);
    let xtx = design.transpose() * design;
    let lu = xtx.full_piv_lu();
    let beta = lu
        .solve(&(design.transpose() * &yv))
        .ok_or(FitError::RankDeficient { rank, params: k })?;
    let inv = lu.try_inverse().ok_or(FitError::RankDeficient { rank, params: k })?;
    let resid = &yv - design * &beta;
    let rss = resid.norm_squared();
    let rmse = (rss / m as f64).sqrt();
    let rmse_adj = (rss / (m - k) as f64).sqrt();
    let stderr = (0..k).map(|j| rmse_adj * inv[(j, j)].max(0.0).sqrt()).collect();
    Ok(FitResult {
        params: beta.iter().copied().collect(),
        stderr,
        rmse,
        rmse_adj,
        n_points: m,
    })
}

/// Builds a design matrix from equal-length rows.
pub fn design_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, FitError> {
    let k = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(FitError::LengthMismatch(bad.len(), k));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

/// `N_SWAP = a·d_G/d_H + b`; params are `[a, b]`.
pub fn fit_degree_model(d_g: &[f64], d_h: &[f64], n_swap: &[f64]) -> Result<FitResult, FitError> {
    if d_g.len() != d_h.len() {
        return Err(FitError::LengthMismatch(d_g.len(), d_h.len()));
    }
    let rows: Vec<Vec<f64>> = d_g.iter().zip(d_h).map(|(g, h)| vec![g / h, 1.0]).collect();
    fit_linear_model(&design_from_rows(&rows)?, n_swap)
}

pub fn size_predictor(n: usize, n0: usize, d_h: f64) -> f64 {
    n.saturating_sub(n0) as f64 * (n as f64).sqrt() / d_h
}

pub fn unsatisfied_predictor(n: usize, n0: usize, d_h: f64) -> f64 {
    n.saturating_sub(n0) as f64 / d_h.sqrt()
}

/// `N_SWAP = μ(n − n₀)√n/d_H`; params are `[μ]`.
pub fn fit_size_model(points: &[(usize, usize, f64)], n_swap: &[f64]) -> Result<FitResult, FitError> {
    let rows: Vec<Vec<f64>> = points.iter().map(|&(n, n0, d_h)| vec![size_predictor(n, n0, d_h)]).collect();
    fit_linear_model(&design_from_rows(&rows)?, n_swap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsatRow {
    pub lattice: LatticeKind,
    pub n: usize,
    pub d_h: f64,
    pub n_u: f64,
}

/// `N_u = ν(n − n₀)/√d_H` over all rows; params are `[ν]`.
pub fn fit_unsatisfied_edges(data: &[UnsatRow], n0_map: impl Fn(LatticeKind, usize) -> usize) -> Result<FitResult, FitError> {
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|r| vec![unsatisfied_predictor(r.n, n0_map(r.lattice, r.n), r.d_h)])
        .collect();
    let y: Vec<f64> = data.iter().map(|r| r.n_u).collect();
    fit_linear_model(&design_from_rows(&rows)?, &y)
}

/// Separate `ν` per lattice, in [`LatticeKind::ALL`] order.
pub fn fit_unsatisfied_edges_per_lattice(
    data: &[UnsatRow],
    n0_map: impl Fn(LatticeKind, usize) -> usize,
) -> Result<Vec<(LatticeKind, FitResult)>, FitError> {
    LatticeKind::ALL
        .iter()
        .filter(|&&k| data.iter().any(|r| r.lattice == k))
        .map(|&k| {
            let subset: Vec<UnsatRow> = data.iter().copied().filter(|r| r.lattice == k).collect();
            fit_unsatisfied_edges(&subset, &n0_map).map(|f| (k, f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = fit_linear_model(&design_from_rows(&rows).unwrap(), &y).unwrap();
        assert!((f.params[0] - 2.0).abs() < 1e-12 && (f.params[1] - 1.0).abs() < 1e-12);
        assert!(f.rmse < 1e-12);
        assert_eq!(f.n_points, 5);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        let d = design_from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert!(matches!(fit_linear_model(&d, &[1.0, 2.0, 3.0]), Err(FitError::RankDeficient { .. })));
        let d = design_from_rows(&[vec![1.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(fit_linear_model(&d, &[1.0, 2.0]), Err(FitError::InsufficientPoints { .. })));
        let rows = [
            UnsatRow { lattice: LatticeKind::Square, n: 2, d_h: 4.0, n_u: 0.0 },
            UnsatRow { lattice: LatticeKind::Square, n: 2, d_h: 4.0, n_u: 1.0 },
        ];
        assert!(matches!(fit_unsatisfied_edges(&rows, |_, _| 2), Err(FitError::RankDeficient { .. })));
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i % 7) as f64, 1.0]).collect();
        let y: Vec<f64> = (0..20).map(|i| ((i * 37) % 11) as f64).collect();
        let d = design_from_rows(&rows).unwrap();
        let f = fit_linear_model(&d, &y).unwrap();
        let resid = DVector::from_vec(y.clone()) - &d * DVector::from_vec(f.params.clone());
        let dot = d.transpose() * resid;
        assert!(dot.amax() < 1e-9, "{dot}");
    }

    #[test]
    fn unsatisfied_noiseless_recovery() {
        let mut data = Vec::new();
        for &kind in &LatticeKind::PLANAR {
            for n in [7, 20, 40, 60] {
                let d_h = kind.nominal_degree().unwrap();
                let n0 = kind.swap_free_size().unwrap();
                data.push(UnsatRow { lattice: kind, n, d_h, n_u: 1.71 * unsatisfied_predictor(n, n0, d_h) });
            }
        }
        let n0 = |k: LatticeKind, n| k.swap_free_size().unwrap_or(n);
        let f = fit_unsatisfied_edges(&data, n0).unwrap();
        assert!((f.params[0] - 1.71).abs() < 1e-9);
        let per = fit_unsatisfied_edges_per_lattice(&data, n0).unwrap();
        assert_eq!(per.len(), 4);
        assert!(per.iter().all(|(_, f)| (f.params[0] - 1.71).abs() < 1e-9));
    }
}
