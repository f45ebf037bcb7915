//! Central second differences.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Smallest absolute step used for any coordinate.
pub const ABSOLUTE_STEP_FLOOR: f64 = 1e-6;

/// Step for coordinate value `x`: `rel_step * max(|x|, 1)`, never below [`ABSOLUTE_STEP_FLOOR`].
#[inline]
pub fn coordinate_step(x: f64, rel_step: f64) -> f64 {
    (rel_step * x.abs().max(1.0)).max(ABSOLUTE_STEP_FLOOR)
}

/// Symmetric central-difference Hessian of `f` at `at`.
pub fn numerical_hessian<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], rel_step: f64) -> Result<DMatrix<f64>> {
    let n = at.len();
    let steps: Vec<f64> = at.iter().map(|&x| coordinate_step(x, rel_step)).collect();
    let mut probe = at.to_vec();
    let eval = |probe: &[f64], row: usize, col: usize| {
        let v = f(probe);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Stencil { row, col })
        }
    };
    let center = eval(&probe, 0, 0)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = steps[i];
        probe[i] = at[i] + hi;
        let plus = eval(&probe, i, i)?;
        probe[i] = at[i] - hi;
        let minus = eval(&probe, i, i)?;
        probe[i] = at[i];
        h[(i, i)] = (plus - 2.0 * center + minus) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                probe[i] = at[i] + si * hi;
                probe[j] = at[j] + sj * hj;
                let v = eval(&probe, i, j);
                probe[i] = at[i];
                probe[j] = at[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    // already symmetric by construction; keep the contract explicit
    let sym = (&h + h.transpose()) * 0.5;
    Ok(sym)
}

/// Inverse of a symmetric matrix through its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymmetricInverse {
    pub inverse: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `1e-10 * max |lambda|` that were pseudo-inverted to zero.
    pub singular_directions: usize,
    /// Eigenvalues that are negative (indefinite information matrix).
    pub negative_directions: usize,
}

pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-10;

pub fn symmetric_inverse(m: &DMatrix<f64>) -> SymmetricInverse {
    let eig = SymmetricEigen::new(m.clone());
    let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cutoff = PSEUDO_INVERSE_CUTOFF * max_abs;
    let mut singular = 0;
    let mut negative = 0;
    let inv_vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            if l.abs() <= cutoff || !l.is_finite() {
                singular += 1;
                0.0
            } else {
                if l < 0.0 {
                    negative += 1;
                }
                1.0 / l
            }
        })
        .collect();
    let v = &eig.eigenvectors;
    let n = m.nrows();
    let mut inverse = DMatrix::zeros(n, n);
    for (k, &w) in inv_vals.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = v.column(k);
        inverse += (col * col.transpose()) * w;
    }
    let inverse = (&inverse + inverse.transpose()) * 0.5;
    SymmetricInverse {
        inverse,
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
        singular_directions: singular,
        negative_directions: negative,
    }
}
