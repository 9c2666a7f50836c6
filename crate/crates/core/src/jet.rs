//! 2-jets of immersion maps: position, first and second partial
//! derivatives at a chart point.
//!
//! The production path is [`jet2_hyperdual`], which is exact to machine
//! precision. [`jet2_finite_difference`] exists as an independent
//! cross-check oracle and is never used by downstream geometry.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::EvalError;
use crate::hyperdual::HyperDual;
use crate::immersion::{ImmersionSpec, SpecError};
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("domain error: {0}")]
    Domain(SpecError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Position, gradient and Hessian of each flat-model coordinate of an
/// immersion at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    /// Chart dimension `n`.
    pub n: usize,
    /// Flat model dimension `N`.
    pub flat_dim: usize,
    /// `L(x)`, length `N`.
    pub point: Vec<f64>,
    /// `first[(c, i)] = dL_c/dx_i`, an `N x n` matrix.
    pub first: Mat,
    /// Flattened `N x n x n` array of second partials, symmetric in the
    /// two chart indices.
    second: Vec<f64>,
}

impl Jet2 {
    fn zeroed(n: usize, flat_dim: usize) -> Self {
        Jet2 {
            n,
            flat_dim,
            point: vec![0.0; flat_dim],
            first: Mat::zeros(flat_dim, n),
            second: vec![0.0; flat_dim * n * n],
        }
    }

    #[inline]
    pub fn second(&self, coord: usize, i: usize, j: usize) -> f64 {
        self.second[(coord * self.n + i) * self.n + j]
    }

    fn set_second(&mut self, coord: usize, i: usize, j: usize, v: f64) {
        self.second[(coord * self.n + i) * self.n + j] = v;
        self.second[(coord * self.n + j) * self.n + i] = v;
    }

    /// The ambient vector `d^2 L / dx_i dx_j`.
    pub fn second_vec(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.flat_dim).map(|c| self.second(c, i, j)).collect()
    }

    /// The ambient vector `dL/dx_i`.
    pub fn first_vec(&self, i: usize) -> Vec<f64> {
        self.first.col(i)
    }

    /// Largest asymmetry `|second[.,i,j] - second[.,j,i]|` (zero for jets
    /// produced by this module, which fill both triangles at once).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.flat_dim {
            for i in 0..self.n {
                for j in 0..self.n {
                    worst = worst.max(libm::fabs(self.second(c, i, j) - self.second(c, j, i)));
                }
            }
        }
        worst
    }
}

/// Exact 2-jet via hyper-dual evaluation of every coordinate expression
/// over all index pairs `i <= j`.
pub fn jet2_hyperdual(spec: &ImmersionSpec, x: &[f64]) -> Result<Jet2, JetError> {
    spec.check_domain(x).map_err(JetError::Domain)?;
    let n = spec.n;
    let flat = spec.flat_dim();
    let mut jet = Jet2::zeroed(n, flat);
    let mut vars = vec![HyperDual::constant(0.0); n];
    for i in 0..n {
        for j in i..n {
            for (k, v) in vars.iter_mut().enumerate() {
                *v = HyperDual::new(
                    x[k],
                    if k == i { 1.0 } else { 0.0 },
                    if k == j { 1.0 } else { 0.0 },
                    0.0,
                );
            }
            let values = spec.evaluate(&vars)?;
            for (c, hv) in values.iter().enumerate() {
                if i == 0 && j == 0 {
                    jet.point[c] = hv.value;
                }
                if j == i {
                    jet.first[(c, i)] = hv.d1;
                }
                jet.set_second(c, i, j, hv.d12);
            }
        }
    }
    Ok(jet)
}

/// Default central-difference step: `cbrt(machine epsilon) * max(1, |x_i|)`.
pub fn fd_default_step(xi: f64) -> f64 {
    libm::cbrt(f64::EPSILON) * libm::fabs(xi).max(1.0)
}

/// Central-difference 2-jet used as a cross-check oracle. Steps shrink near
/// the domain boundary so every stencil point stays inside the box; a point
/// exactly on the boundary is a [`JetError::Domain`].
pub fn jet2_finite_difference(
    spec: &ImmersionSpec,
    x: &[f64],
    step: Option<f64>,
) -> Result<Jet2, JetError> {
    spec.check_domain(x).map_err(JetError::Domain)?;
    let n = spec.n;
    let flat = spec.flat_dim();

    let mut h = vec![0.0; n];
    for i in 0..n {
        let (lo, hi) = spec.domain[i];
        let room = (x[i] - lo).min(hi - x[i]);
        if room <= 0.0 {
            return Err(JetError::Domain(SpecError::SingularPoint(
                "finite-difference stencil has no room at the domain boundary".to_string(),
            )));
        }
        let want = step.unwrap_or_else(|| fd_default_step(x[i]));
        h[i] = want.min(room);
    }

    let eval = |pt: &[f64]| -> Result<Vec<f64>, JetError> {
        spec.evaluate(pt).map_err(JetError::Eval)
    };

    let f0 = eval(x)?;
    let mut jet = Jet2::zeroed(n, flat);
    jet.point.copy_from_slice(&f0);

    let mut fp = vec![Vec::new(); n];
    let mut fm = vec![Vec::new(); n];
    for i in 0..n {
        let mut xp = x.to_vec();
        xp[i] += h[i];
        let mut xm = x.to_vec();
        xm[i] -= h[i];
        fp[i] = eval(&xp)?;
        fm[i] = eval(&xm)?;
        for c in 0..flat {
            jet.first[(c, i)] = (fp[i][c] - fm[i][c]) / (2.0 * h[i]);
            let dd = (fp[i][c] - 2.0 * f0[c] + fm[i][c]) / (h[i] * h[i]);
            jet.set_second(c, i, i, dd);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut xpp = x.to_vec();
            xpp[i] += h[i];
            xpp[j] += h[j];
            let mut xpm = x.to_vec();
            xpm[i] += h[i];
            xpm[j] -= h[j];
            let mut xmp = x.to_vec();
            xmp[i] -= h[i];
            xmp[j] += h[j];
            let mut xmm = x.to_vec();
            xmm[i] -= h[i];
            xmm[j] -= h[j];
            let (fpp, fpm, fmp, fmm) = (eval(&xpp)?, eval(&xpm)?, eval(&xmp)?, eval(&xmm)?);
            for c in 0..flat {
                let dd = (fpp[c] - fpm[c] - fmp[c] + fmm[c]) / (4.0 * h[i] * h[j]);
                jet.set_second(c, i, j, dd);
            }
        }
    }
    Ok(jet)
}
