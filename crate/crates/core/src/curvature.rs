//! Intrinsic curvature of the immersed manifold.
//!
//! The production path computes sectional and scalar curvature extrinsically
//! through the Gauss equation, which needs only the exact 2-jet. The
//! metric-side route (Christoffel symbols from finite differences of a
//! metric function, then the coordinate curvature tensor) exists purely as
//! a residual cross-check, as does the Codazzi residual.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::extrinsic::{self, ExtrinsicData, ExtrinsicError};
use crate::immersion::{closed_form_metric, ImmersionSpec, SpecError};
use crate::jet::{jet2_hyperdual, Jet2, JetError};
use crate::linalg::{self, Mat};
use crate::spaceform::ambient_inner;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurvatureError {
    #[error("plane is degenerate: vectors are linearly dependent")]
    DegeneratePlane,
    #[error("basis is not orthonormal (defect {0:e})")]
    NonOrthonormal(f64),
    #[error("metric is degenerate at a stencil point")]
    DegenerateMetric,
    #[error("first normal space has rank {0}; codimension-one Codazzi check unsupported")]
    Rank(usize),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Extrinsic(#[from] ExtrinsicError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Residuals of the structure equations at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub gauss_residual: f64,
    pub codazzi_residual: f64,
    pub metric_match_residual: f64,
}

/// Cached curvature data in the canonical orthonormal tangent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    /// Ambient curvature constant.
    pub c: f64,
    pub ext: ExtrinsicData,
    /// `sectional[(i, j)] = K(e_i ^ e_j)` for the canonical frame.
    pub sectional: Mat,
    /// Scalar curvature: the sum over all frame pairs.
    pub tau: f64,
}

impl CurvatureData {
    pub fn new(ext: ExtrinsicData) -> CurvatureData {
        let n = ext.n;
        let c = ext.sf.curvature();
        let mut sectional = Mat::zeros(n, n);
        let mut tau = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut k = c;
                for hr in &ext.h {
                    k += hr[(i, i)] * hr[(j, j)] - hr[(i, j)] * hr[(i, j)];
                }
                sectional[(i, j)] = k;
                sectional[(j, i)] = k;
                tau += k;
            }
        }
        CurvatureData { c, ext, sectional, tau }
    }

    /// Gauss-equation sectional curvature of the plane spanned by
    /// orthonormal `u, v` given in the canonical frame.
    fn k_orthonormal(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut k = self.c;
        for hr in &self.ext.h {
            let huu = hr.quad_form(u, u);
            let hvv = hr.quad_form(v, v);
            let huv = hr.quad_form(u, v);
            k += huu * hvv - huv * huv;
        }
        k
    }
}

/// Sectional curvature of the plane spanned by `u` and `v` (expressed in
/// the canonical orthonormal tangent frame, not necessarily orthonormal
/// themselves).
pub fn sectional_curvature(
    curv: &CurvatureData,
    u: &[f64],
    v: &[f64],
) -> Result<f64, CurvatureError> {
    let nu = linalg::norm2(u);
    if nu < 1e-300 {
        return Err(CurvatureError::DegeneratePlane);
    }
    let uh: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let mut vp: Vec<f64> = v.to_vec();
    let proj = linalg::dot(&vp, &uh);
    for (vi, ui) in vp.iter_mut().zip(&uh) {
        *vi -= proj * ui;
    }
    let nv = linalg::norm2(&vp);
    // sin(angle) between u and v below 1e-10 counts as degenerate
    if nv <= 1e-10 * linalg::norm2(v).max(1e-300) {
        return Err(CurvatureError::DegeneratePlane);
    }
    let vh: Vec<f64> = vp.iter().map(|x| x / nv).collect();
    Ok(curv.k_orthonormal(&uh, &vh))
}

/// Scalar curvature at the point: `sum_{i<j} K(e_i ^ e_j)`.
pub fn scalar_curvature_total(curv: &CurvatureData) -> f64 {
    curv.tau
}

/// Scalar curvature of the subspace spanned by the given orthonormal basis
/// vectors (frame coordinates).
pub fn scalar_curvature_subspace(
    curv: &CurvatureData,
    basis: &[Vec<f64>],
) -> Result<f64, CurvatureError> {
    let mut defect = 0.0f64;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            defect = defect.max(libm::fabs(linalg::dot(u, v) - expect));
        }
    }
    if defect > 1e-10 {
        return Err(CurvatureError::NonOrthonormal(defect));
    }
    let mut tau = 0.0;
    for a in 0..basis.len() {
        for b in (a + 1)..basis.len() {
            tau += curv.k_orthonormal(&basis[a], &basis[b]);
        }
    }
    Ok(tau)
}

/// Christoffel symbols `G[k][i][j]` of a metric function at `x`, by central
/// differences with step `h_step` (default `1e-4 * max(1, |x_i|)` per
/// coordinate).
pub struct Christoffels {
    pub n: usize,
    data: Vec<f64>,
}

impl Christoffels {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }
}

pub fn metric_fd_step(xi: f64) -> f64 {
    1e-4 * libm::fabs(xi).max(1.0)
}

pub fn christoffels_from_metric<F>(
    metric_fn: &F,
    x: &[f64],
    h_step: Option<f64>,
) -> Result<Christoffels, CurvatureError>
where
    F: Fn(&[f64]) -> Result<Mat, CurvatureError>,
{
    let n = x.len();
    let g = metric_fn(x)?;
    let ginv = linalg::inverse(&g).ok_or(CurvatureError::DegenerateMetric)?;
    // dg[l][(i, j)] = d g_ij / d x_l
    let mut dg = Vec::with_capacity(n);
    for l in 0..n {
        let h = h_step.unwrap_or_else(|| metric_fd_step(x[l]));
        let mut xp = x.to_vec();
        xp[l] += h;
        let mut xm = x.to_vec();
        xm[l] -= h;
        let gp = metric_fn(&xp)?;
        let gm = metric_fn(&xm)?;
        dg.push(gp.sub(&gm).scale(1.0 / (2.0 * h)));
    }
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                data[(k * n + i) * n + j] = 0.5 * acc;
            }
        }
    }
    Ok(Christoffels { n, data })
}

/// Metric as a function of the chart point: the closed form for catalog
/// specs, the induced metric from exact jets otherwise.
fn metric_function<'a>(
    spec: &'a ImmersionSpec,
) -> impl Fn(&[f64]) -> Result<Mat, CurvatureError> + 'a {
    move |y: &[f64]| match spec.family {
        Some(id) => Ok(closed_form_metric(id, spec.n, &spec.params, y)?),
        None => {
            let jet = jet2_hyperdual(spec, y)?;
            Ok(extrinsic::induced_metric(&spec.sf, &jet)?)
        }
    }
}

/// Coordinate curvature components `<R(d_i, d_j) d_j, d_i>` from Christoffel
/// symbols and their finite-difference derivatives.
fn coordinate_curvature_intrinsic<F>(
    metric_fn: &F,
    x: &[f64],
) -> Result<Mat, CurvatureError>
where
    F: Fn(&[f64]) -> Result<Mat, CurvatureError>,
{
    let n = x.len();
    let g = metric_fn(x)?;
    let gamma = christoffels_from_metric(metric_fn, x, None)?;
    // dgamma[m] = derivative of the Christoffel array along x_m
    let mut dgamma = Vec::with_capacity(n);
    for m in 0..n {
        let h = metric_fd_step(x[m]);
        let mut xp = x.to_vec();
        xp[m] += h;
        let mut xm = x.to_vec();
        xm[m] -= h;
        let gp = christoffels_from_metric(metric_fn, &xp, None)?;
        let gm = christoffels_from_metric(metric_fn, &xm, None)?;
        let data: Vec<f64> =
            gp.data.iter().zip(&gm.data).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        dgamma.push(Christoffels { n, data });
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // R^l_{ijj} = d_i G^l_{jj} - d_j G^l_{ij} + G^m_{jj} G^l_{im} - G^m_{ij} G^l_{jm}
            let mut raw = 0.0;
            for l in 0..n {
                let mut rl = dgamma[i].get(l, j, j) - dgamma[j].get(l, i, j);
                for m in 0..n {
                    rl += gamma.get(m, j, j) * gamma.get(l, i, m)
                        - gamma.get(m, i, j) * gamma.get(l, j, m);
                }
                raw += rl * g[(l, i)];
            }
            out[(i, j)] = raw;
        }
    }
    Ok(out)
}

/// The same components computed extrinsically via the Gauss equation from
/// the exact jet, in the coordinate (not orthonormal) basis.
fn coordinate_curvature_extrinsic(
    spec: &ImmersionSpec,
    jet: &Jet2,
) -> Result<Mat, CurvatureError> {
    let sf = &spec.sf;
    let n = spec.n;
    let g = extrinsic::induced_metric(sf, jet)?;
    let (tangent_frame, _) = extrinsic::tangent_orthonormal_frame(sf, jet, &g)?;
    let normals = extrinsic::normal_frame(sf, jet, &tangent_frame)?;
    let q = normals.rows;
    let c = sf.curvature();
    // normal components of the coordinate second derivatives
    let mut hn = vec![vec![vec![0.0; q]; n]; n];
    for i in 0..n {
        for j in i..n {
            let d2 = jet.second_vec(i, j);
            for r in 0..q {
                let v = ambient_inner(sf, &d2, normals.row(r)).expect("dimensions agree");
                hn[i][j][r] = v;
                hn[j][i][r] = v;
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut k = 0.0;
            for r in 0..q {
                k += hn[i][i][r] * hn[j][j][r] - hn[i][j][r] * hn[i][j][r];
            }
            k += c * (g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)]);
            out[(i, j)] = k;
        }
    }
    Ok(out)
}

/// Max discrepancy over coordinate pairs between the intrinsic
/// (metric-side) and extrinsic (Gauss equation) curvature components.
pub fn gauss_residual(spec: &ImmersionSpec, x: &[f64]) -> Result<f64, CurvatureError> {
    let jet = jet2_hyperdual(spec, x)?;
    let metric_fn = metric_function(spec);
    let intrinsic = coordinate_curvature_intrinsic(&metric_fn, x)?;
    let extrinsic_side = coordinate_curvature_extrinsic(spec, &jet)?;
    let mut worst = 0.0f64;
    for i in 0..spec.n {
        for j in (i + 1)..spec.n {
            worst = worst.max(libm::fabs(intrinsic[(i, j)] - extrinsic_side[(i, j)]));
        }
    }
    Ok(worst)
}

/// The scalar second fundamental form `A_jk = <d2L/dx_j dx_k, xi>` along a
/// distinguished unit normal: the single frame normal for `q = 1`, the
/// principal direction of the first normal space otherwise. The sign is
/// aligned with `reference` when given.
fn scalar_sff_field(
    spec: &ImmersionSpec,
    y: &[f64],
    reference: Option<&[f64]>,
) -> Result<(Mat, Vec<f64>), CurvatureError> {
    let jet = jet2_hyperdual(spec, y)?;
    let ext = extrinsic::compute_extrinsic(&spec.sf, &jet)?;
    let n = ext.n;
    let q = ext.q;
    let flat = spec.flat_dim();
    let mut xi = vec![0.0; flat];
    if q == 1 {
        xi.copy_from_slice(ext.normal_frame.row(0));
    } else if q > 1 {
        // principal left singular direction of the stacked h components
        let cols = n * (n + 1) / 2;
        let mut m = Mat::zeros(q, cols);
        for (r, hr) in ext.h.iter().enumerate() {
            let mut cidx = 0;
            for i in 0..n {
                for j in i..n {
                    m[(r, cidx)] = hr[(i, j)];
                    cidx += 1;
                }
            }
        }
        let gram = m.matmul(&m.transpose());
        let (eigs, vecs) = linalg::symmetric_eigen(&gram);
        if eigs[0] > 1e-28 {
            for r in 0..q {
                let w = vecs[(0, r)];
                for (x_c, nf) in xi.iter_mut().zip(ext.normal_frame.row(r)) {
                    *x_c += w * nf;
                }
            }
        } else {
            xi.copy_from_slice(ext.normal_frame.row(0));
        }
    }
    if let Some(reference) = reference {
        let d = ambient_inner(&spec.sf, &xi, reference).expect("dimensions agree");
        if d < 0.0 {
            for v in xi.iter_mut() {
                *v = -*v;
            }
        }
    }
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d2 = jet.second_vec(i, j);
            let v = ambient_inner(&spec.sf, &d2, &xi).expect("dimensions agree");
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok((a, xi))
}

/// Codazzi residual in the effective codimension-one case: the maximal
/// antisymmetry of the covariant derivative of the scalar second
/// fundamental form, `max |grad_i A_jk - grad_j A_ik|`.
pub fn codazzi_residual(
    spec: &ImmersionSpec,
    x: &[f64],
    h_step: Option<f64>,
) -> Result<f64, CurvatureError> {
    let jet = jet2_hyperdual(spec, x)?;
    let ext = extrinsic::compute_extrinsic(&spec.sf, &jet)?;
    if ext.q == 0 {
        return Ok(0.0);
    }
    let rank = extrinsic::first_normal_rank(&ext, 1e-7);
    if rank >= 2 {
        return Err(CurvatureError::Rank(rank));
    }
    let n = spec.n;
    let metric_fn = metric_function(spec);
    let gamma = christoffels_from_metric(&metric_fn, x, h_step)?;
    let (a0, xi0) = scalar_sff_field(spec, x, None)?;
    // dA[i] = central difference of the A field along x_i
    let mut da = Vec::with_capacity(n);
    for i in 0..n {
        let h = h_step.unwrap_or_else(|| metric_fd_step(x[i]));
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        let (ap, _) = scalar_sff_field(spec, &xp, Some(&xi0))?;
        let (am, _) = scalar_sff_field(spec, &xm, Some(&xi0))?;
        da.push(ap.sub(&am).scale(1.0 / (2.0 * h)));
    }
    let nabla = |i: usize, j: usize, k: usize| -> f64 {
        let mut v = da[i][(j, k)];
        for m in 0..n {
            v -= gamma.get(m, i, j) * a0[(m, k)] + gamma.get(m, i, k) * a0[(j, m)];
        }
        v
    };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                worst = worst.max(libm::fabs(nabla(i, j, k) - nabla(j, i, k)));
            }
        }
    }
    Ok(worst)
}
