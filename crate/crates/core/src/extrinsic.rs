//! Extrinsic geometry from a 2-jet: induced metric, orthonormal tangent and
//! normal frames, second fundamental form, mean curvature, shape spectra,
//! type number and first normal rank.
//!
//! For curved ambients the position direction is removed from the normal
//! bundle, so `h` is the second fundamental form of the submanifold inside
//! the space form (not inside the flat model).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::jet::Jet2;
use crate::linalg::{self, Mat};
use crate::rng::{derive_seed, random_unit_vector, DetRng};
use crate::spaceform::{ambient_inner, SpaceForm, SpaceFormKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtrinsicError {
    #[error("induced metric is not positive definite (min pivot {min_pivot:e})")]
    DegenerateMetric { min_pivot: f64 },
    #[error("normal candidate has non-positive self inner product ({norm_sq:e})")]
    Signature { norm_sq: f64 },
    #[error("could not complete the normal frame: {0}")]
    FrameCompletion(String),
}

/// Everything downstream geometry needs at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicData {
    pub sf: SpaceForm,
    pub n: usize,
    /// Effective codimension within the space form.
    pub q: usize,
    /// Induced metric `g_ij = <dL/dx_i, dL/dx_j>`.
    pub g: Mat,
    /// Orthonormal tangent frame, rows are flat-model vectors.
    pub tangent_frame: Mat,
    /// The same frame expressed over coordinate tangents:
    /// `E_a = sum_i tangent_chart[(a,i)] dL/dx_i`.
    pub tangent_chart: Mat,
    /// Orthonormal normal frame, rows are flat-model vectors (spacelike).
    pub normal_frame: Mat,
    /// `h[r][(a,b)] = <h(E_a, E_b), xi_r>`, one symmetric matrix per normal.
    pub h: Vec<Mat>,
    /// Mean curvature vector in flat-model coordinates.
    pub h_vec: Vec<f64>,
    /// `<H, H>` (nonnegative: normals are spacelike).
    pub h_sq: f64,
    /// Position vector of the point (used for curved ambients).
    pub position: Vec<f64>,
}

/// Per-normal eigenvalue lists of the shape operators, each sorted
/// descending by value.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpectrum {
    pub per_normal: Vec<Vec<f64>>,
    pub zero_tolerance: f64,
}

impl ShapeSpectrum {
    /// Largest eigenvalue over all normals (0 when there are none).
    pub fn top(&self) -> f64 {
        self.per_normal
            .iter()
            .filter_map(|e| e.first().copied())
            .fold(0.0f64, |m, v| if v > m { v } else { m })
    }

    /// Count of eigenvalues with `|value| > zero_tolerance * max(1, max|value|)`,
    /// per normal.
    pub fn nonzero_counts(&self) -> Vec<usize> {
        self.per_normal
            .iter()
            .map(|eigs| {
                let scale = eigs.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v))).max(1.0);
                eigs.iter().filter(|v| libm::fabs(**v) > self.zero_tolerance * scale).count()
            })
            .collect()
    }
}

fn inner(sf: &SpaceForm, u: &[f64], v: &[f64]) -> f64 {
    // lengths are fixed by construction here
    ambient_inner(sf, u, v).expect("flat-model dimension mismatch")
}

/// Induced metric from the jet's first derivatives, with positive
/// definiteness enforced by Cholesky factorization.
pub fn induced_metric(sf: &SpaceForm, jet: &Jet2) -> Result<Mat, ExtrinsicError> {
    let n = jet.n;
    let mut g = Mat::zeros(n, n);
    let firsts: Vec<Vec<f64>> = (0..n).map(|i| jet.first_vec(i)).collect();
    for i in 0..n {
        for j in i..n {
            let v = inner(sf, &firsts[i], &firsts[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    linalg::cholesky(&g).map_err(|min_pivot| ExtrinsicError::DegenerateMetric { min_pivot })?;
    Ok(g)
}

/// Signature-aware Gram-Schmidt of the coordinate tangent vectors. Returns
/// the frame both as flat-model vectors and as coefficients over the
/// coordinate tangents; the first vector is parallel to `dL/dx_1`.
pub fn tangent_orthonormal_frame(
    sf: &SpaceForm,
    jet: &Jet2,
    _g: &Mat,
) -> Result<(Mat, Mat), ExtrinsicError> {
    let n = jet.n;
    let flat = jet.flat_dim;
    let mut frame = Mat::zeros(n, flat);
    let mut chart = Mat::zeros(n, n);
    for a in 0..n {
        let mut v = jet.first_vec(a);
        let mut coeff = vec![0.0; n];
        coeff[a] = 1.0;
        // two passes of modified Gram-Schmidt for 1e-12 orthonormality
        for _pass in 0..2 {
            for k in 0..a {
                let proj = inner(sf, &v, frame.row(k));
                for (vi, fi) in v.iter_mut().zip(frame.row(k)) {
                    *vi -= proj * fi;
                }
                for (ci, ck) in coeff.iter_mut().zip(chart.row(k)) {
                    *ci -= proj * ck;
                }
            }
        }
        let norm_sq = inner(sf, &v, &v);
        if norm_sq <= 1e-24 {
            return Err(ExtrinsicError::DegenerateMetric { min_pivot: norm_sq });
        }
        let nrm = libm::sqrt(norm_sq);
        for vi in v.iter_mut() {
            *vi /= nrm;
        }
        for ci in coeff.iter_mut() {
            *ci /= nrm;
        }
        frame.row_mut(a).copy_from_slice(&v);
        chart.row_mut(a).copy_from_slice(&coeff);
    }
    Ok((frame, chart))
}

/// Orthonormal basis of the normal space within the space form: the
/// orthogonal complement of the tangent frame (and, for curved ambients,
/// of the position direction), completed from the standard basis in
/// ascending order. Normals must be spacelike.
pub fn normal_frame(
    sf: &SpaceForm,
    jet: &Jet2,
    tangent_frame: &Mat,
) -> Result<Mat, ExtrinsicError> {
    let n = jet.n;
    let flat = jet.flat_dim;
    let curved = sf.kind != SpaceFormKind::Euclidean;
    let q = flat - n - usize::from(curved);

    // obstructions: (vector, sign of its self inner product)
    let mut obstructions: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    if curved {
        let pos = jet.point.clone();
        let pos_norm = inner(sf, &pos, &pos);
        let sign = if pos_norm < 0.0 { -1.0 } else { 1.0 };
        let scale = libm::sqrt(libm::fabs(pos_norm));
        obstructions.push((pos.iter().map(|v| v / scale).collect(), sign));
    }
    for a in 0..n {
        obstructions.push((tangent_frame.row(a).to_vec(), 1.0));
    }

    let mut normals = Mat::zeros(q, flat);
    let mut found = 0usize;
    for cand in 0..flat {
        if found == q {
            break;
        }
        let mut v = vec![0.0; flat];
        v[cand] = 1.0;
        for _pass in 0..2 {
            for (u, sign) in &obstructions {
                let proj = sign * inner(sf, &v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
            for k in 0..found {
                let proj = inner(sf, &v, normals.row(k));
                for (vi, ui) in v.iter_mut().zip(normals.row(k)) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm_sq = inner(sf, &v, &v);
        if libm::fabs(norm_sq) <= 1e-16 {
            continue; // candidate lies in the span already handled
        }
        if norm_sq < 0.0 {
            return Err(ExtrinsicError::Signature { norm_sq });
        }
        let nrm = libm::sqrt(norm_sq);
        for vi in v.iter_mut() {
            *vi /= nrm;
        }
        normals.row_mut(found).copy_from_slice(&v);
        found += 1;
    }
    if found != q {
        return Err(ExtrinsicError::FrameCompletion(format!(
            "found {found} of {q} normals"
        )));
    }
    Ok(normals)
}

/// Project the frame second derivatives onto the normal frame, producing
/// the shape matrices `h_r`, the mean curvature vector and its square.
/// Each normal is oriented so that `trace(h_r) >= 0`.
#[allow(clippy::type_complexity)]
pub fn second_fundamental_form(
    sf: &SpaceForm,
    jet: &Jet2,
    tangent_chart: &Mat,
    normal_frame: &mut Mat,
) -> Result<(Vec<Mat>, Vec<f64>, f64), ExtrinsicError> {
    let n = jet.n;
    let flat = jet.flat_dim;
    let q = normal_frame.rows;

    // Frame second derivatives: D2[a][b] = sum_{ij} c_a^i c_b^j d2L/dx_i dx_j
    let mut h = vec![Mat::zeros(n, n); q];
    for a in 0..n {
        for b in a..n {
            let mut d2 = vec![0.0; flat];
            for i in 0..n {
                let cai = tangent_chart[(a, i)];
                if cai == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let cbj = tangent_chart[(b, j)];
                    if cbj == 0.0 {
                        continue;
                    }
                    let w = cai * cbj;
                    for c in 0..flat {
                        d2[c] += w * jet.second(c, i, j);
                    }
                }
            }
            for (r, hr) in h.iter_mut().enumerate() {
                let v = inner(sf, &d2, normal_frame.row(r));
                hr[(a, b)] = v;
                hr[(b, a)] = v;
            }
        }
    }

    // Orient each normal so the trace of its shape matrix is nonnegative;
    // this pins the sign convention of the catalog eigenvalue formulas.
    for (r, hr) in h.iter_mut().enumerate() {
        let tr: f64 = (0..n).map(|a| hr[(a, a)]).sum();
        if tr < 0.0 {
            for v in hr.data.iter_mut() {
                *v = -*v;
            }
            for v in normal_frame.row_mut(r) {
                *v = -*v;
            }
        }
    }

    let mut h_vec = vec![0.0; flat];
    for (r, hr) in h.iter().enumerate() {
        let tr: f64 = (0..n).map(|a| hr[(a, a)]).sum();
        let coeff = tr / n as f64;
        for (c, xi) in h_vec.iter_mut().zip(normal_frame.row(r)) {
            *c += coeff * xi;
        }
    }
    let h_sq = inner(sf, &h_vec, &h_vec);
    Ok((h, h_vec, h_sq))
}

/// Full extrinsic pipeline at one point.
pub fn compute_extrinsic(sf: &SpaceForm, jet: &Jet2) -> Result<ExtrinsicData, ExtrinsicError> {
    let g = induced_metric(sf, jet)?;
    let (tangent_frame, tangent_chart) = tangent_orthonormal_frame(sf, jet, &g)?;
    let mut normals = normal_frame(sf, jet, &tangent_frame)?;
    let (h, h_vec, h_sq) = second_fundamental_form(sf, jet, &tangent_chart, &mut normals)?;
    Ok(ExtrinsicData {
        sf: sf.clone(),
        n: jet.n,
        q: normals.rows,
        g,
        tangent_frame,
        tangent_chart,
        normal_frame: normals,
        h,
        h_vec,
        h_sq,
        position: jet.point.clone(),
    })
}

impl ExtrinsicData {
    /// Replace the tangent frame by `rot * frame` (rows) and transform the
    /// shape matrices accordingly. Used to test frame independence.
    pub fn rotated_frame(&self, rot: &Mat) -> ExtrinsicData {
        let mut out = self.clone();
        out.tangent_frame = rot.matmul(&self.tangent_frame);
        out.tangent_chart = rot.matmul(&self.tangent_chart);
        out.h = self.h.iter().map(|hr| rot.matmul(hr).matmul(&rot.transpose())).collect();
        out
    }
}

/// Eigenvalues of every shape operator `A_{xi_r} = h_r`, sorted descending.
pub fn shape_spectrum(ext: &ExtrinsicData, zero_tolerance: f64) -> ShapeSpectrum {
    let per_normal = ext
        .h
        .iter()
        .map(|hr| {
            let (eigs, _) = linalg::symmetric_eigen(hr);
            eigs
        })
        .collect();
    ShapeSpectrum { per_normal, zero_tolerance }
}

fn count_nonzero_eigs(a: &Mat, tol_zero: f64) -> usize {
    let (eigs, _) = linalg::symmetric_eigen(a);
    let scale = eigs.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v))).max(1.0);
    eigs.iter().filter(|v| libm::fabs(**v) > tol_zero * scale).count()
}

/// Maximum number of nonzero shape-operator eigenvalues over sampled unit
/// normals: the `q` frame normals plus `samples` random unit combinations
/// (deterministic from `seed`). Exact for `q = 1` and for rank-one first
/// normal spaces, where the sampling short-circuits.
pub fn type_number(ext: &ExtrinsicData, samples: usize, seed: u64, tol_zero: f64) -> usize {
    if ext.q == 0 {
        return 0;
    }
    let mut best = 0usize;
    for hr in &ext.h {
        best = best.max(count_nonzero_eigs(hr, tol_zero));
    }
    if ext.q == 1 || first_normal_rank(ext, tol_zero) <= 1 {
        return best;
    }
    let mut rng = DetRng::new(derive_seed(seed, 0x7970_65));
    let n = ext.n;
    for _ in 0..samples {
        let xi = random_unit_vector(ext.q, &mut rng);
        let mut a = Mat::zeros(n, n);
        for (r, hr) in ext.h.iter().enumerate() {
            if xi[r] == 0.0 {
                continue;
            }
            for (dst, src) in a.data.iter_mut().zip(&hr.data) {
                *dst += xi[r] * src;
            }
        }
        best = best.max(count_nonzero_eigs(&a, tol_zero));
    }
    best
}

/// Numerical rank of the `q x n(n+1)/2` matrix of second fundamental form
/// components: the dimension of the first normal space.
pub fn first_normal_rank(ext: &ExtrinsicData, tol: f64) -> usize {
    let q = ext.q;
    if q == 0 {
        return 0;
    }
    let n = ext.n;
    let cols = n * (n + 1) / 2;
    let mut m = Mat::zeros(q, cols);
    for (r, hr) in ext.h.iter().enumerate() {
        let mut c = 0;
        for i in 0..n {
            for j in i..n {
                m[(r, c)] = hr[(i, j)];
                c += 1;
            }
        }
    }
    let gram = m.matmul(&m.transpose());
    let (eigs, _) = linalg::symmetric_eigen(&gram);
    let sigma: Vec<f64> = eigs.iter().map(|e| libm::sqrt(e.max(0.0))).collect();
    let largest = sigma.first().copied().unwrap_or(0.0);
    if largest <= 1e-300 {
        return 0;
    }
    sigma.iter().filter(|s| **s > tol * largest).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{build_catalog, closed_form_metric, parse_spec, CatalogFamily};
    use crate::jet::jet2_hyperdual;
    use crate::rng::haar_orthogonal;
    use approx::assert_abs_diff_eq;

    fn p(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(k, v)| ((*k).into(), *v)).collect()
    }

    fn extrinsic_at(spec: &crate::immersion::ImmersionSpec, x: &[f64]) -> ExtrinsicData {
        let jet = jet2_hyperdual(spec, x).unwrap();
        compute_extrinsic(&spec.sf, &jet).unwrap()
    }

    #[test]
    fn induced_metric_matches_closed_form_euclid() {
        let params = p(&[("a", 0.6)]);
        let spec = build_catalog(CatalogFamily::EuclidT1, 3, &params).unwrap();
        let x = [2.0, 0.5, -0.4];
        let jet = jet2_hyperdual(&spec, &x).unwrap();
        let g = induced_metric(&spec.sf, &jet).unwrap();
        let cf = closed_form_metric(CatalogFamily::EuclidT1, 3, &params, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(g[(i, j)], cf[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn induced_metric_matches_closed_form_hyp_a() {
        let params = p(&[("a", 0.0), ("b", 1.0)]);
        let spec = build_catalog(CatalogFamily::HypA, 4, &params).unwrap();
        let x = [0.0; 4];
        let jet = jet2_hyperdual(&spec, &x).unwrap();
        let g = induced_metric(&spec.sf, &jet).unwrap();
        let cf = closed_form_metric(CatalogFamily::HypA, 4, &params, &x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(g[(i, j)], cf[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_embedding_has_identity_metric_and_frames() {
        let doc = r#"
[spaceform] kind=euclidean m=3
[domain] n=3 x1=-1:1 x2=-1:1 x3=-1:1
[map] u1="x1" u2="x2" u3="x3"
"#;
        let spec = parse_spec(doc).unwrap();
        let ext = extrinsic_at(&spec, &[0.1, 0.2, 0.3]);
        assert_eq!(ext.q, 0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(ext.g[(i, j)], expect);
                assert_eq!(ext.tangent_frame[(i, j)], expect);
            }
        }
        assert_eq!(ext.h_sq, 0.0);
    }

    #[test]
    fn frame_is_orthonormal_under_ambient_inner() {
        let spec = build_catalog(CatalogFamily::HypB, 4, &p(&[("a", 0.3), ("b", 1.1)])).unwrap();
        let ext = extrinsic_at(&spec, &[0.4, -0.2, 0.7, 0.1]);
        for a in 0..4 {
            for b in 0..4 {
                let v = inner(&ext.sf, ext.tangent_frame.row(a), ext.tangent_frame.row(b));
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
            }
        }
        // normals orthonormal, orthogonal to tangents and position
        for r in 0..ext.q {
            for s in 0..ext.q {
                let v = inner(&ext.sf, ext.normal_frame.row(r), ext.normal_frame.row(s));
                let expect = if r == s { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
            }
            for a in 0..4 {
                let v = inner(&ext.sf, ext.normal_frame.row(r), ext.tangent_frame.row(a));
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
            let v = inner(&ext.sf, ext.normal_frame.row(r), &ext.position);
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_metric_frame_divides_by_sqrt_gii() {
        let spec = build_catalog(CatalogFamily::EuclidT1, 3, &p(&[("a", 0.6)])).unwrap();
        let x = [2.0, 0.5, -0.4];
        let jet = jet2_hyperdual(&spec, &x).unwrap();
        let ext = extrinsic_at(&spec, &x);
        for i in 0..3 {
            let gii = ext.g[(i, i)];
            let di = jet.first_vec(i);
            for c in 0..spec.flat_dim() {
                assert_abs_diff_eq!(
                    ext.tangent_frame[(i, c)],
                    di[c] / libm::sqrt(gii),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn codimension_counts() {
        let euc = build_catalog(CatalogFamily::EuclidT1, 4, &p(&[("a", 0.6)])).unwrap();
        assert_eq!(extrinsic_at(&euc, &[2.0, 0.1, 0.2, 0.3]).q, 1);
        let sph = build_catalog(CatalogFamily::SphereT2, 4, &p(&[("a", 0.6)])).unwrap();
        assert_eq!(extrinsic_at(&sph, &[1.2, 0.1, 0.2, 0.3]).q, 1);
    }

    #[test]
    fn identity_plane_in_e5_normals_are_standard_basis() {
        let doc = r#"
[spaceform] kind=euclidean m=5
[domain] n=3 x1=-1:1 x2=-1:1 x3=-1:1
[map] u1="x1" u2="x2" u3="x3" u4="0" u5="0"
"#;
        let spec = parse_spec(doc).unwrap();
        let ext = extrinsic_at(&spec, &[0.1, 0.2, 0.3]);
        assert_eq!(ext.q, 2);
        for (r, c) in [(0usize, 3usize), (1, 4)] {
            for i in 0..5 {
                let expect = if i == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ext.normal_frame[(r, i)], expect, epsilon = 1e-14);
            }
        }
        // totally geodesic: h = 0, type number 0, first normal rank 0
        for hr in &ext.h {
            assert_eq!(hr.max_abs(), 0.0);
        }
        assert_eq!(type_number(&ext, 16, 7, 1e-7), 0);
        assert_eq!(first_normal_rank(&ext, 1e-7), 0);
    }

    #[test]
    fn euclid_t1_shape_matrix_and_mean_curvature() {
        let spec = build_catalog(CatalogFamily::EuclidT1, 3, &p(&[("a", 0.6)])).unwrap();
        let ext = extrinsic_at(&spec, &[2.0, 0.5, -0.4]);
        assert_eq!(ext.q, 1);
        let lam = 2.0 / 3.0;
        let h0 = &ext.h[0];
        let expect = [[0.0, 0.0, 0.0], [0.0, lam, 0.0], [0.0, 0.0, lam]];
        for a in 0..3 {
            for b in 0..3 {
                assert_abs_diff_eq!(h0[(a, b)], expect[a][b], epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(ext.h_sq, 16.0 / 81.0, epsilon = 1e-13);
    }

    #[test]
    fn round_sphere_radius_two_is_umbilical() {
        let doc = r#"
[spaceform] kind=euclidean m=3
[domain] n=2 x1=0.3:2.8 x2=-3:3
[map] u1="2*sin(x1)*cos(x2)" u2="2*sin(x1)*sin(x2)" u3="2*cos(x1)"
"#;
        let spec = parse_spec(doc).unwrap();
        let ext = extrinsic_at(&spec, &[1.1, 0.4]);
        assert_eq!(ext.q, 1);
        for a in 0..2 {
            for b in 0..2 {
                let expect = if a == b { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(ext.h[0][(a, b)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spectra_spot_values() {
        let spec = build_catalog(CatalogFamily::EuclidT1, 4, &p(&[("a", 0.6)])).unwrap();
        let ext = extrinsic_at(&spec, &[2.0, 0.3, 0.5, -0.2]);
        let spectrum = shape_spectrum(&ext, 1e-7);
        let eigs = &spectrum.per_normal[0];
        assert_abs_diff_eq!(eigs[0], 2.0 / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[1], 2.0 / 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[2], 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[3], 0.0, epsilon = 1e-11);
        assert_eq!(spectrum.nonzero_counts(), alloc::vec![2]);

        let hyp = build_catalog(CatalogFamily::HypB, 4, &p(&[("a", 0.0), ("b", 1.0)])).unwrap();
        let ext = extrinsic_at(&hyp, &[0.0; 4]);
        let spectrum = shape_spectrum(&ext, 1e-7);
        let eigs = &spectrum.per_normal[0];
        assert_abs_diff_eq!(eigs[0], 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[1], 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[2], 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(eigs[3], 0.0, epsilon = 1e-11);
    }

    #[test]
    fn type_numbers() {
        let spec = build_catalog(CatalogFamily::EuclidT1, 4, &p(&[("a", 0.6)])).unwrap();
        let ext = extrinsic_at(&spec, &[1.5, 0.3, 0.5, -0.2]);
        assert_eq!(type_number(&ext, 64, 3, 1e-7), 2);

        // unit round S^3 in E^4: umbilical, type number 3
        let doc = r#"
[spaceform] kind=euclidean m=4
[domain] n=3 x1=0.3:2.8 x2=0.3:2.8 x3=-3:3
[map] u1="cos(x1)" u2="sin(x1)*cos(x2)" u3="sin(x1)*sin(x2)*cos(x3)" u4="sin(x1)*sin(x2)*sin(x3)"
"#;
        let spec = parse_spec(doc).unwrap();
        let ext = extrinsic_at(&spec, &[1.0, 1.2, 0.7]);
        assert_eq!(type_number(&ext, 64, 3, 1e-7), 3);
    }

    #[test]
    fn first_normal_rank_cases() {
        // padded EUCLID_T1: only one normal direction carries curvature
        let spec = build_catalog(CatalogFamily::EuclidT1, 3, &p(&[("a", 0.6)])).unwrap();
        let padded = spec.pad_to(6).unwrap();
        let ext = extrinsic_at(&padded, &[2.0, 0.4, 0.6]);
        assert_eq!(ext.q, 3);
        assert_eq!(first_normal_rank(&ext, 1e-7), 1);
        // type number still 2, exercised through the sampling path
        assert_eq!(type_number(&ext, 64, 11, 1e-7), 2);

        // generic quadratic graph immersion E^2 -> E^4 has rank 2
        let doc = r#"
[spaceform] kind=euclidean m=4
[domain] n=2 x1=-1:1 x2=-1:1
[map] u1="x1" u2="x2" u3="0.7*x1^2+0.3*x1*x2-0.2*x2^2" u4="-0.4*x1^2+0.9*x1*x2+0.5*x2^2"
"#;
        let spec = parse_spec(doc).unwrap();
        let ext = extrinsic_at(&spec, &[0.2, -0.3]);
        assert_eq!(ext.q, 2);
        assert_eq!(first_normal_rank(&ext, 1e-7), 2);
    }

    #[test]
    fn spectrum_invariant_under_frame_rotation() {
        let spec = build_catalog(CatalogFamily::SphereT2, 4, &p(&[("a", 0.4)])).unwrap();
        let ext = extrinsic_at(&spec, &[1.0, 0.3, -0.5, 0.8]);
        let base = shape_spectrum(&ext, 1e-7);
        let mut rng = DetRng::new(55);
        for _ in 0..5 {
            let rot = haar_orthogonal(4, &mut rng);
            let rotated = ext.rotated_frame(&rot);
            let spec2 = shape_spectrum(&rotated, 1e-7);
            for (e1, e2) in base.per_normal.iter().zip(&spec2.per_normal) {
                for (a, b) in e1.iter().zip(e2) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn mean_curvature_is_normal_valued() {
        for (spec, x) in [
            (build_catalog(CatalogFamily::SphereT2, 4, &p(&[("a", 0.6)])).unwrap(), [0.9, 0.2, 0.4, -0.3]),
            (build_catalog(CatalogFamily::HypC, 4, &p(&[("a", 0.1), ("b", 1.5)])).unwrap(), [0.3, -0.6, 0.2, 0.9]),
        ] {
            let ext = extrinsic_at(&spec, &x);
            for a in 0..4 {
                let t = inner(&ext.sf, &ext.h_vec, ext.tangent_frame.row(a));
                assert_abs_diff_eq!(t, 0.0, epsilon = 1e-11);
            }
            let r = inner(&ext.sf, &ext.h_vec, &ext.position);
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-11);
            assert!(ext.h_sq >= 0.0);
        }
    }
}
