//! Ambient real space forms `R^m(c)` for `c = 0, +1, -1` and their flat
//! models: `E^m` itself, the unit sphere in `E^{m+1}`, and hyperbolic space
//! as the upper sheet of `<u,u> = -1` in Minkowski space `E^{m+1}_1` with
//! the timelike axis on coordinate 1.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl SpaceFormKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceFormKind::Euclidean => "euclidean",
            SpaceFormKind::Sphere => "sphere",
            SpaceFormKind::Hyperbolic => "hyperbolic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceForm {
    pub kind: SpaceFormKind,
    /// Dimension of the space form itself.
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceFormError {
    #[error("vector length {got} does not match flat model dimension {expect}")]
    Dimension { expect: usize, got: usize },
    #[error("quadric check is undefined for the Euclidean space form")]
    Kind,
    #[error("space form dimension must be at least 2, got {0}")]
    TooSmall(usize),
}

impl SpaceForm {
    pub fn new(kind: SpaceFormKind, m: usize) -> Result<Self, SpaceFormError> {
        if m < 2 {
            return Err(SpaceFormError::TooSmall(m));
        }
        Ok(SpaceForm { kind, m })
    }

    pub fn euclidean(m: usize) -> Result<Self, SpaceFormError> {
        SpaceForm::new(SpaceFormKind::Euclidean, m)
    }

    pub fn sphere(m: usize) -> Result<Self, SpaceFormError> {
        SpaceForm::new(SpaceFormKind::Sphere, m)
    }

    pub fn hyperbolic(m: usize) -> Result<Self, SpaceFormError> {
        SpaceForm::new(SpaceFormKind::Hyperbolic, m)
    }

    /// Constant sectional curvature of the model.
    pub fn curvature(&self) -> f64 {
        match self.kind {
            SpaceFormKind::Euclidean => 0.0,
            SpaceFormKind::Sphere => 1.0,
            SpaceFormKind::Hyperbolic => -1.0,
        }
    }

    /// Dimension of the flat model: `m` for Euclidean, `m + 1` otherwise.
    pub fn flat_dim(&self) -> usize {
        match self.kind {
            SpaceFormKind::Euclidean => self.m,
            _ => self.m + 1,
        }
    }

    /// Metric signature of the flat model, as `+/-1` per coordinate. Only
    /// the hyperbolic model is indefinite, with the single `-1` first.
    pub fn signature(&self) -> Vec<f64> {
        let n = self.flat_dim();
        let mut s = alloc::vec![1.0; n];
        if self.kind == SpaceFormKind::Hyperbolic {
            s[0] = -1.0;
        }
        s
    }

    /// Signature sign of coordinate `i` without allocating.
    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        if self.kind == SpaceFormKind::Hyperbolic && i == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Signature-aware inner product of the flat model.
pub fn ambient_inner(sf: &SpaceForm, u: &[f64], v: &[f64]) -> Result<f64, SpaceFormError> {
    let n = sf.flat_dim();
    if u.len() != n {
        return Err(SpaceFormError::Dimension { expect: n, got: u.len() });
    }
    if v.len() != n {
        return Err(SpaceFormError::Dimension { expect: n, got: v.len() });
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += sf.sign(i) * u[i] * v[i];
    }
    Ok(acc)
}

/// Result of checking that a point lies on the model quadric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricCheck {
    /// `|<p,p> - c|`.
    pub residual: f64,
    /// For the hyperbolic model: whether `p[0] > 0` (upper sheet). Always
    /// true for the sphere.
    pub sheet_ok: bool,
}

/// Distance of `p` from the defining quadric `<p,p> = c` of a curved space
/// form; for hyperbolic space the upper-sheet condition `p[0] > 0` is also
/// reported.
pub fn quadric_check(sf: &SpaceForm, p: &[f64]) -> Result<QuadricCheck, SpaceFormError> {
    if sf.kind == SpaceFormKind::Euclidean {
        return Err(SpaceFormError::Kind);
    }
    let inner = ambient_inner(sf, p, p)?;
    let residual = libm::fabs(inner - sf.curvature());
    let sheet_ok = match sf.kind {
        SpaceFormKind::Hyperbolic => p[0] > 0.0,
        _ => true,
    };
    Ok(QuadricCheck { residual, sheet_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn timelike_axis_has_negative_norm() {
        let sf = SpaceForm::hyperbolic(4).unwrap();
        let mut u = vec![0.0; sf.flat_dim()];
        u[0] = 1.0;
        assert_eq!(ambient_inner(&sf, &u, &u).unwrap(), -1.0);
        let mut v = vec![0.0; sf.flat_dim()];
        v[1] = 1.0;
        assert_eq!(ambient_inner(&sf, &v, &v).unwrap(), 1.0);
    }

    #[test]
    fn zero_vector_and_sphere_axis() {
        let sf = SpaceForm::sphere(4).unwrap();
        let z = vec![0.0; sf.flat_dim()];
        let mut e2 = vec![0.0; sf.flat_dim()];
        e2[1] = 1.0;
        assert_eq!(ambient_inner(&sf, &z, &e2).unwrap(), 0.0);
        assert_eq!(ambient_inner(&sf, &e2, &e2).unwrap(), 1.0);
        // first standard basis vector lies on the unit sphere
        let mut e1 = vec![0.0; sf.flat_dim()];
        e1[0] = 1.0;
        let qc = quadric_check(&sf, &e1).unwrap();
        assert_eq!(qc.residual, 0.0);
        assert!(qc.sheet_ok);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sf = SpaceForm::euclidean(3).unwrap();
        let err = ambient_inner(&sf, &[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err, SpaceFormError::Dimension { expect: 3, got: 2 });
    }

    #[test]
    fn quadric_check_rejects_euclidean() {
        let sf = SpaceForm::euclidean(3).unwrap();
        assert_eq!(quadric_check(&sf, &[1.0, 0.0, 0.0]).unwrap_err(), SpaceFormError::Kind);
    }

    #[test]
    fn hyperbolic_point_from_family_b_origin() {
        // (5/4, -3/4, 0, ..., 0): -(5/4)^2 + (3/4)^2 = -1
        let sf = SpaceForm::hyperbolic(5).unwrap();
        let mut p = vec![0.0; sf.flat_dim()];
        p[0] = 1.25;
        p[1] = -0.75;
        let qc = quadric_check(&sf, &p).unwrap();
        assert_abs_diff_eq!(qc.residual, 0.0, epsilon = 1e-12);
        assert!(qc.sheet_ok);
        // lower sheet flagged
        p[0] = -1.25;
        assert!(!quadric_check(&sf, &p).unwrap().sheet_ok);
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear() {
        let mut rng = DetRng::new(11);
        for kind in [SpaceFormKind::Euclidean, SpaceFormKind::Sphere, SpaceFormKind::Hyperbolic] {
            let sf = SpaceForm::new(kind, 5).unwrap();
            let dim = sf.flat_dim();
            for _ in 0..50 {
                let u: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                let v: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                let w: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                let a = rng.uniform_in(-3.0, 3.0);
                let uv = ambient_inner(&sf, &u, &v).unwrap();
                let vu = ambient_inner(&sf, &v, &u).unwrap();
                assert_abs_diff_eq!(uv, vu, epsilon = 1e-14 * (1.0 + uv.abs()));
                let au_plus_w: Vec<f64> =
                    u.iter().zip(&w).map(|(ui, wi)| a * ui + wi).collect();
                let lhs = ambient_inner(&sf, &au_plus_w, &v).unwrap();
                let rhs = a * uv + ambient_inner(&sf, &w, &v).unwrap();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13 * (1.0 + rhs.abs()));
            }
        }
    }
}
