//! Numerical certification of ideal isometric immersions into real space forms.
//!
//! The crate evaluates parametric immersions `L : M^n -> R^m(c)` into a
//! Euclidean space, a unit sphere, or hyperbolic space (modelled in Minkowski
//! space), extracts their second-order geometry from exact hyper-dual jets,
//! and certifies whether the immersion attains equality in the fundamental
//! inequality relating the delta-invariants `delta(n_1,...,n_k)` to the
//! squared mean curvature.
//!
//! The pipeline is
//!
//! ```text
//! ImmersionSpec --jet--> Jet2 --extrinsic--> ExtrinsicData --curvature-->
//!     CurvatureData --delta--> DeltaReport (lower bound, RHS, gap)
//! ```
//!
//! Everything here is `no_std` + `alloc`; all floating point goes through
//! `libm` so results are identical with or without the standard library.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod curvature;
pub mod delta;
pub mod expr;
pub mod extrinsic;
pub mod hyperdual;
pub mod immersion;
pub mod jet;
pub mod linalg;
pub mod rng;
pub mod spaceform;

pub use curvature::{
    christoffels_from_metric, codazzi_residual, gauss_residual, scalar_curvature_subspace,
    scalar_curvature_total, sectional_curvature, CurvatureData, CurvatureError, ResidualReport,
};
pub use delta::{
    chen_coefficients, chen_rhs, delta_estimate, delta_oracle, equality_structure_check,
    ideality_check, validate_partition, DeltaError, DeltaOpts, DeltaReport, EqualityStructure,
    Partition,
};
pub use expr::{Expr, ExprError};
pub use extrinsic::{
    first_normal_rank, induced_metric, normal_frame, second_fundamental_form, shape_spectrum,
    tangent_orthonormal_frame, type_number, ExtrinsicData, ExtrinsicError, ShapeSpectrum,
};
pub use hyperdual::{HyperDual, Real};
pub use immersion::{
    build_catalog, closed_form_lambda, closed_form_metric, parse_spec, CatalogFamily,
    ImmersionSpec, SpecError,
};
pub use jet::{jet2_finite_difference, jet2_hyperdual, Jet2, JetError};
pub use linalg::Mat;
pub use spaceform::{ambient_inner, quadric_check, QuadricCheck, SpaceForm, SpaceFormError, SpaceFormKind};
