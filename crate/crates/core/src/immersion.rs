//! Immersion specifications: a parsed coordinate-expression map into a
//! space form, plus the built-in catalog of classified ideal families with
//! their closed-form warped-product metrics and shape eigenvalues.
//!
//! The catalog families are built as expression source strings and run
//! through the same parser as user specs, so a catalog spec serializes and
//! re-parses to bit-identical evaluations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{self, EvalError, Expr, ExprError, FiniteCheck};
use crate::hyperdual::Real;
use crate::linalg::Mat;
use crate::spaceform::{SpaceForm, SpaceFormKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("spec document error at {line}:{col}: {msg}")]
    Doc { line: u32, col: u32, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("intrinsic dimension out of range: {0}")]
    Range(String),
    #[error("point lies at a singular locus: {0}")]
    SingularPoint(String),
    #[error("point outside the domain box: coordinate {index} = {value}")]
    Domain { index: usize, value: f64 },
}

/// One coordinate function with its source text and bound AST.
#[derive(Debug, Clone, PartialEq)]
pub struct Coord {
    pub source: String,
    pub expr: Expr,
}

/// The built-in classified families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogFamily {
    EuclidT1,
    SphereT2,
    HypA,
    HypB,
    HypC,
}

impl CatalogFamily {
    pub const ALL: [CatalogFamily; 5] = [
        CatalogFamily::EuclidT1,
        CatalogFamily::SphereT2,
        CatalogFamily::HypA,
        CatalogFamily::HypB,
        CatalogFamily::HypC,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CatalogFamily::EuclidT1 => "EUCLID_T1",
            CatalogFamily::SphereT2 => "SPHERE_T2",
            CatalogFamily::HypA => "HYP_A",
            CatalogFamily::HypB => "HYP_B",
            CatalogFamily::HypC => "HYP_C",
        }
    }

    pub fn from_id(s: &str) -> Option<CatalogFamily> {
        let up = s.to_uppercase();
        CatalogFamily::ALL.iter().copied().find(|f| f.id() == up)
    }

    pub fn kind(self) -> SpaceFormKind {
        match self {
            CatalogFamily::EuclidT1 => SpaceFormKind::Euclidean,
            CatalogFamily::SphereT2 => SpaceFormKind::Sphere,
            _ => SpaceFormKind::Hyperbolic,
        }
    }

    pub fn min_n(self) -> usize {
        match self {
            CatalogFamily::EuclidT1 | CatalogFamily::SphereT2 => 3,
            _ => 4,
        }
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            CatalogFamily::EuclidT1 | CatalogFamily::SphereT2 => &["a"],
            _ => &["a", "b"],
        }
    }

    pub fn constraint_text(self) -> &'static str {
        match self {
            CatalogFamily::EuclidT1 | CatalogFamily::SphereT2 => "0 < a < 1",
            CatalogFamily::HypA => "a^2 < 1 + b^2",
            CatalogFamily::HypB => "a^2 < b^2, b > 0",
            CatalogFamily::HypC => "1 + a^2 < b^2, b > 0",
        }
    }

    /// Sampling box that stays clear of the singular loci of the family.
    pub fn default_domain(self, n: usize) -> Vec<(f64, f64)> {
        let mut d = vec![(-1.0, 1.0); n];
        match self {
            CatalogFamily::EuclidT1 => d[0] = (0.5, 3.0),
            CatalogFamily::SphereT2 => d[0] = (0.3, core::f64::consts::PI - 0.3),
            _ => d = vec![(-1.5, 1.5); n],
        }
        d
    }

    fn check_params(self, a: f64, b: f64) -> Result<(), SpecError> {
        let ok = match self {
            CatalogFamily::EuclidT1 | CatalogFamily::SphereT2 => 0.0 < a && a < 1.0,
            CatalogFamily::HypA => a * a < 1.0 + b * b,
            CatalogFamily::HypB => a * a < b * b && b > 0.0,
            CatalogFamily::HypC => 1.0 + a * a < b * b && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SpecError::Constraint(format!(
                "{} requires {} (got a={a}, b={b})",
                self.id(),
                self.constraint_text()
            )))
        }
    }
}

/// A parametric immersion `L : box in R^n -> flat model of R^m(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    pub sf: SpaceForm,
    pub n: usize,
    pub coords: Vec<Coord>,
    pub params: Vec<(String, f64)>,
    pub domain: Vec<(f64, f64)>,
    /// Set when the spec was produced by [`build_catalog`]; enables
    /// closed-form cross-checks downstream.
    pub family: Option<CatalogFamily>,
}

const RESERVED: [&str; 10] =
    ["pi", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt", "exp", "log"];

fn variable_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl ImmersionSpec {
    /// Parse and bind coordinate sources into a validated spec.
    pub fn from_sources(
        sf: SpaceForm,
        n: usize,
        sources: Vec<String>,
        params: Vec<(String, f64)>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self, SpecError> {
        if n < 2 {
            return Err(SpecError::Range(format!("n must be at least 2, got {n}")));
        }
        if n > sf.m {
            return Err(SpecError::Constraint(format!(
                "intrinsic dimension n={n} exceeds space form dimension m={}",
                sf.m
            )));
        }
        if sources.len() != sf.flat_dim() {
            return Err(SpecError::Constraint(format!(
                "{} coordinate functions given but the flat model has dimension {}",
                sources.len(),
                sf.flat_dim()
            )));
        }
        if domain.len() != n {
            return Err(SpecError::Constraint(format!(
                "domain box has {} intervals for n={n}",
                domain.len()
            )));
        }
        for (i, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo <= hi) {
                return Err(SpecError::Constraint(format!(
                    "domain interval x{} = {lo}:{hi} is empty",
                    i + 1
                )));
            }
        }
        let vars = variable_names(n);
        for (name, _) in &params {
            if RESERVED.contains(&name.as_str()) || vars.contains(name) {
                return Err(SpecError::Constraint(format!(
                    "parameter name `{name}` is reserved"
                )));
            }
        }
        let mut coords = Vec::with_capacity(sources.len());
        for source in sources {
            let ast = expr::parse(&source)?;
            let bound = ast.bind(&vars, &params)?;
            coords.push(Coord { source, expr: bound });
        }
        Ok(ImmersionSpec { sf, n, coords, params, domain, family: None })
    }

    pub fn flat_dim(&self) -> usize {
        self.sf.flat_dim()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(p, _)| p == name).map(|(_, v)| *v)
    }

    /// Check that `x` lies in the domain box (with a hair of slack for
    /// roundoff in grid generation).
    pub fn check_domain(&self, x: &[f64]) -> Result<(), SpecError> {
        if x.len() != self.n {
            return Err(SpecError::Constraint(format!(
                "point has {} coordinates for n={}",
                x.len(),
                self.n
            )));
        }
        for (i, &xi) in x.iter().enumerate() {
            let (lo, hi) = self.domain[i];
            let slack = 1e-12 * (1.0 + libm::fabs(lo).max(libm::fabs(hi)));
            if xi < lo - slack || xi > hi + slack {
                return Err(SpecError::Domain { index: i + 1, value: xi });
            }
        }
        Ok(())
    }

    /// Evaluate all coordinate functions at `x` over any scalar type.
    pub fn evaluate<S: Real + FiniteCheck>(&self, x: &[S]) -> Result<Vec<S>, EvalError> {
        self.coords.iter().map(|c| c.expr.eval(x)).collect()
    }

    /// Append constant-zero coordinates so the immersion lands in a larger
    /// space form of dimension `m`.
    pub fn pad_to(&self, m: usize) -> Result<ImmersionSpec, SpecError> {
        if m < self.sf.m {
            return Err(SpecError::Constraint(format!(
                "pad target m={m} is smaller than current m={}",
                self.sf.m
            )));
        }
        let sf = SpaceForm::new(self.sf.kind, m)
            .map_err(|e| SpecError::Constraint(e.to_string()))?;
        let mut sources: Vec<String> = self.coords.iter().map(|c| c.source.clone()).collect();
        while sources.len() < sf.flat_dim() {
            sources.push("0".to_string());
        }
        let mut spec = ImmersionSpec::from_sources(
            sf,
            self.n,
            sources,
            self.params.clone(),
            self.domain.clone(),
        )?;
        spec.family = self.family;
        Ok(spec)
    }

    /// Render the spec back into the document format understood by
    /// [`parse_spec`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("[spaceform]\n");
        out.push_str(&format!("kind={}\n", self.sf.kind.name()));
        out.push_str(&format!("m={}\n", self.sf.m));
        out.push_str("\n[domain]\n");
        out.push_str(&format!("n={}\n", self.n));
        for (i, (lo, hi)) in self.domain.iter().enumerate() {
            out.push_str(&format!("x{}={lo}:{hi}\n", i + 1));
        }
        if !self.params.is_empty() {
            out.push_str("\n[params]\n");
            for (name, value) in &self.params {
                out.push_str(&format!("{name}={value}\n"));
            }
        }
        out.push_str("\n[map]\n");
        for (i, coord) in self.coords.iter().enumerate() {
            out.push_str(&format!("u{}=\"{}\"\n", i + 1, coord.source));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Catalog construction
// ---------------------------------------------------------------------------

/// `cosh(x{lo})*...*cosh(x{hi})`, or `None` when the range is empty.
fn cosh_chain(lo: usize, hi: usize) -> Option<String> {
    if lo > hi {
        return None;
    }
    Some((lo..=hi).map(|j| format!("cosh(x{j})")).collect::<Vec<_>>().join("*"))
}

fn append_factor(base: String, factor: &Option<String>) -> String {
    match factor {
        Some(f) => format!("{base}*{f}"),
        None => base,
    }
}

fn get_param(params: &[(String, f64)], name: &str) -> Option<f64> {
    params.iter().find(|(p, _)| p == name).map(|(_, v)| *v)
}

/// Build one of the classified families as a fully parsed spec.
///
/// The coordinate expressions follow the published closed forms, with
/// trailing zero coordinates dropped (effective codimension one); use
/// [`ImmersionSpec::pad_to`] to embed in a larger space form.
pub fn build_catalog(
    id: CatalogFamily,
    n: usize,
    params: &[(String, f64)],
) -> Result<ImmersionSpec, SpecError> {
    if n < id.min_n() {
        return Err(SpecError::Range(format!(
            "{} requires n >= {}, got {n}",
            id.id(),
            id.min_n()
        )));
    }
    for (name, _) in params {
        if !id.required_params().contains(&name.as_str()) {
            return Err(SpecError::Constraint(format!(
                "{} does not take parameter `{name}`",
                id.id()
            )));
        }
    }
    let a = get_param(params, "a").ok_or_else(|| {
        SpecError::Constraint(format!("{} requires parameter `a`", id.id()))
    })?;
    let b = if id.required_params().contains(&"b") {
        get_param(params, "b").ok_or_else(|| {
            SpecError::Constraint(format!("{} requires parameter `b`", id.id()))
        })?
    } else {
        0.0
    };
    id.check_params(a, b)?;

    let sources = match id {
        CatalogFamily::EuclidT1 => {
            let mut s = vec!["sqrt(1-a^2)*x1".to_string()];
            for i in 2..=n - 2 {
                s.push(format!("x{i}"));
            }
            s.push(format!("a*x1*sin(x{})", n - 1));
            s.push(format!("a*x1*cos(x{})*sin(x{})", n - 1, n));
            s.push(format!("a*x1*cos(x{})*cos(x{})", n - 1, n));
            s
        }
        CatalogFamily::SphereT2 => {
            let mut s = vec!["sqrt(1-a^2)*sin(x1)".to_string()];
            for k in 2..=n - 2 {
                let mut e = format!("sin(x{k})");
                for j in 1..k {
                    e.push_str(&format!("*cos(x{j})"));
                }
                s.push(e);
            }
            s.push((1..=n - 2).map(|j| format!("cos(x{j})")).collect::<Vec<_>>().join("*"));
            s.push(format!("a*sin(x1)*sin(x{})", n - 1));
            s.push(format!("a*sin(x1)*cos(x{})*sin(x{})", n - 1, n));
            s.push(format!("a*sin(x1)*cos(x{})*cos(x{})", n - 1, n));
            s
        }
        CatalogFamily::HypA => {
            let ch = cosh_chain(1, n - 3);
            let w = format!("(a*sinh(x{})+b*cosh(x{}))", n - 2, n - 2);
            let mut s = vec![append_factor(
                format!(
                    "(a*b*sinh(x{})+(1+b^2)*cosh(x{}))/sqrt(1+b^2)",
                    n - 2,
                    n - 2
                ),
                &ch,
            )];
            for k in 1..=n - 3 {
                let mut e = format!("sinh(x{k})");
                for j in 1..k {
                    e.push_str(&format!("*cosh(x{j})"));
                }
                s.push(e);
            }
            s.push(append_factor(
                format!("sqrt(1-a^2+b^2)/sqrt(1+b^2)*sinh(x{})", n - 2),
                &ch,
            ));
            s.push(append_factor(format!("{w}*cos(x{})*cos(x{})", n - 1, n), &ch));
            s.push(append_factor(format!("{w}*cos(x{})*sin(x{})", n - 1, n), &ch));
            s.push(append_factor(format!("{w}*sin(x{})", n - 1), &ch));
            s
        }
        CatalogFamily::HypB => {
            let ch = cosh_chain(1, n - 3);
            let w = format!("(a*sinh(x{})+b*cosh(x{}))", n - 2, n - 2);
            let rho = format!("(x{}^2+x{}^2)", n - 1, n);
            let mut s = vec![
                append_factor(
                    format!(
                        "(a*(b^4-4+4*b^2*{rho})*sinh(x{})+b*(b^4+4+4*b^2*{rho})*cosh(x{}))/(4*b^3)",
                        n - 2,
                        n - 2
                    ),
                    &ch,
                ),
                append_factor(
                    format!(
                        "(a*(b^4+4-4*b^2*{rho})*sinh(x{})+b*(b^4-4-4*b^2*{rho})*cosh(x{}))/(4*b^3)",
                        n - 2,
                        n - 2
                    ),
                    &ch,
                ),
            ];
            for k in 1..=n - 3 {
                let mut e = format!("sinh(x{k})");
                for j in 1..k {
                    e.push_str(&format!("*cosh(x{j})"));
                }
                s.push(e);
            }
            s.push(append_factor(format!("sqrt(b^2-a^2)/b*sinh(x{})", n - 2), &ch));
            s.push(append_factor(format!("{w}*x{}", n - 1), &ch));
            s.push(append_factor(format!("{w}*x{n}"), &ch));
            s
        }
        CatalogFamily::HypC => {
            let ch = cosh_chain(1, n - 3);
            let w = format!("(a*sinh(x{})+b*cosh(x{}))", n - 2, n - 2);
            let mut s = vec![
                append_factor(format!("{w}*cosh(x{})*cosh(x{})", n - 1, n), &ch),
                append_factor(format!("{w}*cosh(x{})*sinh(x{})", n - 1, n), &ch),
                append_factor(format!("{w}*sinh(x{})", n - 1), &ch),
            ];
            for k in 1..=n - 3 {
                let mut e = format!("sinh(x{k})");
                for j in 1..k {
                    e.push_str(&format!("*cosh(x{j})"));
                }
                s.push(e);
            }
            s.push(format!(
                "sqrt(b^2-a^2-1)/sqrt(1+a^2)*{}",
                cosh_chain(1, n - 2).expect("n >= 4"),
            ));
            s.push(append_factor(
                format!(
                    "(a*b*cosh(x{})+(1+a^2)*sinh(x{}))/sqrt(1+a^2)",
                    n - 2,
                    n - 2
                ),
                &ch,
            ));
            s
        }
    };

    let sf = SpaceForm::new(id.kind(), n + 1).map_err(|e| SpecError::Constraint(e.to_string()))?;
    let mut kept_params: Vec<(String, f64)> = vec![("a".to_string(), a)];
    if id.required_params().contains(&"b") {
        kept_params.push(("b".to_string(), b));
    }
    let mut spec =
        ImmersionSpec::from_sources(sf, n, sources, kept_params, id.default_domain(n))?;
    spec.family = Some(id);
    Ok(spec)
}

/// Warping data shared by the hyperbolic families at a chart point.
struct HypPoint {
    /// `a sinh(x_{n-2}) + b cosh(x_{n-2})`.
    w: f64,
    /// `prod_{j=1}^{n-3} cosh^2(x_j)`.
    prod_cosh_sq: f64,
}

fn hyp_point(n: usize, a: f64, b: f64, x: &[f64]) -> HypPoint {
    let s = libm::sinh(x[n - 3]);
    let c = libm::cosh(x[n - 3]);
    let mut prod = 1.0;
    for j in 0..n - 3 {
        let ch = libm::cosh(x[j]);
        prod *= ch * ch;
    }
    HypPoint { w: a * s + b * c, prod_cosh_sq: prod }
}

fn catalog_checked(
    id: CatalogFamily,
    n: usize,
    params: &[(String, f64)],
    x: &[f64],
) -> Result<(f64, f64), SpecError> {
    if n < id.min_n() {
        return Err(SpecError::Range(format!(
            "{} requires n >= {}, got {n}",
            id.id(),
            id.min_n()
        )));
    }
    let a = get_param(params, "a")
        .ok_or_else(|| SpecError::Constraint(format!("{} requires parameter `a`", id.id())))?;
    let b = if id.required_params().contains(&"b") {
        get_param(params, "b")
            .ok_or_else(|| SpecError::Constraint(format!("{} requires parameter `b`", id.id())))?
    } else {
        0.0
    };
    id.check_params(a, b)?;
    if x.len() != n {
        return Err(SpecError::Constraint(format!(
            "point has {} coordinates for n={n}",
            x.len()
        )));
    }
    Ok((a, b))
}

/// Closed-form warped-product metric of a catalog family at `x`, as a full
/// (diagonal) matrix.
pub fn closed_form_metric(
    id: CatalogFamily,
    n: usize,
    params: &[(String, f64)],
    x: &[f64],
) -> Result<Mat, SpecError> {
    let (a, b) = catalog_checked(id, n, params, x)?;
    let mut g = Mat::zeros(n, n);
    match id {
        CatalogFamily::EuclidT1 => {
            for i in 0..n - 2 {
                g[(i, i)] = 1.0;
            }
            let warp = a * a * x[0] * x[0];
            let cn1 = libm::cos(x[n - 2]);
            g[(n - 2, n - 2)] = warp;
            g[(n - 1, n - 1)] = warp * cn1 * cn1;
        }
        CatalogFamily::SphereT2 => {
            g[(0, 0)] = 1.0;
            let mut prod = 1.0;
            for k in 1..n - 2 {
                let c = libm::cos(x[k - 1]);
                prod *= c * c;
                g[(k, k)] = prod;
            }
            let s1 = libm::sin(x[0]);
            let warp = a * a * s1 * s1;
            let cn1 = libm::cos(x[n - 2]);
            g[(n - 2, n - 2)] = warp;
            g[(n - 1, n - 1)] = warp * cn1 * cn1;
        }
        CatalogFamily::HypA | CatalogFamily::HypB | CatalogFamily::HypC => {
            g[(0, 0)] = 1.0;
            let mut prod = 1.0;
            for k in 1..n - 2 {
                let c = libm::cosh(x[k - 1]);
                prod *= c * c;
                g[(k, k)] = prod;
            }
            let hp = hyp_point(n, a, b, x);
            let warp = hp.w * hp.w * hp.prod_cosh_sq;
            g[(n - 2, n - 2)] = warp;
            let last = match id {
                CatalogFamily::HypA => {
                    let c = libm::cos(x[n - 2]);
                    warp * c * c
                }
                CatalogFamily::HypB => warp,
                CatalogFamily::HypC => {
                    let c = libm::cosh(x[n - 2]);
                    warp * c * c
                }
                _ => unreachable!(),
            };
            g[(n - 1, n - 1)] = last;
        }
    }
    Ok(g)
}

/// The single nonzero shape-operator eigenvalue of a catalog family at `x`.
pub fn closed_form_lambda(
    id: CatalogFamily,
    n: usize,
    params: &[(String, f64)],
    x: &[f64],
) -> Result<f64, SpecError> {
    let (a, b) = catalog_checked(id, n, params, x)?;
    const EPS: f64 = 1e-12;
    match id {
        CatalogFamily::EuclidT1 => {
            if libm::fabs(x[0]) < EPS {
                return Err(SpecError::SingularPoint("x1 = 0".to_string()));
            }
            Ok(libm::sqrt(1.0 - a * a) / (a * x[0]))
        }
        CatalogFamily::SphereT2 => {
            let s = libm::sin(x[0]);
            if libm::fabs(s) < EPS {
                return Err(SpecError::SingularPoint("sin(x1) = 0".to_string()));
            }
            Ok(libm::sqrt(1.0 - a * a) / a / s)
        }
        CatalogFamily::HypA | CatalogFamily::HypB | CatalogFamily::HypC => {
            let hp = hyp_point(n, a, b, x);
            if libm::fabs(hp.w) < EPS {
                return Err(SpecError::SingularPoint(
                    "a*sinh(x_{n-2}) + b*cosh(x_{n-2}) = 0".to_string(),
                ));
            }
            let disc = match id {
                CatalogFamily::HypA => 1.0 - a * a + b * b,
                CatalogFamily::HypB => b * b - a * a,
                CatalogFamily::HypC => b * b - a * a - 1.0,
                _ => unreachable!(),
            };
            Ok(libm::sqrt(disc) / hp.w / libm::sqrt(hp.prod_cosh_sq))
        }
    }
}

// ---------------------------------------------------------------------------
// Spec document parsing
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct DocEntry {
    section: String,
    key: String,
    value: String,
    line: u32,
    col: u32,
}

fn doc_err(line: u32, col: u32, msg: impl Into<String>) -> SpecError {
    SpecError::Doc { line, col, msg: msg.into() }
}

fn tokenize_doc(text: &str) -> Result<Vec<DocEntry>, SpecError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno as u32 + 1;
        let bytes = raw_line.as_bytes();
        let mut i = 0usize;
        while i < bytes.len() {
            let c = bytes[i];
            if c == b' ' || c == b'\t' || c == b'\r' {
                i += 1;
                continue;
            }
            let col = i as u32 + 1;
            if c == b'[' {
                let close = raw_line[i..].find(']').map(|p| p + i);
                match close {
                    Some(end) => {
                        section = raw_line[i + 1..end].trim().to_string();
                        if section.is_empty() {
                            return Err(doc_err(line, col, "empty section name"));
                        }
                        i = end + 1;
                    }
                    None => return Err(doc_err(line, col, "unterminated section header")),
                }
                continue;
            }
            // key=value
            let rest = &raw_line[i..];
            let eq = match rest.find('=') {
                Some(p) => p,
                None => return Err(doc_err(line, col, "expected `key=value`")),
            };
            let key = rest[..eq].trim().to_string();
            if key.is_empty() {
                return Err(doc_err(line, col, "empty key"));
            }
            if section.is_empty() {
                return Err(doc_err(line, col, "entry before any [section] header"));
            }
            let mut j = i + eq + 1;
            let value;
            let vcol;
            if j < bytes.len() && bytes[j] == b'"' {
                let start = j + 1;
                vcol = start as u32 + 1;
                let close = raw_line[start..].find('"').map(|p| p + start);
                match close {
                    Some(end) => {
                        value = raw_line[start..end].to_string();
                        j = end + 1;
                    }
                    None => {
                        return Err(doc_err(line, j as u32 + 1, "unterminated quoted value"))
                    }
                }
            } else {
                vcol = j as u32 + 1;
                let end = raw_line[j..]
                    .find(|ch: char| ch == ' ' || ch == '\t')
                    .map(|p| p + j)
                    .unwrap_or(raw_line.len());
                value = raw_line[j..end].to_string();
                j = end;
            }
            if value.is_empty() {
                return Err(doc_err(line, vcol, format!("empty value for key `{key}`")));
            }
            entries.push(DocEntry { section: section.clone(), key, value, line, col: vcol });
            i = j;
        }
    }
    Ok(entries)
}

fn parse_f64(e: &DocEntry) -> Result<f64, SpecError> {
    e.value
        .parse::<f64>()
        .map_err(|_| doc_err(e.line, e.col, format!("invalid number `{}`", e.value)))
}

fn parse_usize(e: &DocEntry) -> Result<usize, SpecError> {
    e.value
        .parse::<usize>()
        .map_err(|_| doc_err(e.line, e.col, format!("invalid integer `{}`", e.value)))
}

/// Parse a UTF-8 spec document (see the crate README for the format) into a
/// fully resolved [`ImmersionSpec`].
pub fn parse_spec(text: &str) -> Result<ImmersionSpec, SpecError> {
    let entries = tokenize_doc(text)?;

    let mut kind: Option<(SpaceFormKind, u32, u32)> = None;
    let mut m: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut ranges: Vec<(usize, (f64, f64))> = Vec::new();
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut map_entries: Vec<(usize, String, u32, u32)> = Vec::new();

    for e in &entries {
        match e.section.as_str() {
            "spaceform" => match e.key.as_str() {
                "kind" => {
                    let k = match e.value.to_lowercase().as_str() {
                        "euclidean" => SpaceFormKind::Euclidean,
                        "sphere" => SpaceFormKind::Sphere,
                        "hyperbolic" => SpaceFormKind::Hyperbolic,
                        other => {
                            return Err(doc_err(
                                e.line,
                                e.col,
                                format!("unknown space form kind `{other}`"),
                            ))
                        }
                    };
                    kind = Some((k, e.line, e.col));
                }
                "m" => m = Some(parse_usize(e)?),
                other => {
                    return Err(doc_err(e.line, e.col, format!("unknown spaceform key `{other}`")))
                }
            },
            "domain" => {
                if e.key == "n" {
                    n = Some(parse_usize(e)?);
                } else if let Some(idx) = e.key.strip_prefix('x').and_then(|s| s.parse::<usize>().ok())
                {
                    let parts: Vec<&str> = e.value.splitn(2, ':').collect();
                    if parts.len() != 2 {
                        return Err(doc_err(e.line, e.col, "expected `lo:hi`"));
                    }
                    let lo = parts[0].parse::<f64>().map_err(|_| {
                        doc_err(e.line, e.col, format!("invalid number `{}`", parts[0]))
                    })?;
                    let hi = parts[1].parse::<f64>().map_err(|_| {
                        doc_err(e.line, e.col, format!("invalid number `{}`", parts[1]))
                    })?;
                    ranges.push((idx, (lo, hi)));
                } else {
                    return Err(doc_err(e.line, e.col, format!("unknown domain key `{}`", e.key)));
                }
            }
            "params" => params.push((e.key.clone(), parse_f64(e)?)),
            "map" => {
                if let Some(idx) = e.key.strip_prefix('u').and_then(|s| s.parse::<usize>().ok()) {
                    map_entries.push((idx, e.value.clone(), e.line, e.col));
                } else {
                    return Err(doc_err(e.line, e.col, format!("unknown map key `{}`", e.key)));
                }
            }
            other => return Err(doc_err(e.line, e.col, format!("unknown section `[{other}]`"))),
        }
    }

    let (kind, ..) = kind.ok_or_else(|| doc_err(1, 1, "missing [spaceform] kind"))?;
    let m = m.ok_or_else(|| doc_err(1, 1, "missing [spaceform] m"))?;
    let n = n.ok_or_else(|| doc_err(1, 1, "missing [domain] n"))?;
    let sf = SpaceForm::new(kind, m).map_err(|e| SpecError::Constraint(e.to_string()))?;

    let mut domain = vec![None; n];
    for (idx, range) in ranges {
        if idx == 0 || idx > n {
            return Err(SpecError::Constraint(format!(
                "domain variable x{idx} out of range for n={n}"
            )));
        }
        domain[idx - 1] = Some(range);
    }
    let domain: Vec<(f64, f64)> = domain
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| SpecError::Constraint(format!("missing domain for x{}", i + 1)))
        })
        .collect::<Result<_, _>>()?;

    let flat = sf.flat_dim();
    if map_entries.len() != flat {
        return Err(SpecError::Constraint(format!(
            "[map] has {} entries but kind={} m={m} needs {flat}",
            map_entries.len(),
            kind.name()
        )));
    }
    let mut sources: Vec<Option<(String, u32, u32)>> = vec![None; flat];
    for (idx, source, line, col) in map_entries {
        if idx == 0 || idx > flat {
            return Err(SpecError::Constraint(format!(
                "map coordinate u{idx} out of range for flat dimension {flat}"
            )));
        }
        if sources[idx - 1].is_some() {
            return Err(SpecError::Constraint(format!("duplicate map coordinate u{idx}")));
        }
        sources[idx - 1] = Some((source, line, col));
    }

    let vars = variable_names(n);
    let mut coords = Vec::with_capacity(flat);
    let mut plain_sources = Vec::with_capacity(flat);
    for (i, s) in sources.into_iter().enumerate() {
        let (source, line, col) =
            s.ok_or_else(|| SpecError::Constraint(format!("missing map coordinate u{}", i + 1)))?;
        let ast = expr::parse(&source).map_err(|err| offset_expr_err(err, line, col))?;
        let bound = ast.bind(&vars, &params).map_err(|err| offset_expr_err(err, line, col))?;
        coords.push(Coord { source: source.clone(), expr: bound });
        plain_sources.push(source);
    }

    let mut spec = ImmersionSpec::from_sources(sf, n, plain_sources, params, domain)?;
    spec.coords = coords;
    Ok(spec)
}

/// Shift expression error positions from expression-local coordinates to
/// document coordinates (expressions are single-line values).
fn offset_expr_err(err: ExprError, line: u32, col: u32) -> SpecError {
    let fix = |l: u32, c: u32| if l == 1 { (line, col + c - 1) } else { (line + l - 1, c) };
    match err {
        ExprError::Parse { line: l, col: c, msg } => {
            let (line, col) = fix(l, c);
            SpecError::Expr(ExprError::Parse { line, col, msg })
        }
        ExprError::UnboundIdentifier { name, line: l, col: c } => {
            let (line, col) = fix(l, c);
            SpecError::Expr(ExprError::UnboundIdentifier { name, line, col })
        }
        ExprError::Arity { name, line: l, col: c, found } => {
            let (line, col) = fix(l, c);
            SpecError::Expr(ExprError::Arity { name, line, col, found })
        }
    }
}
