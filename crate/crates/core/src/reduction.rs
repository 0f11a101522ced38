//! Exact pipeline for rank-2 separable kernels.
//!
//! Substituting f = c1·ψ1 + c2·ψ2 into the quadratic integral operator
//! collapses the fixed-point problem to a quadratic map on the plane,
//!
//! ```text
//! c1 = A11·c1² + A12·c1·c2 + A22·c2²      (φ1-weighted integrals)
//! c2 = B11·c1² + B12·c1·c2 + B22·c2²      (φ2-weighted integrals)
//! ```
//!
//! whose positive fixed points are in bijection with the positive roots
//! λ = c1/c2 of the cubic
//!
//! ```text
//! P3(λ) = B11·λ³ + (B12−A11)·λ² + (B22−A12)·λ − A22.
//! ```
//!
//! Sign patterns of P3 at its critical points decide how many positive
//! roots exist; the classifier below is total over all sign patterns.

use crate::kernel::{DegenerateKernel, KernelError};
use crate::quadrature::{integrate_2d, QuadratureError, QuadratureRule};
use serde::Serialize;
use thiserror::Error;

/// Relative tolerance under which P3 at a critical point counts as zero
/// (the double-root boundary cases).
pub const CLASSIFY_EQ_TOL: f64 = 1e-9;

/// Default residual tolerance for root polishing.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Scaled reconstruction tolerance factor for plane fixed points.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("coefficient {name} = {value} is not strictly positive and finite")]
    CoefficientNotPositive { name: &'static str, value: f64 },
    #[error("lambda = {lambda} is not a root of the cubic (plane defect {residual})")]
    InconsistentRoot { lambda: f64, residual: f64 },
    #[error("fixed point vanishes at t = 0 (f(0) = {f_at_zero}); cannot normalize")]
    ZeroAtOrigin { f_at_zero: f64 },
}

/// The six plane-map coefficients, tagged with the quadrature order that
/// produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticSystem {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    pub quad_order: usize,
}

impl QuadraticSystem {
    /// Left-hand quadratic form A(c1,c2) of the c1-equation.
    pub fn form_a(&self, c1: f64, c2: f64) -> f64 {
        self.a11 * c1 * c1 + self.a12 * c1 * c2 + self.a22 * c2 * c2
    }

    /// Left-hand quadratic form B(c1,c2) of the c2-equation.
    pub fn form_b(&self, c1: f64, c2: f64) -> f64 {
        self.b11 * c1 * c1 + self.b12 * c1 * c2 + self.b22 * c2 * c2
    }

    fn coefficients(&self) -> [(&'static str, f64); 6] {
        [
            ("A11", self.a11),
            ("A12", self.a12),
            ("A22", self.a22),
            ("B11", self.b11),
            ("B12", self.b12),
            ("B22", self.b22),
        ]
    }
}

/// P3(ξ) = μ0ξ³ + μ1ξ² + μ2ξ − μ3. For systems with positive
/// coefficients, μ0 > 0 and μ3 > 0, so P3(0) < 0 and at least one
/// positive root exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicPolynomial {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
}

impl CubicPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        ((self.mu0 * x + self.mu1) * x + self.mu2) * x - self.mu3
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        (3.0 * self.mu0 * x + 2.0 * self.mu1) * x + self.mu2
    }

    /// max |μᵢ|, the natural residual scale.
    pub fn scale(&self) -> f64 {
        self.mu0
            .abs()
            .max(self.mu1.abs())
            .max(self.mu2.abs())
            .max(self.mu3.abs())
    }

    /// Cauchy bound: every root has absolute value below this, so
    /// P3 is positive there.
    pub fn cauchy_bound(&self) -> f64 {
        1.0 + (self.mu1.abs() + self.mu2.abs() + self.mu3.abs()) / self.mu0
    }

    /// D = μ1² − 3μ0μ2; positive iff P3 has two distinct critical points.
    pub fn critical_discriminant(&self) -> f64 {
        self.mu1 * self.mu1 - 3.0 * self.mu0 * self.mu2
    }

    /// Roots of P3' in increasing order, when D > 0. Uses the
    /// cancellation-stable quadratic formula.
    pub fn critical_points(&self) -> Option<(f64, f64)> {
        let d = self.critical_discriminant();
        if d <= 0.0 {
            return None;
        }
        let sq = d.sqrt();
        // 3μ0x² + 2μ1x + μ2 = 0
        let (r1, r2) = if self.mu1 >= 0.0 {
            let s = -(self.mu1 + sq);
            (s / (3.0 * self.mu0), self.mu2 / s)
        } else {
            let s = -self.mu1 + sq;
            (self.mu2 / s, s / (3.0 * self.mu0))
        };
        Some((r1.min(r2), r1.max(r2)))
    }
}

/// Classification outcome labels. `T41-*` cases carry a unique positive
/// root, `T42-*` a double-root boundary with two distinct fixed points,
/// and the fallbacks complete the classifier over sign patterns the
/// five/two case lists leave open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CubicCase {
    #[serde(rename = "T41-i")]
    T41i,
    #[serde(rename = "T41-ii")]
    T41ii,
    #[serde(rename = "T41-iii")]
    T41iii,
    #[serde(rename = "T41-iv")]
    T41iv,
    #[serde(rename = "T41-v")]
    T41v,
    #[serde(rename = "T42-i")]
    T42i,
    #[serde(rename = "T42-ii")]
    T42ii,
    #[serde(rename = "FALLBACK-3ROOTS")]
    Fallback3Roots,
    #[serde(rename = "FALLBACK-NUMERIC")]
    FallbackNumeric,
}

impl std::fmt::Display for CubicCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CubicCase::T41i => "T41-i",
            CubicCase::T41ii => "T41-ii",
            CubicCase::T41iii => "T41-iii",
            CubicCase::T41iv => "T41-iv",
            CubicCase::T41v => "T41-v",
            CubicCase::T42i => "T42-i",
            CubicCase::T42ii => "T42-ii",
            CubicCase::Fallback3Roots => "FALLBACK-3ROOTS",
            CubicCase::FallbackNumeric => "FALLBACK-NUMERIC",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub d: f64,
    pub crit_alpha: Option<f64>,
    pub crit_beta: Option<f64>,
    pub p3_at_alpha: Option<f64>,
    pub p3_at_beta: Option<f64>,
    pub matched_case: CubicCase,
    pub predicted_count: usize,
}

/// A positive root of the cubic; double roots are reported once with
/// multiplicity 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// A positive fixed point of the plane quadratic map. `lambda` is the
/// stored ratio c1/c2 and `residual` the larger of the two map defects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneFixedPoint {
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
    pub residual: f64,
}

/// One fixed point f = c1·ψ1 + c2·ψ2 of the integral operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LFixedPoint {
    pub point: PlaneFixedPoint,
    pub multiplicity: u8,
}

/// The normalized candidate g = f / f(0) with g(0) = 1; the generator of
/// a translation-invariant Gibbs measure once confirmed by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HFixedPoint {
    pub c1: f64,
    pub c2: f64,
    pub f_at_zero: f64,
}

impl HFixedPoint {
    /// g(t) = (c1·ψ1(t) + c2·ψ2(t)) / f(0).
    pub fn eval(&self, kernel: &DegenerateKernel, t: f64) -> Result<f64, ReductionError> {
        Ok(kernel.linear_combination(self.c1, self.c2, t)? / self.f_at_zero)
    }

    /// g sampled at the rule's nodes.
    pub fn sample(
        &self,
        kernel: &DegenerateKernel,
        rule: &QuadratureRule,
    ) -> Result<Vec<f64>, ReductionError> {
        rule.nodes().iter().map(|&t| self.eval(kernel, t)).collect()
    }

    /// The eigenvalue of the un-normalized operator at this solution:
    /// L g = λ g with λ = 1 / f(0).
    pub fn eigenvalue(&self) -> f64 {
        1.0 / self.f_at_zero
    }
}

/// Full analytic outcome for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionOutcome {
    pub system: QuadraticSystem,
    pub cubic: CubicPolynomial,
    pub report: ClassificationReport,
    pub roots: Vec<CubicRoot>,
    pub points: Vec<LFixedPoint>,
}

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

/// The six plane-map coefficients by tensor-product quadrature:
/// the A-row carries φ1(u), the B-row φ2(v).
pub fn compute_coefficients(
    kernel: &DegenerateKernel,
    rule: &QuadratureRule,
) -> Result<QuadraticSystem, ReductionError> {
    // Tabulate the components once; expression/domain failures surface
    // as kernel errors here rather than as NaNs inside the sums.
    let nodes = rule.nodes();
    let mut psi1 = Vec::with_capacity(nodes.len());
    let mut psi2 = Vec::with_capacity(nodes.len());
    let mut phi1 = Vec::with_capacity(nodes.len());
    let mut phi2 = Vec::with_capacity(nodes.len());
    for &x in nodes {
        psi1.push(kernel.psi1(x)?);
        psi2.push(kernel.psi2(x)?);
        phi1.push(kernel.phi1(x)?);
        phi2.push(kernel.phi2(x)?);
    }
    let index_of = |x: f64| nodes.partition_point(|&n| n < x);

    let i2 = |f: &dyn Fn(usize, usize) -> f64| -> Result<f64, QuadratureError> {
        integrate_2d(|x, y| f(index_of(x), index_of(y)), rule)
    };

    let qs = QuadraticSystem {
        a11: i2(&|j, k| phi1[j] * psi1[j] * psi1[k])?,
        a12: i2(&|j, k| phi1[j] * (psi1[j] * psi2[k] + psi2[j] * psi1[k]))?,
        a22: i2(&|j, k| phi1[j] * psi2[j] * psi2[k])?,
        b11: i2(&|j, k| phi2[k] * psi1[j] * psi1[k])?,
        b12: i2(&|j, k| phi2[k] * (psi1[j] * psi2[k] + psi2[j] * psi1[k]))?,
        b22: i2(&|j, k| phi2[k] * psi2[j] * psi2[k])?,
        quad_order: rule.order(),
    };

    for (name, value) in qs.coefficients() {
        if !(value.is_finite() && value > 0.0) {
            return Err(ReductionError::CoefficientNotPositive { name, value });
        }
    }
    Ok(qs)
}

/// Clears c1 = λ·c2 through the ratio identity
/// (A11λ² + A12λ + A22)/(B11λ² + B12λ + B22) = λ.
pub fn build_cubic(qs: &QuadraticSystem) -> CubicPolynomial {
    CubicPolynomial {
        mu0: qs.b11,
        mu1: qs.b12 - qs.a11,
        mu2: qs.b22 - qs.a12,
        mu3: qs.a22,
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

fn tri_sign(x: f64, tol: f64) -> i8 {
    if x.abs() <= tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Total classifier over sign patterns of P3 at its critical points.
/// Values of P3 within `CLASSIFY_EQ_TOL`·scale of zero count as zero,
/// which routes exact-boundary cubics into the T42 double-root cases.
pub fn classify(cubic: &CubicPolynomial) -> ClassificationReport {
    let d = cubic.critical_discriminant();
    let Some((ca, cb)) = cubic.critical_points() else {
        return ClassificationReport {
            d,
            crit_alpha: None,
            crit_beta: None,
            p3_at_alpha: None,
            p3_at_beta: None,
            matched_case: CubicCase::T41i,
            predicted_count: 1,
        };
    };

    let pa = cubic.eval(ca);
    let pb = cubic.eval(cb);
    let eq_tol = CLASSIFY_EQ_TOL * cubic.scale();

    let matched_case = if cb <= 0.0 {
        CubicCase::T41ii
    } else if ca <= 0.0 {
        CubicCase::T41iii
    } else {
        match (tri_sign(pa, eq_tol), tri_sign(pb, eq_tol)) {
            (-1, -1) => CubicCase::T41iv,
            (1, 1) => CubicCase::T41v,
            (0, -1) => CubicCase::T42i,
            (1, 0) => CubicCase::T42ii,
            (1, -1) => CubicCase::Fallback3Roots,
            _ => CubicCase::FallbackNumeric,
        }
    };

    let predicted_count = match matched_case {
        CubicCase::T41i
        | CubicCase::T41ii
        | CubicCase::T41iii
        | CubicCase::T41iv
        | CubicCase::T41v => 1,
        CubicCase::T42i | CubicCase::T42ii => 2,
        CubicCase::Fallback3Roots => 3,
        CubicCase::FallbackNumeric => positive_roots(cubic, DEFAULT_ROOT_TOL).len().max(1),
    };

    ClassificationReport {
        d,
        crit_alpha: Some(ca),
        crit_beta: Some(cb),
        p3_at_alpha: Some(pa),
        p3_at_beta: Some(pb),
        matched_case,
        predicted_count,
    }
}

// ---------------------------------------------------------------------------
// Roots
// ---------------------------------------------------------------------------

fn bisect_then_newton(cubic: &CubicPolynomial, mut lo: f64, mut hi: f64, lo_negative: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = cubic.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = cubic.eval_derivative(x);
        if d == 0.0 {
            break;
        }
        let next = x - cubic.eval(x) / d;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        x = next;
    }
    x
}

/// Newton on P3' refines a near-critical double root.
fn polish_double_root(cubic: &CubicPolynomial, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..50 {
        let d2 = 6.0 * cubic.mu0 * x + 2.0 * cubic.mu1;
        if d2 == 0.0 {
            break;
        }
        let step = cubic.eval_derivative(x) / d2;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// All distinct positive roots, in increasing order, found by bracketing
/// on the monotone pieces split at the critical points. Requires
/// μ0 > 0 and μ3 > 0 so that P3(0) < 0 and P3 is eventually positive;
/// at least one root always exists. A critical value within the
/// classification tolerance of zero is collapsed into one double root.
pub fn positive_roots(cubic: &CubicPolynomial, tol: f64) -> Vec<CubicRoot> {
    assert!(cubic.mu0 > 0.0 && cubic.mu3 > 0.0, "cubic sign anchors violated");
    assert!(tol > 0.0);

    let bound = cubic.cauchy_bound();
    let eq_tol = CLASSIFY_EQ_TOL * cubic.scale();

    // Breakpoints with ternary signs; the endpoints carry their
    // structural signs (P3(0) = -mu3 < 0, P3(bound) > 0).
    let mut breakpoints: Vec<(f64, i8)> = vec![(0.0, -1)];
    if let Some((ca, cb)) = cubic.critical_points() {
        for c in [ca, cb] {
            if c > 0.0 && c < bound {
                breakpoints.push((c, tri_sign(cubic.eval(c), eq_tol)));
            }
        }
    }
    breakpoints.push((bound, 1));

    let mut roots: Vec<CubicRoot> = Vec::new();
    for &(x, sign) in &breakpoints {
        if sign == 0 {
            let value = polish_double_root(cubic, x);
            roots.push(CubicRoot { value, multiplicity: 2 });
        }
    }
    for pair in breakpoints.windows(2) {
        let (lo, s_lo) = pair[0];
        let (hi, s_hi) = pair[1];
        if s_lo != 0 && s_hi != 0 && s_lo != s_hi {
            let value = bisect_then_newton(cubic, lo, hi, s_lo < 0);
            roots.push(CubicRoot { value, multiplicity: 1 });
        }
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));

    debug_assert!(roots.iter().all(|r| {
        r.multiplicity == 2 || cubic.eval(r.value).abs() <= tol * cubic.scale()
    }));
    roots
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

/// From a positive cubic root λ to the plane point: c2 = λ/Q(λ) with
/// Q(λ) = A11λ² + A12λ + A22, c1 = λ·c2, followed by one Newton
/// correction on the full 2-D system when the defect warrants it.
pub fn reconstruct_plane_point(
    qs: &QuadraticSystem,
    lambda: f64,
) -> Result<PlaneFixedPoint, ReductionError> {
    let q = qs.a11 * lambda * lambda + qs.a12 * lambda + qs.a22;
    let mut c2 = lambda / q;
    let mut c1 = lambda * c2;

    let defect = |c1: f64, c2: f64| -> (f64, f64) {
        (qs.form_a(c1, c2) - c1, qs.form_b(c1, c2) - c2)
    };

    let (mut d1, mut d2) = defect(c1, c2);
    let tol = RECONSTRUCTION_TOL * (1.0 + c1.abs() + c2.abs());
    if d1.abs().max(d2.abs()) > tol {
        // one Newton step on F(c) = (A(c)-c1, B(c)-c2)
        let j11 = 2.0 * qs.a11 * c1 + qs.a12 * c2 - 1.0;
        let j12 = qs.a12 * c1 + 2.0 * qs.a22 * c2;
        let j21 = 2.0 * qs.b11 * c1 + qs.b12 * c2;
        let j22 = qs.b12 * c1 + 2.0 * qs.b22 * c2 - 1.0;
        let det = j11 * j22 - j12 * j21;
        if det != 0.0 {
            c1 -= (d1 * j22 - d2 * j12) / det;
            c2 -= (d2 * j11 - d1 * j21) / det;
            (d1, d2) = defect(c1, c2);
        }
    }

    let residual = d1.abs().max(d2.abs());
    let tol = RECONSTRUCTION_TOL * (1.0 + c1.abs() + c2.abs());
    if residual > tol || residual.is_nan() {
        return Err(ReductionError::InconsistentRoot { lambda, residual });
    }
    // store the ratio the corrected point actually has
    Ok(PlaneFixedPoint { lambda: c1 / c2, c1, c2, residual })
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// coefficients → cubic → classification → roots → plane points.
pub fn analyze(
    kernel: &DegenerateKernel,
    rule: &QuadratureRule,
    tol: f64,
) -> Result<ReductionOutcome, ReductionError> {
    let system = compute_coefficients(kernel, rule)?;
    let cubic = build_cubic(&system);
    let report = classify(&cubic);
    let roots = positive_roots(&cubic, tol);
    let mut points = Vec::with_capacity(roots.len());
    for root in &roots {
        let point = reconstruct_plane_point(&system, root.value)?;
        points.push(LFixedPoint { point, multiplicity: root.multiplicity });
    }
    Ok(ReductionOutcome { system, cubic, report, roots, points })
}

/// All fixed points f = c1·ψ1 + c2·ψ2 of the separable operator, one
/// entry per distinct positive cubic root.
pub fn l_fixed_points(
    kernel: &DegenerateKernel,
    rule: &QuadratureRule,
    tol: f64,
) -> Result<Vec<LFixedPoint>, ReductionError> {
    Ok(analyze(kernel, rule, tol)?.points)
}

/// Normalize a fixed point of L to the candidate solution g with
/// g(0) = 1.
pub fn h_from_l(
    kernel: &DegenerateKernel,
    entry: &LFixedPoint,
) -> Result<HFixedPoint, ReductionError> {
    let c1 = entry.point.c1;
    let c2 = entry.point.c2;
    let f_at_zero = kernel.linear_combination(c1, c2, 0.0)?;
    if f_at_zero <= 0.0 || f_at_zero.is_nan() {
        return Err(ReductionError::ZeroAtOrigin { f_at_zero });
    }
    Ok(HFixedPoint { c1, c2, f_at_zero })
}
