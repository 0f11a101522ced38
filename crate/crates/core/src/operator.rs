//! Discretized quadratic integral operator and the multistart
//! fixed-point oracle.
//!
//! This is the route that never sees the rank-2 structure: the operator
//! is applied through full tensor-product quadrature sums
//!
//! ```text
//! (Lf)(tᵢ) = Σⱼₖ wⱼ wₖ K(tᵢ, uⱼ, vₖ) f(uⱼ) f(vₖ)
//! (Hf)(tᵢ) = (Lf)(tᵢ) / (Lf)(0)
//! ```
//!
//! with the t = 0 evaluation taken exactly at 0 (an extra kernel row;
//! 0 is never a Gauss node), so every H image satisfies the g(0) = 1
//! normalization by construction. Picard iteration from many
//! deterministic pseudo-random starts, followed by sup-norm clustering,
//! estimates the number of distinct solutions; it is the independent
//! check for everything the `reduction` module predicts, and the only
//! solver available for non-separable kernels.

use crate::kernel::{Kernel, KernelError};
use crate::quadrature::{KahanSum, QuadratureRule};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Full kernel tensors are cached up to this order (2 MB at order 64,
/// 134 MB at 256); above it rows are re-evaluated per application.
const CACHE_ORDER_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("grid function length {got} does not match rule order {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("grid value {value} at node index {index} must be strictly positive and finite")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("operator image not finite at node index {index}")]
    NonFiniteImage { index: usize },
    #[error("normalization denominator (Lf)(0) = {0} is not positive")]
    DegenerateNormalization(f64),
    #[error("damping must lie in (0, 1], got {0}")]
    BadDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// A positive function tabulated on the nodes of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    rule: QuadratureRule,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(rule: QuadratureRule, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() != rule.order() {
            return Err(OperatorError::LengthMismatch {
                got: values.len(),
                expected: rule.order(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(OperatorError::NonPositiveValue { index, value });
            }
        }
        Ok(Self { rule, values })
    }

    pub fn constant(rule: QuadratureRule, value: f64) -> Result<Self, OperatorError> {
        let n = rule.order();
        Self::new(rule, vec![value; n])
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, OperatorError> {
        Self::new(
            self.rule.clone(),
            self.values.iter().map(|v| factor * v).collect(),
        )
    }
}

/// Kernel values tabulated on (grid ∪ {0}) × grid × grid.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kernel: Kernel,
    rule: QuadratureRule,
    /// K(0, uⱼ, vₖ), row-major over (j,k).
    zero_row: Vec<f64>,
    /// K(tᵢ, uⱼ, vₖ) when cached, row-major over (i,j,k).
    grid: Option<Vec<f64>>,
}

impl KernelTable {
    pub fn new(kernel: Kernel, rule: QuadratureRule) -> Result<Self, OperatorError> {
        let n = rule.order();
        let mut zero_row = Vec::with_capacity(n * n);
        for &u in rule.nodes() {
            for &v in rule.nodes() {
                zero_row.push(kernel.eval(0.0, u, v)?);
            }
        }
        let grid = if n <= CACHE_ORDER_LIMIT {
            let mut grid = Vec::with_capacity(n * n * n);
            for &t in rule.nodes() {
                for &u in rule.nodes() {
                    for &v in rule.nodes() {
                        grid.push(kernel.eval(t, u, v)?);
                    }
                }
            }
            Some(grid)
        } else {
            None
        };
        Ok(Self { kernel, rule, zero_row, grid })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Kahan-summed Σⱼₖ wⱼwₖ K(t,·,·) fⱼfₖ for one output row.
    fn weighted_row_sum(
        &self,
        row: RowSelect,
        weighted: &[f64],
    ) -> Result<f64, OperatorError> {
        let n = self.rule.order();
        let mut acc = KahanSum::default();
        match row {
            RowSelect::Zero => {
                for j in 0..n {
                    let base = j * n;
                    for k in 0..n {
                        acc.add(self.zero_row[base + k] * weighted[j] * weighted[k]);
                    }
                }
            }
            RowSelect::Node(i) => {
                if let Some(grid) = &self.grid {
                    let plane = i * n * n;
                    for j in 0..n {
                        let base = plane + j * n;
                        for k in 0..n {
                            acc.add(grid[base + k] * weighted[j] * weighted[k]);
                        }
                    }
                } else {
                    let t = self.rule.nodes()[i];
                    for (j, &u) in self.rule.nodes().iter().enumerate() {
                        for (k, &v) in self.rule.nodes().iter().enumerate() {
                            acc.add(self.kernel.eval(t, u, v)? * weighted[j] * weighted[k]);
                        }
                    }
                }
            }
        }
        Ok(acc.value())
    }
}

enum RowSelect {
    Zero,
    Node(usize),
}

/// The image Lf on the grid together with its exact t = 0 evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LImage {
    pub grid: GridFunction,
    pub at_zero: f64,
}

/// (Lf)(tᵢ) over the grid plus (Lf)(0).
pub fn apply_l(table: &KernelTable, f: &GridFunction) -> Result<LImage, OperatorError> {
    let n = table.rule.order();
    if f.values.len() != n {
        return Err(OperatorError::LengthMismatch { got: f.values.len(), expected: n });
    }
    let weighted: Vec<f64> = table
        .rule
        .weights()
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * v)
        .collect();

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let value = table.weighted_row_sum(RowSelect::Node(i), &weighted)?;
        if !value.is_finite() {
            return Err(OperatorError::NonFiniteImage { index: i });
        }
        values.push(value);
    }
    let at_zero = table.weighted_row_sum(RowSelect::Zero, &weighted)?;
    if !at_zero.is_finite() {
        return Err(OperatorError::NonFiniteImage { index: 0 });
    }
    Ok(LImage {
        grid: GridFunction::new(table.rule.clone(), values)?,
        at_zero,
    })
}

/// (Hf)(tᵢ) = (Lf)(tᵢ)/(Lf)(0); the image evaluates to exactly 1 at
/// t = 0 by construction.
pub fn apply_h(table: &KernelTable, f: &GridFunction) -> Result<GridFunction, OperatorError> {
    let l = apply_l(table, f)?;
    normalize(l).map(|(g, _)| g)
}

fn normalize(l: LImage) -> Result<(GridFunction, f64), OperatorError> {
    if l.at_zero <= 0.0 || !l.at_zero.is_finite() {
        return Err(OperatorError::DegenerateNormalization(l.at_zero));
    }
    let rule = l.grid.rule.clone();
    let values = l.grid.values.iter().map(|v| v / l.at_zero).collect();
    Ok((GridFunction::new(rule, values)?, l.at_zero))
}

/// Result of one Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: GridFunction,
    pub iterations: usize,
    /// sup |H(solution) − solution|.
    pub residual_sup: f64,
    pub converged: bool,
    /// (L·solution)(0); the eigenvalue of L at an H-fixed point.
    pub eigenvalue_lambda: f64,
    /// sup |L·solution − λ·solution| (solution normalized to 1 at t=0).
    pub eigen_defect_sup: f64,
}

/// Picard iteration f ← Hf (optionally damped:
/// f ← (1−θ)f + θHf) until the sup-norm step falls below `tol`.
pub fn iterate_h(
    table: &KernelTable,
    f0: &GridFunction,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<SolveResult, OperatorError> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(OperatorError::BadTolerance(tol));
    }
    if damping <= 0.0 || damping > 1.0 || damping.is_nan() {
        return Err(OperatorError::BadDamping(damping));
    }

    let mut f = f0.clone();
    let mut iterations = 0;
    let mut stepped_below_tol = false;
    for it in 1..=max_iter {
        iterations = it;
        let (h, _) = normalize(apply_l(table, &f)?)?;
        let next = if damping == 1.0 {
            h
        } else {
            let values = f
                .values
                .iter()
                .zip(&h.values)
                .map(|(a, b)| (1.0 - damping) * a + damping * b)
                .collect();
            GridFunction::new(f.rule.clone(), values)?
        };
        let delta = next.sup_distance(&f);
        f = next;
        if delta <= tol {
            stepped_below_tol = true;
            break;
        }
    }

    // final diagnostics from one extra application
    let l = apply_l(table, &f)?;
    let (h, lambda) = normalize(l.clone())?;
    let residual_sup = h.sup_distance(&f);
    let eigen_defect_sup = l
        .grid
        .values
        .iter()
        .zip(&f.values)
        .map(|(lv, fv)| (lv - lambda * fv).abs())
        .fold(0.0, f64::max);
    Ok(SolveResult {
        solution: f,
        iterations,
        residual_sup,
        converged: stepped_below_tol && residual_sup <= tol,
        eigenvalue_lambda: lambda,
        eigen_defect_sup,
    })
}

/// Eigen-pair diagnostics for a candidate solution normalized to 1 at
/// t = 0: λ = (Lf)(0) and the sup defect of Lf = λf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenCheck {
    pub lambda: f64,
    pub defect_sup: f64,
}

pub fn eigen_check(table: &KernelTable, f: &GridFunction) -> Result<EigenCheck, OperatorError> {
    let l = apply_l(table, f)?;
    let lambda = l.at_zero;
    let defect_sup = l
        .grid
        .values
        .iter()
        .zip(&f.values)
        .map(|(lv, fv)| (lv - lambda * fv).abs())
        .fold(0.0, f64::max);
    Ok(EigenCheck { lambda, defect_sup })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultistartOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub cluster_eps: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOutcome {
    /// One representative per cluster, sorted by value at the first
    /// grid node.
    pub solutions: Vec<SolveResult>,
    pub attempted: usize,
    pub non_converged: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn start_rng(seed: u64, start_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(start_index)))
}

/// Deterministic multistart: `n_starts` log-uniform random starts in
/// [0.1, 10). For each provided seed function (typically the
/// analytic fixed points of a separable kernel) it also runs the function itself
/// and two small multiplicative perturbations of it. Converged runs are
/// clustered by sup-norm distance ≤ `cluster_eps`; non-convergent runs
/// are counted but excluded, so a repelling fixed point reads as
/// "not found" rather than "not present".
///
/// Runs execute in parallel; clustering is a sequential reduction in
/// start order, so the outcome does not depend on scheduling.
pub fn multistart_solve(
    table: &KernelTable,
    opts: &MultistartOptions,
    seed_functions: &[GridFunction],
) -> Result<MultistartOutcome, OperatorError> {
    assert!(opts.n_starts >= 1, "n_starts must be at least 1");
    let rule = table.rule();
    let n = rule.order();

    let mut starts: Vec<GridFunction> = Vec::new();
    for f in seed_functions {
        if f.values.len() != n {
            return Err(OperatorError::LengthMismatch { got: f.values.len(), expected: n });
        }
        starts.push(f.clone());
        for _ in 0..2 {
            let idx = starts.len() as u64;
            let mut rng = start_rng(opts.seed, idx);
            let values = f
                .values
                .iter()
                .map(|v| v * (1.0 + 1e-3 * (2.0 * rng.random::<f64>() - 1.0)))
                .collect();
            starts.push(GridFunction::new(rule.clone(), values)?);
        }
    }
    for _ in 0..opts.n_starts {
        let idx = starts.len() as u64;
        let mut rng = start_rng(opts.seed, idx);
        let values = (0..n)
            .map(|_| 10f64.powf(2.0 * rng.random::<f64>() - 1.0))
            .collect();
        starts.push(GridFunction::new(rule.clone(), values)?);
    }

    let attempted = starts.len();
    let runs: Vec<Result<SolveResult, OperatorError>> = starts
        .par_iter()
        .map(|f0| iterate_h(table, f0, opts.tol, opts.max_iter, opts.damping))
        .collect();

    let mut clusters: Vec<SolveResult> = Vec::new();
    let mut non_converged = 0;
    for run in runs {
        let result = run?;
        if !result.converged {
            non_converged += 1;
            continue;
        }
        let joins = clusters
            .iter()
            .any(|rep| rep.solution.sup_distance(&result.solution) <= opts.cluster_eps);
        if !joins {
            clusters.push(result);
        }
    }
    clusters.sort_by(|a, b| a.solution.values[0].total_cmp(&b.solution.values[0]));

    Ok(MultistartOutcome { solutions: clusters, attempted, non_converged })
}
