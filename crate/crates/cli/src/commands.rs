//! The four runs behind the CLI subcommands, usable as library calls.
//!
//! All reports echo the fully resolved configuration and serialize
//! deterministically: same config and seed, byte-identical output.

use crate::config::{build_kernel, kernel_for_sweep_value, RunConfig};
use crate::error::CliError;
use lyapgibbs::kernel::{DegenerateKernel, Kernel};
use lyapgibbs::operator::{
    eigen_check, multistart_solve, GridFunction, KernelTable, MultistartOptions,
    MultistartOutcome,
};
use lyapgibbs::quadrature::{gauss_legendre, QuadratureRule};
use lyapgibbs::reduction::{
    analyze, h_from_l, CubicRoot, HFixedPoint, ReductionOutcome, RECONSTRUCTION_TOL,
};
use rayon::prelude::*;
use serde::Serialize;

/// Sup-norm tolerance for declaring an analytic and an oracle solution
/// the same function.
pub const AGREEMENT_SUP_TOL: f64 = 1e-6;
/// Tolerance on sup |Lf − λf| for converged solutions.
pub const EIGEN_DEFECT_TOL: f64 = 1e-8;
/// Positivity probe resolution used by all commands.
pub const PROBE_COUNT: usize = 129;

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ComponentPositivityRow {
    pub component: String,
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub all_finite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityDiagnostics {
    pub probe_count: usize,
    pub components: Vec<ComponentPositivityRow>,
    /// min > 0 for every component at every probe.
    pub strictly_positive: bool,
    /// min ≥ 0 and not identically zero: the weakest hypothesis under
    /// which all six reduction coefficients stay strictly positive.
    pub admissible: bool,
}

/// Probes the components; rejects negative or non-finite ones, accepts
/// boundary zeros (they keep the coefficient integrals positive).
fn check_positivity(kernel: &DegenerateKernel) -> Result<PositivityDiagnostics, CliError> {
    let report = kernel.validate_positive(PROBE_COUNT);
    let diagnostics = PositivityDiagnostics {
        probe_count: PROBE_COUNT,
        components: report
            .probes
            .iter()
            .map(|p| ComponentPositivityRow {
                component: p.component.to_string(),
                min: p.min,
                argmin: p.argmin,
                max: p.max,
                all_finite: p.all_finite,
            })
            .collect(),
        strictly_positive: report.pass,
        admissible: report.admissible,
    };
    if !diagnostics.admissible {
        let bad = report
            .probes
            .iter()
            .find(|p| !p.all_finite || p.min < 0.0 || p.max <= 0.0)
            .expect("inadmissible report names a component");
        return Err(CliError::numeric(format!(
            "kernel component `{}` violates positivity: min {} at {} (finite: {})",
            bad.component, bad.min, bad.argmin, bad.all_finite
        )));
    }
    Ok(diagnostics)
}

fn degenerate_kernel(config: &RunConfig) -> Result<DegenerateKernel, CliError> {
    match build_kernel(&config.kernel, None)? {
        Kernel::Degenerate(k) => Ok(k),
        Kernel::General(_) => Err(CliError::config("classify requires a degenerate kernel")),
    }
}

fn rule_for(config: &RunConfig) -> Result<QuadratureRule, CliError> {
    Ok(gauss_legendre(config.numerics.quad_order)?)
}

fn multistart_options(config: &RunConfig) -> MultistartOptions {
    let n = &config.numerics;
    MultistartOptions {
        n_starts: n.n_starts,
        seed: n.seed,
        tol: n.tol,
        max_iter: n.max_iter,
        cluster_eps: n.cluster_eps,
        damping: n.damping,
    }
}

/// Analytic H-fixed points sampled on the grid, paired with their
/// normalized descriptions.
fn analytic_grid_solutions(
    kernel: &DegenerateKernel,
    outcome: &ReductionOutcome,
    rule: &QuadratureRule,
) -> Result<Vec<(HFixedPoint, GridFunction)>, CliError> {
    outcome
        .points
        .iter()
        .map(|entry| {
            let g = h_from_l(kernel, entry)?;
            let grid = GridFunction::new(rule.clone(), g.sample(kernel, rule)?)?;
            Ok((g, grid))
        })
        .collect()
}

/// Greedy sup-norm pairing of analytic and oracle solutions.
fn match_solutions(
    analytic: &[(HFixedPoint, GridFunction)],
    oracle: &MultistartOutcome,
) -> (Vec<MatchRow>, bool) {
    let mut rows = Vec::new();
    let mut used = vec![false; oracle.solutions.len()];
    let mut all_matched = true;
    for (i, (_, grid)) in analytic.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, s) in oracle.solutions.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = s.solution.sup_distance(grid);
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) => {
                used[j] = true;
                if d > AGREEMENT_SUP_TOL {
                    all_matched = false;
                }
                rows.push(MatchRow { analytic_index: i, oracle_index: j, sup_distance: d });
            }
            None => all_matched = false,
        }
    }
    let agreement = all_matched && analytic.len() == oracle.solutions.len();
    (rows, agreement)
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub config: RunConfig,
    pub positivity: PositivityDiagnostics,
    pub coefficients: lyapgibbs::reduction::QuadraticSystem,
    pub cubic: lyapgibbs::reduction::CubicPolynomial,
    pub classification: lyapgibbs::reduction::ClassificationReport,
    pub roots: Vec<CubicRoot>,
    pub plane_points: Vec<lyapgibbs::reduction::LFixedPoint>,
}

pub fn run_classify(config: &RunConfig) -> Result<ClassifyReport, CliError> {
    let kernel = degenerate_kernel(config)?;
    let positivity = check_positivity(&kernel)?;
    let rule = rule_for(config)?;
    let outcome = analyze(&kernel, &rule, config.numerics.tol)?;
    Ok(ClassifyReport {
        config: config.clone(),
        positivity,
        coefficients: outcome.system,
        cubic: outcome.cubic,
        classification: outcome.report,
        roots: outcome.roots,
        plane_points: outcome.points,
    })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticSolutionRow {
    pub lambda_ratio: f64,
    pub c1: f64,
    pub c2: f64,
    pub multiplicity: u8,
    pub f_at_zero: f64,
    /// Eigenvalue of the un-normalized operator at this solution, 1/f(0).
    pub eigenvalue: f64,
    /// g at the grid nodes.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSolutionRow {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual_sup: f64,
    pub eigenvalue_lambda: f64,
    pub eigen_defect_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchRow {
    pub analytic_index: usize,
    pub oracle_index: usize,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub config: RunConfig,
    pub kernel_kind: String,
    pub grid_nodes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<AnalyticSolutionRow>>,
    pub oracle: Vec<OracleSolutionRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<Vec<MatchRow>>,
    /// Both pipelines found the same solutions (degenerate kernels only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
    pub starts_attempted: usize,
    pub starts_non_converged: usize,
}

pub fn run_solve(config: &RunConfig) -> Result<SolveReport, CliError> {
    let kernel = build_kernel(&config.kernel, None)?;
    let rule = rule_for(config)?;
    let opts = multistart_options(config);

    match kernel {
        Kernel::Degenerate(kernel) => {
            check_positivity(&kernel)?;
            let outcome = analyze(&kernel, &rule, config.numerics.tol)?;
            let analytic = analytic_grid_solutions(&kernel, &outcome, &rule)?;
            let table = KernelTable::new(Kernel::Degenerate(kernel), rule.clone())?;
            let seeds: Vec<GridFunction> =
                analytic.iter().map(|(_, grid)| grid.clone()).collect();
            let oracle = multistart_solve(&table, &opts, &seeds)?;
            let (matching, agreement) = match_solutions(&analytic, &oracle);

            let analytic_rows = analytic
                .iter()
                .zip(&outcome.points)
                .map(|((g, grid), entry)| AnalyticSolutionRow {
                    lambda_ratio: entry.point.lambda,
                    c1: entry.point.c1,
                    c2: entry.point.c2,
                    multiplicity: entry.multiplicity,
                    f_at_zero: g.f_at_zero,
                    eigenvalue: g.eigenvalue(),
                    values: grid.values().to_vec(),
                })
                .collect();
            Ok(SolveReport {
                config: config.clone(),
                kernel_kind: "degenerate".into(),
                grid_nodes: rule.nodes().to_vec(),
                analytic: Some(analytic_rows),
                oracle: oracle_rows(&oracle),
                matching: Some(matching),
                agreement: Some(agreement),
                starts_attempted: oracle.attempted,
                starts_non_converged: oracle.non_converged,
            })
        }
        Kernel::General(kernel) => {
            let table = KernelTable::new(Kernel::General(kernel), rule.clone())?;
            let oracle = multistart_solve(&table, &opts, &[])?;
            Ok(SolveReport {
                config: config.clone(),
                kernel_kind: "general".into(),
                grid_nodes: rule.nodes().to_vec(),
                analytic: None,
                oracle: oracle_rows(&oracle),
                matching: None,
                agreement: None,
                starts_attempted: oracle.attempted,
                starts_non_converged: oracle.non_converged,
            })
        }
    }
}

fn oracle_rows(outcome: &MultistartOutcome) -> Vec<OracleSolutionRow> {
    outcome
        .solutions
        .iter()
        .map(|s| OracleSolutionRow {
            values: s.solution.values().to_vec(),
            iterations: s.iterations,
            residual_sup: s.residual_sup,
            eigenvalue_lambda: s.eigenvalue_lambda,
            eigen_defect_sup: s.eigen_defect_sup,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub case: Option<String>,
    pub predicted_count: Option<usize>,
    pub oracle_count: usize,
    pub roots: Vec<f64>,
    pub agreement: Option<bool>,
    /// Set on a row whose count differs from the previous row's.
    pub boundary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str =
    "parameter,case,predicted_count,oracle_count,root1,root2,root3,agreement,boundary";

impl SweepOutput {
    /// Deterministic CSV: fixed columns, shortest round-trip floats,
    /// LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let mut roots = [String::new(), String::new(), String::new()];
            for (slot, root) in roots.iter_mut().zip(&row.roots) {
                *slot = format!("{root}");
            }
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.parameter,
                row.case.as_deref().unwrap_or(""),
                row.predicted_count.map(|c| c.to_string()).unwrap_or_default(),
                row.oracle_count,
                roots[0],
                roots[1],
                roots[2],
                row.agreement.map(|a| a.to_string()).unwrap_or_default(),
                if row.boundary { "transition" } else { "" },
            ));
        }
        out
    }
}

pub fn run_sweep(config: &RunConfig) -> Result<SweepOutput, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("sweep: section required for the sweep command"))?;

    let steps = sweep.steps;
    let values: Vec<f64> = (0..steps)
        .map(|i| sweep.from + (sweep.to - sweep.from) * i as f64 / (steps - 1) as f64)
        .collect();

    let rule = rule_for(config)?;
    let opts = multistart_options(config);
    let tol = config.numerics.tol;

    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| -> Result<SweepRow, CliError> {
            let kernel = kernel_for_sweep_value(&config.kernel, &sweep.parameter, value)?;
            match kernel {
                Kernel::Degenerate(kernel) => {
                    check_positivity(&kernel)?;
                    let outcome = analyze(&kernel, &rule, tol)?;
                    let analytic = analytic_grid_solutions(&kernel, &outcome, &rule)?;
                    let table =
                        KernelTable::new(Kernel::Degenerate(kernel), rule.clone())?;
                    let seeds: Vec<GridFunction> =
                        analytic.iter().map(|(_, grid)| grid.clone()).collect();
                    let oracle = multistart_solve(&table, &opts, &seeds)?;
                    let predicted = outcome.report.predicted_count;
                    Ok(SweepRow {
                        parameter: value,
                        case: Some(outcome.report.matched_case.to_string()),
                        predicted_count: Some(predicted),
                        oracle_count: oracle.solutions.len(),
                        roots: outcome.roots.iter().map(|r| r.value).collect(),
                        agreement: Some(predicted == oracle.solutions.len()),
                        boundary: false,
                    })
                }
                Kernel::General(kernel) => {
                    let table = KernelTable::new(Kernel::General(kernel), rule.clone())?;
                    let oracle = multistart_solve(&table, &opts, &[])?;
                    Ok(SweepRow {
                        parameter: value,
                        case: None,
                        predicted_count: None,
                        oracle_count: oracle.solutions.len(),
                        roots: Vec::new(),
                        agreement: None,
                        boundary: false,
                    })
                }
            }
        })
        .collect::<Result<_, _>>()?;

    // flag count transitions between consecutive rows
    let counts: Vec<usize> = rows
        .iter()
        .map(|r| r.predicted_count.unwrap_or(r.oracle_count))
        .collect();
    for i in 1..rows.len() {
        if counts[i] != counts[i - 1] {
            rows[i].boundary = true;
        }
    }

    Ok(SweepOutput { config: config.clone(), rows })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Everything the invariant audit inspects, exposed so tests can corrupt
/// intermediate artifacts and watch the audit catch it.
pub struct VerifyArtifacts {
    pub config: RunConfig,
    pub kernel: DegenerateKernel,
    pub rule: QuadratureRule,
    pub table: KernelTable,
    pub outcome: ReductionOutcome,
    pub analytic: Vec<(HFixedPoint, GridFunction)>,
    pub oracle: MultistartOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: RunConfig,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&format!(
                "{} {}: {}\n",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.detail
            ));
        }
        out.push_str(&format!(
            "verify: {}\n",
            if self.passed { "all checks passed" } else { "FAILED" }
        ));
        out
    }
}

pub fn gather_verify_artifacts(config: &RunConfig) -> Result<VerifyArtifacts, CliError> {
    let kernel = degenerate_kernel(config)?;
    check_positivity(&kernel)?;
    let rule = rule_for(config)?;
    let outcome = analyze(&kernel, &rule, config.numerics.tol)?;
    let analytic = analytic_grid_solutions(&kernel, &outcome, &rule)?;
    let table = KernelTable::new(Kernel::Degenerate(kernel.clone()), rule.clone())?;
    let seeds: Vec<GridFunction> = analytic.iter().map(|(_, g)| g.clone()).collect();
    let oracle = multistart_solve(&table, &multistart_options(config), &seeds)?;
    Ok(VerifyArtifacts { config: config.clone(), kernel, rule, table, outcome, analytic, oracle })
}

/// Pure audit over gathered artifacts; one pass/fail row per invariant.
pub fn audit(artifacts: &VerifyArtifacts) -> VerifyReport {
    let mut checks = Vec::new();

    // 1. coefficient positivity
    {
        let qs = &artifacts.outcome.system;
        let values = [qs.a11, qs.a12, qs.a22, qs.b11, qs.b12, qs.b22];
        let passed = values.iter().all(|v| v.is_finite() && *v > 0.0);
        checks.push(CheckRow {
            name: "coefficient positivity".into(),
            passed,
            detail: format!(
                "A = ({}, {}, {}), B = ({}, {}, {})",
                qs.a11, qs.a12, qs.a22, qs.b11, qs.b12, qs.b22
            ),
        });
    }

    // 2. case/count consistency
    {
        let predicted = artifacts.outcome.report.predicted_count;
        let found = artifacts.outcome.points.len();
        checks.push(CheckRow {
            name: "case/count consistency".into(),
            passed: predicted == found,
            detail: format!(
                "case {} predicts {predicted}, root search returned {found}",
                artifacts.outcome.report.matched_case
            ),
        });
    }

    // 3. reconstruction defects, recomputed from the coefficient system
    {
        let qs = &artifacts.outcome.system;
        let mut worst: f64 = 0.0;
        let mut passed = true;
        for entry in &artifacts.outcome.points {
            let p = &entry.point;
            let d1 = (qs.form_a(p.c1, p.c2) - p.c1).abs();
            let d2 = (qs.form_b(p.c1, p.c2) - p.c2).abs();
            let defect = d1.max(d2);
            let tol = RECONSTRUCTION_TOL * (1.0 + p.c1.abs() + p.c2.abs());
            worst = worst.max(defect);
            if defect > tol {
                passed = false;
            }
        }
        checks.push(CheckRow {
            name: "reconstruction defect".into(),
            passed,
            detail: format!("worst plane-map defect {worst:e}"),
        });
    }

    // 4. oracle agreement
    {
        let (matching, agreement) = match_solutions(&artifacts.analytic, &artifacts.oracle);
        let worst = matching
            .iter()
            .map(|m| m.sup_distance)
            .fold(0.0, f64::max);
        checks.push(CheckRow {
            name: "oracle agreement".into(),
            passed: agreement,
            detail: format!(
                "{} analytic vs {} oracle solutions, worst sup distance {worst:e}",
                artifacts.analytic.len(),
                artifacts.oracle.solutions.len()
            ),
        });
    }

    // 5. eigen defects
    {
        let mut worst: f64 = 0.0;
        let mut passed = true;
        for s in &artifacts.oracle.solutions {
            worst = worst.max(s.eigen_defect_sup);
        }
        for (_, grid) in &artifacts.analytic {
            match eigen_check(&artifacts.table, grid) {
                Ok(check) => worst = worst.max(check.defect_sup),
                Err(_) => passed = false,
            }
        }
        if worst > EIGEN_DEFECT_TOL {
            passed = false;
        }
        checks.push(CheckRow {
            name: "eigen defect".into(),
            passed,
            detail: format!("worst sup |Lf − λf| = {worst:e}"),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { config: artifacts.config.clone(), checks, passed }
}

pub fn run_verify(config: &RunConfig) -> Result<VerifyReport, CliError> {
    let artifacts = gather_verify_artifacts(config)?;
    Ok(audit(&artifacts))
}

/// Pretty JSON with a trailing newline; stable field order, shortest
/// round-trip float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}
