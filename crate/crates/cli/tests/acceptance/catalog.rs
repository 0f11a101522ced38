//! The cross-validation catalog: separable kernels of different flavors
//! (constant, polynomial, rational, exponential, trigonometric, mixed)
//! with ground truth computed independently at 50-digit precision
//! (adaptive quadrature for the coefficient integrals, polynomial root
//! extraction for the cubic) and frozen here.

use lyapgibbs::expr::ExpressionAst;
use lyapgibbs::kernel::{DegenerateKernel, Kernel};
use lyapgibbs::operator::{
    multistart_solve, GridFunction, KernelTable, MultistartOptions, MultistartOutcome,
};
use lyapgibbs::quadrature::{gauss_legendre, QuadratureRule};
use lyapgibbs::reduction::{analyze, h_from_l, CubicCase, ReductionOutcome};
use once_cell::sync::Lazy;

pub struct CatalogKernel {
    pub name: &'static str,
    /// psi1, psi2, phi1, phi2 in the expression mini-language.
    pub components: [&'static str; 4],
    pub expected_case: CubicCase,
    pub expected_mu: [f64; 4],
    pub expected_roots: &'static [f64],
    /// (c1, c2) per root.
    pub expected_points: &'static [(f64, f64)],
    /// Eigenvalue 1/f(0) per root.
    pub expected_eigenvalues: &'static [f64],
}

pub const CATALOG: &[CatalogKernel] = &[
    CatalogKernel {
        name: "ones",
        components: ["1", "1", "1", "1"],
        expected_case: CubicCase::T41iii,
        expected_mu: [1.0, 1.0, -1.0, 1.0],
        expected_roots: &[1.0],
        expected_points: &[(0.25, 0.25)],
        expected_eigenvalues: &[2.0],
    },
    CatalogKernel {
        name: "affine-ramp",
        components: ["1", "t", "1", "v"],
        expected_case: CubicCase::T41iii,
        expected_mu: [0.5, -0.41666666666666667, -0.83333333333333333, 0.25],
        expected_roots: &[1.8685170918213298],
        expected_points: &[(0.62235918515234262, 0.33307652783935759)],
        expected_eigenvalues: &[1.606789172325331],
    },
    CatalogKernel {
        name: "heavy-second-slot",
        components: ["1", "1+0.05*t", "0.1", "3+v"],
        expected_case: CubicCase::T41ii,
        expected_mu: [3.5, 7.0791666666666667, 3.4764583333333333, 0.1050625],
        expected_roots: &[0.028539179923402973],
        expected_points: &[(0.0073380657131233162, 0.25712251483112467)],
        expected_eigenvalues: &[3.7812818755144716],
    },
    CatalogKernel {
        name: "exponential",
        components: ["exp(t)", "1", "1", "exp(v)"],
        expected_case: CubicCase::T41iii,
        expected_mu: [
            5.4890994978989861,
            3.1945280494653251,
            -1.7182818284590452,
            1.0,
        ],
        expected_roots: &[0.55949556343132097],
        expected_points: &[(0.081371771017745239, 0.14543774130879907)],
        expected_eigenvalues: &[4.4089861564548081],
    },
    CatalogKernel {
        name: "decaying-exponential",
        components: ["1", "exp(-t)", "0.2", "2+2*v"],
        expected_case: CubicCase::T41ii,
        expected_mu: [
            3.0,
            3.4890850294570191,
            0.88036906417382986,
            0.07991528017874561,
        ],
        expected_roots: &[0.07011598052108298],
        expected_points: &[(0.049846788282260892, 0.7109190788150299)],
        expected_eigenvalues: &[1.3144648613317909],
    },
    CatalogKernel {
        name: "trigonometric",
        components: ["2+sin(3*t)", "1", "1+u^2", "1.5-v^3"],
        expected_case: CubicCase::T41iii,
        expected_mu: [
            8.9179246924821421,
            -2.7611324165812019,
            -5.8450559241915436,
            1.3333333333333333,
        ],
        expected_roots: &[1.0605501750793396],
        expected_points: &[(0.057756348106563328, 0.054458854907305619)],
        expected_eigenvalues: &[5.8833374962346275],
    },
    CatalogKernel {
        name: "mixed",
        components: ["1", "0.5+t^2", "1+0.2*sin(3*u)", "2+v"],
        expected_case: CubicCase::T41iii,
        expected_mu: [
            2.5,
            3.1173338335599703,
            -0.080789462842723459,
            0.78538045530410078,
        ],
        expected_roots: &[0.44108021291743411],
        expected_points: &[(0.10586282894139827, 0.24000811154322797)],
        expected_eigenvalues: &[4.4273865169327752],
    },
];

pub fn build(entry: &CatalogKernel) -> DegenerateKernel {
    let [psi1, psi2, phi1, phi2] = entry.components;
    DegenerateKernel::build(
        ExpressionAst::parse(psi1).unwrap(),
        ExpressionAst::parse(psi2).unwrap(),
        ExpressionAst::parse(phi1).unwrap(),
        ExpressionAst::parse(phi2).unwrap(),
    )
    .unwrap()
}

pub fn config_json(entry: &CatalogKernel, numerics: &str) -> String {
    let [psi1, psi2, phi1, phi2] = entry.components;
    format!(
        r#"{{"kernel": {{"degenerate": {{"psi1": "{psi1}", "psi2": "{psi2}",
             "phi1": "{phi1}", "phi2": "{phi2}"}}}}, "numerics": {numerics}}}"#
    )
}

pub const ACCEPTANCE_ORDER: usize = 64;
pub const ACCEPTANCE_TOL: f64 = 1e-10;
pub const ACCEPTANCE_N_STARTS: usize = 32;

/// Shared per-kernel computation at the acceptance settings (order 64,
/// 32 random starts plus analytic-seeded starts, seed 0), reused across
/// the criteria so the catalog is solved once.
pub struct CatalogRun {
    pub entry: &'static CatalogKernel,
    pub kernel: DegenerateKernel,
    pub outcome: ReductionOutcome,
    /// Analytic H-fixed points sampled on the grid, one per plane point.
    pub analytic: Vec<GridFunction>,
    pub eigenvalues: Vec<f64>,
    pub oracle: MultistartOutcome,
}

pub static RULE: Lazy<QuadratureRule> =
    Lazy::new(|| gauss_legendre(ACCEPTANCE_ORDER).unwrap());

pub static RUNS: Lazy<Vec<CatalogRun>> = Lazy::new(|| {
    CATALOG
        .iter()
        .map(|entry| {
            let kernel = build(entry);
            let outcome = analyze(&kernel, &RULE, ACCEPTANCE_TOL).unwrap();
            let mut analytic = Vec::new();
            let mut eigenvalues = Vec::new();
            for entry in &outcome.points {
                let g = h_from_l(&kernel, entry).unwrap();
                analytic.push(
                    GridFunction::new(RULE.clone(), g.sample(&kernel, &RULE).unwrap()).unwrap(),
                );
                eigenvalues.push(g.eigenvalue());
            }
            let table =
                KernelTable::new(Kernel::Degenerate(kernel.clone()), RULE.clone()).unwrap();
            let opts = MultistartOptions {
                n_starts: ACCEPTANCE_N_STARTS,
                seed: 0,
                tol: ACCEPTANCE_TOL,
                max_iter: 20_000,
                cluster_eps: 1e-4,
                damping: 1.0,
            };
            let oracle = multistart_solve(&table, &opts, &analytic).unwrap();
            CatalogRun { entry, kernel, outcome, analytic, eigenvalues, oracle }
        })
        .collect()
});
