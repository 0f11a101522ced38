//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`) or failing with the full analysis.
//!
//! Run with `cargo test -p lyapgibbs-cli --test acceptance`.
//!
//! Criteria 2 and 7 contain sub-requirements that are mathematically
//! unattainable for this operator family; those tests state the proof in
//! their failure message rather than weakening the assertion. See the
//! README section "Known acceptance results" for the structural
//! identity behind this.

// frozen reference constants keep the full digits of the 50-digit runs
#![allow(clippy::excessive_precision)]

mod catalog;

use catalog::{build, config_json, CATALOG, RULE, RUNS};
use lyapgibbs::quadrature::gauss_legendre;
use lyapgibbs::reduction::{
    classify, compute_coefficients, positive_roots, CubicCase, CubicPolynomial,
};
use lyapgibbs_cli::commands::{run_classify, run_solve, run_sweep, run_verify, to_json};
use lyapgibbs_cli::config::RunConfig;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(criterion: usize, detail: &str) {
    println!("ACCEPTANCE criterion {criterion}: PASS: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Constant-kernel ground truth
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_constant_kernel_ground_truth() {
    let run = &RUNS[0];
    assert_eq!(run.entry.name, "ones");

    // coefficients (1,2,1,1,2,1); "exact for constants" up to the
    // 1e-14 weight-sum invariant of the quadrature rule
    let qs = &run.outcome.system;
    for (got, expected) in [
        (qs.a11, 1.0),
        (qs.a12, 2.0),
        (qs.a22, 1.0),
        (qs.b11, 1.0),
        (qs.b12, 2.0),
        (qs.b22, 1.0),
    ] {
        assert!((got - expected).abs() <= 1e-14, "coefficient {got} vs {expected}");
    }

    // cubic factors as (ξ−1)(ξ+1)²
    let c = &run.outcome.cubic;
    for (got, expected) in [(c.mu0, 1.0), (c.mu1, 1.0), (c.mu2, -1.0), (c.mu3, 1.0)] {
        assert!((got - expected).abs() <= 1e-14);
    }
    assert_eq!(run.outcome.roots.len(), 1);
    assert!((run.outcome.roots[0].value - 1.0).abs() <= 1e-12);
    assert_eq!(run.outcome.report.matched_case, CubicCase::T41iii);

    // L-fixed point f ≡ 1/2
    let p = &run.outcome.points[0].point;
    assert!((p.c1 - 0.25).abs() <= 1e-13 && (p.c2 - 0.25).abs() <= 1e-13);
    for &t in RULE.nodes() {
        let f = run.kernel.linear_combination(p.c1, p.c2, t).unwrap();
        assert!((f - 0.5).abs() <= 1e-13);
    }

    // H-fixed point f ≡ 1, oracle-matched in sup norm ≤ 1e-10
    assert!(run.analytic[0].values().iter().all(|v| (v - 1.0).abs() <= 1e-13));
    assert_eq!(run.oracle.solutions.len(), 1);
    let sup = run.oracle.solutions[0].solution.sup_distance(&run.analytic[0]);
    assert!(sup <= 1e-10, "oracle/analytic sup distance {sup}");

    pass(1, &format!("coefficients, cubic, case, both fixed points; oracle sup {sup:.2e}"));
}

// ---------------------------------------------------------------------------
// 2. Catalog agreement across the case spectrum
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_catalog_agreement() {
    assert!(CATALOG.len() >= 6, "catalog must hold at least 6 kernels");

    // Cross-validation core: for every catalog kernel the analytic root
    // count equals the oracle's distinct-cluster count and the solutions
    // coincide in sup norm at the acceptance tolerances.
    for run in RUNS.iter() {
        assert_eq!(
            run.outcome.report.matched_case, run.entry.expected_case,
            "{}: unexpected case",
            run.entry.name
        );
        assert_eq!(
            run.oracle.solutions.len(),
            run.outcome.points.len(),
            "{}: oracle cluster count vs analytic count",
            run.entry.name
        );
        for grid in &run.analytic {
            let best = run
                .oracle
                .solutions
                .iter()
                .map(|s| s.solution.sup_distance(grid))
                .fold(f64::INFINITY, f64::min);
            assert!(
                best <= 1e-6,
                "{}: analytic solution unmatched, best sup distance {best}",
                run.entry.name
            );
        }
        // frozen independent ground truth
        let mu = [
            run.outcome.cubic.mu0,
            run.outcome.cubic.mu1,
            run.outcome.cubic.mu2,
            run.outcome.cubic.mu3,
        ];
        for (got, expected) in mu.iter().zip(&run.entry.expected_mu) {
            assert!(
                (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "{}: cubic coefficient {got} vs {expected}",
                run.entry.name
            );
        }
        for (root, expected) in run.outcome.roots.iter().zip(run.entry.expected_roots) {
            assert!((root.value - expected).abs() <= 1e-11 * expected.max(1.0));
        }
        for (point, (c1, c2)) in run.outcome.points.iter().zip(run.entry.expected_points) {
            assert!((point.point.c1 - c1).abs() <= 1e-11);
            assert!((point.point.c2 - c2).abs() <= 1e-11);
        }
        for (got, expected) in run.eigenvalues.iter().zip(run.entry.expected_eigenvalues) {
            assert!((got - expected).abs() <= 1e-10 * expected);
        }
    }

    let covered: std::collections::BTreeSet<String> =
        RUNS.iter().map(|r| r.outcome.report.matched_case.to_string()).collect();
    println!(
        "criterion 2 core: {} kernels, all analytic/oracle counts and solutions agree; \
         cases covered: {covered:?}",
        CATALOG.len()
    );

    // Required spanning set. Everything outside {T41-ii, T41-iii} is
    // unreachable from an actual kernel: writing S1 = ∫ψ1 > 0,
    // S2 = ∫ψ2 > 0, both quadratic forms factor through the linear
    // functional Y(c1,c2) = S1·c1 + S2·c2 (because
    // ∬φ(u)f(u)f(v) du dv = (∫φf)(∫f)), which forces
    // P3(−S2/S1) = 0 identically. One root of the cubic is therefore
    // always −S2/S1 < 0, and since the root product is μ3/μ0 > 0, the
    // remaining two roots multiply to a negative number: exactly one
    // positive root, always, with D > 0 and crit_alpha < 0. The
    // double-root (T42), three-root, and T41-i/iv/v
    // sign patterns exist only for abstract coefficient systems
    // (criterion 5 exercises them there).
    let required = ["T41-i", "T41-iii", "T41-iv", "T41-v", "T42-ii", "FALLBACK-3ROOTS"];
    let missing: Vec<&str> = required
        .iter()
        .filter(|case| !covered.contains(**case))
        .copied()
        .collect();
    assert!(
        missing.is_empty(),
        "ACCEPTANCE criterion 2: FAIL: catalog cannot span {missing:?}: every \
         admissible separable kernel satisfies P3(−∫ψ2/∫ψ1) = 0 identically, so its \
         cubic has exactly one positive root and classifies as T41-ii or T41-iii; \
         the remaining cases are provably kernel-unrealizable (see test source for \
         the two-line proof). The cross-validation core of this criterion passed on \
         all {} kernels.",
        CATALOG.len()
    );
    pass(2, "catalog agreement and case coverage");
}

// ---------------------------------------------------------------------------
// 3. Eigen correspondence
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_eigen_correspondence() {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for run in RUNS.iter() {
        for solution in &run.oracle.solutions {
            assert!(solution.converged);
            worst = worst.max(solution.eigen_defect_sup);
            checked += 1;
            assert!(
                solution.eigen_defect_sup <= 1e-8,
                "{}: eigen defect {}",
                run.entry.name,
                solution.eigen_defect_sup
            );
        }
    }
    assert!(checked >= CATALOG.len());
    pass(3, &format!("{checked} solutions, worst sup |Lf − λf| = {worst:.2e}"));
}

// ---------------------------------------------------------------------------
// 4. Quadrature gate
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_quadrature_gate() {
    let rule32 = gauss_legendre(32).unwrap();
    let mut worst: f64 = 0.0;
    for entry in CATALOG {
        let kernel = build(entry);
        let coarse = compute_coefficients(&kernel, &rule32).unwrap();
        let fine = compute_coefficients(&kernel, &RULE).unwrap();
        for (a, b) in [
            (coarse.a11, fine.a11),
            (coarse.a12, fine.a12),
            (coarse.a22, fine.a22),
            (coarse.b11, fine.b11),
            (coarse.b12, fine.b12),
            (coarse.b22, fine.b22),
        ] {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            assert!(diff <= 1e-12, "{}: order 32 vs 64 coefficient gap {diff}", entry.name);
        }
    }
    pass(4, &format!("all six coefficients stable across orders; worst gap {worst:.2e}"));
}

// ---------------------------------------------------------------------------
// 5. Cubic solver stress
// ---------------------------------------------------------------------------

/// Closed-form real roots of μ0x³ + μ1x² + μ2x − μ3 (Cardano/trig),
/// the independent route the bracketing solver is checked against.
fn closed_form_real_roots(mu: [f64; 4]) -> Vec<f64> {
    let a = mu[1] / mu[0];
    let b = mu[2] / mu[0];
    let c = -mu[3] / mu[0];
    let shift = -a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-0.5 * q + s).cbrt() + (-0.5 * q - s).cbrt() + shift]
    } else if disc == 0.0 {
        let t = (-0.5 * q).cbrt();
        vec![2.0 * t + shift, -t + shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    }
}

fn count_positive_distinct(roots: &[f64]) -> usize {
    let mut positive: Vec<f64> = roots.iter().copied().filter(|r| *r > 0.0).collect();
    positive.sort_by(f64::total_cmp);
    positive.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * a.abs().max(1.0));
    positive.len()
}

#[test]
fn criterion_5_cubic_solver_stress() {
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let mut tested = 0;
    let mut skipped_boundary = 0;
    for _ in 0..1000 {
        let mu0 = 10f64.powf(2.0 * rng.random::<f64>() - 1.0);
        let mu3 = 10f64.powf(2.0 * rng.random::<f64>() - 1.0);
        let mu1 = 20.0 * rng.random::<f64>() - 10.0;
        let mu2 = 20.0 * rng.random::<f64>() - 10.0;
        let cubic = CubicPolynomial { mu0, mu1, mu2, mu3 };
        let scale = cubic.scale();

        let roots = positive_roots(&cubic, 1e-10);
        assert!(!roots.is_empty(), "sign change guarantees a positive root");
        for root in &roots {
            let residual = cubic.eval(root.value).abs();
            assert!(
                residual <= 1e-10 * scale,
                "|P3(root)| = {residual} above 1e-10·{scale} for mu = {mu0},{mu1},{mu2},{mu3}"
            );
        }

        // boundary band: near-zero critical values or near-degenerate D
        // have no stable sign-pattern count; the criterion exempts them
        let d_scale = mu1 * mu1 + 3.0 * (mu0 * mu2).abs();
        let boundary = match cubic.critical_points() {
            Some((ca, cb)) => {
                cubic.eval(ca).abs() <= 1e-8 * scale
                    || cubic.eval(cb).abs() <= 1e-8 * scale
                    || cubic.critical_discriminant().abs() <= 1e-9 * d_scale
            }
            None => cubic.critical_discriminant().abs() <= 1e-9 * d_scale,
        };
        if boundary {
            skipped_boundary += 1;
            continue;
        }

        let report = classify(&cubic);
        let independent = count_positive_distinct(&closed_form_real_roots([mu0, mu1, mu2, mu3]));
        assert_eq!(
            report.predicted_count, independent,
            "classifier count vs closed-form count for mu = {mu0},{mu1},{mu2},{mu3}"
        );
        assert_eq!(roots.len(), independent);
        tested += 1;
    }
    assert!(tested >= 900, "boundary exemption should be rare, tested {tested}");

    // constructed double-root boundaries: classified T42 with a flagged
    // double root at a critical point
    let mut t42_checked = 0;
    for _ in 0..50 {
        let small = 0.1 + 1.9 * rng.random::<f64>();
        let big = small * (1.5 + 2.5 * rng.random::<f64>());
        let mu0 = 0.5 + 1.5 * rng.random::<f64>();

        // double root above: μ0(λ−a)(λ−b)²
        let c_min = CubicPolynomial {
            mu0,
            mu1: -mu0 * (small + 2.0 * big),
            mu2: mu0 * big * (big + 2.0 * small),
            mu3: mu0 * small * big * big,
        };
        // double root below: μ0(λ−a)²(λ−b)
        let c_max = CubicPolynomial {
            mu0,
            mu1: -mu0 * (2.0 * small + big),
            mu2: mu0 * small * (small + 2.0 * big),
            mu3: mu0 * small * small * big,
        };
        for (cubic, expected_case, double_at) in [
            (c_min, CubicCase::T42ii, big),
            (c_max, CubicCase::T42i, small),
        ] {
            let (ca, cb) = cubic.critical_points().unwrap();
            let crit_value = cubic.eval(ca).abs().min(cubic.eval(cb).abs());
            assert!(
                crit_value <= 1e-12 * cubic.scale(),
                "construction quality |P3(crit)| = {crit_value}"
            );
            let report = classify(&cubic);
            assert_eq!(report.matched_case, expected_case);
            assert_eq!(report.predicted_count, 2);
            let roots = positive_roots(&cubic, 1e-10);
            assert_eq!(roots.len(), 2);
            let double = roots.iter().find(|r| r.multiplicity == 2).expect("flagged double");
            assert!((double.value - double_at).abs() <= 1e-6 * double_at.max(1.0));
            // the double root coincides with a critical point
            let crit = if expected_case == CubicCase::T42ii { cb } else { ca };
            assert!((double.value - crit).abs() <= 1e-6 * crit.abs().max(1.0));
            t42_checked += 1;
        }
    }
    pass(
        5,
        &format!(
            "{tested} random cubics ({skipped_boundary} boundary-exempt), \
             {t42_checked} constructed double-root instances"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Derived instance
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_derived_instance() {
    let run = RUNS.iter().find(|r| r.entry.name == "affine-ramp").unwrap();

    // exact rational check: 12·μ = (6, −5, −10, 3)
    let c = &run.outcome.cubic;
    for (got, expected) in [
        (12.0 * c.mu0, 6.0),
        (12.0 * c.mu1, -5.0),
        (12.0 * c.mu2, -10.0),
        (12.0 * c.mu3, 3.0),
    ] {
        assert!((got - expected).abs() <= 1e-12, "12·mu {got} vs {expected}");
        assert_eq!(got.round(), expected);
    }

    // sign change of the exact integer cubic brackets the root
    let integer = CubicPolynomial { mu0: 6.0, mu1: -5.0, mu2: -10.0, mu3: 3.0 };
    assert!(integer.eval(1.8) < 0.0 && integer.eval(1.9) > 0.0);
    let root = run.outcome.roots[0].value;
    assert!(root > 1.8 && root < 1.9, "root {root}");

    // reconstructed fixed point is oracle-confirmed
    assert_eq!(run.oracle.solutions.len(), 1);
    let sup = run.oracle.solutions[0].solution.sup_distance(&run.analytic[0]);
    assert!(sup <= 1e-6);
    pass(6, &format!("integer cubic exact, root {root:.12} in (1.8, 1.9), oracle sup {sup:.2e}"));
}

// ---------------------------------------------------------------------------
// 7. Sweep boundary detection
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_sweep_boundary_detection() {
    // the one-parameter family ψ2 = θ + t crosses its only reachable
    // boundary (the T41-iii / T41-ii case change) at θ = 10/3
    let config = RunConfig::from_json(
        r#"{"kernel": {"degenerate": {"psi1": "1", "psi2": "$theta + t", "phi1": "1", "phi2": "v"}},
            "numerics": {"quad_order": 48, "n_starts": 6, "max_iter": 20000},
            "sweep": {"parameter": "$theta", "from": 3.0, "to": 3.7, "steps": 8}}"#,
    )
    .unwrap();
    let output = run_sweep(&config).unwrap();
    assert_eq!(output.rows.len(), 8);
    assert!(output.rows.iter().all(|r| r.agreement == Some(true)));
    let cases: Vec<&str> = output.rows.iter().map(|r| r.case.as_deref().unwrap()).collect();
    let case_transition = cases.windows(2).any(|w| w[0] != w[1]);
    assert!(case_transition, "family must cross the case boundary at θ = 10/3");
    println!(
        "criterion 7 machinery: sweep ran, case column {cases:?}, \
         all rows agree with the oracle"
    );

    let csv = output.to_csv();
    let count_transition = output
        .rows
        .windows(2)
        .any(|w| w[0].predicted_count != w[1].predicted_count);
    assert!(
        count_transition,
        "ACCEPTANCE criterion 7: FAIL: no separable-kernel family can produce a \
         fixed-point-count transition: P3(−∫ψ2/∫ψ1) = 0 holds identically for every \
         admissible kernel (both plane quadratic forms share the linear factor ∫f), \
         so exactly one positive root exists at every parameter value and the \
         double-root (T42) boundary the criterion asks to cross is unreachable; the \
         count column is constantly 1 and no row can be flagged. The sweep \
         machinery itself works (case transition detected, per-row oracle \
         agreement); count transitions do occur for non-separable kernels, where a \
         cooling sweep splits one oracle cluster into a symmetry-broken pair.\n\
         CSV produced:\n{csv}"
    );
    pass(7, "sweep count transition with double root at a critical point");
}

// ---------------------------------------------------------------------------
// 8. Operator laws
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_operator_laws() {
    use lyapgibbs::kernel::Kernel;
    use lyapgibbs::operator::{apply_h, apply_l, GridFunction, KernelTable};
    use proptest::test_runner::{Config, TestRunner};

    let order = 32;
    let rule = gauss_legendre(order).unwrap();
    let kernel = build(&CATALOG[1]);
    let table = KernelTable::new(Kernel::Degenerate(kernel), rule.clone()).unwrap();

    let strategy = (proptest::collection::vec(0.2f64..5.0, order), 0.1f64..10.0);

    let mut runner = TestRunner::new(Config { cases: 128, ..Config::default() });
    runner
        .run(&strategy.clone(), |(values, c)| {
            let f = GridFunction::new(rule.clone(), values).unwrap();
            let lf = apply_l(&table, &f).unwrap();
            let lcf = apply_l(&table, &f.scaled(c).unwrap()).unwrap();
            for (a, b) in lf.grid.values().iter().zip(lcf.grid.values()) {
                proptest::prop_assert!((c * c * a - b).abs() <= 1e-13 * b.abs());
            }
            proptest::prop_assert!(
                (c * c * lf.at_zero - lcf.at_zero).abs() <= 1e-13 * lcf.at_zero
            );
            Ok(())
        })
        .expect("homogeneity apply_L(c·f) = c²·apply_L(f) within 1e-13 relative");

    let mut runner = TestRunner::new(Config { cases: 128, ..Config::default() });
    runner
        .run(&strategy, |(values, c)| {
            let f = GridFunction::new(rule.clone(), values).unwrap();
            let h = apply_h(&table, &f).unwrap();
            let hc = apply_h(&table, &f.scaled(c).unwrap()).unwrap();
            for (a, b) in h.values().iter().zip(hc.values()) {
                proptest::prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
            }
            Ok(())
        })
        .expect("H scale invariance within 1e-13");

    pass(8, "homogeneity and H scale invariance over 2×128 random grid functions");
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_determinism() {
    // classify over the whole catalog
    let classify_bytes = || -> Vec<u8> {
        let mut out = Vec::new();
        for entry in CATALOG {
            let config =
                RunConfig::from_json(&config_json(entry, r#"{"quad_order": 64}"#)).unwrap();
            out.extend(to_json(&run_classify(&config).unwrap()).unwrap().into_bytes());
        }
        out
    };
    assert_eq!(classify_bytes(), classify_bytes(), "classify JSON not byte-stable");

    // solve with the full two-pipeline report
    let solve_bytes = || -> Vec<u8> {
        let config = RunConfig::from_json(&config_json(
            &CATALOG[1],
            r#"{"quad_order": 64, "n_starts": 8, "seed": 1234}"#,
        ))
        .unwrap();
        to_json(&run_solve(&config).unwrap()).unwrap().into_bytes()
    };
    assert_eq!(solve_bytes(), solve_bytes(), "solve JSON not byte-stable");

    // sweep CSV
    let sweep_bytes = || -> Vec<u8> {
        let config = RunConfig::from_json(
            r#"{"kernel": {"degenerate": {"psi1": "1", "psi2": "$theta + t",
                                           "phi1": "1", "phi2": "v"}},
                "numerics": {"quad_order": 32, "n_starts": 4, "max_iter": 20000, "seed": 7},
                "sweep": {"parameter": "$theta", "from": 3.0, "to": 3.7, "steps": 5}}"#,
        )
        .unwrap();
        run_sweep(&config).unwrap().to_csv().into_bytes()
    };
    assert_eq!(sweep_bytes(), sweep_bytes(), "sweep CSV not byte-stable");

    // verify text
    let verify_bytes = || -> Vec<u8> {
        let config = RunConfig::from_json(&config_json(
            &CATALOG[0],
            r#"{"quad_order": 32, "n_starts": 4}"#,
        ))
        .unwrap();
        run_verify(&config).unwrap().to_text().into_bytes()
    };
    assert_eq!(verify_bytes(), verify_bytes(), "verify text not byte-stable");

    pass(9, "classify/solve/sweep/verify outputs byte-identical across reruns");
}
