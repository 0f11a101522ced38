//! Model kernels on [0,1]³.
//!
//! A [`GeneralKernel`] is the exponential kernel built from Hamiltonian
//! couplings and three user-supplied shape functions,
//!
//! ```text
//! K(t,u,v) = exp{ J3·β·ξ1(t,u,v) + J·β·ξ2(u,v) + J1·β·(ξ3(t,u)+ξ3(t,v)) + α·β·(u+v) }
//! ```
//!
//! A [`DegenerateKernel`] is the separable rank-2 kernel
//! `K(t,u,v) = ψ1(t)·φ1(u) + ψ2(t)·φ2(v)` whose fixed-point problem
//! collapses to a plane quadratic map (module `reduction`).

use crate::expr::{Bindings, EvalError, ExpressionAst, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("component `{component}` must only use {allowed}, found `{found}`")]
    VariableSet {
        component: &'static str,
        allowed: &'static str,
        found: Var,
    },
    #[error("kernel parameter `{name}` must be finite, got {value}")]
    NonFiniteParam { name: &'static str, value: f64 },
    #[error("inverse temperature beta must be > 0, got {0}")]
    NonPositiveBeta(f64),
    #[error("kernel value not finite at (t,u,v)=({t}, {u}, {v})")]
    RangeError { t: f64, u: f64, v: f64 },
    #[error("component `{component}`: {source}")]
    Eval {
        component: &'static str,
        source: EvalError,
    },
}

/// Hamiltonian couplings and the inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Second-neighbor coupling J.
    pub j: f64,
    /// Nearest-neighbor coupling J1.
    pub j1: f64,
    /// Ternary coupling J3.
    pub j3: f64,
    /// External field α.
    pub alpha: f64,
    /// Inverse temperature β > 0.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(j: f64, j1: f64, j3: f64, alpha: f64, beta: f64) -> Result<Self, KernelError> {
        for (name, value) in [("J", j), ("J1", j1), ("J3", j3), ("alpha", alpha), ("beta", beta)] {
            if !value.is_finite() {
                return Err(KernelError::NonFiniteParam { name, value });
            }
        }
        if beta <= 0.0 {
            return Err(KernelError::NonPositiveBeta(beta));
        }
        Ok(Self { j, j1, j3, alpha, beta })
    }
}

fn check_vars(
    ast: &ExpressionAst,
    component: &'static str,
    allowed: &'static [Var],
    allowed_text: &'static str,
) -> Result<(), KernelError> {
    for var in ast.free_variables() {
        if !allowed.contains(&var) {
            return Err(KernelError::VariableSet {
                component,
                allowed: allowed_text,
                found: var,
            });
        }
    }
    Ok(())
}

/// The exponential four-interaction kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralKernel {
    pub params: ModelParams,
    xi1: ExpressionAst,
    xi2: ExpressionAst,
    xi3: ExpressionAst,
}

impl GeneralKernel {
    /// Validates the variable sets: ξ1 over (t,u,v), ξ2 over (u,v),
    /// ξ3 over (t,u).
    pub fn build(
        params: ModelParams,
        xi1: ExpressionAst,
        xi2: ExpressionAst,
        xi3: ExpressionAst,
    ) -> Result<Self, KernelError> {
        check_vars(&xi1, "xi1", &[Var::T, Var::U, Var::V], "{t, u, v}")?;
        check_vars(&xi2, "xi2", &[Var::U, Var::V], "{u, v}")?;
        check_vars(&xi3, "xi3", &[Var::T, Var::U], "{t, u}")?;
        Ok(Self { params, xi1, xi2, xi3 })
    }

    /// Pointwise kernel value; strictly positive when finite.
    pub fn eval(&self, t: f64, u: f64, v: f64) -> Result<f64, KernelError> {
        let p = &self.params;
        let wrap = |component| move |source| KernelError::Eval { component, source };

        let x1 = self
            .xi1
            .eval(&Bindings::new().t(t).u(u).v(v))
            .map_err(wrap("xi1"))?;
        let x2 = self
            .xi2
            .eval(&Bindings::new().u(u).v(v))
            .map_err(wrap("xi2"))?;
        // ξ3 is a function of two slots named (t,u); its second use binds v
        // into the `u` slot.
        let x3u = self
            .xi3
            .eval(&Bindings::new().t(t).u(u))
            .map_err(wrap("xi3"))?;
        let x3v = self
            .xi3
            .eval(&Bindings::new().t(t).u(v))
            .map_err(wrap("xi3"))?;

        let exponent = p.j3 * p.beta * x1
            + p.j * p.beta * x2
            + p.j1 * p.beta * (x3u + x3v)
            + p.alpha * p.beta * (u + v);
        let value = exponent.exp();
        if !value.is_finite() {
            return Err(KernelError::RangeError { t, u, v });
        }
        Ok(value)
    }
}

/// The rank-2 separable kernel ψ1(t)φ1(u) + ψ2(t)φ2(v).
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateKernel {
    psi1: ExpressionAst,
    psi2: ExpressionAst,
    phi1: ExpressionAst,
    phi2: ExpressionAst,
}

/// Probe result for one kernel component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentProbe {
    pub component: &'static str,
    /// Minimum sampled value.
    pub min: f64,
    /// Location of the minimum.
    pub argmin: f64,
    /// Maximum sampled value.
    pub max: f64,
    pub all_finite: bool,
}

/// Diagnostics from [`DegenerateKernel::validate_positive`]. `pass` is
/// the strict criterion (min > 0 everywhere); `admissible` additionally
/// accepts boundary zeros (min ≥ 0, not identically zero), which is the
/// weakest hypothesis under which the reduction coefficients stay
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub probes: Vec<ComponentProbe>,
    pub pass: bool,
    pub admissible: bool,
}

impl DegenerateKernel {
    /// Validates the variable sets: ψ's over t, φ1 over u, φ2 over v.
    pub fn build(
        psi1: ExpressionAst,
        psi2: ExpressionAst,
        phi1: ExpressionAst,
        phi2: ExpressionAst,
    ) -> Result<Self, KernelError> {
        check_vars(&psi1, "psi1", &[Var::T], "{t}")?;
        check_vars(&psi2, "psi2", &[Var::T], "{t}")?;
        check_vars(&phi1, "phi1", &[Var::U], "{u}")?;
        check_vars(&phi2, "phi2", &[Var::V], "{v}")?;
        Ok(Self { psi1, psi2, phi1, phi2 })
    }

    pub fn psi1(&self, t: f64) -> Result<f64, KernelError> {
        self.component_value("psi1", &self.psi1, Bindings::new().t(t))
    }

    pub fn psi2(&self, t: f64) -> Result<f64, KernelError> {
        self.component_value("psi2", &self.psi2, Bindings::new().t(t))
    }

    pub fn phi1(&self, u: f64) -> Result<f64, KernelError> {
        self.component_value("phi1", &self.phi1, Bindings::new().u(u))
    }

    pub fn phi2(&self, v: f64) -> Result<f64, KernelError> {
        self.component_value("phi2", &self.phi2, Bindings::new().v(v))
    }

    fn component_value(
        &self,
        component: &'static str,
        ast: &ExpressionAst,
        bindings: Bindings,
    ) -> Result<f64, KernelError> {
        ast.eval(&bindings)
            .map_err(|source| KernelError::Eval { component, source })
    }

    /// ψ1(t)φ1(u) + ψ2(t)φ2(v).
    pub fn eval(&self, t: f64, u: f64, v: f64) -> Result<f64, KernelError> {
        let value = self.psi1(t)? * self.phi1(u)? + self.psi2(t)? * self.phi2(v)?;
        if !value.is_finite() {
            return Err(KernelError::RangeError { t, u, v });
        }
        Ok(value)
    }

    /// f(t) = c1·ψ1(t) + c2·ψ2(t), the shape every fixed point of the
    /// separable operator takes.
    pub fn linear_combination(&self, c1: f64, c2: f64, t: f64) -> Result<f64, KernelError> {
        Ok(c1 * self.psi1(t)? + c2 * self.psi2(t)?)
    }

    /// Probe all four components at `probe_count` uniform nodes on [0,1]
    /// (endpoints included). Never fails; violations are carried in the
    /// report.
    pub fn validate_positive(&self, probe_count: usize) -> PositivityReport {
        assert!(probe_count >= 2, "probe_count must be at least 2");
        let probe_points: Vec<f64> = (0..probe_count)
            .map(|i| i as f64 / (probe_count - 1) as f64)
            .collect();

        let mut probes = Vec::with_capacity(4);
        let components: [(&'static str, &ExpressionAst, Var); 4] = [
            ("psi1", &self.psi1, Var::T),
            ("psi2", &self.psi2, Var::T),
            ("phi1", &self.phi1, Var::U),
            ("phi2", &self.phi2, Var::V),
        ];
        for (name, ast, var) in components {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut argmin = 0.0;
            let mut all_finite = true;
            for &x in &probe_points {
                let bindings = match var {
                    Var::T => Bindings::new().t(x),
                    Var::U => Bindings::new().u(x),
                    Var::V => Bindings::new().v(x),
                };
                let value = match ast.eval(&bindings) {
                    Ok(value) if value.is_finite() => value,
                    _ => {
                        all_finite = false;
                        f64::NAN
                    }
                };
                if !all_finite {
                    min = f64::NAN;
                    argmin = x;
                    break;
                }
                if value < min {
                    min = value;
                    argmin = x;
                }
                if value > max {
                    max = value;
                }
            }
            probes.push(ComponentProbe { component: name, min, argmin, max, all_finite });
        }

        let pass = probes.iter().all(|p| p.all_finite && p.min > 0.0);
        let admissible = probes
            .iter()
            .all(|p| p.all_finite && p.min >= 0.0 && p.max > 0.0);
        PositivityReport { probes, pass, admissible }
    }
}

/// Either kernel form; what the discretized operator consumes.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    General(GeneralKernel),
    Degenerate(DegenerateKernel),
}

impl Kernel {
    pub fn eval(&self, t: f64, u: f64, v: f64) -> Result<f64, KernelError> {
        match self {
            Kernel::General(k) => k.eval(t, u, v),
            Kernel::Degenerate(k) => k.eval(t, u, v),
        }
    }

    pub fn as_degenerate(&self) -> Option<&DegenerateKernel> {
        match self {
            Kernel::Degenerate(k) => Some(k),
            Kernel::General(_) => None,
        }
    }
}

impl From<GeneralKernel> for Kernel {
    fn from(k: GeneralKernel) -> Self {
        Kernel::General(k)
    }
}

impl From<DegenerateKernel> for Kernel {
    fn from(k: DegenerateKernel) -> Self {
        Kernel::Degenerate(k)
    }
}
