//! JSON run configuration: one kernel section (general or degenerate),
//! a numerics section with materialized defaults, and an optional sweep
//! section. All validation reports the offending field by path.

use crate::error::CliError;
use lyapgibbs::expr::ExpressionAst;
use lyapgibbs::kernel::{DegenerateKernel, GeneralKernel, Kernel, ModelParams};
use serde::{Deserialize, Serialize};

pub const PLACEHOLDER: &str = "$theta";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    General(GeneralKernelConfig),
    Degenerate(DegenerateKernelConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralKernelConfig {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J1")]
    pub j1: f64,
    #[serde(rename = "J3")]
    pub j3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub xi1: String,
    pub xi2: String,
    pub xi3: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerateKernelConfig {
    pub psi1: String,
    pub psi2: String,
    pub phi1: String,
    pub phi2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub quad_order: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub cluster_eps: f64,
    pub damping: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            quad_order: 64,
            tol: 1e-10,
            max_iter: 10_000,
            n_starts: 16,
            seed: 0,
            cluster_eps: 1e-4,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `J`, `J1`, `J3`, `alpha`, `beta` (general kernels) or `$theta`
    /// (textual placeholder inside one expression field).
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        if n.quad_order < 1 || n.quad_order > lyapgibbs::quadrature::MAX_ORDER {
            return Err(CliError::config(format!(
                "numerics.quad_order: must be in 1..={}, got {}",
                lyapgibbs::quadrature::MAX_ORDER,
                n.quad_order
            )));
        }
        if !(n.tol > 0.0 && n.tol.is_finite()) {
            return Err(CliError::config(format!(
                "numerics.tol: must be positive and finite, got {}",
                n.tol
            )));
        }
        if n.max_iter == 0 {
            return Err(CliError::config("numerics.max_iter: must be at least 1"));
        }
        if n.n_starts == 0 {
            return Err(CliError::config("numerics.n_starts: must be at least 1"));
        }
        if !(n.cluster_eps > 0.0 && n.cluster_eps.is_finite()) {
            return Err(CliError::config(format!(
                "numerics.cluster_eps: must be positive and finite, got {}",
                n.cluster_eps
            )));
        }
        if !(n.damping > 0.0 && n.damping <= 1.0) {
            return Err(CliError::config(format!(
                "numerics.damping: must lie in (0, 1], got {}",
                n.damping
            )));
        }

        let theta_swept = self
            .sweep
            .as_ref()
            .map(|s| s.parameter == PLACEHOLDER)
            .unwrap_or(false);
        let occurrences = self.placeholder_occurrences();
        if theta_swept {
            if occurrences != 1 {
                return Err(CliError::config(format!(
                    "sweep.parameter: `{PLACEHOLDER}` requires exactly one \
                     placeholder occurrence in the kernel expressions, found {occurrences}"
                )));
            }
        } else if occurrences > 0 {
            return Err(CliError::config(format!(
                "kernel: expressions contain `{PLACEHOLDER}`; only a sweep over \
                 `{PLACEHOLDER}` substitutes it"
            )));
        }

        // expressions must parse (with a probe value in the placeholder slot)
        for (path, source) in self.expression_fields() {
            let substituted = substitute_placeholder(source, 1.0);
            if let Err(e) = ExpressionAst::parse(&substituted) {
                return Err(CliError::config(format!("{path}: {e}")));
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.steps < 2 {
                return Err(CliError::config(format!(
                    "sweep.steps: must be at least 2, got {}",
                    sweep.steps
                )));
            }
            if !(sweep.from.is_finite() && sweep.to.is_finite()) {
                return Err(CliError::config("sweep.from/to: must be finite"));
            }
            let valid = match &self.kernel {
                KernelConfig::General(_) => {
                    matches!(sweep.parameter.as_str(), "J" | "J1" | "J3" | "alpha" | "beta")
                        || sweep.parameter == PLACEHOLDER
                }
                KernelConfig::Degenerate(_) => sweep.parameter == PLACEHOLDER,
            };
            if !valid {
                return Err(CliError::config(format!(
                    "sweep.parameter: unknown parameter path `{}` for this kernel section",
                    sweep.parameter
                )));
            }
        }
        Ok(())
    }

    fn expression_fields(&self) -> Vec<(String, &str)> {
        match &self.kernel {
            KernelConfig::General(g) => vec![
                ("kernel.general.xi1".to_string(), g.xi1.as_str()),
                ("kernel.general.xi2".to_string(), g.xi2.as_str()),
                ("kernel.general.xi3".to_string(), g.xi3.as_str()),
            ],
            KernelConfig::Degenerate(d) => vec![
                ("kernel.degenerate.psi1".to_string(), d.psi1.as_str()),
                ("kernel.degenerate.psi2".to_string(), d.psi2.as_str()),
                ("kernel.degenerate.phi1".to_string(), d.phi1.as_str()),
                ("kernel.degenerate.phi2".to_string(), d.phi2.as_str()),
            ],
        }
    }

    fn placeholder_occurrences(&self) -> usize {
        self.expression_fields()
            .iter()
            .map(|(_, src)| src.matches(PLACEHOLDER).count())
            .sum()
    }
}

/// Replace `$theta` with the parenthesized decimal value, so the
/// substitution is precedence-safe inside any expression.
pub fn substitute_placeholder(source: &str, value: f64) -> String {
    if source.contains(PLACEHOLDER) {
        source.replace(PLACEHOLDER, &format!("({value})"))
    } else {
        source.to_string()
    }
}

fn parse_field(path: &str, source: &str, theta: Option<f64>) -> Result<ExpressionAst, CliError> {
    let substituted = match theta {
        Some(value) => substitute_placeholder(source, value),
        None => source.to_string(),
    };
    ExpressionAst::parse(&substituted).map_err(|e| CliError::config(format!("{path}: {e}")))
}

/// Build the kernel, substituting `theta` into the placeholder slot when
/// given.
pub fn build_kernel(config: &KernelConfig, theta: Option<f64>) -> Result<Kernel, CliError> {
    match config {
        KernelConfig::General(g) => {
            let params = ModelParams::new(g.j, g.j1, g.j3, g.alpha, g.beta)?;
            let xi1 = parse_field("kernel.general.xi1", &g.xi1, theta)?;
            let xi2 = parse_field("kernel.general.xi2", &g.xi2, theta)?;
            let xi3 = parse_field("kernel.general.xi3", &g.xi3, theta)?;
            Ok(Kernel::General(GeneralKernel::build(params, xi1, xi2, xi3)?))
        }
        KernelConfig::Degenerate(d) => {
            let psi1 = parse_field("kernel.degenerate.psi1", &d.psi1, theta)?;
            let psi2 = parse_field("kernel.degenerate.psi2", &d.psi2, theta)?;
            let phi1 = parse_field("kernel.degenerate.phi1", &d.phi1, theta)?;
            let phi2 = parse_field("kernel.degenerate.phi2", &d.phi2, theta)?;
            Ok(Kernel::Degenerate(DegenerateKernel::build(psi1, psi2, phi1, phi2)?))
        }
    }
}

/// Kernel for one sweep point: either the placeholder substitution or a
/// scalar override in the general section.
pub fn kernel_for_sweep_value(
    config: &KernelConfig,
    parameter: &str,
    value: f64,
) -> Result<Kernel, CliError> {
    if parameter == PLACEHOLDER {
        return build_kernel(config, Some(value));
    }
    match config {
        KernelConfig::General(g) => {
            let mut g = g.clone();
            match parameter {
                "J" => g.j = value,
                "J1" => g.j1 = value,
                "J3" => g.j3 = value,
                "alpha" => g.alpha = value,
                "beta" => g.beta = value,
                other => {
                    return Err(CliError::config(format!(
                        "sweep.parameter: unknown parameter path `{other}`"
                    )))
                }
            }
            build_kernel(&KernelConfig::General(g), None)
        }
        KernelConfig::Degenerate(_) => Err(CliError::config(format!(
            "sweep.parameter: `{parameter}` is not a degenerate-kernel parameter \
             (use `{PLACEHOLDER}`)"
        ))),
    }
}
