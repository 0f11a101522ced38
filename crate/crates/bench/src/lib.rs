//! Shared fixtures for the benchmarks.

use lyapgibbs::expr::ExpressionAst;
use lyapgibbs::kernel::{DegenerateKernel, GeneralKernel, Kernel, ModelParams};

pub fn affine_ramp_kernel() -> DegenerateKernel {
    DegenerateKernel::build(
        ExpressionAst::parse("1").unwrap(),
        ExpressionAst::parse("t").unwrap(),
        ExpressionAst::parse("1").unwrap(),
        ExpressionAst::parse("v").unwrap(),
    )
    .unwrap()
}

pub fn exponential_kernel() -> DegenerateKernel {
    DegenerateKernel::build(
        ExpressionAst::parse("exp(t)").unwrap(),
        ExpressionAst::parse("1").unwrap(),
        ExpressionAst::parse("1").unwrap(),
        ExpressionAst::parse("exp(v)").unwrap(),
    )
    .unwrap()
}

pub fn four_coupling_kernel() -> Kernel {
    Kernel::General(
        GeneralKernel::build(
            ModelParams::new(0.4, 0.3, 0.2, 0.1, 1.0).unwrap(),
            ExpressionAst::parse("t*u*v").unwrap(),
            ExpressionAst::parse("u*v").unwrap(),
            ExpressionAst::parse("t*u").unwrap(),
        )
        .unwrap(),
    )
}
