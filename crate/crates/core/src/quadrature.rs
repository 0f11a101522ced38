//! Deterministic Gauss-Legendre quadrature on [0,1] and [0,1]².
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! polynomials from Chebyshev initial guesses, so a given order always
//! produces bit-identical rules with no table dependency. An order-n
//! rule integrates polynomials of degree 2n-1 exactly (to rounding).

use thiserror::Error;

pub const MAX_ORDER: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature order {0} out of range 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("non-finite integrand value at node ({x}, {y})")]
    NonFiniteIntegrand { x: f64, y: f64 },
}

/// A normalized quadrature rule on [0,1]: weights sum to 1 (interval
/// length) within 1e-14 and nodes are strictly increasing in (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Compensated (Kahan) accumulator; keeps long positive sums accurate to
/// a few ulp independent of length.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum
    }
}

/// Legendre polynomial P_n and its derivative at `x`, by the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0; // P_0
    let mut p = x; // P_1
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss-Legendre rule of the given order, mapped affinely from [-1,1]
/// to [0,1].
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule, QuadratureError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(QuadratureError::OrderOutOfRange(order));
    }
    if order == 1 {
        return Ok(QuadratureRule {
            order,
            nodes: vec![0.5],
            weights: vec![1.0],
        });
    }

    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev estimate of the i-th root (descending in z)
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() <= 1e-15 {
                let (p2, d2) = legendre_with_derivative(n, z);
                dp = d2;
                z -= p2 / d2;
                break;
            }
        }
        // z is the (n-1-i)-th node in ascending order on [-1,1];
        // exploit symmetry so mirrored nodes/weights are bit-identical.
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        nodes[i] = 0.5 * (1.0 - z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        // middle node of odd rules sits exactly at the interval center
        nodes[n / 2] = 0.5;
    }

    debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(nodes.iter().all(|&x| x > 0.0 && x < 1.0));
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
    })
}

/// Σ wᵢ f(xᵢ). Errors on a non-finite integrand value, reporting the node.
pub fn integrate_1d<F>(f: F, rule: &QuadratureRule) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let mut acc = KahanSum::default();
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(QuadratureError::NonFiniteIntegrand { x, y: f64::NAN });
        }
        acc.add(w * fx);
    }
    Ok(acc.value())
}

/// Tensor-product sum Σᵢⱼ wᵢwⱼ f(xᵢ,xⱼ) over [0,1]².
pub fn integrate_2d<F>(f: F, rule: &QuadratureRule) -> Result<f64, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    let mut acc = KahanSum::default();
    for (&x, &wx) in rule.nodes().iter().zip(rule.weights()) {
        for (&y, &wy) in rule.nodes().iter().zip(rule.weights()) {
            let fxy = f(x, y);
            if !fxy.is_finite() {
                return Err(QuadratureError::NonFiniteIntegrand { x, y });
            }
            acc.add(wx * wy * fxy);
        }
    }
    Ok(acc.value())
}
