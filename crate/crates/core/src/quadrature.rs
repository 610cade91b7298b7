//! Operator-valued quadrature over one time step.
//!
//! Rules are stored in average convention: weights sum to 1 and the step
//! length `h` is applied separately in the propagator exponent, so
//! `Σ w_k H(t_k) ≈ (1/h)∫ H(s) ds` over the step.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::operator::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Left endpoints `t_k = jh + kh/M`, uniform weights. First order.
    RiemannLeft,
    /// Cell midpoints `t_k = jh + (k+1/2)h/M`, uniform weights. Second order.
    Midpoint,
    /// Closed trapezoid on `M` nodes (`M-1` cells), endpoint weights halved.
    /// Second order. Requires `M ≥ 2`.
    Trapezoid,
}

impl QuadratureKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuadratureKind::RiemannLeft => "riemann-left",
            QuadratureKind::Midpoint => "midpoint",
            QuadratureKind::Trapezoid => "trapezoid",
        }
    }
}

impl std::str::FromStr for QuadratureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riemann-left" | "riemann_left" | "left" => Ok(QuadratureKind::RiemannLeft),
            "midpoint" => Ok(QuadratureKind::Midpoint),
            "trapezoid" | "trapezoidal" => Ok(QuadratureKind::Trapezoid),
            other => Err(Error::InvalidParameter(format!(
                "unknown quadrature rule {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    m: usize,
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("node count must be at least 1".into()));
        }
        if kind == QuadratureKind::Trapezoid && m < 2 {
            return Err(Error::InvalidParameter(
                "trapezoid rule needs at least 2 nodes".into(),
            ));
        }
        Ok(Self { kind, m })
    }

    pub fn riemann_left(m: usize) -> Result<Self> {
        Self::new(QuadratureKind::RiemannLeft, m)
    }

    pub fn midpoint(m: usize) -> Result<Self> {
        Self::new(QuadratureKind::Midpoint, m)
    }

    pub fn trapezoid(m: usize) -> Result<Self> {
        Self::new(QuadratureKind::Trapezoid, m)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.m
    }

    /// Node offsets within `[0, h]` and weights summing to 1.
    pub fn offsets_weights(&self, h: f64) -> Vec<(f64, f64)> {
        let m = self.m;
        match self.kind {
            QuadratureKind::RiemannLeft => (0..m)
                .map(|k| (k as f64 * h / m as f64, 1.0 / m as f64))
                .collect(),
            QuadratureKind::Midpoint => (0..m)
                .map(|k| ((k as f64 + 0.5) * h / m as f64, 1.0 / m as f64))
                .collect(),
            QuadratureKind::Trapezoid => {
                let cells = (m - 1) as f64;
                (0..m)
                    .map(|k| {
                        let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
                        (k as f64 * h / cells, w / cells)
                    })
                    .collect()
            }
        }
    }

    /// Absolute nodes `t_k` on step `j` of size `h`, with weights.
    pub fn nodes_weights(&self, j: usize, h: f64) -> Vec<(f64, f64)> {
        let base = j as f64 * h;
        self.offsets_weights(h)
            .into_iter()
            .map(|(s, w)| (base + s, w))
            .collect()
    }
}

/// Weighted average `Σ w_k H(t_k)` over step `j`; approximates
/// `(1/h)∫_{jh}^{(j+1)h} H(s) ds`.
pub fn averaged_hamiltonian(
    h: &TimeDependentHamiltonian,
    rule: &QuadratureRule,
    j: usize,
    step: f64,
) -> Result<HermitianOperator> {
    HermitianOperator::new(averaged_hamiltonian_raw(h, rule, j, step)?)
}

pub(crate) fn averaged_hamiltonian_raw(
    h: &TimeDependentHamiltonian,
    rule: &QuadratureRule,
    j: usize,
    step: f64,
) -> Result<Array2<Complex64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {step}"
        )));
    }
    let dim = h.dim();
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    // Fixed ascending-k summation order for determinism.
    for (t, w) in rule.nodes_weights(j, step) {
        acc.scaled_add(Complex64::new(w, 0.0), &h.evaluate_raw(t));
    }
    Ok(acc)
}
