//! Hamiltonian constructors and evaluators: generic time-dependent
//! Hamiltonians with declared norm bounds, split systems `A + B(t)` with a
//! precomputed spectral factorization of `A` (fast-forwarded `e^{-iAs}`),
//! the interaction-picture Hamiltonian `H_I(t) = e^{iAt} B(t) e^{-iAt}`,
//! and the periodic finite-difference discretization of `-Δ + V(x)` on
//! `[-π, π)` with Gaussian wavepacket initial states.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    adjoint, commutator, spectral_norm, HermitianOperator, UnitaryMatrix,
};

type MatrixFn = Box<dyn Fn(f64) -> Array2<Complex64> + Send + Sync>;

/// Number of uniform samples used when bounds are measured rather than
/// declared.
const BOUND_SAMPLES: usize = 64;
/// Safety factor applied to sampled maxima when measuring bounds.
const BOUND_SLACK: f64 = 1.05;

/// Declared or measured norm bounds for a time-dependent Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub enum Bounds {
    /// `alpha ≥ max_t ‖H(t)‖` and `beta ≥ max_t ‖H'(t)‖` on the horizon.
    Declared { alpha: f64, beta: f64 },
    /// Sample 64 uniform times and take 1.05x the observed maxima.
    Measured,
}

struct TdhInner {
    dim: usize,
    horizon: f64,
    eval: MatrixFn,
    deriv: Option<MatrixFn>,
    alpha: f64,
    beta: f64,
    time_independent: bool,
}

/// Evaluator `t ↦ H(t)` on `[0, horizon]` with declared bounds
/// `‖H(t)‖ ≤ alpha` and `‖H'(t)‖ ≤ beta`.
///
/// Evaluators must be pure: the same `t` always yields the same matrix.
/// Clones share the underlying evaluator.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    inner: Arc<TdhInner>,
}

impl TimeDependentHamiltonian {
    /// Build from an evaluator with declared bounds. The norm bound is
    /// spot-checked on a few sampled times and violating inputs are
    /// rejected.
    pub fn new(
        dim: usize,
        horizon: f64,
        eval: impl Fn(f64) -> Array2<Complex64> + Send + Sync + 'static,
        deriv: Option<MatrixFn>,
        bounds: Bounds,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let eval: MatrixFn = Box::new(eval);
        let (alpha, beta) = match bounds {
            Bounds::Declared { alpha, beta } => {
                // Spot check on a small sample; a full scan is the caller's
                // job when they measure.
                for k in 0..5 {
                    let t = horizon * k as f64 / 4.0;
                    let norm = spectral_norm(&eval(t));
                    if norm > alpha * (1.0 + 1e-8) {
                        return Err(Error::BoundViolation {
                            context: "‖H(t)‖ vs declared alpha",
                            measured: norm,
                            declared: alpha,
                        });
                    }
                }
                (alpha, beta)
            }
            Bounds::Measured => {
                let mut max_norm = 0.0f64;
                let mut max_deriv = 0.0f64;
                for k in 0..BOUND_SAMPLES {
                    let t = horizon * (k as f64 + 0.5) / BOUND_SAMPLES as f64;
                    max_norm = max_norm.max(spectral_norm(&eval(t)));
                    let d = match &deriv {
                        Some(d) => d(t),
                        None => central_difference(&eval, t),
                    };
                    max_deriv = max_deriv.max(spectral_norm(&d));
                }
                (BOUND_SLACK * max_norm, BOUND_SLACK * max_deriv)
            }
        };
        Ok(Self {
            inner: Arc::new(TdhInner {
                dim,
                horizon,
                eval,
                deriv,
                alpha,
                beta,
                time_independent: false,
            }),
        })
    }

    /// Shorthand for `new` with measured bounds.
    pub fn with_measured_bounds(
        dim: usize,
        horizon: f64,
        eval: impl Fn(f64) -> Array2<Complex64> + Send + Sync + 'static,
        deriv: Option<MatrixFn>,
    ) -> Result<Self> {
        Self::new(dim, horizon, eval, deriv, Bounds::Measured)
    }

    /// Constant-in-time Hamiltonian; `beta = 0` and `alpha = ‖H‖`.
    pub fn constant(h: HermitianOperator, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let alpha = h.spectral_norm();
        let dim = h.dim();
        let mat = h.into_matrix();
        let zero = Array2::zeros((dim, dim));
        Ok(Self {
            inner: Arc::new(TdhInner {
                dim,
                horizon,
                eval: Box::new(move |_| mat.clone()),
                deriv: Some(Box::new(move |_| zero.clone())),
                alpha,
                beta: 0.0,
                time_independent: true,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    pub fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    pub fn beta(&self) -> f64 {
        self.inner.beta
    }

    pub fn is_time_independent(&self) -> bool {
        self.inner.time_independent
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.inner.deriv.is_some()
    }

    /// `H(t)` with the hermiticity invariant enforced.
    pub fn evaluate(&self, t: f64) -> Result<HermitianOperator> {
        HermitianOperator::new(self.evaluate_raw(t))
    }

    /// `H(t)` without the constructor check; quadrature loops use this.
    pub fn evaluate_raw(&self, t: f64) -> Array2<Complex64> {
        (self.inner.eval)(t)
    }

    /// `H'(t)`: the analytic derivative when supplied, otherwise a central
    /// finite difference with `δ = 1e-6 · max(1, t)`.
    pub fn derivative_raw(&self, t: f64) -> Array2<Complex64> {
        match &self.inner.deriv {
            Some(d) => d(t),
            None => central_difference(&self.inner.eval, t),
        }
    }
}

fn central_difference(eval: &MatrixFn, t: f64) -> Array2<Complex64> {
    let delta = 1e-6 * t.abs().max(1.0);
    let plus = eval(t + delta);
    let minus = eval(t - delta);
    (plus - minus).mapv(|z| z / (2.0 * delta))
}

/// Declared or measured bounds for a split system.
#[derive(Debug, Clone, Copy)]
pub enum SplitBounds {
    /// `alpha_b ≥ max ‖B(t)‖`, `beta_b ≥ max ‖B'(t)‖`,
    /// `alpha_ab ≥ max ‖[A, B(t)]‖`.
    Declared {
        alpha_b: f64,
        beta_b: f64,
        alpha_ab: f64,
    },
    /// Take `alpha_b`, `beta_b` from the inner Hamiltonian and sample
    /// `‖[A, B(t)]‖`.
    Measured,
}

struct SplitInner {
    a: HermitianOperator,
    eigvals: Array1<f64>,
    eigvecs: Array2<Complex64>,
    b: TimeDependentHamiltonian,
    b_in_basis: Option<Array2<Complex64>>,
    alpha_b: f64,
    beta_b: f64,
    alpha_ab: f64,
}

/// Pair `(A, B(t))` describing `H(t) = A + B(t)` with the spectral
/// factorization of `A` precomputed, so `e^{-iAs}` is available at a cost
/// independent of `s`.
#[derive(Clone)]
pub struct SplitSystem {
    inner: Arc<SplitInner>,
}

impl SplitSystem {
    /// Build with a numerically computed factorization of `A`.
    pub fn new(a: HermitianOperator, b: TimeDependentHamiltonian, bounds: SplitBounds) -> Result<Self> {
        let (vals, vecs) = a.eigendecompose()?;
        Self::with_spectrum(a, vals, vecs, b, bounds)
    }

    /// Build from a known factorization `A = V diag(λ) V†` (for matrices
    /// with an analytic spectrum, such as circulants). The reconstruction
    /// is verified to `1e-10 · ‖A‖` before acceptance.
    pub fn with_spectrum(
        a: HermitianOperator,
        eigvals: Array1<f64>,
        eigvecs: Array2<Complex64>,
        b: TimeDependentHamiltonian,
        bounds: SplitBounds,
    ) -> Result<Self> {
        let n = a.dim();
        if eigvals.len() != n || eigvecs.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                left: n,
                right: eigvals.len(),
            });
        }
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: b.dim(),
            });
        }
        let mut recon = eigvecs.clone();
        for (k, &lambda) in eigvals.iter().enumerate() {
            recon
                .column_mut(k)
                .mapv_inplace(|z| z * Complex64::new(lambda, 0.0));
        }
        let recon = recon.dot(&adjoint(&eigvecs));
        let scale = spectral_norm(a.matrix()).max(1e-300);
        let gap = &recon - a.matrix();
        // Frobenius bounds the spectral norm from above; compute the exact
        // norm only when the cheap bound fails.
        if crate::operator::frobenius_norm(&gap) > 1e-10 * scale {
            let residual = spectral_norm(&gap);
            if residual > 1e-10 * scale {
                return Err(Error::EigenFailure { residual });
            }
        }

        let (alpha_b, beta_b, alpha_ab) = match bounds {
            SplitBounds::Declared {
                alpha_b,
                beta_b,
                alpha_ab,
            } => (alpha_b, beta_b, alpha_ab),
            SplitBounds::Measured => {
                let mut max_ab = 0.0f64;
                let samples = if b.is_time_independent() { 1 } else { BOUND_SAMPLES };
                for k in 0..samples {
                    let t = b.horizon() * (k as f64 + 0.5) / samples as f64;
                    let c = commutator(a.matrix(), &b.evaluate_raw(t))?;
                    max_ab = max_ab.max(spectral_norm(&c));
                }
                let slack = if b.is_time_independent() { 1.0 } else { BOUND_SLACK };
                (b.alpha(), b.beta(), slack * max_ab)
            }
        };

        let b_in_basis = if b.is_time_independent() {
            Some(adjoint(&eigvecs).dot(&b.evaluate_raw(0.0)).dot(&eigvecs))
        } else {
            None
        };

        Ok(Self {
            inner: Arc::new(SplitInner {
                a,
                eigvals,
                eigvecs,
                b,
                b_in_basis,
                alpha_b,
                beta_b,
                alpha_ab,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.a.dim()
    }

    pub fn a(&self) -> &HermitianOperator {
        &self.inner.a
    }

    pub fn b(&self) -> &TimeDependentHamiltonian {
        &self.inner.b
    }

    pub fn alpha_b(&self) -> f64 {
        self.inner.alpha_b
    }

    pub fn beta_b(&self) -> f64 {
        self.inner.beta_b
    }

    pub fn alpha_ab(&self) -> f64 {
        self.inner.alpha_ab
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.inner.eigvals
    }

    pub fn eigenvectors(&self) -> &Array2<Complex64> {
        &self.inner.eigvecs
    }

    /// `B` rotated into the eigenbasis of `A`; only cached for
    /// time-independent `B`.
    pub fn b_in_a_basis(&self) -> Option<&Array2<Complex64>> {
        self.inner.b_in_basis.as_ref()
    }

    /// Rotate an operator into the eigenbasis of `A`: `V† M V`.
    pub fn to_a_basis(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        adjoint(&self.inner.eigvecs).dot(m).dot(&self.inner.eigvecs)
    }

    /// Inverse of [`SplitSystem::to_a_basis`].
    pub fn from_a_basis(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        self.inner.eigvecs.dot(m).dot(&adjoint(&self.inner.eigvecs))
    }

    /// Rotate a state into the eigenbasis of `A`: `V† ψ`.
    pub fn state_to_a_basis(&self, psi: &StateVector) -> StateVector {
        let rotated = adjoint(&self.inner.eigvecs).dot(psi.amplitudes());
        StateVector::new(rotated).expect("unitary rotation preserves the norm")
    }

    /// `e^{-iAs}` through the stored spectrum; cost independent of `s`.
    pub fn fast_forward(&self, s: f64) -> UnitaryMatrix {
        UnitaryMatrix::new(self.fast_forward_raw(s)).expect("phase conjugation is unitary")
    }

    pub(crate) fn fast_forward_raw(&self, s: f64) -> Array2<Complex64> {
        crate::operator::phase_conjugate(&self.inner.eigvals, &self.inner.eigvecs, s)
    }

    /// Diagonal of `e^{-iAs}` in the eigenbasis of `A`.
    pub fn phase_diagonal(&self, s: f64) -> Array1<Complex64> {
        self.inner
            .eigvals
            .mapv(|lambda| Complex64::from_polar(1.0, -lambda * s))
    }

    /// Interaction-picture Hamiltonian `H_I(t) = e^{iAt} B(t) e^{-iAt}`.
    pub fn interaction_hamiltonian(&self, t: f64) -> Result<HermitianOperator> {
        HermitianOperator::new(self.from_a_basis(&self.interaction_in_basis(t)))
    }

    /// `H_I(t)` expressed in the eigenbasis of `A`, where the conjugation
    /// is an elementwise phase twist: entry `(p,q)` picks up
    /// `e^{i(λ_p - λ_q) t}`.
    pub fn interaction_in_basis(&self, t: f64) -> Array2<Complex64> {
        match &self.inner.b_in_basis {
            Some(cached) => phase_twist(&self.inner.eigvals, cached, t),
            None => {
                let b = self.to_a_basis(&self.inner.b.evaluate_raw(t));
                phase_twist(&self.inner.eigvals, &b, t)
            }
        }
    }

    /// The interaction-picture Hamiltonian as a `TimeDependentHamiltonian`
    /// with `alpha = alpha_B`, `beta = alpha_AB + beta_B` and an analytic
    /// derivative `e^{iAt} (i[A, B(t)] + B'(t)) e^{-iAt}`.
    pub fn interaction_picture(&self) -> TimeDependentHamiltonian {
        let sys = self.clone();
        let eval = move |t: f64| sys.from_a_basis(&sys.interaction_in_basis(t));
        let sys_d = self.clone();
        let deriv = move |t: f64| -> Array2<Complex64> {
            let b = sys_d.inner.b.evaluate_raw(t);
            let i_comm = commutator(sys_d.inner.a.matrix(), &b)
                .expect("split system dims agree")
                .mapv(|z| z * Complex64::new(0.0, 1.0));
            let core = i_comm + sys_d.inner.b.derivative_raw(t);
            let in_basis = phase_twist(&sys_d.inner.eigvals, &sys_d.to_a_basis(&core), t);
            sys_d.from_a_basis(&in_basis)
        };
        TimeDependentHamiltonian {
            inner: Arc::new(TdhInner {
                dim: self.dim(),
                horizon: self.inner.b.horizon(),
                eval: Box::new(eval),
                deriv: Some(Box::new(deriv)),
                alpha: self.inner.alpha_b,
                beta: self.inner.alpha_ab + self.inner.beta_b,
                time_independent: false,
            }),
        }
    }

    /// `A + B(t)` as a raw matrix.
    pub fn total_hamiltonian_raw(&self, t: f64) -> Array2<Complex64> {
        self.inner.a.matrix() + &self.inner.b.evaluate_raw(t)
    }
}

/// Elementwise `e^{i(λ_p - λ_q)t} m_{pq}`, i.e. `e^{iΛt} M e^{-iΛt}` for
/// diagonal `Λ`.
pub(crate) fn phase_twist(
    eigvals: &Array1<f64>,
    m: &Array2<Complex64>,
    t: f64,
) -> Array2<Complex64> {
    let phases: Vec<Complex64> = eigvals
        .iter()
        .map(|&l| Complex64::from_polar(1.0, l * t))
        .collect();
    let n = m.nrows();
    let mut out = m.clone();
    for p in 0..n {
        let fp = phases[p];
        let mut row = out.row_mut(p);
        for q in 0..n {
            row[q] *= fp * phases[q].conj();
        }
    }
    out
}

/// Unit-norm complex state vector.
#[derive(Debug, Clone)]
pub struct StateVector {
    amps: Array1<Complex64>,
}

impl StateVector {
    pub fn new(amps: Array1<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite { context: "state amplitudes" });
        }
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    pub fn from_unnormalized(amps: Array1<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self {
            amps: amps.mapv(|z| z / norm),
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amps
    }
}

/// Grid points `x_j = -π + j·Δx`, `Δx = 2π/N` (left-closed periodic grid).
pub fn grid_points(n: usize) -> Array1<f64> {
    let dx = 2.0 * PI / n as f64;
    Array1::from_shape_fn(n, |j| -PI + j as f64 * dx)
}

/// Periodic second-order finite-difference Laplacian `-Δ` on `[-π, π)`:
/// circulant with stencil `(-1, 2, -1)/Δx²`.
pub fn fd_laplacian(n: usize) -> Result<HermitianOperator> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 4, got {n}"
        )));
    }
    let dx = 2.0 * PI / n as f64;
    let inv = 1.0 / (dx * dx);
    let mut mat = Array2::zeros((n, n));
    for j in 0..n {
        mat[[j, j]] = Complex64::new(2.0 * inv, 0.0);
        mat[[j, (j + 1) % n]] = Complex64::new(-inv, 0.0);
        mat[[(j + 1) % n, j]] = Complex64::new(-inv, 0.0);
    }
    HermitianOperator::new(mat)
}

/// Analytic spectrum of [`fd_laplacian`]: eigenvalues
/// `λ_k = 2(1 - cos(2πk/N))/Δx²` with discrete Fourier eigenvectors.
pub fn fd_laplacian_spectrum(n: usize) -> (Array1<f64>, Array2<Complex64>) {
    let dx = 2.0 * PI / n as f64;
    let inv = 1.0 / (dx * dx);
    let vals = Array1::from_shape_fn(n, |k| {
        2.0 * inv * (1.0 - (2.0 * PI * k as f64 / n as f64).cos())
    });
    let scale = 1.0 / (n as f64).sqrt();
    let vecs = Array2::from_shape_fn((n, n), |(j, k)| {
        Complex64::from_polar(scale, 2.0 * PI * (j as f64) * (k as f64) / n as f64)
    });
    (vals, vecs)
}

/// Diagonal potential matrix `diag(V(x_j))` on the periodic grid.
pub fn potential_on_grid(n: usize, v: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 4, got {n}"
        )));
    }
    let xs = grid_points(n);
    let diag: Vec<f64> = xs.iter().map(|&x| v(x)).collect();
    if diag.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "potential values" });
    }
    HermitianOperator::from_real_diagonal(&diag)
}

/// Grid samples of `exp(-width (x-center)²) · exp(i freq (x-center))`,
/// normalized to unit 2-norm.
pub fn wavepacket(n: usize, center: f64, width: f64, freq: f64) -> Result<StateVector> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be at least 4, got {n}"
        )));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wavepacket width must be positive, got {width}"
        )));
    }
    let xs = grid_points(n);
    let amps = Array1::from_shape_fn(n, |j| {
        let d = xs[j] - center;
        Complex64::from_polar((-width * d * d).exp(), freq * d)
    });
    StateVector::from_unnormalized(amps)
}

/// Split system for the periodic Schrödinger Hamiltonian
/// `-Δ + V(x)` with a time-independent potential, using the analytic
/// circulant spectrum for `A`.
pub fn schrodinger_split_system(
    n: usize,
    v: impl Fn(f64) -> f64,
    horizon: f64,
) -> Result<SplitSystem> {
    let a = fd_laplacian(n)?;
    let (vals, vecs) = fd_laplacian_spectrum(n);
    let b = potential_on_grid(n, v)?;
    let b_td = TimeDependentHamiltonian::constant(b, horizon)?;
    SplitSystem::with_spectrum(a, vals, vecs, b_td, SplitBounds::Measured)
}

/// The cos(4x) potential used throughout the desk-scale studies.
pub fn cos4x(x: f64) -> f64 {
    (4.0 * x).cos()
}
