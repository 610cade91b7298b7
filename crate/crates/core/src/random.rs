//! Seeded generators for synthetic problem instances: random Hermitian and
//! unitary matrices, states, densities, and oscillatory time-dependent
//! Hamiltonians. Used by the channel-distance probes and throughout the
//! test suites.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use crate::hamiltonian::{StateVector, TimeDependentHamiltonian};
use crate::operator::{adjoint, herm_exp, HermitianOperator, UnitaryMatrix};

/// Standard normal via Box-Muller.
pub fn randn<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn ginibre<R: Rng>(dim: usize, rng: &mut R) -> Array2<Complex64> {
    Array2::from_shape_fn((dim, dim), |_| Complex64::new(randn(rng), randn(rng)))
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(dim, rng);
    let sym = (&g + &adjoint(&g)).mapv(|z| z * 0.5);
    HermitianOperator::new(sym).expect("symmetrized matrix is Hermitian")
}

/// Random Hermitian matrix rescaled to a target spectral norm.
pub fn random_hermitian_with_norm<R: Rng>(
    dim: usize,
    target_norm: f64,
    rng: &mut R,
) -> HermitianOperator {
    let h = random_hermitian(dim, rng);
    let norm = h.spectral_norm();
    if norm == 0.0 {
        return h;
    }
    let scaled = h.matrix().mapv(|z| z * (target_norm / norm));
    HermitianOperator::new(scaled).expect("rescaling preserves hermiticity")
}

/// Haar-ish random unitary: the time-one exponential of a random Hermitian.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    let h = random_hermitian(dim, rng);
    herm_exp(&h, 1.0).expect("exponential of a random Hermitian")
}

/// Random unit vector.
pub fn random_pure_state<R: Rng>(dim: usize, rng: &mut R) -> StateVector {
    let v = Array1::from_shape_fn(dim, |_| Complex64::new(randn(rng), randn(rng)));
    StateVector::from_unnormalized(v).expect("Gaussian vector is nonzero w.p. 1")
}

/// Oscillatory time-dependent Hamiltonian with an analytic derivative:
/// `H(t) = H0 + cos(ω1 t + φ) H1 + sin(ω2 t) H2`.
///
/// `frequency_scale` sets the magnitude of ω1, ω2, so `‖H'‖` can be made
/// large while `‖H‖` stays of order one.
pub fn oscillatory_hamiltonian<R: Rng>(
    dim: usize,
    horizon: f64,
    frequency_scale: f64,
    rng: &mut R,
) -> TimeDependentHamiltonian {
    let h0 = random_hermitian(dim, rng).into_matrix();
    let h1 = random_hermitian(dim, rng).into_matrix();
    let h2 = random_hermitian(dim, rng).into_matrix();
    let w1 = frequency_scale * (0.5 + rng.random::<f64>());
    let w2 = frequency_scale * (0.5 + rng.random::<f64>());
    let phi = std::f64::consts::TAU * rng.random::<f64>();

    let (e0, e1, e2) = (h0.clone(), h1.clone(), h2.clone());
    let eval = move |t: f64| -> Array2<Complex64> {
        let c = (w1 * t + phi).cos();
        let s = (w2 * t).sin();
        &e0 + &e1.mapv(|z| z * c) + &e2.mapv(|z| z * s)
    };
    let deriv = move |t: f64| -> Array2<Complex64> {
        let dc = -w1 * (w1 * t + phi).sin();
        let ds = w2 * (w2 * t).cos();
        h1.mapv(|z| z * dc) + h2.mapv(|z| z * ds)
    };

    TimeDependentHamiltonian::with_measured_bounds(dim, horizon, eval, Some(Box::new(deriv)))
        .expect("oscillatory family is well formed")
}
