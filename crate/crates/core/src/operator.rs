//! Dense complex-matrix substrate: Hermitian/unitary newtypes, matrix
//! exponentials via eigenfactorization, spectral norms, commutators and
//! operator distances.
//!
//! All exponentials in scope have Hermitian exponents, so `herm_exp` works
//! through a spectral factorization and the result is unitary by
//! construction (unit-modulus eigenphases). Scaling-and-squaring is never
//! needed.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative max-norm tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Spectral-norm tolerance on `U†U - I` for accepting a matrix as unitary.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Dimension above which `spectral_norm` switches from full SVD to power
/// iteration on `A†A`.
const SVD_DIM_LIMIT: usize = 256;

pub(crate) fn check_square(m: &Array2<Complex64>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}

pub(crate) fn check_same_dim(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<usize> {
    let n = check_square(a)?;
    let m = check_square(b)?;
    if n != m {
        return Err(Error::DimensionMismatch { left: n, right: m });
    }
    Ok(n)
}

/// Conjugate transpose.
pub fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

pub fn identity(dim: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0))
}

pub fn frobenius_norm(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_norm(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_residual(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Largest singular value.
///
/// Full SVD up to dimension 256; power iteration on `A†A` above that
/// (tolerance 1e-12 on the Rayleigh estimate, at most 10^4 iterations).
/// Total on every square input: if the iteration stalls the best estimate
/// so far is returned.
pub fn spectral_norm(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= SVD_DIM_LIMIT {
        backend::largest_singular_value(m)
    } else {
        power_iteration_norm(m)
    }
}

/// Block power iteration on `A†A` with Rayleigh-Ritz extraction. The
/// block absorbs clustered or paired top singular values (commutators of
/// Hermitian matrices have their spectrum in ± pairs), which would stall a
/// single-vector iteration.
fn power_iteration_norm(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let block = 4.min(n);
    // Deterministic quasi-random start block; generic position w.p. 1.
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Array2<Complex64> =
        Array2::from_shape_fn((n, block), |_| Complex64::new(next(), next()));
    orthonormalize(&mut v);
    let mh = adjoint(m);
    let mut sigma = 0.0f64;
    for _ in 0..10_000 {
        let y = mh.dot(&m.dot(&v));
        // Rayleigh-Ritz on the block: top eigenvalue of V†(A†A)V.
        let small = Array2::from_shape_fn((block, block), |(i, j)| {
            v.column(i)
                .iter()
                .zip(y.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        let small_h = (&small + &adjoint(&small)).mapv(|z| z * 0.5);
        let top = match backend::eigh(&small_h) {
            Ok((vals, _)) => vals[vals.len() - 1].max(0.0),
            Err(_) => 0.0,
        };
        let new_sigma = top.sqrt();
        v = y;
        if !orthonormalize(&mut v) {
            return 0.0;
        }
        if (new_sigma - sigma).abs() <= 1e-12 * new_sigma.max(f64::MIN_POSITIVE) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Modified Gram-Schmidt; returns false if the block degenerates.
fn orthonormalize(v: &mut Array2<Complex64>) -> bool {
    let cols = v.ncols();
    for j in 0..cols {
        for i in 0..j {
            let proj: Complex64 = v
                .column(i)
                .iter()
                .zip(v.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let vi = v.column(i).to_owned();
            v.column_mut(j).zip_mut_with(&vi, |b, a| *b -= proj * a);
        }
        let norm = v.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return false;
        }
        v.column_mut(j).mapv_inplace(|z| z / norm);
    }
    true
}

/// `AB - BA`.
pub fn commutator(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    check_same_dim(a, b)?;
    Ok(a.dot(b) - b.dot(a))
}

/// Spectral-norm distance `‖A - B‖`.
pub fn operator_distance(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(spectral_norm(&(a - b)))
}

/// Square complex matrix with no symmetry constraint. Houses non-unitary
/// step operators (truncated Dyson) and commutators.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    mat: Array2<Complex64>,
}

impl LinearOperator {
    pub fn new(mat: Array2<Complex64>) -> Result<Self> {
        check_square(&mat)?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "linear operator entries",
            });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.mat
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            mat: commutator(&self.mat, &other.mat)?,
        })
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        operator_distance(&self.mat, &other.mat)
    }
}

/// Dense Hermitian matrix. Construction rejects inputs whose hermiticity
/// residual exceeds `HERMITICITY_TOL` relative to the max-norm; violating
/// inputs are rejected, not repaired.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    mat: Array2<Complex64>,
}

impl HermitianOperator {
    pub fn new(mat: Array2<Complex64>) -> Result<Self> {
        check_square(&mat)?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "hermitian operator entries",
            });
        }
        let scale = max_norm(&mat);
        let residual = hermiticity_residual(&mat);
        if residual > HERMITICITY_TOL * scale.max(1e-300) && residual > 0.0 {
            return Err(Error::NotHermitian {
                residual,
                tolerance: HERMITICITY_TOL * scale,
            });
        }
        Ok(Self { mat })
    }

    /// Diagonal Hermitian matrix from real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "diagonal entries",
            });
        }
        let n = diag.len();
        let mut mat = Array2::zeros((n, n));
        for (i, &d) in diag.iter().enumerate() {
            mat[[i, i]] = Complex64::new(d, 0.0);
        }
        Ok(Self { mat })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            mat: Array2::zeros((dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.mat
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    pub fn as_linear(&self) -> LinearOperator {
        LinearOperator {
            mat: self.mat.clone(),
        }
    }

    /// Eigenfactorization with eigenvalues sorted ascending.
    pub fn eigendecompose(&self) -> Result<(Array1<f64>, Array2<Complex64>)> {
        backend::eigh(&self.mat)
    }
}

/// Dense unitary matrix. Construction rejects inputs with
/// `‖U†U - I‖ > UNITARITY_TOL`.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    mat: Array2<Complex64>,
}

impl UnitaryMatrix {
    pub fn new(mat: Array2<Complex64>) -> Result<Self> {
        check_square(&mat)?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "unitary matrix entries",
            });
        }
        let gram = adjoint(&mat).dot(&mat) - identity(mat.nrows());
        // Frobenius bounds the spectral norm from above; only fall back to
        // the exact spectral norm when the cheap bound fails.
        let fro = frobenius_norm(&gram);
        if fro > UNITARITY_TOL {
            let exact = spectral_norm(&gram);
            if exact > UNITARITY_TOL {
                return Err(Error::NotUnitary {
                    residual: exact,
                    tolerance: UNITARITY_TOL,
                });
            }
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: adjoint(&self.mat),
        }
    }

    pub fn as_linear(&self) -> LinearOperator {
        LinearOperator {
            mat: self.mat.clone(),
        }
    }
}

/// `e^{-iHt}` through the spectral factorization of `H`.
pub fn herm_exp(h: &HermitianOperator, t: f64) -> Result<UnitaryMatrix> {
    if !t.is_finite() {
        return Err(Error::NonFinite { context: "herm_exp time" });
    }
    UnitaryMatrix::new(herm_exp_raw(h.matrix(), t)?)
}

/// Exponential on a raw array, skipping the constructor re-checks. The
/// input must already be Hermitian; hot loops (reference micro-stepping,
/// eigenbasis compositions) go through here.
pub(crate) fn herm_exp_raw(mat: &Array2<Complex64>, t: f64) -> Result<Array2<Complex64>> {
    let (vals, vecs) = backend::eigh(mat)?;
    Ok(phase_conjugate(&vals, &vecs, t))
}

/// `V diag(e^{-i λ t}) V†` from a precomputed spectral factorization.
pub(crate) fn phase_conjugate(
    vals: &Array1<f64>,
    vecs: &Array2<Complex64>,
    t: f64,
) -> Array2<Complex64> {
    let mut scaled = vecs.clone();
    for (k, &lambda) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        scaled.column_mut(k).mapv_inplace(|z| z * phase);
    }
    scaled.dot(&adjoint(vecs))
}

pub(crate) mod backend {
    //! nalgebra bridge for the two factorizations that need an iterative
    //! algorithm (Hermitian eigendecomposition, SVD). Everything else stays
    //! on ndarray, whose complex matmul is considerably faster.

    use super::*;
    use nalgebra::DMatrix;

    fn to_nalgebra(m: &Array2<Complex64>) -> DMatrix<Complex64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
    }

    /// Hermitian eigendecomposition, eigenvalues ascending, eigenvectors as
    /// columns. Fails with the reconstruction residual if the QR iteration
    /// does not converge or loses accuracy.
    pub(crate) fn eigh(m: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::EigenFailure { residual: f64::NAN });
        }
        let se = to_nalgebra(m)
            .try_symmetric_eigen(f64::EPSILON, 100_000)
            .ok_or(Error::EigenFailure {
                residual: f64::INFINITY,
            })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let vals = Array1::from_iter(order.iter().map(|&k| se.eigenvalues[k]));
        let vecs = Array2::from_shape_fn((n, n), |(i, j)| se.eigenvectors[(i, order[j])]);
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::EigenFailure { residual: f64::NAN });
        }
        Ok((vals, vecs))
    }

    pub(crate) fn largest_singular_value(m: &Array2<Complex64>) -> f64 {
        let svd = to_nalgebra(m).svd(false, false);
        svd.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// All singular values, descending.
    pub(crate) fn singular_values(m: &Array2<Complex64>) -> Vec<f64> {
        let svd = to_nalgebra(m).svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Thin SVD with factors, for unitary completion of contractions.
    pub(crate) fn svd_full(
        m: &Array2<Complex64>,
    ) -> Result<(Array2<Complex64>, Vec<f64>, Array2<Complex64>)> {
        let n = m.nrows();
        let svd = to_nalgebra(m)
            .try_svd(true, true, f64::EPSILON, 100_000)
            .ok_or(Error::EigenFailure {
                residual: f64::INFINITY,
            })?;
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        let u_arr = Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]);
        let vt_arr = Array2::from_shape_fn((n, n), |(i, j)| vt[(i, j)]);
        Ok((u_arr, sigma, vt_arr))
    }
}
