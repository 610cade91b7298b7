//! Matrix-level emulation of block encodings: a matrix `X` with `‖X‖ ≤ α`
//! is carried as the top-left block of a unitary on `2^{n_a}·d` dimensions,
//! `U ≈ [[X/α, ·], [·, ·]]`. This module builds the dilation of a
//! contraction, the product of two encodings, the time-sample select
//! oracle, the Hadamard-sandwich average, and the interaction-picture
//! select oracle assembled from controlled fast-forward phases.
//!
//! Register order is fixed as (ancilla ⊗ control ⊗ system), so the encoded
//! block always sits in the leading rows and columns. Everything here is a
//! verification surface exercised at small dimensions; Hamiltonian
//! simulation of an encoded block is emulated by the exact exponential
//! with the error budget carried in the encoding record.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::SplitSystem;
use crate::operator::{adjoint, backend, spectral_norm, UnitaryMatrix};

/// Unitary of dimension `2^{n_ancilla} · sys_dim` whose leading block
/// approximates `encoded/alpha` to within `epsilon/alpha`.
#[derive(Debug, Clone)]
pub struct BlockEncoding {
    unitary: UnitaryMatrix,
    alpha: f64,
    n_ancilla: u32,
    epsilon: f64,
    sys_dim: usize,
}

impl BlockEncoding {
    pub fn new(
        unitary: UnitaryMatrix,
        alpha: f64,
        n_ancilla: u32,
        epsilon: f64,
        sys_dim: usize,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "block-encoding factor must be positive, got {alpha}"
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "block-encoding error must be nonnegative, got {epsilon}"
            )));
        }
        let expected = (1usize << n_ancilla)
            .checked_mul(sys_dim)
            .ok_or_else(|| Error::InvalidParameter("encoding dimension overflow".into()))?;
        if unitary.dim() != expected {
            return Err(Error::DimensionMismatch {
                left: unitary.dim(),
                right: expected,
            });
        }
        let be = Self {
            unitary,
            alpha,
            n_ancilla,
            epsilon,
            sys_dim,
        };
        let block_norm = spectral_norm(&be.extract_block());
        if block_norm > 1.0 + 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "encoded block has norm {block_norm} > 1"
            )));
        }
        Ok(be)
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.unitary
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_ancilla(&self) -> u32 {
        self.n_ancilla
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    /// `(⟨0|^{⊗n_a} ⊗ I) U (|0⟩^{⊗n_a} ⊗ I)`: the leading
    /// `sys_dim × sys_dim` block.
    pub fn extract_block(&self) -> Array2<Complex64> {
        let d = self.sys_dim;
        let m = self.unitary.matrix();
        Array2::from_shape_fn((d, d), |(i, j)| m[[i, j]])
    }

    /// The encoded matrix estimate `α · extract_block()`.
    pub fn encoded(&self) -> Array2<Complex64> {
        self.extract_block().mapv(|z| z * self.alpha)
    }
}

/// Exact `(α, 1, 0)` encoding of a matrix with `‖X‖ ≤ α` by unitary
/// completion of the contraction `C = X/α`:
///
/// `U = [[C, √(I-CC†)], [√(I-C†C), -C†]]`
///
/// with the square roots taken through the SVD of `C`.
pub fn dilate(x: &Array2<Complex64>, alpha: f64) -> Result<BlockEncoding> {
    let d = crate::operator::check_square(x)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dilation factor must be positive, got {alpha}"
        )));
    }
    let norm = spectral_norm(x);
    if norm > alpha * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "cannot dilate: ‖X‖ = {norm} exceeds alpha = {alpha}"
        )));
    }
    let c = x.mapv(|z| z / alpha);
    let (u, sigma, vt) = backend::svd_full(&c)?;
    // √(1-σ²) clamped at zero for σ within roundoff of 1.
    let root: Vec<f64> = sigma.iter().map(|&s| (1.0 - s * s).max(0.0).sqrt()).collect();
    let v = adjoint(&vt);
    let scale_cols = |m: &Array2<Complex64>, diag: &[f64]| -> Array2<Complex64> {
        let mut out = m.clone();
        for (k, &s) in diag.iter().enumerate() {
            out.column_mut(k).mapv_inplace(|z| z * s);
        }
        out
    };
    let top_right = scale_cols(&u, &root).dot(&adjoint(&u));
    let bottom_left = scale_cols(&v, &root).dot(&vt);
    let c_dag = adjoint(&c);

    let mut full = Array2::zeros((2 * d, 2 * d));
    for i in 0..d {
        for j in 0..d {
            full[[i, j]] = c[[i, j]];
            full[[i, j + d]] = top_right[[i, j]];
            full[[i + d, j]] = bottom_left[[i, j]];
            full[[i + d, j + d]] = -c_dag[[i, j]];
        }
    }
    BlockEncoding::new(UnitaryMatrix::new(full)?, alpha, 1, 0.0, d)
}

/// Product of two encodings: if `U_A` encodes `A` as `(α, n_a, δ)` and
/// `U_B` encodes `B` as `(β, n_b, ε)`, the assembled unitary encodes `AB`
/// as `(αβ, n_a + n_b, αε + βδ)`. The two ancilla registers are kept
/// separate, with `U_B`'s register leading.
pub fn product(u_a: &BlockEncoding, u_b: &BlockEncoding) -> Result<BlockEncoding> {
    if u_a.sys_dim() != u_b.sys_dim() {
        return Err(Error::DimensionMismatch {
            left: u_a.sys_dim(),
            right: u_b.sys_dim(),
        });
    }
    let d = u_a.sys_dim();
    let anc_a = 1usize << u_a.n_ancilla();
    let anc_b = 1usize << u_b.n_ancilla();
    let total = anc_a * anc_b * d;
    let ma = u_a.unitary().matrix();
    let mb = u_b.unitary().matrix();

    // (I_b ⊗ U_A): acts on (a, s) for each fixed b index.
    let mut lift_a = Array2::zeros((total, total));
    for b in 0..anc_b {
        for a_row in 0..anc_a {
            for s_row in 0..d {
                let row = (b * anc_a + a_row) * d + s_row;
                for a_col in 0..anc_a {
                    for s_col in 0..d {
                        let col = (b * anc_a + a_col) * d + s_col;
                        lift_a[[row, col]] = ma[[a_row * d + s_row, a_col * d + s_col]];
                    }
                }
            }
        }
    }
    // (I_a ⊗ U_B) in the same (b, a, s) ordering: acts on (b, s) for each a.
    let mut lift_b = Array2::zeros((total, total));
    for a in 0..anc_a {
        for b_row in 0..anc_b {
            for s_row in 0..d {
                let row = (b_row * anc_a + a) * d + s_row;
                for b_col in 0..anc_b {
                    for s_col in 0..d {
                        let col = (b_col * anc_a + a) * d + s_col;
                        lift_b[[row, col]] = mb[[b_row * d + s_row, b_col * d + s_col]];
                    }
                }
            }
        }
    }
    let combined = lift_a.dot(&lift_b);
    BlockEncoding::new(
        UnitaryMatrix::new(combined)?,
        u_a.alpha() * u_b.alpha(),
        u_a.n_ancilla() + u_b.n_ancilla(),
        u_a.alpha() * u_b.epsilon() + u_b.alpha() * u_a.epsilon(),
        d,
    )
}

/// A select oracle over `m` time samples: a block encoding whose system
/// register is (control ⊗ system) and whose encoded block is
/// `Σ_k |k⟩⟨k| ⊗ H_k / α`.
#[derive(Debug, Clone)]
pub struct SelectOracle {
    encoding: BlockEncoding,
    m: usize,
    d: usize,
}

impl SelectOracle {
    pub fn encoding(&self) -> &BlockEncoding {
        &self.encoding
    }

    pub fn sample_count(&self) -> usize {
        self.m
    }

    pub fn system_dim(&self) -> usize {
        self.d
    }

    /// The `k`-th diagonal sub-block of the encoded select matrix.
    pub fn extract_sample_block(&self, k: usize) -> Array2<Complex64> {
        let d = self.d;
        let m = self.encoding.unitary().matrix();
        Array2::from_shape_fn((d, d), |(i, j)| m[[k * d + i, k * d + j]])
    }
}

/// Select oracle from explicit samples: block-diagonal over the control
/// register with the dilation of each `H_k/α` in place. Requires the
/// sample count to be a power of two.
pub fn ham_t(samples: &[Array2<Complex64>], alpha: f64) -> Result<SelectOracle> {
    let m = samples.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "sample count must be a nonzero power of two, got {m}"
        )));
    }
    let d = crate::operator::check_square(&samples[0])?;
    let mut dilations = Vec::with_capacity(m);
    for s in samples {
        if crate::operator::check_square(s)? != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: s.nrows(),
            });
        }
        dilations.push(dilate(s, alpha)?);
    }
    // Layout (a, k, s): row = a·(m·d) + k·d + s. Each dilation occupies the
    // (a, a') blocks of its own k.
    let total = 2 * m * d;
    let mut full = Array2::zeros((total, total));
    for (k, enc) in dilations.iter().enumerate() {
        let u = enc.unitary().matrix();
        for a_row in 0..2 {
            for a_col in 0..2 {
                for i in 0..d {
                    for j in 0..d {
                        full[[a_row * m * d + k * d + i, a_col * m * d + k * d + j]] =
                            u[[a_row * d + i, a_col * d + j]];
                    }
                }
            }
        }
    }
    let encoding = BlockEncoding::new(UnitaryMatrix::new(full)?, alpha, 1, 0.0, m * d)?;
    Ok(SelectOracle { encoding, m, d })
}

/// `m × m` Hadamard transform (tensor power of the 2×2 Hadamard).
fn hadamard_transform(m: usize) -> Array2<Complex64> {
    let scale = 1.0 / (m as f64).sqrt();
    Array2::from_shape_fn((m, m), |(i, j)| {
        let parity = (i & j).count_ones() % 2;
        let sign = if parity == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * scale, 0.0)
    })
}

/// The Hadamard sandwich around a select oracle: projecting the control
/// register on `|0⟩^{⊗log m}` after `(I_a ⊗ HAD^{⊗} ⊗ I_s)·SELECT·(...)`
/// turns the select into the uniform average, so the result encodes
/// `(1/m)Σ_k H_k` with the same factor `α` and `log2(m)` extra ancillas.
pub fn lcu_average(select: &SelectOracle) -> Result<BlockEncoding> {
    let m = select.sample_count();
    let d = select.system_dim();
    let anc = 1usize << select.encoding().n_ancilla();
    let total = anc * m * d;
    let had = hadamard_transform(m);
    // I_a ⊗ HAD ⊗ I_d
    let mut sandwich = Array2::zeros((total, total));
    for a in 0..anc {
        for k_row in 0..m {
            for k_col in 0..m {
                let val = had[[k_row, k_col]];
                if val.norm_sqr() == 0.0 {
                    continue;
                }
                for s in 0..d {
                    sandwich[[(a * m + k_row) * d + s, (a * m + k_col) * d + s]] = val;
                }
            }
        }
    }
    let u = select.encoding().unitary().matrix();
    let combined = sandwich.dot(u).dot(&sandwich);
    let log_m = m.trailing_zeros();
    BlockEncoding::new(
        UnitaryMatrix::new(combined)?,
        select.encoding().alpha(),
        select.encoding().n_ancilla() + log_m,
        select.encoding().epsilon(),
        d,
    )
}

/// Interaction-picture select oracle for a split system on segment `j`:
///
/// `(I ⊗ I ⊗ e^{iAjh}) (I ⊗ R_A) O_B (I ⊗ R_A†) (I ⊗ I ⊗ e^{-iAjh})`
///
/// where `R_A = Σ_k |k⟩⟨k| ⊗ e^{iA·kh/m}` and `O_B` is the select oracle
/// over the `B(jh + kh/m)` samples. The encoded blocks are the interaction
/// Hamiltonian samples `H_I(jh + kh/m)/α_B`.
pub fn interaction_ham_t(sys: &SplitSystem, j: usize, h: f64, m: usize) -> Result<SelectOracle> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {h}"
        )));
    }
    let d = sys.dim();
    let samples: Vec<Array2<Complex64>> = (0..m)
        .map(|k| sys.b().evaluate_raw(j as f64 * h + k as f64 * h / m as f64))
        .collect();
    let o_b = ham_t(&samples, sys.alpha_b())?;

    // R_A lifted over the dilation ancilla: block diagonal in (a, k).
    let total = 2 * m * d;
    let mut lift_ra = Array2::zeros((total, total));
    let mut lift_ra_dag = Array2::zeros((total, total));
    for k in 0..m {
        let phase = sys.fast_forward_raw(-(k as f64) * h / m as f64); // e^{+iA kh/m}
        let phase_dag = adjoint(&phase);
        for a in 0..2 {
            for i in 0..d {
                for jj in 0..d {
                    lift_ra[[(a * m + k) * d + i, (a * m + k) * d + jj]] = phase[[i, jj]];
                    lift_ra_dag[[(a * m + k) * d + i, (a * m + k) * d + jj]] = phase_dag[[i, jj]];
                }
            }
        }
    }
    // outer frames e^{±iAjh} on the system register only
    let frame = sys.fast_forward_raw(-(j as f64) * h); // e^{+iAjh}
    let frame_dag = adjoint(&frame);
    let mut lift_frame = Array2::zeros((total, total));
    let mut lift_frame_dag = Array2::zeros((total, total));
    for ak in 0..(2 * m) {
        for i in 0..d {
            for jj in 0..d {
                lift_frame[[ak * d + i, ak * d + jj]] = frame[[i, jj]];
                lift_frame_dag[[ak * d + i, ak * d + jj]] = frame_dag[[i, jj]];
            }
        }
    }
    let combined = lift_frame
        .dot(&lift_ra)
        .dot(o_b.encoding().unitary().matrix())
        .dot(&lift_ra_dag)
        .dot(&lift_frame_dag);
    let encoding = BlockEncoding::new(
        UnitaryMatrix::new(combined)?,
        sys.alpha_b(),
        1,
        0.0,
        m * d,
    )?;
    Ok(SelectOracle { encoding, m, d })
}
