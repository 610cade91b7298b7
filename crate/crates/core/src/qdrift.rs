//! Continuous qDRIFT: a stochastic mixed-unitary channel that samples a
//! time `τ` with density proportional to `‖H(τ)‖` and applies
//! `e^{-iH(τ)/p(τ)}`. The deterministic form discretizes the mixture on a
//! trapezoid grid; the sampling form draws `τ` by inverse CDF from the
//! piecewise-linear interpolation of the same density.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{StateVector, TimeDependentHamiltonian};
use crate::operator::{adjoint, backend, herm_exp_raw, spectral_norm, UnitaryMatrix};

/// Minimum admissible `‖H(τ)‖` at a quadrature node; below this the
/// sampling density is ill-defined.
const NORM_FLOOR: f64 = 1e-12;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: Array2<Complex64>,
}

impl DensityMatrix {
    pub fn new(mat: Array2<Complex64>) -> Result<Self> {
        let herm = crate::operator::HermitianOperator::new(mat)
            .map_err(|e| Error::NotDensity { reason: e.to_string() })?;
        let trace: Complex64 = herm.matrix().diag().sum();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-12 {
            return Err(Error::NotDensity {
                reason: format!("trace {} is not 1", trace.re),
            });
        }
        let (vals, _) = herm.eigendecompose()?;
        if vals.iter().any(|&l| l < -1e-10) {
            return Err(Error::NotDensity {
                reason: format!("negative eigenvalue {:.3e}", vals[0]),
            });
        }
        Ok(Self {
            mat: herm.into_matrix(),
        })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let n = psi.dim();
        let a = psi.amplitudes();
        let mat = Array2::from_shape_fn((n, n), |(i, j)| a[i] * a[j].conj());
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diag().sum().re
    }
}

/// `ρ ↦ Σ_q w_q U_q ρ U_q†` with `w_q ≥ 0`, `Σ w_q = 1`.
#[derive(Debug, Clone)]
pub struct MixedUnitaryChannel {
    dim: usize,
    terms: Vec<(f64, Array2<Complex64>)>,
}

impl MixedUnitaryChannel {
    /// Exact conjugation channel `ρ ↦ UρU†`.
    pub fn unitary_conjugation(u: &UnitaryMatrix) -> Self {
        Self {
            dim: u.dim(),
            terms: vec![(1.0, u.matrix().clone())],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(f64, Array2<Complex64>)] {
        &self.terms
    }

    pub fn apply_raw(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (w, u) in &self.terms {
            let conj = u.dot(rho).dot(&adjoint(u));
            out.scaled_add(Complex64::new(*w, 0.0), &conj);
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rho.dim(),
            });
        }
        DensityMatrix::new(self.apply_raw(rho.matrix()))
    }

    /// Row-major-vectorization superoperator `Σ w_q U_q ⊗ conj(U_q)`,
    /// a `d²×d²` matrix with `S vec(ρ) = vec(Σ w UρU†)`.
    pub fn superoperator(&self) -> Array2<Complex64> {
        let d = self.dim;
        let mut s = Array2::zeros((d * d, d * d));
        for (w, u) in &self.terms {
            for i in 0..d {
                for k in 0..d {
                    let uik = u[[i, k]] * *w;
                    for j in 0..d {
                        for l in 0..d {
                            s[[i * d + j, k * d + l]] += uik * u[[j, l]].conj();
                        }
                    }
                }
            }
        }
        s
    }
}

/// Frobenius distance between superoperators of two channels.
pub fn superoperator_distance(a: &MixedUnitaryChannel, b: &MixedUnitaryChannel) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = a.superoperator() - b.superoperator();
    Ok(crate::operator::frobenius_norm(&diff))
}

/// Trace norm (sum of singular values).
pub fn trace_norm(m: &Array2<Complex64>) -> f64 {
    backend::singular_values(m).iter().sum()
}

/// Channel distance diagnostics: worst trace-norm output difference over
/// random pure probes plus the superoperator Frobenius distance. The exact
/// diamond norm is deliberately not computed.
#[derive(Debug, Clone, Copy)]
pub struct ChannelDistance {
    pub worst_trace_norm: f64,
    pub frobenius: f64,
}

pub fn channel_distance(
    a: &MixedUnitaryChannel,
    b: &MixedUnitaryChannel,
    probes: usize,
    seed: u64,
) -> Result<ChannelDistance> {
    use rand::SeedableRng;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let psi = crate::random::random_pure_state(a.dim(), &mut rng);
        let rho = DensityMatrix::from_pure(&psi);
        let da = a.apply_raw(rho.matrix());
        let db = b.apply_raw(rho.matrix());
        worst = worst.max(trace_norm(&(da - db)));
    }
    Ok(ChannelDistance {
        worst_trace_norm: worst,
        frobenius: superoperator_distance(a, b)?,
    })
}

/// Grid shared by the deterministic channel and the sampler: trapezoid
/// nodes `τ_q`, cell weights, node norms `‖H(τ_q)‖` and the resulting
/// `L¹`-norm estimate of `∫‖H‖`.
struct DensityGrid {
    taus: Vec<f64>,
    cell_weights: Vec<f64>,
    norms: Vec<f64>,
    total: f64,
}

fn density_grid(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    nodes: usize,
) -> Result<DensityGrid> {
    if nodes < 64 {
        return Err(Error::InvalidParameter(format!(
            "qDRIFT discretization needs at least 64 nodes, got {nodes}"
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "need t1 > t0, got [{t0}, {t1}]"
        )));
    }
    let span = t1 - t0;
    let cells = (nodes - 1) as f64;
    let taus: Vec<f64> = (0..nodes).map(|q| t0 + q as f64 * span / cells).collect();
    let cell_weights: Vec<f64> = (0..nodes)
        .map(|q| {
            let w = if q == 0 || q == nodes - 1 { 0.5 } else { 1.0 };
            w * span / cells
        })
        .collect();
    let norms: Vec<f64> = taus
        .iter()
        .map(|&t| spectral_norm(&h.evaluate_raw(t)))
        .collect();
    if let Some(&bad) = norms.iter().find(|&&n| n <= NORM_FLOOR) {
        return Err(Error::InvalidParameter(format!(
            "‖H(τ)‖ = {bad:.3e} vanishes on a node; sampling density undefined"
        )));
    }
    let total: f64 = cell_weights.iter().zip(&norms).map(|(c, n)| c * n).sum();
    Ok(DensityGrid {
        taus,
        cell_weights,
        norms,
        total,
    })
}

/// Deterministic continuous-qDRIFT channel on `[t0, t1]`, discretized as a
/// trapezoid mixture: `ρ ↦ Σ_q c_q p(τ_q) · e^{-iH(τ_q)/p(τ_q)} ρ e^{+...}`
/// with `p(τ) = ‖H(τ)‖ / ∫‖H‖`. Weights sum to 1 by construction, so the
/// channel is trace preserving to machine precision.
pub fn qdrift_channel(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    nodes: usize,
) -> Result<MixedUnitaryChannel> {
    let grid = density_grid(h, t0, t1, nodes)?;
    let mut terms = Vec::with_capacity(nodes);
    for q in 0..nodes {
        let p = grid.norms[q] / grid.total;
        let weight = grid.cell_weights[q] * p;
        let u = herm_exp_raw(&h.evaluate_raw(grid.taus[q]), 1.0 / p)?;
        terms.push((weight, u));
    }
    Ok(MixedUnitaryChannel {
        dim: h.dim(),
        terms,
    })
}

/// One random qDRIFT trajectory: draw `τ` from the piecewise-linear
/// density `p(τ) ∝ ‖H(τ)‖` and return `e^{-iH(τ)/p(τ)}`.
pub fn qdrift_sample<R: Rng>(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    nodes: usize,
    rng: &mut R,
) -> Result<UnitaryMatrix> {
    let grid = density_grid(h, t0, t1, nodes)?;
    let tau = sample_tau(&grid, rng.random::<f64>());
    // interpolated density at the drawn point
    let p = interp_norm(&grid, tau) / grid.total;
    UnitaryMatrix::new(herm_exp_raw(&h.evaluate_raw(tau), 1.0 / p)?)
}

/// Inverse CDF of the piecewise-linear density through `(τ_q, ‖H(τ_q)‖)`.
fn sample_tau(grid: &DensityGrid, unit: f64) -> f64 {
    let cells = grid.taus.len() - 1;
    let mut target = unit.clamp(0.0, 1.0 - 1e-16) * grid.total;
    for q in 0..cells {
        let dt = grid.taus[q + 1] - grid.taus[q];
        let d0 = grid.norms[q];
        let d1 = grid.norms[q + 1];
        let cell_mass = 0.5 * (d0 + d1) * dt;
        if target > cell_mass {
            target -= cell_mass;
            continue;
        }
        let slope = (d1 - d0) / dt;
        let x = if slope.abs() * dt < 1e-12 * d0 {
            target / d0
        } else {
            // solve d0·x + slope·x²/2 = target for x in [0, dt]
            let disc = (d0 * d0 + 2.0 * slope * target).max(0.0);
            (disc.sqrt() - d0) / slope
        };
        return grid.taus[q] + x.clamp(0.0, dt);
    }
    grid.taus[cells]
}

fn interp_norm(grid: &DensityGrid, tau: f64) -> f64 {
    let cells = grid.taus.len() - 1;
    for q in 0..cells {
        if tau <= grid.taus[q + 1] {
            let dt = grid.taus[q + 1] - grid.taus[q];
            let x = (tau - grid.taus[q]) / dt;
            return grid.norms[q] * (1.0 - x) + grid.norms[q + 1] * x;
        }
    }
    grid.norms[cells]
}

/// CDF of the sampling density at `tau`; exposed for distribution tests.
pub fn qdrift_sampling_cdf(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    nodes: usize,
    tau: f64,
) -> Result<f64> {
    let grid = density_grid(h, t0, t1, nodes)?;
    let mut acc = 0.0;
    let cells = grid.taus.len() - 1;
    for q in 0..cells {
        let dt = grid.taus[q + 1] - grid.taus[q];
        if tau >= grid.taus[q + 1] {
            acc += 0.5 * (grid.norms[q] + grid.norms[q + 1]) * dt;
        } else if tau > grid.taus[q] {
            let x = tau - grid.taus[q];
            let slope = (grid.norms[q + 1] - grid.norms[q]) / dt;
            acc += grid.norms[q] * x + 0.5 * slope * x * x;
            break;
        } else {
            break;
        }
    }
    Ok((acc / grid.total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Bounds;
    use crate::operator::{herm_exp, operator_distance, HermitianOperator};
    use crate::random::{random_hermitian, random_hermitian_with_norm, random_pure_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn oscillating(dim: usize, seed: u64) -> TimeDependentHamiltonian {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let h0 = random_hermitian_with_norm(dim, 1.0, &mut rng).into_matrix();
        let h1 = random_hermitian_with_norm(dim, 0.6, &mut rng).into_matrix();
        TimeDependentHamiltonian::new(
            dim,
            2.0,
            move |t: f64| {
                // offset keeps ‖H(t)‖ bounded away from zero
                &h0 + &h1.mapv(|z| z * (2.5 * t).sin())
            },
            None,
            Bounds::Declared { alpha: 1.7, beta: 1.6 },
        )
        .unwrap()
    }

    #[test]
    fn constant_hamiltonian_channel_is_exact_conjugation() {
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let h0 = random_hermitian(4, &mut rng);
        let td = TimeDependentHamiltonian::constant(h0.clone(), 1.0).unwrap();
        let h = 0.3;
        let channel = qdrift_channel(&td, 0.0, h, 64).unwrap();
        let exact = MixedUnitaryChannel::unitary_conjugation(&herm_exp(&h0, h).unwrap());
        let d = channel_distance(&channel, &exact, 8, 5).unwrap();
        assert!(d.worst_trace_norm < 1e-10, "{:?}", d);
        assert!(d.frobenius < 1e-10);
    }

    #[test]
    fn constant_hamiltonian_sample_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(72);
        let h0 = random_hermitian(4, &mut rng);
        let td = TimeDependentHamiltonian::constant(h0.clone(), 1.0).unwrap();
        let expect = herm_exp(&h0, 0.25).unwrap();
        for seed in 0..5 {
            let mut r = ChaCha12Rng::seed_from_u64(seed);
            let u = qdrift_sample(&td, 0.0, 0.25, 64, &mut r).unwrap();
            assert!(operator_distance(u.matrix(), expect.matrix()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn channel_is_trace_preserving_and_positive() {
        let td = oscillating(4, 73);
        let channel = qdrift_channel(&td, 0.0, 0.5, 64).unwrap();
        let weight_sum: f64 = channel.terms().iter().map(|(w, _)| *w).sum();
        assert!((weight_sum - 1.0).abs() < 1e-12);

        let mut rng = ChaCha12Rng::seed_from_u64(74);
        for _ in 0..6 {
            let rho = DensityMatrix::from_pure(&random_pure_state(4, &mut rng));
            let out = channel.apply(&rho).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-10);
            let herm = HermitianOperator::new(out.matrix().clone()).unwrap();
            let (vals, _) = herm.eigendecompose().unwrap();
            assert!(vals.iter().all(|&l| l >= -1e-10));
        }
    }

    #[test]
    fn vanishing_norm_is_rejected() {
        // H(t) = t·H0 vanishes at t = 0
        let mut rng = ChaCha12Rng::seed_from_u64(75);
        let h0 = random_hermitian(3, &mut rng).into_matrix();
        let td = TimeDependentHamiltonian::new(
            3,
            1.0,
            move |t: f64| h0.mapv(|z| z * t),
            None,
            Bounds::Declared { alpha: 10.0, beta: 10.0 },
        )
        .unwrap();
        assert!(matches!(
            qdrift_channel(&td, 0.0, 0.5, 64),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn node_count_below_64_is_rejected() {
        let td = oscillating(3, 76);
        assert!(qdrift_channel(&td, 0.0, 0.5, 32).is_err());
    }

    #[test]
    fn sampling_distribution_matches_cdf_by_ks_test() {
        let td = oscillating(3, 77);
        let (t0, t1) = (0.0, 1.0);
        let nodes = 128;
        let samples = 10_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(78);
        let mut taus: Vec<f64> = Vec::with_capacity(samples);
        let grid = density_grid(&td, t0, t1, nodes).unwrap();
        for _ in 0..samples {
            taus.push(sample_tau(&grid, rng.random::<f64>()));
        }
        taus.sort_by(f64::total_cmp);
        let mut d_stat = 0.0f64;
        for (i, &tau) in taus.iter().enumerate() {
            let f = qdrift_sampling_cdf(&td, t0, t1, nodes, tau).unwrap();
            let hi = (i + 1) as f64 / samples as f64;
            let lo = i as f64 / samples as f64;
            d_stat = d_stat.max((f - lo).abs()).max((hi - f).abs());
        }
        // K-S critical value at the 1% level: 1.628/sqrt(n)
        let critical = 1.628 / (samples as f64).sqrt();
        assert!(d_stat < critical, "K-S statistic {d_stat} vs {critical}");
    }

    #[test]
    fn monte_carlo_average_agrees_with_channel_within_3_sigma() {
        let td = oscillating(3, 79);
        let (t0, t1) = (0.0, 0.4);
        let nodes = 256;
        let channel = qdrift_channel(&td, t0, t1, nodes).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(80);
        let rho = DensityMatrix::from_pure(&random_pure_state(3, &mut rng));
        let obs = random_hermitian(3, &mut rng);
        let expect_from_channel = {
            let out = channel.apply_raw(rho.matrix());
            out.dot(obs.matrix()).diag().sum().re
        };

        let samples = 10_000usize;
        let mut vals = Vec::with_capacity(samples);
        for i in 0..samples {
            let mut r = ChaCha12Rng::seed_from_u64(81);
            r.set_stream(i as u64);
            let u = qdrift_sample(&td, t0, t1, nodes, &mut r).unwrap();
            let out = u.matrix().dot(rho.matrix()).dot(&adjoint(u.matrix()));
            vals.push(out.dot(obs.matrix()).diag().sum().re);
        }
        let mean: f64 = vals.iter().sum::<f64>() / samples as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (samples - 1) as f64;
        let stderr = (var / samples as f64).sqrt();
        let gap = (mean - expect_from_channel).abs();
        assert!(
            gap <= 3.0 * stderr + 1e-6,
            "gap {gap} vs 3σ {}",
            3.0 * stderr
        );
    }

    #[test]
    fn superoperator_matches_direct_application() {
        use ndarray::Array1;
        let td = oscillating(3, 82);
        let channel = qdrift_channel(&td, 0.0, 0.3, 64).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(83);
        let rho = DensityMatrix::from_pure(&random_pure_state(3, &mut rng));
        let direct = channel.apply_raw(rho.matrix());
        let sup = channel.superoperator();
        let d = channel.dim();
        let vec_rho = Array1::from_shape_fn(d * d, |idx| rho.matrix()[[idx / d, idx % d]]);
        let vec_out = sup.dot(&vec_rho);
        for i in 0..d {
            for j in 0..d {
                assert!((vec_out[i * d + j] - direct[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn density_matrix_constructor_rejects_bad_inputs() {
        // trace != 1
        let m = crate::operator::identity(3);
        assert!(DensityMatrix::new(m).is_err());
        // negative eigenvalue
        let m = HermitianOperator::from_real_diagonal(&[1.5, -0.5, 0.0])
            .unwrap()
            .into_matrix();
        assert!(DensityMatrix::new(m).is_err());
    }
}
