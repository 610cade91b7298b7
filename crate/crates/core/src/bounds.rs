//! Sampled commutator maxima and the local error bound of the
//! averaged-exponential step.
//!
//! The step error obeys
//!
//! `‖U((j+1)h, jh) - U₁‖ ≤ (h²/2)·(½ max_{s,τ} ‖[H(τ),H(s)]‖ + max‖H'‖/M)`
//!
//! with maxima over the step window. The maxima here are evaluated by
//! dense grid sampling; they are lower envelopes of the true suprema, so
//! bound checks carry a small sampling slack.

use crate::error::Result;
use crate::hamiltonian::{SplitSystem, TimeDependentHamiltonian};
use crate::operator::{commutator, spectral_norm};

/// Default grid resolution per axis for sampled maxima.
pub const DEFAULT_GRID: usize = 33;

/// `max ‖[H(τ), H(s)]‖` over a grid on `[t_lo, t_hi]²`.
pub fn sampled_commutator_max(
    h: &TimeDependentHamiltonian,
    t_lo: f64,
    t_hi: f64,
    grid: usize,
) -> Result<f64> {
    let ts = linspace(t_lo, t_hi, grid);
    let evals: Vec<_> = ts.iter().map(|&t| h.evaluate_raw(t)).collect();
    let mut worst = 0.0f64;
    // ‖[H(τ),H(s)]‖ is symmetric in (τ,s); the strict upper triangle suffices.
    for i in 0..evals.len() {
        for j in (i + 1)..evals.len() {
            let c = commutator(&evals[i], &evals[j])?;
            worst = worst.max(spectral_norm(&c));
        }
    }
    Ok(worst)
}

/// `max ‖[H'(u), H(s)]‖` over a grid on `[t_lo, t_hi]²`.
pub fn sampled_derivative_commutator_max(
    h: &TimeDependentHamiltonian,
    t_lo: f64,
    t_hi: f64,
    grid: usize,
) -> Result<f64> {
    let ts = linspace(t_lo, t_hi, grid);
    let evals: Vec<_> = ts.iter().map(|&t| h.evaluate_raw(t)).collect();
    let derivs: Vec<_> = ts.iter().map(|&t| h.derivative_raw(t)).collect();
    let mut worst = 0.0f64;
    for d in &derivs {
        for e in &evals {
            let c = commutator(d, e)?;
            worst = worst.max(spectral_norm(&c));
        }
    }
    Ok(worst)
}

/// `max ‖H'(s)‖` over a grid on `[t_lo, t_hi]`.
pub fn sampled_derivative_max(
    h: &TimeDependentHamiltonian,
    t_lo: f64,
    t_hi: f64,
    grid: usize,
) -> f64 {
    linspace(t_lo, t_hi, grid)
        .iter()
        .map(|&t| spectral_norm(&h.derivative_raw(t)))
        .fold(0.0, f64::max)
}

/// The local error bound for an `M`-node averaged-exponential step on
/// segment `j`: `(h²/2)(½·commutator_max + derivative_max/M)`, with the
/// maxima sampled on `grid` points per axis.
pub fn qhop_local_error_bound(
    h: &TimeDependentHamiltonian,
    j: usize,
    step: f64,
    m_nodes: usize,
    grid: usize,
) -> Result<f64> {
    let t_lo = j as f64 * step;
    let t_hi = t_lo + step;
    let comm = sampled_commutator_max(h, t_lo, t_hi, grid)?;
    let deriv = sampled_derivative_max(h, t_lo, t_hi, grid);
    Ok(step * step / 2.0 * (0.5 * comm + deriv / m_nodes as f64))
}

/// The step-window commutator max against the two branch estimates it is
/// bounded by: the max over all pairs at separation at most `h` anywhere
/// on the horizon, and `h · max‖[H'(u), H(s)]‖` over the same pairs.
#[derive(Debug, Clone, Copy)]
pub struct CommutatorBranches {
    /// `max ‖[H(τ), H(s)]‖` over the step window `[jh, (j+1)h]²`.
    pub measured: f64,
    /// `max_{|s-u| ≤ h} ‖[H(u), H(s)]‖` over the whole horizon.
    pub window_branch: f64,
    /// `h · max_{|s-u| ≤ h} ‖[H'(u), H(s)]‖` over the whole horizon.
    pub derivative_branch: f64,
}

pub fn commutator_branches(
    h: &TimeDependentHamiltonian,
    j: usize,
    step: f64,
    grid: usize,
) -> Result<CommutatorBranches> {
    let t_lo = j as f64 * step;
    let t_hi = t_lo + step;
    let measured = sampled_commutator_max(h, t_lo, t_hi, grid)?;

    let horizon = h.horizon();
    let mut window_branch = 0.0f64;
    let mut deriv_pairs = 0.0f64;
    for &s in linspace(0.0, horizon, grid).iter() {
        let h_s = h.evaluate_raw(s);
        let u_lo = (s - step).max(0.0);
        let u_hi = (s + step).min(horizon);
        for &u in linspace(u_lo, u_hi, grid).iter() {
            let c = commutator(&h.evaluate_raw(u), &h_s)?;
            window_branch = window_branch.max(spectral_norm(&c));
            let cd = commutator(&h.derivative_raw(u), &h_s)?;
            deriv_pairs = deriv_pairs.max(spectral_norm(&cd));
        }
    }
    Ok(CommutatorBranches {
        measured,
        window_branch,
        derivative_branch: step * deriv_pairs,
    })
}

/// `max_{|s-t| ≤ h} ‖[B(t), e^{iA(s-t)} B(s) e^{-iA(s-t)}]‖` sampled on a
/// grid of separations (and of base times `t` when `B` depends on time).
pub fn sampled_interaction_commutator_max(
    sys: &SplitSystem,
    h: f64,
    grid: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    if sys.b().is_time_independent() {
        let b = sys.b().evaluate_raw(0.0);
        for &u in linspace(0.0, h, grid).iter().skip(1) {
            worst = worst.max(interaction_commutator_norm(sys, &b, &b, u)?);
        }
    } else {
        let horizon = sys.b().horizon();
        for &t in linspace(0.0, (horizon - h).max(0.0), grid).iter() {
            let bt = sys.b().evaluate_raw(t);
            for &u in linspace(-h, h, grid).iter() {
                let s = (t + u).clamp(0.0, horizon);
                let bs = sys.b().evaluate_raw(s);
                worst = worst.max(interaction_commutator_norm(sys, &bt, &bs, s - t)?);
            }
        }
    }
    Ok(worst)
}

fn interaction_commutator_norm(
    sys: &SplitSystem,
    b_t: &ndarray::Array2<num_complex::Complex64>,
    b_s: &ndarray::Array2<num_complex::Complex64>,
    separation: f64,
) -> Result<f64> {
    // e^{iA u} B(s) e^{-iA u} in the A-eigenbasis is a phase twist.
    let bs_basis = sys.to_a_basis(b_s);
    let twisted = crate::hamiltonian::phase_twist(sys.eigenvalues(), &bs_basis, separation);
    let bt_basis = sys.to_a_basis(b_t);
    let c = commutator(&bt_basis, &twisted)?;
    Ok(spectral_norm(&c))
}

/// The two interaction-picture branch bounds
/// `min{2α_B², 2α_B(α_AB + β_B)h}` evaluated from the declared bounds.
pub fn interaction_commutator_bound(sys: &SplitSystem, h: f64) -> (f64, f64) {
    let norm_branch = 2.0 * sys.alpha_b() * sys.alpha_b();
    let derivative_branch = 2.0 * sys.alpha_b() * (sys.alpha_ab() + sys.beta_b()) * h;
    (norm_branch, derivative_branch)
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}
