//! Fitting the commutator envelope on measured data: the discretized
//! Schrödinger system must come out linear in the window with a
//! grid-independent prefactor, and generic split systems must respect the
//! interaction branch envelope.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use qhop_core::bounds::{
    interaction_commutator_bound, sampled_interaction_commutator_max,
};
use qhop_core::hamiltonian::{cos4x, schrodinger_split_system, SplitBounds, SplitSystem, TimeDependentHamiltonian};
use qhop_core::resources::fit_commutator_profile;
use qhop_core::random::{random_hermitian_with_norm};

fn window_grid() -> Vec<f64> {
    // two decades, 6 windows
    (0..6).map(|k| 1e-4 * 10f64.powf(k as f64 * 2.0 / 5.0)).collect()
}

#[test]
fn schrodinger_profile_is_linear_with_grid_independent_prefactor() {
    // coarser grids than N = 64 have not yet converged to the continuum
    // commutator constant, so the grid-independence statement starts there
    let mut prefactors = Vec::new();
    for &n in &[64usize, 128] {
        let sys = schrodinger_split_system(n, cos4x, 0.5).unwrap();
        let samples: Vec<(f64, f64)> = window_grid()
            .into_iter()
            .map(|h| {
                let g = sampled_interaction_commutator_max(&sys, h, 17).unwrap();
                (h, g)
            })
            .collect();
        let profile = fit_commutator_profile(&samples).unwrap();
        assert_eq!(profile.exponent, 1, "N={n}");
        let fitted = profile.fitted_exponent.unwrap();
        assert!(
            (0.9..1.1).contains(&fitted),
            "N={n}: fitted exponent {fitted}"
        );
        prefactors.push(profile.prefactor);
    }
    let spread = prefactors[1] / prefactors[0];
    assert!(
        (0.85..1.18).contains(&spread),
        "prefactor ratio across grids {spread} ({prefactors:?})"
    );
}

#[test]
fn commuting_family_yields_the_zero_flag() {
    // diagonal A and diagonal B commute at every separation
    let a = qhop_core::operator::HermitianOperator::from_real_diagonal(&[1.0, 2.0, 3.0, 5.0])
        .unwrap();
    let b = qhop_core::operator::HermitianOperator::from_real_diagonal(&[0.5, -0.25, 0.75, 0.1])
        .unwrap();
    let sys = SplitSystem::new(
        a,
        TimeDependentHamiltonian::constant(b, 1.0).unwrap(),
        SplitBounds::Measured,
    )
    .unwrap();
    let samples: Vec<(f64, f64)> = window_grid()
        .into_iter()
        .map(|h| {
            let g = sampled_interaction_commutator_max(&sys, h, 9).unwrap();
            (h, g)
        })
        .collect();
    let profile = fit_commutator_profile(&samples).unwrap();
    assert!(profile.is_commuting());
    assert!(profile.fitted_exponent.is_none());
}

#[test]
fn generic_split_system_fit_respects_the_branch_envelope() {
    let mut rng = ChaCha12Rng::seed_from_u64(55);
    let a = random_hermitian_with_norm(8, 12.0, &mut rng);
    let b = random_hermitian_with_norm(8, 1.0, &mut rng);
    let sys = SplitSystem::new(
        a,
        TimeDependentHamiltonian::constant(b, 1.0).unwrap(),
        SplitBounds::Measured,
    )
    .unwrap();
    let samples: Vec<(f64, f64)> = window_grid()
        .into_iter()
        .map(|h| {
            let g = sampled_interaction_commutator_max(&sys, h, 17).unwrap();
            (h, g)
        })
        .collect();
    let profile = fit_commutator_profile(&samples).unwrap();
    assert_eq!(profile.exponent, 1);
    // fitted envelope sits below the declared branch bound at every window
    for &(h, g) in &samples {
        let (norm_branch, deriv_branch) = interaction_commutator_bound(&sys, h);
        assert!(g <= norm_branch.min(deriv_branch) * 1.05, "h={h}");
    }
}
