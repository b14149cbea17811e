//! Monte Carlo oracles for closed-form quantities.

use concentrix::dynamics::{Matrix, Predicate, SystemSpec};
use concentrix::lyapunov::{slds_exp_lyapunov, stein_mgf};
use concentrix::montecarlo::{burn_in_sampler, lds_stationary_covariance, MeanSummary};
use concentrix::rng::{fill_standard_normal, stream};
use proptest::prelude::*;

fn reference_slds(gamma: f64) -> SystemSpec {
    SystemSpec::slds(
        vec![Predicate::ball_le(1.0), Predicate::catch_all()],
        vec![Matrix::scalar(1.0), Matrix::scalar(gamma)],
    )
    .unwrap()
}

fn mc_mgf(spec: &SystemSpec, x: &[f64], alpha: f64, samples: usize, seed: u64) -> MeanSummary {
    let drift = spec.matrix_at(x).mul_vec(x).unwrap();
    let mut rng = stream(seed);
    let mut z = vec![0.0; x.len()];
    MeanSummary::of((0..samples).map(|_| {
        fill_standard_normal(&mut rng, &mut z);
        let sq: f64 = z.iter().zip(&drift).map(|(a, b)| (a + b) * (a + b)).sum();
        (alpha * sq).exp()
    }))
}

#[test]
fn stein_mgf_matches_sampling_for_a_general_map() {
    let a = Matrix::from_rows(&[vec![0.6, 0.3], vec![-0.2, 0.4]]).unwrap();
    let spec = SystemSpec::lds(a.clone()).unwrap();
    let x = [1.5, -0.7];
    for (i, &alpha) in [0.05, 0.15, 0.2].iter().enumerate() {
        let mc = mc_mgf(&spec, &x, alpha, 400_000, i as u64);
        let exact = stein_mgf(&a, &x, alpha).unwrap();
        assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr, "alpha {alpha}: {} vs {exact}", mc.mean);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `P W(x) <= C W(x)^{β/α̂}` at sampled states, for admissible α̂.
    #[test]
    fn exp_lyapunov_holds_by_sampling(frac in 0.05f64..0.95, x in -6.0f64..6.0, seed in 0u64..1000) {
        let gamma: f64 = 0.5;
        let alpha = frac * (1.0 - gamma * gamma) / 2.0;
        let spec = reference_slds(gamma);
        let cert = slds_exp_lyapunov(&spec, 1.0, gamma, 1.0, alpha).unwrap();
        let mc = mc_mgf(&spec, &[x], alpha, 50_000, seed);
        let w = (alpha * x * x).exp();
        let rhs = cert.c * w.powf(cert.beta / alpha);
        prop_assert!(mc.mean <= rhs + 4.0 * mc.stderr, "x={x} alpha={alpha}: {} > {rhs}", mc.mean);
    }
}

#[test]
fn burn_in_covariance_approaches_stationary() {
    let a = Matrix::diagonal(&[0.9, 0.3]);
    let spec = SystemSpec::lds(a.clone()).unwrap();
    let sigma = lds_stationary_covariance(&a).unwrap();
    let error = |t: usize| {
        let est = burn_in_sampler(&spec, &[0.0, 0.0], 20_000, t, 77).unwrap().covariance();
        (est.as_dmatrix() - sigma.as_dmatrix()).norm() / sigma.as_dmatrix().norm()
    };
    let (e1, e5, e50) = (error(1), error(5), error(50));
    assert!(e1 > e5 && e5 > e50, "{e1} {e5} {e50}");
    assert!(e50 < 0.05, "{e50}");
}
