use concentrix::dynamics::{spectral_norm, Halfspace, Matrix, Predicate, RegionSpec};
use concentrix::montecarlo::{empirical_w1, GroundMetric};
use concentrix::transport::{
    correlation_bound, gaussian_w2, iid_deviation_bound, tensorized_constant, trajectory_deviation_bound,
    ConcentrationCertificate, ContractionCertificate, MetricTag, T1Certificate,
};
use proptest::prelude::*;

fn square(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, n * n)
        .prop_map(move |v| Matrix::from_rows(&v.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>()).unwrap())
}

/// `B Bᵀ + δ I`, always positive definite.
fn covariance(n: usize) -> impl Strategy<Value = Matrix> {
    (square(n), 0.01f64..1.0).prop_map(move |(b, d)| {
        let b = b.as_dmatrix();
        Matrix::from_dmatrix(b * b.transpose() + nalgebra::DMatrix::identity(n, n) * d).unwrap()
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

fn gaussian(n: usize) -> impl Strategy<Value = (Vec<f64>, Matrix)> {
    (point(n), covariance(n))
}

fn markov(c: f64, lambda: f64, n: usize, l: f64) -> ConcentrationCertificate {
    ConcentrationCertificate::markov(
        T1Certificate::new(c, MetricTag::Euclidean).unwrap(),
        ContractionCertificate::new(lambda).unwrap(),
        n,
        l,
        0.0,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_is_a_metric((m1, s1) in gaussian(3), (m2, s2) in gaussian(3), (m3, s3) in gaussian(3)) {
        let d12 = gaussian_w2(&m1, &s1, &m2, &s2).unwrap();
        let d21 = gaussian_w2(&m2, &s2, &m1, &s1).unwrap();
        let d13 = gaussian_w2(&m1, &s1, &m3, &s3).unwrap();
        let d23 = gaussian_w2(&m2, &s2, &m3, &s3).unwrap();
        prop_assert!(d12 >= 0.0);
        prop_assert!((d12 - d21).abs() <= 1e-6 * (1.0 + d12));
        prop_assert!(d13 <= d12 + d23 + 1e-6);
        prop_assert!(gaussian_w2(&m1, &s1, &m1, &s1).unwrap() < 1e-4);
    }

    #[test]
    fn w2_equal_covariance_is_mean_distance((m1, s) in gaussian(2), m2 in point(2)) {
        let d = gaussian_w2(&m1, &s, &m2, &s).unwrap();
        let exact = m1.iter().zip(&m2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((d - exact).abs() < 1e-4, "{d} vs {exact}");
    }

    #[test]
    fn zero_contraction_matches_iid(c in 0.1f64..5.0, l in 0.1f64..3.0, n in 1usize..500, eps in 0.001f64..3.0) {
        let markov_bound = trajectory_deviation_bound(&markov(c, 0.0, n, l), eps);
        let iid = iid_deviation_bound(c, l, n, eps);
        prop_assert!((markov_bound - iid).abs() <= 1e-12 * iid.max(1e-300));
    }

    #[test]
    fn bound_monotone(c in 0.1f64..5.0, lambda in 0.0f64..0.99, n in 1usize..1000, eps in 0.01f64..2.0) {
        let base = markov(c, lambda, n, 1.0);
        prop_assert!(trajectory_deviation_bound(&markov(c, lambda, n + 1, 1.0), eps) <= base.tail_bound(eps));
        prop_assert!(base.tail_bound(eps * 1.1) <= base.tail_bound(eps));
        prop_assert!(base.tail_bound(eps) <= 2.0);
    }

    #[test]
    fn tensorized_monotone(c in 0.1f64..5.0, l1 in 0.0f64..0.98, dl in 0.001f64..0.01, n in 1usize..1000) {
        let a = tensorized_constant(c, l1, n).unwrap();
        prop_assert!(tensorized_constant(c, l1 + dl, n).unwrap() > a);
        prop_assert!(tensorized_constant(c, l1, n + 1).unwrap() > a);
        prop_assert!(a >= c * n as f64);
    }

    #[test]
    fn correlation_bound_geometric_sum(c in 0.1f64..5.0, lambda in 0.0f64..0.95, l in 0.1f64..3.0) {
        // Σ_k λ^k C L² / (1 - λ²) = C L² / ((1 - λ)(1 - λ²))
        let total: f64 = (0..5000).map(|k| correlation_bound(c, lambda, l, k).unwrap()).sum();
        let closed = c * l * l / ((1.0 - lambda) * (1.0 - lambda * lambda));
        prop_assert!((total - closed).abs() <= 1e-9 * closed);
        for k in 0..20 {
            prop_assert!(correlation_bound(c, lambda, l, k + 1).unwrap() <= correlation_bound(c, lambda, l, k).unwrap());
        }
    }

    #[test]
    fn spectral_norm_dominates_random_directions(a in square(3), dirs in prop::collection::vec(point(3), 50)) {
        let norm = spectral_norm(&a).unwrap();
        for v in dirs {
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len < 1e-9 {
                continue;
            }
            let av = a.mul_vec(&v).unwrap();
            let ratio = av.iter().map(|x| x * x).sum::<f64>().sqrt() / len;
            prop_assert!(ratio <= norm * (1.0 + 1e-9) + 1e-12);
        }
        prop_assert!(norm <= a.frobenius_norm() + 1e-12);
    }

    #[test]
    fn first_match_regions_are_total(
        r1 in 0.1f64..3.0,
        normal in point(2),
        offset in -2.0f64..2.0,
        r2 in 0.1f64..3.0,
        xs in prop::collection::vec(point(2), 100),
    ) {
        let spec = RegionSpec::new(
            vec![
                Predicate::ball_le(r1),
                Predicate::halfspaces(vec![Halfspace { normal: normal.clone(), offset }]),
                Predicate::ball_gt(r2),
                Predicate::catch_all(),
            ],
            2,
        ).unwrap();
        for x in xs {
            let sq = x[0] * x[0] + x[1] * x[1];
            let dot = normal[0] * x[0] + normal[1] * x[1];
            let expected = if sq <= r1 * r1 {
                0
            } else if dot <= offset {
                1
            } else if sq > r2 * r2 {
                2
            } else {
                3
            };
            prop_assert_eq!(spec.region_index(&x), expected);
        }
    }

    #[test]
    fn w1_dominates_mean_gap(a in prop::collection::vec(point(2), 1..40), shift in point(2)) {
        let b: Vec<Vec<f64>> = a.iter().rev().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
        let w = empirical_w1(&a, &b, &GroundMetric::Euclidean).unwrap().value;
        let m = a.len() as f64;
        let mean_gap: f64 = (0..2)
            .map(|i| (a.iter().map(|p| p[i]).sum::<f64>() / m - b.iter().map(|p| p[i]).sum::<f64>() / m).powi(2))
            .sum::<f64>()
            .sqrt();
        prop_assert!(w + 1e-9 >= mean_gap);
        // translation is a feasible coupling
        prop_assert!(w <= (shift[0].powi(2) + shift[1].powi(2)).sqrt() + 1e-9);
    }

    #[test]
    fn w1_is_symmetric_and_zero_on_permutations(a in prop::collection::vec(point(1), 1..60), b in prop::collection::vec(point(1), 60)) {
        let b = &b[..a.len()];
        let ab = empirical_w1(&a, b, &GroundMetric::Euclidean).unwrap().value;
        let ba = empirical_w1(b, &a, &GroundMetric::Euclidean).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        let rev: Vec<Vec<f64>> = a.iter().rev().cloned().collect();
        prop_assert_eq!(empirical_w1(&a, &rev, &GroundMetric::Euclidean).unwrap().value, 0.0);
    }
}
