mod common;

use common::*;
use proptest::prelude::*;
use simlab::fluid::FluidSolution;
use simlab::fractional::fbm_cov;
use simlab::gaussian::cov_r;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fbm_self_similarity(s in 0.0..5.0f64, t in 0.0..5.0f64, c in 0.1..4.0f64, h in 0.05..0.95f64) {
        let lhs = fbm_cov(c * s, c * t, h).unwrap();
        let rhs = c.powf(2.0 * h) * fbm_cov(s, t, h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn fbm_covariance_is_cauchy_schwarz_bounded(s in 0.0..5.0f64, t in 0.0..5.0f64, h in 0.05..0.95f64) {
        let c = fbm_cov(s, t, h).unwrap();
        let bound = (fbm_cov(s, s, h).unwrap() * fbm_cov(t, t, h).unwrap()).sqrt();
        prop_assert!(c.abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn cov_r_is_symmetric_and_monotone(s in 0.05..3.0f64, t in 0.05..3.0f64) {
        let (p, g) = off_balance(1, 16);
        let fl = FluidSolution::solve(&p, &g, 3.0, 1.0 / 128.0).unwrap();
        let a = cov_r(s, t, &fl).unwrap();
        prop_assert!((a - cov_r(t, s, &fl).unwrap()).abs() <= 1e-10 * a.abs());
        prop_assert!(a > 0.0);
        let m = s.max(t);
        prop_assert!(cov_r(m, m, &fl).unwrap() >= a);
    }
}
