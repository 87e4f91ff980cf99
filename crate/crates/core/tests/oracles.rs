mod common;

use common::*;
use simlab::fluid::FluidSolution;
use simlab::gaussian::{cov_r, GaussianLimitKit};

#[test]
fn tanh_sinh_handles_endpoint_singularities() {
    let v = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 5);
    assert!((v - 2.0).abs() < 1e-7, "{v}");
    let v = tanh_sinh(|x| (1.0 - x).powf(-0.5) * x.exp(), 0.0, 1.0, 5);
    assert!((v - 4.060156938557409).abs() < 1e-7, "{v}");
}

#[test]
fn triple_integral_reproduces_unit_intensity_value() {
    let (p, g) = standard(1, 16);
    let fl = FluidSolution::solve(&p, &g, 2.0, 1.0 / 256.0).unwrap();
    let v = cov_r_triple(&fl, 1.0, 1.0);
    assert!((v - 8.0 / 3.0).abs() < 1e-7, "{v}");
}

#[test]
fn alternative_representation_matches_cov_r() {
    for (p, g) in [standard(1, 16), off_balance(1, 16)] {
        let fl = FluidSolution::solve(&p, &g, 3.0, 1.0 / 256.0).unwrap();
        let pts = [0.3, 0.8, 1.5, 2.2, 3.0];
        for &s in &pts {
            for &t in &pts {
                let lib = cov_r(s, t, &fl).unwrap();
                let star = cov_r_star(&fl, s, t);
                assert!(((lib - star) / lib).abs() < 1e-6, "b={} ({s},{t}): {lib} vs {star}", p.b());
            }
        }
    }
}

#[test]
fn cov_zbar_matches_tensor_form() {
    for (p, g) in [standard(1, 16), off_balance(2, 16)] {
        let fl = FluidSolution::solve(&p, &g, 3.0, 1.0 / 512.0).unwrap();
        let kit = GaussianLimitKit::build(&fl, vec![0.0, 3.0]).unwrap();
        for (s, t) in [(0.5, 0.5), (1.0, 2.0), (2.5, 3.0)] {
            let lib = kit.cov_zbar(s, t).unwrap();
            let tensor = cov_zbar_tensor(&fl, s, t);
            assert!(((lib - tensor) / tensor).abs() < 1e-5, "b={} ({s},{t}): {lib} vs {tensor}", p.b());
        }
    }
}
