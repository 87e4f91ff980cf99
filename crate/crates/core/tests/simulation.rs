mod common;

use common::*;
use rand::Rng;
use simlab::arrivals::{sample_session_length, session_length_cdf, simulate_scaled_path, SimOptions};
use simlab::fluid::FluidSolution;
use simlab::gaussian::GaussianLimitKit;
use simlab::rng;
use simlab::stats;

#[test]
fn rbar_sampler_variance_at_one() {
    let (p, g) = standard(1, 16);
    let fl = FluidSolution::solve(&p, &g, 1.0, 1.0 / 256.0).unwrap();
    let kit = GaussianLimitKit::build(&fl, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
    let paths = kit.sample_rbar(5000, 99);
    let last: Vec<f64> = paths.iter().map(|p| p[p.len() - 1]).collect();
    let v = stats::variance(&last).unwrap();
    assert!(v.covers(8.0 / 3.0, 3.0), "{v:?}");
}

#[test]
fn session_length_ks_rarely_rejects() {
    let (p, _) = standard(1, 64);
    let mut passed = 0;
    for trial in 0..100 {
        let mut r = rng::stream(rng::replication_seed(5, trial), 0);
        let x: Vec<f64> = (0..500).map(|_| sample_session_length(r.random::<f64>(), &p).unwrap()).collect();
        if stats::ks_one_sample(&x, |t| session_length_cdf(t, &p)).unwrap().p_value > 0.01 {
            passed += 1;
        }
    }
    assert!(passed >= 96, "{passed}/100");
}

#[test]
fn prelimit_mean_matches_mean_field_equation() {
    let (p, g) = standard(1, 64);
    let fl = FluidSolution::solve(&p, &g, 1.0, 1.0 / 256.0).unwrap();
    let scale = (p.n() as f64).powf(p.beta() - 2.0);
    let h = 1.0 / 2048.0;
    let y = prelimit_mean(&p, &g, 1.0, h);
    let target = scale * (y[y.len() - 1] - fl.u_at(1.0));
    let sims: Vec<f64> = (0..300)
        .map(|r| {
            let path = simulate_scaled_path(&p, &g, 1.0, rng::replication_seed(21, r), SimOptions::default()).unwrap();
            scale * (path.ybar(1.0).unwrap() - fl.u_at(1.0))
        })
        .collect();
    let m = stats::mean(&sims).unwrap();
    assert!(m.covers(target, 3.0), "{m:?} vs {target}");
}
