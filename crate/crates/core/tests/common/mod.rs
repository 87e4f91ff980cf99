//! Independent oracles for the integration and acceptance tests. They share
//! nothing with the library's numerics beyond the fluid solution itself.
#![allow(dead_code)]

use simlab::fluid::FluidSolution;
use simlab::{ModelParams, PolicySpec};

pub fn standard(d: usize, n: u64) -> (ModelParams, PolicySpec) {
    (
        ModelParams::with_b_equal_a(2.5, 1.0, 2.0, d, n).unwrap(),
        PolicySpec::linear(1.0).unwrap(),
    )
}

pub fn off_balance(d: usize, n: u64) -> (ModelParams, PolicySpec) {
    (
        ModelParams::new(2.5, 1.0, 2.0, 1.0, d, n).unwrap(),
        PolicySpec::linear(1.0).unwrap(),
    )
}

/// Tanh-sinh rule on `[a, b]` with step `2^-level`. Endpoint singularities
/// are integrable without special handling; interior kinks must be split.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, level: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut sum = half * pi2 * f(mid);
    let mut k = 1;
    loop {
        let tau = k as f64 * h;
        let u = pi2 * tau.sinh();
        let ch = u.cosh();
        let w = pi2 * tau.cosh() / (ch * ch);
        if w < 1e-20 {
            break;
        }
        // distance from the nearer endpoint without cancellation
        let gap = (b - a) / (1.0 + (2.0 * u).exp());
        if a + gap == a || b - gap == b {
            break;
        }
        sum += half * w * (f(a + gap) + f(b - gap));
        k += 1;
    }
    sum * h
}

const L: u32 = 5;

/// `f(z, U(z))` computed from the policy and the offset.
fn intensity(fl: &FluidSolution, z: f64) -> f64 {
    (-fl.policy().g(fl.u_at(z))).exp()
}

/// `theta^{1-beta} int_0^s int_0^t int_0^{u ^ v} f(z) (u v v - z)^{1-beta} dz du dv`,
/// with the order changed to `z` outermost and kinks split.
pub fn cov_r_triple(fl: &FluidSolution, s: f64, t: f64) -> f64 {
    let (s, t) = (s.min(t), s.max(t));
    let be = fl.params().beta();
    let e = 1.0 - be;
    let inner = |z: f64| {
        tanh_sinh(
            |u| {
                let below = tanh_sinh(|_v| (u - z).powf(e), z, u, L);
                let above = tanh_sinh(|v| (v - z).powf(e), u, t, L);
                below + above
            },
            z,
            s,
            L,
        )
    };
    fl.params().theta().powf(e) * tanh_sinh(|z| intensity(fl, z) * inner(z), 0.0, s, L)
}

/// Covariance of the alternative representation with kernel
/// `(r ^ (s-z)) (r ^ (t-z)) r^{-beta}`.
pub fn cov_r_star(fl: &FluidSolution, s: f64, t: f64) -> f64 {
    let (s, t) = (s.min(t), s.max(t));
    let be = fl.params().beta();
    let l = 6;
    let inner = |z: f64| {
        let (ws, wt) = (s - z, t - z);
        let a = tanh_sinh(|r| r.powf(2.0 - be), 0.0, ws, l);
        let b = tanh_sinh(|r| ws * r.powf(1.0 - be), ws, wt, l);
        // r = wt / w on (0, 1]
        let c = tanh_sinh(|w| ws * wt.powf(2.0 - be) * w.powf(be - 2.0), 0.0, 1.0, l);
        a + b + c
    };
    fl.params().theta().powf(1.0 - be) * (be - 1.0) * tanh_sinh(|z| intensity(fl, z) * inner(z), 0.0, s, l)
}

/// `cov(Zbar(s), Zbar(t))` from `Zbar(t) = Rbar(t) - int_0^t psi'(u) e^{psi(u)-psi(t)} Rbar(u) du`
/// with `psi' = -a f_y`, integrated against `cov_rbar` from the library.
pub fn cov_zbar_tensor(fl: &FluidSolution, s: f64, t: f64) -> f64 {
    let p = fl.params();
    let d = p.d() as f64;
    let c = |u: f64, v: f64| simlab::gaussian::cov_r(u, v, fl).unwrap() / d;
    let dpsi = |u: f64| -p.a() * fl.fy_at(u);
    let psi = |u: f64| tanh_sinh(dpsi, 0.0, u, 4);
    let (ps, pt) = (psi(s), psi(t));
    let ws = |u: f64| dpsi(u) * (psi(u) - ps).exp();
    let wt = |v: f64| dpsi(v) * (psi(v) - pt).exp();
    let l = 4;
    let split = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, at: f64| {
        if at > a && at < b {
            tanh_sinh(f, a, at, l) + tanh_sinh(f, at, b, l)
        } else {
            tanh_sinh(f, a, b, l)
        }
    };
    let first = split(&|v| wt(v) * c(s, v), 0.0, t, s);
    let second = split(&|u| ws(u) * c(u, t), 0.0, s, t);
    let cross = tanh_sinh(|u| ws(u) * split(&|v| wt(v) * c(u, v), 0.0, t, u), 0.0, s, l);
    c(s, t) - first - second + cross
}

/// Mean equation of the prelimit system with the intensity evaluated at
/// the mean: `y(t) = int_0^t f(s, y(s)) a (1 - (n theta (t-s) + 1)^{2-beta}) ds`,
/// by the trapezoid rule on a grid of step `h`. Returns `y` on the grid.
pub fn prelimit_mean(p: &ModelParams, g: &PolicySpec, horizon: f64, h: f64) -> Vec<f64> {
    let n = (horizon / h).round() as usize;
    let (a, b, be) = (p.a(), p.b(), p.beta());
    let nt = p.n() as f64 * p.theta();
    let kern = |x: f64| a * (1.0 - (nt * x + 1.0).powf(2.0 - be));
    let f = |s: f64, y: f64| (-g.g(y - b * s)).exp();
    let mut y = vec![0.0; n + 1];
    let mut fv = vec![1.0; n + 1];
    for k in 1..=n {
        let t = k as f64 * h;
        // kernel vanishes at s = t, so the newest node carries no weight
        let mut acc = 0.5 * fv[0] * kern(t);
        for j in 1..k {
            acc += fv[j] * kern(t - j as f64 * h);
        }
        y[k] = h * acc;
        fv[k] = f(t, y[k]);
    }
    y
}
