//! Deterministic limits: the fluid trajectory `U`, its offset `u = U - b t`,
//! the offset limit `K`, the time change `(Lambda, gamma)` and the bias
//! term `V` solving a weakly singular Volterra equation.

use crate::csvout::{Cell, Csv};
use crate::error::{Result, SimError};
use crate::model::{ModelParams, PolicySpec};
use crate::numerics::interp::{cumulative_simpson, linear_uniform, UniformHermite};

/// Solution of all fluid-level objects on a uniform grid `t_k = k h`.
#[derive(Debug, Clone)]
pub struct FluidSolution {
    params: ModelParams,
    policy: PolicySpec,
    h: f64,
    /// Grid times.
    pub t: Vec<f64>,
    /// Fluid workload.
    pub big_u: Vec<f64>,
    /// Offset `U - b t`.
    pub u: Vec<f64>,
    /// Offset limit.
    pub k: f64,
    /// Cumulative intensity.
    pub lambda: Vec<f64>,
    /// Inverse time change at the grid times; `NaN` beyond `Lambda(T)`.
    pub gamma: Vec<f64>,
    /// Bias term.
    pub v: Vec<f64>,
    /// `f(t, U(t))`.
    pub f_u: Vec<f64>,
    /// `f_y(t, U(t))`.
    pub fy_u: Vec<f64>,
    /// `min(-f_y(t, U(t)))` over the grid.
    pub mu: f64,
    /// `max f(t, U(t))` over the grid.
    pub k1: f64,
    /// Number of grid points where `V > 0` (observed never to happen).
    pub v_positive: usize,
    u_interp: UniformHermite,
    lambda_interp: UniformHermite,
}

/// Root of `g(K) = log(a/b)` by bisection on a bracket grown from `[-1, 1]`.
///
/// The uncontrolled baseline only admits `b = a`, where the root is 0.
pub fn offset_root(p: &ModelParams, g: &PolicySpec) -> Result<f64> {
    if p.b_equals_a() {
        return Ok(0.0);
    }
    if !g.is_controlled() {
        return Err(SimError::Unsupported(
            "the uncontrolled baseline requires b = a".into(),
        ));
    }
    let target = (p.a() / p.b()).ln();
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g.g(lo) > target {
        lo *= 2.0;
    }
    while g.g(hi) < target {
        hi *= 2.0;
    }
    Ok(crate::numerics::bisect_increasing(
        |x| g.g(x) - target,
        lo,
        hi,
        1e-15 * hi.abs().max(1.0),
    ))
}

fn grid(horizon: f64, h: f64) -> Result<(usize, f64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::domain(format!("horizon must be positive: got {horizon}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(SimError::domain(format!("grid step must be positive: got {h}")));
    }
    let steps = ((horizon / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, horizon / steps as f64))
}

/// Classical RK4 for `u' = a exp(-g(u)) - b`, `u(0) = 0`, on `steps` steps of
/// size `h`. Returns `u` at the grid nodes.
pub fn rk4_offset(p: &ModelParams, g: &PolicySpec, steps: usize, h: f64) -> Vec<f64> {
    let (a, b) = (p.a(), p.b());
    let rhs = |u: f64| a * (-g.g(u)).exp() - b;
    let mut u = vec![0.0; steps + 1];
    for k in 0..steps {
        let x = u[k];
        let k1 = rhs(x);
        let k2 = rhs(x + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h * k2);
        let k4 = rhs(x + h * k3);
        u[k + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

/// Inverse of a grid function with a Hermite interpolant, for targets up to
/// the last node value; `NaN` above it.
pub fn invert_increasing(it: &UniformHermite, target: f64, tol: f64) -> f64 {
    let y = it.values();
    let last = *y.last().unwrap();
    if target > last {
        return f64::NAN;
    }
    if target <= y[0] {
        return 0.0;
    }
    let h = it.end() / (y.len() - 1) as f64;
    // first node with value >= target
    let j = y.partition_point(|&v| v < target);
    if y[j] == target {
        return j as f64 * h;
    }
    let (lo, hi) = ((j - 1) as f64 * h, j as f64 * h);
    crate::numerics::bisect_increasing(|s| it.eval(s) - target, lo, hi, tol)
}

/// `(Lambda, gamma)` on the grid from `f(t, U(t))`.
///
/// `Lambda` is the cumulative Simpson integral of `fU`; `gamma(t_k)` inverts
/// the Hermite interpolant of `Lambda` (derivative `fU`) by bisection.
pub fn time_change(h: f64, f_u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let lambda = cumulative_simpson(h, f_u);
    let it = UniformHermite::new(h, lambda.clone(), f_u.to_vec());
    let gamma = (0..f_u.len())
        .map(|k| invert_increasing(&it, k as f64 * h, 1e-12))
        .collect();
    (lambda, gamma)
}

/// Product-integration weights for `int_0^{t_k} f(s) (t_k - s)^gamma ds`
/// with `f` piecewise linear on the grid. Cell `j` (between nodes `j` and
/// `j+1`) at distance index `m = k - j` contributes
/// `h^{gamma+1} (w0[m] f_j + w1[m] f_{j+1})`.
fn kernel_weights(gamma: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let (q1, q2) = (gamma + 1.0, gamma + 2.0);
    let mut w0 = vec![0.0; steps + 1];
    let mut w1 = vec![0.0; steps + 1];
    for m in 1..=steps {
        let (mf, m1) = (m as f64, (m - 1) as f64);
        let a = (mf.powf(q1) - m1.powf(q1)) / q1;
        let b = (mf.powf(q2) - m1.powf(q2)) / q2;
        w0[m] = b - m1 * a;
        w1[m] = mf * a - b;
    }
    (w0, w1)
}

/// Solve `V(t) = a int_0^t f_y V ds - a theta^{2-beta} int_0^t f (t-s)^{2-beta} ds`.
///
/// The singular forcing is integrated exactly against the piecewise-linear
/// interpolant of `f`; the regular part uses the trapezoid rule, implicit in
/// the newest value.
pub fn solve_v(p: &ModelParams, h: f64, f_u: &[f64], fy_u: &[f64]) -> Vec<f64> {
    let n = f_u.len();
    let steps = n - 1;
    let gamma = 2.0 - p.beta();
    let a = p.a();
    let c = a * p.theta().powf(2.0 - p.beta());
    let (w0, w1) = kernel_weights(gamma, steps);
    let hp = h.powf(gamma + 1.0);
    let mut v = vec![0.0; n];
    // running sum_{j=1}^{k-1} fy_j V_j
    let mut acc = 0.0;
    for k in 1..n {
        let mut forcing = 0.0;
        for j in 0..k {
            let m = k - j;
            forcing += w0[m] * f_u[j] + w1[m] * f_u[j + 1];
        }
        forcing *= hp;
        let explicit = a * h * (0.5 * fy_u[0] * v[0] + acc) - c * forcing;
        v[k] = explicit / (1.0 - 0.5 * a * h * fy_u[k]);
        acc += fy_u[k] * v[k];
    }
    v
}

impl FluidSolution {
    /// All fluid objects on `[0, horizon]` with step close to `h` (adjusted
    /// so the grid ends exactly at the horizon).
    pub fn solve(p: &ModelParams, g: &PolicySpec, horizon: f64, h: f64) -> Result<Self> {
        let (steps, h) = grid(horizon, h)?;
        let k = offset_root(p, g)?;
        let t: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
        let b = p.b();
        let (u, f_u, fy_u, lambda, gamma) = if p.b_equals_a() {
            let gp0 = g.g_prime(0.0);
            (
                vec![0.0; steps + 1],
                vec![1.0; steps + 1],
                vec![-gp0; steps + 1],
                t.clone(),
                t.clone(),
            )
        } else {
            let u = rk4_offset(p, g, steps, h);
            let f_u: Vec<f64> = u.iter().map(|&x| (-g.g(x)).exp()).collect();
            let fy_u: Vec<f64> = u.iter().zip(&f_u).map(|(&x, &f)| -f * g.g_prime(x)).collect();
            let (lambda, gamma) = time_change(h, &f_u);
            (u, f_u, fy_u, lambda, gamma)
        };
        let big_u: Vec<f64> = u.iter().zip(&t).map(|(x, s)| x + b * s).collect();
        let v = solve_v(p, h, &f_u, &fy_u);
        let mu = fy_u.iter().map(|x| -x).fold(f64::INFINITY, f64::min);
        let k1 = f_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v_positive = v.iter().filter(|&&x| x > 0.0).count();
        let a = p.a();
        let du: Vec<f64> = f_u.iter().map(|f| a * f - b).collect();
        let u_interp = UniformHermite::new(h, u.clone(), du);
        let lambda_interp = UniformHermite::new(h, lambda.clone(), f_u.clone());
        Ok(FluidSolution {
            params: *p,
            policy: *g,
            h,
            t,
            big_u,
            u,
            k,
            lambda,
            gamma,
            v,
            f_u,
            fy_u,
            mu,
            k1,
            v_positive,
            u_interp,
            lambda_interp,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn policy(&self) -> &PolicySpec {
        &self.policy
    }
    pub fn step(&self) -> f64 {
        self.h
    }
    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }
    pub fn len(&self) -> usize {
        self.t.len()
    }
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Whether `other` shares everything the fluid objects depend on.
    pub fn matches(&self, p: &ModelParams, g: &PolicySpec) -> bool {
        self.params.beta() == p.beta()
            && self.params.theta() == p.theta()
            && self.params.b() == p.b()
            && self.policy == *g
    }

    /// Offset `U(t) - b t` by Hermite interpolation with the exact slope.
    pub fn u_at(&self, t: f64) -> f64 {
        self.u_interp.eval(t)
    }
    pub fn big_u_at(&self, t: f64) -> f64 {
        self.u_at(t) + self.params.b() * t
    }
    /// `f(t, U(t))`.
    pub fn f_at(&self, t: f64) -> f64 {
        if self.params.b_equals_a() {
            return 1.0;
        }
        (-self.policy.g(self.u_at(t))).exp()
    }
    /// `f_y(t, U(t))`.
    pub fn fy_at(&self, t: f64) -> f64 {
        let x = if self.params.b_equals_a() { 0.0 } else { self.u_at(t) };
        let (gx, gp, _) = self.policy.eval(x);
        -(-gx).exp() * gp
    }
    pub fn lambda_at(&self, t: f64) -> f64 {
        if self.params.b_equals_a() {
            return t;
        }
        self.lambda_interp.eval(t)
    }
    /// Inverse time change; `NaN` beyond `Lambda(T)`.
    pub fn gamma_at(&self, s: f64) -> f64 {
        if self.params.b_equals_a() {
            return if s <= self.horizon() { s } else { f64::NAN };
        }
        invert_increasing(&self.lambda_interp, s, 1e-12)
    }
    /// Bias term, linear between nodes.
    pub fn v_at(&self, t: f64) -> f64 {
        linear_uniform(self.h, &self.v, t)
    }

    /// CSV with columns `t,U,u,Lambda,gamma,V,fU,fyU`.
    pub fn to_csv(&self) -> Csv {
        let mut c = Csv::new(&["t", "U", "u", "Lambda", "gamma", "V", "fU", "fyU"]);
        for i in 0..self.len() {
            c.row(&[
                Cell::F(self.t[i]),
                Cell::F(self.big_u[i]),
                Cell::F(self.u[i]),
                Cell::F(self.lambda[i]),
                Cell::F(self.gamma[i]),
                Cell::F(self.v[i]),
                Cell::F(self.f_u[i]),
                Cell::F(self.fy_u[i]),
            ]);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate_left_power, Tol};

    fn standard() -> (ModelParams, PolicySpec) {
        (
            ModelParams::with_b_equal_a(2.5, 1.0, 2.0, 1, 16).unwrap(),
            PolicySpec::linear(1.0).unwrap(),
        )
    }

    fn drained(b: f64) -> ModelParams {
        ModelParams::new(2.5, 1.0, 2.0, b, 1, 16).unwrap()
    }

    #[test]
    fn offset_root_examples() {
        let g = PolicySpec::linear(1.0).unwrap();
        assert_eq!(offset_root(&standard().0, &g).unwrap(), 0.0);
        assert!((offset_root(&drained(1.0), &g).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((offset_root(&drained(4.0), &g).unwrap() + 2f64.ln()).abs() < 1e-12);
        let gt = PolicySpec::linear_plus_tanh(0.3, 2.0).unwrap();
        let k = offset_root(&drained(0.5), &gt).unwrap();
        assert!((gt.g(k) - 4f64.ln()).abs() < 1e-12);
        assert!(matches!(
            offset_root(&drained(1.0), &PolicySpec::no_control()),
            Err(SimError::Unsupported(_))
        ));
    }

    #[test]
    fn exact_branch_when_b_equals_a() {
        let (p, g) = standard();
        let fl = FluidSolution::solve(&p, &g, 4.0, 4.0 / 256.0).unwrap();
        for i in 0..fl.len() {
            assert_eq!(fl.big_u[i], 2.0 * fl.t[i]);
            assert_eq!(fl.lambda[i], fl.t[i]);
            assert_eq!(fl.gamma[i], fl.t[i]);
            assert_eq!(fl.f_u[i], 1.0);
            assert_eq!(fl.fy_u[i], -1.0);
        }
        assert_eq!(fl.mu, 1.0);
        assert_eq!(fl.k1, 1.0);
    }

    #[test]
    fn offset_converges_to_root_and_increases() {
        let g = PolicySpec::linear(1.0).unwrap();
        let fl = FluidSolution::solve(&drained(1.0), &g, 20.0, 1e-3).unwrap();
        let u_end = *fl.u.last().unwrap();
        // fine-step oracle
        let fine = rk4_offset(&drained(1.0), &g, 200_000, 1e-4);
        assert!((u_end - fine[200_000]).abs() < 1e-9);
        assert!((u_end - 2f64.ln()).abs() < 1e-6);
        assert!(fl.u.windows(2).all(|w| w[1] >= w[0]));
        for &x in &fl.u {
            assert!(x.abs() <= fl.k.abs() + 1e-8);
        }
    }

    #[test]
    fn time_change_round_trip_and_slope() {
        let g = PolicySpec::linear(1.0).unwrap();
        let fl = FluidSolution::solve(&drained(1.0), &g, 40.0, 40.0 / 4096.0).unwrap();
        for i in (0..fl.len()).step_by(37) {
            let back = fl.gamma_at(fl.lambda[i]);
            assert!((back - fl.t[i]).abs() < 1e-8, "i={i}");
        }
        assert!(fl.lambda.windows(2).all(|w| w[1] > w[0]));
        let n = fl.len() - 1;
        let j = n - n / 4;
        let slope = (fl.lambda[n] - fl.lambda[j]) / (fl.t[n] - fl.t[j]);
        assert!((0.49..=0.51).contains(&slope), "slope {slope}");
        // beyond Lambda(T) the inverse is undefined
        assert!(fl.gamma.last().unwrap().is_nan());
    }

    #[test]
    fn intensity_bounds_along_fluid() {
        let g = PolicySpec::linear_plus_tanh(1.0, 0.5).unwrap();
        for b in [1.0, 3.0] {
            let fl = FluidSolution::solve(&drained(b), &g, 10.0, 10.0 / 1024.0).unwrap();
            let fmin = fl.f_u.iter().copied().fold(f64::INFINITY, f64::min);
            let fmax = fl.k1;
            assert!(fmin >= (-g.g(fl.k.abs())).exp() - 1e-9);
            let max_neg_fy = fl.fy_u.iter().map(|x| -x).fold(0.0, f64::max);
            assert!(max_neg_fy <= g.big_l() * fmax + 1e-12);
            assert!(fl.mu >= g.ell() * fmin - 1e-12 && fl.mu > 0.0);
            assert_eq!(fl.v_positive, 0);
        }
    }

    fn v_oracle_b_eq_a(t: f64) -> f64 {
        // V(t) = -2 int_0^t e^{-2(t-s)} s^{-1/2} ds
        -2.0 * integrate_left_power(|s| (-2.0 * (t - s)).exp(), 0.0, t, -0.5, Tol::rel(1e-14)).value
    }

    #[test]
    fn volterra_matches_convolution_when_b_equals_a() {
        let (p, g) = standard();
        let fl = FluidSolution::solve(&p, &g, 1.0, 1.0 / 4096.0).unwrap();
        let exact = v_oracle_b_eq_a(1.0);
        let got = *fl.v.last().unwrap();
        assert!(((got - exact) / exact).abs() < 1e-4, "{got} vs {exact}");
        assert_eq!(fl.v[0], 0.0);
    }

    #[test]
    fn volterra_small_time_asymptote() {
        let (p, g) = standard();
        let t = 1e-3;
        let fl = FluidSolution::solve(&p, &g, t, t / 512.0).unwrap();
        let ratio = fl.v.last().unwrap() / t.powf(0.5);
        let lead = -2.0 / 0.5;
        assert!(((ratio - lead) / lead).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn volterra_without_feedback_is_pure_forcing() {
        let p = standard().0;
        let fl = FluidSolution::solve(&p, &PolicySpec::no_control(), 2.0, 2.0 / 64.0).unwrap();
        for (t, v) in fl.t.iter().zip(&fl.v) {
            let exact = -2.0 * t.powf(0.5) / 0.5;
            assert!((v - exact).abs() < 1e-12 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn volterra_refinement_order() {
        // errors against a fine reference at t = 2, general b
        let g = PolicySpec::linear(1.0).unwrap();
        let p = drained(1.0);
        let reference = *FluidSolution::solve(&p, &g, 2.0, 2.0 / 16384.0).unwrap().v.last().unwrap();
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let fl = FluidSolution::solve(&p, &g, 2.0, 2.0 / n as f64).unwrap();
                (fl.v.last().unwrap() - reference).abs()
            })
            .collect();
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 0.5 - 0.3, "order {order}, errs {errs:?}");
    }

    #[test]
    fn csv_header() {
        let (p, g) = standard();
        let fl = FluidSolution::solve(&p, &g, 1.0, 0.5).unwrap();
        let csv = fl.to_csv();
        let mut lines = csv.as_str().lines();
        assert_eq!(lines.next(), Some("t,U,u,Lambda,gamma,V,fU,fyU"));
        assert_eq!(lines.count(), 3);
    }
}
