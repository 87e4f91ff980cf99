//! Second-order limit objects: covariances of the Gaussian drivers `R_i` and
//! `Rbar`, the limit average fluctuation `Zbar` through its explicit
//! solution, samplers for both, and the uniform moment bound.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::csvout::{Cell, Csv};
use crate::error::{Result, SimError};
use crate::fluid::FluidSolution;
use crate::model::ModelParams;
use crate::numerics::interp::{cumulative_simpson, UniformHermite};
use crate::numerics::linalg::Cholesky;
use crate::numerics::quad::{gauss_legendre_8, integrate, Tol};
use crate::numerics::gamma;
use crate::rng;

/// `2 theta^{1-beta} Gamma(4-beta) / (d (beta-2)(3-beta)(a mu)^{4-beta})` and `mu`.
pub fn moment_bound(p: &ModelParams, fluid: &FluidSolution) -> (f64, f64) {
    let mu = fluid.mu;
    let be = p.beta();
    let bound = 2.0 * p.theta().powf(1.0 - be) * gamma(4.0 - be)
        / (p.d() as f64 * (be - 2.0) * (3.0 - be) * (p.a() * mu).powf(4.0 - be));
    (bound, mu)
}

/// Discretization of the Young integral `int phi dRbar`.
/// The left-point sum carries an `O(kappa h)` relative variance bias; the
/// trapezoid weights reduce it to `O((kappa h)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum YoungRule {
    /// `phi(t_j) (Rbar(t_{j+1}) - Rbar(t_j))`.
    LeftPoint,
    /// `(phi(t_j) + phi(t_{j+1}))/2 (Rbar(t_{j+1}) - Rbar(t_j))`.
    #[default]
    Trapezoid,
}

/// `psi = log phi = -a int_0^t f_y(z, U(z)) dz` and integrals of `phi`.
#[derive(Debug, Clone)]
enum LogPhi {
    /// `psi(t) = kappa t`.
    Linear { kappa: f64 },
    /// Grid version; `j` holds `J(x) = int_0^x exp(psi(u) - psi(x)) du`.
    Grid {
        h: f64,
        psi: UniformHermite,
        j: UniformHermite,
    },
}

impl LogPhi {
    fn new(p: &ModelParams, fluid: &FluidSolution) -> Self {
        if p.b_equals_a() {
            return LogPhi::Linear {
                kappa: -p.a() * fluid.fy_u[0],
            };
        }
        let h = fluid.step();
        let dpsi: Vec<f64> = fluid.fy_u.iter().map(|f| -p.a() * f).collect();
        let psi_v = cumulative_simpson(h, &dpsi);
        let psi = UniformHermite::new(h, psi_v.clone(), dpsi.clone());
        let n = psi_v.len();
        let mut jv = vec![0.0; n];
        for k in 0..n - 1 {
            let top = psi_v[k + 1];
            let cell = gauss_legendre_8(|u| (psi.eval(u) - top).exp(), k as f64 * h, (k + 1) as f64 * h);
            jv[k + 1] = (psi_v[k] - top).exp() * jv[k] + cell;
        }
        let dj: Vec<f64> = jv.iter().zip(&dpsi).map(|(j, d)| 1.0 - d * j).collect();
        LogPhi::Grid {
            h,
            psi,
            j: UniformHermite::new(h, jv, dj),
        }
    }

    fn psi(&self, t: f64) -> f64 {
        match self {
            LogPhi::Linear { kappa } => kappa * t,
            LogPhi::Grid { psi, .. } => psi.eval(t),
        }
    }

    /// `int_z^{z+len} exp(psi(u) - psi(s)) du` for `z + len <= s`, with
    /// `gap = s - z`. Taking the length and gap directly keeps the integrand
    /// free of cancellation noise when `z` is close to `s`.
    fn dint(&self, z: f64, len: f64, gap: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        match self {
            LogPhi::Linear { kappa } => {
                if *kappa == 0.0 {
                    len
                } else {
                    (kappa * (len - gap)).exp() * -(-kappa * len).exp_m1() / kappa
                }
            }
            LogPhi::Grid { h, psi, j } => {
                let ps = psi.eval(z + gap);
                if len <= 4.0 * h {
                    gauss_legendre_8(|v| (psi.eval(z + v) - ps).exp(), 0.0, len)
                } else {
                    let x = z + len;
                    (psi.eval(x) - ps).exp() * j.eval(x) - (psi.eval(z) - ps).exp() * j.eval(z)
                }
            }
        }
    }
}

/// Station-level covariance of the driver, closed form when `f(t, U(t)) = 1`.
fn cov_r_unit_intensity(beta: f64, theta: f64, s: f64, t: f64) -> f64 {
    let (s, t) = (s.min(t), s.max(t));
    let (q3, q4) = (3.0 - beta, 4.0 - beta);
    let w = t - s;
    let cross = (t.powf(q4) - w.powf(q4)) / q4 - w * (t.powf(q3) - w.powf(q3)) / q3;
    theta.powf(1.0 - beta)
        * (2.0 * s.powf(q4) / (q3 * q4) + (s.powf(q4) / q4 - cross) / (beta - 2.0))
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(SimError::domain(format!("covariance times must be non-negative: got ({s}, {t})")));
    }
    Ok(())
}

/// `cov(R_i(s), R_i(t))` from the one-dimensional reduced form, relative
/// tolerance `1e-8`.
pub fn cov_r(s: f64, t: f64, fluid: &FluidSolution) -> Result<f64> {
    check_times(s, t)?;
    let p = fluid.params();
    let be = p.beta();
    if s.max(t) > fluid.horizon() * (1.0 + 1e-12) {
        return Err(SimError::domain(format!("time {} beyond the fluid horizon", s.max(t))));
    }
    if p.b_equals_a() {
        return Ok(cov_r_unit_intensity(be, p.theta(), s, t));
    }
    let (s, t) = (s.min(t), s.max(t));
    if s == 0.0 {
        return Ok(0.0);
    }
    let (q3, c2) = (3.0 - be, be - 2.0);
    let kernel = |z: f64| {
        let w = s - z;
        let lag = t - z;
        fluid.f_at(z) * (2.0 / q3 * w.powf(q3) + w / c2 * (w.powf(2.0 - be) - lag.powf(2.0 - be)))
    };
    let q = integrate(kernel, 0.0, s, Tol::rel(1e-10).with_abs(1e-15));
    Ok(p.theta().powf(1.0 - be) * q.value)
}

/// Precomputed limit objects on a time grid.
#[derive(Debug, Clone)]
pub struct GaussianLimitKit {
    params: ModelParams,
    fluid: FluidSolution,
    grid: Vec<f64>,
    log_phi: LogPhi,
    /// Station-level covariance on the grid, row-major.
    pub cov_r: Vec<f64>,
    /// `cov_r / d`.
    pub cov_rbar: Vec<f64>,
    /// `phi` and `1/phi` on the grid.
    pub phi: Vec<f64>,
    pub phitilde: Vec<f64>,
    /// `f_y(t, U(t))` on the grid.
    pub fy: Vec<f64>,
    chol: Cholesky,
    pub moment_bound: f64,
    pub mu: f64,
    pub young_rule: YoungRule,
}

impl GaussianLimitKit {
    /// Build on `grid` (increasing, starting at 0, inside the fluid horizon).
    pub fn build(fluid: &FluidSolution, grid: Vec<f64>) -> Result<Self> {
        let p = *fluid.params();
        if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::domain("kit grid must start at 0 and increase strictly"));
        }
        let n = grid.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let vals = pairs
            .par_iter()
            .map(|&(i, j)| cov_r(grid[i], grid[j], fluid))
            .collect::<Result<Vec<f64>>>()?;
        let mut cov = vec![0.0; n * n];
        for (&(i, j), v) in pairs.iter().zip(vals) {
            cov[i * n + j] = v;
            cov[j * n + i] = v;
        }
        let d = p.d() as f64;
        let cov_rbar: Vec<f64> = cov.iter().map(|c| c / d).collect();
        // R(0) = 0: factor the block of strictly positive times
        let m = n - 1;
        let mut inner = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                inner[i * m + j] = cov_rbar[(i + 1) * n + j + 1];
            }
        }
        let chol = Cholesky::factor(&inner, m)?;
        let log_phi = LogPhi::new(&p, fluid);
        let phi: Vec<f64> = grid.iter().map(|&t| log_phi.psi(t).exp()).collect();
        let phitilde = grid.iter().map(|&t| (-log_phi.psi(t)).exp()).collect();
        let fy = grid.iter().map(|&t| fluid.fy_at(t)).collect();
        let (moment_bound, mu) = moment_bound(&p, fluid);
        Ok(GaussianLimitKit {
            params: p,
            fluid: fluid.clone(),
            grid,
            log_phi,
            cov_r: cov,
            cov_rbar,
            phi,
            phitilde,
            fy,
            chol,
            moment_bound,
            mu,
            young_rule: YoungRule::default(),
        })
    }

    pub fn with_young_rule(mut self, rule: YoungRule) -> Self {
        self.young_rule = rule;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn fluid(&self) -> &FluidSolution {
        &self.fluid
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    /// Diagonal jitter used by the Cholesky factor of `cov_rbar`.
    pub fn jitter(&self) -> f64 {
        self.chol.jitter
    }

    /// `phi(t) = exp(-a int_0^t f_y(z, U(z)) dz)`.
    pub fn phi_at(&self, t: f64) -> f64 {
        self.log_phi.psi(t).exp()
    }

    /// `(theta^{1-beta}/d) int_0^{u^v} f(z, U(z)) (u v v - z)^{1-beta} dz`
    /// for `u != v`; infinite on the diagonal.
    pub fn rho(&self, u: f64, v: f64) -> f64 {
        let p = &self.params;
        let be = p.beta();
        let (lo, hi) = (u.min(v), u.max(v));
        if lo == hi {
            return f64::INFINITY;
        }
        let c = p.theta().powf(1.0 - be) / p.d() as f64;
        if p.b_equals_a() {
            return c * ((hi - lo).powf(2.0 - be) - hi.powf(2.0 - be)) / (be - 2.0);
        }
        let q = integrate(
            |z| self.fluid.f_at(z) * (hi - z).powf(1.0 - be),
            0.0,
            lo,
            Tol::rel(1e-10),
        );
        c * q.value
    }

    /// `cov(Zbar(s), Zbar(t))`.
    ///
    /// Integrates the explicit solution against the driving random measure:
    /// with `Phi` an antiderivative of `phi` and `s <= t`,
    /// `(beta-1) theta^{1-beta}/d int_0^s f(z) int_0^inf D_s D_t r^{-beta} dr dz`,
    /// `D_x = (Phi(x ^ (z+r)) - Phi(z)) / phi(x)`. The `r`-integral is split at
    /// `s - z` and `t - z`; the first piece uses `r = y^{1/(3-beta)}`, which
    /// removes the endpoint singularity, and the tail is analytic.
    pub fn cov_zbar(&self, s: f64, t: f64) -> Result<f64> {
        check_times(s, t)?;
        if s.max(t) > self.fluid.horizon() * (1.0 + 1e-12) {
            return Err(SimError::domain(format!("time {} beyond the fluid horizon", s.max(t))));
        }
        let (s, t) = (s.min(t), s.max(t));
        if s == 0.0 {
            return Ok(0.0);
        }
        let p = &self.params;
        let be = p.beta();
        let q3 = 3.0 - be;
        let pw = 1.0 / q3;
        let lp = &self.log_phi;
        let inner_tol = Tol::rel(1e-10).with_abs(1e-16);
        let outer = |z: f64| {
            let ws = s - z;
            let wt = t - z;
            // r in [0, s - z], r = y^{1/(3-beta)}
            let p1 = integrate(
                |y| {
                    let r = y.powf(pw);
                    lp.dint(z, r, ws) * lp.dint(z, r, wt) / (r * r)
                },
                0.0,
                ws.powf(q3),
                inner_tol,
            )
            .value
                * pw;
            let ds = lp.dint(z, ws, ws);
            let p2 = if wt > ws {
                ds * integrate(|r| lp.dint(z, r, wt) * r.powf(-be), ws, wt, inner_tol).value
            } else {
                0.0
            };
            let p3 = ds * lp.dint(z, wt, wt) * wt.powf(1.0 - be) / (be - 1.0);
            self.fluid.f_at(z) * (p1 + p2 + p3)
        };
        let q = integrate(outer, 0.0, s, Tol::rel(1e-9).with_abs(1e-15));
        Ok((be - 1.0) * p.theta().powf(1.0 - be) / p.d() as f64 * q.value)
    }

    /// Mean-zero Gaussian paths with covariance `cov_rbar` on the grid.
    /// Replication `m` draws from the stream of `replication_seed(seed, m)`.
    pub fn sample_rbar(&self, m: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..m)
            .into_par_iter()
            .map(|rep| self.rbar_path(rng::replication_seed(seed, rep as u64), 1.0))
            .collect()
    }

    fn rbar_path(&self, root: u64, scale: f64) -> Vec<f64> {
        let mut r = rng::stream(root, 0);
        let z: Vec<f64> = (0..self.chol.dim()).map(|_| StandardNormal.sample(&mut r)).collect();
        let mut out = Vec::with_capacity(self.grid.len());
        out.push(0.0);
        out.extend(self.chol.mul(&z).into_iter().map(|v| v * scale));
        out
    }

    /// Young-sum weights: `Zbar(t_k) = sum_j w_j Rbar(t_j)`.
    pub fn young_weights(&self, k: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.grid.len()];
        for j in 0..k {
            let c = match self.young_rule {
                YoungRule::LeftPoint => self.phi[j],
                YoungRule::Trapezoid => 0.5 * (self.phi[j] + self.phi[j + 1]),
            } * self.phitilde[k];
            w[j + 1] += c;
            w[j] -= c;
        }
        w
    }

    /// Exact variance of the discrete Young sum at grid index `k` under
    /// `cov_rbar`, for quantifying discretization bias.
    pub fn discrete_zbar_var(&self, k: usize) -> f64 {
        let w = self.young_weights(k);
        let n = self.grid.len();
        let mut s = 0.0;
        for i in 0..n {
            if w[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                s += w[i] * w[j] * self.cov_rbar[i * n + j];
            }
        }
        s
    }

    /// Discrete Young sum of the explicit solution.
    pub fn solve_limit_zbar(&self, rbar: &[f64]) -> Result<Vec<f64>> {
        if rbar.len() != self.grid.len() {
            return Err(SimError::Consistency(format!(
                "path has {} points, kit grid has {}",
                rbar.len(),
                self.grid.len()
            )));
        }
        let mut out = Vec::with_capacity(rbar.len());
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..rbar.len() {
            let wj = match self.young_rule {
                YoungRule::LeftPoint => self.phi[k - 1],
                YoungRule::Trapezoid => 0.5 * (self.phi[k - 1] + self.phi[k]),
            };
            acc += wj * (rbar[k] - rbar[k - 1]);
            out.push(self.phitilde[k] * acc);
        }
        Ok(out)
    }

    /// Trapezoid residual of `Zbar(t) = Rbar(t) + a int_0^t f_y Zbar ds`, max over the grid.
    pub fn integral_residual(&self, rbar: &[f64], zbar: &[f64]) -> f64 {
        let a = self.params.a();
        let mut integral = 0.0;
        let mut worst: f64 = 0.0;
        for k in 1..zbar.len() {
            let h = self.grid[k] - self.grid[k - 1];
            integral += 0.5 * h * (self.fy[k - 1] * zbar[k - 1] + self.fy[k] * zbar[k]);
            worst = worst.max((zbar[k] - rbar[k] - a * integral).abs());
        }
        worst
    }

    /// `M` samples of the `d`-vector limit `Z` (station-level drivers with
    /// covariance `cov_r`) together with the average `Zbar`.
    pub fn sample_limit_z(&self, d: usize, m: usize, seed: u64) -> Result<Vec<LimitZSample>> {
        if d == 0 {
            return Err(SimError::domain("station count must be at least 1"));
        }
        let scale = (self.params.d() as f64).sqrt();
        (0..m)
            .into_par_iter()
            .map(|rep| {
                let root = rng::replication_seed(seed, rep as u64);
                let r: Vec<Vec<f64>> = (0..d)
                    .map(|i| self.rbar_path(rng::splitmix64(root ^ i as u64), scale))
                    .collect();
                let n = self.grid.len();
                let rbar: Vec<f64> = (0..n).map(|k| r.iter().map(|ri| ri[k]).sum::<f64>() / d as f64).collect();
                let zbar = self.solve_limit_zbar(&rbar)?;
                // a int_0^t f_y Zbar ds, taken as Zbar - Rbar so that the
                // components average to the Young-sum Zbar exactly
                let drift: Vec<f64> = zbar.iter().zip(&rbar).map(|(z, r)| z - r).collect();
                let z = r
                    .iter()
                    .map(|ri| ri.iter().zip(&drift).map(|(x, y)| x + y).collect())
                    .collect();
                Ok(LimitZSample { z, zbar })
            })
            .collect()
    }

    /// Covariance grid with time headers on rows and columns.
    pub fn cov_grid_csv(&self, matrix: &[f64]) -> Csv {
        let heads: Vec<String> = std::iter::once("t".to_string())
            .chain(self.grid.iter().map(|t| crate::csvout::fmt12(*t)))
            .collect();
        let refs: Vec<&str> = heads.iter().map(String::as_str).collect();
        let mut c = Csv::new(&refs);
        let n = self.grid.len();
        for i in 0..n {
            let mut row = vec![self.grid[i]];
            row.extend_from_slice(&matrix[i * n..(i + 1) * n]);
            c.row_f(&row);
        }
        c
    }
}

/// One sample of the limit system.
#[derive(Debug, Clone)]
pub struct LimitZSample {
    /// `z[i][k]`: station `i` at grid index `k`.
    pub z: Vec<Vec<f64>>,
    pub zbar: Vec<f64>,
}

/// Replication-major CSV `rep,t,value`.
pub fn paths_csv(grid: &[f64], paths: &[Vec<f64>]) -> Csv {
    let mut c = Csv::new(&["rep", "t", "value"]);
    for (m, path) in paths.iter().enumerate() {
        for (t, v) in grid.iter().zip(path) {
            c.row(&[Cell::U(m as u64), Cell::F(*t), Cell::F(*v)]);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolicySpec;
    use crate::numerics::quad::integrate_right_power;

    fn fluid(b: Option<f64>, d: usize, horizon: f64) -> FluidSolution {
        let p = match b {
            None => ModelParams::with_b_equal_a(2.5, 1.0, 2.0, d, 16).unwrap(),
            Some(b) => ModelParams::new(2.5, 1.0, 2.0, b, d, 16).unwrap(),
        };
        FluidSolution::solve(&p, &PolicySpec::linear(1.0).unwrap(), horizon, horizon / 2048.0).unwrap()
    }

    fn uniform(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t * k as f64 / n as f64).collect()
    }

    #[test]
    fn cov_r_examples() {
        let fl = fluid(None, 3, 4.0);
        assert_eq!(cov_r(0.0, 2.0, &fl).unwrap(), 0.0);
        assert!((cov_r(1.0, 1.0, &fl).unwrap() - 8.0 / 3.0).abs() < 1e-13);
        assert!(cov_r(-1.0, 1.0, &fl).is_err());
        let fb = fluid(Some(1.0), 1, 4.0);
        for (s, t) in [(0.5, 2.0), (3.0, 1.2)] {
            assert_eq!(cov_r(s, t, &fb).unwrap(), cov_r(t, s, &fb).unwrap());
        }
    }

    #[test]
    fn reduced_form_quadrature_matches_closed_form() {
        // drive the quadrature branch with f = 1 by comparing against the
        // closed form at b = a
        let fl = fluid(None, 1, 4.0);
        for (s, t) in [(0.3f64, 0.3f64), (0.5, 2.5), (1.7, 3.9)] {
            let s1 = s.min(t);
            let q = integrate(
                |z| {
                    let w: f64 = s1 - z;
                    let lag: f64 = t.max(s) - z;
                    4.0 * w.powf(0.5) + w / 0.5 * (w.powf(-0.5) - lag.powf(-0.5))
                },
                0.0,
                s1,
                Tol::rel(1e-12),
            )
            .value;
            assert!((q - cov_r(s, t, &fl).unwrap()).abs() < 1e-9 * q.abs());
        }
    }

    #[test]
    fn moment_bound_examples() {
        let (b1, mu) = moment_bound(fluid(None, 1, 1.0).params(), &fluid(None, 1, 1.0));
        assert_eq!(mu, 1.0);
        assert!((b1 - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((b1 - 2.50663).abs() < 1e-5);
        let f4 = fluid(None, 4, 1.0);
        let (b4, _) = moment_bound(f4.params(), &f4);
        assert!((b4 - b1 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn phi_identities() {
        for b in [None, Some(1.0), Some(3.0)] {
            let fl = fluid(b, 1, 4.0);
            let kit = GaussianLimitKit::build(&fl, uniform(4.0, 16)).unwrap();
            for (p, q) in kit.phi.iter().zip(&kit.phitilde) {
                assert!((p * q - 1.0).abs() < 1e-15);
            }
            assert!(kit.phi.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(kit.cov_r[1], 0.0);
        }
    }

    #[test]
    fn grid_phi_integral_matches_quadrature() {
        let fl = fluid(Some(1.0), 1, 4.0);
        let lp = LogPhi::new(fl.params(), &fl);
        for (z, x, s) in [(0.1, 0.1005, 0.2), (0.0, 3.0, 3.5), (1.0, 2.0, 2.0)] {
            let direct = integrate(|u| (lp.psi(u) - lp.psi(s)).exp(), z, x, Tol::rel(1e-13)).value;
            assert!((lp.dint(z, x - z, s - z) - direct).abs() < 1e-9 * direct, "{z} {x} {s}");
        }
    }

    #[test]
    fn cov_zbar_zero_and_symmetric() {
        let fl = fluid(Some(1.0), 1, 2.0);
        let kit = GaussianLimitKit::build(&fl, uniform(2.0, 4)).unwrap();
        assert_eq!(kit.cov_zbar(0.0, 0.0).unwrap(), 0.0);
        let a = kit.cov_zbar(0.5, 1.5).unwrap();
        let b = kit.cov_zbar(1.5, 0.5).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn cov_zbar_without_feedback_is_driver_covariance() {
        let p = ModelParams::with_b_equal_a(2.5, 1.0, 2.0, 2, 16).unwrap();
        let fl = FluidSolution::solve(&p, &PolicySpec::no_control(), 3.0, 3.0 / 256.0).unwrap();
        let kit = GaussianLimitKit::build(&fl, uniform(3.0, 6)).unwrap();
        for (s, t) in [(1.0, 1.0), (0.5, 2.5), (3.0, 2.0)] {
            let want = cov_r(s, t, &fl).unwrap() / 2.0;
            let got = kit.cov_zbar(s, t).unwrap();
            assert!(((got - want) / want).abs() < 1e-7, "{s} {t}: {got} vs {want}");
        }
    }

    #[test]
    fn cov_zbar_below_moment_bound() {
        let fl = fluid(None, 1, 20.0);
        let kit = GaussianLimitKit::build(&fl, uniform(20.0, 4)).unwrap();
        for t in [1.0, 5.0, 20.0] {
            assert!(kit.cov_zbar(t, t).unwrap() <= kit.moment_bound);
        }
    }

    #[test]
    fn young_sum_specializes_to_exponential_weights() {
        let fl = fluid(None, 1, 2.0);
        let kit = GaussianLimitKit::build(&fl, uniform(2.0, 32)).unwrap();
        let r = &kit.sample_rbar(1, 9)[0];
        let g = kit.grid();
        let left = kit.clone().with_young_rule(YoungRule::LeftPoint);
        let z = left.solve_limit_zbar(r).unwrap();
        let zt = kit.solve_limit_zbar(r).unwrap();
        for k in [1usize, 10, 32] {
            let direct: f64 = (0..k).map(|j| (2.0 * g[j]).exp() * (r[j + 1] - r[j])).sum::<f64>() * (-2.0 * g[k]).exp();
            assert!((z[k] - direct).abs() < 1e-12 * (1.0 + direct.abs()));
            let trap: f64 = (0..k)
                .map(|j| 0.5 * ((2.0 * g[j]).exp() + (2.0 * g[j + 1]).exp()) * (r[j + 1] - r[j]))
                .sum::<f64>()
                * (-2.0 * g[k]).exp();
            assert!((zt[k] - trap).abs() < 1e-12 * (1.0 + trap.abs()));
        }
        let zero = kit.solve_limit_zbar(&vec![0.0; g.len()]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(kit.solve_limit_zbar(&[0.0; 3]).is_err());
    }

    #[test]
    fn trapezoid_weights_reduce_variance_bias() {
        let fl = fluid(None, 1, 4.0);
        let kit = GaussianLimitKit::build(&fl, uniform(4.0, 128)).unwrap();
        let k = kit.grid().len() - 1;
        let exact = kit.cov_zbar(4.0, 4.0).unwrap();
        let trap = (kit.discrete_zbar_var(k) - exact).abs() / exact;
        let left = (kit.clone().with_young_rule(YoungRule::LeftPoint).discrete_zbar_var(k) - exact).abs() / exact;
        assert!(trap < 0.005 && left > 10.0 * trap, "{trap} {left}");
    }

    #[test]
    fn young_residual_shrinks_with_refinement() {
        let fl = fluid(Some(1.0), 1, 2.0);
        let res: Vec<f64> = [16usize, 64, 256]
            .iter()
            .map(|&n| {
                let kit = GaussianLimitKit::build(&fl, uniform(2.0, n)).unwrap();
                let paths = kit.sample_rbar(20, 3);
                paths
                    .iter()
                    .map(|r| kit.integral_residual(r, &kit.solve_limit_zbar(r).unwrap()))
                    .sum::<f64>()
            })
            .collect();
        assert!(res[1] < res[0] && res[2] < res[1], "{res:?}");
    }

    #[test]
    fn limit_z_structure() {
        let fl = fluid(None, 1, 1.0);
        let kit = GaussianLimitKit::build(&fl, uniform(1.0, 8)).unwrap();
        let one = kit.sample_limit_z(1, 3, 5).unwrap();
        for s in &one {
            for (a, b) in s.z[0].iter().zip(&s.zbar) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let three = kit.sample_limit_z(3, 3, 5).unwrap();
        for s in &three {
            for k in 0..9 {
                let avg = (s.z[0][k] + s.z[1][k] + s.z[2][k]) / 3.0;
                assert!((avg - s.zbar[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_time_driver_variance() {
        // cov_R(t,t) for general b at small t is dominated by f(0,0) = 1
        let fl = fluid(Some(1.0), 1, 1.0);
        let t = 1e-3;
        let v = cov_r(t, t, &fl).unwrap();
        let lead = 2.0 / (0.5 * 1.5) * t.powf(1.5);
        assert!(((v - lead) / lead).abs() < 1e-2);
        // and matches a direct right-power quadrature of the same kernel
        let q = integrate_right_power(|z| fl.f_at(z) * 4.0, 0.0, t, 0.5, Tol::rel(1e-12)).value;
        assert!(((v - q) / q).abs() < 1e-7);
    }
}
