//! Fractional Brownian motion, the fractional Ornstein-Uhlenbeck limit and
//! its constants, and finite-horizon long-run diagnostics.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, SimError};
use crate::model::{ModelParams, PolicySpec};
use crate::numerics::gamma;
use crate::numerics::linalg::Cholesky;
use crate::numerics::quad::{integrate, integrate_left_power, integrate_right_power, Tol};
use crate::rng;

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(SimError::domain(format!("Hurst index must lie in (0,1): got {h}")));
    }
    Ok(())
}

/// `(t^{2H} + s^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_cov(s: f64, t: f64, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(SimError::domain(format!("fBm times must be non-negative: got ({s}, {t})")));
    }
    let e = 2.0 * h;
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Covariance matrix of `B_H` on `grid`, row-major.
pub fn fbm_cov_matrix(grid: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = fbm_cov(grid[i], grid[j], h)?;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    Circulant,
    Cholesky,
}

/// An fBm ensemble; `paths[m][k]` is replication `m` at grid index `k`.
#[derive(Debug, Clone)]
pub struct FbmSample {
    pub paths: Vec<Vec<f64>>,
    /// Method actually used.
    pub method: FbmMethod,
    /// Set when the circulant embedding was rejected.
    pub warning: Option<String>,
}

fn uniform_step(grid: &[f64]) -> Option<f64> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return None;
    }
    let h = grid[1];
    let ok = grid
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - k as f64 * h).abs() <= 1e-9 * h.max(t));
    ok.then_some(h)
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `j`.
fn fgn_acov(j: usize, h: f64) -> f64 {
    let e = 2.0 * h;
    let j = j as f64;
    0.5 * ((j + 1.0).powf(e) - 2.0 * j.powf(e) + (j - 1.0).abs().powf(e))
}

/// Circulant embedding of the increment sequence of a uniform grid with
/// `n` steps: square roots of the scaled eigenvalues, or the most negative
/// eigenvalue when the embedding is not nonnegative.
pub struct CirculantEmbedding {
    n: usize,
    scale: f64,
    sqrt_eig: Vec<f64>,
}

impl CirculantEmbedding {
    pub fn new(n: usize, step: f64, h: f64) -> Result<Self, f64> {
        let m = 2 * n;
        let mut row: Vec<Complex64> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex64::new(fgn_acov(lag, h), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max.max(1.0) {
            return Err(min);
        }
        Ok(CirculantEmbedding {
            n,
            scale: step.powf(h),
            sqrt_eig: row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect(),
        })
    }

    /// Covariance of the increments reproduced by the embedding at lag `j`,
    /// recomputed from the eigenvalues (unit step).
    pub fn implied_acov(&self, j: usize) -> f64 {
        let m = self.sqrt_eig.len();
        self.sqrt_eig
            .iter()
            .enumerate()
            .map(|(k, s)| s * s * (2.0 * std::f64::consts::PI * (j * k) as f64 / m as f64).cos())
            .sum()
    }

    fn path(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        let m = self.sqrt_eig.len();
        let mut w: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|s| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex64::new(s * a, s * b)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut w);
        let mut out = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for c in w.iter().take(self.n) {
            acc += c.re * self.scale;
            out.push(acc);
        }
        out
    }
}

/// Covariance of `B_H` on a uniform grid implied by the circulant embedding.
pub fn circulant_implied_cov(grid: &[f64], h: f64) -> Result<Vec<f64>> {
    check_hurst(h)?;
    let step = uniform_step(grid).ok_or_else(|| SimError::domain("circulant method needs a uniform grid from 0"))?;
    let n = grid.len() - 1;
    let emb = CirculantEmbedding::new(n, step, h)
        .map_err(|e| SimError::Numeric(format!("negative embedding eigenvalue {e}")))?;
    let acov: Vec<f64> = (0..n).map(|j| emb.implied_acov(j) * step.powf(2.0 * h)).collect();
    // cov(B_j, B_k) = sum_{a<j} sum_{b<k} acov(|a-b|), built by 2-D prefix sums
    let np = n + 1;
    let mut c = vec![0.0; np * np];
    for j in 1..np {
        for k in 1..np {
            c[j * np + k] =
                c[(j - 1) * np + k] + c[j * np + k - 1] - c[(j - 1) * np + k - 1] + acov[(j - 1).abs_diff(k - 1)];
        }
    }
    Ok(c)
}

/// `M` fBm paths on `grid`, replication `m` seeded from `replication_seed(seed, m)`.
///
/// The circulant method needs a uniform grid; if the embedding has an
/// eigenvalue below `-1e-10` it falls back to Cholesky and records why.
pub fn sample_fbm(grid: &[f64], h: f64, m: usize, seed: u64, method: FbmMethod) -> Result<FbmSample> {
    check_hurst(h)?;
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::domain("fBm grid must start at 0 and increase strictly"));
    }
    let mut warning = None;
    if method == FbmMethod::Circulant {
        let step = uniform_step(grid).ok_or_else(|| SimError::domain("circulant method needs a uniform grid"))?;
        match CirculantEmbedding::new(grid.len() - 1, step, h) {
            Ok(emb) => {
                let paths = (0..m)
                    .into_par_iter()
                    .map(|rep| emb.path(&mut rng::stream(rng::replication_seed(seed, rep as u64), 0)))
                    .collect();
                return Ok(FbmSample {
                    paths,
                    method,
                    warning: None,
                });
            }
            Err(e) => warning = Some(format!("circulant embedding eigenvalue {e:e}; used cholesky")),
        }
    }
    let inner: Vec<f64> = grid[1..].to_vec();
    let chol = Cholesky::factor(&fbm_cov_matrix(&inner, h)?, inner.len())?;
    let paths = (0..m)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(rng::replication_seed(seed, rep as u64), 0);
            let z: Vec<f64> = (0..inner.len()).map(|_| StandardNormal.sample(&mut r)).collect();
            let mut out = vec![0.0];
            out.extend(chol.mul(&z));
            out
        })
        .collect();
    Ok(FbmSample {
        paths,
        method: FbmMethod::Cholesky,
        warning,
    })
}

/// Constants of the fractional Ornstein-Uhlenbeck limit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(C)]
pub struct FouConstants {
    /// Mean-reversion rate `a g'(0)`.
    pub kappa: f64,
    /// Hurst index `(4 - beta)/2`.
    pub hurst: f64,
    /// `sqrt(2 theta^{1-beta} / (d (beta-2)(3-beta)(4-beta)))`.
    pub sigma: f64,
    /// Stationary variance by 2-D quadrature.
    pub sigma0sq: f64,
    /// Stationary variance from `theta^{1-beta} Gamma(3-beta) / (d (beta-2) kappa^{4-beta})`.
    pub sigma0sq_closed: f64,
}

impl FouConstants {
    /// Key=value text block.
    pub fn to_text(&self) -> String {
        use crate::csvout::fmt12;
        format!(
            "kappa = {}\nH = {}\nsigma = {}\nsigma2 = {}\nsigma0sq = {}\nsigma0sq_closed = {}\n",
            fmt12(self.kappa),
            fmt12(self.hurst),
            fmt12(self.sigma),
            fmt12(self.sigma * self.sigma),
            fmt12(self.sigma0sq),
            fmt12(self.sigma0sq_closed)
        )
    }

    /// Classical fOU identity `sigma^2 H Gamma(2H) kappa^{-2H}`.
    pub fn stationary_variance_identity(&self) -> f64 {
        self.sigma * self.sigma * self.hurst * gamma(2.0 * self.hurst) * self.kappa.powf(-2.0 * self.hurst)
    }
}

fn require_long_run(p: &ModelParams, g: &PolicySpec) -> Result<f64> {
    if !p.b_equals_a() {
        return Err(SimError::Unsupported(
            "long-run limits are defined only for b = a".into(),
        ));
    }
    let kappa = p.a() * g.g_prime(0.0);
    if !(kappa > 0.0) {
        return Err(SimError::Unsupported(
            "long-run limits need a controlled policy (kappa > 0)".into(),
        ));
    }
    Ok(kappa)
}

/// Truncation point where `exp(-kappa v) < 1e-12`.
fn cutoff(kappa: f64) -> f64 {
    12.0 * std::f64::consts::LN_10 / kappa
}

/// `(kappa, H, sigma, sigma0^2)` for `b = a`.
pub fn fou_constants(p: &ModelParams, g: &PolicySpec) -> Result<FouConstants> {
    let kappa = require_long_run(p, g)?;
    let be = p.beta();
    let d = p.d() as f64;
    let c = p.theta().powf(1.0 - be) / (d * (be - 2.0));
    let sigma = (2.0 * p.theta().powf(1.0 - be) / (d * (be - 2.0) * (3.0 - be) * (4.0 - be))).sqrt();
    let vmax = cutoff(kappa) + 5.0;
    let gam = 2.0 - be;
    let tol = Tol::rel(1e-12);
    // int_0^inf int_0^inf e^{-kappa(u+v)} |u-v|^{2-beta} du dv, split at u = v
    let inner = |v: f64| {
        let below = if v > 0.0 {
            integrate_right_power(|u| (-kappa * u).exp(), 0.0, v, gam, tol).value
        } else {
            0.0
        };
        let w = cutoff(kappa) + 5.0;
        let above = integrate_left_power(|u| (-kappa * u).exp(), v, v + w, gam, tol).value;
        // tail beyond v + w, bounded by e^{-kappa (v+w)} w^{2-beta} / kappa
        let tail = (-kappa * (v + w)).exp() * w.powf(gam) / kappa;
        (-kappa * v).exp() * (below + above + tail)
    };
    let body = integrate(inner, 0.0, vmax, Tol::rel(1e-11)).value;
    let outer_tail = (-kappa * vmax).exp() * gamma(3.0 - be) / kappa.powf(3.0 - be) / kappa;
    let sigma0sq = c * (body + outer_tail);
    let sigma0sq_closed = c * gamma(3.0 - be) / kappa.powf(4.0 - be);
    Ok(FouConstants {
        kappa,
        hurst: 0.5 * (4.0 - be),
        sigma,
        sigma0sq,
        sigma0sq_closed,
    })
}

/// `cov(B_H(t), Z_inf(0)) = theta^{1-beta}/(sigma d (beta-2)) int_0^t int_0^inf e^{-kappa v} (u+v)^{2-beta} dv du`.
pub fn cross_cov_bh_z0(t: f64, c: &FouConstants, p: &ModelParams, g: &PolicySpec) -> Result<f64> {
    let kappa = require_long_run(p, g)?;
    if !(t >= 0.0) {
        return Err(SimError::domain(format!("time must be non-negative: got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let be = p.beta();
    let gam = 2.0 - be;
    let vmax = cutoff(kappa);
    let inner = |u: f64| {
        let body = if u > 0.0 {
            integrate(|v| (-kappa * v).exp() * (u + v).powf(gam), 0.0, vmax, Tol::rel(1e-12)).value
        } else {
            integrate_left_power(|v| (-kappa * v).exp(), 0.0, vmax, gam, Tol::rel(1e-12)).value
        };
        body + (-kappa * vmax).exp() * (u + vmax).powf(gam) / kappa
    };
    let q = integrate(inner, 0.0, t, Tol::rel(1e-11)).value;
    Ok(p.theta().powf(1.0 - be) / (c.sigma * p.d() as f64 * (be - 2.0)) * q)
}

/// Stationary fOU ensemble on a uniform grid.
///
/// `(Z(0), B_H(t_1..t_N))` is drawn jointly by one Cholesky factorization;
/// then `Z(t_{k+1}) = e^{-kappa D} Z(t_k) + sigma I_k`, where `I_k` is
/// `int e^{-kappa(t_{k+1}-s)} dB_H(s)` after integration by parts with a
/// trapezoid rule on the remaining Riemann integral.
pub fn sample_fou(
    grid: &[f64],
    c: &FouConstants,
    p: &ModelParams,
    g: &PolicySpec,
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    sample_fou_with(grid, c, c.sigma, p, g, m, seed)
}

fn sample_fou_with(
    grid: &[f64],
    c: &FouConstants,
    diffusion: f64,
    p: &ModelParams,
    g: &PolicySpec,
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    require_long_run(p, g)?;
    let step = uniform_step(grid).ok_or_else(|| SimError::domain("fOU sampling needs a uniform grid from 0"))?;
    let n = grid.len() - 1;
    let dim = n + 1;
    let mut cov = vec![0.0; dim * dim];
    cov[0] = c.sigma0sq;
    for i in 1..dim {
        let x = cross_cov_bh_z0(grid[i], c, p, g)?;
        cov[i] = x;
        cov[i * dim] = x;
        for j in 1..dim {
            cov[i * dim + j] = fbm_cov(grid[i], grid[j], c.hurst)?;
        }
    }
    let chol = Cholesky::factor(&cov, dim)?;
    let decay = (-c.kappa * step).exp();
    let half = 0.5 * c.kappa * step;
    Ok((0..m)
        .into_par_iter()
        .map(|rep| {
            let mut r = rng::stream(rng::replication_seed(seed, rep as u64), 0);
            let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let x = chol.mul(&z);
            let mut out = Vec::with_capacity(dim);
            out.push(x[0]);
            let mut b_prev = 0.0;
            for k in 1..dim {
                let b = x[k];
                let incr = b * (1.0 - half) - decay * b_prev * (1.0 + half);
                let next = decay * out[k - 1] + diffusion * incr;
                out.push(next);
                b_prev = b;
            }
            out
        })
        .collect())
}

/// Trapezoid residual of `Z(t) = Z(0) - kappa int_0^t Z ds + sigma B_H(t)`.
pub fn fou_residual(grid: &[f64], z: &[f64], b: &[f64], c: &FouConstants) -> f64 {
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..grid.len() {
        integral += 0.5 * (grid[k] - grid[k - 1]) * (z[k] + z[k - 1]);
        worst = worst.max((z[k] - z[0] + c.kappa * integral - c.sigma * b[k]).abs());
    }
    worst
}

/// One long-run quantity at finite horizon together with its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunValue {
    pub finite: f64,
    pub limit: f64,
}

impl LongRunValue {
    pub fn gap(&self) -> f64 {
        (self.finite - self.limit).abs()
    }
    pub fn rel_gap(&self) -> f64 {
        self.gap() / self.limit.abs()
    }
}

/// `E|Zbar(T)|^2`, `E|Rbar_T(t)|^2` and `cov(Zbar(T), Rbar_T(t))` with
/// `Rbar_T(t) = Rbar(T+t) - Rbar(T)`, for `b = a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunDiag {
    pub zbar_var: LongRunValue,
    pub rbar_incr_var: LongRunValue,
    pub cross: LongRunValue,
}

/// Finite-horizon values by one-dimensional quadratures of the `b = a`
/// increment covariance `|u-v|^{2-beta} - (u v v)^{2-beta}` against the
/// explicit solution, and their limits.
pub fn longrun_diag(big_t: f64, t: f64, c: &FouConstants, p: &ModelParams, g: &PolicySpec) -> Result<LongRunDiag> {
    let kappa = require_long_run(p, g)?;
    if !(big_t >= 0.0 && t >= 0.0) {
        return Err(SimError::domain("horizons must be non-negative"));
    }
    let be = p.beta();
    let (gam, q3, q4) = (2.0 - be, 3.0 - be, 4.0 - be);
    let cst = p.theta().powf(1.0 - be) / (p.d() as f64 * (be - 2.0));
    let tol = Tol::rel(1e-12).with_abs(1e-300);

    // h1: 2 int_0^T e^{-2 kappa v} int_0^{T-v} e^{-kappa w} w^{2-beta} dw dv
    let h1 = if big_t > 0.0 {
        2.0 * integrate(
            |v| {
                let top = big_t - v;
                if top <= 0.0 {
                    return 0.0;
                }
                (-2.0 * kappa * v).exp()
                    * integrate_left_power(|w| (-kappa * w).exp(), 0.0, top, gam, tol).value
            },
            0.0,
            big_t,
            Tol::rel(1e-11),
        )
        .value
    } else {
        0.0
    };
    // h2: (2/kappa) int_0^T (e^{-2 kappa (T-v)} - e^{-kappa (2T - v)}) v^{2-beta} dv
    let h2 = if big_t > 0.0 {
        2.0 / kappa
            * integrate_left_power(
                |v| (-2.0 * kappa * (big_t - v)).exp() - (-kappa * (2.0 * big_t - v)).exp(),
                0.0,
                big_t,
                gam,
                tol,
            )
            .value
    } else {
        0.0
    };
    let zbar_var = LongRunValue {
        finite: cst * (h1 - h2),
        limit: c.sigma0sq,
    };

    // 2 int_0^t [ w^{3-beta}/(3-beta) - w (T+w)^{2-beta} ] dw
    let rr = 2.0
        * integrate(
            |w| w.powf(q3) / q3 - w * (big_t + w).powf(gam),
            0.0,
            t,
            Tol::rel(1e-12).with_abs(1e-300),
        )
        .value;
    let rbar_incr_var = LongRunValue {
        finite: cst * rr,
        limit: c.sigma * c.sigma * t.powf(q4),
    };

    // (1/(3-beta)) int_0^T e^{-kappa w} [(t+w)^{3-beta} - w^{3-beta} - (T+t)^{3-beta} + T^{3-beta}] dw
    let shift = (big_t + t).powf(q3) - big_t.powf(q3);
    let cross_finite = if big_t > 0.0 {
        integrate(
            |w| (-kappa * w).exp() * ((t + w).powf(q3) - w.powf(q3) - shift),
            0.0,
            big_t,
            Tol::rel(1e-12).with_abs(1e-300),
        )
        .value
            / q3
    } else {
        0.0
    };
    let vmax = cutoff(kappa);
    let cross_limit = integrate(
        |w| (-kappa * w).exp() * ((t + w).powf(q3) - w.powf(q3)),
        0.0,
        vmax,
        Tol::rel(1e-12).with_abs(1e-300),
    )
    .value
        / q3;
    Ok(LongRunDiag {
        zbar_var,
        rbar_incr_var,
        cross: LongRunValue {
            finite: cst * cross_finite,
            limit: cst * cross_limit,
        },
    })
}
