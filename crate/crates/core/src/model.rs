//! Model parameters, the admission-control policy catalog and the arrival
//! intensity `f(t, y) = exp(-g(y - b t))`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError, ValidationError};

/// Open interval of admissible rate exponents for a tail index.
///
/// The lower end is `beta - 1`; the upper end is `min(3 beta - 5, 5 - beta)`.
pub fn alpha_window(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 2.0 && beta < 3.0) {
        return Err(SimError::domain(format!("beta out of (2,3): got {beta}")));
    }
    Ok((beta - 1.0, (3.0 * beta - 5.0).min(5.0 - beta)))
}

/// Scaling and shape parameters of the scaled workload system.
///
/// Only obtainable through [`ModelParams::new`], which checks every standing
/// assumption. The derived constant `a = 1/(theta (beta - 2))` is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    beta: f64,
    theta: f64,
    alpha: f64,
    b: f64,
    d: usize,
    n: u64,
}

impl ModelParams {
    pub fn new(beta: f64, theta: f64, alpha: f64, b: f64, d: usize, n: u64) -> Result<Self> {
        let p = ModelParams {
            beta,
            theta,
            alpha,
            b,
            d,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`ModelParams::new`] with the drain rate pinned to `a` exactly.
    pub fn with_b_equal_a(beta: f64, theta: f64, alpha: f64, d: usize, n: u64) -> Result<Self> {
        let a = 1.0 / (theta * (beta - 2.0));
        Self::new(beta, theta, alpha, a, d, n)
    }

    /// Re-checks all invariants, reporting the first violation.
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (name, v) in [
            ("beta", self.beta),
            ("theta", self.theta),
            ("alpha", self.alpha),
            ("b", self.b),
        ] {
            if !v.is_finite() {
                return Err(ValidationError::NonFinite(name));
            }
        }
        if !(self.beta > 2.0 && self.beta < 3.0) {
            return Err(ValidationError::BetaOutOfRange(self.beta));
        }
        if self.theta <= 0.0 {
            return Err(ValidationError::ThetaNonPositive(self.theta));
        }
        let (lo, hi) = alpha_window(self.beta).expect("beta checked above");
        if self.alpha <= lo {
            return Err(ValidationError::AlphaBelowWindow {
                alpha: self.alpha,
                lo,
            });
        }
        if self.alpha >= hi {
            return Err(ValidationError::AlphaAboveWindow {
                alpha: self.alpha,
                hi,
            });
        }
        if self.b <= 0.0 {
            return Err(ValidationError::DrainRateNonPositive(self.b));
        }
        if self.d == 0 {
            return Err(ValidationError::NoStations);
        }
        if self.n == 0 {
            return Err(ValidationError::ScaleZero);
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `a = 1/(theta (beta - 2))`, the mean session length under the unscaled law.
    pub fn a(&self) -> f64 {
        1.0 / (self.theta * (self.beta - 2.0))
    }

    /// True when `b` equals `a` up to a few ulps; enables the exact fluid branch.
    pub fn b_equals_a(&self) -> bool {
        let a = self.a();
        (self.b - a).abs() <= 4.0 * f64::EPSILON * a.abs()
    }

    /// Copy with a different scaling level; re-validated.
    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(self.beta, self.theta, self.alpha, self.b, self.d, n)
    }

    /// Copy with a different station count; re-validated.
    pub fn with_d(&self, d: usize) -> Result<Self> {
        Self::new(self.beta, self.theta, self.alpha, self.b, d, self.n)
    }

    /// `n^alpha`: per-station arrival rate in operational time.
    pub fn arrival_scale(&self) -> f64 {
        (self.n as f64).powf(self.alpha)
    }

    /// `n^(alpha - 1)`: workload normalisation.
    pub fn workload_scale(&self) -> f64 {
        (self.n as f64).powf(self.alpha - 1.0)
    }

    /// `n^((alpha + beta - 3)/2)`: fluctuation normalisation.
    pub fn fluctuation_scale(&self) -> f64 {
        (self.n as f64).powf(0.5 * (self.alpha + self.beta - 3.0))
    }

    /// `n^(beta - 2)`: order of the bias term.
    pub fn bias_scale(&self) -> f64 {
        (self.n as f64).powf(self.beta - 2.0)
    }

    /// Hurst index `(4 - beta)/2` of the limit driver.
    pub fn hurst(&self) -> f64 {
        0.5 * (4.0 - self.beta)
    }
}

/// Admission-control policy families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// `g(x) = c x`.
    Linear { c: f64 },
    /// `g(x) = c1 x + c2 tanh(x)`.
    LinearPlusTanh { c1: f64, c2: f64 },
    /// `g = 0`: no admission control. Outside the policy assumption and
    /// only meaningful together with `b = a`.
    NoControl,
}

/// A catalog policy with certified derivative bounds `ell <= g' <= big_l`,
/// `|g''| <= big_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicySpec {
    kind: PolicyKind,
    ell: f64,
    big_l: f64,
}

impl PolicySpec {
    pub fn linear(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ValidationError::PolicyCoefficient {
                name: "c",
                requirement: "positive",
                value: c,
            }
            .into());
        }
        Ok(PolicySpec {
            kind: PolicyKind::Linear { c },
            ell: c,
            big_l: c,
        })
    }

    /// `g' = c1 + c2 sech^2` lies in `[c1, c1 + c2]` and
    /// `|g''| = 2 c2 sech^2 |tanh| <= 0.77 c2`, so `L = c1 + c2` covers both.
    pub fn linear_plus_tanh(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(ValidationError::PolicyCoefficient {
                name: "c1",
                requirement: "positive",
                value: c1,
            }
            .into());
        }
        if !(c2.is_finite() && c2 >= 0.0) {
            return Err(ValidationError::PolicyCoefficient {
                name: "c2",
                requirement: "non-negative",
                value: c2,
            }
            .into());
        }
        Ok(PolicySpec {
            kind: PolicyKind::LinearPlusTanh { c1, c2 },
            ell: c1,
            big_l: c1 + c2,
        })
    }

    /// The `g = 0` baseline.
    pub fn no_control() -> Self {
        PolicySpec {
            kind: PolicyKind::NoControl,
            ell: 0.0,
            big_l: 0.0,
        }
    }

    pub fn from_kind(kind: PolicyKind) -> Result<Self> {
        match kind {
            PolicyKind::Linear { c } => Self::linear(c),
            PolicyKind::LinearPlusTanh { c1, c2 } => Self::linear_plus_tanh(c1, c2),
            PolicyKind::NoControl => Ok(Self::no_control()),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }
    pub fn big_l(&self) -> f64 {
        self.big_l
    }

    /// Whether the policy satisfies the strict-monotonicity assumption
    /// (false only for the baseline).
    pub fn is_controlled(&self) -> bool {
        !matches!(self.kind, PolicyKind::NoControl)
    }

    /// `(g(x), g'(x), g''(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self.kind {
            PolicyKind::Linear { c } => (c * x, c, 0.0),
            PolicyKind::LinearPlusTanh { c1, c2 } => {
                let th = x.tanh();
                let sech2 = 1.0 - th * th;
                (c1 * x + c2 * th, c1 + c2 * sech2, -2.0 * c2 * sech2 * th)
            }
            PolicyKind::NoControl => (0.0, 0.0, 0.0),
        }
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match self.kind {
            PolicyKind::Linear { c } => c * x,
            PolicyKind::LinearPlusTanh { c1, c2 } => c1 * x + c2 * x.tanh(),
            PolicyKind::NoControl => 0.0,
        }
    }

    #[inline]
    pub fn g_prime(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// `int_0^len exp(-g(x0 + slope * s)) ds`.
    ///
    /// Closed form for linear policies; composite 8-point Gauss-Legendre
    /// otherwise, with panels short enough that the integrand is near-polynomial.
    pub fn integrate_exp_neg_g(&self, x0: f64, slope: f64, len: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        match self.kind {
            PolicyKind::NoControl => len,
            PolicyKind::Linear { c } => {
                let k = c * slope;
                let e0 = (-c * x0).exp();
                if k.abs() * len < 1e-8 {
                    e0 * len * (1.0 - 0.5 * k * len)
                } else {
                    // e0 * (1 - e^{-k len}) / k
                    -e0 * (-k * len).exp_m1() / k
                }
            }
            PolicyKind::LinearPlusTanh { .. } => {
                let panels = (2.0 * slope.abs() * len).ceil().clamp(1.0, 1e6) as usize;
                let w = len / panels as f64;
                (0..panels)
                    .map(|k| {
                        let lo = k as f64 * w;
                        crate::numerics::quad::gauss_legendre_8(
                            |s| (-self.g(x0 + slope * s)).exp(),
                            lo,
                            lo + w,
                        )
                    })
                    .sum()
            }
        }
    }
}

/// `(f, f_y)` at time `t` and average workload `y`:
/// `f = exp(-g(y - b t))`, `f_y = -f g'(y - b t)`.
pub fn intensity_eval(p: &ModelParams, g: &PolicySpec, t: f64, y: f64) -> (f64, f64) {
    let x = y - p.b() * t;
    let (gx, gp, _) = g.eval(x);
    let f = (-gx).exp();
    (f, -f * gp)
}
