//! Piecewise cubic Hermite interpolation on a uniform grid, used wherever a
//! grid quantity has a known derivative at the nodes.

#[derive(Debug, Clone)]
pub struct UniformHermite {
    h: f64,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl UniformHermite {
    pub fn new(h: f64, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert_eq!(y.len(), dy.len());
        assert!(y.len() >= 2 && h > 0.0);
        UniformHermite { h, y, dy }
    }

    pub fn end(&self) -> f64 {
        self.h * (self.y.len() - 1) as f64
    }

    /// Value at `t`, clamped to the grid range.
    pub fn eval(&self, t: f64) -> f64 {
        let last = self.y.len() - 1;
        let s = (t / self.h).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last - 1);
        let x = s - k as f64;
        if x == 0.0 {
            return self.y[k];
        }
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        h00 * self.y[k] + h10 * self.h * self.dy[k] + h01 * self.y[k + 1] + h11 * self.h * self.dy[k + 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}

/// Piecewise-linear interpolation on a uniform grid starting at 0, clamped.
pub fn linear_uniform(h: f64, y: &[f64], t: f64) -> f64 {
    let last = y.len() - 1;
    let s = (t / h).clamp(0.0, last as f64);
    let k = (s.floor() as usize).min(last.saturating_sub(1));
    let x = s - k as f64;
    if x == 0.0 || last == 0 {
        y[k]
    } else {
        y[k] + x * (y[k + 1] - y[k])
    }
}

/// Cumulative integral on a uniform grid, fourth order at every node.
///
/// Even nodes use composite Simpson; each odd node adds the quadratic
/// interpolant's integral over its last cell.
pub fn cumulative_simpson(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    let mut k = 1;
    while k < n {
        // node k odd, k-1 even
        let base = out[k - 1];
        out[k] = if k + 1 < n {
            base + h / 12.0 * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1])
        } else {
            base + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k])
        };
        if k + 1 < n {
            out[k + 1] = base + h / 3.0 * (f[k - 1] + 4.0 * f[k] + f[k + 1]);
        }
        k += 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let h = 0.25;
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let ts: Vec<f64> = (0..9).map(|k| k as f64 * h).collect();
        let it = UniformHermite::new(h, ts.iter().map(|&t| f(t)).collect(), ts.iter().map(|&t| df(t)).collect());
        for t in [0.0, 0.1, 0.77, 1.3, 2.0] {
            assert!((it.eval(t) - f(t)).abs() < 1e-13);
        }
        assert_eq!(it.end(), 2.0);
    }

    #[test]
    fn cumulative_simpson_fourth_order() {
        for n in [2usize, 3, 4, 7, 8, 101] {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|k| (k as f64 * h).powi(2)).collect();
            let c = cumulative_simpson(h, &f);
            for (k, v) in c.iter().enumerate() {
                let t = k as f64 * h;
                let tol = if n == 2 { 0.2 } else { 1e-14 };
                assert!((v - t.powi(3) / 3.0).abs() < tol, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn linear_interp() {
        let y = [0.0, 1.0, 4.0];
        assert_eq!(linear_uniform(0.5, &y, 0.75), 2.5);
        assert_eq!(linear_uniform(0.5, &y, 5.0), 4.0);
    }
}
