use crate::error::{Result, SimError};

/// Dense lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    /// Diagonal jitter that was added to make the factorization succeed.
    pub jitter: f64,
}

fn try_factor(a: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            if i == j {
                s += jitter;
            }
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

impl Cholesky {
    /// Factor a symmetric matrix, escalating diagonal jitter from `1e-14` to
    /// `1e-8` times the largest diagonal entry when needed.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        if n == 0 {
            return Ok(Cholesky { n, l: Vec::new(), jitter: 0.0 });
        }
        let scale = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        if let Some(l) = try_factor(a, n, 0.0) {
            return Ok(Cholesky { n, l, jitter: 0.0 });
        }
        let mut rel = 1e-14;
        while rel <= 1e-8 * (1.0 + 1e-9) {
            let jitter = rel * scale;
            if let Some(l) = try_factor(a, n, jitter) {
                return Ok(Cholesky { n, l, jitter });
            }
            rel *= 10.0;
        }
        Err(SimError::Numeric(format!(
            "covariance of size {n} not positive definite after jitter 1e-8 x diag"
        )))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `L z`.
    pub fn mul(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.l[i * n..i * n + i + 1]
                    .iter()
                    .zip(z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}
