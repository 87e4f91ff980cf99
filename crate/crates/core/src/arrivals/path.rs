use crate::csvout::{Cell, Csv};
use crate::error::{Result, SimError};
use crate::fluid::FluidSolution;
use crate::model::{ModelParams, PolicySpec};

/// One admitted session. `station` is 0-based here and 1-based in CSV output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionEvent {
    pub station: usize,
    pub start: f64,
    pub duration: f64,
}

/// Path state at a query time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub ybar: f64,
    pub y: Vec<f64>,
    pub n: Vec<u64>,
}

/// One realization of the scaled system on `[0, horizon]`.
///
/// Workloads, arrival counts and active-session counts are stored at every
/// breakpoint (session start or end), together with the cumulative
/// intensity `Lambda_n`. Values at breakpoint `k` include the events at
/// that instant; active counts hold on the segment that follows.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    params: ModelParams,
    policy: PolicySpec,
    seed: u64,
    horizon: f64,
    events: Vec<SessionEvent>,
    breakpoints: Vec<f64>,
    y: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    active: Vec<Vec<u32>>,
    lambda: Vec<f64>,
}

impl SamplePath {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn from_records(
        params: ModelParams,
        policy: PolicySpec,
        seed: u64,
        horizon: f64,
        events: Vec<SessionEvent>,
        breakpoints: Vec<f64>,
        y: Vec<Vec<f64>>,
        counts: Vec<Vec<u64>>,
        active: Vec<Vec<u32>>,
        lambda: Vec<f64>,
    ) -> Self {
        SamplePath {
            params,
            policy,
            seed,
            horizon,
            events,
            breakpoints,
            y,
            counts,
            active,
            lambda,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn policy(&self) -> &PolicySpec {
        &self.policy
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    /// Workload of station `i` at each breakpoint.
    pub fn station_workload(&self, i: usize) -> &[f64] {
        &self.y[i]
    }
    /// Arrival count of station `i` at each breakpoint.
    pub fn station_counts(&self, i: usize) -> &[u64] {
        &self.counts[i]
    }
    /// Active sessions of station `i` on the segment after each breakpoint.
    pub fn station_active(&self, i: usize) -> &[u32] {
        &self.active[i]
    }
    /// `Lambda_n` at each breakpoint.
    pub fn lambda_breakpoints(&self) -> &[f64] {
        &self.lambda
    }

    fn locate(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(SimError::domain(format!(
                "query time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }

    /// Workloads and counts at `t` by exact interpolation between breakpoints.
    pub fn evaluate(&self, t: f64) -> Result<PathState> {
        let k = self.locate(t)?;
        let dt = t - self.breakpoints[k];
        let inv_ws = 1.0 / self.params.workload_scale();
        let d = self.params.d();
        let y: Vec<f64> = (0..d)
            .map(|i| self.y[i][k] + self.active[i][k] as f64 * inv_ws * dt)
            .collect();
        let n = (0..d).map(|i| self.counts[i][k]).collect();
        let ybar = y.iter().sum::<f64>() / d as f64;
        Ok(PathState { ybar, y, n })
    }

    /// Average workload at `t`.
    pub fn ybar(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate(t)?.ybar)
    }

    /// `Lambda_n(t) = int_0^t f(s, Ybar_n(s)) ds`, exact on each segment.
    pub fn lambda_at(&self, t: f64) -> Result<f64> {
        let k = self.locate(t)?;
        let t0 = self.breakpoints[k];
        let d = self.params.d();
        let ybar0 = (0..d).map(|i| self.y[i][k]).sum::<f64>() / d as f64;
        let total: u64 = (0..d).map(|i| self.active[i][k] as u64).sum();
        let slope = total as f64 / (d as f64 * self.params.workload_scale());
        let b = self.params.b();
        Ok(self.lambda[k]
            + self
                .policy
                .integrate_exp_neg_g(ybar0 - b * t0, slope - b, t - t0))
    }

    /// Check monotonicity, continuity and the slope law between breakpoints.
    pub fn check_invariants(&self) -> Result<()> {
        let ws = self.params.workload_scale();
        for i in 0..self.params.d() {
            let (y, n, act) = (&self.y[i], &self.counts[i], &self.active[i]);
            if y[0] != 0.0 || n[0] != 0 {
                return Err(SimError::Consistency(format!("station {i} does not start at 0")));
            }
            for k in 1..self.breakpoints.len() {
                let dt = self.breakpoints[k] - self.breakpoints[k - 1];
                let expect = y[k - 1] + act[k - 1] as f64 * dt / ws;
                if dt < 0.0 || y[k] < y[k - 1] || n[k] < n[k - 1] {
                    return Err(SimError::Consistency(format!(
                        "station {i} not monotone at breakpoint {k}"
                    )));
                }
                if (y[k] - expect).abs() > 1e-9 * (1.0 + y[k].abs()) {
                    return Err(SimError::Consistency(format!(
                        "station {i} slope mismatch at breakpoint {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Event log with header `station,start,duration` (stations 1-based).
    pub fn events_csv(&self) -> Csv {
        let mut c = Csv::new(&["station", "start", "duration"]);
        for e in &self.events {
            c.row(&[Cell::U(e.station as u64 + 1), Cell::F(e.start), Cell::F(e.duration)]);
        }
        c
    }
}

/// `n^((alpha+beta-3)/2) (ybar - U - V / n^(beta-2))` at each grid time.
pub fn fluctuation_values(p: &ModelParams, fluid: &FluidSolution, grid: &[f64], ybar: &[f64]) -> Vec<f64> {
    let fs = p.fluctuation_scale();
    let bias = p.bias_scale();
    grid.iter()
        .zip(ybar)
        .map(|(&t, &y)| fs * (y - fluid.big_u_at(t) - fluid.v_at(t) / bias))
        .collect()
}

/// Centred, normalised average fluctuation of a path on `grid`.
pub fn fluctuation_path(path: &SamplePath, fluid: &FluidSolution, grid: &[f64]) -> Result<Vec<f64>> {
    if !fluid.matches(path.params(), path.policy()) {
        return Err(SimError::Consistency(
            "fluid solution computed for different parameters or policy".into(),
        ));
    }
    let limit = path.horizon().min(fluid.horizon() * (1.0 + 1e-12));
    if let Some(&t) = grid.iter().find(|&&t| t < 0.0 || t > limit) {
        return Err(SimError::domain(format!("grid time {t} outside the path and fluid range")));
    }
    let ybar = grid.iter().map(|&t| path.ybar(t)).collect::<Result<Vec<_>>>()?;
    Ok(fluctuation_values(path.params(), fluid, grid, &ybar))
}
