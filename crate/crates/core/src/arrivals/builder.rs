//! Shared path state used by both simulators.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::path::{SamplePath, SessionEvent};
use super::SimOptions;
use crate::error::{Result, SimError};
use crate::model::{ModelParams, PolicySpec};

pub(super) struct Builder {
    pub params: ModelParams,
    pub policy: PolicySpec,
    d: usize,
    inv_ws: f64,
    b: f64,
    budget: u64,
    processed: u64,
    // state at the most recent breakpoint
    t_bp: f64,
    ybar_bp: f64,
    lambda_bp: f64,
    active: Vec<u32>,
    total_active: u64,
    y_cur: Vec<f64>,
    n_cur: Vec<u64>,
    // records
    bps: Vec<f64>,
    y: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    act: Vec<Vec<u32>>,
    lambda: Vec<f64>,
    events: Vec<SessionEvent>,
    // pending session ends, keyed by the bit pattern of the (positive) end time
    ends: BinaryHeap<Reverse<(u64, usize)>>,
}

impl Builder {
    pub fn new(p: &ModelParams, g: &PolicySpec, opts: SimOptions) -> Self {
        let d = p.d();
        let mut b = Builder {
            params: *p,
            policy: *g,
            d,
            inv_ws: 1.0 / p.workload_scale(),
            b: p.b(),
            budget: opts.event_budget,
            processed: 0,
            t_bp: 0.0,
            ybar_bp: 0.0,
            lambda_bp: 0.0,
            active: vec![0; d],
            total_active: 0,
            y_cur: vec![0.0; d],
            n_cur: vec![0; d],
            bps: Vec::new(),
            y: vec![Vec::new(); d],
            counts: vec![Vec::new(); d],
            act: vec![Vec::new(); d],
            lambda: Vec::new(),
            events: Vec::new(),
            ends: BinaryHeap::new(),
        };
        b.record();
        b
    }

    /// Slope of the average workload on the current segment.
    #[inline]
    pub fn ybar_slope(&self) -> f64 {
        self.total_active as f64 * self.inv_ws / self.d as f64
    }

    #[inline]
    pub fn ybar_at(&self, t: f64) -> f64 {
        self.ybar_bp + self.ybar_slope() * (t - self.t_bp)
    }

    /// Intensity `f(t, Ybar(t))` on the current segment.
    #[inline]
    pub fn intensity(&self, t: f64) -> f64 {
        (-self.policy.g(self.ybar_at(t) - self.b * t)).exp()
    }

    /// Dominating intensity on `[t, t_end]` of the current segment.
    #[inline]
    pub fn intensity_bound(&self, t: f64, t_end: f64) -> f64 {
        (-self.policy.g(self.ybar_at(t) - self.b * t_end)).exp()
    }

    pub fn t_bp(&self) -> f64 {
        self.t_bp
    }
    pub fn lambda_bp(&self) -> f64 {
        self.lambda_bp
    }

    /// `int_{t_bp}^{t_bp + len} f ds` on the current segment.
    #[inline]
    pub fn lambda_increment(&self, len: f64) -> f64 {
        let x0 = self.ybar_bp - self.b * self.t_bp;
        self.policy
            .integrate_exp_neg_g(x0, self.ybar_slope() - self.b, len)
    }

    pub fn next_end(&self) -> f64 {
        self.ends
            .peek()
            .map_or(f64::INFINITY, |Reverse((bits, _))| f64::from_bits(*bits))
    }

    fn advance(&mut self, t: f64) {
        let len = t - self.t_bp;
        debug_assert!(len >= 0.0);
        if len > 0.0 {
            self.lambda_bp += self.lambda_increment(len);
            for i in 0..self.d {
                self.y_cur[i] += self.active[i] as f64 * self.inv_ws * len;
            }
            self.ybar_bp = self.y_cur.iter().sum::<f64>() / self.d as f64;
        }
        self.t_bp = t;
    }

    fn record(&mut self) {
        self.bps.push(self.t_bp);
        self.lambda.push(self.lambda_bp);
        for i in 0..self.d {
            self.y[i].push(self.y_cur[i]);
            self.counts[i].push(self.n_cur[i]);
            self.act[i].push(self.active[i]);
        }
    }

    fn charge(&mut self) -> Result<()> {
        self.processed += 1;
        if self.processed > self.budget {
            return Err(SimError::Resource(format!(
                "event budget of {} exceeded",
                self.budget
            )));
        }
        Ok(())
    }

    /// New session at station `i` starting at `t`.
    pub fn arrive(&mut self, i: usize, t: f64, duration: f64) -> Result<()> {
        self.charge()?;
        self.advance(t);
        self.active[i] += 1;
        self.total_active += 1;
        self.n_cur[i] += 1;
        self.events.push(SessionEvent {
            station: i,
            start: t,
            duration,
        });
        self.ends.push(Reverse(((t + duration).to_bits(), i)));
        self.record();
        Ok(())
    }

    /// Close every session ending at the earliest pending end time.
    pub fn end_sessions(&mut self) -> Result<f64> {
        let t = self.next_end();
        self.advance(t);
        while let Some(&Reverse((bits, i))) = self.ends.peek() {
            if f64::from_bits(bits) != t {
                break;
            }
            self.charge()?;
            self.ends.pop();
            self.active[i] -= 1;
            self.total_active -= 1;
        }
        self.record();
        Ok(t)
    }

    pub fn finish(mut self, horizon: f64, seed: u64) -> SamplePath {
        if self.t_bp < horizon {
            self.advance(horizon);
            self.record();
        }
        SamplePath::from_records(
            self.params,
            self.policy,
            seed,
            horizon,
            self.events,
            self.bps,
            self.y,
            self.counts,
            self.act,
            self.lambda,
        )
    }
}
