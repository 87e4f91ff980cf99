use rand_distr::{Distribution, Exp1};

use super::builder::Builder;
use super::thinning::{check_horizon, station_streams};
use super::{session_length_unchecked, SamplePath, SimOptions};
use crate::error::{Result, SimError};
use crate::model::{ModelParams, PolicySpec};
use rand::Rng;

/// Solve `int_{t_bp}^{t_bp + x} f = target` for `x` in `(0, len]` by Newton
/// steps safeguarded with bisection.
fn solve_segment(st: &Builder, target: f64, len: f64) -> Result<f64> {
    let t0 = st.t_bp();
    let (mut lo, mut hi) = (0.0, len);
    // initial guess from the local intensity
    let mut x = (target / st.intensity(t0)).clamp(0.0, len);
    for _ in 0..200 {
        let r = st.lambda_increment(x) - target;
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let f = st.intensity(t0 + x);
        let mut next = x - r / f;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let scale = (t0 + x).abs().max(1e-300);
        if (next - x).abs() <= 1e-12 * scale || hi - lo <= 1e-12 * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(SimError::Numeric(format!(
        "time-change inversion did not converge near t = {t0}"
    )))
}

/// Simulate one path on `[0, horizon]` in operational time.
///
/// Station `i` receives exponential(`n^alpha`) gaps in `s`; the arrival with
/// the smallest pending `s` happens at the clock time where the cumulative
/// intensity reaches it. Between breakpoints the intensity is smooth, and the
/// inverse is found to `1e-12` relative.
pub fn simulate_scaled_path_inversion(
    p: &ModelParams,
    g: &PolicySpec,
    horizon: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<SamplePath> {
    check_horizon(horizon)?;
    let d = p.d();
    let rate = p.arrival_scale();
    let (mut arr, mut dur) = station_streams(seed, d);
    let mut pending: Vec<f64> = arr
        .iter_mut()
        .map(|r| {
            let e: f64 = Exp1.sample(r);
            e / rate
        })
        .collect();
    let mut st = Builder::new(p, g, opts);
    loop {
        let (who, s_next) = pending
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
        let t0 = st.t_bp();
        let seg_end = st.next_end().min(horizon);
        let need = s_next - st.lambda_bp();
        let avail = st.lambda_increment(seg_end - t0);
        if need <= avail {
            let x = solve_segment(&st, need, seg_end - t0)?;
            let t = t0 + x;
            let v: f64 = dur[who].random();
            st.arrive(who, t, session_length_unchecked(v, p))?;
            let e: f64 = Exp1.sample(&mut arr[who]);
            pending[who] = s_next + e / rate;
        } else if st.next_end() <= horizon {
            st.end_sessions()?;
        } else {
            break;
        }
    }
    Ok(st.finish(horizon, seed))
}
