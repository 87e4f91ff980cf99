use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::builder::Builder;
use super::{session_length_unchecked, SamplePath, SimOptions};
use crate::error::{Result, SimError};
use crate::model::{ModelParams, PolicySpec};
use crate::rng;

pub(super) fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::domain(format!("horizon must be positive: got {horizon}")));
    }
    Ok(())
}

pub(super) fn station_streams(seed: u64, d: usize) -> (Vec<ChaCha8Rng>, Vec<ChaCha8Rng>) {
    (
        (0..d).map(|i| rng::arrival_stream(seed, i)).collect(),
        (0..d).map(|i| rng::duration_stream(seed, i)).collect(),
    )
}

/// Simulate one path on `[0, horizon]` by thinning.
///
/// Each station proposes candidates from its own stream at the dominating
/// rate `n^alpha exp(-g(Ybar(t) - b (t + delta)))`, valid on the lookahead
/// window `[t, t + delta]` because `Ybar` is nondecreasing and `g` increasing.
/// The window is `delta = min(next session end, 1/(n^alpha f), horizon) - t`.
/// `seed` is the replication's root seed.
pub fn simulate_scaled_path(
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
    let mut st = Builder::new(p, g, opts);
    let mut t = 0.0;
    loop {
        let next_end = st.next_end();
        let f_now = st.intensity(t);
        let mut window_end = (t + 1.0 / (rate * f_now)).min(horizon);
        let hits_end = next_end <= window_end;
        if hits_end {
            window_end = next_end;
        }
        let bound = st.intensity_bound(t, window_end);
        let mut first = f64::INFINITY;
        let mut who = 0;
        for (i, r) in arr.iter_mut().enumerate() {
            let e: f64 = Exp1.sample(r);
            let cand = t + e / (rate * bound);
            if cand < first {
                first = cand;
                who = i;
            }
        }
        if first < window_end {
            t = first;
            let accept = st.intensity(t) / bound;
            let u: f64 = arr[who].random();
            if u < accept {
                let v: f64 = dur[who].random();
                st.arrive(who, t, session_length_unchecked(v, p))?;
            }
        } else if hits_end {
            t = st.end_sessions()?;
        } else {
            t = window_end;
            if t >= horizon {
                break;
            }
        }
    }
    Ok(st.finish(horizon, seed))
}
