//! The named verification experiments.

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::report::{ReplicationReport, Rule, Verdict};
use crate::arrivals::{
    fluctuation_path, sample_session_length, session_length_cdf, simulate_scaled_path,
    simulate_scaled_path_inversion, SamplePath, SimOptions,
};
use crate::csvout::{Cell, Csv};
use crate::error::{Result, SimError};
use crate::fluid::{offset_root, FluidSolution};
use crate::fractional::{
    circulant_implied_cov, fbm_cov_matrix, fou_constants, longrun_diag, sample_fbm, sample_fou, FbmMethod,
};
use crate::gaussian::{moment_bound, paths_csv, GaussianLimitKit};
use crate::model::{ModelParams, PolicySpec};
use crate::rng;
use crate::stats::{self, Estimate};

/// Hands out one root seed per ensemble and logs every replication seed.
struct Seeds {
    base: u64,
    next: u64,
    csv: Csv,
}

impl Seeds {
    fn new(base: u64) -> Self {
        Seeds {
            base,
            next: 0,
            csv: Csv::new(&["ensemble", "rep", "seed"]),
        }
    }

    /// Root for an ensemble of `m` replications; replication `r` uses
    /// `replication_seed(root, r)`.
    fn block(&mut self, label: &str, m: usize) -> u64 {
        let root = rng::replication_seed(self.base, self.next);
        self.next += 1;
        for r in 0..m {
            self.csv
                .row(&[Cell::S(label), Cell::U(r as u64), Cell::U(rng::replication_seed(root, r as u64))]);
        }
        root
    }
}

pub fn uniform_grid(end: f64, step: f64) -> Vec<f64> {
    let n = ((end / step).round() as usize).max(1);
    (0..=n).map(|k| end * k as f64 / n as f64).collect()
}

fn index_of(grid: &[f64], t: f64) -> Result<usize> {
    let k = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    if (grid[k] - t).abs() > 1e-9 * t.max(1.0) {
        return Err(SimError::Config(format!("time {t} is not on the grid; adjust grid_step")));
    }
    Ok(k)
}

#[derive(Clone, Copy)]
enum Sim {
    Thinning,
    Inversion,
}

fn ensemble<T: Send>(
    p: &ModelParams,
    g: &PolicySpec,
    horizon: f64,
    root: u64,
    m: usize,
    sim: Sim,
    f: impl Fn(&SamplePath) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..m)
        .into_par_iter()
        .map(|r| {
            let seed = rng::replication_seed(root, r as u64);
            let path = match sim {
                Sim::Thinning => simulate_scaled_path(p, g, horizon, seed, SimOptions::default())?,
                Sim::Inversion => simulate_scaled_path_inversion(p, g, horizon, seed, SimOptions::default())?,
            };
            f(&path)
        })
        .collect()
}

fn need_reps(cfg: &ExperimentConfig, min: usize) -> Result<()> {
    if cfg.replications < min {
        return Err(SimError::InsufficientSamples {
            needed: min,
            got: cfg.replications,
        });
    }
    Ok(())
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

/// Error carrying whatever the experiment produced before it stopped.
#[derive(Debug)]
pub struct RunError {
    pub error: SimError,
    pub partial: Box<ReplicationReport>,
}

/// Dispatch the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<ReplicationReport, RunError> {
    let start = std::time::Instant::now();
    let mut rep = ReplicationReport::new(cfg.experiment.name(), cfg.echo(), cfg.seed, cfg.tolerances.ci_k);
    let mut seeds = Seeds::new(cfg.seed);
    let out = match cfg.experiment {
        Experiment::Lln => lln(cfg, &mut rep, &mut seeds),
        Experiment::Clt => clt(cfg, &mut rep, &mut seeds),
        Experiment::MomentBound => moment(cfg, &mut rep, &mut seeds),
        Experiment::Longrun => longrun(cfg, &mut rep),
        Experiment::FouVerify => fou_verify(cfg, &mut rep, &mut seeds),
        Experiment::BaselineNoControl => baseline(cfg, &mut rep, &mut seeds),
        Experiment::SamplerSelftest => selftest(cfg, &mut rep, &mut seeds),
    };
    rep.file("data/seeds.csv", &seeds.csv);
    rep.runtime = start.elapsed();
    match out {
        Ok(()) => Ok(rep),
        Err(error) => Err(RunError {
            error,
            partial: Box::new(rep),
        }),
    }
}

fn lln(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let (m, horizon, k) = (cfg.replications, cfg.horizon, cfg.tolerances.ci_k);
    let g = &cfg.policy;
    let fluid = FluidSolution::solve(&cfg.params, g, horizon, cfg.fluid_step)?;
    let grid = uniform_grid(horizon, cfg.grid_step);
    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t <= horizon).collect();
    let mut sup_csv = Csv::new(&["n", "rep", "sup_error"]);
    let mut bias_csv = Csv::new(&["n", "rep", "t", "scaled_error"]);
    let mut median_csv = Csv::new(&["n", "median_sup_error"]);
    let mut medians = Vec::new();
    let mut last_bias = Vec::new();
    for &n in &cfg.n_ladder {
        let p = cfg.params_at(n);
        let root = seeds.block(&format!("lln-n{n}"), m);
        let scale = p.bias_scale();
        let res = ensemble(&p, g, horizon, root, m, Sim::Thinning, |path| {
            let mut sup: f64 = 0.0;
            for &t in &grid {
                sup = sup.max((path.ybar(t)? - fluid.big_u_at(t)).abs());
            }
            let b = times
                .iter()
                .map(|&t| Ok(scale * (path.ybar(t)? - fluid.big_u_at(t))))
                .collect::<Result<Vec<f64>>>()?;
            Ok((sup, b))
        })?;
        for (r, (sup, b)) in res.iter().enumerate() {
            sup_csv.row(&[Cell::U(n), Cell::U(r as u64), Cell::F(*sup)]);
            for (t, v) in times.iter().zip(b) {
                bias_csv.row(&[Cell::U(n), Cell::U(r as u64), Cell::F(*t), Cell::F(*v)]);
            }
        }
        let sups: Vec<f64> = res.iter().map(|r| r.0).collect();
        let med = stats::median(&sups)?;
        rep.value(format!("median sup error n={n}"), med);
        median_csv.row(&[Cell::U(n), Cell::F(med)]);
        medians.push(med);
        last_bias = res.into_iter().map(|r| r.1).collect();
    }
    let nmax = *cfg.n_ladder.last().unwrap();
    let ns: Vec<f64> = cfg.n_ladder.iter().map(|&n| n as f64).collect();
    if ns.len() >= 3 {
        let fit = stats::loglog_slope(&ns, &medians)?;
        rep.estimate(
            "log-log slope of median sup error",
            Estimate {
                value: fit.slope,
                se: fit.slope_se,
            },
        );
        rep.verdict(Verdict::interval(
            "lln slope",
            fit.slope,
            cfg.tolerances.lln_slope_lo,
            cfg.tolerances.lln_slope_hi,
        ));
    } else {
        rep.notes.push("slope fit skipped: fewer than three ladder entries".into());
    }
    for (j, &t) in times.iter().enumerate() {
        let x: Vec<f64> = last_bias.iter().map(|b| b[j]).collect();
        let e = stats::mean(&x)?;
        let v = fluid.v_at(t);
        rep.estimate(format!("mean n^(beta-2)(Ybar-U) n={nmax} t={}", fmt_t(t)), e);
        rep.value(format!("V({})", fmt_t(t)), v);
        rep.verdict(Verdict::new(format!("lln bias t={}", fmt_t(t)), e.value, v, k * e.se, Rule::Within));
    }
    let mut v_csv = Csv::new(&["t", "V"]);
    for (t, v) in fluid.t.iter().zip(&fluid.v) {
        v_csv.row_f(&[*t, *v]);
    }
    rep.file("data/lln_sup_error.csv", &sup_csv);
    rep.file("data/lln_scaled_error.csv", &bias_csv);
    rep.file("plotdata/lln_median_sup_error.csv", &median_csv);
    rep.file("plotdata/lln_v.csv", &v_csv);
    Ok(())
}

fn clt(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let m = cfg.replications;
    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0).collect();
    if times.is_empty() {
        return Err(SimError::Config("clt needs positive `times`".into()));
    }
    let horizon = cfg.horizon.max(*times.last().unwrap());
    let g = &cfg.policy;
    let fluid = FluidSolution::solve(&cfg.params, g, horizon, cfg.fluid_step)?;
    let mut kgrid = vec![0.0];
    kgrid.extend(&times);
    let kit = GaussianLimitKit::build(&fluid, kgrid)?;
    let analytic: Vec<Vec<f64>> = times
        .iter()
        .map(|&s| times.iter().map(|&t| kit.cov_zbar(s, t)).collect())
        .collect::<Result<_>>()?;
    let mut fl_csv = Csv::new(&["n", "rep", "t", "value"]);
    let mut cov_csv = Csv::new(&["n", "s", "t", "empirical", "se", "analytic", "rel_error"]);
    let mut disc = Vec::new();
    let mut last_diag = Vec::new();
    for &n in &cfg.n_ladder {
        let p = cfg.params_at(n);
        let root = seeds.block(&format!("clt-n{n}"), m);
        let z = ensemble(&p, g, horizon, root, m, Sim::Thinning, |path| fluctuation_path(path, &fluid, &times))?;
        for (r, zr) in z.iter().enumerate() {
            for (t, v) in times.iter().zip(zr) {
                fl_csv.row(&[Cell::U(n), Cell::U(r as u64), Cell::F(*t), Cell::F(*v)]);
            }
        }
        let col = |j: usize| -> Vec<f64> { z.iter().map(|zr| zr[j]).collect() };
        let mut worst: f64 = 0.0;
        let mut diag = Vec::new();
        for i in 0..times.len() {
            for j in i..times.len() {
                let e = stats::covariance(&col(i), &col(j))?;
                let a = analytic[i][j];
                let rel = (e.value - a).abs() / a.abs();
                cov_csv.row(&[
                    Cell::U(n),
                    Cell::F(times[i]),
                    Cell::F(times[j]),
                    Cell::F(e.value),
                    Cell::F(e.se),
                    Cell::F(a),
                    Cell::F(rel),
                ]);
                if i == j {
                    worst = worst.max(rel);
                    rep.estimate(format!("var Zbar_n({}) n={n}", fmt_t(times[i])), e);
                    diag.push(e);
                }
            }
        }
        rep.value(format!("max relative variance error n={n}"), worst);
        disc.push(worst);
        last_diag = diag;
    }
    for (j, &t) in times.iter().enumerate() {
        let a = analytic[j][j];
        rep.value(format!("cov_Zbar({0},{0})", fmt_t(t)), a);
        rep.verdict(Verdict::new(
            format!("clt variance t={}", fmt_t(t)),
            last_diag[j].value,
            a,
            cfg.tolerances.clt_rel * a,
            Rule::Within,
        ));
    }
    if disc.len() >= 2 {
        rep.verdict(Verdict::new(
            "clt discrepancy decreases over the ladder",
            *disc.last().unwrap(),
            disc[0],
            0.0,
            Rule::AtMost,
        ));
    }
    rep.file("data/clt_fluctuations.csv", &fl_csv);
    rep.file("data/clt_cov.csv", &cov_csv);
    let mut plot = Csv::new(&["n", "max_rel_error"]);
    for (n, d) in cfg.n_ladder.iter().zip(&disc) {
        plot.row(&[Cell::U(*n), Cell::F(*d)]);
    }
    rep.file("plotdata/clt_discrepancy.csv", &plot);
    Ok(())
}

/// Limit `Zbar` ensemble on `grid`.
fn limit_zbar(kit: &GaussianLimitKit, m: usize, root: u64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let rbar = kit.sample_rbar(m, root);
    let zbar = rbar.par_iter().map(|r| kit.solve_limit_zbar(r)).collect::<Result<Vec<_>>>()?;
    Ok((rbar, zbar))
}

fn moment(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let (m, k, horizon) = (cfg.replications, cfg.tolerances.ci_k, cfg.horizon);
    let fluid = FluidSolution::solve(&cfg.params, &cfg.policy, horizon, cfg.fluid_step)?;
    let grid = uniform_grid(horizon, cfg.grid_step);
    let kit = GaussianLimitKit::build(&fluid, grid.clone())?.with_young_rule(cfg.young_rule);
    let bound = kit.moment_bound;
    rep.value("moment bound", bound);
    rep.value("mu", kit.mu);
    let det: Vec<f64> = (1..=256).map(|j| horizon * j as f64 / 256.0).collect();
    let vals = det.par_iter().map(|&t| kit.cov_zbar(t, t)).collect::<Result<Vec<f64>>>()?;
    let mut det_csv = Csv::new(&["t", "cov_zbar"]);
    for (t, v) in det.iter().zip(&vals) {
        det_csv.row_f(&[*t, *v]);
    }
    let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.value("max cov_Zbar(t,t) on the 256-point grid", worst);
    rep.verdict(Verdict::new("moment bound (quadrature)", worst, bound, 0.0, Rule::AtMost));
    let root = seeds.block("moment-limit-zbar", m);
    let (_, zbar) = limit_zbar(&kit, m, root)?;
    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0 && t <= horizon).collect();
    let idx = times.iter().map(|&t| index_of(&grid, t)).collect::<Result<Vec<_>>>()?;
    let cols: Vec<Vec<f64>> = idx.iter().map(|&j| zbar.iter().map(|z| z[j]).collect()).collect();
    rep.file("data/moment_limit_zbar.csv", &paths_csv(&times, &transpose(&cols)));
    for (t, c) in times.iter().zip(&cols) {
        let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
        let e = stats::mean(&sq)?;
        rep.estimate(format!("E|Zbar({})|^2 sampled", fmt_t(*t)), e);
        rep.verdict(Verdict::new(
            format!("moment bound (sampled) t={}", fmt_t(*t)),
            e.value,
            bound,
            k * e.se,
            Rule::AtMost,
        ));
    }
    rep.file("data/moment_cov_zbar.csv", &det_csv);
    rep.file("plotdata/moment_cov_zbar.csv", &det_csv);
    Ok(())
}

fn transpose(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = cols.first().map_or(0, Vec::len);
    (0..m).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
}

fn longrun(cfg: &ExperimentConfig, rep: &mut ReplicationReport) -> Result<()> {
    let (p, g) = (&cfg.params, &cfg.policy);
    let c = fou_constants(p, g)?;
    let t = cfg.times.iter().copied().find(|&t| t > 0.0).unwrap_or(1.0);
    let tol = cfg.tolerances.longrun_rel;
    rep.value("kappa", c.kappa);
    rep.value("H", c.hurst);
    rep.value("sigma^2", c.sigma * c.sigma);
    rep.value("sigma0^2", c.sigma0sq);
    let mut csv = Csv::new(&["T", "quantity", "finite", "limit", "rel_gap"]);
    let mut plot = Csv::new(&["T", "zbar_rel_gap", "rbar_incr_rel_gap", "cross_rel_gap"]);
    let mut gaps: [Vec<f64>; 3] = Default::default();
    let names = ["E|Zbar(T)|^2", "E|Rbar_T(t)|^2", "cov(Zbar(T),Rbar_T(t))"];
    for &mult in &cfg.longrun_multiples {
        let big_t = mult / c.kappa;
        let d = longrun_diag(big_t, t, &c, p, g)?;
        let vals = [d.zbar_var, d.rbar_incr_var, d.cross];
        for (q, v) in vals.iter().enumerate() {
            csv.row(&[Cell::F(big_t), Cell::S(names[q]), Cell::F(v.finite), Cell::F(v.limit), Cell::F(v.rel_gap())]);
            gaps[q].push(v.rel_gap());
        }
        plot.row_f(&[big_t, vals[0].rel_gap(), vals[1].rel_gap(), vals[2].rel_gap()]);
    }
    let last = cfg.longrun_multiples.len() - 1;
    for (q, name) in names.iter().enumerate() {
        let violations = gaps[q][..last].windows(2).filter(|w| w[1] >= w[0]).count();
        rep.verdict(Verdict::new(
            format!("{name} gap monotone before the last horizon"),
            violations as f64,
            0.0,
            0.0,
            Rule::Within,
        ));
        rep.verdict(Verdict::new(
            format!("{name} relative gap at T={}/kappa", fmt_t(cfg.longrun_multiples[last])),
            gaps[q][last],
            0.0,
            tol,
            Rule::AtMost,
        ));
    }
    rep.file("data/longrun.csv", &csv);
    rep.file("plotdata/longrun_rel_gap.csv", &plot);
    Ok(())
}

fn fou_verify(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let (p, g, m, k) = (&cfg.params, &cfg.policy, cfg.replications, cfg.tolerances.ci_k);
    let c = fou_constants(p, g)?;
    let big_t = cfg.horizon;
    let lags = &cfg.times;
    let span = *lags.last().unwrap();
    let end = big_t + span;
    let fluid = FluidSolution::solve(p, g, end, cfg.fluid_step)?;
    let grid = uniform_grid(end, cfg.grid_step);
    let kit = GaussianLimitKit::build(&fluid, grid.clone())?.with_young_rule(cfg.young_rule);
    let idx = lags.iter().map(|&s| index_of(&grid, big_t + s)).collect::<Result<Vec<_>>>()?;
    let (rbar, zbar) = limit_zbar(&kit, m, seeds.block("fou-limit-zbar", m))?;
    let zc: Vec<Vec<f64>> = idx.iter().map(|&j| zbar.iter().map(|z| z[j]).collect()).collect();
    let rc: Vec<Vec<f64>> = idx.iter().map(|&j| rbar.iter().map(|r| r[j]).collect()).collect();
    drop((rbar, zbar));
    let fgrid = uniform_grid(span, cfg.grid_step);
    let fidx = lags.iter().map(|&s| index_of(&fgrid, s)).collect::<Result<Vec<_>>>()?;
    let fou = sample_fou(&fgrid, &c, p, g, m, seeds.block("fou-stationary", m))?;
    let fc: Vec<Vec<f64>> = fidx.iter().map(|&j| fou.iter().map(|z| z[j]).collect()).collect();
    drop(fou);
    rep.value("T", big_t);
    rep.value("sigma0^2", c.sigma0sq);
    let mut cov_csv = Csv::new(&["s", "t", "limit_zbar_cov", "limit_zbar_se", "fou_cov", "fou_se"]);
    for i in 0..lags.len() {
        for j in i..lags.len() {
            let a = stats::covariance(&zc[i], &zc[j])?;
            let b = stats::covariance(&fc[i], &fc[j])?;
            cov_csv.row_f(&[lags[i], lags[j], a.value, a.se, b.value, b.se]);
            let (s, t) = (fmt_t(lags[i]), fmt_t(lags[j]));
            rep.estimate(format!("cov Zbar(T+{s}),Zbar(T+{t})"), a);
            rep.estimate(format!("cov fOU({s}),fOU({t})"), b);
            rep.verdict(Verdict::new(
                format!("fOU covariance ({s},{t})"),
                a.value,
                b.value,
                k * a.se.hypot(b.se),
                Rule::Within,
            ));
        }
    }
    for (i, col) in fc.iter().enumerate() {
        let e = stats::variance(col)?;
        rep.verdict(Verdict::new(
            format!("fOU stationary variance t={}", fmt_t(lags[i])),
            e.value,
            c.sigma0sq,
            k * e.se,
            Rule::Within,
        ));
    }
    let sig2 = c.sigma * c.sigma;
    let mut inc_csv = Csv::new(&["s", "t", "empirical", "se", "limit"]);
    for i in 0..lags.len() {
        for j in i + 1..lags.len() {
            let d: Vec<f64> = rc[j].iter().zip(&rc[i]).map(|(x, y)| (x - y).powi(2)).collect();
            let e = stats::mean(&d)?;
            let lim = sig2 * (lags[j] - lags[i]).powf(2.0 * c.hurst);
            inc_csv.row_f(&[lags[i], lags[j], e.value, e.se, lim]);
            rep.verdict(Verdict::new(
                format!("increment law ({},{})", fmt_t(lags[i]), fmt_t(lags[j])),
                e.value,
                lim,
                k * e.se,
                Rule::Within,
            ));
        }
    }
    rep.file("data/fou_cov.csv", &cov_csv);
    rep.file("data/fou_increments.csv", &inc_csv);
    rep.file("data/fou_limit_zbar.csv", &paths_csv(lags, &transpose(&zc)));
    rep.file("data/fou_limit_rbar.csv", &paths_csv(lags, &transpose(&rc)));
    rep.file("data/fou_samples.csv", &paths_csv(lags, &transpose(&fc)));
    let mut plot = Csv::new(&["lag", "fou_cov"]);
    for (j, s) in lags.iter().enumerate() {
        plot.row_f(&[*s, stats::covariance(&fc[0], &fc[j])?.value]);
    }
    rep.file("plotdata/fou_autocov.csv", &plot);
    Ok(())
}

/// Without control `phi = 1`, so the limit `Zbar` is the driver `Rbar` itself
/// and its variance grows like `t^{4-beta}`.
fn baseline(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let (g, m, p) = (&cfg.policy, cfg.replications, &cfg.params);
    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0).collect();
    let horizon = cfg.horizon.max(*times.last().unwrap_or(&1.0));
    let fluid = FluidSolution::solve(p, g, horizon, cfg.fluid_step)?;
    let grid = uniform_grid(horizon, cfg.grid_step);
    let kit = GaussianLimitKit::build(&fluid, grid.clone())?.with_young_rule(cfg.young_rule);
    let idx = times.iter().map(|&t| index_of(&grid, t)).collect::<Result<Vec<_>>>()?;
    let (_, zbar) = limit_zbar(&kit, m, seeds.block("baseline-limit-zbar", m))?;
    let cols: Vec<Vec<f64>> = idx.iter().map(|&j| zbar.iter().map(|z| z[j]).collect()).collect();
    rep.file("data/baseline_limit_zbar.csv", &paths_csv(&times, &transpose(&cols)));
    let mut vars = Vec::new();
    let mut analytic = Vec::new();
    let mut plot = Csv::new(&["t", "var_zbar"]);
    for (&t, col) in times.iter().zip(&cols) {
        let e = stats::variance(col)?;
        rep.estimate(format!("var Zbar({}) uncontrolled", fmt_t(t)), e);
        plot.row_f(&[t, e.value]);
        vars.push(e.value);
        analytic.push(kit.cov_zbar(t, t)?);
    }
    let target = 4.0 - p.beta();
    let fit = stats::loglog_slope(&times, &vars)?;
    let det = stats::loglog_slope(&times, &analytic)?;
    rep.estimate(
        "variance growth exponent (sampled)",
        Estimate {
            value: fit.slope,
            se: fit.slope_se,
        },
    );
    rep.value("variance growth exponent (limit covariance)", det.slope);
    rep.verdict(Verdict::new(
        "uncontrolled variance growth exponent",
        fit.slope,
        target,
        cfg.tolerances.growth_abs,
        Rule::Within,
    ));
    rep.file("plotdata/baseline_variance.csv", &plot);
    Ok(())
}

fn selftest(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    need_reps(cfg, 2)?;
    let (g, m, k, pmin) = (&cfg.policy, cfg.replications, cfg.tolerances.ci_k, cfg.tolerances.ks_p);
    let p = cfg.params;
    let horizon = cfg.horizon;
    let d = p.d() as f64;
    let scale = p.arrival_scale();
    let stat = |path: &SamplePath| -> Result<[f64; 3]> {
        let s = path.evaluate(horizon)?;
        let total = s.n.iter().sum::<u64>() as f64;
        Ok([total, s.ybar, total - d * scale * path.lambda_at(horizon)?])
    };
    let thin = ensemble(&p, g, horizon, seeds.block("selftest-thinning", m), m, Sim::Thinning, stat)?;
    let inv = ensemble(&p, g, horizon, seeds.block("selftest-inversion", m), m, Sim::Inversion, stat)?;
    let mut csv = Csv::new(&["method", "rep", "arrivals", "ybar", "martingale"]);
    for (label, set) in [("thinning", &thin), ("inversion", &inv)] {
        for (r, s) in set.iter().enumerate() {
            csv.row(&[Cell::S(label), Cell::U(r as u64), Cell::F(s[0]), Cell::F(s[1]), Cell::F(s[2])]);
        }
    }
    rep.file("data/selftest_paths.csv", &csv);
    let col = |set: &[[f64; 3]], j: usize| -> Vec<f64> { set.iter().map(|s| s[j]).collect() };
    for (j, name) in [(0, "N_n(T)"), (1, "Ybar_n(T)")] {
        let ks = stats::ks_two_sample(&col(&thin, j), &col(&inv, j))?;
        rep.value(format!("KS statistic {name} thinning vs inversion"), ks.statistic);
        rep.verdict(Verdict::new(format!("KS p-value {name}"), ks.p_value, pmin, 0.0, Rule::Above));
    }
    for (label, set) in [("thinning", &thin), ("inversion", &inv)] {
        let e = stats::mean(&col(set, 2))?;
        rep.estimate(format!("mean N - d n^alpha Lambda ({label})"), e);
        rep.verdict(Verdict::new(format!("martingale identity ({label})"), e.value, 0.0, k * e.se, Rule::Within));
    }
    // session lengths by inverse transform from one stream
    let root = seeds.block("selftest-session-lengths", 1);
    let mut r = rng::stream(rng::replication_seed(root, 0), 0);
    let lens = (0..m)
        .map(|_| sample_session_length(rand::Rng::random::<f64>(&mut r), &p))
        .collect::<Result<Vec<f64>>>()?;
    let mut lcsv = Csv::new(&["draw", "length"]);
    for (i, l) in lens.iter().enumerate() {
        lcsv.row(&[Cell::U(i as u64), Cell::F(*l)]);
    }
    rep.file("data/selftest_session_lengths.csv", &lcsv);
    let ks = stats::ks_one_sample(&lens, |x| session_length_cdf(x, &p))?;
    rep.value("KS statistic session lengths", ks.statistic);
    rep.verdict(Verdict::new("KS p-value session lengths", ks.p_value, pmin, 0.0, Rule::Above));
    fbm_checks(cfg, rep, seeds)
}

fn fbm_checks(cfg: &ExperimentConfig, rep: &mut ReplicationReport, seeds: &mut Seeds) -> Result<()> {
    let (m, k, pmin) = (cfg.replications, cfg.tolerances.ci_k, cfg.tolerances.ks_p);
    let h = cfg.params.hurst();
    let end = cfg.times.last().copied().unwrap_or(1.0).max(cfg.grid_step);
    let grid = uniform_grid(end, cfg.grid_step);
    let target = fbm_cov_matrix(&grid, h)?;
    let n = grid.len();
    let mut formula_err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (grid[i], grid[j]);
            let direct = 0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (s - t).abs().powf(2.0 * h));
            formula_err = formula_err.max((target[i * n + j] - direct).abs());
        }
    }
    let implied = circulant_implied_cov(&grid, h)?;
    let emb_err = target.iter().zip(&implied).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let tol = cfg.tolerances.fbm_cov_abs;
    rep.verdict(Verdict::new("fBm target covariance matrix", formula_err, 0.0, tol, Rule::AtMost));
    rep.verdict(Verdict::new("fBm circulant implied covariance", emb_err, 0.0, tol, Rule::AtMost));
    let circ = sample_fbm(&grid, h, m, seeds.block("fbm-circulant", m), FbmMethod::Circulant)?;
    let chol = sample_fbm(&grid, h, m, seeds.block("fbm-cholesky", m), FbmMethod::Cholesky)?;
    for s in [&circ, &chol] {
        if let Some(w) = &s.warning {
            rep.notes.push(w.clone());
        }
    }
    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0 && t <= end).collect();
    let idx = times.iter().map(|&t| index_of(&grid, t)).collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["method", "rep", "t", "value"]);
    for (label, s) in [("circulant", &circ), ("cholesky", &chol)] {
        for (r, path) in s.paths.iter().enumerate() {
            for (&t, &j) in times.iter().zip(&idx) {
                csv.row(&[Cell::S(label), Cell::U(r as u64), Cell::F(t), Cell::F(path[j])]);
            }
        }
    }
    rep.file("data/selftest_fbm.csv", &csv);
    for (&t, &j) in times.iter().zip(&idx) {
        let a: Vec<f64> = circ.paths.iter().map(|p| p[j]).collect();
        let b: Vec<f64> = chol.paths.iter().map(|p| p[j]).collect();
        let ks = stats::ks_two_sample(&a, &b)?;
        rep.verdict(Verdict::new(
            format!("fBm circulant vs cholesky KS p-value t={}", fmt_t(t)),
            ks.p_value,
            pmin,
            0.0,
            Rule::Above,
        ));
        for (label, x) in [("circulant", &a), ("cholesky", &b)] {
            let e = stats::variance(x)?;
            rep.estimate(format!("var B({}) {label}", fmt_t(t)), e);
            rep.verdict(Verdict::new(
                format!("fBm variance {label} t={}", fmt_t(t)),
                e.value,
                t.powf(2.0 * h),
                k * e.se,
                Rule::Within,
            ));
        }
    }
    Ok(())
}

/// Fluid solution on `[0, horizon]` as CSV.
pub fn fluid_csv(cfg: &ExperimentConfig) -> Result<Csv> {
    Ok(FluidSolution::solve(&cfg.params, &cfg.policy, cfg.horizon, cfg.fluid_step)?.to_csv())
}

/// Key=value constants; the fOU block only when `b = a` and the policy is controlled.
pub fn constants_text(cfg: &ExperimentConfig) -> Result<String> {
    use crate::csvout::fmt12;
    let (p, g) = (&cfg.params, &cfg.policy);
    let mut s = format!("a = {}\n", fmt12(p.a()));
    if g.is_controlled() || p.b_equals_a() {
        s.push_str(&format!("K = {}\n", fmt12(offset_root(p, g)?)));
    }
    if g.is_controlled() {
        let fluid = FluidSolution::solve(p, g, cfg.horizon.max(1.0), cfg.fluid_step)?;
        let (bound, mu) = moment_bound(p, &fluid);
        s.push_str(&format!("mu = {}\nmoment_bound = {}\n", fmt12(mu), fmt12(bound)));
    }
    match fou_constants(p, g) {
        Ok(c) => s.push_str(&c.to_text()),
        Err(SimError::Unsupported(m)) => {
            s.push_str(&format!("H = {}\n# fOU constants unavailable: {m}\n", fmt12(p.hurst())))
        }
        Err(e) => return Err(e),
    }
    Ok(s)
}
