//! Experiment configuration.
//!
//! The file is TOML restricted to top-level scalars, flat arrays and the
//! tables `[params]`, `[policy]` and `[tolerances]`. Unknown keys are
//! rejected. Every key is optional; defaults depend on the experiment.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Result, SimError};
use crate::gaussian::YoungRule;
use crate::model::{ModelParams, PolicyKind, PolicySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Lln,
    Clt,
    MomentBound,
    Longrun,
    FouVerify,
    BaselineNoControl,
    SamplerSelftest,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Lln,
        Experiment::Clt,
        Experiment::MomentBound,
        Experiment::Longrun,
        Experiment::FouVerify,
        Experiment::BaselineNoControl,
        Experiment::SamplerSelftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lln => "lln",
            Experiment::Clt => "clt",
            Experiment::MomentBound => "moment-bound",
            Experiment::Longrun => "longrun",
            Experiment::FouVerify => "fou-verify",
            Experiment::BaselineNoControl => "baseline-no-control",
            Experiment::SamplerSelftest => "sampler-selftest",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    beta: Option<f64>,
    theta: Option<f64>,
    alpha: Option<f64>,
    b: Option<f64>,
    d: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    seed: Option<u64>,
    replications: Option<usize>,
    horizon: Option<f64>,
    grid_step: Option<f64>,
    fluid_step: Option<f64>,
    n: Option<Vec<u64>>,
    times: Option<Vec<f64>>,
    longrun_multiples: Option<Vec<f64>>,
    young_rule: Option<YoungRule>,
    out: Option<PathBuf>,
    #[serde(default)]
    params: RawParams,
    policy: Option<PolicyKind>,
    #[serde(default)]
    tolerances: Tolerances,
}

/// Acceptance thresholds. Monte Carlo verdicts use `ci_k` standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ci_k: f64,
    pub lln_slope_lo: f64,
    pub lln_slope_hi: f64,
    pub clt_rel: f64,
    pub growth_abs: f64,
    pub longrun_rel: f64,
    pub ks_p: f64,
    pub fbm_cov_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ci_k: 3.0,
            lln_slope_lo: -0.8,
            lln_slope_hi: -0.3,
            clt_rel: 0.2,
            growth_abs: 0.05,
            longrun_rel: 0.02,
            ks_p: 0.01,
            fbm_cov_abs: 1e-10,
        }
    }
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replications: usize,
    /// Simulation horizon; for `fou-verify` the long-run time `T`.
    pub horizon: f64,
    pub grid_step: f64,
    pub fluid_step: f64,
    pub n_ladder: Vec<u64>,
    pub times: Vec<f64>,
    pub longrun_multiples: Vec<f64>,
    pub young_rule: YoungRule,
    pub out: PathBuf,
    /// Parameters at the first ladder entry.
    pub params: ModelParams,
    pub policy: PolicySpec,
    pub tolerances: Tolerances,
}

pub const DEFAULT_SEED: u64 = 12345;

struct Defaults {
    m: usize,
    horizon: f64,
    n: &'static [u64],
    times: &'static [f64],
}

fn defaults(e: Experiment) -> Defaults {
    match e {
        Experiment::Lln => Defaults {
            m: 200,
            horizon: 5.0,
            n: &[8, 16, 32, 64],
            times: &[1.0, 2.0, 4.0],
        },
        Experiment::Clt => Defaults {
            m: 2000,
            horizon: 2.0,
            n: &[16, 64],
            times: &[0.5, 1.0, 2.0],
        },
        Experiment::MomentBound => Defaults {
            m: 2000,
            horizon: 20.0,
            n: &[64],
            times: &[1.0, 2.0, 5.0, 10.0, 20.0],
        },
        Experiment::Longrun => Defaults {
            m: 0,
            horizon: 0.0,
            n: &[64],
            times: &[1.0],
        },
        Experiment::FouVerify => Defaults {
            m: 5000,
            horizon: f64::NAN,
            n: &[64],
            times: &[0.0, 0.5, 1.0, 2.0],
        },
        Experiment::BaselineNoControl => Defaults {
            m: 2000,
            horizon: 8.0,
            n: &[64],
            times: &[0.5, 1.0, 2.0, 4.0, 8.0],
        },
        Experiment::SamplerSelftest => Defaults {
            m: 1000,
            horizon: 5.0,
            n: &[16],
            times: &[0.25, 0.5, 1.0],
        },
    }
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(format!("`{name}` must be positive and finite: got {v}")))
    }
}

/// Parse and validate configuration text. `fallback` names the experiment
/// when the text has no `experiment` key.
pub fn parse_config(text: &str, fallback: Option<Experiment>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    resolve(raw, fallback)
}

pub fn load_config(path: &Path, fallback: Option<Experiment>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_config(&text, fallback).map_err(|e| match e {
        SimError::Config(m) => config_err(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// As [`load_config`], using `default` only when the file names no experiment.
pub fn load_config_or(path: &Path, default: Experiment) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let fallback = raw.experiment.is_none().then_some(default);
    resolve(raw, fallback)
}

fn resolve(raw: RawConfig, fallback: Option<Experiment>) -> Result<ExperimentConfig> {
    let experiment = match (raw.experiment, fallback) {
        (Some(a), Some(b)) if a != b => {
            return Err(config_err(format!(
                "config names experiment `{}` but `{}` was requested",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(config_err("missing key `experiment`")),
    };
    let def = defaults(experiment);
    let n_ladder = raw.n.unwrap_or_else(|| def.n.to_vec());
    if n_ladder.is_empty() {
        return Err(config_err("`n` must list at least one value"));
    }
    if n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("`n` ladder must be strictly increasing"));
    }
    let rp = &raw.params;
    let (beta, theta, alpha, d) = (
        rp.beta.unwrap_or(2.5),
        rp.theta.unwrap_or(1.0),
        rp.alpha.unwrap_or(2.0),
        rp.d.unwrap_or(1),
    );
    let make = |n: u64| match rp.b {
        Some(b) => ModelParams::new(beta, theta, alpha, b, d, n),
        None => ModelParams::with_b_equal_a(beta, theta, alpha, d, n),
    };
    for &n in &n_ladder {
        make(n).map_err(|e| config_err(format!("[params] with n = {n}: {e}")))?;
    }
    let params = make(n_ladder[0])?;
    let policy = match experiment {
        Experiment::BaselineNoControl => PolicySpec::no_control(),
        _ => PolicySpec::from_kind(raw.policy.unwrap_or(PolicyKind::Linear { c: 1.0 }))
            .map_err(|e| config_err(format!("[policy]: {e}")))?,
    };
    let horizon = match raw.horizon {
        Some(h) => positive("horizon", h)?,
        None if experiment == Experiment::FouVerify => {
            let kappa = params.a() * policy.g_prime(0.0);
            if !(kappa > 0.0) {
                return Err(config_err("fou-verify needs a controlled policy"));
            }
            20.0 / kappa
        }
        None => def.horizon,
    };
    let grid_step = positive("grid_step", raw.grid_step.unwrap_or(1.0 / 32.0))?;
    let fluid_step = positive("fluid_step", raw.fluid_step.unwrap_or(1.0 / 256.0))?;
    let times = raw.times.unwrap_or_else(|| def.times.to_vec());
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("`times` must be non-negative and strictly increasing"));
    }
    let longrun_multiples = raw.longrun_multiples.unwrap_or_else(|| vec![1.0, 2.5, 5.0, 10.0, 20.0]);
    if longrun_multiples.len() < 2 || longrun_multiples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("`longrun_multiples` needs two or more increasing values"));
    }
    let replications = raw.replications.unwrap_or(def.m);
    let t = raw.tolerances;
    for (name, v) in [
        ("ci_k", t.ci_k),
        ("clt_rel", t.clt_rel),
        ("growth_abs", t.growth_abs),
        ("longrun_rel", t.longrun_rel),
        ("ks_p", t.ks_p),
        ("fbm_cov_abs", t.fbm_cov_abs),
    ] {
        positive(&format!("tolerances.{name}"), v)?;
    }
    if t.lln_slope_lo >= t.lln_slope_hi {
        return Err(config_err("tolerances.lln_slope_lo must be below lln_slope_hi"));
    }
    Ok(ExperimentConfig {
        experiment,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        replications,
        horizon,
        grid_step,
        fluid_step,
        n_ladder,
        times,
        longrun_multiples,
        young_rule: raw.young_rule.unwrap_or_default(),
        out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        params,
        policy,
        tolerances: t,
    })
}

impl ExperimentConfig {
    /// Parameters at population index `n`.
    pub fn params_at(&self, n: u64) -> ModelParams {
        self.params.with_n(n).expect("validated at load")
    }

    /// Canonical echo of the resolved configuration.
    pub fn echo(&self) -> String {
        use crate::csvout::fmt12;
        let p = &self.params;
        let list = |v: &[f64]| v.iter().map(|x| fmt12(*x)).collect::<Vec<_>>().join(", ");
        let t = &self.tolerances;
        format!(
            "experiment = {}\nseed = {}\nreplications = {}\nhorizon = {}\ngrid_step = {}\nfluid_step = {}\n\
             n = [{}]\ntimes = [{}]\nlongrun_multiples = [{}]\nyoung_rule = {:?}\n\
             beta = {}\ntheta = {}\nalpha = {}\nb = {}\nd = {}\npolicy = {:?}\n\
             ci_k = {}\nlln_slope = [{}, {}]\nclt_rel = {}\ngrowth_abs = {}\nlongrun_rel = {}\nks_p = {}\nfbm_cov_abs = {:e}\n",
            self.experiment.name(),
            self.seed,
            self.replications,
            fmt12(self.horizon),
            fmt12(self.grid_step),
            fmt12(self.fluid_step),
            self.n_ladder.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
            list(&self.times),
            list(&self.longrun_multiples),
            self.young_rule,
            fmt12(p.beta()),
            fmt12(p.theta()),
            fmt12(p.alpha()),
            fmt12(p.b()),
            p.d(),
            self.policy.kind(),
            fmt12(t.ci_k),
            fmt12(t.lln_slope_lo),
            fmt12(t.lln_slope_hi),
            fmt12(t.clt_rel),
            fmt12(t.growth_abs),
            fmt12(t.longrun_rel),
            fmt12(t.ks_p),
            t.fbm_cov_abs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config("experiment = \"lln\"\n", None).unwrap();
        assert_eq!(c.experiment, Experiment::Lln);
        assert_eq!(c.n_ladder, vec![8, 16, 32, 64]);
        assert_eq!(c.replications, 200);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.params.beta(), 2.5);
        assert!(c.params.b_equals_a());
        assert_eq!(c.policy, PolicySpec::linear(1.0).unwrap());
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("experiment = \"lln\"\n[params]\nbetaa = 2.5\n", None).unwrap_err();
        assert!(matches!(&e, SimError::Config(m) if m.contains("betaa")), "{e}");
        let e = parse_config("experiment = \"lln\"\nhorizn = 2\n", None).unwrap_err();
        assert!(e.to_string().contains("horizn"));
    }

    #[test]
    fn alpha_outside_window_is_reported() {
        let e = parse_config("experiment = \"lln\"\n[params]\nalpha = 0.5\n", None).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("[params]") && msg.contains("alpha"), "{msg}");
    }

    #[test]
    fn ladder_and_experiment_checks() {
        assert!(parse_config("experiment = \"lln\"\nn = [16, 8]\n", None).is_err());
        assert!(parse_config("experiment = \"lln\"\nn = []\n", None).is_err());
        assert!(parse_config("", None).is_err());
        assert!(parse_config("experiment = \"lln\"", Some(Experiment::Clt)).is_err());
        let c = parse_config("seed = 3", Some(Experiment::Clt)).unwrap();
        assert_eq!((c.experiment, c.seed), (Experiment::Clt, 3));
    }

    #[test]
    fn policy_and_b_sections() {
        let c = parse_config(
            "experiment = \"clt\"\n[params]\nb = 1.0\nd = 2\n[policy]\nkind = \"linear-plus-tanh\"\nc1 = 1.0\nc2 = 0.5\n",
            None,
        )
        .unwrap();
        assert_eq!(c.params.b(), 1.0);
        assert_eq!(c.params.d(), 2);
        assert_eq!(c.policy, PolicySpec::linear_plus_tanh(1.0, 0.5).unwrap());
        let f = parse_config("experiment = \"fou-verify\"", None).unwrap();
        assert!((f.horizon - 10.0).abs() < 1e-12);
        let b = parse_config("experiment = \"baseline-no-control\"", None).unwrap();
        assert!(!b.policy.is_controlled());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::from_name(e.name()), Some(e));
        }
    }
}
