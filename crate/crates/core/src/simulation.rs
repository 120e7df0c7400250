//! Scenario-driven Monte-Carlo harness.
//!
//! Replication `r` draws its sample from stream `r` of the scenario's master
//! seed; bootstrap resample `b` inside it uses `SeedSpec::derive(b)` of that
//! stream. Replications are mapped in order and aggregated sequentially, so
//! reports are identical under sequential and parallel execution.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::copula::{alpha_unchecked, Copula, CopulaModel};
use crate::error::{Error, Result};
use crate::estimation::{
    chi2_test, ci_asymptotic, ci_band_bonferroni_on, ci_bootstrap, equispaced_points, pseudo_observations,
    u_min_rule, IntervalBand, IntervalMethod, TailCounter,
};
use crate::ext::ExtReal;
use crate::measures::validate_grid;
use crate::par::{map_range, Parallelism};
use crate::sampling::{sample_clayton_cauchy, sample_copula, PairedSample, Scale, SeedSpec};

/// Data-generating process of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioModel {
    /// Uniform-scale sample from a catalogued copula.
    Copula(CopulaModel),
    /// Clayton copula with standard Cauchy margins, `clayton-cauchy:theta=...`.
    ClaytonCauchy { theta: f64 },
}

impl ScenarioModel {
    pub fn copula(&self) -> Result<CopulaModel> {
        match *self {
            ScenarioModel::Copula(m) => Ok(m),
            ScenarioModel::ClaytonCauchy { theta } => CopulaModel::clayton(theta),
        }
    }

    /// Returns the raw-scale sample and its known-margin uniforms.
    pub fn draw(&self, n: usize, seed: SeedSpec) -> Result<(PairedSample, PairedSample)> {
        match *self {
            ScenarioModel::Copula(m) => {
                let u = sample_copula(&m, n, seed)?;
                let raw = PairedSample { scale: Scale::Raw, ..u.clone() };
                Ok((raw, u))
            }
            ScenarioModel::ClaytonCauchy { theta } => {
                let raw = sample_clayton_cauchy(theta, n, seed)?;
                let u = sample_copula(&CopulaModel::clayton(theta)?, n, seed)?;
                Ok((raw, u))
            }
        }
    }
}

impl FromStr for ScenarioModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        if let Some(rest) = t.strip_prefix("clayton-cauchy") {
            let theta = rest
                .strip_prefix(":theta=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("expected clayton-cauchy:theta=<value>, got {s:?}")))?;
            CopulaModel::clayton(theta)?;
            if !(theta > 0.0) {
                return Err(Error::domain("theta", theta, "clayton-cauchy theta > 0"));
            }
            return Ok(ScenarioModel::ClaytonCauchy { theta });
        }
        Ok(ScenarioModel::Copula(t.parse()?))
    }
}

impl fmt::Display for ScenarioModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioModel::Copula(m) => write!(f, "{m}"),
            ScenarioModel::ClaytonCauchy { theta } => write!(f, "clayton-cauchy:theta={theta}"),
        }
    }
}

impl Serialize for ScenarioModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScenarioModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Chi-squared test of `H0: alpha(u) = 0` run in every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    /// Fixed test points; if absent, `m` equispaced points on
    /// `[u_min, upper]` with `u_min` from the count threshold rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_points: Option<Vec<f64>>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_upper")]
    pub upper: f64,
    #[serde(default = "default_threshold")]
    pub threshold: usize,
    #[serde(default = "default_size")]
    pub size: f64,
}

fn default_m() -> usize {
    11
}
fn default_upper() -> f64 {
    0.1
}
fn default_threshold() -> usize {
    30
}
fn default_size() -> f64 {
    0.1
}
fn default_n() -> usize {
    2000
}
fn default_replications() -> usize {
    500
}
fn default_resamples() -> usize {
    199
}
fn default_u_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}
fn default_levels() -> Vec<f64> {
    vec![0.9]
}
fn default_methods() -> Vec<IntervalMethod> {
    vec![IntervalMethod::Asymptotic]
}

impl TestConfig {
    pub fn fixed(u_points: Vec<f64>, size: f64) -> Self {
        TestConfig { u_points: Some(u_points), m: 0, upper: default_upper(), threshold: default_threshold(), size }
    }

    pub fn equispaced(m: usize, upper: f64, size: f64) -> Self {
        TestConfig { u_points: None, m, upper, threshold: default_threshold(), size }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ScenarioModel,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_u_grid")]
    pub u_grid: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<IntervalMethod>,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestConfig>,
}

impl Scenario {
    /// Desk-scale defaults: `n = 2000`, 500 replications, 199 resamples.
    pub fn desk(model: ScenarioModel, master_seed: u64) -> Self {
        Scenario {
            model,
            n: default_n(),
            replications: default_replications(),
            u_grid: default_u_grid(),
            levels: default_levels(),
            methods: default_methods(),
            resamples: default_resamples(),
            master_seed,
            test: None,
        }
    }

    /// The full-size design: `n = 10000`, 999 bootstrap resamples, all three
    /// interval methods on `u = 0.01, ..., 0.5`.
    pub fn large(model: ScenarioModel, master_seed: u64) -> Self {
        Scenario {
            n: 10_000,
            resamples: 999,
            methods: vec![IntervalMethod::Asymptotic, IntervalMethod::Bonferroni, IntervalMethod::Bootstrap],
            u_grid: (1..=50).map(|k| k as f64 / 100.0).collect(),
            ..Scenario::desk(model, master_seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return cfg("replications must be at least 1".into());
        }
        if self.n == 0 {
            return cfg("n must be at least 1".into());
        }
        validate_grid(&self.u_grid).map_err(|e| Error::Config(format!("u_grid: {e}")))?;
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return cfg("levels must be non-empty and inside (0, 1)".into());
        }
        if self.methods.contains(&IntervalMethod::Bootstrap) && self.resamples == 0 {
            return cfg("bootstrap needs resamples >= 1".into());
        }
        if let Some(t) = &self.test {
            if !(t.size > 0.0 && t.size < 1.0) {
                return cfg("test size must be inside (0, 1)".into());
            }
            match &t.u_points {
                Some(p) => validate_grid(p).map_err(|e| Error::Config(format!("test u_points: {e}")))?,
                None if t.m == 0 => return cfg("test needs u_points or m >= 1".into()),
                None if !(t.upper > 0.0 && t.upper <= 0.5) => return cfg("test upper must be in (0, 0.5]".into()),
                None => {}
            }
        }
        Ok(())
    }
}

/// A proportion with the number of trials behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub rate: f64,
    pub hits: usize,
    pub trials: usize,
}

impl Rate {
    fn new(hits: usize, trials: usize) -> Self {
        Rate { rate: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 }, hits, trials }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub u: f64,
    pub truth: ExtReal,
    /// Mean `|alpha_hat - alpha|` over replications with finite estimates.
    pub mean_abs_error_hat: Option<f64>,
    pub mean_abs_error_star: Option<f64>,
    pub nonfinite_hat: usize,
    pub nonfinite_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSummary {
    pub method: IntervalMethod,
    pub level: f64,
    /// Estimator the intervals are built around.
    pub estimator: &'static str,
    pub coverage: Vec<Rate>,
    /// Mean width over replications with a bounded interval.
    pub mean_width: Vec<Option<f64>>,
    pub unbounded: Vec<usize>,
    /// Fraction of replications covering the truth at every grid point.
    pub simultaneous_coverage: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestSummary {
    pub size: f64,
    pub rejection: Rate,
    /// Replications where no admissible test points existed.
    pub inadmissible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: Scenario,
    pub points: Vec<PointSummary>,
    pub intervals: Vec<IntervalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSummary>,
}

/// First-replication detail: estimates and bounds, all centred on the truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quartet {
    pub u: Vec<f64>,
    pub truth: Vec<ExtReal>,
    pub alpha_hat_error: Vec<ExtReal>,
    pub alpha_star_error: Vec<ExtReal>,
    pub asymptotic: Option<(Vec<ExtReal>, Vec<ExtReal>)>,
    pub bootstrap: Option<(Vec<ExtReal>, Vec<ExtReal>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeInfo {
    pub elapsed_seconds: f64,
    pub parallel: bool,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutput {
    pub report: SimulationReport,
    pub quartet: Quartet,
    pub runtime: RuntimeInfo,
}

struct Replication {
    hat: Vec<ExtReal>,
    star: Vec<ExtReal>,
    /// One band per (method, level), in scenario order.
    bands: Vec<IntervalBand>,
    /// `None`: inadmissible test points.
    test: Option<Option<bool>>,
}

fn run_replication(s: &Scenario, r: usize) -> Result<Replication> {
    let seed = SeedSpec::new(s.master_seed, r as u64);
    let (raw, uni) = s.model.draw(s.n, seed)?;
    let pseudo = pseudo_observations(&raw)?;
    let hat_counter = TailCounter::new(&uni)?;
    let star_counter = TailCounter::new(&pseudo)?;
    let hat = s.u_grid.iter().map(|&u| hat_counter.alpha(u)).collect();
    let star = s.u_grid.iter().map(|&u| star_counter.alpha(u)).collect();
    let mut bands = Vec::new();
    for &method in &s.methods {
        for &level in &s.levels {
            bands.push(match method {
                IntervalMethod::Asymptotic => ci_asymptotic(&uni, &s.u_grid, level)?,
                IntervalMethod::Bonferroni => ci_band_bonferroni_on(&uni, &s.u_grid, level)?,
                IntervalMethod::Bootstrap => {
                    ci_bootstrap(&raw, &s.u_grid, level, s.resamples, seed, Parallelism::Sequential)?
                }
            });
        }
    }
    let test = match &s.test {
        None => None,
        Some(t) => {
            let points = match &t.u_points {
                Some(p) => Some(p.clone()),
                None => match u_min_rule(&[&uni], t.threshold)? {
                    Some(lo) if lo < t.upper => Some(equispaced_points(lo, t.upper, t.m)),
                    _ => None,
                },
            };
            Some(points.and_then(|p| {
                let zeros = vec![0.0; p.len()];
                match chi2_test(&uni, &p, &zeros, t.size) {
                    Ok(rep) => Some(rep.reject),
                    Err(_) => None,
                }
            }))
        }
    };
    Ok(Replication { hat, star, bands, test })
}

pub fn run_scenario(scenario: &Scenario) -> Result<SimulationOutput> {
    run_scenario_with(scenario, Parallelism::default())
}

pub fn run_scenario_with(scenario: &Scenario, strategy: Parallelism) -> Result<SimulationOutput> {
    scenario.validate()?;
    let start = Instant::now();
    let model = scenario.model.copula()?;
    let truth: Vec<ExtReal> = scenario.u_grid.iter().map(|&u| alpha_unchecked(&model, u)).collect();
    let reps = map_range(strategy, scenario.replications, |r| run_replication(scenario, r));
    let reps: Vec<Replication> = reps.into_iter().collect::<Result<_>>()?;
    let report = aggregate(scenario, &truth, &reps);
    let quartet = quartet(scenario, &truth, &reps[0]);
    let parallel = strategy == Parallelism::Parallel && Parallelism::is_available();
    #[cfg(feature = "parallel")]
    let threads = if parallel { rayon::current_num_threads() } else { 1 };
    #[cfg(not(feature = "parallel"))]
    let threads = 1;
    Ok(SimulationOutput {
        report,
        quartet,
        runtime: RuntimeInfo { elapsed_seconds: start.elapsed().as_secs_f64(), parallel, threads },
    })
}

/// Mean absolute error over replications where estimate and truth are both
/// finite.
fn mean_abs_error(values: impl Iterator<Item = ExtReal>, truth: ExtReal) -> Option<f64> {
    let t = truth.finite()?;
    let (sum, k) = values.filter_map(ExtReal::finite).fold((0.0, 0usize), |(s, k), a| (s + (a - t).abs(), k + 1));
    (k > 0).then(|| sum / k as f64)
}

fn aggregate(s: &Scenario, truth: &[ExtReal], reps: &[Replication]) -> SimulationReport {
    let nrep = reps.len();
    let points = s
        .u_grid
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let mh = mean_abs_error(reps.iter().map(|r| r.hat[i]), truth[i]);
            let ms = mean_abs_error(reps.iter().map(|r| r.star[i]), truth[i]);
            PointSummary {
                u,
                truth: truth[i],
                mean_abs_error_hat: mh,
                mean_abs_error_star: ms,
                nonfinite_hat: reps.iter().filter(|r| !r.hat[i].is_finite()).count(),
                nonfinite_star: reps.iter().filter(|r| !r.star[i].is_finite()).count(),
            }
        })
        .collect();

    let mut intervals = Vec::new();
    let mut k = 0;
    for &method in &s.methods {
        for &level in &s.levels {
            let g = s.u_grid.len();
            let mut hits = vec![0; g];
            let mut width_sum = vec![0.0; g];
            let mut bounded = vec![0usize; g];
            let mut simultaneous = 0;
            for r in reps {
                let b = &r.bands[k];
                let mut all = true;
                for i in 0..g {
                    if b.covers(i, truth[i]) {
                        hits[i] += 1;
                    } else {
                        all = false;
                    }
                    if !b.unbounded[i] {
                        width_sum[i] += b.width(i);
                        bounded[i] += 1;
                    }
                }
                if all {
                    simultaneous += 1;
                }
            }
            intervals.push(IntervalSummary {
                method,
                level,
                estimator: if method == IntervalMethod::Bootstrap { "alpha_star" } else { "alpha_hat" },
                coverage: hits.iter().map(|&h| Rate::new(h, nrep)).collect(),
                mean_width: width_sum
                    .iter()
                    .zip(&bounded)
                    .map(|(&w, &b)| (b > 0).then(|| w / b as f64))
                    .collect(),
                unbounded: bounded.iter().map(|&b| nrep - b).collect(),
                simultaneous_coverage: Rate::new(simultaneous, nrep),
            });
            k += 1;
        }
    }

    let test = s.test.as_ref().map(|t| {
        let outcomes: Vec<bool> = reps.iter().filter_map(|r| r.test.flatten()).collect();
        TestSummary {
            size: t.size,
            rejection: Rate::new(outcomes.iter().filter(|&&x| x).count(), outcomes.len()),
            inadmissible: nrep - outcomes.len(),
        }
    });
    SimulationReport { scenario: s.clone(), points, intervals, test }
}

fn centred(v: &[ExtReal], truth: &[ExtReal]) -> Vec<ExtReal> {
    v.iter()
        .zip(truth)
        .map(|(a, t)| match t.finite() {
            Some(t) => a.offset(-t),
            None => *a,
        })
        .collect()
}

fn quartet(s: &Scenario, truth: &[ExtReal], rep: &Replication) -> Quartet {
    let band_of = |m: IntervalMethod| {
        let idx = s.methods.iter().position(|&x| x == m)?;
        let b = &rep.bands[idx * s.levels.len()];
        Some((centred(&b.lower, truth), centred(&b.upper, truth)))
    };
    Quartet {
        u: s.u_grid.clone(),
        truth: truth.to_vec(),
        alpha_hat_error: centred(&rep.hat, truth),
        alpha_star_error: centred(&rep.star, truth),
        asymptotic: band_of(IntervalMethod::Asymptotic),
        bootstrap: band_of(IntervalMethod::Bootstrap),
    }
}

/// Quartet as CSV: `u,truth,alpha_hat_error,alpha_star_error,
/// asymptotic_lower,asymptotic_upper,bootstrap_lower,bootstrap_upper`
/// (bounds centred on the truth, `NA` when a method was not run).
pub fn write_quartet<W: std::io::Write>(writer: W, q: &Quartet) -> Result<()> {
    use crate::io::{fmt_ext, fmt_f64};
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "u",
        "truth",
        "alpha_hat_error",
        "alpha_star_error",
        "asymptotic_lower",
        "asymptotic_upper",
        "bootstrap_lower",
        "bootstrap_upper",
    ])?;
    let pick = |b: &Option<(Vec<ExtReal>, Vec<ExtReal>)>, i: usize, lo: bool| {
        b.as_ref().map_or_else(|| "NA".to_string(), |(l, h)| fmt_ext(if lo { l[i] } else { h[i] }))
    };
    for i in 0..q.u.len() {
        w.write_record([
            fmt_f64(q.u[i]),
            fmt_ext(q.truth[i]),
            fmt_ext(q.alpha_hat_error[i]),
            fmt_ext(q.alpha_star_error[i]),
            pick(&q.asymptotic, i, true),
            pick(&q.asymptotic, i, false),
            pick(&q.bootstrap, i, true),
            pick(&q.bootstrap, i, false),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-`u` coverage table as CSV:
/// `method,level,estimator,u,coverage,hits,trials,mean_width,unbounded`.
pub fn write_coverage<W: std::io::Write>(writer: W, report: &SimulationReport) -> Result<()> {
    use crate::io::fmt_f64;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "level", "estimator", "u", "coverage", "hits", "trials", "mean_width", "unbounded"])?;
    for iv in &report.intervals {
        for (i, u) in report.scenario.u_grid.iter().enumerate() {
            w.write_record([
                iv.method.to_string(),
                fmt_f64(iv.level),
                iv.estimator.to_string(),
                fmt_f64(*u),
                fmt_f64(iv.coverage[i].rate),
                iv.coverage[i].hits.to_string(),
                iv.coverage[i].trials.to_string(),
                iv.mean_width[i].map_or_else(|| "NA".into(), fmt_f64),
                iv.unbounded[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sampler-versus-model checks for one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerDiagnostics {
    pub model: String,
    pub n: usize,
    /// Kolmogorov distance between the law of `max(U1,U2)` and `C(u,u)`.
    pub diagonal_ks: f64,
    /// Kolmogorov distance between the law of `1 - min(U1,U2)` and
    /// `Cbar(1-u,1-u)`.
    pub survival_diagonal_ks: f64,
    pub margin_ks: [f64; 2],
    /// `sqrt(ln(2/0.01) / (2n))`: 99% DKW bound on each distance.
    pub dkw_bound_99: f64,
    pub lambda_proxy_u: f64,
    pub lambda_lower_proxy: f64,
    pub lambda_upper_proxy: f64,
    pub model_lower_proxy: f64,
    pub model_upper_proxy: f64,
}

/// One-sample Kolmogorov distance of `data` against a continuous CDF.
pub fn ks_distance(data: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    data.sort_by(f64::total_cmp);
    let n = data.len() as f64;
    data.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn sampler_diagnostics(model: &CopulaModel, n: usize, seed: SeedSpec) -> Result<SamplerDiagnostics> {
    let s = sample_copula(model, n, seed)?;
    let mut maxima: Vec<f64> = s.x1.iter().zip(&s.x2).map(|(a, b)| a.max(*b)).collect();
    let mut upper: Vec<f64> = s.x1.iter().zip(&s.x2).map(|(a, b)| 1.0 - a.min(*b)).collect();
    let diagonal_ks = ks_distance(&mut maxima, |u| model.diagonal(u));
    let survival_diagonal_ks = ks_distance(&mut upper, |u| model.survival_diagonal(u));
    let margin_ks = [ks_distance(&mut s.x1.clone(), |u| u), ks_distance(&mut s.x2.clone(), |u| u)];
    let u = 0.01;
    let counts = TailCounter::new(&s)?.counts(u);
    Ok(SamplerDiagnostics {
        model: model.to_string(),
        n,
        diagonal_ks,
        survival_diagonal_ks,
        margin_ks,
        dkw_bound_99: ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt(),
        lambda_proxy_u: u,
        lambda_lower_proxy: counts.t_lower() / u,
        lambda_upper_proxy: counts.t_upper() / u,
        model_lower_proxy: model.diagonal(u) / u,
        model_upper_proxy: model.survival_diagonal(u) / u,
    })
}
