//! End-to-end analysis of a two-column data file.
//!
//! Inputs are typically residuals or innovations from an upstream time-series
//! fit; no serial-dependence adjustment happens here. The estimator depends on
//! the declared scale and margins:
//!
//! | scale             | margin     | estimator                          |
//! |-------------------|------------|------------------------------------|
//! | `raw`             | given      | `alpha_hat` on `F1(X1), F2(X2)`    |
//! | `raw`             | `none`     | `alpha_star` on pseudo-observations |
//! | `uniform`/`pseudo`| `none`     | `alpha_hat` on the data as given   |
//!
//! Every output is a tidy CSV or JSON file; [`analyze`] also writes
//! `manifest.json`, from which the run can be repeated byte for byte.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimation::{
    chi2_test, ci_asymptotic, ci_band_bonferroni_on, ci_bootstrap, equispaced_points, jump_set, pseudo_observations,
    u_min_rule, IntervalMethod, TailCounter,
};
use crate::io::{read_sample, write_band, write_curve, write_optional_curve};
use crate::margins::{to_uniform, MarginSpec};
use crate::measures::{parse_grid, rho_k_curve, sigma3_empirical, CurveKind, TailCurve, WeightFunction};
use crate::par::Parallelism;
use crate::sampling::{PairedSample, Scale, SeedSpec};

/// `jumps` or `a:b:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridSpec(pub String);

impl GridSpec {
    pub fn jumps() -> Self {
        GridSpec("jumps".into())
    }

    pub fn resolve(&self, sample: &PairedSample) -> Result<Vec<f64>> {
        if self.0.trim().eq_ignore_ascii_case("jumps") {
            let j = jump_set(sample)?;
            if j.is_empty() {
                return Err(Error::Usage("jump set is empty".into()));
            }
            Ok(j)
        } else {
            parse_grid(&self.0)
        }
    }
}

fn d_margin() -> MarginSpec {
    MarginSpec::None
}
fn d_grid() -> GridSpec {
    GridSpec::jumps()
}
fn d_level() -> f64 {
    0.9
}
fn d_methods() -> Vec<IntervalMethod> {
    vec![IntervalMethod::Asymptotic, IntervalMethod::Bonferroni]
}
fn d_resamples() -> usize {
    999
}
fn d_threshold() -> usize {
    30
}
fn d_test_m() -> usize {
    11
}
fn d_test_upper() -> f64 {
    0.1
}
fn d_test_size() -> f64 {
    0.1
}
fn d_sigma3() -> Option<usize> {
    Some(crate::measures::SIGMA3_RESOLUTION)
}
fn d_weights() -> Vec<WeightFunction> {
    WeightFunction::ALL.to_vec()
}
fn d_rho_grid() -> GridSpec {
    GridSpec("0.01:0.5:0.01".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub scale: Scale,
    /// Known margin of both columns (or of the first, if `margin2` is set).
    #[serde(default = "d_margin")]
    pub margin: MarginSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin2: Option<MarginSpec>,
    #[serde(default = "d_grid")]
    pub u_grid: GridSpec,
    #[serde(default = "d_level")]
    pub level: f64,
    #[serde(default = "d_methods")]
    pub methods: Vec<IntervalMethod>,
    #[serde(default = "d_resamples")]
    pub resamples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "d_threshold")]
    pub threshold: usize,
    #[serde(default = "d_test_m")]
    pub test_points: usize,
    #[serde(default = "d_test_upper")]
    pub test_upper: f64,
    #[serde(default = "d_test_size")]
    pub test_size: f64,
    #[serde(default = "d_sigma3")]
    pub sigma3_resolution: Option<usize>,
    #[serde(default = "d_weights")]
    pub rho_k_weights: Vec<WeightFunction>,
    #[serde(default = "d_rho_grid")]
    pub rho_k_grid: GridSpec,
    #[serde(default)]
    pub negate: bool,
}

impl AnalysisConfig {
    pub fn new(input: PathBuf, scale: Scale) -> Self {
        AnalysisConfig {
            input,
            scale,
            margin: d_margin(),
            margin2: None,
            u_grid: d_grid(),
            level: d_level(),
            methods: d_methods(),
            resamples: d_resamples(),
            seed: None,
            threshold: d_threshold(),
            test_points: d_test_m(),
            test_upper: d_test_upper(),
            test_size: d_test_size(),
            sigma3_resolution: d_sigma3(),
            rho_k_weights: d_weights(),
            rho_k_grid: d_rho_grid(),
            negate: false,
        }
    }

    pub fn mode(&self) -> Result<Mode> {
        let m2 = self.margin2.unwrap_or(self.margin);
        match (self.scale, self.margin.is_none(), m2.is_none()) {
            (Scale::Raw, false, false) => Ok(Mode::KnownMargin),
            (Scale::Raw, true, true) => Ok(Mode::Pseudo),
            (Scale::Raw, _, _) => Err(Error::Config("give margins for both columns or for neither".into())),
            (_, true, true) => Ok(Mode::Uniform),
            _ => Err(Error::Config(format!("margins only apply to raw data, not {} scale", self.scale))),
        }
    }

    pub fn validate(&self) -> Result<Mode> {
        let mode = self.mode()?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} outside (0, 1)", self.level)));
        }
        if self.methods.contains(&IntervalMethod::Bootstrap) {
            if mode == Mode::KnownMargin {
                return Err(Error::Config(
                    "bootstrap intervals are for pseudo-observations; drop the margin or the bootstrap".into(),
                ));
            }
            if self.seed.is_none() {
                return Err(Error::Config("bootstrap requires a seed".into()));
            }
            if self.resamples == 0 {
                return Err(Error::Config("bootstrap requires resamples >= 1".into()));
            }
        }
        if self.threshold == 0 {
            return Err(Error::Config("threshold must be at least 1".into()));
        }
        Ok(mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    KnownMargin,
    Pseudo,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: AnalysisConfig,
    pub mode: Mode,
    pub n: usize,
    /// `u_min` of the analysed sample.
    pub u_min: Option<f64>,
    /// `u_min` of the pseudo-observations when margins are known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_min_star: Option<f64>,
    pub test_status: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestIn {
    config: AnalysisConfig,
}

/// Reads the `config` member of a manifest written by [`analyze`].
pub fn config_from_manifest(text: &str) -> Result<AnalysisConfig> {
    let m: ManifestIn = serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    Ok(m.config)
}

pub fn config_from_json(text: &str) -> Result<AnalysisConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("analysis config: {e}")))
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>> {
    outputs.push(name.to_string());
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outputs: &mut Vec<String>) -> Result<()> {
    let mut w = create(dir, name, outputs)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs the pipeline and writes its outputs into `out_dir`.
pub fn analyze(config: &AnalysisConfig, out_dir: &Path) -> Result<Manifest> {
    let mode = config.validate()?;
    let data = read_sample(&config.input, config.scale)?;
    if data.len() < 2 {
        return Err(Error::Parse(format!("{}: need at least 2 rows", config.input.display())));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;

    let (sample, star) = match mode {
        Mode::KnownMargin => {
            let m2 = config.margin2.unwrap_or(config.margin);
            (to_uniform(&data, &config.margin, &m2)?, Some(pseudo_observations(&data)?))
        }
        Mode::Pseudo => (pseudo_observations(&data)?, None),
        Mode::Uniform => (data.clone(), None),
    };
    let kind = if mode == Mode::Pseudo { CurveKind::AlphaStar } else { CurveKind::AlphaHat };
    let grid = config.u_grid.resolve(&sample)?;
    let counter = TailCounter::new(&sample)?;
    let mut outputs = Vec::new();

    let curve = TailCurve {
        kind,
        u_grid: grid.clone(),
        values: grid.iter().map(|&u| counter.alpha(u)).collect(),
        meta: json!({ "source": "estimated", "mode": mode, "n": sample.len() }),
    };
    write_curve(create(out_dir, "alpha_curve.csv", &mut outputs)?, &curve)?;

    if let Some(star) = &star {
        let c = TailCounter::new(star)?;
        let grid_star = config.u_grid.resolve(star)?;
        let curve = TailCurve {
            kind: CurveKind::AlphaStar,
            u_grid: grid_star.clone(),
            values: grid_star.iter().map(|&u| c.alpha(u)).collect(),
            meta: json!({ "source": "estimated", "mode": "pseudo", "n": star.len() }),
        };
        write_curve(create(out_dir, "alpha_star_curve.csv", &mut outputs)?, &curve)?;
    }

    for &method in &config.methods {
        let band = match method {
            IntervalMethod::Asymptotic => ci_asymptotic(&sample, &grid, config.level)?,
            IntervalMethod::Bonferroni => ci_band_bonferroni_on(&sample, &grid, config.level)?,
            IntervalMethod::Bootstrap => {
                let seed = SeedSpec::new(config.seed.expect("validated"), 0);
                ci_bootstrap(&data, &grid, config.level, config.resamples, seed, Parallelism::default())?
            }
        };
        write_band(create(out_dir, &format!("intervals_{method}.csv"), &mut outputs)?, &band)?;
    }

    let u_min = u_min_rule(&[&sample], config.threshold)?;
    let u_min_star = match &star {
        Some(s) => u_min_rule(&[s], config.threshold)?,
        None => None,
    };
    let test_status = match u_min {
        Some(lo) if lo < config.test_upper => {
            let points = equispaced_points(lo, config.test_upper, config.test_points);
            let zeros = vec![0.0; points.len()];
            match chi2_test(&sample, &points, &zeros, config.test_size) {
                Ok(report) => {
                    write_json(out_dir, "test_report.json", &report, &mut outputs)?;
                    "ok".to_string()
                }
                Err(e @ Error::SingularCovariance(_)) => format!("skipped: {e}"),
                Err(e) => return Err(e),
            }
        }
        Some(lo) => format!("skipped: u_min = {lo} is not below {}", config.test_upper),
        None => format!("skipped: corner counts never reach {}", config.threshold),
    };

    if let Some(res) = config.sigma3_resolution {
        let s3 = sigma3_empirical(&sample, res)?;
        write_json(out_dir, "sigma3.json", &s3, &mut outputs)?;
    }

    if !config.rho_k_weights.is_empty() {
        let rgrid = config.rho_k_grid.resolve(&sample)?;
        for &w in &config.rho_k_weights {
            let (u, v, meta) = rho_k_curve(&sample, &rgrid, w, config.negate)?;
            let name = format!("rho_k_{}.csv", w.id());
            write_optional_curve(create(out_dir, &name, &mut outputs)?, CurveKind::RhoK.name(), &u, &v, &meta)?;
        }
    }

    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "tailasym",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        mode,
        n: sample.len(),
        u_min,
        u_min_star,
        test_status,
        outputs,
    };
    let mut sink = Vec::new();
    write_json(out_dir, "manifest.json", &manifest, &mut sink)?;
    Ok(manifest)
}

/// Convenience wrapper returning the test report of a finished run, if any.
pub fn read_test_report(out_dir: &Path) -> Result<Option<serde_json::Value>> {
    let p = out_dir.join("test_report.json");
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p)?;
    Ok(Some(serde_json::from_str(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_sample;
    use crate::sampling::sample_clayton_cauchy;

    fn write_data(dir: &Path, n: usize) -> PathBuf {
        let s = sample_clayton_cauchy(5.0, n, SeedSpec::new(1, 0)).unwrap();
        let p = dir.join("data.csv");
        write_sample(File::create(&p).unwrap(), &s).unwrap();
        p
    }

    #[test]
    fn known_margin_run_writes_tidy_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_data(dir.path(), 3000);
        let mut cfg = AnalysisConfig::new(input, Scale::Raw);
        cfg.margin = "cauchy(0,1)".parse().unwrap();
        cfg.u_grid = GridSpec("0.02:0.5:0.02".into());
        let out = dir.path().join("out");
        let m = analyze(&cfg, &out).unwrap();
        assert_eq!(m.mode, Mode::KnownMargin);
        for f in &m.outputs {
            assert!(out.join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(out.join("alpha_curve.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "u,value,kind,param_json");
        let first: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!(first < 0.0);
        assert_eq!(rows.len(), 26);
        assert!(rows.last().unwrap().starts_with("0.5,"));
    }

    #[test]
    fn manifest_rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_data(dir.path(), 800);
        let mut cfg = AnalysisConfig::new(input, Scale::Raw);
        cfg.methods = vec![IntervalMethod::Asymptotic, IntervalMethod::Bootstrap];
        cfg.resamples = 49;
        cfg.seed = Some(17);
        let a = dir.path().join("a");
        let m = analyze(&cfg, &a).unwrap();
        let text = std::fs::read_to_string(a.join("manifest.json")).unwrap();
        let cfg2 = config_from_manifest(&text).unwrap();
        let b = dir.path().join("b");
        analyze(&cfg2, &b).unwrap();
        for f in &m.outputs {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn invalid_configurations() {
        let mut cfg = AnalysisConfig::new("x.csv".into(), Scale::Uniform);
        cfg.margin = "normal(0,1)".parse().unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = AnalysisConfig::new("x.csv".into(), Scale::Raw);
        cfg.methods = vec![IntervalMethod::Bootstrap];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = AnalysisConfig::new("x.csv".into(), Scale::Raw);
        cfg.margin = "normal(0,1)".parse().unwrap();
        cfg.margin2 = Some(MarginSpec::None);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn comonotone_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("same.csv");
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 * 1.7).sin() * 10.0).collect();
        let s = PairedSample::new(xs.clone(), xs, Scale::Raw).unwrap();
        write_sample(File::create(&p).unwrap(), &s).unwrap();
        let mut cfg = AnalysisConfig::new(p, Scale::Raw);
        cfg.rho_k_weights.clear();
        let out = dir.path().join("out");
        analyze(&cfg, &out).unwrap();
        let text = std::fs::read_to_string(out.join("alpha_curve.csv")).unwrap();
        // Ranks are identical, so each corner holds the same number of points.
        for line in text.lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(v.is_finite());
        }
    }
}
