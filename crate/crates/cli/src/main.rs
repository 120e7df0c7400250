use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tailasym::analysis::{analyze, config_from_json, config_from_manifest, GridSpec};
use tailasym::copula::{alpha_limit, Copula};
use tailasym::estimation::{
    chi2_test, ci_asymptotic, ci_band_bonferroni_on, ci_bootstrap, equispaced_points, pseudo_observations, u_min_rule,
    IntervalMethod,
};
use tailasym::io::{interpolate, read_curve_values, read_sample, write_band, write_curve, write_sample};
use tailasym::margins::{to_uniform, MarginSpec};
use tailasym::measures::{alpha_curve, alpha_zero_numeric, beta_curve, parse_grid, sigma3};
use tailasym::simulation::{run_scenario_with, write_coverage, write_quartet, Scenario, ScenarioModel};
use tailasym::{CopulaModel, Error, Parallelism, PairedSample, Scale, SeedSpec};

/// Tail asymmetry of bivariate data and copula models.
///
/// Data inputs are two-column CSV files (optional header). When the series
/// are serially dependent, pass residuals or innovations from an upstream
/// time-series fit.
#[derive(Parser)]
#[command(name = "tailasym", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Population curves and limits for a copula model.
    Measure(MeasureArgs),
    /// Estimate alpha(u) with confidence intervals from a data file.
    Estimate(EstimateArgs),
    /// Chi-squared test of alpha(u) against a null curve at m points.
    Test(TestArgs),
    /// Draw a sample from a model.
    Sample(SampleArgs),
    /// Run a Monte-Carlo scenario.
    Simulate(SimulateArgs),
    /// Full analysis pipeline from a config file or a previous manifest.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "raw")]
    scale: Scale,
    /// Known margin for both columns; without it raw data are rank-transformed.
    #[arg(long)]
    margin: Option<MarginSpec>,
    /// Known margin of the second column, if different.
    #[arg(long)]
    margin2: Option<MarginSpec>,
}

impl DataArgs {
    /// Returns the sample on the uniform scale and the raw data.
    fn load(&self) -> tailasym::Result<(PairedSample, PairedSample)> {
        let data = read_sample(&self.input, self.scale)?;
        let m1 = self.margin.unwrap_or(MarginSpec::None);
        let m2 = self.margin2.unwrap_or(m1);
        let uni = match (self.scale, m1.is_none() && m2.is_none()) {
            (Scale::Raw, true) => pseudo_observations(&data)?,
            (Scale::Raw, false) => to_uniform(&data, &m1, &m2)?,
            (_, true) => data.clone(),
            (s, false) => return Err(Error::Usage(format!("margins apply to raw data, not {s} scale"))),
        };
        Ok((uni, data))
    }
}

#[derive(Args)]
struct MeasureArgs {
    /// Model, e.g. `clayton:theta=2` or `bb7:delta=1.94,theta=1.71`.
    #[arg(long)]
    model: CopulaModel,
    #[arg(long, default_value = "0.01:0.5:0.01")]
    u_grid: String,
    /// Report `beta(u) = (Cbar(1-u,1-u) - C(u,u)) / u^kappa` instead of alpha.
    #[arg(long)]
    beta: Option<f64>,
    /// Print tail coefficients, the limit of alpha, and sigma3 as JSON.
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `jumps` or `a:b:step`.
    #[arg(long, default_value = "jumps")]
    u_grid: String,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long, default_value = "asymptotic")]
    method: IntervalMethod,
    #[arg(long, default_value_t = 999)]
    resamples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated test points; default is `m` equispaced points on
    /// `[u_min, upper]`.
    #[arg(long, value_delimiter = ',')]
    u_points: Option<Vec<f64>>,
    #[arg(long, default_value_t = 11)]
    m: usize,
    #[arg(long, default_value_t = 0.1)]
    upper: f64,
    #[arg(long, default_value_t = 30)]
    threshold: usize,
    /// `0` or a CSV of `u,value` pairs, interpolated linearly.
    #[arg(long, default_value = "0")]
    null: String,
    #[arg(long, default_value_t = 0.1)]
    size: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Copula spec, or `clayton-cauchy:theta=...` for Cauchy margins.
    #[arg(long)]
    model: ScenarioModel,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output CSV; a `.json` sidecar with the generating parameters is
    /// written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// `desk` or `large`; needs `--model`.
    #[arg(long, requires = "model")]
    preset: Option<String>,
    #[arg(long)]
    model: Option<ScenarioModel>,
    /// Master seed; overrides the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    config: Option<PathBuf>,
    /// Re-run from the `manifest.json` of a previous run.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn sink(out: &Option<PathBuf>) -> tailasym::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(p: &Path) -> tailasym::Result<File> {
    File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn read_text(p: &Path) -> tailasym::Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn write_json(mut w: impl Write, v: &impl serde::Serialize) -> tailasym::Result<()> {
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn measure(a: MeasureArgs) -> tailasym::Result<()> {
    let grid = parse_grid(&a.u_grid)?;
    let out = sink(&a.out)?;
    if a.summary {
        let limit = alpha_limit(&a.model);
        let numeric = alpha_zero_numeric(&a.model, &[1e-2, 1e-3, 1e-4, 1e-5])?;
        let s3 = sigma3(&a.model, tailasym::measures::SIGMA3_RESOLUTION, Parallelism::default())?;
        let report = json!({
            "model": a.model.to_string(),
            "tail": a.model.tail_summary(),
            "alpha_limit": limit.as_ref().map(|v| v.to_string()).ok(),
            "alpha_limit_note": limit.err().map(|e| e.to_string()),
            "alpha_limit_numeric": numeric,
            "diagonal_at_half": a.model.diagonal(0.5),
            "sigma3": s3,
        });
        return write_json(out, &report);
    }
    let curve = match a.beta {
        Some(kappa) => beta_curve(&a.model, &grid, kappa)?,
        None => alpha_curve(&a.model, &grid)?,
    };
    write_curve(out, &curve)
}

fn estimate(a: EstimateArgs) -> tailasym::Result<()> {
    let (uni, raw) = a.data.load()?;
    let grid = GridSpec(a.u_grid.clone()).resolve(&uni)?;
    let band = match a.method {
        IntervalMethod::Asymptotic => ci_asymptotic(&uni, &grid, a.level)?,
        IntervalMethod::Bonferroni => ci_band_bonferroni_on(&uni, &grid, a.level)?,
        IntervalMethod::Bootstrap => {
            let seed = a.seed.ok_or_else(|| Error::Usage("--method bootstrap requires --seed".into()))?;
            if a.data.margin.is_some() {
                return Err(Error::Usage("bootstrap intervals are for pseudo-observations; drop --margin".into()));
            }
            ci_bootstrap(&raw, &grid, a.level, a.resamples, SeedSpec::new(seed, 0), Parallelism::default())?
        }
    };
    write_band(sink(&a.out)?, &band)
}

fn test(a: TestArgs) -> tailasym::Result<()> {
    let (uni, _) = a.data.load()?;
    let points = match a.u_points {
        Some(p) => p,
        None => match u_min_rule(&[&uni], a.threshold)? {
            Some(lo) if lo < a.upper => equispaced_points(lo, a.upper, a.m),
            Some(lo) => {
                return Err(Error::Usage(format!("u_min = {lo} is not below --upper {}; pass --u-points", a.upper)))
            }
            None => return Err(Error::Usage(format!("corner counts never reach {}; pass --u-points", a.threshold))),
        },
    };
    let null: Vec<f64> = if a.null.trim() == "0" {
        vec![0.0; points.len()]
    } else {
        let path = PathBuf::from(&a.null);
        let (us, vs) = read_curve_values(File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)?;
        points.iter().map(|&u| interpolate(&us, &vs, u)).collect::<tailasym::Result<_>>()?
    };
    let report = chi2_test(&uni, &points, &null, a.size)?;
    write_json(sink(&a.out)?, &report)
}

fn sample(a: SampleArgs) -> tailasym::Result<()> {
    if a.n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let seed = SeedSpec::new(a.seed, a.stream);
    let (raw, uni) = a.model.draw(a.n, seed)?;
    let data = match a.model {
        ScenarioModel::Copula(_) => uni,
        ScenarioModel::ClaytonCauchy { .. } => raw,
    };
    write_sample(BufWriter::new(create(&a.out)?), &data)?;
    let (family, params) = match a.model {
        ScenarioModel::Copula(m) => (m.family().name().to_string(), json!(m.named_params().into_iter().collect::<std::collections::BTreeMap<_, _>>())),
        ScenarioModel::ClaytonCauchy { theta } => ("clayton-cauchy".to_string(), json!({ "theta": theta })),
    };
    let sidecar = json!({
        "family": family,
        "params": params,
        "n": a.n,
        "scale": data.scale,
        "master_seed": a.seed,
        "stream_id": a.stream,
    });
    let mut p = a.out.clone().into_os_string();
    p.push(".json");
    write_json(BufWriter::new(create(Path::new(&p))?), &sidecar)
}

fn simulate(a: SimulateArgs) -> tailasym::Result<()> {
    let mut s = match (&a.scenario, &a.preset) {
        (Some(path), _) => Scenario::from_json(&read_text(path)?)?,
        (None, Some(preset)) => {
            let seed = a.seed.ok_or_else(|| Error::Usage("--preset requires --seed".into()))?;
            let model = a.model.expect("clap enforces --model");
            match preset.as_str() {
                "desk" => Scenario::desk(model, seed),
                "large" => Scenario::large(model, seed),
                other => return Err(Error::Usage(format!("unknown preset {other:?} (expected desk or large)"))),
            }
        }
        (None, None) => return Err(Error::Usage("give --scenario or --preset".into())),
    };
    if let Some(seed) = a.seed {
        s.master_seed = seed;
    }
    if let Some(r) = a.replications {
        s.replications = r;
    }
    s.validate()?;
    let strategy = if a.sequential { Parallelism::Sequential } else { Parallelism::default() };
    let out = run_scenario_with(&s, strategy)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;
    write_json(BufWriter::new(create(&a.out.join("report.json"))?), &out.report)?;
    write_json(BufWriter::new(create(&a.out.join("runtime.json"))?), &out.runtime)?;
    write_coverage(BufWriter::new(create(&a.out.join("coverage.csv"))?), &out.report)?;
    write_quartet(BufWriter::new(create(&a.out.join("quartet.csv"))?), &out.quartet)?;
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> tailasym::Result<()> {
    let config = match (&a.config, &a.manifest) {
        (Some(p), _) => config_from_json(&read_text(p)?)?,
        (None, Some(p)) => config_from_manifest(&read_text(p)?)?,
        (None, None) => unreachable!("clap requires one of --config, --manifest"),
    };
    let manifest = analyze(&config, &a.out)?;
    eprintln!("wrote {} files to {} ({})", manifest.outputs.len(), a.out.display(), manifest.test_status);
    Ok(())
}

/// 2: usage or configuration, 3: data, 4: numerical failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) | Error::Domain { .. } => 2,
        Error::Parse(_) | Error::Io(_) | Error::LengthMismatch(_) => 3,
        Error::Generation { .. } | Error::SingularCovariance(_) | Error::LimitUnknown(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Measure(a) => measure(a),
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Sample(a) => sample(a),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_cmd(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tailasym: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
