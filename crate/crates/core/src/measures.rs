//! Population curves and comparison measures.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::copula::{alpha_unchecked, Copula, CopulaModel, Survival};
use crate::error::{Error, Result};
use crate::estimation::TailCounter;
use crate::ext::ExtReal;
use crate::par::{map_range, Parallelism};
use crate::sampling::{PairedSample, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Alpha,
    AlphaHat,
    AlphaStar,
    Beta,
    RhoK,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Alpha => "alpha",
            CurveKind::AlphaHat => "alpha_hat",
            CurveKind::AlphaStar => "alpha_star",
            CurveKind::Beta => "beta",
            CurveKind::RhoK => "rho_k",
        }
    }
}

/// A measure evaluated on a grid of `u` values, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    pub kind: CurveKind,
    pub u_grid: Vec<f64>,
    pub values: Vec<ExtReal>,
    /// Measure parameters and provenance, echoed in the CSV `param_json`
    /// column.
    pub meta: Value,
}

/// Checks that `grid` is strictly increasing inside `(0, 0.5]`.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Usage("empty u grid".into()));
    }
    for &u in grid {
        if !(u > 0.0 && u <= 0.5) {
            return Err(Error::domain("u", u, "u in (0, 0.5]"));
        }
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Usage(format!("u grid not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Parses `a:b:step` into an inclusive grid (with a relative tolerance on the
/// end point).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::Parse(format!("grid {spec:?}: expected a:b:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let k = ((b - a) / step + 1e-9).floor() as usize;
    // Rounded to 12 decimals so that 0.01 * 7 prints as 0.07.
    let grid: Vec<f64> = (0..=k).map(|i| ((a + step * i as f64) * 1e12).round() / 1e12).collect();
    validate_grid(&grid)?;
    Ok(grid)
}

/// `u = 0.01 k`, `k = 1..=50`.
pub fn default_grid() -> Vec<f64> {
    (1..=50).map(|k| k as f64 / 100.0).collect()
}

pub fn alpha_curve(model: &CopulaModel, u_grid: &[f64]) -> Result<TailCurve> {
    validate_grid(u_grid)?;
    Ok(TailCurve {
        kind: CurveKind::Alpha,
        u_grid: u_grid.to_vec(),
        values: u_grid.iter().map(|&u| alpha_unchecked(model, u)).collect(),
        meta: json!({ "source": "population", "model": model.to_string() }),
    })
}

/// `beta(u) = (Cbar(1-u,1-u) - C(u,u)) / u^kappa`, `kappa >= 1`.
pub fn beta(model: &CopulaModel, u: f64, kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::domain("kappa", kappa, "kappa >= 1"));
    }
    crate::estimation::check_u(u)?;
    Ok((model.survival_diagonal(u) - model.diagonal(u)) / u.powf(kappa))
}

pub fn beta_curve(model: &CopulaModel, u_grid: &[f64], kappa: f64) -> Result<TailCurve> {
    validate_grid(u_grid)?;
    let values = u_grid.iter().map(|&u| beta(model, u, kappa).map(ExtReal::Finite)).collect::<Result<_>>()?;
    Ok(TailCurve {
        kind: CurveKind::Beta,
        u_grid: u_grid.to_vec(),
        values,
        meta: json!({ "source": "population", "model": model.to_string(), "kappa": kappa }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    /// The last two iterates agree within the tolerance.
    Converged,
    NotConverged,
    /// The lower-corner curvature vanished: the ratio diverges to `+inf`.
    DivergedUp,
    /// The upper-corner curvature vanished: the ratio diverges to `-inf`.
    DivergedDown,
    /// A corner curvature is negative at the last point (e.g. tail-dependent
    /// diagonals with `C(u,u) ~ lambda u`); the ratio says nothing about
    /// `alpha(0)` and `value` should be ignored.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericLimit {
    pub value: ExtReal,
    pub status: LimitStatus,
    pub u_sequence: Vec<f64>,
    pub iterates: Vec<ExtReal>,
}

/// Convergence tolerance between successive iterates.
pub const LIMIT_TOL: f64 = 1e-3;

/// `log(c(1-u) / c(u))` along a decreasing sequence, where `c` is the second
/// derivative of the diagonal, estimated by central differences with step
/// `h = u/10`. `c(1-u)` is the second derivative of `Cbar(1-u,1-u)` in `u`.
pub fn alpha_zero_numeric(model: &CopulaModel, u_sequence: &[f64]) -> Result<NumericLimit> {
    if u_sequence.is_empty() {
        return Err(Error::Usage("empty u sequence".into()));
    }
    for &u in u_sequence {
        if !(u > 0.0 && u <= 0.01) {
            return Err(Error::domain("u", u, "u in (0, 0.01]"));
        }
    }
    if u_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage("u sequence must be strictly decreasing".into()));
    }
    let second = |f: &dyn Fn(f64) -> f64, u: f64| {
        let h = u / 10.0;
        (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h)
    };
    let curvatures: Vec<(f64, f64)> = u_sequence
        .iter()
        .map(|&u| (second(&|t| model.survival_diagonal(t), u), second(&|t| model.diagonal(t), u)))
        .collect();
    let iterates: Vec<ExtReal> = curvatures.iter().map(|&(up, lo)| ExtReal::log_ratio(up, lo)).collect();
    let value = *iterates.last().unwrap();
    let (up, lo) = *curvatures.last().unwrap();
    let status = match value {
        _ if up < 0.0 || lo < 0.0 => LimitStatus::Inapplicable,
        ExtReal::PosInf => LimitStatus::DivergedUp,
        ExtReal::NegInf => LimitStatus::DivergedDown,
        ExtReal::Finite(v) => match iterates.len().checked_sub(2).map(|i| iterates[i]) {
            Some(ExtReal::Finite(p)) if (v - p).abs() < LIMIT_TOL => LimitStatus::Converged,
            _ => LimitStatus::NotConverged,
        },
    };
    Ok(NumericLimit { value, status, u_sequence: u_sequence.to_vec(), iterates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sigma3 {
    pub value: f64,
    pub resolution: usize,
    pub spacing: f64,
}

/// Default lattice resolution for [`sigma3`].
pub const SIGMA3_RESOLUTION: usize = 400;

/// `sup |C(u1,u2) - Chat(u1,u2)|` over a `(r+1)^2` lattice, where
/// `Chat(u1,u2) = u1 + u2 - 1 + C(1-u1, 1-u2)` is the survival copula.
pub fn sigma3<C: Copula + Sync + ?Sized>(model: &C, resolution: usize, strategy: Parallelism) -> Result<Sigma3> {
    if resolution < 2 {
        return Err(Error::domain("resolution", resolution as f64, "resolution >= 2"));
    }
    let r = resolution as f64;
    let surv = Survival(model);
    let rows = map_range(strategy, resolution + 1, |i| {
        let u1 = i as f64 / r;
        (0..=resolution)
            .map(|j| {
                let u2 = j as f64 / r;
                (model.cdf(u1, u2) - surv.cdf(u1, u2)).abs()
            })
            .fold(0.0f64, f64::max)
    });
    Ok(Sigma3 { value: rows.into_iter().fold(0.0, f64::max), resolution, spacing: 1.0 / r })
}

/// Empirical `sigma3`: the lattice supremum of `|C_n - Chat_n|` with
/// `C_n(u1,u2) = #{U1 <= u1, U2 <= u2}/n` and
/// `Chat_n(u1,u2) = #{1-U1 <= u1, 1-U2 <= u2}/n`, via 2-D prefix sums.
pub fn sigma3_empirical(sample: &PairedSample, resolution: usize) -> Result<Sigma3> {
    if sample.scale == Scale::Raw {
        return Err(Error::Usage("sigma3 needs uniform or pseudo-observation scale".into()));
    }
    if resolution < 2 {
        return Err(Error::domain("resolution", resolution as f64, "resolution >= 2"));
    }
    let r = resolution;
    let rf = r as f64;
    let n = sample.len() as f64;
    // Cell k holds points with k-1 < x*r <= k, so the prefix sum at k counts
    // x <= k/r.
    let cell = |x: f64| ((x * rf).ceil().max(0.0) as usize).min(r);
    let prefix = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        let mut grid = vec![0u32; (r + 1) * (r + 1)];
        for (a, b) in pts {
            grid[cell(a) * (r + 1) + cell(b)] += 1;
        }
        for i in 0..=r {
            for j in 0..=r {
                let mut v = grid[i * (r + 1) + j];
                if i > 0 {
                    v += grid[(i - 1) * (r + 1) + j];
                }
                if j > 0 {
                    v += grid[i * (r + 1) + j - 1];
                }
                if i > 0 && j > 0 {
                    v -= grid[(i - 1) * (r + 1) + j - 1];
                }
                grid[i * (r + 1) + j] = v;
            }
        }
        grid
    };
    let lower = prefix(&mut sample.x1.iter().copied().zip(sample.x2.iter().copied()));
    let upper = prefix(&mut sample.x1.iter().map(|x| 1.0 - x).zip(sample.x2.iter().map(|x| 1.0 - x)));
    let value = lower
        .iter()
        .zip(&upper)
        .map(|(&a, &b)| (a as f64 - b as f64).abs() / n)
        .fold(0.0, f64::max);
    Ok(Sigma3 { value, resolution, spacing: 1.0 / rf })
}

/// Weight functions for `rho_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFunction {
    X,
    X2,
    X4,
}

impl WeightFunction {
    pub const ALL: [WeightFunction; 3] = [WeightFunction::X, WeightFunction::X2, WeightFunction::X4];

    pub fn id(self) -> &'static str {
        match self {
            WeightFunction::X => "x",
            WeightFunction::X2 => "x2",
            WeightFunction::X4 => "x4",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            WeightFunction::X => x,
            WeightFunction::X2 => x * x,
            WeightFunction::X4 => x * x * x * x,
        }
    }
}

impl std::str::FromStr for WeightFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(WeightFunction::X),
            "x2" | "x^2" => Ok(WeightFunction::X2),
            "x4" | "x^4" => Ok(WeightFunction::X4),
            other => Err(Error::Parse(format!("unknown weight {other:?} (expected x, x2 or x4)"))),
        }
    }
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let m = pairs.len();
    if m < 3 {
        return None;
    }
    let mf = m as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (ma, mb) = (ma / mf, mb / mf);
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// `rho_K(a,u) = rho_L(a,u) - rho_U(a,u)` with
/// `rho_L = cor[a(1 - U1/u), a(1 - U2/u) | U1 < u, U2 < u]` and
/// `rho_U = cor[a(1 - (1-U1)/u), a(1 - (1-U2)/u) | U1 > 1-u, U2 > 1-u]`.
///
/// `None` when a corner has fewer than three points or no variance.
pub fn rho_k(sample: &PairedSample, u: f64, weight: WeightFunction) -> Result<Option<f64>> {
    if sample.scale == Scale::Raw {
        return Err(Error::Usage("rho_K needs uniform or pseudo-observation scale".into()));
    }
    crate::estimation::check_u(u)?;
    let a = |x: f64| weight.eval(1.0 - x / u);
    let lo: Vec<(f64, f64)> = sample
        .x1
        .iter()
        .zip(&sample.x2)
        .filter(|(x, y)| **x < u && **y < u)
        .map(|(x, y)| (a(*x), a(*y)))
        .collect();
    let up: Vec<(f64, f64)> = sample
        .x1
        .iter()
        .zip(&sample.x2)
        .filter(|(x, y)| **x > 1.0 - u && **y > 1.0 - u)
        .map(|(x, y)| (a(1.0 - x), a(1.0 - y)))
        .collect();
    Ok(match (pearson(&lo), pearson(&up)) {
        (Some(l), Some(h)) => Some(l - h),
        _ => None,
    })
}

/// `rho_K` (or `-rho_K` with `negate`) on a grid; undefined points are
/// reported as `None`.
pub fn rho_k_curve(
    sample: &PairedSample,
    u_grid: &[f64],
    weight: WeightFunction,
    negate: bool,
) -> Result<(Vec<f64>, Vec<Option<f64>>, Value)> {
    validate_grid(u_grid)?;
    let sign = if negate { -1.0 } else { 1.0 };
    let values = u_grid
        .iter()
        .map(|&u| rho_k(sample, u, weight).map(|v| v.map(|x| sign * x)))
        .collect::<Result<_>>()?;
    Ok((u_grid.to_vec(), values, json!({ "weight": weight.id(), "negate": negate })))
}

/// `A(u)`: pairwise `alpha_hat` of uniform-scale columns.
pub fn alpha_matrix(columns: &[Vec<f64>], u: f64) -> Result<Vec<Vec<ExtReal>>> {
    crate::estimation::check_u(u)?;
    let n = columns.first().map_or(0, Vec::len);
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(format!("columns of length {n} and {}", c.len())));
    }
    let d = columns.len();
    let mut out = vec![vec![ExtReal::ZERO; d]; d];
    for i in 0..d {
        for j in 0..d {
            out[i][j] = TailCounter::from_columns(&columns[i], &columns[j]).alpha(u);
        }
    }
    Ok(out)
}
