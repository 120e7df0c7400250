use rand::Rng;
use serde::Serialize;

use super::{check_u, jump_set, max_ranks, rank_to_pseudo, TailCounter, TailCounts};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::par::{map_range, Parallelism};
use crate::sampling::{PairedSample, SeedSpec};
use crate::special::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Asymptotic,
    Bonferroni,
    Bootstrap,
}

impl std::str::FromStr for IntervalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asymptotic" => Ok(IntervalMethod::Asymptotic),
            "bonferroni" => Ok(IntervalMethod::Bonferroni),
            "bootstrap" => Ok(IntervalMethod::Bootstrap),
            other => Err(Error::Parse(format!(
                "unknown interval method {other:?} (expected asymptotic, bonferroni or bootstrap)"
            ))),
        }
    }
}

impl std::fmt::Display for IntervalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntervalMethod::Asymptotic => "asymptotic",
            IntervalMethod::Bonferroni => "bonferroni",
            IntervalMethod::Bootstrap => "bootstrap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandMeta {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    /// Bootstrap replicates dropped per `u` because a corner was empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonfinite: Option<Vec<usize>>,
}

/// Per-`u` estimates with interval bounds.
///
/// `unbounded[i]` flags a point where no finite interval could be formed
/// (an empty corner, or every bootstrap replicate non-finite); its bounds
/// are `(-inf, +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalBand {
    pub method: IntervalMethod,
    pub level: f64,
    pub u_grid: Vec<f64>,
    pub estimate: Vec<ExtReal>,
    pub lower: Vec<ExtReal>,
    pub upper: Vec<ExtReal>,
    pub counts: Vec<TailCounts>,
    pub unbounded: Vec<bool>,
    pub meta: BandMeta,
}

impl IntervalBand {
    pub fn len(&self) -> usize {
        self.u_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_grid.is_empty()
    }

    /// Whether `value` lies in the closed interval at index `i`.
    pub fn covers(&self, i: usize, value: ExtReal) -> bool {
        self.lower[i] <= value && value <= self.upper[i]
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i].to_f64() - self.lower[i].to_f64()
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("level", level, "level in (0, 1)"))
    }
}

fn check_grid(u_grid: &[f64]) -> Result<()> {
    u_grid.iter().try_for_each(|&u| check_u(u))
}

fn normal_band(
    counter: &TailCounter,
    u_grid: &[f64],
    z: f64,
    method: IntervalMethod,
    level: f64,
) -> IntervalBand {
    let n = counter.n();
    let sqrt_n = (n as f64).sqrt();
    let mut band = IntervalBand {
        method,
        level,
        u_grid: u_grid.to_vec(),
        estimate: Vec::with_capacity(u_grid.len()),
        lower: Vec::with_capacity(u_grid.len()),
        upper: Vec::with_capacity(u_grid.len()),
        counts: Vec::with_capacity(u_grid.len()),
        unbounded: Vec::with_capacity(u_grid.len()),
        meta: BandMeta { n, z: Some(z), resamples: None, nonfinite: None },
    };
    for &u in u_grid {
        let c = counter.counts(u);
        let a = c.alpha();
        let s = c.sigma();
        let (lo, hi, unb) = match a.finite() {
            Some(a) if s.is_finite() => {
                let half = z * s / sqrt_n;
                (ExtReal::Finite(a - half), ExtReal::Finite(a + half), false)
            }
            _ => (ExtReal::NegInf, ExtReal::PosInf, true),
        };
        band.estimate.push(a);
        band.lower.push(lo);
        band.upper.push(hi);
        band.counts.push(c);
        band.unbounded.push(unb);
    }
    band
}

/// `alpha_hat(u) +- z_{p/2} sigma_hat(u) / sqrt(n)` on a grid, with
/// `level = 1 - p`.
pub fn ci_asymptotic(sample: &PairedSample, u_grid: &[f64], level: f64) -> Result<IntervalBand> {
    check_level(level)?;
    check_grid(u_grid)?;
    let counter = TailCounter::new(sample)?;
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    Ok(normal_band(&counter, u_grid, z, IntervalMethod::Asymptotic, level))
}

/// Single-point form of [`ci_asymptotic`].
pub fn ci_pointwise(sample: &PairedSample, u: f64, level: f64) -> Result<IntervalBand> {
    ci_asymptotic(sample, &[u], level)
}

/// Bonferroni band on the jump set: `z_{p/(2n)}` replaces `z_{p/2}`.
pub fn ci_band_bonferroni(sample: &PairedSample, level: f64) -> Result<IntervalBand> {
    let jumps = jump_set(sample)?;
    ci_band_bonferroni_on(sample, &jumps, level)
}

/// Bonferroni-widened intervals on a caller-chosen grid (the correction
/// still divides by the sample size).
pub fn ci_band_bonferroni_on(sample: &PairedSample, u_grid: &[f64], level: f64) -> Result<IntervalBand> {
    check_level(level)?;
    check_grid(u_grid)?;
    if sample.is_empty() {
        return Err(Error::Usage("bonferroni band of an empty sample".into()));
    }
    let counter = TailCounter::new(sample)?;
    let n = counter.n() as f64;
    let z = normal_quantile(1.0 - (1.0 - level) / (2.0 * n));
    Ok(normal_band(&counter, u_grid, z, IntervalMethod::Bonferroni, level))
}

/// Inverse-ECDF (type 1) quantile of sorted data.
pub(crate) fn quantile_type1(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let k = (p * m as f64).ceil() as usize;
    sorted[k.clamp(1, m) - 1]
}

/// Rank transform of a bootstrap resample in `O(n)`, given each original
/// row's position in the sorted order of its column.
struct RankTable {
    /// Index of each row's tie group in sorted order.
    group: Vec<usize>,
    groups: usize,
}

impl RankTable {
    fn new(x: &[f64]) -> Self {
        let ranks = max_ranks(x);
        // Tie groups are identified by their shared max-rank.
        let mut distinct: Vec<usize> = ranks.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let mut index = vec![0; x.len() + 1];
        for (g, &r) in distinct.iter().enumerate() {
            index[r] = g;
        }
        RankTable { group: ranks.iter().map(|&r| index[r]).collect(), groups: distinct.len() }
    }

    /// Pseudo-observations of rows `idx` computed within the resample.
    fn pseudo(&self, idx: &[usize], counts: &mut Vec<usize>, out: &mut Vec<f64>) {
        let n = idx.len();
        counts.clear();
        counts.resize(self.groups, 0);
        for &i in idx {
            counts[self.group[i]] += 1;
        }
        let mut acc = 0;
        for c in counts.iter_mut() {
            acc += *c;
            *c = acc;
        }
        out.clear();
        out.extend(idx.iter().map(|&i| rank_to_pseudo(counts[self.group[i]], n)));
    }
}

/// Basic bootstrap interval for `alpha_star` on a grid.
///
/// Each resample draws `n` rows with replacement from the raw sample (or
/// from any scale, since only ranks matter), recomputes pseudo-observations
/// within the resample and evaluates `alpha_star`. With `q` the type-1
/// quantiles of the finite replicates, the interval is
/// `[2 a - q(1-p/2), 2 a - q(p/2)]`. Resample `b` uses `seed.derive(b)`.
pub fn ci_bootstrap(
    sample: &PairedSample,
    u_grid: &[f64],
    level: f64,
    resamples: usize,
    seed: SeedSpec,
    strategy: Parallelism,
) -> Result<IntervalBand> {
    check_level(level)?;
    check_grid(u_grid)?;
    if resamples == 0 {
        return Err(Error::domain("resamples", 0.0, "resamples >= 1"));
    }
    let n = sample.len();
    if n == 0 {
        return Err(Error::Usage("bootstrap of an empty sample".into()));
    }
    let t1 = RankTable::new(&sample.x1);
    let t2 = RankTable::new(&sample.x2);
    let all: Vec<usize> = (0..n).collect();
    let (mut c, mut p1, mut p2) = (Vec::new(), Vec::new(), Vec::new());
    t1.pseudo(&all, &mut c, &mut p1);
    t2.pseudo(&all, &mut c, &mut p2);
    let base = TailCounter::from_columns(&p1, &p2);

    let replicates: Vec<Vec<ExtReal>> = map_range(strategy, resamples, |b| {
        let mut rng = seed.derive(b as u64).rng();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let (mut counts, mut q1, mut q2) = (Vec::new(), Vec::new(), Vec::new());
        t1.pseudo(&idx, &mut counts, &mut q1);
        t2.pseudo(&idx, &mut counts, &mut q2);
        let counter = TailCounter::from_columns(&q1, &q2);
        u_grid.iter().map(|&u| counter.alpha(u)).collect()
    });

    let p = 1.0 - level;
    let mut band = IntervalBand {
        method: IntervalMethod::Bootstrap,
        level,
        u_grid: u_grid.to_vec(),
        estimate: Vec::with_capacity(u_grid.len()),
        lower: Vec::with_capacity(u_grid.len()),
        upper: Vec::with_capacity(u_grid.len()),
        counts: Vec::with_capacity(u_grid.len()),
        unbounded: Vec::with_capacity(u_grid.len()),
        meta: BandMeta { n, z: None, resamples: Some(resamples), nonfinite: Some(Vec::new()) },
    };
    let mut nonfinite = Vec::with_capacity(u_grid.len());
    for (k, &u) in u_grid.iter().enumerate() {
        let counts = base.counts(u);
        let a = counts.alpha();
        let mut finite: Vec<f64> = replicates.iter().filter_map(|r| r[k].finite()).collect();
        nonfinite.push(resamples - finite.len());
        finite.sort_by(f64::total_cmp);
        let (lo, hi, unb) = match a.finite() {
            Some(a) if !finite.is_empty() => {
                let q_hi = quantile_type1(&finite, 1.0 - p / 2.0);
                let q_lo = quantile_type1(&finite, p / 2.0);
                (ExtReal::Finite(2.0 * a - q_hi), ExtReal::Finite(2.0 * a - q_lo), false)
            }
            _ => (ExtReal::NegInf, ExtReal::PosInf, true),
        };
        band.estimate.push(a);
        band.lower.push(lo);
        band.upper.push(hi);
        band.counts.push(counts);
        band.unbounded.push(unb);
    }
    band.meta.nonfinite = Some(nonfinite);
    Ok(band)
}
