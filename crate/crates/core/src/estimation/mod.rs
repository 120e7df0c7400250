//! Sample analogues of `alpha(u)` and their inference.
//!
//! For a sample on the uniform (or pseudo-observation) scale,
//!
//! ```text
//! T_L(u) = #{i : U1i <= u, U2i <= u} / n
//! T_U(u) = #{i : U1i >= 1-u, U2i >= 1-u} / n
//! alpha_hat(u) = log(T_U(u) / T_L(u))
//! ```
//!
//! with the extended-log convention. [`alpha_star`] applies the same
//! estimator to rank-based pseudo-observations of raw data.

mod intervals;

pub use intervals::{
    ci_asymptotic, ci_band_bonferroni, ci_band_bonferroni_on, ci_bootstrap, ci_pointwise, BandMeta, IntervalBand, IntervalMethod,
};
pub use test::{chi2_test, equispaced_points, TestReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::sampling::{PairedSample, Scale};

/// Corner counts at one `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCounts {
    pub u: f64,
    pub n: usize,
    pub lower: usize,
    pub upper: usize,
}

impl TailCounts {
    pub fn t_lower(&self) -> f64 {
        self.lower as f64 / self.n as f64
    }

    pub fn t_upper(&self) -> f64 {
        self.upper as f64 / self.n as f64
    }

    pub fn alpha(&self) -> ExtReal {
        ExtReal::log_ratio(self.upper as f64, self.lower as f64)
    }

    /// `sigma_hat(u) = sqrt((T_L + T_U) / (T_L T_U))`, `+inf` if a corner is
    /// empty.
    pub fn sigma(&self) -> f64 {
        self.sigma_sq().sqrt()
    }

    pub fn sigma_sq(&self) -> f64 {
        if self.lower == 0 || self.upper == 0 {
            return f64::INFINITY;
        }
        let (tl, tu) = (self.t_lower(), self.t_upper());
        (tl + tu) / (tl * tu)
    }
}

pub(crate) fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain("u", u, "u in (0, 0.5]"))
    }
}

/// Sorted corner keys of a sample; answers `T_L(u)`, `T_U(u)` in `O(log n)`.
///
/// An observation is in the lower corner at `u` iff `max(U1,U2) <= u` and in
/// the upper corner iff `min(U1,U2) >= 1-u`, so counting reduces to binary
/// search on the sorted maxima and minima. The comparisons are exactly those
/// of the defining indicators.
#[derive(Debug, Clone)]
pub struct TailCounter {
    maxima: Vec<f64>,
    minima: Vec<f64>,
}

impl TailCounter {
    pub fn new(sample: &PairedSample) -> Result<Self> {
        if sample.scale == Scale::Raw {
            return Err(Error::Usage(
                "tail counts need uniform or pseudo-observation scale; transform raw data first".into(),
            ));
        }
        Ok(Self::from_columns(&sample.x1, &sample.x2))
    }

    pub(crate) fn from_columns(x1: &[f64], x2: &[f64]) -> Self {
        let mut maxima: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a.max(*b)).collect();
        let mut minima: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a.min(*b)).collect();
        maxima.sort_by(f64::total_cmp);
        minima.sort_by(f64::total_cmp);
        TailCounter { maxima, minima }
    }

    pub fn n(&self) -> usize {
        self.maxima.len()
    }

    pub fn counts(&self, u: f64) -> TailCounts {
        let lo = 1.0 - u;
        TailCounts {
            u,
            n: self.n(),
            lower: self.maxima.partition_point(|&m| m <= u),
            upper: self.minima.len() - self.minima.partition_point(|&m| m < lo),
        }
    }

    pub fn alpha(&self, u: f64) -> ExtReal {
        self.counts(u).alpha()
    }
}

/// Sorted, deduplicated jump set `{min(max(u1,u2), max(1-u1,1-u2))}` clipped
/// to `(0, 0.5]`. `T_L` and `T_U` are right-continuous step functions of `u`
/// that can only change at these points.
pub fn jump_set(sample: &PairedSample) -> Result<Vec<f64>> {
    if sample.scale == Scale::Raw {
        return Err(Error::Usage("jump set needs uniform or pseudo-observation scale".into()));
    }
    Ok(jump_set_columns(&sample.x1, &sample.x2))
}

pub(crate) fn jump_set_columns(x1: &[f64], x2: &[f64]) -> Vec<f64> {
    let mut j: Vec<f64> = x1
        .iter()
        .zip(x2)
        .map(|(&a, &b)| a.max(b).min((1.0 - a).max(1.0 - b)))
        .filter(|&v| v > 0.0 && v <= 0.5)
        .collect();
    j.sort_by(f64::total_cmp);
    j.dedup();
    j
}

pub fn tail_counts(sample: &PairedSample, u: f64) -> Result<TailCounts> {
    check_u(u)?;
    Ok(TailCounter::new(sample)?.counts(u))
}

/// `alpha_hat(u) = log(T_U(u) / T_L(u))`.
pub fn alpha_hat(sample: &PairedSample, u: f64) -> Result<ExtReal> {
    Ok(tail_counts(sample, u)?.alpha())
}

pub fn sigma_hat(sample: &PairedSample, u: f64) -> Result<f64> {
    Ok(tail_counts(sample, u)?.sigma())
}

/// Ranks `1..=n` with ties given the largest rank of their group, i.e.
/// `#{k : x_k <= x_i}`.
pub(crate) fn max_ranks(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = j + 1;
        }
        i = j + 1;
    }
    ranks
}

/// `rank / (n+1)` rounded to the dyadic grid `m / 2^52`, with the upper half
/// built as exact mirrors of the lower half. Reflection `1 - p` is then exact,
/// so ranks `k` and `n+1-k` meet the lower and upper corner boundaries at
/// exactly the same `u`.
pub(crate) fn rank_to_pseudo(rank: usize, n: usize) -> f64 {
    const SCALE: u128 = 1 << 52;
    let d = (n + 1) as u128;
    let grid = |k: u128| (2 * k * SCALE + d) / (2 * d);
    let r = rank as u128;
    let m = if 2 * r <= d { grid(r) } else { SCALE - grid(d - r) };
    m as f64 / SCALE as f64
}

/// `F_hat_j(X_ji) = (n+1)^{-1} sum_k 1(X_jk <= X_ji)` for each coordinate.
pub fn pseudo_observations(sample: &PairedSample) -> Result<PairedSample> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::Usage("pseudo-observations of an empty sample".into()));
    }
    let conv = |x: &[f64]| max_ranks(x).into_iter().map(|r| rank_to_pseudo(r, n)).collect();
    Ok(PairedSample { x1: conv(&sample.x1), x2: conv(&sample.x2), scale: Scale::Pseudo })
}

/// `alpha_hat` on the pseudo-observations of `sample`.
pub fn alpha_star(sample: &PairedSample, u: f64) -> Result<ExtReal> {
    check_u(u)?;
    alpha_hat(&pseudo_observations(sample)?, u)
}

/// Smallest jump point at which every source has at least `threshold`
/// observations in both corners; `None` if that never happens on `(0, 0.5]`.
pub fn u_min_rule(sources: &[&PairedSample], threshold: usize) -> Result<Option<f64>> {
    if threshold == 0 {
        return Err(Error::domain("threshold", 0.0, "threshold >= 1"));
    }
    let mut counters = Vec::with_capacity(sources.len());
    let mut jumps = Vec::new();
    for s in sources {
        counters.push(TailCounter::new(s)?);
        jumps.extend(jump_set(s)?);
    }
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let ok = |u: f64| {
        counters.iter().all(|c| {
            let t = c.counts(u);
            t.lower >= threshold && t.upper >= threshold
        })
    };
    // Counts are non-decreasing in u, so the predicate is monotone.
    let i = jumps.partition_point(|&u| !ok(u));
    Ok(jumps.get(i).copied())
}
