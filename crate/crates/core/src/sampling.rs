//! Seeded variate generation.
//!
//! All randomness flows through [`SeedSpec::rng`], a ChaCha8 stream selected
//! by `(master_seed, stream_id)`. Distinct stream ids address disjoint
//! keystreams of the same key, so parallel replications never overlap.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaModel, Family};
use crate::error::{Error, Result};

/// Root-finder tolerance on `u2` for conditional inversion.
pub const INVERSION_TOL: f64 = 1e-12;
/// Iteration cap for conditional inversion.
pub const INVERSION_MAX_ITER: usize = 200;
/// Largest Clayton parameter accepted by the gamma-frailty generator.
pub const CLAYTON_FRAILTY_MAX_THETA: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child seed for nested randomness (bootstrap resample `child` inside
    /// this stream). The child's master key is a hash of `self`, so children
    /// of different parents live under different keys.
    pub fn derive(&self, child: u64) -> SeedSpec {
        SeedSpec {
            master_seed: splitmix64(self.master_seed ^ splitmix64(self.stream_id.wrapping_add(1))),
            stream_id: child,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Raw,
    Uniform,
    Pseudo,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(Scale::Raw),
            "uniform" => Ok(Scale::Uniform),
            "pseudo" => Ok(Scale::Pseudo),
            other => Err(Error::Parse(format!("unknown scale {other:?} (expected raw, uniform or pseudo)"))),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scale::Raw => "raw",
            Scale::Uniform => "uniform",
            Scale::Pseudo => "pseudo",
        })
    }
}

/// `n` bivariate observations on a declared scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub scale: Scale,
}

impl PairedSample {
    /// Checks lengths, finiteness, and `(0,1)` membership for uniform and
    /// pseudo scales.
    pub fn new(x1: Vec<f64>, x2: Vec<f64>, scale: Scale) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::LengthMismatch(format!("columns have {} and {} rows", x1.len(), x2.len())));
        }
        for (i, &x) in x1.iter().chain(&x2).enumerate() {
            let row = i % x1.len().max(1) + 1;
            if !x.is_finite() {
                return Err(Error::Parse(format!("row {row}: non-finite value {x}")));
            }
            if scale != Scale::Raw && !(x > 0.0 && x < 1.0) {
                return Err(Error::Parse(format!("row {row}: value {x} outside (0,1) on {scale} scale")));
            }
        }
        Ok(PairedSample { x1, x2, scale })
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    /// The sample with its columns exchanged.
    pub fn swapped(&self) -> PairedSample {
        PairedSample { x1: self.x2.clone(), x2: self.x1.clone(), scale: self.scale }
    }

    /// Componentwise reflection `U -> 1 - U` (uniform and pseudo scales) or
    /// `X -> -X` (raw scale).
    pub fn reflected(&self) -> PairedSample {
        let f = |x: &f64| if self.scale == Scale::Raw { -x } else { 1.0 - x };
        PairedSample {
            x1: self.x1.iter().map(f).collect(),
            x2: self.x2.iter().map(f).collect(),
            scale: self.scale,
        }
    }

    /// Rows picked by `idx`, keeping the scale.
    pub fn select(&self, idx: &[usize]) -> PairedSample {
        PairedSample {
            x1: idx.iter().map(|&i| self.x1[i]).collect(),
            x2: idx.iter().map(|&i| self.x2[i]).collect(),
            scale: self.scale,
        }
    }
}

fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Natural log of a `Gamma(shape, 1)` variate, accurate for tiny shapes
/// where the variate itself underflows.
fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("shape >= 1").sample(rng);
        g.ln()
    } else {
        // G(a) = G(a+1) * U^(1/a)
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("shape > 0").sample(rng);
        let u: f64 = rng.sample(Open01);
        g.ln() + u.ln() / shape
    }
}

fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// One coordinate of a Clayton frailty draw: `(1 + E/V)^(-1/theta)`.
fn clayton_frailty_coordinate<R: Rng + ?Sized>(theta: f64, ln_v: f64, rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    open_unit((-softplus(e.ln() - ln_v) / theta).exp())
}

/// Solves `h1(u, v) = w` for `v` by bisection with false-position steps.
fn invert_h1(model: &CopulaModel, u: f64, w: f64) -> Result<f64> {
    let f = |v: f64| model.h1(u, v) - w;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut flo, mut fhi) = (-w, 1.0 - w);
    for it in 0..INVERSION_MAX_ITER {
        if hi - lo <= INVERSION_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        // Secant candidate on the bracket; used only if it lands well inside.
        let sec = if fhi > flo { lo - flo * (hi - lo) / (fhi - flo) } else { mid };
        let x = if it % 2 == 1 && sec > lo + 0.01 * (hi - lo) && sec < hi - 0.01 * (hi - lo) {
            sec
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    if hi - lo <= INVERSION_TOL {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::Generation {
        family: model.family().name().to_string(),
        quantile: w,
        iterations: INVERSION_MAX_ITER,
    })
}

/// Closed-form or numeric inverse of `v -> h1(u, v)` at level `w`.
pub fn conditional_quantile(model: &CopulaModel, u: f64, w: f64) -> Result<f64> {
    let (a, _) = model.kind_params();
    let v = match model.family() {
        Family::Independence => w,
        Family::Fgm => {
            let c = a * (1.0 - 2.0 * u);
            2.0 * w / ((1.0 + c) + ((1.0 + c) * (1.0 + c) - 4.0 * c * w).max(0.0).sqrt())
        }
        Family::Frank => {
            let theta = a;
            let num = w * (-theta).exp_m1();
            let den = w + (1.0 - w) * (-theta * u).exp();
            -(num / den).ln_1p() / theta
        }
        Family::Clayton if a < 0.0 => {
            let s = -a;
            if s == 1.0 {
                1.0 - u
            } else {
                let k = w.powf(s / (1.0 - s));
                ((k - 1.0) * u.powf(s) + 1.0).max(0.0).powf(1.0 / s)
            }
        }
        Family::Clayton => {
            let theta = a;
            // v = (u^-theta (w^(-theta/(1+theta)) - 1) + 1)^(-1/theta)
            let t = (u.ln() * -theta).exp() * (w.ln() * (-theta / (1.0 + theta))).exp_m1();
            (-(t.ln_1p()) / theta).exp()
        }
        Family::Plackett => {
            let theta = a;
            let q = w * (1.0 - w);
            let bb = theta + q * (theta - 1.0) * (theta - 1.0);
            let c = 2.0 * q * (u * theta * theta + 1.0 - u) + theta * (1.0 - 2.0 * q);
            let d = theta.sqrt() * (theta + 4.0 * q * u * (1.0 - u) * (1.0 - theta) * (1.0 - theta)).sqrt();
            (c - (1.0 - 2.0 * w) * d) / (2.0 * bb)
        }
        Family::Amh => {
            let theta = a;
            let p = 1.0 - u;
            let bq = 1.0 - theta * p;
            let aa = theta * (1.0 - w * theta * p * p);
            let bl = 1.0 - theta - 2.0 * w * bq * theta * p;
            let disc = bl * bl + 4.0 * aa * w * bq * bq;
            let v = 2.0 * w * bq * bq / (bl + disc.max(0.0).sqrt());
            if v.is_finite() && (0.0..=1.0).contains(&v) && (model.h1(u, v) - w).abs() < 1e-9 {
                v
            } else {
                invert_h1(model, u, w)?
            }
        }
        Family::Gaussian => {
            use crate::special::{normal_cdf, normal_quantile};
            normal_cdf(a * normal_quantile(u) + (1.0 - a * a).sqrt() * normal_quantile(w))
        }
        Family::Gumbel | Family::Bb7 => invert_h1(model, u, w)?,
    };
    Ok(open_unit(v))
}

/// `n` iid pairs from `model` on the uniform scale.
pub fn sample_copula(model: &CopulaModel, n: usize, seed: SeedSpec) -> Result<PairedSample> {
    if n == 0 {
        return Err(Error::Usage("sample size must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    match (model.family(), model.clayton_theta()) {
        (Family::Clayton, Some(theta)) if theta > 0.0 => {
            if theta > CLAYTON_FRAILTY_MAX_THETA {
                return Err(Error::domain("theta", theta, "clayton frailty sampler requires theta <= 1e4"));
            }
            for _ in 0..n {
                let ln_v = ln_gamma_variate(1.0 / theta, &mut rng);
                x1.push(clayton_frailty_coordinate(theta, ln_v, &mut rng));
                x2.push(clayton_frailty_coordinate(theta, ln_v, &mut rng));
            }
        }
        (Family::Gaussian, _) => {
            let rho = model.params()[0];
            let s = (1.0 - rho * rho).sqrt();
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                x1.push(open_unit(crate::special::normal_cdf(z1)));
                x2.push(open_unit(crate::special::normal_cdf(rho * z1 + s * z2)));
            }
        }
        _ => {
            for _ in 0..n {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                x1.push(u);
                x2.push(conditional_quantile(model, u, w)?);
            }
        }
    }
    Ok(PairedSample { x1, x2, scale: Scale::Uniform })
}

/// Standard Cauchy quantile.
pub fn cauchy_quantile(u: f64) -> f64 {
    (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Standard Cauchy CDF `0.5 + atan(x)/pi`.
pub fn cauchy_cdf(x: f64) -> f64 {
    0.5 + x.atan() / std::f64::consts::PI
}

/// Clayton copula with standard Cauchy margins, on the raw scale.
pub fn sample_clayton_cauchy(theta: f64, n: usize, seed: SeedSpec) -> Result<PairedSample> {
    if !(theta > 0.0) {
        return Err(Error::domain("theta", theta, "clayton-cauchy theta > 0"));
    }
    let u = sample_copula(&CopulaModel::clayton(theta)?, n, seed)?;
    Ok(PairedSample {
        x1: u.x1.iter().map(|&v| cauchy_quantile(v)).collect(),
        x2: u.x2.iter().map(|&v| cauchy_quantile(v)).collect(),
        scale: Scale::Raw,
    })
}

/// `d` columns of length `n` sharing one gamma frailty, i.e. a
/// `d`-dimensional Clayton copula with parameter `theta > 0`.
pub fn sample_clayton_frailty(theta: f64, d: usize, n: usize, seed: SeedSpec) -> Result<Vec<Vec<f64>>> {
    if !(theta > 0.0 && theta <= CLAYTON_FRAILTY_MAX_THETA) {
        return Err(Error::domain("theta", theta, "clayton frailty theta in (0, 1e4]"));
    }
    let mut rng = seed.rng();
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let ln_v = ln_gamma_variate(1.0 / theta, &mut rng);
        for col in cols.iter_mut() {
            col.push(clayton_frailty_coordinate(theta, ln_v, &mut rng));
        }
    }
    Ok(cols)
}
