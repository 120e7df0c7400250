//! Known-margin transforms `X -> F(X)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sampling::{cauchy_cdf, PairedSample, Scale};
use crate::special::{normal_cdf, student_t_cdf};

/// A location-scale margin, written `normal(mu,sigma)`, `cauchy(loc,scale)`,
/// `student_t(nu,loc,scale)`, or `none`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginSpec {
    None,
    Normal { mu: f64, sigma: f64 },
    Cauchy { loc: f64, scale: f64 },
    StudentT { nu: f64, loc: f64, scale: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(name, v, &format!("{name} > 0")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(name, v, &format!("{name} finite")))
    }
}

impl MarginSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Ok(MarginSpec::Normal { mu: finite("mu", mu)?, sigma: positive("sigma", sigma)? })
    }

    pub fn cauchy(loc: f64, scale: f64) -> Result<Self> {
        Ok(MarginSpec::Cauchy { loc: finite("loc", loc)?, scale: positive("scale", scale)? })
    }

    pub fn student_t(nu: f64, loc: f64, scale: f64) -> Result<Self> {
        Ok(MarginSpec::StudentT { nu: positive("nu", nu)?, loc: finite("loc", loc)?, scale: positive("scale", scale)? })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, MarginSpec::None)
    }

    /// `F(x)`; `None` is the identity.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginSpec::None => x,
            MarginSpec::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            MarginSpec::Cauchy { loc, scale } => cauchy_cdf((x - loc) / scale),
            MarginSpec::StudentT { nu, loc, scale } => student_t_cdf((x - loc) / scale, nu),
        }
    }
}

/// `F(x)` for a validated spec.
pub fn margin_cdf(spec: &MarginSpec, x: f64) -> f64 {
    spec.cdf(x)
}

/// Applies `F1` and `F2` to a raw sample, giving a uniform-scale sample.
/// Values that round to 0 or 1 are rejected since both corners are then
/// ill-defined.
pub fn to_uniform(sample: &PairedSample, f1: &MarginSpec, f2: &MarginSpec) -> Result<PairedSample> {
    if sample.scale != Scale::Raw {
        return Err(Error::Usage("margin transforms apply to raw-scale samples".into()));
    }
    if f1.is_none() || f2.is_none() {
        return Err(Error::Usage("known-margin transform needs a margin spec for both columns".into()));
    }
    let x1 = sample.x1.iter().map(|&x| f1.cdf(x)).collect();
    let x2 = sample.x2.iter().map(|&x| f2.cdf(x)).collect();
    PairedSample::new(x1, x2, Scale::Uniform)
}

impl FromStr for MarginSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        if s == "none" {
            return Ok(MarginSpec::None);
        }
        let bad = || Error::Parse(format!("margin {s:?}: expected normal(mu,sigma), cauchy(loc,scale), student_t(nu,loc,scale) or none"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let v: Vec<f64> = args.split(',').map(|a| a.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        match (name, v.as_slice()) {
            ("normal", [mu, sigma]) => MarginSpec::normal(*mu, *sigma),
            ("cauchy", [loc, scale]) => MarginSpec::cauchy(*loc, *scale),
            ("student_t" | "t", [nu, loc, scale]) => MarginSpec::student_t(*nu, *loc, *scale),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for MarginSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginSpec::None => write!(f, "none"),
            MarginSpec::Normal { mu, sigma } => write!(f, "normal({mu},{sigma})"),
            MarginSpec::Cauchy { loc, scale } => write!(f, "cauchy({loc},{scale})"),
            MarginSpec::StudentT { nu, loc, scale } => write!(f, "student_t({nu},{loc},{scale})"),
        }
    }
}

impl Serialize for MarginSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MarginSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
