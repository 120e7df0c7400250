//! Parametric bivariate copulas.
//!
//! Every family exposes its CDF, the diagonal section `C(u,u)`, the survival
//! diagonal `Cbar(1-u,1-u) = 2u - 1 + C(1-u,1-u)` and the first partial
//! derivative `dC/du1` (the conditional distribution of `U2` given `U1`).
//! Diagonals are written in forms that avoid cancellation near the corners,
//! since the tail measures divide two small probabilities.

mod parse;
mod tail;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::special::{bvn_cdf, bvn_upper, normal_cdf, normal_quantile};

pub use tail::{alpha_limit, tail_summary, TailSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Gaussian,
    Fgm,
    Plackett,
    Frank,
    Clayton,
    Gumbel,
    Amh,
    Bb7,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Independence,
        Family::Gaussian,
        Family::Fgm,
        Family::Plackett,
        Family::Frank,
        Family::Clayton,
        Family::Gumbel,
        Family::Amh,
        Family::Bb7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::Fgm => "fgm",
            Family::Plackett => "plackett",
            Family::Frank => "frank",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Amh => "amh",
            Family::Bb7 => "bb7",
        }
    }

    /// Parameter names in the order expected by [`CopulaModel::new`].
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Independence => &[],
            Family::Gaussian => &["rho"],
            Family::Bb7 => &["delta", "theta"],
            _ => &["theta"],
        }
    }

    /// Families with `C = Cbar`, for which `alpha(u) = 0` identically.
    pub fn is_radially_symmetric(self) -> bool {
        matches!(
            self,
            Family::Independence | Family::Gaussian | Family::Fgm | Family::Plackett | Family::Frank
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything with a bivariate copula CDF.
///
/// The diagonal helpers have generic defaults; implementors override them
/// when a cancellation-free closed form exists.
pub trait Copula {
    fn cdf(&self, u1: f64, u2: f64) -> f64;

    /// `C(u, u)`.
    fn diagonal(&self, u: f64) -> f64 {
        self.cdf(u, u)
    }

    /// `Cbar(1-u, 1-u) = 2u - 1 + C(1-u, 1-u)`, the upper-corner probability
    /// `P(U1 > 1-u, U2 > 1-u)`.
    fn survival_diagonal(&self, u: f64) -> f64 {
        (2.0 * u - 1.0 + self.cdf(1.0 - u, 1.0 - u)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Independence,
    Gaussian { rho: f64 },
    Fgm { theta: f64 },
    Plackett { theta: f64 },
    Frank { theta: f64 },
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    Amh { theta: f64 },
    Bb7 { delta: f64, theta: f64 },
}

/// A validated member of one of the catalogued families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaModel(Kind);

fn check(name: &str, value: f64, ok: bool, bound: &str) -> Result<f64> {
    if value.is_finite() && ok {
        Ok(value)
    } else {
        Err(Error::domain(name, value, bound))
    }
}

impl CopulaModel {
    /// Builds a model from a family and its parameters (see
    /// [`Family::param_names`] for the order).
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        let expected = family.param_names().len();
        if params.len() != expected {
            return Err(Error::Parse(format!(
                "{family} expects {expected} parameter(s) {:?}, got {}",
                family.param_names(),
                params.len()
            )));
        }
        match family {
            Family::Independence => Ok(Self::independence()),
            Family::Gaussian => Self::gaussian(params[0]),
            Family::Fgm => Self::fgm(params[0]),
            Family::Plackett => Self::plackett(params[0]),
            Family::Frank => Self::frank(params[0]),
            Family::Clayton => Self::clayton(params[0]),
            Family::Gumbel => Self::gumbel(params[0]),
            Family::Amh => Self::amh(params[0]),
            Family::Bb7 => Self::bb7(params[0], params[1]),
        }
    }

    pub fn independence() -> Self {
        CopulaModel(Kind::Independence)
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        let rho = check("rho", rho, rho > -1.0 && rho < 1.0, "gaussian rho in (-1, 1)")?;
        Ok(CopulaModel(Kind::Gaussian { rho }))
    }

    pub fn fgm(theta: f64) -> Result<Self> {
        let theta = check("theta", theta, (-1.0..=1.0).contains(&theta), "fgm theta in [-1, 1]")?;
        Ok(CopulaModel(Kind::Fgm { theta }))
    }

    pub fn plackett(theta: f64) -> Result<Self> {
        let theta = check("theta", theta, theta > 0.0 && theta != 1.0, "plackett theta > 0, theta != 1")?;
        Ok(CopulaModel(Kind::Plackett { theta }))
    }

    pub fn frank(theta: f64) -> Result<Self> {
        let theta = check("theta", theta, theta != 0.0, "frank theta != 0")?;
        Ok(CopulaModel(Kind::Frank { theta }))
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        let theta = check(
            "theta",
            theta,
            theta >= -1.0 && theta != 0.0,
            "clayton theta in [-1, inf) without 0",
        )?;
        Ok(CopulaModel(Kind::Clayton { theta }))
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        let theta = check("theta", theta, theta >= 1.0, "gumbel theta >= 1")?;
        Ok(CopulaModel(Kind::Gumbel { theta }))
    }

    pub fn amh(theta: f64) -> Result<Self> {
        let theta = check("theta", theta, (-1.0..=1.0).contains(&theta), "amh theta in [-1, 1]")?;
        Ok(CopulaModel(Kind::Amh { theta }))
    }

    pub fn bb7(delta: f64, theta: f64) -> Result<Self> {
        let delta = check("delta", delta, delta > 0.0, "bb7 delta > 0")?;
        let theta = check("theta", theta, theta >= 1.0, "bb7 theta >= 1")?;
        Ok(CopulaModel(Kind::Bb7 { delta, theta }))
    }

    pub fn family(&self) -> Family {
        match self.0 {
            Kind::Independence => Family::Independence,
            Kind::Gaussian { .. } => Family::Gaussian,
            Kind::Fgm { .. } => Family::Fgm,
            Kind::Plackett { .. } => Family::Plackett,
            Kind::Frank { .. } => Family::Frank,
            Kind::Clayton { .. } => Family::Clayton,
            Kind::Gumbel { .. } => Family::Gumbel,
            Kind::Amh { .. } => Family::Amh,
            Kind::Bb7 { .. } => Family::Bb7,
        }
    }

    /// Parameter values in [`Family::param_names`] order.
    pub fn params(&self) -> Vec<f64> {
        match self.0 {
            Kind::Independence => vec![],
            Kind::Gaussian { rho } => vec![rho],
            Kind::Fgm { theta }
            | Kind::Plackett { theta }
            | Kind::Frank { theta }
            | Kind::Clayton { theta }
            | Kind::Gumbel { theta }
            | Kind::Amh { theta } => vec![theta],
            Kind::Bb7 { delta, theta } => vec![delta, theta],
        }
    }

    /// Named parameters, e.g. `[("delta", 1.94), ("theta", 1.71)]`.
    pub fn named_params(&self) -> Vec<(&'static str, f64)> {
        self.family()
            .param_names()
            .iter()
            .copied()
            .zip(self.params())
            .collect()
    }

    /// `dC/du1 (u1, u2)`: the conditional CDF of `U2` at `u2` given `U1 = u1`.
    pub fn h1(&self, u1: f64, u2: f64) -> f64 {
        if u2 <= 0.0 {
            return 0.0;
        }
        if u2 >= 1.0 {
            return 1.0;
        }
        let u = u1.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        let v = u2;
        let h = match self.0 {
            Kind::Independence => v,
            Kind::Gaussian { rho } => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                normal_cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
            }
            Kind::Fgm { theta } => v + theta * v * (1.0 - v) * (1.0 - 2.0 * u),
            Kind::Plackett { theta } => {
                let s = 1.0 + (theta - 1.0) * (u + v);
                let d = s * s - 4.0 * u * v * theta * (theta - 1.0);
                0.5 - (s - 2.0 * v * theta) / (2.0 * d.sqrt())
            }
            Kind::Frank { theta } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                let c = (-theta).exp_m1();
                (-theta * u).exp() * b / (c + a * b)
            }
            Kind::Clayton { theta } => {
                let c = self.cdf(u, v);
                if c <= 0.0 {
                    0.0
                } else {
                    (c / u).powf(1.0 + theta)
                }
            }
            Kind::Gumbel { theta } => {
                let lu = -u.ln();
                let lv = -v.ln();
                let a = lu.powf(theta) + lv.powf(theta);
                let c = (-a.powf(1.0 / theta)).exp();
                // C * A^(1/theta - 1) * (-ln u)^(theta - 1) / u
                c * ((1.0 / theta - 1.0) * a.ln() + (theta - 1.0) * lu.ln() - u.ln()).exp()
            }
            Kind::Amh { theta } => {
                let d = 1.0 - theta * (1.0 - u) * (1.0 - v);
                v * (1.0 - theta * (1.0 - v)) / (d * d)
            }
            Kind::Bb7 { delta, theta } => bb7_h1(delta, theta, u, v),
        };
        h.clamp(0.0, 1.0)
    }

    pub(crate) fn clayton_theta(&self) -> Option<f64> {
        match self.0 {
            Kind::Clayton { theta } => Some(theta),
            _ => None,
        }
    }

    pub(crate) fn kind_params(&self) -> (f64, f64) {
        match self.0 {
            Kind::Independence => (0.0, 0.0),
            Kind::Gaussian { rho } => (rho, 0.0),
            Kind::Fgm { theta }
            | Kind::Plackett { theta }
            | Kind::Frank { theta }
            | Kind::Clayton { theta }
            | Kind::Gumbel { theta }
            | Kind::Amh { theta } => (theta, 0.0),
            Kind::Bb7 { delta, theta } => (delta, theta),
        }
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family())?;
        for (i, (k, v)) in self.named_params().into_iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CopulaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse::parse_model(s)
    }
}

impl Serialize for CopulaModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CopulaModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Clayton-type generator combination `(x^-d + y^-d - 1)^(-1/d)` for `d > 0`,
/// evaluated as `m (1 + (m/M)^d - m^d)^(-1/d)` with `m = min`, `M = max` so
/// nothing overflows for small arguments or large `d`.
fn clayton_combine(x: f64, y: f64, d: f64) -> f64 {
    let (m, big) = if x <= y { (x, y) } else { (y, x) };
    if m <= 0.0 {
        return 0.0;
    }
    let inner = 1.0 + (m / big).powf(d) - m.powf(d);
    m * (-inner.ln() / d).exp()
}

/// `ln(1 - (1-u)^theta)`, accurate near both ends of `(0, 1)`.
fn bb7_ln_x(u: f64, theta: f64) -> f64 {
    let l = theta * (-u).ln_1p();
    let a = l.exp();
    if a < 0.5 {
        (-a).ln_1p()
    } else {
        (-l.exp_m1()).ln()
    }
}

/// `ln(1 - e^l)` for `l < 0`.
fn ln_one_minus_exp(l: f64) -> f64 {
    if l > -std::f64::consts::LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

/// Pieces of the BB7 CDF at `(u, v)`: `ln x1` and `ln S` with
/// `x_i = 1 - (1-u_i)^theta`, `S = x1^-delta + x2^-delta - 1`, and
/// `ln(1 - S^(-1/delta))`.
struct Bb7Parts {
    ln_x1: f64,
    ln_s: f64,
    ln_one_minus_g: f64,
}

fn bb7_parts(delta: f64, theta: f64, u: f64, v: f64) -> Bb7Parts {
    let ln_x1 = bb7_ln_x(u, theta);
    let ln_x2 = bb7_ln_x(v, theta);
    let (e1, e2) = (-delta * ln_x1, -delta * ln_x2);
    let (hi, lo) = if e1 >= e2 { (e1, e2) } else { (e2, e1) };
    let ln_s = if hi > 30.0 {
        hi + ((lo - hi).exp() - (-hi).exp()).ln_1p()
    } else {
        (e1.exp_m1() + e2.exp_m1()).ln_1p()
    };
    Bb7Parts { ln_x1, ln_s, ln_one_minus_g: ln_one_minus_exp(-ln_s / delta) }
}

fn bb7_cdf(delta: f64, theta: f64, u: f64, v: f64) -> f64 {
    let p = bb7_parts(delta, theta, u, v);
    if p.ln_s <= 0.0 {
        return u.min(v);
    }
    -(p.ln_one_minus_g / theta).exp_m1()
}

fn bb7_h1(delta: f64, theta: f64, u: f64, v: f64) -> f64 {
    let p = bb7_parts(delta, theta, u, v);
    if p.ln_s <= 0.0 || !p.ln_s.is_finite() {
        return if p.ln_s <= 0.0 { 1.0 } else { 0.0 };
    }
    let log_h = (1.0 / theta - 1.0) * p.ln_one_minus_g + (-1.0 / delta - 1.0) * p.ln_s
        + (-delta - 1.0) * p.ln_x1
        + (theta - 1.0) * (-u).ln_1p();
    log_h.exp()
}

impl Copula for CopulaModel {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        debug_assert!(!u1.is_nan() && !u2.is_nan());
        if u1 <= 0.0 || u2 <= 0.0 {
            return 0.0;
        }
        if u1 >= 1.0 {
            return u2.min(1.0);
        }
        if u2 >= 1.0 {
            return u1;
        }
        let (u, v) = (u1, u2);
        let c = match self.0 {
            Kind::Independence => u * v,
            Kind::Gaussian { rho } => bvn_cdf(normal_quantile(u), normal_quantile(v), rho),
            Kind::Fgm { theta } => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
            Kind::Plackett { theta } => {
                let s = 1.0 + (theta - 1.0) * (u + v);
                let d = s * s - 4.0 * u * v * theta * (theta - 1.0);
                2.0 * u * v * theta / (s + d.sqrt())
            }
            Kind::Frank { theta } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                let c = (-theta).exp_m1();
                -(a * b / c).ln_1p() / theta
            }
            Kind::Clayton { theta } if theta > 0.0 => clayton_combine(u, v, theta),
            Kind::Clayton { theta } => {
                let s = -theta;
                (u.powf(s) + v.powf(s) - 1.0).max(0.0).powf(1.0 / s)
            }
            Kind::Gumbel { theta } => {
                let a = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
                (-a.powf(1.0 / theta)).exp()
            }
            Kind::Amh { theta } => u * v / (1.0 - theta * (1.0 - u) * (1.0 - v)),
            Kind::Bb7 { delta, theta } => bb7_cdf(delta, theta, u, v),
        };
        c.clamp(0.0, u.min(v))
    }

    fn diagonal(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match self.0 {
            // u (2 - u^theta)^(-1/theta)
            Kind::Clayton { theta } if theta > 0.0 => {
                let ln_inner = std::f64::consts::LN_2 + (-0.5 * (theta * u.ln()).exp()).ln_1p();
                u * (-ln_inner / theta).exp()
            }
            // u^(2^(1/theta))
            Kind::Gumbel { theta } => (2f64.powf(1.0 / theta) * u.ln()).exp(),
            Kind::Amh { theta } => {
                let w = 1.0 - u;
                u * u / (1.0 - theta * w * w)
            }
            _ => self.cdf(u, u),
        }
    }

    fn survival_diagonal(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let val = match self.0 {
            // P(X > q, Y > q) directly from the upper-orthant integral.
            Kind::Gaussian { rho } => {
                let q = normal_quantile(1.0 - u);
                bvn_upper(q, q, rho)
            }
            // u^2 (1 + theta - 2 theta u) / (1 - theta u^2)
            Kind::Amh { theta } => u * u * (1.0 + theta - 2.0 * theta * u) / (1.0 - theta * u * u),
            Kind::Gumbel { theta } => {
                let a = 2f64.powf(1.0 / theta);
                2.0 * u + (a * (-u).ln_1p()).exp_m1()
            }
            Kind::Clayton { theta } if theta > 0.0 => {
                // C(1-u,1-u) = exp(-ln(1 + 2 expm1(-theta ln(1-u))) / theta)
                let t = (-theta * (-u).ln_1p()).exp_m1();
                2.0 * u + (-(2.0 * t).ln_1p() / theta).exp_m1()
            }
            // Radially symmetric families: Cbar(1-u,1-u) = C(u,u).
            Kind::Independence | Kind::Fgm { .. } | Kind::Plackett { .. } | Kind::Frank { .. } => self.cdf(u, u),
            Kind::Clayton { theta } => {
                // C(1-u,1-u) = (1 + 2t)^(1/s) with s = -theta, t = (1-u)^s - 1.
                let s = -theta;
                let t = (s * (-u).ln_1p()).exp_m1();
                let one_plus_2t = 1.0 + 2.0 * t;
                if one_plus_2t <= 0.0 {
                    2.0 * u - 1.0
                } else {
                    2.0 * u + ((2.0 * t).ln_1p() / s).exp_m1()
                }
            }
            Kind::Bb7 { delta, theta } => {
                // At 1-u: x = 1 - u^theta, S = 2 x^-delta - 1 and
                // Cbar = 2u - (1 - S^(-1/delta))^(1/theta).
                let ln_x = (-(theta * u.ln()).exp()).ln_1p();
                let s_minus_1 = 2.0 * (-delta * ln_x).exp_m1();
                let ln_s = s_minus_1.ln_1p();
                let one_minus_g = -(-ln_s / delta).exp_m1();
                2.0 * u - (one_minus_g.ln() / theta).exp()
            }
        };
        val.max(0.0)
    }
}

/// `C(u1,u2)` for a model, as a free function.
pub fn cdf(model: &CopulaModel, u1: f64, u2: f64) -> f64 {
    model.cdf(u1, u2)
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain("u", u, "u in (0, 0.5]"))
    }
}

/// Upper-corner probability `Cbar(1-u, 1-u)` for `u` in `(0, 0.5]`.
pub fn survival_diagonal<C: Copula + ?Sized>(model: &C, u: f64) -> Result<f64> {
    check_u(u)?;
    Ok(model.survival_diagonal(u))
}

/// Population tail asymmetry `alpha(u) = log(Cbar(1-u,1-u) / C(u,u))` under
/// the extended-log convention.
pub fn alpha_population<C: Copula + ?Sized>(model: &C, u: f64) -> Result<ExtReal> {
    check_u(u)?;
    Ok(alpha_unchecked(model, u))
}

pub(crate) fn alpha_unchecked<C: Copula + ?Sized>(model: &C, u: f64) -> ExtReal {
    if u == 0.5 {
        // Both corners are the same event family at u = 1/2: Cbar(1/2,1/2) = C(1/2,1/2).
        return ExtReal::ZERO;
    }
    ExtReal::log_ratio(model.survival_diagonal(u), model.diagonal(u))
}

/// The survival copula `Cbar(u1,u2) = u1 + u2 - 1 + C(1-u1, 1-u2)`, i.e. the
/// copula of the reflected pair `(1-U1, 1-U2)`.
#[derive(Debug, Clone, Copy)]
pub struct Survival<'a, C: Copula + ?Sized>(pub &'a C);

impl<C: Copula + ?Sized> Copula for Survival<'_, C> {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        if u1 <= 0.0 || u2 <= 0.0 {
            return 0.0;
        }
        (u1 + u2 - 1.0 + self.0.cdf(1.0 - u1, 1.0 - u2)).clamp(0.0, u1.min(u2))
    }

    fn diagonal(&self, u: f64) -> f64 {
        self.0.survival_diagonal(u)
    }

    fn survival_diagonal(&self, u: f64) -> f64 {
        self.0.diagonal(u)
    }
}

/// The permuted copula `C_P(u1,u2) = C(u2,u1)`.
#[derive(Debug, Clone, Copy)]
pub struct Permuted<'a, C: Copula + ?Sized>(pub &'a C);

impl<C: Copula + ?Sized> Copula for Permuted<'_, C> {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        self.0.cdf(u2, u1)
    }

    fn diagonal(&self, u: f64) -> f64 {
        self.0.diagonal(u)
    }

    fn survival_diagonal(&self, u: f64) -> f64 {
        self.0.survival_diagonal(u)
    }
}
