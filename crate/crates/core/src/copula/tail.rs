//! Catalogue of tail dependence coefficients, tail orders and tail order
//! parameters, and the limit of `alpha(u)` as `u -> 0`.

use serde::{Deserialize, Serialize};

use super::{CopulaModel, Kind};
use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Corner behaviour of a copula.
///
/// `C(u,u) ~ Upsilon_L u^kappa_L` and `Cbar(1-u,1-u) ~ Upsilon_U u^kappa_U`
/// as `u -> 0`; `lambda` is the tail dependence coefficient. A tail order of
/// `f64::INFINITY` marks a corner whose probability vanishes identically near
/// zero (e.g. the lower corner of a Clayton copula with negative parameter).
/// `None` means the value is not catalogued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub kappa_lower: Option<f64>,
    pub kappa_upper: Option<f64>,
    pub upsilon_lower: Option<f64>,
    pub upsilon_upper: Option<f64>,
}

impl TailSummary {
    fn symmetric(lambda: f64, kappa: Option<f64>, upsilon: Option<f64>) -> Self {
        TailSummary {
            lambda_lower: lambda,
            lambda_upper: lambda,
            kappa_lower: kappa,
            kappa_upper: kappa,
            upsilon_lower: upsilon,
            upsilon_upper: upsilon,
        }
    }
}

impl CopulaModel {
    pub fn tail_summary(&self) -> TailSummary {
        match self.0 {
            Kind::Independence => TailSummary::symmetric(0.0, Some(2.0), Some(1.0)),
            Kind::Gaussian { rho } => TailSummary::symmetric(0.0, Some(2.0 / (1.0 + rho)), None),
            Kind::Fgm { theta } if theta > -1.0 => {
                TailSummary::symmetric(0.0, Some(2.0), Some(1.0 + theta))
            }
            // theta = -1: C(u,u) = u^2 (2u - u^2) ~ 2 u^3
            Kind::Fgm { .. } => TailSummary::symmetric(0.0, Some(3.0), Some(2.0)),
            Kind::Plackett { .. } => TailSummary::symmetric(0.0, None, None),
            Kind::Frank { .. } => TailSummary::symmetric(0.0, Some(2.0), None),
            Kind::Clayton { theta } if theta > 0.0 => {
                let l = 2f64.powf(-1.0 / theta);
                TailSummary {
                    lambda_lower: l,
                    lambda_upper: 0.0,
                    kappa_lower: Some(1.0),
                    kappa_upper: Some(2.0),
                    upsilon_lower: Some(l),
                    upsilon_upper: None,
                }
            }
            // Countermonotonic: both corners are empty for u <= 1/2.
            Kind::Clayton { theta } if theta == -1.0 => {
                TailSummary::symmetric(0.0, Some(f64::INFINITY), None)
            }
            // C(u,u) = 0 for u <= 2^(1/theta).
            Kind::Clayton { .. } => TailSummary {
                lambda_lower: 0.0,
                lambda_upper: 0.0,
                kappa_lower: Some(f64::INFINITY),
                kappa_upper: Some(2.0),
                upsilon_lower: None,
                upsilon_upper: None,
            },
            Kind::Gumbel { theta } if theta == 1.0 => TailSummary::symmetric(0.0, Some(2.0), Some(1.0)),
            Kind::Gumbel { theta } => {
                let lu = 2.0 - 2f64.powf(1.0 / theta);
                TailSummary {
                    lambda_lower: 0.0,
                    lambda_upper: lu,
                    // C(u,u) = u^(2^(1/theta)) exactly
                    kappa_lower: Some(2f64.powf(1.0 / theta)),
                    kappa_upper: Some(1.0),
                    upsilon_lower: Some(1.0),
                    upsilon_upper: Some(lu),
                }
            }
            Kind::Amh { theta } => {
                // C(u,u) = u^2 / (1 - theta (1-u)^2),
                // Cbar(1-u,1-u) = u^2 (1 + theta - 2 theta u) / (1 - theta u^2).
                let (lambda_lower, kappa_lower, upsilon_lower) = if theta == 1.0 {
                    (0.5, 1.0, 0.5)
                } else {
                    (0.0, 2.0, 1.0 / (1.0 - theta))
                };
                let (kappa_upper, upsilon_upper) =
                    if theta == -1.0 { (3.0, 2.0) } else { (2.0, 1.0 + theta) };
                TailSummary {
                    lambda_lower,
                    lambda_upper: 0.0,
                    kappa_lower: Some(kappa_lower),
                    kappa_upper: Some(kappa_upper),
                    upsilon_lower: Some(upsilon_lower),
                    upsilon_upper: Some(upsilon_upper),
                }
            }
            Kind::Bb7 { delta, theta } => {
                let ll = 2f64.powf(-1.0 / delta);
                let lu = 2.0 - 2f64.powf(1.0 / theta);
                // theta = 1 reduces the outer transform to the identity,
                // leaving a Clayton(delta) copula.
                let (kappa_upper, upsilon_upper) = if theta > 1.0 {
                    (Some(1.0), Some(lu))
                } else {
                    (Some(2.0), None)
                };
                TailSummary {
                    lambda_lower: ll,
                    lambda_upper: lu,
                    kappa_lower: Some(1.0),
                    kappa_upper,
                    upsilon_lower: Some(ll),
                    upsilon_upper,
                }
            }
        }
    }
}

/// Free-function form of [`CopulaModel::tail_summary`].
pub fn tail_summary(model: &CopulaModel) -> TailSummary {
    model.tail_summary()
}

/// `alpha(0) = lim_{u -> 0} alpha(u)` from the catalogued tail behaviour.
///
/// In order: the AMH closed form `log(1 - theta^2)`; the ratio of tail
/// dependence coefficients when either is positive; the tail-order
/// comparison (a heavier lower corner, i.e. a smaller lower tail order,
/// sends the limit to `-inf`) followed by the ratio of tail order parameters;
/// and finally radial symmetry, which forces `alpha = 0` everywhere.
pub fn alpha_limit(model: &CopulaModel) -> Result<ExtReal> {
    if let Kind::Amh { theta } = model.0 {
        let r = 1.0 - theta * theta;
        return Ok(if r > 0.0 { ExtReal::Finite(r.ln()) } else { ExtReal::NegInf });
    }
    let t = model.tail_summary();
    if t.lambda_lower > 0.0 || t.lambda_upper > 0.0 {
        return Ok(ExtReal::log_ratio(t.lambda_upper, t.lambda_lower));
    }
    if let (Some(kl), Some(ku)) = (t.kappa_lower, t.kappa_upper) {
        if kl.is_infinite() && ku.is_infinite() {
            // both corner probabilities vanish near zero: log(0/0) = 0
            return Ok(ExtReal::ZERO);
        }
        if kl < ku {
            return Ok(ExtReal::NegInf);
        }
        if kl > ku {
            return Ok(ExtReal::PosInf);
        }
        if let (Some(yl), Some(yu)) = (t.upsilon_lower, t.upsilon_upper) {
            if yl > 0.0 || yu > 0.0 {
                return Ok(ExtReal::log_ratio(yu, yl));
            }
        }
    }
    if model.family().is_radially_symmetric() {
        return Ok(ExtReal::ZERO);
    }
    Err(Error::LimitUnknown(format!(
        "no catalogued tail coefficients or tail orders decide alpha(0) for {model}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::Copula;
    use crate::copula::Family;

    #[test]
    fn summary_examples() {
        let t = CopulaModel::clayton(2.0).unwrap().tail_summary();
        assert!((t.lambda_lower - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.lambda_upper, 0.0);

        let t = CopulaModel::bb7(1.0, 7.27).unwrap().tail_summary();
        assert!((t.lambda_lower - 0.5).abs() < 1e-15);
        // 2 - 2^(1/7.27), mpmath: 0.899963356924660515671500376148
        assert!((t.lambda_upper - 0.899_963_356_924_660_5).abs() < 1e-14);

        let t = CopulaModel::independence().tail_summary();
        assert_eq!((t.lambda_lower, t.lambda_upper), (0.0, 0.0));
        assert_eq!((t.kappa_lower, t.kappa_upper), (Some(2.0), Some(2.0)));

        let t = CopulaModel::plackett(3.0).unwrap().tail_summary();
        assert_eq!(t.kappa_lower, None);
    }

    #[test]
    fn positive_lambda_implies_unit_tail_order() {
        let models = [
            CopulaModel::clayton(0.3).unwrap(),
            CopulaModel::gumbel(1.5).unwrap(),
            CopulaModel::amh(1.0).unwrap(),
            CopulaModel::bb7(1.94, 1.71).unwrap(),
            CopulaModel::bb7(0.5, 1.0).unwrap(),
        ];
        for m in models {
            let t = m.tail_summary();
            if t.lambda_lower > 0.0 {
                assert_eq!(t.kappa_lower, Some(1.0), "{m}");
            }
            if t.lambda_upper > 0.0 {
                assert_eq!(t.kappa_upper, Some(1.0), "{m}");
            }
        }
    }

    // The catalogue must agree with the diagonals: C(u,u)/u^kappa -> Upsilon.
    #[test]
    fn catalogue_matches_diagonal_asymptotics() {
        let models = [
            CopulaModel::independence(),
            CopulaModel::fgm(0.4).unwrap(),
            CopulaModel::fgm(-1.0).unwrap(),
            CopulaModel::clayton(2.0).unwrap(),
            CopulaModel::gumbel(1.8).unwrap(),
            CopulaModel::amh(0.7).unwrap(),
            CopulaModel::amh(-1.0).unwrap(),
            CopulaModel::amh(1.0).unwrap(),
            CopulaModel::bb7(1.94, 1.71).unwrap(),
        ];
        let u = 1e-6;
        for m in models {
            let t = m.tail_summary();
            if let (Some(k), Some(y)) = (t.kappa_lower, t.upsilon_lower) {
                let r = m.diagonal(u) / u.powf(k);
                assert!((r - y).abs() < 1e-3 * y.max(1.0), "{m} lower: {r} vs {y}");
            }
            if let (Some(k), Some(y)) = (t.kappa_upper, t.upsilon_upper) {
                let r = m.survival_diagonal(u) / u.powf(k);
                assert!((r - y).abs() < 1e-3 * y.max(1.0), "{m} upper: {r} vs {y}");
            }
        }
    }

    #[test]
    fn limit_examples() {
        assert_eq!(alpha_limit(&CopulaModel::clayton(5.0).unwrap()).unwrap(), ExtReal::NegInf);
        let a = alpha_limit(&CopulaModel::amh(0.7).unwrap()).unwrap().finite().unwrap();
        assert!((a - 0.51f64.ln()).abs() < 1e-15);
        assert_eq!(alpha_limit(&CopulaModel::amh(1.0).unwrap()).unwrap(), ExtReal::NegInf);
        // log(lambda_U / lambda_L) = log(2 - 2^(1/theta)) + log(2) / delta, 40-digit values.
        let cases = [
            (1.0, 1.71, 0.000_347_558_584_740_783_4),
            (1.94, 1.71, -0.335_507_260_861_830_645),
            (1.0, 7.27, 0.587_745_949_545_105_12),
            (1.94, 7.27, 0.251_891_130_098_533_69),
        ];
        for (d, t, want) in cases {
            let a = alpha_limit(&CopulaModel::bb7(d, t).unwrap()).unwrap().finite().unwrap();
            assert!((a - want).abs() < 1e-12, "bb7({d},{t}): {a} vs {want}");
        }
    }

    #[test]
    fn limit_for_other_families() {
        assert_eq!(alpha_limit(&CopulaModel::clayton(-0.3).unwrap()).unwrap(), ExtReal::PosInf);
        assert_eq!(alpha_limit(&CopulaModel::clayton(-1.0).unwrap()).unwrap(), ExtReal::ZERO);
        assert_eq!(alpha_limit(&CopulaModel::gumbel(2.0).unwrap()).unwrap(), ExtReal::PosInf);
        assert_eq!(alpha_limit(&CopulaModel::gumbel(1.0).unwrap()).unwrap(), ExtReal::ZERO);
        for m in [
            CopulaModel::gaussian(0.6).unwrap(),
            CopulaModel::plackett(4.0).unwrap(),
            CopulaModel::frank(-2.0).unwrap(),
            CopulaModel::fgm(-1.0).unwrap(),
        ] {
            assert_eq!(alpha_limit(&m).unwrap(), ExtReal::ZERO, "{m}");
        }
        assert_eq!(Family::ALL.len(), 9);
    }

    // The catalogued limits agree with alpha(u) at small u.
    #[test]
    fn limits_agree_with_small_u_values() {
        for m in [
            CopulaModel::amh(0.4).unwrap(),
            CopulaModel::bb7(1.0, 1.71).unwrap(),
            CopulaModel::bb7(1.94, 7.27).unwrap(),
        ] {
            let lim = alpha_limit(&m).unwrap().finite().unwrap();
            let a = crate::copula::alpha_population(&m, 1e-7).unwrap().finite().unwrap();
            assert!((a - lim).abs() < 1e-3, "{m}: {a} vs {lim}");
        }
    }
}
