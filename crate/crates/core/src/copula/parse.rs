use super::{CopulaModel, Family};
use crate::error::{Error, Result};

fn family_from_name(name: &str) -> Option<Family> {
    let f = match name {
        "independence" | "indep" | "product" => Family::Independence,
        "gaussian" | "normal" => Family::Gaussian,
        "fgm" => Family::Fgm,
        "plackett" => Family::Plackett,
        "frank" => Family::Frank,
        "clayton" => Family::Clayton,
        "gumbel" => Family::Gumbel,
        "amh" | "ali-mikhail-haq" => Family::Amh,
        "bb7" => Family::Bb7,
        _ => return None,
    };
    Some(f)
}

/// Parses `family:key=value,key=value` (case-insensitive, whitespace ignored),
/// e.g. `bb7:delta=1.94,theta=1.71` or `independence`.
pub(super) fn parse_model(spec: &str) -> Result<CopulaModel> {
    let spec: String = spec.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, r),
        None => (spec.as_str(), ""),
    };
    let family =
        family_from_name(name).ok_or_else(|| Error::Parse(format!("unknown copula family {name:?}")))?;
    let names = family.param_names();
    let mut values: Vec<Option<f64>> = vec![None; names.len()];
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
        let idx = names
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| Error::Parse(format!("{family} has no parameter {key:?} (expected {names:?})")))?;
        if values[idx].is_some() {
            return Err(Error::Parse(format!("parameter {key:?} given twice")));
        }
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("parameter {key}: not a number: {value:?}")))?;
        values[idx] = Some(v);
    }
    let params = values
        .into_iter()
        .zip(names)
        .map(|(v, n)| v.ok_or_else(|| Error::Parse(format!("{family}: missing parameter {n:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    CopulaModel::new(family, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_case_insensitively() {
        let m: CopulaModel = "BB7:Delta=1.94, THETA=1.71".parse().unwrap();
        assert_eq!(m, CopulaModel::bb7(1.94, 1.71).unwrap());
        let m: CopulaModel = "independence".parse().unwrap();
        assert_eq!(m, CopulaModel::independence());
        let m: CopulaModel = "gaussian:rho=-0.5".parse().unwrap();
        assert_eq!(m.params(), vec![-0.5]);
    }

    #[test]
    fn display_round_trips() {
        for s in ["bb7:delta=1.94,theta=1.71", "clayton:theta=20", "independence", "gaussian:rho=0.8"] {
            let m: CopulaModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!("copula:theta=1".parse::<CopulaModel>(), Err(Error::Parse(_))));
        assert!(matches!("clayton".parse::<CopulaModel>(), Err(Error::Parse(_))));
        assert!(matches!("clayton:rho=1".parse::<CopulaModel>(), Err(Error::Parse(_))));
        assert!(matches!("clayton:theta=x".parse::<CopulaModel>(), Err(Error::Parse(_))));
        assert!(matches!("clayton:theta=1,theta=2".parse::<CopulaModel>(), Err(Error::Parse(_))));
        assert!(matches!("clayton:theta=0".parse::<CopulaModel>(), Err(Error::Domain { .. })));
    }
}
