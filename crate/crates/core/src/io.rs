//! CSV input and tidy CSV output.

use std::io::{Read, Write};
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimation::IntervalBand;
use crate::ext::ExtReal;
use crate::measures::TailCurve;
use crate::sampling::{PairedSample, Scale};

fn buffered_reader<R: Read>(mut reader: R) -> Result<(Vec<u8>, csv::Reader<std::io::Cursor<Vec<u8>>>)> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::Cursor::new(bytes.clone()));
    Ok((bytes, rdr))
}

/// 1-based line of a record, from its byte offset. The csv reader's own line
/// counter lags by one per CRLF terminator.
fn line_of(bytes: &[u8], rec: &csv::StringRecord, i: usize) -> usize {
    match rec.position() {
        Some(p) => {
            let end = (p.byte() as usize + 1).min(bytes.len());
            1 + bytes[..end].iter().filter(|&&b| b == b'\n').count()
        }
        None => i + 1,
    }
}

/// Reads two numeric columns. A first row that does not parse as numbers
/// is treated as a header. Parse errors report the 1-based line number.
pub fn read_pairs<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (bytes, mut rdr) = buffered_reader(reader)?;
    let (mut x1, mut x2) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&bytes, &rec, i);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected 2 columns, found {}", rec.len())));
        }
        let a = rec[0].parse::<f64>();
        let b = rec[1].parse::<f64>();
        match (a, b) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                x1.push(a);
                x2.push(b);
            }
            (Err(_), Err(_)) if i == 0 => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "line {line}: non-numeric or non-finite value in {:?}",
                    rec.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    Ok((x1, x2))
}

/// Reads a two-column CSV file as a sample on the declared scale.
pub fn read_sample(path: &Path, scale: Scale) -> Result<PairedSample> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (x1, x2) = read_pairs(f)?;
    if x1.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    PairedSample::new(x1, x2, scale)
}

pub fn write_sample<W: Write>(writer: W, sample: &PairedSample) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if sample.scale == Scale::Raw {
        w.write_record(["x1", "x2"])?;
    } else {
        w.write_record(["u1", "u2"])?;
    }
    for (a, b) in sample.x1.iter().zip(&sample.x2) {
        w.write_record([fmt_f64(*a), fmt_f64(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_ext(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => fmt_f64(v),
        other => other.to_string(),
    }
}

/// Curve schema: `u,value,kind,param_json`.
pub fn write_curve<W: Write>(writer: W, curve: &TailCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["u", "value", "kind", "param_json"])?;
    let meta = curve.meta.to_string();
    for (u, v) in curve.u_grid.iter().zip(&curve.values) {
        w.write_record([fmt_f64(*u), fmt_ext(*v), curve.kind.name().to_string(), meta.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Curve schema for curves with undefined points (written as `NA`).
pub fn write_optional_curve<W: Write>(
    writer: W,
    kind: &str,
    u_grid: &[f64],
    values: &[Option<f64>],
    meta: &Value,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["u", "value", "kind", "param_json"])?;
    let meta = meta.to_string();
    for (u, v) in u_grid.iter().zip(values) {
        let v = v.map_or_else(|| "NA".to_string(), fmt_f64);
        w.write_record([fmt_f64(*u), v, kind.to_string(), meta.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Interval schema: `u,alpha_hat,lower,upper,t_lower,t_upper,flags`.
pub fn write_band<W: Write>(writer: W, band: &IntervalBand) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["u", "alpha_hat", "lower", "upper", "t_lower", "t_upper", "flags"])?;
    for i in 0..band.len() {
        let c = &band.counts[i];
        let mut flags = Vec::new();
        if band.unbounded[i] {
            flags.push("unbounded".to_string());
        }
        if let Some(k) = band.meta.nonfinite.as_ref().map(|v| v[i]).filter(|&k| k > 0) {
            flags.push(format!("nonfinite_replicates={k}"));
        }
        w.write_record([
            fmt_f64(band.u_grid[i]),
            fmt_ext(band.estimate[i]),
            fmt_ext(band.lower[i]),
            fmt_ext(band.upper[i]),
            fmt_f64(c.t_lower()),
            fmt_f64(c.t_upper()),
            flags.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a null curve `u,value` (header optional) for the chi-squared test.
pub fn read_curve_values<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (bytes, mut rdr) = buffered_reader(reader)?;
    let (mut us, mut vs) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&bytes, &rec, i);
        if rec.len() < 2 {
            return Err(Error::Parse(format!("line {line}: expected at least u,value")));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<ExtReal>()) {
            (Ok(u), Ok(v)) => {
                us.push(u);
                vs.push(v.to_f64());
            }
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("line {line}: expected numeric u,value"))),
        }
    }
    Ok((us, vs))
}

/// Linear interpolation of a tabulated curve at `u` (constant beyond the
/// ends).
pub fn interpolate(us: &[f64], vs: &[f64], u: f64) -> Result<f64> {
    if us.is_empty() || us.len() != vs.len() {
        return Err(Error::Parse("null curve is empty or ragged".into()));
    }
    if us.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("null curve u values must be strictly increasing".into()));
    }
    let i = us.partition_point(|&x| x < u);
    Ok(if i == 0 {
        vs[0]
    } else if i == us.len() {
        vs[us.len() - 1]
    } else if us[i] == u {
        vs[i]
    } else {
        let t = (u - us[i - 1]) / (us[i] - us[i - 1]);
        vs[i - 1] + t * (vs[i] - vs[i - 1])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_crlf_are_accepted() {
        let (a, b) = read_pairs("x,y\r\n1,2\r\n3.5,-4\r\n".as_bytes()).unwrap();
        assert_eq!(a, vec![1.0, 3.5]);
        assert_eq!(b, vec![2.0, -4.0]);
        let (a, _) = read_pairs("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let e = read_pairs("x,y\n1,2\n3,abc\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = read_pairs("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = read_pairs("x,y\r\n1,2\r\n3,abc\r\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(read_pairs("1,2\nnan,3\n".as_bytes()).is_err());
    }

    #[test]
    fn sample_round_trip() {
        let s = PairedSample::new(vec![0.1, 0.7], vec![0.3, 0.2], Scale::Uniform).unwrap();
        let mut buf = Vec::new();
        write_sample(&mut buf, &s).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("u1,u2\n"));
        let (a, b) = read_pairs(buf.as_slice()).unwrap();
        assert_eq!((a, b), (s.x1, s.x2));
    }

    #[test]
    fn interpolation() {
        let us = [0.1, 0.2, 0.4];
        let vs = [1.0, 2.0, 0.0];
        assert_eq!(interpolate(&us, &vs, 0.05).unwrap(), 1.0);
        assert!((interpolate(&us, &vs, 0.15).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(interpolate(&us, &vs, 0.2).unwrap(), 2.0);
        assert_eq!(interpolate(&us, &vs, 0.5).unwrap(), 0.0);
    }
}
