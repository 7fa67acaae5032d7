//! CSV and JSON output of sweeps.
//!
//! CSV: header `h,phi,e0,...,e{N-1},gap01[,s0,...,s{N-1}]`, comma separated,
//! Unix newlines, every number with 17 significant digits, `NaN` for values
//! that could not be computed. JSON: one object with the keys `params`,
//! `rows`, `minima` and `predictions`.

use std::io::Write;
use std::str::FromStr;

use super::{SweepResult, SweepRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn opt_number(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), format_number)
}

pub fn csv_header(symmetry: usize, semiclassical: bool) -> String {
    let mut cols = vec!["h".to_string(), "phi".to_string()];
    cols.extend((0..symmetry).map(|i| format!("e{i}")));
    cols.push("gap01".into());
    if semiclassical {
        cols.extend((0..symmetry).map(|i| format!("s{i}")));
    }
    cols.join(",")
}

pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let n = result.symmetry();
    let semi = result.has_semiclassical();
    writeln!(out, "{}", csv_header(n, semi))?;
    for row in &result.rows {
        let mut cells = vec![format_number(row.h), opt_number(row.phi)];
        cells.extend(row.energies.iter().map(|&e| format_number(e)));
        cells.push(format_number(row.gap01));
        if semi {
            match &row.semiclassical {
                Some(levels) => cells.extend(levels.iter().map(|&e| format_number(e))),
                None => cells.extend((0..n).map(|_| "NaN".to_string())),
            }
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_json<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, result).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

pub fn serialize<W: Write>(result: &SweepResult, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(result, out),
        Format::Json => write_json(result, out),
    }
}

pub fn to_string(result: &SweepResult, format: Format) -> Result<String> {
    let mut buf = Vec::new();
    serialize(result, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_number(cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {cell:?}")))
}

/// Rows of a CSV produced by [`write_csv`]. Returns the rows and whether the
/// semiclassical columns were present.
pub fn parse_csv(text: &str) -> Result<(Vec<SweepRow>, bool)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with('e') && c[1..].parse::<usize>().is_ok()).count();
    let semi = cols.iter().any(|c| c.starts_with('s'));
    if n == 0 || header != csv_header(n, semi) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::Parse(format!("row has {} cells, header {}", cells.len(), cols.len())));
        }
        let phi = parse_number(cells[1])?;
        let energies = cells[2..2 + n].iter().map(|c| parse_number(c)).collect::<Result<Vec<_>>>()?;
        let semiclassical = if semi {
            let levels = cells[3 + n..].iter().map(|c| parse_number(c)).collect::<Result<Vec<_>>>()?;
            (!levels.iter().all(|x| x.is_nan())).then_some(levels)
        } else {
            None
        };
        rows.push(SweepRow {
            h: parse_number(cells[0])?,
            phi: (!phi.is_nan()).then_some(phi),
            energies,
            gap01: parse_number(cells[2 + n])?,
            semiclassical,
        });
    }
    Ok((rows, semi))
}

pub fn parse_json(text: &str) -> Result<SweepResult> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sweep_field;
    use crate::params::{Spin, SpinSystemParams};
    use proptest::prelude::*;

    fn sample() -> SweepResult {
        let p = SpinSystemParams::new(2, "5".parse::<Spin>().unwrap(), 0.1, 0.0);
        sweep_field(&p, 0.0, 1.0, 9, Some(1.0)).unwrap()
    }

    #[test]
    fn header_layout() {
        assert_eq!(csv_header(3, false), "h,phi,e0,e1,e2,gap01");
        assert_eq!(csv_header(2, true), "h,phi,e0,e1,gap01,s0,s1");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut s = sample();
        s.rows.clear();
        let text = to_string(&s, Format::Csv).unwrap();
        assert_eq!(text, "h,phi,e0,e1,gap01,s0,s1\n");
    }

    #[test]
    fn csv_round_trip() {
        let s = sample();
        let text = to_string(&s, Format::Csv).unwrap();
        assert!(!text.contains("\r"));
        assert!(text.lines().all(|l| !l.ends_with(',')));
        let (rows, semi) = parse_csv(&text).unwrap();
        assert!(semi);
        assert_eq!(rows, s.rows);
    }

    #[test]
    fn json_round_trip_and_keys() {
        let s = sample();
        let text = to_string(&s, Format::Json).unwrap();
        let pos: Vec<usize> = ["\"params\"", "\"rows\"", "\"minima\"", "\"predictions\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 4);
        assert_eq!(parse_json(&text).unwrap(), s);
    }

    proptest! {
        #[test]
        fn numbers_round_trip_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = format_number(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
