//! Plain-text serialisation: comma-separated tables and JSON, with every
//! float written to 17 significant digits so output is byte-reproducible.

use std::io::{self, Write};

use serde::Serialize;

use crate::loop_model::PlanarCurve;
use crate::{Error, Real, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // normalise −0
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}

pub fn write_csv_header(w: &mut impl Write, columns: &[&str]) -> io::Result<()> {
    writeln!(w, "{}", columns.join(","))
}

pub fn write_csv_row(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    let row: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    writeln!(w, "{}", row.join(","))
}

/// `x,z,theta,s` plus optional per-point extra columns.
pub fn write_curve_csv<T: Real>(
    w: &mut impl Write,
    curve: &PlanarCurve<T>,
    extra: &[(&str, &[T])],
) -> Result<()> {
    let mut header = vec!["x", "z", "theta", "s"];
    header.extend(extra.iter().map(|(name, _)| *name));
    for (name, col) in extra {
        if col.len() != curve.len() {
            return Err(Error::invalid(format!(
                "column '{name}' has {} rows, curve has {}",
                col.len(),
                curve.len()
            )));
        }
    }
    write_csv_header(w, &header)?;
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    for (i, p) in curve.points.iter().enumerate() {
        let mut row = vec![f(p.x), f(p.z), f(p.theta), f(p.s)];
        row.extend(extra.iter().map(|(_, col)| f(col[i])));
        write_csv_row(w, &row)?;
    }
    Ok(())
}

/// One parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    /// 1-based line number in the source text.
    pub line: usize,
    pub values: Vec<f64>,
    pub tag: Option<String>,
}

/// Parses a headed CSV of floats, tolerating an optional trailing text
/// column. Blank lines are skipped; errors carry 1-based line numbers.
pub fn parse_numeric_csv(text: &str, numeric: usize) -> Result<(Vec<String>, Vec<CsvRow>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < numeric || header.len() > numeric + 1 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected {numeric} or {} columns in header, got {}",
                numeric + 1,
                header.len()
            ),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, got {}", header.len(), cells.len()),
            });
        }
        let mut nums = Vec::with_capacity(numeric);
        for c in &cells[..numeric] {
            let v: f64 = c.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{c}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("'{c}' is not finite"),
                });
            }
            nums.push(v);
        }
        let tag = cells
            .get(numeric)
            .filter(|s| !s.is_empty())
            .map(|s| s.to_string());
        rows.push(CsvRow {
            line: line_no,
            values: nums,
            tag,
        });
    }
    Ok((header, rows))
}

/// JSON formatter that prints floats with 17 significant digits.
struct FixedDigits<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        w.write_all(fmt_f64(v as f64).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        FixedDigits(serde_json::ser::PrettyFormatter::new()),
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}
