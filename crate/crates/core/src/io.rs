//! Text formats: profile CSVs (`x,value`) and JSON with 17 significant digits.

use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::grid::{Grid, RealField};

/// `{:.16e}` gives 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_field_csv<W: Write>(mut out: W, field: &RealField) -> io::Result<()> {
    writeln!(out, "x,value")?;
    let g = field.grid();
    for i in 0..g.n() {
        writeln!(out, "{},{}", format_float(g.x(i)), format_float(field[i]))?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] crate::error::Error),
}

/// Reads a profile written by [`write_field_csv`] and checks it against `grid`.
pub fn read_field_csv<R: BufRead>(input: R, grid: Grid) -> Result<RealField, CsvError> {
    let mut values = Vec::with_capacity(grid.n());
    let mut lines = input.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim) != Some("x,value") {
        return Err(CsvError::Parse {
            line: 1,
            message: "expected header `x,value`".into(),
        });
    }
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |s: &str| -> Result<f64, CsvError> {
            s.trim().parse().map_err(|e| CsvError::Parse {
                line: idx + 1,
                message: format!("{e}: `{s}`"),
            })
        };
        let (xs, vs) = line.split_once(',').ok_or_else(|| CsvError::Parse {
            line: idx + 1,
            message: "expected two columns".into(),
        })?;
        let x = parse(xs)?;
        let i = values.len();
        if i >= grid.n() || (x - grid.x(i)).abs() > 1e-9 * grid.half_width() {
            return Err(CsvError::Parse {
                line: idx + 1,
                message: format!("node {x} does not match the grid"),
            });
        }
        values.push(parse(vs)?);
    }
    Ok(RealField::new(grid, values)?)
}

/// `serde_json` formatter writing every float with 17 significant digits.
#[derive(Debug, Default)]
pub struct PreciseFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> io::Result<()> {
    out.write_all(to_json_string(value).map_err(io::Error::other)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Grid::new(3.0, 31).unwrap();
        let f = RealField::from_fn(g, |x| (x * 1.7).sin() / 3.0 + 1e-300);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f).unwrap();
        let back = read_field_csv(buf.as_slice(), g).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_wrong_grid() {
        let g = Grid::new(3.0, 31).unwrap();
        let f = RealField::zeros(g);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f).unwrap();
        assert!(read_field_csv(buf.as_slice(), Grid::new(3.0, 33).unwrap()).is_err());
        assert!(read_field_csv(&b"a,b\n"[..], g).is_err());
    }

    #[test]
    fn json_floats_have_17_digits() {
        let s = to_json_string(&serde_json::json!({"a": 0.1, "b": [1.0, -2.5e-300]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }
}
