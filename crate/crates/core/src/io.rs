//! Descriptor loading and CSV output.
//!
//! Numbers are written with 17 significant digits so every value reads back
//! bit-identical.

use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::linsys::{FrequencyResponsePoint, LinearPlant};
use crate::piecewise::PiecewiseNonlinearity;
use crate::sim::SimResult;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_descriptor<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        // validation failures inside the conversion carry no position
        Error::Descriptor(match e.line() {
            0 => format!("{origin}: {}", strip_position(&e)),
            line => format!(
                "{origin}: line {line}, column {}: {}",
                e.column(),
                strip_position(&e)
            ),
        })
    })
}

// serde_json appends " at line L column C"; the position is reported separately
fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

fn read_descriptor<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Descriptor(format!("{}: {e}", path.display())))?;
    parse_descriptor(&text, &path.display().to_string())
}

/// `{"x": [..], "y": [..]}` with optional `"tail_slope"`.
pub fn read_nonlinearity(path: impl AsRef<Path>) -> Result<PiecewiseNonlinearity> {
    read_descriptor(path.as_ref())
}

/// `{"num": [..], "den": [..], "k": ..}`.
pub fn read_plant(path: impl AsRef<Path>) -> Result<LinearPlant> {
    read_descriptor(path.as_ref())
}

/// One abscissa column followed by named value columns.
pub fn write_columns<W: Write>(
    mut w: W,
    first: &str,
    abscissa: &[f64],
    columns: &[(&str, &[f64])],
) -> io::Result<()> {
    write!(w, "{first}")?;
    for (name, _) in columns {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (i, a) in abscissa.iter().enumerate() {
        write!(w, "{}", fmt_num(*a))?;
        for (_, col) in columns {
            write!(w, ",{}", fmt_num(col[i]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `omega,re,im`.
pub fn write_nyquist<W: Write>(mut w: W, points: &[FrequencyResponsePoint]) -> io::Result<()> {
    writeln!(w, "omega,re,im")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            fmt_num(p.omega),
            fmt_num(p.re),
            fmt_num(p.im)
        )?;
    }
    Ok(())
}

/// `k,omega,re,im`, one block per gain.
pub fn write_nyquist_family<W: Write>(
    mut w: W,
    family: &[(f64, Vec<FrequencyResponsePoint>)],
) -> io::Result<()> {
    writeln!(w, "k,omega,re,im")?;
    for (k, points) in family {
        for p in points {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_num(*k),
                fmt_num(p.omega),
                fmt_num(p.re),
                fmt_num(p.im)
            )?;
        }
    }
    Ok(())
}

/// `t,x1,..,xn,x,y`.
pub fn write_trajectory<W: Write>(mut w: W, r: &SimResult) -> io::Result<()> {
    let n = r.states.first().map_or(0, Vec::len);
    write!(w, "t")?;
    for i in 1..=n {
        write!(w, ",x{i}")?;
    }
    writeln!(w, ",x,y")?;
    for (i, t) in r.t.iter().enumerate() {
        write!(w, "{}", fmt_num(*t))?;
        for v in &r.states[i] {
            write!(w, ",{}", fmt_num(*v))?;
        }
        writeln!(w, ",{},{}", fmt_num(r.x[i]), fmt_num(r.y[i]))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            std::f64::consts::PI,
        ] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn descriptor_errors_carry_position() {
        let err =
            parse_descriptor::<PiecewiseNonlinearity>("{\"x\": [1, 2],\n \"y\": [1,]}", "nl.json")
                .unwrap_err();
        let Error::Descriptor(msg) = err else {
            panic!()
        };
        assert!(msg.starts_with("nl.json: line 2, column"), "{msg}");
        let err =
            parse_descriptor::<PiecewiseNonlinearity>("{\"x\": [1, 2],\n \"y\": [1]}", "nl.json")
                .unwrap_err();
        assert_eq!(
            err.to_string(),
            Error::Descriptor("nl.json: invalid nonlinearity: x has 2 entries but y has 1".into())
                .to_string()
        );
        let err =
            parse_descriptor::<LinearPlant>("{\"num\": [1], \"den\": [1], \"gain\": 2}", "p.json")
                .unwrap_err();
        let Error::Descriptor(msg) = err else {
            panic!()
        };
        assert!(msg.contains("gain"), "{msg}");
        let p: LinearPlant = parse_descriptor(r#"{"num":[1],"den":[1,1],"k":2}"#, "p").unwrap();
        assert_eq!(p.gain(), 2.0);
    }

    #[test]
    fn column_layout() {
        let mut out = Vec::new();
        write_columns(
            &mut out,
            "X",
            &[1.0, 2.0],
            &[("F_exact", &[0.5, 0.25]), ("F_qualitative", &[0.5, 0.3])],
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "X,F_exact,F_qualitative");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2].split(',').count(), 3);
    }
}
