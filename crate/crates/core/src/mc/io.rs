use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::exitlaw::Boundary;

use super::{ExitSample, Scheme};

pub const CSV_HEADER: &str = "exit_time,boundary,steps,scheme,stream";

fn boundary_str(b: Boundary) -> &'static str {
    match b {
        Boundary::One => "one",
        Boundary::Zero => "zero",
    }
}

/// Writes samples one per line. Times use Rust's shortest round-trip
/// decimal form, which never uses exponents or locale separators.
pub fn write_samples_csv<W: Write>(mut w: W, samples: &[ExitSample]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.exit_time,
            boundary_str(s.boundary),
            s.steps_taken,
            s.scheme.as_str(),
            s.stream
        )?;
    }
    Ok(())
}

pub fn read_samples_csv<R: BufRead>(r: R) -> Result<Vec<ExitSample>> {
    let bad = |line: usize, what: &str| Error::Parse(format!("line {line}: {what}"));
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if i == 0 {
            if line.trim() != CSV_HEADER {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, "expected 5 fields"));
        }
        let boundary = match f[1] {
            "one" => Boundary::One,
            "zero" => Boundary::Zero,
            _ => return Err(bad(i + 1, "unknown boundary")),
        };
        let scheme = match f[3] {
            "euler_reflect" => Scheme::EulerReflect,
            "euler_absorb" => Scheme::EulerAbsorb,
            _ => return Err(bad(i + 1, "unknown scheme")),
        };
        out.push(ExitSample {
            exit_time: f[0].parse().map_err(|_| bad(i + 1, "bad exit_time"))?,
            boundary,
            steps_taken: f[2].parse().map_err(|_| bad(i + 1, "bad steps"))?,
            scheme,
            stream: f[4].parse().map_err(|_| bad(i + 1, "bad stream"))?,
        });
    }
    Ok(out)
}
