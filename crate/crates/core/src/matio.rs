//! Matrix files and complex-scalar parsing.
//!
//! A matrix file starts with a `rows,cols` line followed by `rows` lines of
//! `2 * cols` numbers: the real and imaginary part of each entry in turn.
//! Blank lines and lines starting with `#` are skipped.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;

pub fn write_matrix_csv(m: &ComplexMatrix, mut out: impl Write) -> Result<()> {
    writeln!(out, "{},{}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", s.trim())))
}

pub fn read_matrix_csv(input: impl BufRead) -> Result<ComplexMatrix> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#')));
    let (no, header) = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(Error::Parse(format!("line {no}: expected 'rows,cols' header")));
    }
    let parse_dim = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {no}: bad dimension '{}'", s.trim())))
    };
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {rows} matrix rows")))??;
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 2 * cols {
            return Err(Error::Parse(format!("line {no}: expected {} values, got {}", 2 * cols, vals.len())));
        }
        for pair in vals.chunks(2) {
            entries.push(Complex64::new(parse_f64(pair[0], no)?, parse_f64(pair[1], no)?));
        }
    }
    if let Some(extra) = lines.next() {
        let (no, _) = extra?;
        return Err(Error::Parse(format!("line {no}: unexpected data after {rows} rows")));
    }
    ComplexMatrix::new(rows, cols, entries)
}

/// Parses `RE`, `RE+IMj`, `RE-IMj`, `IMj` (also with `i`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("'{s}' is not a complex number (expected RE[+IMj])"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| err());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| err()),
        }
    };
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().map_err(|_| err())?;
            Ok(Complex64::new(re, imag(&body[i..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}
