//! Plain-text file formats: dense matrix CSV, spectral sample CSV, measure
//! and point lists, Dyson tables.
//!
//! Numbers are written with Rust's shortest round-trip `Display`, so a write
//! followed by a parse reproduces every `f64` bit for bit. Parsers accept
//! arbitrary input and report the offending line instead of panicking.

use std::fmt::Write as _;

use crate::dyson::FreeStieltjesSolution;
use crate::metrics::EmpiricalMeasure;
use crate::spectra::SpectralSample;
use crate::{CMat, LabError, Result, C64};

pub const SPECTRUM_HEADER: &str = "index,eig_re,eig_im,sigma,infnorm";
pub const DYSON_HEADER: &str = "z_re,z_im,eta_re,eta_im,a_re,a_im,b_re,b_im,c_re,c_im,m_re,m_im,iterations,residual";

/// Shortest round-trip text for an `f64`, switching to exponent notation
/// for very small or very large magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> LabError {
    LabError::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let t = tok.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {t:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value: {t:?}")));
    }
    Ok(v)
}

/// Lines that carry data: blank lines and `#` comments are skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Dense matrix as CSV: one line per row, each cell a quoted `"re,im"` pair.
pub fn write_matrix_csv(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let v = m[(i, j)];
            let _ = write!(out, "\"{},{}\"", Num(v.re), Num(v.im));
        }
        out.push('\n');
    }
    out
}

fn split_quoted_cells(line: &str, lineno: usize) -> Result<Vec<&str>> {
    let mut cells = Vec::new();
    let mut rest = line.trim();
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('"') else {
            return Err(parse_err(lineno, "expected a quoted \"re,im\" cell"));
        };
        let Some(close) = body.find('"') else {
            return Err(parse_err(lineno, "unterminated cell"));
        };
        cells.push(&body[..close]);
        rest = body[close + 1..].trim_start();
        if let Some(after) = rest.strip_prefix(',') {
            rest = after.trim_start();
            if rest.is_empty() {
                return Err(parse_err(lineno, "trailing comma"));
            }
        } else if !rest.is_empty() {
            return Err(parse_err(lineno, "cells must be separated by commas"));
        }
    }
    Ok(cells)
}

fn parse_complex_pair(cell: &str, lineno: usize) -> Result<C64> {
    let mut parts = cell.split(',');
    let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(parse_err(lineno, format!("cell {cell:?} is not a re,im pair")));
    };
    Ok(C64::new(parse_f64(re, lineno)?, parse_f64(im, lineno)?))
}

/// Parse [`write_matrix_csv`] output. The matrix must be square.
pub fn parse_matrix_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (lineno, line) in data_lines(text) {
        let cells = split_quoted_cells(line, lineno)?;
        let row = cells
            .into_iter()
            .map(|c| parse_complex_pair(c, lineno))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(lineno, format!("row has {} cells, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
        if rows.len() > rows[0].len() {
            return Err(parse_err(lineno, "more rows than columns"));
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(0, "empty matrix"));
    }
    if rows[0].len() != n {
        return Err(parse_err(0, format!("matrix is {}x{}, expected square", n, rows[0].len())));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// One row per index: `index,eig_re,eig_im,sigma,infnorm` (infnorm empty
/// when eigenvectors were not computed).
pub fn write_spectrum_csv(s: &SpectralSample) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    let n = s.eigenvalues.len().max(s.singular_values.len());
    for k in 0..n {
        let eig = s.eigenvalues.get(k);
        let _ = write!(out, "{k},");
        match eig {
            Some(l) => {
                let _ = write!(out, "{},{},", Num(l.re), Num(l.im));
            }
            None => out.push_str(",,"),
        }
        if let Some(sv) = s.singular_values.get(k) {
            let _ = write!(out, "{}", Num(*sv));
        }
        out.push(',');
        if let Some(v) = s.eigenvector_infnorms.as_ref().and_then(|v| v.get(k)) {
            let _ = write!(out, "{}", Num(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_spectrum_csv(text: &str) -> Result<SpectralSample> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, h)) if h == SPECTRUM_HEADER => {}
        Some((k, h)) => return Err(parse_err(k, format!("unexpected header {h:?}"))),
        None => return Err(parse_err(0, "empty spectrum file")),
    }
    let mut eigenvalues = Vec::new();
    let mut singular_values = Vec::new();
    let mut infnorms = Vec::new();
    for (expected, (lineno, line)) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(lineno, format!("expected 5 fields, got {}", fields.len())));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad index {:?}", fields[0])))?;
        if index != expected {
            return Err(parse_err(lineno, format!("index {index} out of order, expected {expected}")));
        }
        match (fields[1].trim().is_empty(), fields[2].trim().is_empty()) {
            (true, true) => {}
            (false, false) => {
                if eigenvalues.len() != index {
                    return Err(parse_err(lineno, "eigenvalue column has gaps"));
                }
                eigenvalues.push(C64::new(parse_f64(fields[1], lineno)?, parse_f64(fields[2], lineno)?));
            }
            _ => return Err(parse_err(lineno, "eigenvalue needs both parts")),
        }
        if !fields[3].trim().is_empty() {
            if singular_values.len() != index {
                return Err(parse_err(lineno, "sigma column has gaps"));
            }
            let s = parse_f64(fields[3], lineno)?;
            if s < 0.0 {
                return Err(parse_err(lineno, "negative singular value"));
            }
            singular_values.push(s);
        }
        if !fields[4].trim().is_empty() {
            if infnorms.len() != index {
                return Err(parse_err(lineno, "infnorm column has gaps"));
            }
            infnorms.push(parse_f64(fields[4], lineno)?);
        }
    }
    if singular_values.windows(2).any(|w| w[0] < w[1]) {
        return Err(parse_err(0, "singular values are not in decreasing order"));
    }
    Ok(SpectralSample {
        eigenvalues,
        singular_values,
        eigenvector_infnorms: if infnorms.is_empty() { None } else { Some(infnorms) },
        spec: None,
        seed: None,
        trial: None,
    })
}

/// A real measure: one point per line (uniform weights) or `point,weight`
/// per line (weights normalized to one). Mixing the two forms is an error.
pub fn parse_measure(text: &str) -> Result<EmpiricalMeasure> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut weighted: Option<bool> = None;
    for (lineno, line) in data_lines(text) {
        let fields: Vec<&str> = line.split(',').collect();
        let this_weighted = match fields.len() {
            1 => false,
            2 => true,
            k => return Err(parse_err(lineno, format!("expected 1 or 2 fields, got {k}"))),
        };
        if *weighted.get_or_insert(this_weighted) != this_weighted {
            return Err(parse_err(lineno, "mixed weighted and unweighted lines"));
        }
        points.push(parse_f64(fields[0], lineno)?);
        if this_weighted {
            let w = parse_f64(fields[1], lineno)?;
            if !(w > 0.0) {
                return Err(parse_err(lineno, format!("weight {w} is not positive")));
            }
            weights.push(w);
        }
    }
    if points.is_empty() {
        return Err(parse_err(0, "empty measure"));
    }
    if weighted == Some(true) {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(parse_err(0, "weights do not have a finite positive total"));
        }
        let mut w: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // absorb rounding so the weights sum to one within the measure's tolerance
        let drift: f64 = 1.0 - w.iter().sum::<f64>();
        if let Some(last) = w.last_mut() {
            *last += drift;
            if !(*last > 0.0) {
                return Err(parse_err(0, "weights underflow after normalization"));
            }
        }
        EmpiricalMeasure::new(points, w)
    } else {
        EmpiricalMeasure::uniform(points)
    }
}

/// Complex points, one `re,im` pair per line.
pub fn parse_points(text: &str) -> Result<Vec<C64>> {
    let mut out = Vec::new();
    for (lineno, line) in data_lines(text) {
        out.push(parse_complex_pair(line, lineno)?);
    }
    if out.is_empty() {
        return Err(parse_err(0, "no points"));
    }
    Ok(out)
}

pub fn write_points(points: &[C64]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "{},{}", Num(p.re), Num(p.im));
    }
    out
}

/// Positive reals, one per line (singular values for the log metrics).
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in data_lines(text) {
        out.push(parse_f64(line, lineno)?);
    }
    if out.is_empty() {
        return Err(parse_err(0, "no values"));
    }
    Ok(out)
}

/// Tabulated Dyson solutions, one row per (z, η).
pub fn write_dyson_table(rows: &[FreeStieltjesSolution]) -> String {
    let mut out = String::from(DYSON_HEADER);
    out.push('\n');
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            Num(s.z.re),
            Num(s.z.im),
            Num(s.eta.re),
            Num(s.eta.im),
            Num(s.a.re),
            Num(s.a.im),
            Num(s.b.re),
            Num(s.b.im),
            Num(s.c.re),
            Num(s.c.im),
            Num(s.m.re),
            Num(s.m.im),
            s.iterations,
            Num(s.residual)
        );
    }
    out
}

/// A complex number written as `re`, `re+imi`, `re-imi`, `imi` or `i`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || parse_err(0, format!("not a complex number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let num = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => {
                let v: f64 = s.parse().map_err(|_| bad())?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad())
                }
            }
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        return if re.is_finite() { Ok(C64::new(re, 0.0)) } else { Err(bad()) };
    };
    // split at the last sign that is not the leading sign or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re_part = &body[..k];
            if re_part.is_empty() || re_part == "+" || re_part == "-" {
                return Err(bad());
            }
            let re: f64 = re_part.parse().map_err(|_| bad())?;
            if !re.is_finite() {
                return Err(bad());
            }
            Ok(C64::new(re, num(&body[k..])?))
        }
        None => Ok(C64::new(0.0, num(body)?)),
    }
}

pub fn format_complex(z: C64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", Num(z.re), Num(-z.im))
    } else {
        format!("{}+{}i", Num(z.re), Num(z.im))
    }
}
