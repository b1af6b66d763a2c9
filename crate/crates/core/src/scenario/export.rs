//! CSV and JSON writers. Numbers are printed with 12 significant digits so
//! output files are reproducible byte for byte.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::Result;
use crate::model::{DirectionalSpectrum, Trajectory};

/// Decimal text with 12 significant digits; plain notation for moderate
/// exponents, scientific otherwise.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    if !(-5..=11).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        out.push('.');
        out.push_str(&digits[int_len..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

/// `x` rounded to the value `fmt12` prints.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt12(x).parse().expect("fmt12 output parses")
    } else {
        x
    }
}

pub fn write_spectrum_csv<W: Write>(spec: &DirectionalSpectrum, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta_omega", "re_right", "im_right", "re_left", "im_left"])?;
    for i in 0..spec.grid.len() {
        let (r, l) = (spec.right[i], spec.left[i]);
        w.write_record([spec.grid.point(i), r.re, r.im, l.re, l.im].map(fmt12))?;
    }
    w.flush()?;
    Ok(())
}

/// `t`, then re/im of a_j and c_j for every emitter, then one column per
/// entry of `extra`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, extra: &[(&str, &[f64])], out: W) -> Result<()> {
    let n = traj.states.first().map_or(0, |s| s.a.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for j in 1..=n {
        header.extend([format!("re_a_{j}"), format!("im_a_{j}"), format!("re_c_{j}"), format!("im_c_{j}")]);
    }
    header.extend(extra.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row = vec![fmt12(*t)];
        for j in 0..n {
            row.extend([s.a[j].re, s.a[j].im, s.c[j].re, s.c[j].im].map(fmt12));
        }
        row.extend(extra.iter().map(|(_, v)| fmt12(v[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of numbers under `header`.
pub fn write_table_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt12(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Column names and rows of a numeric CSV file.
pub fn read_table_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|x| {
                x.parse::<f64>().map_err(|e| crate::Error::Config(format!("{}: bad number {x:?}: {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub(crate) fn pair(z: C64) -> [f64; 2] {
    [round12(z.re), round12(z.im)]
}
