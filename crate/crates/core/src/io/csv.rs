//! Time-series CSV: fixed header, 17 significant digits, LF endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{Row, TimeSeries};
use crate::error::{Error, Result};

pub const HEADER: &str = "t,V,N,U_sup,Nz,Omega2,R_winn,front_pos,Vbar,Nbar,Ubar,Nzbar";

/// `d.dddddddddddddddde±x`, which round-trips every finite f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_to_string(series: &TimeSeries) -> String {
    let mut s = String::with_capacity(HEADER.len() + 1 + series.len() * 12 * 24);
    s.push_str(HEADER);
    s.push('\n');
    for row in &series.rows {
        for (k, v) in row.to_array().iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{}", fmt17(*v)).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_timeseries_csv(path: &Path, series: &TimeSeries) -> std::io::Result<()> {
    fs::write(path, timeseries_to_string(series))
}

/// Parses the CSV back into rows, keeping the stored averages as written.
pub fn parse_timeseries(text: &str) -> Result<TimeSeries> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(Error::Config(format!("unexpected CSV header {:?}", other.unwrap_or("")))),
    }
    let mut ts = TimeSeries::new("");
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("CSV line {}: {e}", n + 2)))?;
        let arr: [f64; 12] =
            vals.try_into().map_err(|v: Vec<f64>| Error::Config(format!("CSV line {}: {} fields", n + 2, v.len())))?;
        ts.rows.push(Row::from_array(arr));
    }
    Ok(ts)
}

pub fn read_timeseries_csv(path: &Path) -> Result<TimeSeries> {
    parse_timeseries(&fs::read_to_string(path)?)
}

/// One `x,T` line per sample.
pub fn profile_to_string(samples: &[(f64, f64)]) -> String {
    let mut s = String::from("x,T\n");
    for &(x, t) in samples {
        writeln!(s, "{},{}", fmt17(x), fmt17(t)).unwrap();
    }
    s
}
