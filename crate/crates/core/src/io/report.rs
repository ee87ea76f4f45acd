//! Report files: the `key: value` text block plus one CSV per run.

use std::fs;
use std::path::{Path, PathBuf};

use crate::harness::{Report, RunSummary};
use crate::io::csv::write_timeseries_csv;

/// Writes `<name>.txt` and `<name>_run<k>.csv` into `dir`; returns the paths.
pub fn write_report(dir: &Path, report: &Report, runs: &[RunSummary]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(runs.len() + 1);
    let main = dir.join(format!("{}.txt", report.name));
    fs::write(&main, report.to_string())?;
    out.push(main);
    for (k, r) in runs.iter().enumerate() {
        let p = dir.join(format!("{}_run{k}.csv", report.name));
        write_timeseries_csv(&p, &r.series)?;
        out.push(p);
    }
    Ok(out)
}

/// `key: value` pairs of a report text, in order.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut r = Report::new("demo");
        r.num("x", 0.1);
        r.check("positive", true);
        let r = r.settle();
        let kv = parse_report(&r.to_string());
        let x: f64 = kv.iter().find(|(k, _)| k == "x").unwrap().1.parse().unwrap();
        assert_eq!(x, 0.1);
        assert!(kv.contains(&("check.positive".into(), "pass".into())));
        assert!(kv.contains(&("verdict".into(), "pass".into())));
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &r, &[]).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(fs::read_to_string(&files[0]).unwrap(), r.to_string());
    }
}
