use std::io::{self, Write};
use std::path::Path;

use qlre_core::run::{RunOutput, RunSummary};

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// CSV bytes for a header and rows of already formatted cells.
pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn timeseries_csv(out: &RunOutput) -> Vec<u8> {
    let mut header = vec!["t_scaled".to_string()];
    header.extend(out.columns.iter().cloned());
    let rows: Vec<Vec<String>> = out
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            std::iter::once(fmt_sig(t))
                .chain(out.series.iter().map(|s| fmt_sig(s[i])))
                .collect()
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn summary_json(summary: &RunSummary) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s.into_bytes()
}

/// Writes `<name>_timeseries.csv` (when there are observables) and
/// `<name>_summary.json`; returns the file names written.
pub fn write_run(dir: &Path, out: &RunOutput) -> io::Result<Vec<String>> {
    let name = &out.summary.name;
    let mut written = Vec::new();
    if !out.columns.is_empty() {
        let file = format!("{name}_timeseries.csv");
        write_atomic(&dir.join(&file), &timeseries_csv(out))?;
        written.push(file);
    }
    let file = format!("{name}_summary.json");
    write_atomic(&dir.join(&file), &summary_json(&out.summary))?;
    written.push(file);
    Ok(written)
}

pub fn human_bytes(b: u128) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut v = b as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    if u == 0 {
        format!("{b} B")
    } else {
        format!("{v:.1} {}", UNITS[u])
    }
}
