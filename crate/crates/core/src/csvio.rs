//! CSV readers and writers for runs, load traces and analysis outputs.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value exactly.

use std::path::Path;

use crate::analysis::{BodeResult, PsdResult, RunMetrics};
use crate::engine::RunResult;
use crate::error::{Error, Result};
use crate::signals::LoadTrace;

fn write_table<W: std::io::Write>(writer: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    let n = columns.first().map_or(0, |c| c.len());
    let mut row = Vec::with_capacity(columns.len());
    for k in 0..n {
        row.clear();
        row.extend(columns.iter().map(|c| c[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Reads a headered numeric CSV into `(header, columns)`.
pub fn read_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for record in r.records() {
        let record = record?;
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Column(format!(
                    "{}: `{field}` on line {} is not a number",
                    header[i],
                    record.position().map_or(0, |p| p.line())
                ))
            })?;
            columns[i].push(v);
        }
    }
    Ok((header, columns))
}

/// One named column of a headered CSV.
pub fn read_column(path: impl AsRef<Path>, name: &str) -> Result<Vec<f64>> {
    let (header, mut columns) = read_table(path)?;
    let i = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Column(name.to_string()))?;
    Ok(columns.swap_remove(i))
}

pub fn write_run_to<W: std::io::Write>(run: &RunResult, writer: W) -> Result<()> {
    run.validate()?;
    write_table(writer, &RunResult::COLUMNS, &run.columns())
}

pub fn write_run(run: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    write_run_to(run, create(path.as_ref())?)
}

/// Reads a run written by [`write_run`]. The nominal frequency is not stored
/// in the file and must be supplied.
pub fn read_run(path: impl AsRef<Path>, nominal_freq: f64) -> Result<RunResult> {
    let (header, columns) = read_table(path)?;
    let mut run = RunResult::with_capacity(0, nominal_freq);
    for (name, dst) in RunResult::COLUMNS.iter().zip(run.columns_mut()) {
        let i = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Column(name.to_string()))?;
        *dst = columns[i].clone();
    }
    Ok(run)
}

pub fn write_load(trace: &LoadTrace, path: impl AsRef<Path>) -> Result<()> {
    let time: Vec<f64> = (0..trace.len()).map(|k| trace.time(k)).collect();
    write_table(
        create(path.as_ref())?,
        &["time_s", "p_dc_mw"],
        &[&time, &trace.samples],
    )
}

/// Reads a `time_s,p_dc_mw` file. The sample interval is taken from the
/// first two rows and must be uniform.
pub fn read_load(path: impl AsRef<Path>) -> Result<LoadTrace> {
    let (header, columns) = read_table(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .map(|i| columns[i].clone())
            .ok_or_else(|| Error::Column(name.to_string()))
    };
    let time = col("time_s")?;
    let samples = col("p_dc_mw")?;
    if time.len() < 2 {
        return Err(Error::Input("load trace needs at least two samples".into()));
    }
    let dt = time[1] - time[0];
    if dt <= 0.0 {
        return Err(Error::Input("time_s must be increasing".into()));
    }
    let uniform = time
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform {
        return Err(Error::Input("time_s is not uniformly spaced".into()));
    }
    Ok(LoadTrace {
        t0: time[0],
        dt,
        samples,
    })
}

pub fn write_psd(psd: &PsdResult, path: impl AsRef<Path>) -> Result<()> {
    write_table(
        create(path.as_ref())?,
        &["freq_hz", "density"],
        &[&psd.freqs, &psd.density],
    )
}

pub fn write_bode(bode: &BodeResult, path: impl AsRef<Path>) -> Result<()> {
    write_table(
        create(path.as_ref())?,
        &["freq_hz", "mag_db", "phase_deg"],
        &[&bode.freqs, &bode.magnitude_db, &bode.phase_deg],
    )
}

/// One row per labelled run, with a leading `case` column.
pub fn write_metrics(rows: &[(&str, RunMetrics)], path: impl AsRef<Path>) -> Result<()> {
    write_metrics_to(rows, create(path.as_ref())?)
}

pub fn write_metrics_to<W: std::io::Write>(rows: &[(&str, RunMetrics)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["case"];
    header.extend(RunMetrics::COLUMNS);
    w.write_record(&header)?;
    for (label, m) in rows {
        let mut rec = vec![label.to_string()];
        rec.extend(m.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let a = [0.1, 1.0 / 3.0, -2.5e-300, 1e17];
        let b = [std::f64::consts::PI, 0.0, -0.0, 7.0];
        write_table(create(&p).unwrap(), &["a", "b"], &[&a, &b]).unwrap();
        let (h, cols) = read_table(&p).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(cols[0], a);
        assert_eq!(cols[1], b);
        assert_eq!(read_column(&p, "b").unwrap(), b);
        assert!(matches!(read_column(&p, "c"), Err(Error::Column(_))));
    }

    #[test]
    fn non_numeric_cell_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x\n1\nabc\n").unwrap();
        assert!(matches!(read_table(&p), Err(Error::Column(_))));
    }

    #[test]
    fn load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("load.csv");
        let trace = LoadTrace {
            t0: 0.0,
            dt: 0.01,
            samples: vec![20.0, 20.5, 21.25],
        };
        write_load(&trace, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("time_s,p_dc_mw\n"));
        let back = read_load(&p).unwrap();
        assert_eq!(back.samples, trace.samples);
        assert_eq!(back.dt, 0.01);
    }
}
