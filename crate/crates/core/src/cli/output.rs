use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::ddm::{Method, MetricsRecord};
use crate::error::{Error, Result};

use super::sweep::{SweepRow, SweepTable};

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "layout",
    "p",
    "q",
    "seed",
    "log_ratio",
    "J_p_final",
    "J_q_final",
    "diverged",
    "iters",
];

/// 17 significant digits.
fn full(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn parse_f64(field: &str, key: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("column `{key}`: cannot parse `{field}`")))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

/// One line per row under [`CSV_HEADER`]; one-level rows leave `q` and
/// `J_q_final` empty.
pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.method.to_string(),
            r.layout.to_string(),
            format!("{:?}", r.p),
            r.q.map(|q| format!("{q:?}")).unwrap_or_default(),
            r.seed.to_string(),
            full(r.log_ratio),
            full(r.j_p_final),
            r.j_q_final.map(full).unwrap_or_default(),
            r.diverged.to_string(),
            r.iters.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`emit_csv`]. Wall times are not stored and read
/// back as zero.
pub fn read_csv(path: &Path) -> Result<SweepTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let opt = |i: usize| -> Result<Option<f64>> {
            match &rec[i] {
                "" => Ok(None),
                s => parse_f64(s, CSV_HEADER[i]).map(Some),
            }
        };
        let int = |i: usize| -> Result<u64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Config(format!("column `{}`: cannot parse `{}`", CSV_HEADER[i], &rec[i])))
        };
        rows.push(SweepRow {
            method: rec[0].parse::<Method>()?,
            layout: int(1)? as usize,
            p: parse_f64(&rec[2], "p")?,
            q: opt(3)?,
            seed: int(4)?,
            log_ratio: parse_f64(&rec[5], "log_ratio")?,
            j_p_final: parse_f64(&rec[6], "J_p_final")?,
            j_q_final: opt(7)?,
            diverged: rec[8]
                .parse()
                .map_err(|_| Error::Config(format!("column `diverged`: cannot parse `{}`", &rec[8])))?,
            iters: int(9)? as usize,
            wall_seconds: 0.0,
            error: None,
        });
    }
    Ok(SweepTable { rows })
}

pub fn plot_file_name(method: Method, layout: usize, q: Option<f64>) -> String {
    match q {
        Some(q) => format!("{method}_{layout}x{layout}_q{q}.dat"),
        None => format!("{method}_{layout}x{layout}.dat"),
    }
}

/// One whitespace-separated `p log_ratio` file per (method, layout, q),
/// sorted by `p`. Diverged rows get a trailing `diverged` marker, failed runs
/// a `failed` marker. Returns the written paths.
pub fn emit_plotdata(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<String, Vec<&SweepRow>> = BTreeMap::new();
    for r in &table.rows {
        groups
            .entry(plot_file_name(r.method, r.layout, r.q))
            .or_default()
            .push(r);
    }
    if groups.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, mut rows) in groups {
        rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.seed.cmp(&b.seed)));
        let path = dir.join(name);
        let mut text = String::new();
        for r in rows {
            text.push_str(&format!("{:?} {}", r.p, full(r.log_ratio)));
            if r.error.is_some() {
                text.push_str(" failed");
            } else if r.diverged {
                text.push_str(" diverged");
            }
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Per-iteration metrics of a single run.
pub fn emit_history_csv(history: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from(
        "iteration,J_p,J_q,err_inf,err_l2,increment_l2,increment_energy,J_p_half,J_q_half\n",
    );
    for r in history {
        let step = r.step.as_ref();
        let opt = |v: Option<f64>| v.map(full).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.iteration,
            full(r.j_p),
            full(r.j_q),
            full(r.err_inf),
            full(r.err_l2),
            opt(step.map(|s| s.increment_l2)),
            opt(step.map(|s| s.increment_energy)),
            opt(step.map(|s| s.j_p_half)),
            opt(step.map(|s| s.j_q_half)),
        ));
    }
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(p: f64, q: Option<f64>, log_ratio: f64, diverged: bool) -> SweepRow {
        SweepRow {
            method: if q.is_some() { Method::DcsRjmin } else { Method::Osm },
            layout: 4,
            p,
            q,
            seed: 0,
            log_ratio,
            j_p_final: 0.1 + p,
            j_q_final: q.map(|q| q * 1e-7),
            diverged,
            iters: 50,
            wall_seconds: 0.0,
            error: None,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_csv(&SweepTable::default(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "method,layout,p,q,seed,log_ratio,J_p_final,J_q_final,diverged,iters\n");
        assert!(emit_plotdata(&SweepTable::default(), &dir.path().join("plot")).unwrap().is_empty());
        assert!(!dir.path().join("plot").exists());
    }

    #[test]
    fn one_row_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let table = SweepTable { rows: vec![row(1.5, Some(40.0), -3.25, false)] };
        emit_csv(&table, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
        assert_eq!(read_csv(&path).unwrap(), table);
    }

    #[test]
    fn plot_files_are_grouped_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let table = SweepTable {
            rows: vec![
                row(3.0, Some(40.0), -1.0, false),
                row(1.0, Some(40.0), -2.0, false),
                row(2.0, Some(40.0), 14.0, true),
                row(1.0, None, -0.5, false),
            ],
        };
        let files = emit_plotdata(&table, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = fs::read_to_string(dir.path().join("dcs-rjmin_4x4_q40.dat")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("1.0 "));
        assert!(lines[1].starts_with("2.0 ") && lines[1].ends_with(" diverged"));
        assert!(lines[2].starts_with("3.0 "));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("t.csv");
        assert!(matches!(emit_csv(&SweepTable::default(), &path), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trip(values in proptest::collection::vec(
            (0.1f64..100.0, proptest::option::of(0.1f64..100.0), proptest::num::f64::ANY, proptest::num::f64::NORMAL, any::<bool>()),
            0..6,
        )) {
            let rows: Vec<SweepRow> = values
                .iter()
                .map(|&(p, q, lr, jp, d)| SweepRow { j_p_final: jp, ..row(p, q, lr, d) })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let table = SweepTable { rows };
            emit_csv(&table, &path).unwrap();
            let back = read_csv(&path).unwrap();
            prop_assert_eq!(back.rows.len(), table.rows.len());
            for (a, b) in back.rows.iter().zip(&table.rows) {
                prop_assert_eq!(a.p.to_bits(), b.p.to_bits());
                prop_assert_eq!(a.q.map(f64::to_bits), b.q.map(f64::to_bits));
                prop_assert!(a.log_ratio.to_bits() == b.log_ratio.to_bits() || (a.log_ratio.is_nan() && b.log_ratio.is_nan()));
                prop_assert_eq!(a.j_p_final.to_bits(), b.j_p_final.to_bits());
                prop_assert_eq!(a.j_q_final.map(f64::to_bits), b.j_q_final.map(f64::to_bits));
                prop_assert_eq!(a.diverged, b.diverged);
            }
        }
    }
}
