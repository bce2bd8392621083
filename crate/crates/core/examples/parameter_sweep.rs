// A (p, q, layout) sweep written as CSV and per-curve plot data. Pass `full`
// to run the default grid (39 p values, 8 q values, layouts 2, 4, 6, 8).

use dcs_rjmin::cli::{emit_csv, emit_plotdata, run_sweep, SweepSpec};

pub fn run_example_with(full: bool, out: &std::path::Path) -> dcs_rjmin::Result<()> {
    let spec = if full {
        SweepSpec::default()
    } else {
        SweepSpec {
            p: vec![2.0, 6.0, 10.0],
            q: vec![2.0, 40.0],
            layouts: vec![2, 4],
            cells: 8,
            iterations: 20,
            ..SweepSpec::default()
        }
    };
    let table = run_sweep(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| dcs_rjmin::Error::io(out, e))?;
    emit_csv(&table, &out.join("sweep.csv"))?;
    let files = emit_plotdata(&table, &out.join("plot"))?;
    println!("{} rows, {} plot files in {}", table.rows.len(), files.len(), out.display());
    for r in table.rows.iter().filter(|r| r.layout == 4) {
        println!("  {:<9} p = {:>4} q = {:>4?} log10 ratio {:>8.3}", r.method, r.p, r.q, r.log_ratio);
    }
    Ok(())
}

pub fn run_example() -> dcs_rjmin::Result<()> {
    let dir = std::env::temp_dir().join("dcs-rjmin-sweep-example");
    run_example_with(false, &dir)
}

#[allow(dead_code)]
fn main() -> dcs_rjmin::Result<()> {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    run_example_with(full, std::path::Path::new("sweep-out"))
}
