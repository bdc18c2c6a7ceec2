//! Rebuilds plots and tables from the CSVs of earlier runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::output::{read_csv, write_atomic, write_csv};
use crate::run::{curve_points_from_rows, gaps_by_delta, rate_fit, rate_svg, ContinuityCsvRow, SweepRow};
use crate::CliError;

#[derive(Serialize)]
struct GapRow {
    delta: f64,
    headline_gap: f64,
}

fn csv_files(dir: &Path, prefix: &str, acc: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            csv_files(&p, prefix, acc)?;
        } else if p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with(prefix)) {
            acc.push(p);
        }
    }
    Ok(())
}

/// Writes one SVG per rate curve and a gap-vs-delta table into `out`; returns the summary text.
pub fn report(dir: &Path, out: &Path) -> Result<String, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingData(format!("{} is not a directory", dir.display())));
    }
    let (mut sweeps, mut conts) = (Vec::new(), Vec::new());
    csv_files(dir, "sweep", &mut sweeps)?;
    csv_files(dir, "continuity", &mut conts)?;
    if sweeps.is_empty() && conts.is_empty() {
        return Err(CliError::MissingData(format!("no sweep or continuity CSV under {}", dir.display())));
    }
    let mut text = String::new();
    let mut plot = 0;
    for path in &sweeps {
        let rows: Vec<SweepRow> = read_csv(path)?;
        let mut keys: Vec<[f64; 5]> = Vec::new();
        for r in &rows {
            let key = [r.nu_1, r.nu_2, r.tau_1, r.tau_2, r.q_t];
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for key in keys {
            let curve: Vec<&SweepRow> = rows.iter().filter(|r| [r.nu_1, r.nu_2, r.tau_1, r.tau_2, r.q_t] == key).collect();
            let pts = curve_points_from_rows(&curve);
            if pts.is_empty() {
                continue;
            }
            plot += 1;
            let title = format!("nu = ({:.4}, {:.4}), q_t = {}", key[0], key[1], key[4]);
            let name = format!("rate_{plot}.svg");
            write_atomic(&out.join(&name), rate_svg(&title, &pts).as_bytes())?;
            let (c, excess) = rate_fit(&pts);
            let _ = writeln!(text, "{name}: {title}, {} points, C = {c:.4e}, max excess {excess:.3}", pts.len());
        }
    }
    if !conts.is_empty() {
        let mut rows: Vec<ContinuityCsvRow> = Vec::new();
        for path in &conts {
            rows.extend(read_csv::<ContinuityCsvRow>(path)?);
        }
        let gaps = gaps_by_delta(&rows);
        let _ = writeln!(text, "delta,headline_gap");
        for (d, g) in &gaps {
            let _ = writeln!(text, "{d},{g:.6e}");
        }
        let table: Vec<GapRow> = gaps.iter().map(|&(delta, headline_gap)| GapRow { delta, headline_gap }).collect();
        write_csv(&out.join("gap_vs_delta.csv"), &table)?;
    }
    write_atomic(&out.join("report.txt"), text.as_bytes())?;
    Ok(text)
}
