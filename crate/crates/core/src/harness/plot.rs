//! Plain-text plot data: whitespace-separated `x y err` columns, one block per
//! policy, blocks separated by two blank lines (gnuplot `index` layout).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::metrics::DelayCdf;
use crate::policy::AdmissionKind;

const FIGURES: [&str; 9] = [
    "fig6a", "fig6b", "fig6c", "fig7a", "fig7b", "fig8a", "fig8b", "fig9a", "fig9b",
];

pub fn figure_names() -> &'static [&'static str] {
    &FIGURES
}

/// A sweep CSV as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    /// Name of the swept parameter's column.
    pub fn param_column(&self) -> Option<&str> {
        self.header.get(1).map(String::as_str)
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn require(&self, names: &[&str]) -> Result<Vec<usize>, HarnessError> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| self.index(n).is_none())
            .map(|n| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(HarnessError::MissingColumns {
                path: self.path.clone(),
                columns: missing,
            });
        }
        Ok(names.iter().map(|n| self.index(n).unwrap()).collect())
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, HarnessError> {
        let s = &self.rows[row][col];
        s.parse().map_err(|_| {
            HarnessError::format(&self.path, format!("row {}: cannot parse `{s}`", row + 1))
        })
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepTable, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let fail = |e: csv::Error| HarnessError::format(path, e.to_string());
    let header = reader.headers().map_err(fail)?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(fail))
        .collect::<Result<_, _>>()?;
    Ok(SweepTable {
        path: path.into(),
        header,
        rows,
    })
}

fn y_label(figure: &str) -> &'static str {
    match figure {
        "fig6b" => "fraction of sessions meeting their SLA",
        _ => "revenue per second",
    }
}

/// Writes `<out_dir>/<figure>.dat` from a sweep CSV.
pub fn emit_plot_data(sweep_csv: &Path, figure: &str, out_dir: &Path) -> Result<PathBuf, HarnessError> {
    if !FIGURES.contains(&figure) {
        return Err(HarnessError::UnknownFigure(figure.into()));
    }
    if figure == "fig8b" {
        return Err(HarnessError::format(
            sweep_csv,
            "fig8b is a delay distribution; it is written from run data by the fig8a preset",
        ));
    }
    let table = read_sweep_csv(sweep_csv)?;
    let x_name = table
        .param_column()
        .ok_or_else(|| HarnessError::format(sweep_csv, "empty header"))?
        .to_string();
    let cols = table.require(&[
        "policy",
        &x_name,
        "revenue_mean",
        "ci_low",
        "ci_high",
        "violation_frac",
    ])?;
    let (policy, x, mean, lo, hi, viol) = (cols[0], cols[1], cols[2], cols[3], cols[4], cols[5]);

    let mut text = format!("# {figure}: {} vs {x_name}\n# columns: x y err\n", y_label(figure));
    let mut current: Option<&str> = None;
    for (i, row) in table.rows.iter().enumerate() {
        let name = row[policy].as_str();
        if current != Some(name) {
            if current.is_some() {
                text.push_str("\n\n");
            }
            let _ = writeln!(text, "# policy {name}");
            current = Some(name);
        }
        let xv = table.number(i, x)?;
        let (y, err) = if figure == "fig6b" {
            (1.0 - table.number(i, viol)?, 0.0)
        } else {
            let m = table.number(i, mean)?;
            let half = (table.number(i, hi)? - table.number(i, lo)?) / 2.0;
            (m, half)
        };
        let _ = writeln!(text, "{xv} {y:.6} {err:.6}");
    }
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let path = out_dir.join(format!("{figure}.dat"));
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes empirical delay CDFs, one block per policy, as `delay cdf` pairs.
pub fn write_delay_cdf(path: &Path, curves: &[(AdmissionKind, DelayCdf)]) -> Result<(), HarnessError> {
    let mut text = String::from("# fig8b: CDF of per-session mean wait\n# columns: delay cdf\n");
    for (i, (policy, cdf)) in curves.iter().enumerate() {
        if i > 0 {
            text.push_str("\n\n");
        }
        let _ = writeln!(text, "# policy {policy} sessions {}", cdf.len());
        let n = cdf.len() as f64;
        let values = cdf.values();
        for (j, v) in values.iter().enumerate() {
            // One point per distinct value, at the top of its step.
            if values.get(j + 1) != Some(v) {
                let _ = writeln!(text, "{v:.6} {:.6}", (j + 1) as f64 / n);
            }
        }
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
