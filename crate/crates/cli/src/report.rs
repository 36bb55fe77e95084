//! Result rows, CSV files and the console table.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ietidp_core::krylov::SolveReport;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    SkippedOverBudget,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::SkippedOverBudget => "SkippedOverBudget",
        }
    }
}

/// One table cell: a `(p, h)` pair of a sweep or one adaptive round.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub p: usize,
    /// Refinement level `r`, printed as `h_hat = 2^-(r+1)`.
    pub h: Option<u32>,
    pub round: Option<usize>,
    /// Patch count K.
    pub patches: usize,
    pub iterations: Option<usize>,
    pub kappa: Option<f64>,
    pub dofs: usize,
    /// Seconds.
    pub wall_time: f64,
    pub status: Status,
}

const FIELDS: [&str; 9] = ["p", "h", "round", "patches", "iterations", "kappa", "dofs", "wall_time", "status"];

/// Condition numbers as the tables print them: four significant digits
/// below 1000, otherwise one decimal in scientific notation (`6.0e3`).
pub fn format_kappa(kappa: f64) -> String {
    if !kappa.is_finite() {
        return format!("{kappa}");
    }
    if kappa.abs() < 1000.0 {
        let mag = if kappa == 0.0 { 0 } else { kappa.abs().log10().floor() as i32 };
        let decimals = (3 - mag).max(0) as usize;
        format!("{kappa:.decimals$}")
    } else {
        format!("{kappa:.1e}")
    }
}

pub fn format_h(refine: u32) -> String {
    format!("2^-{}", refine + 1)
}

impl ResultRow {
    fn cells(&self, timing: bool) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut c = vec![
            self.p.to_string(),
            opt(self.h.map(format_h)),
            opt(self.round.map(|r| r.to_string())),
            self.patches.to_string(),
            opt(self.iterations.map(|i| i.to_string())),
            opt(self.kappa.map(format_kappa)),
            self.dofs.to_string(),
        ];
        if timing {
            c.push(format!("{:.3}", self.wall_time));
        }
        c.push(self.status.as_str().to_string());
        c
    }
}

fn header(timing: bool) -> Vec<&'static str> {
    FIELDS.iter().copied().filter(|&f| timing || f != "wall_time").collect()
}

/// Header plus one record per row. `timing` adds the wall time column.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W, timing: bool) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header(timing))?;
    for row in rows {
        w.write_record(row.cells(timing))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path, timing: bool) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    write_csv(rows, file, timing)
}

/// Relative preconditioned residual and running condition estimate per iteration.
pub fn write_history<W: Write>(report: &SolveReport, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["iteration", "residual", "kappa"])?;
    let kappas = report.condition_history();
    for (i, r) in report.residuals.iter().enumerate() {
        let k = if i == 0 { String::new() } else { kappas.get(i - 1).map(|&k| format!("{k:e}")).unwrap_or_default() };
        w.write_record([i.to_string(), format!("{r:e}"), k])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_history(report: &SolveReport, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    write_history(report, file)
}

/// Right-aligned plain text table; always shows the wall time.
pub fn render_table(rows: &[ResultRow]) -> String {
    let head = header(true);
    let body: Vec<Vec<String>> = rows.iter().map(|r| r.cells(true)).collect();
    let widths: Vec<usize> = (0..head.len())
        .map(|j| body.iter().map(|r| r[j].len()).chain([head[j].len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut head.iter().copied());
    for r in &body {
        line(&mut r.iter().map(String::as_str));
    }
    s
}
