//! Experiment harness behind the `widthlab` binary: parses a TOML
//! configuration, runs one experiment, and writes `<kind>.csv` and
//! `<kind>_report.txt`.
//!
//! Exit status is 0 when every check passes, 2 when a check fails and 1 on
//! any error.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use widthlab::experiments::{self as ex, Cell, Outcome, Table};

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("run: {0}")]
    Run(#[from] widthlab::Error),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    FixedB,
    VariableB,
    UpperBound,
    RhsInvariance,
    Convolution,
    RbElliptic,
    SvdTransport,
    Riemann,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::FixedB,
        Kind::VariableB,
        Kind::UpperBound,
        Kind::RhsInvariance,
        Kind::Convolution,
        Kind::RbElliptic,
        Kind::SvdTransport,
        Kind::Riemann,
    ];

    /// Subcommand, config section and output file stem.
    pub fn name(self) -> &'static str {
        match self {
            Kind::FixedB => "fixed-b",
            Kind::VariableB => "variable-b",
            Kind::UpperBound => "upper-bound",
            Kind::RhsInvariance => "rhs-invariance",
            Kind::Convolution => "convolution",
            Kind::RbElliptic => "rb-elliptic",
            Kind::SvdTransport => "svd-transport",
            Kind::Riemann => "riemann",
        }
    }
}

fn missing(kind: Kind) -> CliError {
    CliError::Config(format!("missing section [{}]", kind.name()))
}

/// Runs the experiment named by `kind` from its section of `cfg`.
pub fn run(kind: Kind, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let out = match kind {
        Kind::FixedB => ex::fixed_b(&cfg.fixed_b.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
        Kind::VariableB => ex::variable_b(&cfg.variable_b.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
        Kind::UpperBound => ex::upper_bound(&cfg.upper_bound.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
        Kind::RhsInvariance => {
            ex::rhs_invariance(&cfg.rhs_invariance.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?
        }
        Kind::Convolution => ex::convolution(&cfg.convolution.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
        Kind::RbElliptic => ex::rb_elliptic(&cfg.rb_elliptic.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
        Kind::SvdTransport => {
            ex::svd_transport(&cfg.svd_transport.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?
        }
        Kind::Riemann => ex::riemann(&cfg.riemann.as_ref().ok_or_else(|| missing(kind))?.resolve()?)?,
    };
    Ok(out)
}

/// Reals with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(r) => format_real(*r),
    }
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv_string(table: &Table) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        if row.len() != table.header.len() {
            return Err(CliError::Io(format!(
                "row has {} cells, header has {}",
                row.len(),
                table.header.len()
            )));
        }
        w.write_record(row.iter().map(format_cell)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Tables longer than this stay in the CSV only.
const REPORT_TABLE_ROWS: usize = 32;

/// Plain-text report: checks with their measurements, short tables, then
/// summary lines. Wall time is left out so reruns are byte-identical.
pub fn report_string(outcome: &Outcome) -> String {
    let mut s = format!("experiment: {}\n", outcome.kind);
    s.push_str(&format!("status: {}\n\nchecks:\n", if outcome.passed() { "pass" } else { "FAIL" }));
    for c in &outcome.checks {
        s.push_str(&format!(
            "  [{}] {}: {}\n",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.measured
        ));
    }
    if !outcome.table.rows.is_empty() && outcome.table.rows.len() <= REPORT_TABLE_ROWS {
        s.push_str(&format!("\nrows:\n  {}\n", outcome.table.header.join(" ")));
        for row in &outcome.table.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            s.push_str(&format!("  {}\n", cells.join(" ")));
        }
    }
    if !outcome.summary.is_empty() {
        s.push_str("\nsummary:\n");
        for (k, v) in &outcome.summary {
            s.push_str(&format!("  {k}: {v}\n"));
        }
    }
    s
}

/// Writes `<dir>/<kind>.csv` and `<dir>/<kind>_report.txt`.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", outcome.kind));
    let report_path = dir.join(format!("{}_report.txt", outcome.kind));
    fs::write(&csv_path, csv_string(&outcome.table)?).map_err(|e| io(&csv_path, e))?;
    fs::write(&report_path, report_string(outcome)).map_err(|e| io(&report_path, e))?;
    Ok((csv_path, report_path))
}

/// Parses `WIDTHLAB_THREADS`; `None` when unset.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("WIDTHLAB_THREADS: expected a positive integer, got \"{v}\""))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table {
            header: vec!["h".into(), "n".into(), "epsilon".into(), "n_ent".into()],
            rows: vec![],
        };
        assert_eq!(csv_string(&t).unwrap(), "h,n,epsilon,n_ent\n");
    }

    #[test]
    fn one_row_has_seventeen_digits() {
        let t = Table {
            header: vec!["h".into(), "n".into(), "epsilon".into(), "n_ent".into()],
            rows: vec![vec![Cell::Real(0.1), Cell::Int(3), Cell::Real(1.0 / 3.0), Cell::Int(2)]],
        };
        let s = csv_string(&t).unwrap();
        assert_eq!(
            s,
            "h,n,epsilon,n_ent\n1.0000000000000001e-1,3,3.3333333333333331e-1,2\n"
        );
        let parsed: f64 = "3.3333333333333331e-1".parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let t = Table {
            header: vec!["a".into()],
            rows: vec![vec![Cell::Int(1), Cell::Int(2)]],
        };
        assert!(csv_string(&t).is_err());
    }

    #[test]
    fn thread_cap_parsing() {
        assert_eq!(thread_cap(None).unwrap(), None);
        assert_eq!(thread_cap(Some("4")).unwrap(), Some(4));
        assert!(thread_cap(Some("0")).is_err());
        assert!(thread_cap(Some("many")).is_err());
    }

    #[test]
    fn kind_names_are_distinct() {
        let mut names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 8);
    }
}
