//! Deterministic result emission.
//!
//! Sweeps render as CSV (header row, one data row per point, shortest
//! round-trip float formatting); single runs render as JSON reports.
//! Occupation states serialize as occupation-vector → [re, im] pairs and
//! density matrices as row-major [re, im] arrays with a dimension field.
//! Identical runs produce byte-identical output: no timestamps, fixed key
//! and row orders. Probabilities and density matrices are validated before
//! anything is written.

use std::collections::BTreeMap;
use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use specmode::optics::DensityOperator;
use specmode::{Error, Result};

/// Relative output paths land under this directory when the variable is set.
pub const OUT_DIR_ENV: &str = "SPECMODE_OUT_DIR";

/// Tolerance slack for emitted probabilities and Hermiticity.
const EMIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Column names whose values must be valid probabilities.
const PROBABILITY_COLUMNS: [&str; 6] =
    ["p_c", "p_4a", "p_4a_closed", "p_m", "probability", "purity"];

/// A rectangular numeric result: sweeps, diagonals, coefficient tables.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>, rows: Vec<Vec<f64>>) -> Self {
        Self { columns, rows }
    }

    fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if row.len() != self.columns.len() {
                return Err(Error::Usage(format!(
                    "internal: row of width {} in a {}-column table",
                    row.len(),
                    self.columns.len()
                )));
            }
            for (name, &value) in self.columns.iter().zip(row) {
                if !value.is_finite() {
                    return Err(Error::Usage(format!("emitted {name} is not finite: {value}")));
                }
                if PROBABILITY_COLUMNS.contains(name)
                    && !(-EMIT_TOL..=1.0 + EMIT_TOL).contains(&value)
                {
                    return Err(Error::Usage(format!(
                        "emitted {name} is not a probability: {value}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn to_csv(&self) -> String {
        let mut text = self.columns.join(",");
        text.push('\n');
        for row in &self.rows {
            for (i, value) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                let _ = write!(text, "{value}");
            }
            text.push('\n');
        }
        text
    }

    fn to_json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows,
        })
    }
}

/// What one experiment run produced: a JSON report and a CSV projection of
/// it, plus which of the two is the natural rendering.
#[derive(Debug, Clone)]
pub struct Outcome {
    report: Value,
    table: Table,
    default_format: Format,
}

impl Outcome {
    /// A sweep or table dump: CSV by default, JSON mirrors the table.
    pub fn sweep(table: Table) -> Self {
        let report = table.to_json();
        Self { report, table, default_format: Format::Csv }
    }

    /// A single-run report: JSON by default, CSV carries the scalar row.
    pub fn single(report: Value, table: Table) -> Self {
        Self { report, table, default_format: Format::Json }
    }

    /// A table dump whose JSON rendering is richer than the bare rows.
    pub fn table_with_report(report: Value, table: Table) -> Self {
        Self { report, table, default_format: Format::Csv }
    }

    pub fn render(&self, format: Option<Format>) -> Result<String> {
        self.table.validate()?;
        match format.unwrap_or(self.default_format) {
            Format::Csv => Ok(self.table.to_csv()),
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&self.report)
                    .map_err(|e| Error::Usage(format!("internal: JSON encoding failed: {e}")))?;
                text.push('\n');
                Ok(text)
            }
        }
    }
}

pub fn complex_value(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Occupation-keyed amplitudes as `"n_1,n_2,…" → [re, im]`, keys in
/// lexicographic occupation order.
pub fn occupation_value(amplitudes: &BTreeMap<Vec<usize>, Complex64>) -> Value {
    let mut map = Map::new();
    for (occupation, &amplitude) in amplitudes {
        let key = occupation.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        map.insert(key, complex_value(amplitude));
    }
    Value::Object(map)
}

/// Density matrix as a row-major list of [re, im] pairs plus its dimension;
/// Hermiticity and diagonal-probability checks run before serialization.
pub fn density_value(rho: &DensityOperator) -> Result<Value> {
    let d = rho.dimension();
    for i in 0..d {
        let p = rho.element(i, i).re;
        if !(-EMIT_TOL..=1.0 + EMIT_TOL).contains(&p) {
            return Err(Error::Usage(format!(
                "emitted density diagonal [{i}] is not a probability: {p}"
            )));
        }
        for j in 0..d {
            let defect = (rho.element(i, j) - rho.element(j, i).conj()).norm();
            if defect > EMIT_TOL {
                return Err(Error::Usage(format!(
                    "emitted density matrix is not Hermitian: defect {defect:.3e} at ({i},{j})"
                )));
            }
        }
    }
    if (rho.trace() - 1.0).abs() > EMIT_TOL {
        return Err(Error::Usage(format!("emitted density trace is {}", rho.trace())));
    }
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(complex_value(rho.element(i, j)));
        }
    }
    Ok(json!({
        "dimension": d,
        "matrix": entries,
    }))
}

/// Validates a scalar probability on its way into a JSON report.
pub fn probability_value(name: &str, p: f64) -> Result<Value> {
    if !(-EMIT_TOL..=1.0 + EMIT_TOL).contains(&p) {
        return Err(Error::Usage(format!("emitted {name} is not a probability: {p}")));
    }
    Ok(json!(p))
}

/// Final output destination: an explicit `--out`, else the configured path,
/// else standard output. Relative file paths resolve under
/// [`OUT_DIR_ENV`] when set.
pub fn resolve_target(out_flag: Option<&Path>, config_path: &str) -> Option<PathBuf> {
    let path: PathBuf = match out_flag {
        Some(p) => p.to_path_buf(),
        None if config_path.is_empty() => return None,
        None => PathBuf::from(config_path),
    };
    if path.is_relative() {
        if let Ok(dir) = env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return Some(PathBuf::from(dir).join(path));
            }
        }
    }
    Some(path)
}

pub fn write_text(text: &str, target: Option<&Path>) -> Result<()> {
    match target {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write output {}: {e}", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_table() -> Table {
        Table::new(vec!["tau", "p_c"], vec![vec![0.0, 0.0], vec![0.5, 0.25]])
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let text = Outcome::sweep(simple_table()).render(None).unwrap();
        assert_eq!(text, "tau,p_c\n0,0\n0.5,0.25\n");
    }

    #[test]
    fn json_mirror_of_a_sweep_keeps_rows() {
        let text = Outcome::sweep(simple_table()).render(Some(Format::Json)).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["columns"][1], "p_c");
        assert_eq!(value["rows"][1][1], 0.25);
    }

    #[test]
    fn probability_columns_are_validated() {
        let bad = Table::new(vec!["p_c"], vec![vec![1.5]]);
        assert!(Outcome::sweep(bad).render(None).is_err());
        let fine = Table::new(vec!["n4"], vec![vec![24.0]]);
        assert!(Outcome::sweep(fine).render(None).is_ok());
    }

    #[test]
    fn non_finite_values_are_refused() {
        let bad = Table::new(vec!["gamma"], vec![vec![f64::NAN]]);
        assert!(Outcome::sweep(bad).render(None).is_err());
    }

    #[test]
    fn occupation_keys_join_with_commas() {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(vec![0, 2, 1], Complex64::new(0.5, -0.5));
        let value = occupation_value(&amplitudes);
        assert_eq!(value["0,2,1"], json!([0.5, -0.5]));
    }

    #[test]
    fn relative_paths_resolve_under_the_env_dir() {
        // Serialized against other env-dependent tests by touching a
        // process-wide variable; unique name keeps it safe.
        env::set_var(OUT_DIR_ENV, "/tmp/specmode-test-out");
        let target = resolve_target(None, "runs/a.csv").unwrap();
        assert_eq!(target, PathBuf::from("/tmp/specmode-test-out/runs/a.csv"));
        let absolute = resolve_target(Some(Path::new("/data/b.json")), "runs/a.csv").unwrap();
        assert_eq!(absolute, PathBuf::from("/data/b.json"));
        env::remove_var(OUT_DIR_ENV);
        assert!(resolve_target(None, "").is_none());
    }
}
