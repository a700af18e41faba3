//! Experiment runners: single instances, the parameter grid test bed and
//! the figure sweeps. Every runner returns [`Table`]s that are written as CSV.

pub mod config;
pub mod figures;
pub mod instance;
pub mod testbed;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use config::{Budget, ExperimentConfig, FigureConfig, Mode, TestbedConfig};
pub use instance::{run_instance, run_with_budget, InstanceReport, Method, QueueRecord};
pub use testbed::{run_testbed, ErrorBinReport, GridPoint, TestbedOutcome, GRID_SIZE};

/// Fixed-format numeric cell with 9 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Self {
        Table {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Column parsed as numbers; unparsable cells become NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| r[j].parse().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Write `<dir>/<name>.csv`, creating `dir` if needed.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.to_csv()?)?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Run `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run the experiment selected by `cfg.mode` and return its tables.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    cfg.validate()?;
    with_jobs(cfg.jobs, || match cfg.mode {
        Mode::Instance => {
            let spec = cfg.layered.as_ref().expect("validated");
            Ok(vec![run_with_budget(spec, cfg.method(), &cfg.budget, cfg.budget.seed)?.table()])
        }
        Mode::Testbed => Ok(run_testbed(&cfg.testbed, &cfg.budget, cfg.method()).tables()),
        Mode::Figure3 => Ok(vec![figures::figure3(cfg.figure.points)?]),
        Mode::Figure4 => Ok(vec![figures::figure4(cfg.figure.points, &cfg.budget, cfg.method())]),
        Mode::Figure5 => Ok(vec![figures::figure5(cfg.figure.points, &cfg.budget, cfg.method())]),
        Mode::Figure6 => Ok(vec![figures::figure6(cfg.figure.points, &cfg.budget, cfg.method())]),
        Mode::Figure7 => Ok(vec![figures::figure7(cfg.figure.points, &cfg.budget, cfg.method())]),
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_nine_significant_digits() {
        assert_eq!(num(2.2056315), "2.20563150e0");
        assert_eq!(num(-0.000123456789123), "-1.23456789e-4");
        assert_eq!(num(0.0), "0.00000000e0");
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new("t", vec!["a", "b"]);
        t.push(vec![num(1.0), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.00000000e0,\"x,y\"\n");
        assert_eq!(t.values("a"), vec![1.0]);
        assert!(t.values("c").is_empty());
    }
}
