//! Column-oriented numeric tables backed by CSV files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::master_equation::Trajectory;

/// Named columns of equal length. Values are written with 17 significant
/// digits so a read-back reproduces every bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            headers: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) {
        self.headers.push(name.to_string());
        self.columns.push(values);
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// `t`, the four observables, then the diagnostics.
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let mut table = Table::new();
        table.push_column("t", traj.times.clone());
        for name in ["jz", "jz2", "jy", "jx", "trace_err", "herm_err", "min_eig"] {
            if let Some(col) = traj.column(name) {
                table.push_column(name, col.to_vec());
            }
        }
        table
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for r in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| format!("{:.16e}", c[r])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (col, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: row + 2,
                    column: col + 1,
                    message: format!("'{field}' is not a number in {}", path.display()),
                })?;
                columns[col].push(v);
            }
        }
        Ok(Self { headers, columns })
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}
