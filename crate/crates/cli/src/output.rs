//! CSV and metadata writers. Numbers are printed as `{:.16e}` so reruns
//! are byte-identical.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const SOLUTION_HEADER: [&str; 4] = ["t", "rho", "m", "u"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Flat `key = value` file, appended to as the run progresses.
pub struct Metadata {
    path: PathBuf,
    file: BufWriter<File>,
}

impl Metadata {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("metadata.txt");
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            path,
            file: BufWriter::new(file),
        })
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> Result<()> {
        writeln!(self.file, "{key} = {value}").with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn float(&mut self, key: &str, value: f64) -> Result<()> {
        self.put(key, num(value))
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) -> Result<()> {
        let joined: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.put(key, format!("[{}]", joined.join(", ")))
    }

    /// Pushes everything written so far to disk.
    pub fn flush(&mut self) -> Result<()> {
        self.file.flush().with_context(|| format!("writing {}", self.path.display()))
    }
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.writer
            .write_record(values.iter().map(|v| num(*v)))
            .with_context(|| format!("writing {}", self.path.display()))
    }

    /// Mixed row: integers and labels are written verbatim.
    pub fn record(&mut self, fields: &[String]) -> Result<()> {
        self.writer
            .write_record(fields)
            .with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().with_context(|| format!("writing {}", self.path.display()))
    }
}

/// One `t,rho,m,u` row per node of each row.
pub fn write_grid_rows(table: &mut Table, t: f64, nodes: &[f64], m: &[f64], u: &[f64]) -> Result<()> {
    for ((r, m), u) in nodes.iter().zip(m).zip(u) {
        table.row(&[t, *r, *m, *u])?;
    }
    Ok(())
}
