//! CSV and summary writers. Floats are written with 17 significant digits so
//! every value round-trips.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use csv::Writer;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// An output directory; every file is written by this single owner.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str, header: &[String]) -> io::Result<Table> {
        let mut w = Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        Ok(Table { w })
    }

    pub fn text(&self, name: &str, body: &str) -> io::Result<()> {
        let mut f = File::create(self.path(name))?;
        f.write_all(body.as_bytes())
    }
}

pub struct Table {
    w: Writer<File>,
}

impl Table {
    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.w.flush()
    }
}

/// `prefix1, …, prefixn`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
