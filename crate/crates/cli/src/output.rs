use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub numeric: bool,
}

impl Failure {
    pub fn input(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            numeric: false,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.numeric {
            EXIT_NUMERIC
        } else {
            EXIT_INPUT
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<cloudnoise::Error> for Failure {
    fn from(e: cloudnoise::Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
            numeric: e.is_numeric(),
        }
    }
}

/// Output directory that remembers what was written to it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| cloudnoise::Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Path for a new output file, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.file(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::input("serialize", e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| cloudnoise::Error::io(&path, e).into())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), Failure> {
        let path = self.file(name);
        let csv_err = |e: csv::Error| Failure::input("io", format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| cloudnoise::Error::io(&path, e).into())
    }

    pub fn into_written(self) -> Vec<String> {
        self.written
    }
}
