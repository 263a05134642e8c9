use crate::{Failure, Format};
use serde_json::Value;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Where a command's main report goes.
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, format: Format) -> Self {
        Sink { path, format }
    }

    /// Runs `f` against the target, buffered; stdout when no path was given.
    pub fn with_writer<F>(&self, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
    {
        match &self.path {
            Some(p) => write_file(p, f),
            None => {
                let stdout = io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                f(&mut w)?;
                w.flush().map_err(|e| Failure::io(Path::new("<stdout>"), e))
            }
        }
    }

    pub fn json(&self, report: &Value) -> Result<(), Failure> {
        self.with_writer(|w| write_json(w, report))
    }
}

pub fn write_file<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
{
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Failure::io(path, e))
}

pub fn write_json(w: &mut dyn Write, report: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Failure::usage(e.to_string()))?;
    writeln!(w, "{text}").map_err(|e| Failure::io(Path::new("<output>"), e))
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}
