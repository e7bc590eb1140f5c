use std::fs;
use std::path::{Path, PathBuf};

use esbmix::mcmc::Dataset;
use serde::Serialize;

use crate::error::{io_err, CliError, Result};

/// Reads 1 or 2 numeric columns, one observation per row. Blank lines are
/// skipped; anything else that does not parse is reported with its line.
pub fn read_dataset(path: &Path, header: bool) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut dim = None;
    let mut values = Vec::new();
    let bad = |line: u64, msg: String| CliError::Data {
        path: path.to_path_buf(),
        line,
        msg,
    };
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let width = record.len();
        if !(1..=2).contains(&width) {
            return Err(bad(line, format!("expected 1 or 2 columns, found {width}")));
        }
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(bad(line, format!("expected {d} columns as on the first row, found {width}")));
            }
            _ => {}
        }
        for field in record.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| bad(line, format!("not a number: {field:?}")))?;
            if !x.is_finite() {
                return Err(bad(line, format!("non-finite value {field:?}")));
            }
            values.push(x);
        }
    }
    let Some(dim) = dim else {
        return Err(CliError::Invalid(format!("{} contains no observations", path.display())));
    };
    Ok(Dataset::new(dim, values)?)
}

/// In-memory CSV table with LF line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Csv(csv::Error::from(e.into_error())))
    }
}

/// Streams rows straight to a file.
pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvFile {
    pub fn create<S: AsRef<[u8]>>(path: PathBuf, header: &[S]) -> Result<Self> {
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(io_err(&self.path))?;
        Ok(self.path)
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Output directory with the files written so far.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.record(name);
        Ok(())
    }

    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
