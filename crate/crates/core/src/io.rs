//! CSV ingestion and emission. Output files start with one `#` comment line
//! (tool version, config digest, seed) followed by the header row; floats
//! use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::actuation::CalibrationSample;
use crate::error::{Error, Result};
use crate::gait::ImuSample;

pub const TOOL_VERSION: &str = concat!("exoknee ", env!("CARGO_PKG_VERSION"));

/// Provenance recorded in every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_digest: String,
    pub seed: u64,
}

impl Stamp {
    pub fn comment(&self) -> String {
        format!("# {TOOL_VERSION} config_sha256={} seed={}", self.config_digest, self.seed)
    }
}

pub struct CsvSink {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, stamp: &Stamp, header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "{}", stamp.comment())?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
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

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Shortest decimal string that parses back to the same `f64`: the
/// shorter of the positional and exponent forms.
pub fn num(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(Error::Argument(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            got.join(",")
        )));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Argument(format!("{}: data row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationSample>> {
    read_rows(path, &["current_a", "torque_nm"])
}

pub fn read_imu_csv(path: &Path) -> Result<Vec<ImuSample>> {
    read_rows(path, &["t_s", "omega_dps"])
}
