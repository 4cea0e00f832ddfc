//! Shared file plumbing: metadata header lines, hashing and CSV access.
//!
//! Text artifacts start with one or more `#` lines carrying the format
//! version, master seed and input hashes. Readers skip them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Provenance embedded at the top of every artifact file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArtifactMeta {
    pub kind: String,
    pub master_seed: Option<u64>,
    pub inputs: Vec<String>,
}

impl ArtifactMeta {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            master_seed: None,
            inputs: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.master_seed = Some(seed);
        self
    }

    pub fn input(mut self, hash: impl Into<String>) -> Self {
        self.inputs.push(hash.into());
        self
    }

    pub fn header_line(&self) -> String {
        let mut s = format!("# ictrait {} format={}", self.kind, FORMAT_VERSION);
        if let Some(seed) = self.master_seed {
            let _ = write!(s, " master_seed={seed}");
        }
        if !self.inputs.is_empty() {
            let _ = write!(s, " inputs={}", self.inputs.join(","));
        }
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Lines of a text artifact with the leading `#` metadata lines removed.
pub fn body_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().skip_while(|l| l.starts_with('#'))
}

pub fn csv_writer(meta: &ArtifactMeta) -> (String, csv::Writer<Vec<u8>>) {
    (
        meta.header_line(),
        csv::WriterBuilder::new().from_writer(Vec::new()),
    )
}

/// Render a CSV artifact: metadata line followed by the records.
pub fn render_csv<I, R>(meta: &ArtifactMeta, header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let (head, mut w) = csv_writer(meta);
    w.write_record(header)
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    let mut out = head.into_bytes();
    out.extend_from_slice(&body);
    Ok(out)
}

/// Header plus records of a CSV artifact.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::artifact(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::artifact(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn parse_field<T: std::str::FromStr>(path: &Path, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::artifact(path, format!("bad {what}: '{field}'")))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_carries_seed_and_inputs() {
        let m = ArtifactMeta::new("grid").seed(7).input("ab").input("cd");
        assert_eq!(
            m.header_line(),
            "# ictrait grid format=1 master_seed=7 inputs=ab,cd\n"
        );
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
