//! Per-stage manifests: what a stage read, with which settings, and what it
//! wrote. A stage is a cache hit when all three still match.

use std::fmt::Write as _;
use std::path::Path;

use crate::artifact::{self, ArtifactMeta};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub stage: String,
    pub master_seed: u64,
    pub config_hash: String,
    /// Logical input name and content hash, sorted by name.
    pub inputs: Vec<(String, String)>,
    /// Path relative to the stage directory and content hash, sorted by path.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = ArtifactMeta::new("manifest").seed(self.master_seed).header_line();
        let _ = writeln!(out, "stage {}", self.stage);
        let _ = writeln!(out, "config {}", self.config_hash);
        for (name, h) in &self.inputs {
            let _ = writeln!(out, "input {name} {h}");
        }
        for (name, h) in &self.outputs {
            let _ = writeln!(out, "output {name} {h}");
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Manifest> {
        let bad = |m: &str| Error::artifact(path, m);
        let master_seed = text
            .lines()
            .next()
            .and_then(|l| l.split_whitespace().find_map(|w| w.strip_prefix("master_seed=")))
            .ok_or_else(|| bad("missing master_seed"))?;
        let master_seed = artifact::parse_field(path, master_seed, "master_seed")?;
        let mut m = Manifest {
            stage: String::new(),
            master_seed,
            config_hash: String::new(),
            inputs: vec![],
            outputs: vec![],
        };
        for line in artifact::body_lines(text) {
            let mut parts = line.splitn(3, ' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some("stage"), Some(s), None) => m.stage = s.to_string(),
                (Some("config"), Some(h), None) => m.config_hash = h.to_string(),
                (Some("input"), Some(n), Some(h)) => m.inputs.push((n.to_string(), h.to_string())),
                (Some("output"), Some(n), Some(h)) => m.outputs.push((n.to_string(), h.to_string())),
                _ => return Err(bad(&format!("unrecognized line '{line}'"))),
            }
        }
        if m.stage.is_empty() || m.config_hash.is_empty() {
            return Err(bad("missing stage or config line"));
        }
        Ok(m)
    }

    /// Read `dir/manifest.txt`; `None` when the file does not exist.
    pub fn read(dir: &Path) -> Result<Option<(Manifest, String)>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = artifact::read_to_string(&path)?;
        Ok(Some((Manifest::parse(&path, &text)?, text)))
    }

    /// True when every recorded output exists with the recorded hash.
    pub fn outputs_intact(&self, dir: &Path) -> bool {
        self.outputs.iter().all(|(name, h)| {
            artifact::sha256_file(&dir.join(name)).is_ok_and(|actual| &actual == h)
        })
    }
}

/// Short digest of a stage's inputs, used in artifact headers.
pub fn inputs_digest(inputs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (n, h) in inputs {
        let _ = writeln!(s, "{n} {h}");
    }
    artifact::sha256_hex(s.as_bytes())[..16].to_string()
}
