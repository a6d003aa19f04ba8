use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use treelab::{Dyadic, ReferenceMachine};

use crate::{CliError, Format, Outcome, Status};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments that reproduce the run, without the output directory.
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub machine_digest: String,
    pub status: Status,
    /// Exact measures as `numerator/2^exponent`.
    pub measures: BTreeMap<String, String>,
    pub results: BTreeMap<String, serde_json::Value>,
    /// sha256 of every file written next to the manifest.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn machine_digest(machine: &ReferenceMachine) -> String {
    sha256_hex(machine.to_json().as_bytes())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Write `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(&target, e))?;
    tmp.persist(&target).map_err(|e| io_err(&target, e.error))?;
    Ok(())
}

pub fn rows_text<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows).expect("serializable rows");
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Io(format!("csv: {e}")))?;
            }
            w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))
        }
    }
}

pub fn json_text<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

/// The files of one command run and the manifest that describes them.
pub struct RunOutput {
    dir: PathBuf,
    format: Format,
    manifest: Manifest,
}

impl RunOutput {
    pub fn new(
        dir: &Path,
        command: &str,
        argv: Vec<String>,
        params: serde_json::Value,
        seed: Option<u64>,
        machine: &ReferenceMachine,
        format: Format,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(RunOutput {
            dir: dir.to_path_buf(),
            format,
            manifest: Manifest {
                tool: "treelab".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                argv,
                params,
                seed,
                machine_digest: machine_digest(machine),
                status: Status::Ok,
                measures: BTreeMap::new(),
                results: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = bytes.as_ref();
        write_atomic(&self.dir, name, bytes)?;
        self.manifest.outputs.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    /// `stem.json` or `stem.csv` depending on the format.
    pub fn rows<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        let ext = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        let bytes = rows_text(rows, self.format)?;
        self.write(&format!("{stem}.{ext}"), bytes)
    }

    pub fn measure(&mut self, name: &str, value: &Dyadic) {
        self.manifest.measures.insert(name.into(), value.to_string());
    }

    pub fn result<T: Serialize>(&mut self, name: &str, value: T) {
        let v = serde_json::to_value(value).expect("serializable");
        self.manifest.results.insert(name.into(), v);
    }

    pub fn finish(mut self, status: Status) -> Result<Outcome, CliError> {
        self.manifest.status = status;
        write_atomic(&self.dir, MANIFEST, &json_text(&self.manifest))?;
        Ok(Outcome {
            status,
            summary: serde_json::json!({
                "command": self.manifest.command,
                "status": status,
                "out": self.dir.display().to_string(),
                "outputs": self.manifest.outputs.keys().collect::<Vec<_>>(),
            }),
        })
    }
}
