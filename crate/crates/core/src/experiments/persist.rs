//! Run directories: `manifest.json`, `records.csv`, `snapshots/NNNNN.bin`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ObservationRecord;
use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::integrator::StepConfig;
use crate::model::State;

pub const CODE_VERSION: &str = concat!("nlwave ", env!("CARGO_PKG_VERSION"));

pub const RECORD_HEADER: [&str; 12] = [
    "t", "E_total", "E_kin", "E_el", "E_pot", "E_force", "l2_u", "l2_v", "h1_u", "V_eps", "resid", "tail_frac",
];

/// Snapshot layout: magic, `u64` LE mode count `n`, `f64` LE time, then
/// `n` position and `n` velocity coefficients as `f64` LE.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"NLWSNAP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub basis: BasisSpec,
    pub step: StepConfig,
    pub seed: u64,
    pub code_version: String,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// SHA-256 of the compact JSON form with object keys sorted, so the digest
/// ignores field order in the source.
pub fn canonical_digest<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // serde_json::Value keeps objects in a BTreeMap, which sorts keys
    let value = serde_json::to_value(value).map_err(|e| Error::Input(format!("cannot serialize for digest: {e}")))?;
    let text = serde_json::to_string(&value).map_err(|e| Error::Input(e.to_string()))?;
    Ok(format!("{:x}", Sha256::digest(text.as_bytes())))
}

/// Writes a complete run directory. The manifest's output list is replaced
/// by the files actually written.
pub fn persist_run(
    manifest: &RunManifest,
    records: &[ObservationRecord],
    snapshots: &[State],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let records_path = out_dir.join("records.csv");
    write_records(&records_path, records)?;
    written.push(records_path);

    if !snapshots.is_empty() {
        let dir = out_dir.join("snapshots");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, s) in snapshots.iter().enumerate() {
            let path = dir.join(format!("{i:05}.bin"));
            write_snapshot(&path, s)?;
            written.push(path);
        }
    }

    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = manifest.clone();
    manifest.outputs = written
        .iter()
        .map(|p| p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
        .collect();
    manifest.outputs.insert(0, "manifest.json".into());
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Input(e.to_string()))?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    written.insert(0, manifest_path);
    Ok(written)
}

/// Values are written with Rust's shortest round-trip formatting, so
/// loading gives back the same bits.
pub fn write_records(path: &Path, records: &[ObservationRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(path, e.into());
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record(r.columns().iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_records(path: &Path) -> Result<Vec<ObservationRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers().map_err(|e| Error::io(path, e.into()))?;
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::Input(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| Error::io(path, e.into()))?;
        let mut cols = [0.0; 12];
        if row.len() != cols.len() {
            return Err(Error::Input(format!("{}: row {} has {} columns", path.display(), line + 2, row.len())));
        }
        for (c, field) in cols.iter_mut().zip(row.iter()) {
            *c = field
                .parse()
                .map_err(|_| Error::Input(format!("{}: row {}: bad number '{field}'", path.display(), line + 2)))?;
        }
        out.push(ObservationRecord::from_columns(cols));
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let mut bytes = Vec::with_capacity(24 + 16 * state.len());
    bytes.extend_from_slice(SNAPSHOT_MAGIC);
    bytes.extend_from_slice(&(state.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&state.time.to_le_bytes());
    for v in state.a.iter().chain(&state.b) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |what: &str| Error::Input(format!("{}: {what}", path.display()));
    if bytes.len() < 24 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad("not a snapshot file"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() != 24 + 16 * n {
        return Err(bad("truncated or oversized snapshot"));
    }
    let time = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let values: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(State {
        a: values[..n].to_vec(),
        b: values[n..].to_vec(),
        time,
    })
}
