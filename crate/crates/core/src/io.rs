//! Artifact output: little-endian `f64` arrays (complex values interleaved
//! as re, im), CSV tables and a JSON manifest listing every emitted file with
//! its SHA-256 checksum.
//!
//! Arrays are row-major with the last dimension fastest, so a vector field
//! on a grid is stored with dims `[3, nx, ny, nz]`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fields::{ComplexVectorField, RealVectorField};
use crate::{Error, Result, C64};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    /// Little-endian `f64`.
    F64Le,
    /// Little-endian `f64` pairs `(re, im)`.
    C64Le,
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub format: FileFormat,
    pub quantity: String,
    pub units: String,
    /// Array shape; empty for tables.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dim_names: Vec<String>,
    /// Storage form for two-photon amplitudes ("dense", "factored", ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<String>,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub tool_version: String,
    /// SHA-256 of the canonical JSON form of the run configuration.
    pub config_hash: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

/// Array metadata for the binary writers.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayMeta {
    pub quantity: String,
    pub units: String,
    pub dims: Vec<usize>,
    pub dim_names: Vec<String>,
    pub storage: Option<String>,
}

impl ArrayMeta {
    pub fn new(quantity: &str, units: &str, dims: &[usize], dim_names: &[&str]) -> Self {
        Self {
            quantity: quantity.into(),
            units: units.into(),
            dims: dims.to_vec(),
            dim_names: dim_names.iter().map(|s| s.to_string()).collect(),
            storage: None,
        }
    }

    pub fn with_storage(mut self, storage: &str) -> Self {
        self.storage = Some(storage.into());
        self
    }

    fn check(&self, len: usize) -> Result<()> {
        let n: usize = self.dims.iter().product();
        if n != len {
            return Err(Error::Format(format!(
                "{}: dims {:?} hold {n} values, got {len}",
                self.quantity, self.dims
            )));
        }
        if !self.dim_names.is_empty() && self.dim_names.len() != self.dims.len() {
            return Err(Error::Format(format!(
                "{}: {} dim names for {} dims",
                self.quantity,
                self.dim_names.len(),
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// Integers print plainly, everything else in round-trip exponent form.
fn csv_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:e}")
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

pub fn f64_le_bytes(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn c64_le_bytes(data: &[C64]) -> Vec<u8> {
    data.iter()
        .flat_map(|v| v.re.to_le_bytes().into_iter().chain(v.im.to_le_bytes()))
        .collect()
}

pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read_c64_le(path: &Path) -> Result<Vec<C64>> {
    let v = read_f64_le(path)?;
    if v.len() % 2 != 0 {
        return Err(Error::Format(format!(
            "{}: odd number of values for complex data",
            path.display()
        )));
    }
    Ok(v.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect())
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<FileEntry>,
}

impl OutputDir {
    /// Creates the directory if needed. A stale manifest from an earlier run
    /// is removed so the manifest only ever describes a finished run.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let stale = root.join(MANIFEST_NAME);
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        Ok(Self {
            root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[FileEntry] {
        &self.entries
    }

    fn emit(
        &mut self,
        name: &str,
        bytes: &[u8],
        format: FileFormat,
        meta: ArrayMeta,
    ) -> Result<()> {
        if name == MANIFEST_NAME || name.contains(['/', '\\']) {
            return Err(Error::Format(format!("invalid output name {name:?}")));
        }
        let mut w = BufWriter::new(fs::File::create(self.root.join(name))?);
        w.write_all(bytes)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        self.entries.push(FileEntry {
            path: name.into(),
            format,
            quantity: meta.quantity,
            units: meta.units,
            dims: meta.dims,
            dim_names: meta.dim_names,
            storage: meta.storage,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_real(&mut self, name: &str, meta: ArrayMeta, data: &[f64]) -> Result<()> {
        meta.check(data.len())?;
        self.emit(name, &f64_le_bytes(data), FileFormat::F64Le, meta)
    }

    pub fn write_complex(&mut self, name: &str, meta: ArrayMeta, data: &[C64]) -> Result<()> {
        meta.check(data.len())?;
        self.emit(name, &c64_le_bytes(data), FileFormat::C64Le, meta)
    }

    pub fn write_vector_field(
        &mut self,
        name: &str,
        quantity: &str,
        units: &str,
        f: &RealVectorField,
    ) -> Result<()> {
        let n = f.grid.n;
        let data: Vec<f64> = f.comps.iter().flatten().copied().collect();
        self.write_real(
            name,
            ArrayMeta::new(
                quantity,
                units,
                &[3, n[0], n[1], n[2]],
                &["component", "x", "y", "z"],
            ),
            &data,
        )
    }

    pub fn write_complex_vector_field(
        &mut self,
        name: &str,
        quantity: &str,
        units: &str,
        f: &ComplexVectorField,
    ) -> Result<()> {
        let n = f.grid.n;
        let data: Vec<C64> = f.comps.iter().flatten().copied().collect();
        self.write_complex(
            name,
            ArrayMeta::new(
                quantity,
                units,
                &[3, n[0], n[1], n[2]],
                &["component", "x", "y", "z"],
            ),
            &data,
        )
    }

    /// Writes a CSV table of numbers.
    pub fn write_csv(
        &mut self,
        name: &str,
        quantity: &str,
        header: &[&str],
        rows: &[Vec<f64>],
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_error)?;
        for r in rows {
            if r.len() != header.len() {
                return Err(Error::Format(format!(
                    "{name}: row of {} values for {} columns",
                    r.len(),
                    header.len()
                )));
            }
            w.write_record(r.iter().map(|&v| csv_number(v)))
                .map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        self.emit(
            name,
            &bytes,
            FileFormat::Csv,
            ArrayMeta::new(quantity, "internal", &[], &[]),
        )
    }

    pub fn write_text(&mut self, name: &str, quantity: &str, text: &str) -> Result<()> {
        self.emit(
            name,
            text.as_bytes(),
            FileFormat::Text,
            ArrayMeta::new(quantity, "", &[], &[]),
        )
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        quantity: &str,
        value: &T,
    ) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(value)?;
        self.emit(
            name,
            &bytes,
            FileFormat::Json,
            ArrayMeta::new(quantity, "internal", &[], &[]),
        )
    }

    /// Writes the manifest listing all files emitted so far. Call last.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.entries;
        let path = self.root.join(MANIFEST_NAME);
        let tmp = self.root.join(format!("{MANIFEST_NAME}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(&manifest)?)?;
        fs::rename(tmp, path)?;
        Ok(manifest)
    }
}

/// Re-reads every file listed in the manifest and compares checksums and
/// sizes. Returns the names of mismatching or missing files.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest: RunManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME))?)?;
    let mut bad = Vec::new();
    for e in &manifest.files {
        match fs::read(dir.join(&e.path)) {
            Ok(bytes) if bytes.len() as u64 == e.bytes && sha256_hex(&bytes) == e.sha256 => {}
            _ => bad.push(e.path.clone()),
        }
    }
    Ok(bad)
}
