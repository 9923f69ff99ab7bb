//! Dataset manifests (TOML) and whole-dataset ingestion and emission.
//!
//! ```toml
//! dt_seconds = 0.001
//!
//! [[channel]]
//! name = "input.v_S"
//! role = "input"
//! subsystem = ""
//!
//! [[realization]]
//! file = "realization_000.csv"
//! dt_seconds = 0.001   # optional, must match
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stateselect_core::data::{ChannelMeta, ChannelRole, TimeSeriesDataset};

use crate::csvio::{read_realization, write_realization};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub name: String,
    pub role: String,
    #[serde(default)]
    pub subsystem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationEntry {
    pub file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dt_seconds: f64,
    #[serde(default, rename = "channel")]
    pub channels: Vec<ChannelEntry>,
    #[serde(default, rename = "realization")]
    pub realizations: Vec<RealizationEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.message()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn channel_meta(&self) -> Result<Vec<ChannelMeta>> {
        let mut out: Vec<ChannelMeta> = Vec::with_capacity(self.channels.len());
        for c in &self.channels {
            if out.iter().any(|m| m.name == c.name) {
                return Err(Error::DuplicateChannel(c.name.clone()));
            }
            let role = ChannelRole::parse(&c.role)
                .ok_or_else(|| Error::Invalid(format!("channel `{}` has unknown role `{}`", c.name, c.role)))?;
            let mut meta = ChannelMeta::new(c.name.clone(), role, c.subsystem.clone());
            meta.formula = c.formula.clone();
            out.push(meta);
        }
        Ok(out)
    }

    pub fn from_dataset(ds: &TimeSeriesDataset, files: Vec<PathBuf>) -> Self {
        Manifest {
            dt_seconds: ds.dt(),
            channels: ds
                .manifest()
                .iter()
                .map(|c| ChannelEntry {
                    name: c.name.clone(),
                    role: c.role.as_str().into(),
                    subsystem: c.subsystem.clone(),
                    formula: c.formula.clone(),
                })
                .collect(),
            realizations: files
                .into_iter()
                .map(|file| RealizationEntry {
                    file,
                    dt_seconds: None,
                })
                .collect(),
        }
    }
}

fn same_dt(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Loads the realizations listed in the manifest (paths relative to it).
pub fn ingest(manifest_path: &Path) -> Result<TimeSeriesDataset> {
    ingest_files(manifest_path, &[])
}

/// Loads `data_paths` in order, or the manifest's own list when empty.
pub fn ingest_files(manifest_path: &Path, data_paths: &[PathBuf]) -> Result<TimeSeriesDataset> {
    let manifest = Manifest::load(manifest_path)?;
    let meta = manifest.channel_meta()?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let entries: Vec<RealizationEntry> = if data_paths.is_empty() {
        manifest
            .realizations
            .iter()
            .map(|r| RealizationEntry {
                file: base.join(&r.file),
                dt_seconds: r.dt_seconds,
            })
            .collect()
    } else {
        data_paths
            .iter()
            .map(|p| RealizationEntry {
                file: p.clone(),
                dt_seconds: None,
            })
            .collect()
    };
    if entries.is_empty() {
        return Err(Error::format(manifest_path, "no realization files listed"));
    }
    let mut realizations = Vec::with_capacity(entries.len());
    for r in &entries {
        if let Some(dt) = r.dt_seconds {
            if !same_dt(dt, manifest.dt_seconds) {
                return Err(Error::DtMismatch {
                    path: r.file.clone(),
                    declared: manifest.dt_seconds,
                    found: dt,
                });
            }
        }
        realizations.push(read_realization(&r.file, &meta)?);
    }
    Ok(TimeSeriesDataset::new(manifest.dt_seconds, meta, realizations)?)
}

/// Creates `dir` (or checks that replacing its contents is allowed).
pub fn prepare_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() {
        let occupied = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if occupied && !overwrite {
            return Err(Error::OutputExists(dir.into()));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `realization_NNN.csv` files plus `manifest.toml` into `dir`;
/// returns the manifest path.
pub fn write_dataset(dir: &Path, ds: &TimeSeriesDataset) -> Result<PathBuf> {
    let names: Vec<String> = ds.manifest().iter().map(|c| c.name.clone()).collect();
    let mut files = Vec::new();
    for (r, m) in ds.realizations().iter().enumerate() {
        let file = PathBuf::from(format!("realization_{r:03}.csv"));
        write_realization(&dir.join(&file), &names, m)?;
        files.push(file);
    }
    let path = dir.join(MANIFEST_FILE);
    Manifest::from_dataset(ds, files).save(&path)?;
    Ok(path)
}
