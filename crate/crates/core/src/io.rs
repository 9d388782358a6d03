//! On-disk formats.
//!
//! A bundle is a JSON manifest plus one headerless comma-separated file per
//! machine, `T` rows by `d` columns. Combined samples use the same matrix
//! format. Numbers are written with 17 significant digits so a write/read
//! cycle is bit-exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::{CombinedSamples, Seed, SubposteriorBundle};
use crate::error::{Error, Result};

pub const CREATED_BY: &str = concat!("mcmc-combine ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub d: usize,
    #[serde(rename = "T")]
    pub draws: usize,
    #[serde(rename = "M")]
    pub machines: usize,
    /// Paths relative to the manifest's directory.
    pub machine_files: Vec<String>,
    pub created_by: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileMissing(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

#[inline]
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `rows` rows of `cols` values taken from a row-major slice.
pub fn write_matrix(path: &Path, values: &[f64], cols: usize) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for row in values.chunks_exact(cols) {
        let line = row
            .iter()
            .map(|v| format_value(*v))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Parsed headerless matrix: row-major values, row count, column count.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                file: path.to_path_buf(),
                line: line_no + 1,
                column: col + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Parse {
                    file: path.to_path_buf(),
                    line: line_no + 1,
                    column: count.min(c) + 1,
                    message: format!("expected {c} fields, found {count}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(Matrix {
        values,
        rows,
        cols: cols.unwrap_or(0),
    })
}

pub fn write_combined(path: &Path, samples: &CombinedSamples) -> Result<()> {
    write_matrix(path, samples.as_slice(), samples.dim())
}

pub fn read_combined(path: &Path) -> Result<CombinedSamples> {
    let m = read_matrix(path)?;
    if m.rows == 0 {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "empty sample file".into(),
        });
    }
    CombinedSamples::new(m.values, m.cols, m.rows)
}

pub fn machine_file_name(m: usize) -> String {
    format!("machine_{:03}.csv", m + 1)
}

/// Writes one matrix file per machine plus `manifest_name` into `dir`.
/// Returns the manifest path.
pub fn write_bundle(
    dir: &Path,
    manifest_name: &str,
    bundle: &SubposteriorBundle,
    seed: Option<Seed>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::with_capacity(bundle.machines());
    for m in 0..bundle.machines() {
        let name = machine_file_name(m);
        write_matrix(&dir.join(&name), bundle.machine(m), bundle.dim())?;
        files.push(name);
    }
    let manifest = BundleManifest {
        d: bundle.dim(),
        draws: bundle.draws(),
        machines: bundle.machines(),
        machine_files: files,
        created_by: CREATED_BY.to_string(),
        seed: seed.map(|s| s.0),
    };
    let path = dir.join(manifest_name);
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest types serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<BundleManifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_bundle(manifest_path: &Path) -> Result<SubposteriorBundle> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.machine_files.len() != manifest.machines {
        return Err(Error::dims(
            format!("machine file list of {}", manifest_path.display()),
            manifest.machines,
            manifest.machine_files.len(),
        ));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut values = Vec::with_capacity(manifest.d * manifest.draws * manifest.machines);
    for name in &manifest.machine_files {
        let path = base.join(name);
        let m = read_matrix(&path)?;
        if m.rows != manifest.draws {
            return Err(Error::dims(
                format!("row count of {}", path.display()),
                manifest.draws,
                m.rows,
            ));
        }
        if m.cols != manifest.d {
            return Err(Error::dims(
                format!("column count of {}", path.display()),
                manifest.d,
                m.cols,
            ));
        }
        values.extend(m.values);
    }
    SubposteriorBundle::new(values, manifest.d, manifest.draws, manifest.machines)
}
