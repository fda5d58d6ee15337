//! On-disk ensemble format: a directory holding `manifest.json` plus one
//! binary weight file per member.
//!
//! Weight file layout: magic `EDDE`, a format version byte, the number of
//! weight layers and the layer dimensions as little-endian `u32`, then all
//! parameters as little-endian IEEE-754 `f64` in layer order, each layer's
//! weights (row-major) before its biases. Round-trips are bit-exact.

use std::path::Path;

use edde_core::boosting::{Ensemble, EnsembleMember};
use edde_core::nn::{Architecture, BaseNetwork};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"EDDE";
pub const FORMAT_VERSION: u8 = 1;

/// Per-feature normalization statistics recorded in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Everything needed to reload and reproduce an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u8,
    pub method: String,
    pub architecture: Architecture,
    /// Number of members actually kept.
    pub t: usize,
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub beta: f64,
    pub seed: u64,
    /// Per-member parameter-draw seeds, for bit-exact reconstruction.
    pub member_seeds: Vec<u64>,
    pub skipped_rounds: Vec<usize>,
    /// Label-name mapping used at training time, if the data had one.
    pub label_names: Vec<String>,
    /// Feature statistics the training data was normalized with, applied to
    /// evaluation data so saved ensembles see consistent inputs.
    pub normalization: Option<NormStats>,
    /// Method caveats (e.g. reconstructed update rules), echoed into reports.
    pub notes: Vec<String>,
}

fn write_member_file(path: &Path, net: &BaseNetwork) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.push(FORMAT_VERSION);
    let sizes = &net.arch.layer_sizes;
    bytes.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        bytes.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for l in 0..net.arch.n_weight_layers() {
        for v in net.weights[l].iter().chain(net.biases[l].iter()) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(CliError::io(path.display().to_string()))
}

fn corrupt(path: &Path, detail: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        row: 0,
        column: "binary".into(),
        detail: detail.into(),
    }
}

fn read_member_file(path: &Path, arch: &Architecture, rng_seed: u64) -> Result<BaseNetwork> {
    let bytes = std::fs::read(path).map_err(CliError::io(path.display().to_string()))?;
    if bytes.len() < 9 || &bytes[0..4] != MAGIC {
        return Err(corrupt(path, "missing EDDE magic"));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(corrupt(
            path,
            format!("unsupported format version {}", bytes[4]),
        ));
    }
    let mut off = 5;
    let mut next_u32 = |path: &Path| -> Result<u32> {
        let s = bytes
            .get(off..off + 4)
            .ok_or_else(|| corrupt(path, "truncated header"))?;
        off += 4;
        Ok(u32::from_le_bytes(s.try_into().unwrap()))
    };
    let n_layers = next_u32(path)? as usize;
    let mut sizes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        sizes.push(next_u32(path)? as usize);
    }
    if sizes != arch.layer_sizes {
        return Err(corrupt(
            path,
            format!(
                "layer sizes {sizes:?} disagree with the manifest's {:?}",
                arch.layer_sizes
            ),
        ));
    }

    let mut weights = Vec::with_capacity(arch.n_weight_layers());
    let mut biases = Vec::with_capacity(arch.n_weight_layers());
    for l in 0..arch.n_weight_layers() {
        let fan_in = sizes[l];
        let fan_out = sizes[l + 1];
        let mut read_params = |count: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let s = bytes
                    .get(off..off + 8)
                    .ok_or_else(|| corrupt(path, "truncated parameter data"))?;
                off += 8;
                out.push(f64::from_le_bytes(s.try_into().unwrap()));
            }
            Ok(out)
        };
        weights.push(read_params(fan_in * fan_out)?);
        biases.push(read_params(fan_out)?);
    }
    if off != bytes.len() {
        return Err(corrupt(path, "trailing bytes after parameter data"));
    }
    Ok(BaseNetwork {
        arch: arch.clone(),
        weights,
        biases,
        rng_seed,
    })
}

fn member_file_name(index: usize) -> String {
    format!("member_{index:03}.edde")
}

/// Writes `manifest.json` and one weight file per member into `dir`,
/// creating it if needed and overwriting existing files.
pub fn save_ensemble(
    dir: &Path,
    ensemble: &Ensemble,
    method: &str,
    seed: u64,
    label_names: &[String],
    normalization: Option<NormStats>,
    notes: &[String],
) -> Result<()> {
    if ensemble.members.is_empty() {
        return Err(CliError::Other("refusing to save an empty ensemble".into()));
    }
    std::fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
    let arch = ensemble.members[0].net.arch.clone();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        method: method.to_string(),
        architecture: arch,
        t: ensemble.members.len(),
        alphas: ensemble.alphas(),
        gamma: ensemble.gamma,
        beta: ensemble.beta,
        seed,
        member_seeds: ensemble.members.iter().map(|m| m.net.rng_seed).collect(),
        skipped_rounds: ensemble.skipped_rounds.clone(),
        label_names: label_names.to_vec(),
        normalization,
        notes: notes.to_vec(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Other(format!("manifest serialization failed: {e}")))?;
    std::fs::write(&manifest_path, json + "\n")
        .map_err(CliError::io(manifest_path.display().to_string()))?;
    for (i, m) in ensemble.members.iter().enumerate() {
        write_member_file(&dir.join(member_file_name(i)), &m.net)?;
    }
    Ok(())
}

/// Loads an ensemble directory written by [`save_ensemble`].
pub fn load_ensemble(dir: &Path) -> Result<(Ensemble, Manifest)> {
    let manifest_path = dir.join("manifest.json");
    let json = std::fs::read_to_string(&manifest_path)
        .map_err(CliError::io(manifest_path.display().to_string()))?;
    let manifest: Manifest = serde_json::from_str(&json)
        .map_err(|e| corrupt(&manifest_path, format!("invalid manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(corrupt(
            &manifest_path,
            format!("unsupported format version {}", manifest.format_version),
        ));
    }
    if manifest.alphas.len() != manifest.t || manifest.member_seeds.len() != manifest.t {
        return Err(corrupt(
            &manifest_path,
            "alphas/member_seeds length disagrees with t",
        ));
    }
    let mut members = Vec::with_capacity(manifest.t);
    for i in 0..manifest.t {
        let net = read_member_file(
            &dir.join(member_file_name(i)),
            &manifest.architecture,
            manifest.member_seeds[i],
        )?;
        members.push(EnsembleMember {
            net,
            alpha: manifest.alphas[i],
        });
    }
    Ok((
        Ensemble {
            members,
            gamma: manifest.gamma,
            beta: manifest.beta,
            skipped_rounds: manifest.skipped_rounds.clone(),
        },
        manifest,
    ))
}
