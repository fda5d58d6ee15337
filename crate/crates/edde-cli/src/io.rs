//! Dataset file formats: labeled CSV and IDX image/label pairs.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use edde_core::data::{make_blobs, normalize, Dataset};
use edde_core::seeding;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::DataConfig;
use crate::{CliError, Result};

/// A dataset plus the label-name mapping it was loaded with: `names[c]` is
/// the original label string for dense class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub dataset: Dataset,
    pub label_names: Vec<String>,
}

fn parse_error(path: &Path, row: usize, column: &str, detail: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
        detail: detail.into(),
    }
}

/// Loads a comma-separated file with a header row. The named label column
/// holds categorical or integer labels, mapped to dense `0..k` by first
/// appearance (or by `known_labels` when evaluating against a trained
/// ensemble); every other column is a numeric feature.
///
/// Row numbers in errors are 1-based file lines (the header is line 1).
pub fn load_csv(
    path: &Path,
    label_column: &str,
    known_labels: Option<&[String]>,
) -> Result<LabeledData> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, label_column, "file is empty"))?;
    let headers: Vec<&str> = header_line.split(',').map(str::trim).collect();
    let label_idx = headers
        .iter()
        .position(|h| *h == label_column)
        .ok_or_else(|| {
            parse_error(
                path,
                1,
                label_column,
                format!("label column '{label_column}' not found in header"),
            )
        })?;

    let mut names: Vec<String> = known_labels.map(|k| k.to_vec()).unwrap_or_default();
    let mut name_to_id: HashMap<String, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let frozen_mapping = known_labels.is_some();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != headers.len() {
            return Err(parse_error(
                path,
                row,
                headers[0],
                format!("{} cells, expected {}", cells.len(), headers.len()),
            ));
        }
        let mut feat = Vec::with_capacity(headers.len() - 1);
        for (c, cell) in cells.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                parse_error(path, row, headers[c], format!("non-numeric cell '{cell}'"))
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    row,
                    headers[c],
                    format!("non-finite value '{cell}'"),
                ));
            }
            feat.push(v);
        }
        let name = cells[label_idx];
        let id = match name_to_id.get(name) {
            Some(&id) => id,
            None if frozen_mapping => {
                return Err(parse_error(
                    path,
                    row,
                    headers[label_idx],
                    format!("label '{name}' was not seen during training"),
                ));
            }
            None => {
                let id = names.len();
                names.push(name.to_string());
                name_to_id.insert(name.to_string(), id);
                id
            }
        };
        features.push(feat);
        labels.push(id);
    }

    let dataset = Dataset::new(features, labels, names.len().max(1))?;
    Ok(LabeledData {
        dataset,
        label_names: names,
    })
}

/// Writes a dataset as CSV with feature columns `f0..f{d-1}` and a trailing
/// label column. Feature formatting round-trips exactly through [`load_csv`].
pub fn write_csv(path: &Path, data: &LabeledData) -> Result<()> {
    let d = data.dataset.dim();
    let mut out = String::new();
    for i in 0..d {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for (row, &y) in data.dataset.features.iter().zip(&data.dataset.labels) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&data.label_names[y]);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(CliError::io(path.display().to_string()))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path, what: &str) -> Result<u32> {
    let slice = bytes.get(offset..offset + 4).ok_or_else(|| {
        parse_error(path, 0, what, format!("truncated before {what} at byte {offset}"))
    })?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Loads an IDX image/label file pair (big-endian magics `0x00000803` /
/// `0x00000801`). Pixels are scaled to `[0, 1]`; the first `limit` samples
/// are kept (0 keeps all).
pub fn load_idx(images_path: &Path, labels_path: &Path, limit: usize) -> Result<LabeledData> {
    let images = read_file(images_path)?;
    let labels = read_file(labels_path)?;

    let magic = be_u32(&images, 0, images_path, "magic")?;
    if magic != 0x0000_0803 {
        return Err(parse_error(
            images_path,
            0,
            "magic",
            format!("bad image magic {magic:#010x}, expected 0x00000803"),
        ));
    }
    let n_images = be_u32(&images, 4, images_path, "count")? as usize;
    let rows = be_u32(&images, 8, images_path, "rows")? as usize;
    let cols = be_u32(&images, 12, images_path, "cols")? as usize;

    let label_magic = be_u32(&labels, 0, labels_path, "magic")?;
    if label_magic != 0x0000_0801 {
        return Err(parse_error(
            labels_path,
            0,
            "magic",
            format!("bad label magic {label_magic:#010x}, expected 0x00000801"),
        ));
    }
    let n_labels = be_u32(&labels, 4, labels_path, "count")? as usize;
    if n_labels != n_images {
        return Err(parse_error(
            labels_path,
            0,
            "count",
            format!("{n_labels} labels for {n_images} images"),
        ));
    }

    let n = if limit == 0 { n_images } else { limit.min(n_images) };
    let pixels = rows * cols;
    if images.len() < 16 + n * pixels {
        return Err(parse_error(images_path, 0, "pixels", "truncated image data"));
    }
    if labels.len() < 8 + n {
        return Err(parse_error(labels_path, 0, "labels", "truncated label data"));
    }

    let mut features = Vec::with_capacity(n);
    let mut label_ids = Vec::with_capacity(n);
    let mut k = 0usize;
    for i in 0..n {
        let start = 16 + i * pixels;
        features.push(
            images[start..start + pixels]
                .iter()
                .map(|&b| f64::from(b) / 255.0)
                .collect(),
        );
        let y = labels[8 + i] as usize;
        k = k.max(y + 1);
        label_ids.push(y);
    }
    let dataset = Dataset::new(features, label_ids, k)?;
    let label_names = (0..k).map(|c| c.to_string()).collect();
    Ok(LabeledData {
        dataset,
        label_names,
    })
}

/// Splits `data` into (train, test) by a seed-deterministic shuffle; the
/// test split takes `floor(fraction * n)` samples.
fn holdout_split(data: &LabeledData, fraction: f64, seed: u64) -> Result<(LabeledData, LabeledData)> {
    let n = data.dataset.n();
    let n_test = ((fraction * n as f64).floor() as usize).min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::mix(seed, 0x4014_D007));
    order.shuffle(&mut rng);
    let (test_idx, train_idx) = order.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    // Keep original sample order inside each split for readability.
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        LabeledData {
            dataset: data.dataset.subset(&train_idx)?,
            label_names: data.label_names.clone(),
        },
        LabeledData {
            dataset: data.dataset.subset(&test_idx)?,
            label_names: data.label_names.clone(),
        },
    ))
}

/// Splits a blob dataset per class: the first `test_per_class` samples of
/// each class become the test split.
fn per_class_split(
    data: &Dataset,
    test_per_class: usize,
) -> Result<(Dataset, Dataset)> {
    let mut taken = vec![0usize; data.k];
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, &y) in data.labels.iter().enumerate() {
        if taken[y] < test_per_class {
            taken[y] += 1;
            test_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    Ok((data.subset(&train_idx)?, data.subset(&test_idx)?))
}

/// Materializes the configured data source into normalized train/test splits.
/// Normalization statistics are always fitted on the training split only.
pub fn load_train_test(
    data: &DataConfig,
    do_normalize: bool,
    seed: u64,
) -> Result<(LabeledData, LabeledData)> {
    let (mut train, mut test) = match data {
        DataConfig::Blobs {
            train_per_class,
            test_per_class,
            classes,
            dim,
            spread,
        } => {
            let all = make_blobs(
                train_per_class + test_per_class,
                *classes,
                *dim,
                *spread,
                seeding::mix(seed, 0xB10B_5),
            )?;
            let names: Vec<String> = (0..*classes).map(|c| c.to_string()).collect();
            let (tr, te) = per_class_split(&all, *test_per_class)?;
            (
                LabeledData {
                    dataset: tr,
                    label_names: names.clone(),
                },
                LabeledData {
                    dataset: te,
                    label_names: names,
                },
            )
        }
        DataConfig::Csv {
            train_path,
            test_path,
            label_column,
            holdout_fraction,
        } => {
            let train = load_csv(train_path, label_column, None)?;
            match test_path {
                Some(p) => {
                    let test = load_csv(p, label_column, Some(&train.label_names))?;
                    (train, test)
                }
                None => holdout_split(&train, *holdout_fraction, seed)?,
            }
        }
        DataConfig::Idx {
            images_path,
            labels_path,
            limit,
            holdout_fraction,
        } => {
            let all = load_idx(images_path, labels_path, *limit)?;
            holdout_split(&all, *holdout_fraction, seed)?
        }
    };

    if do_normalize {
        let stats = edde_core::data::feature_stats(&train.dataset);
        train.dataset = normalize(&train.dataset, &stats)?;
        test.dataset = normalize(&test.dataset, &stats)?;
    }
    Ok((train, test))
}
