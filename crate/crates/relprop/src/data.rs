//! Dataset ingestion for desk-scale experiments: IDX image files, numeric
//! CSV tables, and whitespace-tokenized documents with a TSV vocabulary.
//!
//! Loaders are deterministic and order-preserving. No loader ever touches
//! the network; every fixture is generated locally or checked in.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Labeled inputs of uniform shape. `normalization` records the per-feature
/// `(offset, scale)` applied at load time, so stored values satisfy
/// `stored = (raw - offset) / scale`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub normalization: Option<Vec<(f64, f64)>>,
    /// Original token strings per document; present only for token datasets.
    pub token_texts: Option<Vec<Vec<String>>>,
    /// Column names in feature order; present only for CSV datasets.
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Tensor>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let ds = Dataset {
            inputs,
            labels,
            class_names,
            normalization: None,
            token_texts: None,
            feature_names: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.labels.len() {
            return Err(Error::ShapeIncompatible(format!(
                "{} inputs but {} labels",
                self.inputs.len(),
                self.labels.len()
            )));
        }
        if let Some(first) = self.inputs.first() {
            for t in &self.inputs {
                if t.shape() != first.shape() {
                    return Err(Error::ShapeIncompatible(format!(
                        "inputs mix shapes {:?} and {:?}",
                        first.shape(),
                        t.shape()
                    )));
                }
            }
        }
        for &label in &self.labels {
            if label >= self.class_names.len() {
                return Err(Error::ShapeIncompatible(format!(
                    "label {label} out of range for {} classes",
                    self.class_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

// --- IDX ------------------------------------------------------------------

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Reads an IDX image file (big-endian magic 0x00000803, dims n x h x w,
/// unsigned bytes). Pixels are scaled to [0, 1]; each sample is `1 x h x w`.
pub fn load_idx_images(path: &Path, limit: Option<usize>) -> Result<Vec<Tensor>> {
    let bytes = read_file(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            magic,
        });
    }
    let n = read_u32_be(&bytes, 4, path)? as usize;
    let h = read_u32_be(&bytes, 8, path)? as usize;
    let w = read_u32_be(&bytes, 12, path)? as usize;
    let need = 16 + n * h * w;
    if bytes.len() < need {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    let count = limit.map_or(n, |l| l.min(n));
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * h * w;
        let data: Vec<f64> = bytes[start..start + h * w]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        images.push(Tensor::new(vec![1, h, w], data)?);
    }
    Ok(images)
}

fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            magic,
        });
    }
    let n = read_u32_be(&bytes, 4, path)? as usize;
    if bytes.len() < 8 + n {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    Ok(bytes[8..8 + n].to_vec())
}

/// Loads paired IDX image and label files. The declared sample counts must
/// match; `limit` then truncates both in tandem.
pub fn load_idx(images_path: &Path, labels_path: &Path, limit: Option<usize>) -> Result<Dataset> {
    let labels_raw = load_idx_labels(labels_path)?;
    let images = load_idx_images(images_path, None)?;
    if labels_raw.len() != images.len() {
        return Err(Error::ShapeIncompatible(format!(
            "images file declares {} samples but labels file declares {}",
            images.len(),
            labels_raw.len()
        )));
    }
    let count = limit.map_or(images.len(), |l| l.min(images.len()));
    let images: Vec<Tensor> = images.into_iter().take(count).collect();
    let labels: Vec<usize> = labels_raw.iter().take(count).map(|&b| b as usize).collect();
    let max_label = labels.iter().copied().max().unwrap_or(0);
    let class_names = (0..=max_label).map(|c| c.to_string()).collect();
    Dataset::new(images, labels, class_names)
}

// --- CSV ------------------------------------------------------------------

/// Splits one CSV line into fields, honoring double-quoted fields with `""`
/// escapes.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut in_quotes = false;
    while let Some(c) = chars.next() {
        match c {
            '"' if in_quotes => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    in_quotes = false;
                }
            }
            '"' => in_quotes = true,
            ',' if !in_quotes => {
                fields.push(std::mem::take(&mut field));
            }
            _ => field.push(c),
        }
    }
    fields.push(field);
    fields
}

/// Loads a rectangular numeric CSV with a header row. The named label column
/// supplies class labels (distinct values become classes in order of first
/// appearance); every other column is a feature, in header order. With
/// `normalize`, features are min-max scaled and the `(offset, scale)` pair
/// per feature is recorded (a constant column gets scale 1).
pub fn load_csv(path: &Path, label_column: &str, normalize: bool) -> Result<Dataset> {
    let text = String::from_utf8_lossy(&read_file(path)?).into_owned();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header_line) = lines.next().ok_or_else(|| Error::Csv {
        row: 0,
        message: "empty file, header required".into(),
    })?;
    let header = split_csv_line(header_line);
    let label_idx = header
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "label column '{label_column}' not found; available columns: {}",
                header
                    .iter()
                    .map(|h| h.trim())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (row_no, (_, line)) in lines.enumerate() {
        let row = row_no + 1; // 1-based data row
        let fields = split_csv_line(line);
        if fields.len() != header.len() {
            return Err(Error::Csv {
                row,
                message: format!("expected {} fields, got {}", header.len(), fields.len()),
            });
        }
        let mut features = Vec::with_capacity(header.len() - 1);
        for (i, field) in fields.iter().enumerate() {
            let field = field.trim();
            if i == label_idx {
                let label = match class_names.iter().position(|c| c == field) {
                    Some(idx) => idx,
                    None => {
                        class_names.push(field.to_string());
                        class_names.len() - 1
                    }
                };
                labels.push(label);
            } else {
                let value: f64 = field.parse().map_err(|_| Error::Csv {
                    row,
                    message: format!(
                        "column '{}': cannot parse '{field}' as a number",
                        header[i].trim()
                    ),
                })?;
                features.push(value);
            }
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            row: 0,
            message: "no data rows".into(),
        });
    }

    let dim = rows[0].len();
    let normalization = if normalize {
        let mut pairs = Vec::with_capacity(dim);
        for col in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in &rows {
                lo = lo.min(r[col]);
                hi = hi.max(r[col]);
            }
            let scale = if hi > lo { hi - lo } else { 1.0 };
            pairs.push((lo, scale));
        }
        for r in &mut rows {
            for (col, v) in r.iter_mut().enumerate() {
                let (offset, scale) = pairs[col];
                *v = (*v - offset) / scale;
            }
        }
        Some(pairs)
    } else {
        None
    };

    let inputs = rows.into_iter().map(Tensor::vector).collect();
    let mut ds = Dataset::new(inputs, labels, class_names)?;
    ds.normalization = normalization;
    ds.feature_names = Some(feature_names);
    Ok(ds)
}

/// Writes a dataset of rank-1 inputs back out as CSV (features then the
/// label column), the inverse of [`load_csv`] without normalization.
pub fn save_csv(dataset: &Dataset, path: &Path, label_column: &str) -> Result<()> {
    let dim = dataset.inputs.first().map_or(0, |t| t.len());
    let names: Vec<String> = match &dataset.feature_names {
        Some(n) => n.clone(),
        None => (0..dim).map(|i| format!("f{i}")).collect(),
    };
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push(',');
    out.push_str(label_column);
    out.push('\n');
    for (input, &label) in dataset.inputs.iter().zip(&dataset.labels) {
        let row: Vec<String> = input.iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push(',');
        out.push_str(&dataset.class_names[label]);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// --- tokens ---------------------------------------------------------------

/// Result of [`load_tokens`]: the id-sequence dataset plus how many tokens
/// were dropped by `max_len` truncation.
#[derive(Debug, Clone)]
pub struct TokenLoad {
    pub dataset: Dataset,
    pub dropped_tokens: usize,
}

/// Parses a `token<TAB>id` vocabulary. Id 0 is reserved for pad/unknown;
/// tokens may not claim it.
pub fn load_vocabulary(path: &Path) -> Result<BTreeMap<String, usize>> {
    let text = String::from_utf8_lossy(&read_file(path)?).into_owned();
    let mut vocab = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (token, id) = line.split_once('\t').ok_or_else(|| {
            Error::InvalidConfig(format!("vocabulary line without a tab: '{line}'"))
        })?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad vocabulary id in '{line}'")))?;
        if id == 0 {
            return Err(Error::InvalidConfig(format!(
                "token '{token}' claims reserved id 0 (pad/unknown)"
            )));
        }
        vocab.insert(token.to_string(), id);
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(vocab)
}

/// Loads one whitespace-tokenized document per line, mapping tokens through
/// the vocabulary (out-of-vocabulary tokens become id 0) and truncating or
/// zero-padding every sequence to `max_len`. A line may carry an optional
/// `label<TAB>` prefix; unlabeled corpora get a single "unlabeled" class.
pub fn load_tokens(path: &Path, vocabulary_path: &Path, max_len: usize) -> Result<TokenLoad> {
    if max_len == 0 {
        return Err(Error::InvalidConfig("max_len must be positive".into()));
    }
    let vocab = load_vocabulary(vocabulary_path)?;
    let text = String::from_utf8_lossy(&read_file(path)?).into_owned();

    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut token_texts = Vec::new();
    let mut dropped = 0usize;

    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (label_name, body) = match line.split_once('\t') {
            Some((l, rest)) => (l.trim().to_string(), rest),
            None => ("unlabeled".to_string(), line),
        };
        let label = match class_names.iter().position(|c| *c == label_name) {
            Some(idx) => idx,
            None => {
                class_names.push(label_name);
                class_names.len() - 1
            }
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() > max_len {
            dropped += tokens.len() - max_len;
        }
        let kept: Vec<String> = tokens.iter().take(max_len).map(|t| t.to_string()).collect();
        let mut ids: Vec<f64> = kept
            .iter()
            .map(|t| vocab.get(t.as_str()).copied().unwrap_or(0) as f64)
            .collect();
        ids.resize(max_len, 0.0);
        inputs.push(Tensor::new(vec![max_len], ids)?);
        labels.push(label);
        token_texts.push(kept);
    }

    let mut dataset = Dataset::new(inputs, labels, class_names)?;
    dataset.token_texts = Some(token_texts);
    Ok(TokenLoad {
        dataset,
        dropped_tokens: dropped,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut f = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

/// Serializes IDX image/label fixtures (the inverse of [`load_idx`]),
/// used by tests and examples to build self-contained corpora.
pub fn write_idx_fixture(
    images_path: &Path,
    labels_path: &Path,
    images: &[Vec<u8>],
    labels: &[u8],
    height: usize,
    width: usize,
) -> Result<()> {
    assert_eq!(images.len(), labels.len());
    let mut img_bytes = Vec::with_capacity(16 + images.len() * height * width);
    img_bytes.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(height as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(width as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), height * width);
        img_bytes.extend_from_slice(img);
    }
    fs::write(images_path, img_bytes).map_err(|e| Error::io(images_path, e))?;

    let mut lbl_bytes = Vec::with_capacity(8 + labels.len());
    lbl_bytes.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lbl_bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl_bytes.extend_from_slice(labels);
    fs::write(labels_path, lbl_bytes).map_err(|e| Error::io(labels_path, e))
}
