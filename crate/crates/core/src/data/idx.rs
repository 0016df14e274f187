//! IDX (MNIST-style) ingestion.
//!
//! Both files start with a big-endian `u32` magic number:
//!
//! | file   | magic        | header after magic                   | payload                  |
//! |--------|--------------|--------------------------------------|--------------------------|
//! | images | `0x00000803` | `count: u32`, `rows: u32`, `cols: u32` | `count*rows*cols` bytes |
//! | labels | `0x00000801` | `count: u32`                           | `count` bytes           |
//!
//! All header integers are big-endian. Pixels are unsigned bytes scaled to
//! `[0, 1]` by dividing by 255.

use std::fs;
use std::path::Path;

use super::Dataset;
use crate::rng::{self, streams};
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let chunk = self.take(4, what)?;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::IdxTruncated {
                path: self.path.to_path_buf(),
                detail: format!(
                    "needed {n} bytes for {what} at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ),
            }),
        }
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32_be("magic")?;
        if found != expected {
            return Err(Error::IdxBadMagic {
                path: self.path.to_path_buf(),
                expected,
                found,
            });
        }
        Ok(())
    }
}

/// Loads an IDX image/label pair.
///
/// With `limit_per_class`, rows are shuffled with `seed` and the first
/// `limit` rows of every class are kept (in shuffled order).
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    limit_per_class: Option<usize>,
    seed: u64,
) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = fs::read(images_path)?;
    let label_bytes = fs::read(labels_path)?;

    let mut img = Reader {
        path: images_path,
        bytes: &image_bytes,
        pos: 0,
    };
    img.magic(IDX_IMAGES_MAGIC)?;
    let n_images = img.u32_be("image count")? as usize;
    let rows = img.u32_be("row count")? as usize;
    let cols = img.u32_be("column count")? as usize;
    let dim = rows * cols;

    let mut lab = Reader {
        path: labels_path,
        bytes: &label_bytes,
        pos: 0,
    };
    lab.magic(IDX_LABELS_MAGIC)?;
    let n_labels = lab.u32_be("label count")? as usize;
    if n_images != n_labels {
        return Err(Error::IdxCountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let pixels = img.take(n_images * dim, "pixel data")?;
    let labels: Vec<usize> = lab.take(n_labels, "label data")?.iter().map(|&b| b as usize).collect();
    let class_count = labels.iter().max().map_or(1, |&m| m + 1);

    let order: Vec<usize> = match limit_per_class {
        None => (0..n_images).collect(),
        Some(limit) => {
            let perm = rng::permutation(n_images, &mut rng::stream(seed, streams::IDX_SHUFFLE));
            let mut taken = vec![0usize; class_count];
            perm.into_iter()
                .filter(|&i| {
                    let c = labels[i];
                    taken[c] += 1;
                    taken[c] <= limit
                })
                .collect()
        }
    };

    let mut features = Vec::with_capacity(order.len() * dim);
    for &i in &order {
        features.extend(pixels[i * dim..(i + 1) * dim].iter().map(|&p| f64::from(p) / 255.0));
    }
    let name = images_path
        .file_stem()
        .map_or_else(|| "idx".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(
        name,
        features,
        dim,
        order.iter().map(|&i| labels[i]).collect(),
        class_count,
    )
}

/// Writes an IDX image/label pair. Pixels are given as raw bytes, row-major.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    rows: u32,
    cols: u32,
    pixels: &[u8],
    labels: &[u8],
) -> Result<()> {
    let per = (rows * cols) as usize;
    if per == 0 || pixels.len() != per * labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels of {rows}x{cols} images need {} pixels, got {}",
            labels.len(),
            per * labels.len(),
            pixels.len()
        )));
    }
    let mut img = Vec::with_capacity(16 + pixels.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    img.extend_from_slice(&rows.to_be_bytes());
    img.extend_from_slice(&cols.to_be_bytes());
    img.extend_from_slice(pixels);
    let mut lab = Vec::with_capacity(8 + labels.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    fs::write(images_path, img)?;
    fs::write(labels_path, lab)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path, n: usize, n_labels: usize) -> (std::path::PathBuf, std::path::PathBuf) {
        let pixels: Vec<u8> = (0..n * 784).map(|i| (i % 256) as u8).collect();
        let labels: Vec<u8> = (0..n_labels).map(|i| (i % 10) as u8).collect();
        let (ip, lp) = (dir.join("img.idx"), dir.join("lab.idx"));
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&(n as u32).to_be_bytes());
        img.extend_from_slice(&28u32.to_be_bytes());
        img.extend_from_slice(&28u32.to_be_bytes());
        img.extend_from_slice(&pixels);
        let mut lab = Vec::new();
        lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend_from_slice(&(n_labels as u32).to_be_bytes());
        lab.extend_from_slice(&labels);
        fs::write(&ip, img).unwrap();
        fs::write(&lp, lab).unwrap();
        (ip, lp)
    }

    #[test]
    fn loads_header_fields() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path(), 10_000, 10_000);
        let d = load_idx(&ip, &lp, None, 0).unwrap();
        assert_eq!((d.len(), d.dim, d.class_count), (10_000, 784, 10));
        assert!(d.features.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(d.features[255], 1.0);
    }

    #[test]
    fn per_class_limit() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path(), 10_000, 10_000);
        let d = load_idx(&ip, &lp, Some(50), 3).unwrap();
        assert_eq!(d.len(), 500);
        assert_eq!(d.class_counts(), vec![50; 10]);
        assert_eq!(d, load_idx(&ip, &lp, Some(50), 3).unwrap());
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path(), 10_000, 9_999);
        assert!(matches!(
            load_idx(&ip, &lp, None, 0),
            Err(Error::IdxCountMismatch { images: 10_000, labels: 9_999 })
        ));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path(), 20, 20);
        // swapped files: the label magic is not an image magic
        assert!(matches!(load_idx(&lp, &ip, None, 0), Err(Error::IdxBadMagic { .. })));

        let mut bytes = fs::read(&ip).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&ip, &bytes).unwrap();
        assert!(matches!(load_idx(&ip, &lp, None, 0), Err(Error::IdxTruncated { .. })));

        fs::write(&ip, [0u8, 0, 8]).unwrap();
        assert!(matches!(load_idx(&ip, &lp, None, 0), Err(Error::IdxTruncated { .. })));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_idx(&ip, &lp, 2, 2, &[0, 255, 51, 102, 1, 2, 3, 4], &[1, 0]).unwrap();
        let d = load_idx(&ip, &lp, None, 0).unwrap();
        assert_eq!(d.labels, vec![1, 0]);
        assert_eq!(&d.features[..4], &[0.0, 1.0, 0.2, 0.4]);
    }
}
