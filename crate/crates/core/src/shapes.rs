//! Digit shape targets.
//!
//! Digit images are read from the IDX format (big-endian magic `0x00000803`
//! for images, `0x00000801` for labels). A small set of 28×28 handwritten
//! digits is compiled into the crate so shape tasks work without external
//! files. Custom targets can be loaded from 28×28 PGM bitmaps.

use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::raster::PixelMask;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
/// Grey levels at or above this value are part of the shape.
pub const BINARIZE_THRESHOLD: u8 = 128;
pub const SHAPE_SIDE: usize = 28;

static BUNDLED_IMAGES: &[u8] = include_bytes!("../assets/digits-images-idx3-ubyte");
static BUNDLED_LABELS: &[u8] = include_bytes!("../assets/digits-labels-idx1-ubyte");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSet {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("truncated IDX header".into()))
}

impl DigitSet {
    /// Parses an IDX image file and its matching label file.
    pub fn from_idx_bytes(images: &[u8], labels: &[u8]) -> Result<Self> {
        let magic = be_u32(images, 0)?;
        if magic != IDX_IMAGES_MAGIC {
            return Err(Error::Format(format!("image magic {magic:#010x} != {IDX_IMAGES_MAGIC:#010x}")));
        }
        let count = be_u32(images, 4)? as usize;
        let rows = be_u32(images, 8)? as usize;
        let cols = be_u32(images, 12)? as usize;
        let body = &images[16..];
        if body.len() != count * rows * cols {
            return Err(Error::Format(format!("expected {} image bytes, found {}", count * rows * cols, body.len())));
        }
        let magic = be_u32(labels, 0)?;
        if magic != IDX_LABELS_MAGIC {
            return Err(Error::Format(format!("label magic {magic:#010x} != {IDX_LABELS_MAGIC:#010x}")));
        }
        let label_count = be_u32(labels, 4)? as usize;
        let label_body = &labels[8..];
        if label_count != count || label_body.len() != count {
            return Err(Error::Format(format!("{count} images but {} labels", label_body.len())));
        }
        Ok(Self { rows, cols, pixels: body.to_vec(), labels: label_body.to_vec() })
    }

    pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        Self::from_idx_bytes(&fs::read(images)?, &fs::read(labels)?)
    }

    /// Loads `*images-idx3-ubyte` and `*labels-idx1-ubyte` from `dir`.
    /// When several pairs exist (train and test splits) the first in
    /// lexical order is used.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut names: Vec<String> =
            fs::read_dir(dir)?.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect();
        names.sort();
        let images = names
            .iter()
            .find(|n| n.ends_with("images-idx3-ubyte") || n.ends_with("images.idx3-ubyte"))
            .ok_or_else(|| Error::Format(format!("no IDX image file in {}", dir.display())))?;
        let stem = images.split("images").next().unwrap_or("");
        let labels = names
            .iter()
            .find(|n| n.starts_with(stem) && (n.ends_with("labels-idx1-ubyte") || n.ends_with("labels.idx1-ubyte")))
            .ok_or_else(|| Error::Format(format!("no IDX label file for {images}")))?;
        Self::load_idx(dir.join(images), dir.join(labels))
    }

    /// The digit set compiled into the crate (20 images per digit).
    pub fn bundled() -> Arc<DigitSet> {
        static SET: OnceLock<Arc<DigitSet>> = OnceLock::new();
        SET.get_or_init(|| {
            Arc::new(Self::from_idx_bytes(BUNDLED_IMAGES, BUNDLED_LABELS).expect("bundled digits parse"))
        })
        .clone()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[index * n..(index + 1) * n]
    }

    pub fn indices_of(&self, digit: u8) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == digit).map(|(k, _)| k).collect()
    }

    /// Binarized image `index` in world orientation.
    pub fn mask(&self, index: usize) -> PixelMask {
        binarize(self.image(index), self.cols, self.rows)
    }
}

/// Thresholds a top-row-first grey image into a bottom-row-first mask.
pub fn binarize(grey: &[u8], width: usize, height: usize) -> PixelMask {
    let mut mask = PixelMask::new(width, height);
    for r in 0..height {
        for c in 0..width {
            if grey[r * width + c] >= BINARIZE_THRESHOLD {
                mask.set(c, height - 1 - r, true);
            }
        }
    }
    mask
}

/// Shape chosen for a digit: a uniformly random image with that label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeTarget {
    pub index: usize,
    pub mask: PixelMask,
}

pub fn load_shape_target<R: Rng + ?Sized>(set: &DigitSet, digit: u8, rng: &mut R) -> Result<ShapeTarget> {
    let candidates = set.indices_of(digit);
    if candidates.is_empty() {
        return Err(Error::LabelNotFound(digit));
    }
    let index = candidates[rng.random_range(0..candidates.len())];
    Ok(ShapeTarget { index, mask: set.mask(index) })
}

/// Reads a 28×28 PGM bitmap (binary or ASCII) as a shape mask.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<PixelMask> {
    let img = image::open(path.as_ref())?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    if (w, h) != (SHAPE_SIDE, SHAPE_SIDE) {
        return Err(Error::Format(format!("shape bitmap must be {SHAPE_SIDE}x{SHAPE_SIDE}, got {w}x{h}")));
    }
    Ok(binarize(img.as_raw(), w, h))
}

/// Every `*.pgm` in `dir`, sorted by file name.
pub fn load_pgm_dir(dir: impl AsRef<Path>) -> Result<Vec<(String, PixelMask)>> {
    let mut paths: Vec<_> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            load_pgm(&p).map(|m| (name, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn idx(images: &[[u8; 4]], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let mut im = Vec::new();
        for v in [IDX_IMAGES_MAGIC, images.len() as u32, 2, 2] {
            im.extend_from_slice(&v.to_be_bytes());
        }
        for i in images {
            im.extend_from_slice(i);
        }
        let mut lb = Vec::new();
        for v in [IDX_LABELS_MAGIC, labels.len() as u32] {
            lb.extend_from_slice(&v.to_be_bytes());
        }
        lb.extend_from_slice(labels);
        (im, lb)
    }

    #[test]
    fn parses_tiny_idx() {
        let (im, lb) = idx(&[[255, 0, 0, 127], [0, 128, 0, 0]], &[3, 7]);
        let set = DigitSet::from_idx_bytes(&im, &lb).unwrap();
        assert_eq!(set.len(), 2);
        let m = set.mask(0);
        // top-left grey 255 lands in world row 1
        assert!(m.get(0, 1));
        assert!(!m.get(1, 0));
        assert_eq!(m.count(), 1);
        assert!(set.mask(1).get(1, 1));
        assert_eq!(set.indices_of(7), vec![1]);
    }

    #[test]
    fn rejects_bad_magic_and_lengths() {
        let (mut im, lb) = idx(&[[0; 4]], &[1]);
        im[3] = 0x01;
        assert!(matches!(DigitSet::from_idx_bytes(&im, &lb), Err(Error::Format(_))));
        let (im, _) = idx(&[[0; 4]], &[1]);
        let (_, lb2) = idx(&[[0; 4], [0; 4]], &[1, 2]);
        assert!(DigitSet::from_idx_bytes(&im, &lb2).is_err());
        assert!(DigitSet::from_idx_bytes(&im[..10], &lb).is_err());
    }

    #[test]
    fn bundled_has_every_digit() {
        let set = DigitSet::bundled();
        assert_eq!(set.len(), 200);
        for d in 0..10 {
            let t = load_shape_target(&set, d, &mut stream(1, Stream::ShapeImage)).unwrap();
            assert_eq!((t.mask.width(), t.mask.height()), (28, 28));
            assert_eq!(set.label(t.index), d);
            assert!(!t.mask.is_empty());
        }
    }

    #[test]
    fn selection_is_seeded() {
        let set = DigitSet::bundled();
        let a = load_shape_target(&set, 3, &mut stream(9, Stream::ShapeImage)).unwrap();
        let b = load_shape_target(&set, 3, &mut stream(9, Stream::ShapeImage)).unwrap();
        assert_eq!(a.index, b.index);
        assert!(matches!(
            load_shape_target(&set, 11, &mut stream(9, Stream::ShapeImage)),
            Err(Error::LabelNotFound(11))
        ));
    }

    #[test]
    fn all_zero_image_gives_empty_mask() {
        let m = binarize(&[0u8; 28 * 28], 28, 28);
        assert!(m.is_empty());
    }

    #[test]
    fn reads_pgm_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = format!("P2\n{SHAPE_SIDE} {SHAPE_SIDE}\n255\n");
        for r in 0..SHAPE_SIDE {
            for c in 0..SHAPE_SIDE {
                body.push_str(if r == 0 && c < 3 { "200 " } else { "0 " });
            }
            body.push('\n');
        }
        fs::write(dir.path().join("bar.pgm"), body).unwrap();
        let shapes = load_pgm_dir(dir.path()).unwrap();
        assert_eq!(shapes.len(), 1);
        assert_eq!(shapes[0].0, "bar");
        assert_eq!(shapes[0].1.count(), 3);
        assert!(shapes[0].1.get(0, 27));
    }

    #[test]
    fn loads_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (im, lb) = idx(&[[255; 4]], &[5]);
        fs::write(dir.path().join("t10k-images-idx3-ubyte"), im).unwrap();
        fs::write(dir.path().join("t10k-labels-idx1-ubyte"), lb).unwrap();
        let set = DigitSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.label(0), 5);
    }
}
