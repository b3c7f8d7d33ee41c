//! IDX binary files (big-endian header, unsigned bytes).

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{DsvmError, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DsvmError::InvalidData("truncated IDX header".into()))
}

/// Images flattened row-major to `N × (rows·cols)`, pixels scaled to `[0, 1]`.
pub fn read_idx_images(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(DsvmError::InvalidData(format!(
            "{}: bad image magic {magic:#010x}",
            path.display()
        )));
    }
    let n = be_u32(&bytes, 4)? as usize;
    let pixels = be_u32(&bytes, 8)? as usize * be_u32(&bytes, 12)? as usize;
    let body = &bytes[16..];
    if body.len() != n * pixels {
        return Err(DsvmError::InvalidData(format!(
            "{}: expected {} pixel bytes, found {}",
            path.display(),
            n * pixels,
            body.len()
        )));
    }
    let data = body.iter().map(|&p| f64::from(p) / 255.0).collect();
    Array2::from_shape_vec((n, pixels), data).map_err(|e| DsvmError::InvalidData(e.to_string()))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<i64>> {
    let bytes = fs::read(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(DsvmError::InvalidData(format!(
            "{}: bad label magic {magic:#010x}",
            path.display()
        )));
    }
    let n = be_u32(&bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(DsvmError::InvalidData(format!(
            "{}: expected {n} labels, found {}",
            path.display(),
            body.len()
        )));
    }
    Ok(body.iter().map(|&l| i64::from(l)).collect())
}

/// Inverse of [`read_idx_images`]; pixel values are rounded back to bytes.
pub fn write_idx_images(path: &Path, images: &Array2<f64>, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != images.ncols() {
        return Err(DsvmError::dims("image pixels", rows * cols, images.ncols()));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    out.write_all(&IMAGE_MAGIC.to_be_bytes())?;
    out.write_all(&(images.nrows() as u32).to_be_bytes())?;
    out.write_all(&(rows as u32).to_be_bytes())?;
    out.write_all(&(cols as u32).to_be_bytes())?;
    out.extend(images.iter().map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_all(&LABEL_MAGIC.to_be_bytes())?;
    out.write_all(&(labels.len() as u32).to_be_bytes())?;
    for &l in labels {
        let byte = u8::try_from(l).map_err(|_| DsvmError::InvalidLabels(format!("label {l} does not fit a byte")))?;
        out.push(byte);
    }
    fs::write(path, out)?;
    Ok(())
}

/// The four standard MNIST files inside one directory.
#[derive(Debug, Clone)]
pub struct MnistSet {
    pub train_images: Array2<f64>,
    pub train_labels: Vec<i64>,
    pub test_images: Array2<f64>,
    pub test_labels: Vec<i64>,
}

impl MnistSet {
    pub fn load(dir: &Path) -> Result<Self> {
        let set = MnistSet {
            train_images: read_idx_images(&dir.join("train-images-idx3-ubyte"))?,
            train_labels: read_idx_labels(&dir.join("train-labels-idx1-ubyte"))?,
            test_images: read_idx_images(&dir.join("t10k-images-idx3-ubyte"))?,
            test_labels: read_idx_labels(&dir.join("t10k-labels-idx1-ubyte"))?,
        };
        if set.train_images.nrows() != set.train_labels.len() {
            return Err(DsvmError::dims(
                "MNIST training labels",
                set.train_images.nrows(),
                set.train_labels.len(),
            ));
        }
        if set.test_images.nrows() != set.test_labels.len() {
            return Err(DsvmError::dims(
                "MNIST test labels",
                set.test_images.nrows(),
                set.test_labels.len(),
            ));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let images = array![[0.0, 1.0, 128.0 / 255.0, 0.0], [1.0, 1.0, 0.0, 3.0 / 255.0]];
        write_idx_images(&dir.path().join("img"), &images, 2, 2).unwrap();
        write_idx_labels(&dir.path().join("lab"), &[7, 0]).unwrap();
        assert_eq!(read_idx_images(&dir.path().join("img")).unwrap(), images);
        assert_eq!(read_idx_labels(&dir.path().join("lab")).unwrap(), vec![7, 0]);
        assert!(read_idx_images(&dir.path().join("lab")).is_err());
    }

    #[test]
    fn truncated_body_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lab");
        write_idx_labels(&path, &[1, 2, 3]).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(read_idx_labels(&path).is_err());
    }
}
