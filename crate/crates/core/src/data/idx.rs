use std::path::Path;

use super::DataError;
use crate::graph::Dataset;

const UBYTE: u8 = 0x08;

/// An unsigned-byte IDX array: dimension sizes and row-major data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn new(dims: Vec<u32>, data: Vec<u8>) -> Result<Self, DataError> {
        if dims.is_empty() || dims.len() > 255 {
            return Err(DataError::InvalidParameter(format!(
                "IDX arrays have 1 to 255 dimensions, got {}",
                dims.len()
            )));
        }
        let len = element_count(&dims)
            .ok_or_else(|| DataError::InvalidParameter("IDX dimensions overflow".into()))?;
        if len != data.len() {
            return Err(DataError::InvalidParameter(format!(
                "dimensions describe {len} bytes, data has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn magic(&self) -> u32 {
        u32::from(UBYTE) << 8 | self.dims.len() as u32
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.data.len());
        out.extend_from_slice(&self.magic().to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    /// Parses an unsigned-byte IDX buffer. Trailing bytes are an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DataError> {
        let magic = be_u32(bytes, 0)?;
        if magic >> 16 != 0 || (magic >> 8) & 0xff != u32::from(UBYTE) || magic & 0xff == 0 {
            return Err(DataError::Format {
                offset: 0,
                message: format!("bad magic 0x{magic:08x}, expected an unsigned-byte IDX header"),
            });
        }
        let ndims = (magic & 0xff) as usize;
        let dims = (0..ndims)
            .map(|i| be_u32(bytes, 4 + 4 * i))
            .collect::<Result<Vec<_>, _>>()?;
        let start = 4 + 4 * ndims;
        let len = element_count(&dims).ok_or(DataError::Format {
            offset: 4,
            message: "dimension sizes overflow".into(),
        })?;
        let body = &bytes[start..];
        if body.len() < len {
            return Err(DataError::Format {
                offset: bytes.len(),
                message: format!("truncated: header promises {len} data bytes, found {}", body.len()),
            });
        }
        if body.len() > len {
            return Err(DataError::Format {
                offset: start + len,
                message: format!("{} trailing bytes after the data", body.len() - len),
            });
        }
        Ok(Self {
            dims,
            data: body.to_vec(),
        })
    }
}

fn element_count(dims: &[u32]) -> Option<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DataError::Format {
            offset: bytes.len(),
            message: format!("truncated header: need 4 bytes at offset {offset}"),
        })
}

pub fn read_idx(path: &Path) -> Result<IdxArray, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    IdxArray::from_bytes(&bytes)
}

pub fn write_idx(path: &Path, array: &IdxArray) -> Result<(), DataError> {
    std::fs::write(path, array.to_bytes()).map_err(|e| DataError::io(path, e))
}

/// Reads an image file (magic 0x803) and a label file (magic 0x801) into a
/// dataset with one flattened row per image, pixels scaled to `[0, 1]`.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset, DataError> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    if img.dims.len() != 3 {
        return Err(DataError::Format {
            offset: 0,
            message: format!("image file has {} dimensions, expected 3", img.dims.len()),
        });
    }
    if lab.dims.len() != 1 {
        return Err(DataError::Format {
            offset: 0,
            message: format!("label file has {} dimensions, expected 1", lab.dims.len()),
        });
    }
    if img.dims[0] != lab.dims[0] {
        return Err(DataError::Format {
            offset: 4,
            message: format!("{} images but {} labels", img.dims[0], lab.dims[0]),
        });
    }
    let dim = (img.dims[1] * img.dims[2]) as usize;
    let values = img.data.iter().map(|&p| f64::from(p) / 255.0).collect();
    let classes = lab.data.iter().map(|&c| u32::from(c)).collect();
    Ok(Dataset::from_flat(dim, values)?.with_classes(classes)?)
}

/// Writes a dataset as an image/label IDX pair with `rows × cols` images.
/// Values are scaled by 255 and rounded, so datasets produced by
/// [`load_idx`] round-trip exactly.
pub fn write_idx_dataset(
    images: &Path,
    labels: &Path,
    dataset: &Dataset,
    rows: u32,
    cols: u32,
) -> Result<(), DataError> {
    if (rows * cols) as usize != dataset.dim() {
        return Err(DataError::InvalidParameter(format!(
            "{rows}×{cols} images need dimension {}, dataset has {}",
            rows * cols,
            dataset.dim()
        )));
    }
    let classes = dataset
        .classes()
        .ok_or_else(|| DataError::InvalidParameter("dataset has no class labels".into()))?;
    let mut pixels = Vec::with_capacity(dataset.values().len());
    for &v in dataset.values() {
        if !(0.0..=1.0).contains(&v) {
            return Err(DataError::InvalidParameter(format!("pixel value {v} outside [0, 1]")));
        }
        pixels.push((v * 255.0).round() as u8);
    }
    let mut class_bytes = Vec::with_capacity(classes.len());
    for &c in classes {
        class_bytes.push(
            u8::try_from(c)
                .map_err(|_| DataError::InvalidParameter(format!("class {c} does not fit a byte")))?,
        );
    }
    let n = dataset.len() as u32;
    write_idx(images, &IdxArray::new(vec![n, rows, cols], pixels)?)?;
    write_idx(labels, &IdxArray::new(vec![n], class_bytes)?)
}
