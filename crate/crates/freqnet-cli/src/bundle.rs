//! Matrix persistence: a small JSON manifest next to a raw little-endian
//! row-major binary file. Complex entries are stored as interleaved
//! (re, im) pairs so any numeric tool can map the data without this crate.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    Real64,
    Complex128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BundleManifest {
    pub name: String,
    pub kind: ElementKind,
    pub shape: [usize; 2],
    pub byte_order: String,
    pub data_path: String,
    pub provenance: String,
}

pub enum ArrayRef<'a> {
    Real(&'a Array2<f64>),
    Complex(&'a Array2<Complex64>),
}

/// In-memory image of a reloaded bundle; used by the round-trip checks.
#[cfg(test)]
#[derive(Debug, PartialEq)]
pub enum LoadedArray {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

/// Writes `<name>.bin` and `<name>.json` into `dir`; returns the manifest
/// path. The manifest stores the data file name relative to the manifest so
/// the pair can be moved together.
pub fn write_bundle(
    dir: &Path,
    name: &str,
    data: ArrayRef<'_>,
    provenance: &str,
) -> io::Result<PathBuf> {
    let (kind, shape, bytes) = match data {
        ArrayRef::Real(a) => {
            let mut bytes = Vec::with_capacity(a.len() * 8);
            for v in a.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            (ElementKind::Real64, [a.nrows(), a.ncols()], bytes)
        }
        ArrayRef::Complex(a) => {
            let mut bytes = Vec::with_capacity(a.len() * 16);
            for z in a.iter() {
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
            (ElementKind::Complex128, [a.nrows(), a.ncols()], bytes)
        }
    };
    let data_name = format!("{name}.bin");
    let mut file = fs::File::create(dir.join(&data_name))?;
    file.write_all(&bytes)?;
    file.flush()?;

    let manifest = BundleManifest {
        name: name.to_string(),
        kind,
        shape,
        byte_order: "little-endian".to_string(),
        data_path: data_name,
        provenance: provenance.to_string(),
    };
    let manifest_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    fs::write(&manifest_path, text)?;
    Ok(manifest_path)
}

/// Reloads a bundle from its manifest path, checking the byte length
/// against the declared shape.
#[cfg(test)]
pub fn read_bundle(manifest_path: &Path) -> io::Result<(BundleManifest, LoadedArray)> {
    let manifest: BundleManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let bytes = fs::read(dir.join(&manifest.data_path))?;
    let [rows, cols] = manifest.shape;
    let n = rows * cols;
    let element = match manifest.kind {
        ElementKind::Real64 => 8,
        ElementKind::Complex128 => 16,
    };
    if bytes.len() != n * element {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!(
                "bundle {}: {} bytes for shape {rows}×{cols} ({} expected)",
                manifest.name,
                bytes.len(),
                n * element
            ),
        ));
    }
    let f64_at = |i: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[8 * i..8 * i + 8]);
        f64::from_le_bytes(b)
    };
    let array = match manifest.kind {
        ElementKind::Real64 => {
            let flat: Vec<f64> = (0..n).map(f64_at).collect();
            LoadedArray::Real(Array2::from_shape_vec((rows, cols), flat).unwrap())
        }
        ElementKind::Complex128 => {
            let flat: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(f64_at(2 * i), f64_at(2 * i + 1)))
                .collect();
            LoadedArray::Complex(Array2::from_shape_vec((rows, cols), flat).unwrap())
        }
    };
    Ok((manifest, array))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_bundle_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let a = Array2::from_shape_fn((3, 4), |(i, j)| (i as f64 + 0.1) * (j as f64 - 0.7));
        let path = write_bundle(dir.path(), "sigma", ArrayRef::Real(&a), "deadbeef").unwrap();
        let (manifest, loaded) = read_bundle(&path).unwrap();
        assert_eq!(manifest.kind, ElementKind::Real64);
        assert_eq!(manifest.shape, [3, 4]);
        assert_eq!(manifest.provenance, "deadbeef");
        match loaded {
            LoadedArray::Real(b) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            LoadedArray::Complex(_) => panic!("wrong kind"),
        }
    }

    #[test]
    fn complex_bundle_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let a = Array2::from_shape_fn((2, 5), |(i, j)| {
            Complex64::new(i as f64 - 0.3, j as f64 * 1.7)
        });
        let path = write_bundle(dir.path(), "jsa", ArrayRef::Complex(&a), "cafe").unwrap();
        let (manifest, loaded) = read_bundle(&path).unwrap();
        assert_eq!(manifest.kind, ElementKind::Complex128);
        match loaded {
            LoadedArray::Complex(b) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.re.to_bits(), y.re.to_bits());
                    assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
            LoadedArray::Real(_) => panic!("wrong kind"),
        }
    }

    #[test]
    fn truncated_data_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = Array2::<f64>::zeros((4, 4));
        let path = write_bundle(dir.path(), "z", ArrayRef::Real(&a), "p").unwrap();
        fs::write(dir.path().join("z.bin"), [0u8; 8]).unwrap();
        assert!(read_bundle(&path).is_err());
    }
}
