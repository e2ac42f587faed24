//! Two-dimensional float arrays in the NumPy `.npy` format.

use std::fs::File;
use std::io::{self, BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};

use npyz::{DType, NpyFile, NpyHeader, Order, TypeStr, WriterBuilder};
use protgeom_core::PointCloud;
use thiserror::Error;

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Error)]
pub enum NpyError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not an NPY file (bad magic string)")]
    BadMagic,
    #[error("unsupported NPY format version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("malformed NPY header: {0}")]
    BadHeader(String),
    #[error("unsupported element type {0:?}, expected '<f4' or '<f8'")]
    UnsupportedDtype(String),
    #[error("Fortran-ordered arrays are not supported")]
    UnsupportedOrder,
    #[error("expected a 2-dimensional array, found shape {0:?}")]
    NotTwoDimensional(Vec<u64>),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error(transparent)]
    Cloud(#[from] protgeom_core::Error),
}

/// Element width of an array written by [`write_npy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    fn descr(self) -> &'static str {
        match self {
            Precision::F32 => "<f4",
            Precision::F64 => "<f8",
        }
    }
}

/// Reads an `L x m` array from `path`, widening `f32` data to `f64`.
pub fn read_npy(path: impl AsRef<Path>) -> Result<PointCloud, NpyError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| NpyError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_npy(&bytes)
}

/// Reads an `L x m` array from a stream.
pub fn read_npy_from(mut reader: impl Read) -> Result<PointCloud, NpyError> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|source| NpyError::Io {
            path: PathBuf::from("<stream>"),
            source,
        })?;
    parse_npy(&bytes)
}

/// Parses a complete in-memory NPY file.
pub fn parse_npy(bytes: &[u8]) -> Result<PointCloud, NpyError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(NpyError::BadMagic);
    }
    let (major, minor) = match bytes.get(6..8) {
        Some(v) => (v[0], v[1]),
        None => return Err(NpyError::BadHeader("file ends inside the preamble".into())),
    };
    if !matches!((major, minor), (1, 0) | (2, 0)) {
        return Err(NpyError::UnsupportedVersion(major, minor));
    }

    let mut cursor = Cursor::new(bytes);
    let header =
        NpyHeader::from_reader(&mut cursor).map_err(|e| NpyError::BadHeader(e.to_string()))?;
    let payload = &bytes[cursor.position() as usize..];
    let file = NpyFile::with_header(header, payload);
    let descr = match file.dtype() {
        DType::Plain(ts) => ts.to_string(),
        other => return Err(NpyError::UnsupportedDtype(other.descr())),
    };
    let precision = match descr.as_str() {
        "<f4" => Precision::F32,
        "<f8" => Precision::F64,
        _ => return Err(NpyError::UnsupportedDtype(descr)),
    };
    if file.order() == Order::Fortran {
        return Err(NpyError::UnsupportedOrder);
    }
    let shape = file.shape().to_vec();
    if shape.len() != 2 {
        return Err(NpyError::NotTwoDimensional(shape));
    }

    let width = match precision {
        Precision::F32 => 4,
        Precision::F64 => 8,
    };
    let expected = shape[0]
        .checked_mul(shape[1])
        .and_then(|n| n.checked_mul(width));
    let found = payload.len() as u64;
    match expected {
        Some(expected) if expected <= found => {}
        Some(expected) => return Err(NpyError::Truncated { expected, found }),
        None => return Err(NpyError::BadHeader(format!("shape {shape:?} overflows"))),
    }

    let data: Vec<f64> = match precision {
        Precision::F32 => file
            .into_vec::<f32>()
            .map_err(|e| NpyError::BadHeader(e.to_string()))?
            .into_iter()
            .map(f64::from)
            .collect(),
        Precision::F64 => file
            .into_vec::<f64>()
            .map_err(|e| NpyError::BadHeader(e.to_string()))?,
    };
    Ok(PointCloud::from_row_major(
        shape[0] as usize,
        shape[1] as usize,
        data,
    )?)
}

/// Writes `cloud` as a C-ordered NPY v1.0 array.
pub fn write_npy_to(
    writer: impl Write,
    cloud: &PointCloud,
    precision: Precision,
) -> io::Result<()> {
    let dtype = DType::Plain(
        precision
            .descr()
            .parse::<TypeStr>()
            .expect("static type string"),
    );
    let shape = [cloud.len() as u64, cloud.dim() as u64];
    match precision {
        Precision::F32 => {
            let mut out = npyz::WriteOptions::<f32>::new()
                .dtype(dtype)
                .shape(&shape)
                .writer(writer)
                .begin_nd()?;
            out.extend(cloud.as_slice().iter().map(|&x| x as f32))?;
            out.finish()
        }
        Precision::F64 => {
            let mut out = npyz::WriteOptions::<f64>::new()
                .dtype(dtype)
                .shape(&shape)
                .writer(writer)
                .begin_nd()?;
            out.extend(cloud.as_slice().iter().copied())?;
            out.finish()
        }
    }
}

/// Writes `cloud` to `path`.
pub fn write_npy(
    path: impl AsRef<Path>,
    cloud: &PointCloud,
    precision: Precision,
) -> Result<(), NpyError> {
    let path = path.as_ref();
    let wrap = |source| NpyError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut writer = BufWriter::new(file);
    write_npy_to(&mut writer, cloud, precision).map_err(wrap)?;
    writer.flush().map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_header(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut text = header.to_string();
        let unpadded = 10 + text.len() + 1;
        text.push_str(&" ".repeat((64 - unpadded % 64) % 64));
        text.push('\n');
        let mut bytes = b"\x93NUMPY\x01\x00".to_vec();
        bytes.extend((text.len() as u16).to_le_bytes());
        bytes.extend(text.as_bytes());
        bytes.extend(payload);
        bytes
    }

    fn f64_payload(values: &[f64]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn hand_written_header() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }",
            &f64_payload(&values),
        );
        let cloud = parse_npy(&bytes).unwrap();
        assert_eq!((cloud.len(), cloud.dim()), (2, 3));
        assert_eq!(cloud.as_slice(), &values);
    }

    #[test]
    fn rejections() {
        let payload = f64_payload(&[0.0; 6]);
        assert!(matches!(
            parse_npy(b"\x93NUMPX\x01\x00"),
            Err(NpyError::BadMagic)
        ));
        assert!(matches!(parse_npy(b""), Err(NpyError::BadMagic)));
        let fortran = with_header(
            "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 3), }",
            &payload,
        );
        assert!(matches!(
            parse_npy(&fortran),
            Err(NpyError::UnsupportedOrder)
        ));
        let big = with_header(
            "{'descr': '>f8', 'fortran_order': False, 'shape': (2, 3), }",
            &payload,
        );
        assert!(matches!(
            parse_npy(&big),
            Err(NpyError::UnsupportedDtype(_))
        ));
        let ints = with_header(
            "{'descr': '<i8', 'fortran_order': False, 'shape': (2, 3), }",
            &payload,
        );
        assert!(matches!(
            parse_npy(&ints),
            Err(NpyError::UnsupportedDtype(_))
        ));
        let flat = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (6,), }",
            &payload,
        );
        assert!(matches!(
            parse_npy(&flat),
            Err(NpyError::NotTwoDimensional(_))
        ));
        let short = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }",
            &payload[..47],
        );
        assert!(matches!(
            parse_npy(&short),
            Err(NpyError::Truncated {
                expected: 48,
                found: 47
            })
        ));
    }

    #[test]
    fn round_trip_both_precisions() {
        let cloud =
            PointCloud::from_row_major(3, 2, vec![0.1, -2.5, 3.25, 1e-7, 7.0, 8.5]).unwrap();
        let mut buf = Vec::new();
        write_npy_to(&mut buf, &cloud, Precision::F64).unwrap();
        assert_eq!(parse_npy(&buf).unwrap(), cloud);

        let mut buf = Vec::new();
        write_npy_to(&mut buf, &cloud, Precision::F32).unwrap();
        let back = parse_npy(&buf).unwrap();
        for (a, b) in back.as_slice().iter().zip(cloud.as_slice()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }
}
