//! Binary field files and CSV curves.
//!
//! Field layout, all little-endian: magic `DFW1`, then u16 version, ndim, ncomp,
//! mode (0 collocated, 1 staggered), u32 dims × ndim, f64 offsets × ndim per
//! component, and the components as row-major f64 arrays.

use std::io::Write;
use std::path::Path;

use dfwave::sampling::StaggeredField;
use ndarray::{ArrayD, IxDyn};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"DFW1";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad field file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub mode: u16,
    pub dims: Vec<usize>,
    pub offsets: Vec<Vec<f64>>,
    pub components: Vec<ArrayD<f64>>,
}

impl FieldFile {
    pub fn from_staggered(f: &StaggeredField) -> Self {
        FieldFile {
            mode: u16::from(f.is_staggered()),
            dims: f.components[0].shape().to_vec(),
            offsets: f.offsets.clone(),
            components: f.components.clone(),
        }
    }

    /// One collocated scalar component.
    pub fn scalar(a: ArrayD<f64>) -> Self {
        FieldFile {
            mode: 0,
            dims: a.shape().to_vec(),
            offsets: vec![vec![0.0; a.ndim()]],
            components: vec![a],
        }
    }

    pub fn to_staggered(&self) -> Result<StaggeredField, FileError> {
        StaggeredField::new(self.components.clone(), self.offsets.clone()).map_err(|e| FileError::Format(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let nd = self.dims.len();
        let mut out = Vec::with_capacity(8 + 6 + 4 * nd + self.components.iter().map(|c| 8 * (c.len() + nd)).sum::<usize>());
        out.extend_from_slice(MAGIC);
        for v in [VERSION, nd as u16, self.components.len() as u16, self.mode] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for o in self.offsets.iter().flatten() {
            out.extend_from_slice(&o.to_le_bytes());
        }
        for c in &self.components {
            // iter() walks in logical row-major order whatever the memory layout
            for v in c.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, FileError> {
        let mut r = Reader { b, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(FileError::Format("missing DFW1 magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(FileError::Format(format!("unsupported version {version}")));
        }
        let (nd, nc, mode) = (r.u16()? as usize, r.u16()? as usize, r.u16()?);
        if nd == 0 || nc == 0 || mode > 1 {
            return Err(FileError::Format(format!("bad header: ndim {nd}, ncomp {nc}, mode {mode}")));
        }
        let dims = (0..nd).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let offsets = (0..nc)
            .map(|_| (0..nd).map(|_| r.f64()).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let len: usize = dims.iter().product();
        if r.b.len() - r.pos != nc * len * 8 {
            return Err(FileError::Format(format!(
                "payload has {} bytes, expected {}",
                r.b.len() - r.pos,
                nc * len * 8
            )));
        }
        let components = (0..nc)
            .map(|_| {
                let v = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                ArrayD::from_shape_vec(IxDyn(&dims), v).map_err(|e| FileError::Format(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldFile { mode, dims, offsets, components })
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let b = std::fs::read(path).map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&b)
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        write_atomic(path, &self.to_bytes())
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FileError> {
        let s = self.b.get(self.pos..self.pos + n).ok_or_else(|| FileError::Format("truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, FileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    let io = |source| FileError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// CSV text with a header line; reals are written with 17 significant digits.
pub fn curve_csv(header: &str, rows: &[(usize, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (n, v) in rows {
        s.push_str(&format!("{n},{v:.16e}\n"));
    }
    s
}

/// Parses a two-column curve written by [`curve_csv`].
pub fn parse_curve(text: &str) -> Result<(String, Vec<(usize, f64)>), FileError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FileError::Format("empty curve".into()))?.to_string();
    let rows = lines
        .map(|l| {
            let bad = || FileError::Format(format!("bad row {l:?}"));
            let (a, b) = l.split_once(',').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>, FileError>>()?;
    Ok((header, rows))
}
