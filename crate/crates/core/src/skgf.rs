//! SKGF binary field dumps.
//!
//! Layout (all little-endian): magic `b"SKGF"`, `u32` version (= 1), `u32` nx,
//! `u32` ny, `f64` extent, `u32` component count, then every component in
//! turn as `nx·ny` `f64` values in row-major pixel order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: [u8; 4] = *b"SKGF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SkgfDump {
    pub nx: u32,
    pub ny: u32,
    pub extent: f64,
    pub components: Vec<Vec<f64>>,
}

impl SkgfDump {
    pub fn from_fields(fields: &[&ScalarField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::Skgf("a dump needs at least one component".into()))?;
        let grid = *first.grid();
        for f in fields {
            grid.ensure_same(f.grid())?;
        }
        Ok(Self {
            nx: grid.nx() as u32,
            ny: grid.ny() as u32,
            extent: grid.extent(),
            components: fields.iter().map(|f| f.data().to_vec()).collect(),
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx as usize, self.ny as usize, self.extent)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.nx as usize * self.ny as usize;
        if let Some(bad) = self.components.iter().position(|c| c.len() != n) {
            return Err(Error::Skgf(format!(
                "component {bad} has {} values, expected {n}",
                self.components[bad].len()
            )));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * self.components.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.nx.to_le_bytes());
        out.extend_from_slice(&self.ny.to_le_bytes());
        out.extend_from_slice(&self.extent.to_le_bytes());
        out.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        for c in &self.components {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::Skgf(format!("truncated header: {e}")))?;
        if header[0..4] != MAGIC {
            return Err(Error::Skgf(format!("bad magic {:?}", &header[0..4])));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Skgf(format!("unsupported version {version}")));
        }
        let nx = u32_at(8);
        let ny = u32_at(12);
        let extent = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let count = u32_at(24) as usize;
        let n = nx as usize * ny as usize;
        let mut components = Vec::with_capacity(count);
        let mut buf = vec![0u8; 8 * n];
        for c in 0..count {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Skgf(format!("component {c} truncated: {e}")))?;
            components.push(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            );
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Skgf("trailing bytes after last component".into()));
        }
        Ok(Self {
            nx,
            ny,
            extent,
            components,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_bytes()?)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}
