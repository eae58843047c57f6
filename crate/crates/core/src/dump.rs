//! Gradient dump files: one round's client gradients as an `n x D` matrix.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! b"EMAG" | version: u16 | D: u64 | n: u32 | n*D f64 values, row-major
//! ```
//!
//! The binary form carries no client ids; rows are clients `0..n`. The CSV
//! form has header `client_id,coord_0,...,coord_{D-1}`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grad::{ClientUpdate, GradientVector};

pub const MAGIC: &[u8; 4] = b"EMAG";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientDump {
    pub client_ids: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
}

impl GradientDump {
    pub fn new(client_ids: Vec<u32>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if client_ids.len() != rows.len() {
            return Err(Error::Format(format!(
                "{} client ids for {} rows",
                client_ids.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        for (id, row) in client_ids.iter().zip(&rows) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    client_id: *id,
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        Ok(Self { client_ids, rows })
    }

    /// Rows numbered `0..n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..rows.len() as u32).collect();
        Self::new(ids, rows)
    }

    pub fn from_updates(updates: &[ClientUpdate]) -> Result<Self> {
        Self::new(
            updates.iter().map(|u| u.client_id).collect(),
            updates.iter().map(|u| u.gradient.values().to_vec()).collect(),
        )
    }

    pub fn n_clients(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Turns the rows into client updates stamped with `round` and `token`.
    pub fn to_updates(&self, round: u64, token: &[u8]) -> Result<Vec<ClientUpdate>> {
        self.client_ids
            .iter()
            .zip(&self.rows)
            .map(|(&id, row)| {
                Ok(ClientUpdate::new(
                    id,
                    round,
                    GradientVector::from_flat(row.clone())?,
                    token,
                ))
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.n_clients() * self.dim());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_clients() as u32).to_le_bytes());
        for row in &self.rows {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("truncated header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
        let expected = n
            .checked_mul(dim)
            .and_then(|c| c.checked_mul(8))
            .and_then(|c| c.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Format("size overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} bytes for {n} x {dim}, found {}",
                bytes.len()
            )));
        }
        let mut values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let rows = (0..n).map(|_| values.by_ref().take(dim).collect()).collect();
        Self::from_rows(rows)
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("client_id");
        for j in 0..self.dim() {
            out.push_str(&format!(",coord_{j}"));
        }
        out.push('\n');
        for (id, row) in self.client_ids.iter().zip(&self.rows) {
            out.push_str(&id.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns.first() != Some(&"client_id") {
            return Err(Error::Format("first column must be client_id".into()));
        }
        for (j, col) in columns[1..].iter().enumerate() {
            if *col != format!("coord_{j}") {
                return Err(Error::Format(format!("unexpected column {col:?}")));
            }
        }
        let dim = columns.len() - 1;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(Error::Format(format!("row {} has {} fields", lineno + 1, fields.len())));
            }
            let id = fields[0]
                .parse::<u32>()
                .map_err(|e| Error::Format(format!("row {}: client_id: {e}", lineno + 1)))?;
            let row = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Format(format!("row {}: {f:?}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            ids.push(id);
            rows.push(row);
        }
        Self::new(ids, rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    /// Reads either format, sniffing the binary magic.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::from_bytes(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format("neither EMAG nor utf-8 csv".into()))?;
            Self::from_csv(&text)
        }
    }
}
