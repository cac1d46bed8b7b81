//! Columnar binary draw files.
//!
//! Layout (all integers u64, all values f64, little-endian):
//! magic, column count, draw count, then for each column its label as
//! (byte length, UTF-8 bytes), then the values column by column.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DRAW_FILE_MAGIC: &[u8; 8] = b"TVPDRAW1";

#[derive(Clone, Debug, PartialEq)]
pub struct DrawTable {
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl DrawTable {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(Error::shape(format!("{} labels for {} columns", labels.len(), columns.len())));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::shape("draw columns have different lengths"));
            }
        }
        Ok(Self { labels, columns })
    }

    pub fn n_draws(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|i| self.columns[i].as_slice())
    }

    /// Concatenate column sets with the same draw count (e.g. equations of a VAR).
    pub fn hstack(tables: Vec<DrawTable>) -> Result<Self> {
        let mut labels = Vec::new();
        let mut columns = Vec::new();
        for t in tables {
            labels.extend(t.labels);
            columns.extend(t.columns);
        }
        Self::new(labels, columns)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DRAW_FILE_MAGIC)?;
        w.write_all(&(self.columns.len() as u64).to_le_bytes())?;
        w.write_all(&(self.n_draws() as u64).to_le_bytes())?;
        for l in &self.labels {
            w.write_all(&(l.len() as u64).to_le_bytes())?;
            w.write_all(l.as_bytes())?;
        }
        for c in &self.columns {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DRAW_FILE_MAGIC {
            return Err(Error::data("not a draw file (bad magic bytes)"));
        }
        let n_cols = read_u64(&mut r)? as usize;
        let n_draws = read_u64(&mut r)? as usize;
        let mut labels = Vec::with_capacity(n_cols);
        for _ in 0..n_cols {
            let len = read_u64(&mut r)? as usize;
            if len > 1 << 20 {
                return Err(Error::data("draw file label is implausibly long"));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            labels.push(String::from_utf8(buf).map_err(|_| Error::data("draw file label is not UTF-8"))?);
        }
        let mut columns = Vec::with_capacity(n_cols);
        let mut b = [0u8; 8];
        for _ in 0..n_cols {
            let mut c = Vec::with_capacity(n_draws);
            for _ in 0..n_draws {
                r.read_exact(&mut b)?;
                c.push(f64::from_le_bytes(b));
            }
            columns.push(c);
        }
        Self::new(labels, columns)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let t = DrawTable::new(
            vec!["beta0:x1".into(), "sqrt_v:x1".into()],
            vec![vec![1.5, -0.0, f64::MIN_POSITIVE], vec![1e300, 2.0, -3.25]],
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], DRAW_FILE_MAGIC);
        assert_eq!(buf.len(), 8 + 16 + (8 + 8) + (8 + 9) + 6 * 8);
        let back = DrawTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("sqrt_v:x1").unwrap()[2], -3.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DrawTable::read_from(&b"NOTADRAW"[..]).is_err());
        assert!(DrawTable::new(vec!["a".into()], vec![]).is_err());
        assert!(DrawTable::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![]]).is_err());
    }
}
