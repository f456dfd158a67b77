//! Simulated batches: LIBOR triangles and annuity grids, plus a small
//! versioned binary dump for debugging.

use crate::approx::Triangle;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// LIBOR values `L_i(T_h)` for `h <= i`, per path, all schemes.
pub struct PathBatch {
    pub scheme: String,
    pub seed: u64,
    pub n_rates: usize,
    pub n_paths: usize,
    tri: Triangle,
    /// `data[path * tri.len() + tri.slot(i, h)]`.
    data: Vec<f64>,
}

impl PathBatch {
    pub fn new(scheme: impl Into<String>, seed: u64, n_rates: usize, n_paths: usize) -> Self {
        let tri = Triangle::new(n_rates);
        Self {
            scheme: scheme.into(),
            seed,
            n_rates,
            n_paths,
            data: vec![0.0; n_paths * tri.len()],
            tri,
        }
    }

    #[inline]
    pub fn libor(&self, path: usize, i: usize, h: usize) -> f64 {
        self.data[path * self.tri.len() + self.tri.slot(i, h)]
    }

    pub fn triangle(&self) -> &Triangle {
        &self.tri
    }

    /// Mutable row of one path.
    #[cfg(test)]
    pub(crate) fn path_mut(&mut self, path: usize) -> &mut [f64] {
        let w = self.tri.len();
        &mut self.data[path * w..(path + 1) * w]
    }

    /// Disjoint per-path rows for parallel filling.
    pub(crate) fn rows_mut(&mut self) -> Vec<&mut [f64]> {
        self.data.chunks_mut(self.tri.len()).collect()
    }

    /// Versioned little-endian dump: magic, version, scheme, seed, N,
    /// paths, then the raw values.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::Data(format!("create {}: {e}", path.display())))?;
        let mut out = Vec::with_capacity(64 + self.data.len() * 8);
        out.extend_from_slice(b"LLPB");
        out.extend_from_slice(&1u32.to_le_bytes());
        let scheme = self.scheme.as_bytes();
        out.extend_from_slice(&(scheme.len() as u32).to_le_bytes());
        out.extend_from_slice(scheme);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.n_rates as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_paths as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&out)
            .map_err(|e| Error::Data(format!("write {}: {e}", path.display())))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::Data(format!("read {}: {e}", path.display())))?;
        let mut at = 0usize;
        let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
            if *at + n > bytes.len() {
                return Err(Error::Data("truncated batch dump".into()));
            }
            let s = &bytes[*at..*at + n];
            *at += n;
            Ok(s)
        };
        if take(&mut at, 4)? != b"LLPB" {
            return Err(Error::Data("not a path batch dump".into()));
        }
        let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
        if version != 1 {
            return Err(Error::Data(format!("unsupported dump version {version}")));
        }
        let slen = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let scheme = String::from_utf8(take(&mut at, slen)?.to_vec())
            .map_err(|_| Error::Data("bad scheme string".into()))?;
        let seed = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        let n_rates = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
        let n_paths = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
        let mut batch = Self::new(scheme, seed, n_rates, n_paths);
        let need = batch.data.len();
        let raw = take(&mut at, need * 8)?;
        for (k, chunk) in raw.chunks_exact(8).enumerate() {
            batch.data[k] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(batch)
    }
}

/// Annuity values `A_j(T_h)` for `j = 0..=N`, `1 <= h <= min(j+1, N)`.
pub struct AnnuityBatch {
    pub scheme: String,
    pub seed: u64,
    pub n_rates: usize,
    pub n_paths: usize,
    offsets: Vec<usize>,
    width: usize,
    data: Vec<f64>,
}

impl AnnuityBatch {
    pub fn new(scheme: impl Into<String>, seed: u64, n_rates: usize, n_paths: usize) -> Self {
        let mut offsets = Vec::with_capacity(n_rates + 2);
        let mut acc = 0usize;
        offsets.push(0);
        for j in 0..=n_rates {
            acc += Self::horizons(j, n_rates);
            offsets.push(acc);
        }
        Self {
            scheme: scheme.into(),
            seed,
            n_rates,
            n_paths,
            width: acc,
            data: vec![0.0; n_paths * acc],
            offsets,
        }
    }

    fn horizons(j: usize, n: usize) -> usize {
        (j + 1).min(n)
    }

    #[inline]
    fn slot(&self, j: usize, h: usize) -> usize {
        debug_assert!(h >= 1 && h <= Self::horizons(j, self.n_rates));
        self.offsets[j] + (h - 1)
    }

    /// `A_j(T_h)`.
    pub fn annuity(&self, path: usize, j: usize, h: usize) -> f64 {
        self.data[path * self.width + self.slot(j, h)]
    }

    pub(crate) fn rows_mut(&mut self) -> Vec<&mut [f64]> {
        self.data.chunks_mut(self.width).collect()
    }

    pub(crate) fn slot_of(&self, j: usize, h: usize) -> usize {
        self.slot(j, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_roundtrip_through_dump() {
        let mut b = PathBatch::new("euler-full", 99, 4, 3);
        for p in 0..3 {
            let row = b.path_mut(p);
            for (k, v) in row.iter_mut().enumerate() {
                *v = (p * 100 + k) as f64 * 0.01;
            }
        }
        let dir = std::env::temp_dir().join("levy_libor_batch_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("batch.bin");
        b.write_binary(&path).unwrap();
        let r = PathBatch::read_binary(&path).unwrap();
        assert_eq!(r.scheme, "euler-full");
        assert_eq!(r.seed, 99);
        assert_eq!(r.n_rates, 4);
        assert_eq!(r.n_paths, 3);
        for p in 0..3 {
            for i in 1..=4 {
                for h in 1..=i {
                    assert_eq!(r.libor(p, i, h), b.libor(p, i, h));
                }
            }
        }
    }

    #[test]
    fn dump_rejects_garbage() {
        let dir = std::env::temp_dir().join("levy_libor_batch_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("garbage.bin");
        std::fs::write(&path, b"not a dump").unwrap();
        assert!(PathBatch::read_binary(&path).is_err());
    }

    #[test]
    fn annuity_slots_cover_expected_grid() {
        let b = AnnuityBatch::new("annuity", 1, 5, 2);
        // j = 0 has horizon T_1 only; j = 3 has T_1..T_4; j = 5 capped at T_5
        assert_eq!(AnnuityBatch::horizons(0, 5), 1);
        assert_eq!(AnnuityBatch::horizons(3, 5), 4);
        assert_eq!(AnnuityBatch::horizons(5, 5), 5);
        assert_eq!(b.width, 1 + 2 + 3 + 4 + 5 + 5);
    }
}
