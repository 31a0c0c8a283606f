//! Binary codec for recorded power frames.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic    b"PWRF"
//! version  u16 (currently 1)
//! grid     r_min r_max d_min d_max b_min b_max  (6 x f64)
//!          n_range n_doppler n_bearing          (3 x u32)
//! count    u32 number of frames
//! frames   count x { time_step u32, values N x f64 }
//! ```
//!
//! Every frame in a file shares the header's grid.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::grid::{GridSpec, PowerFrame};

const MAGIC: [u8; 4] = *b"PWRF";
const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FrameFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a frame file (bad magic)")]
    BadMagic,
    #[error("unsupported frame file version {0}")]
    UnsupportedVersion(u16),
    #[error("frame file grid is invalid: {0}")]
    BadGrid(#[from] crate::grid::GridError),
    #[error("frame {index} does not match the file grid")]
    GridMismatch { index: usize },
    #[error("file truncated while reading frame {index}")]
    Truncated { index: usize },
}

/// Write a frame sequence. All frames must share one grid.
pub fn write_frames(path: &Path, frames: &[PowerFrame]) -> Result<(), FrameFileError> {
    let mut w = BufWriter::new(File::create(path)?);
    let grid = frames
        .first()
        .map(|f| f.grid.clone())
        .unwrap_or_else(|| GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1, 1, 1).unwrap());
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [grid.r_min, grid.r_max, grid.d_min, grid.d_max, grid.b_min, grid.b_max] {
        w.write_all(&v.to_le_bytes())?;
    }
    for n in [grid.n_range, grid.n_doppler, grid.n_bearing] {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    w.write_all(&(frames.len() as u32).to_le_bytes())?;
    for (index, frame) in frames.iter().enumerate() {
        if frame.grid != grid {
            return Err(FrameFileError::GridMismatch { index });
        }
        w.write_all(&frame.time_step.to_le_bytes())?;
        for v in frame.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read back a frame sequence written by [`write_frames`].
pub fn read_frames(path: &Path) -> Result<Vec<PowerFrame>, FrameFileError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(FrameFileError::BadMagic);
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(FrameFileError::UnsupportedVersion(version));
    }
    let mut g = [0f64; 6];
    for v in &mut g {
        *v = read_f64(&mut r)?;
    }
    let n_range = read_u32(&mut r)? as usize;
    let n_doppler = read_u32(&mut r)? as usize;
    let n_bearing = read_u32(&mut r)? as usize;
    let grid = GridSpec::new(g[0], g[1], g[2], g[3], g[4], g[5], n_range, n_doppler, n_bearing)?;
    let count = read_u32(&mut r)? as usize;
    let n = grid.cell_count();
    let mut frames = Vec::with_capacity(count);
    for index in 0..count {
        let time_step = read_u32(&mut r).map_err(|_| FrameFileError::Truncated { index })?;
        let mut values = vec![0f64; n];
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)
            .map_err(|_| FrameFileError::Truncated { index })?;
        for (v, chunk) in values.iter_mut().zip(buf.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        frames.push(
            PowerFrame::new(grid.clone(), time_step, values)
                .expect("frame length matches grid by construction"),
        );
    }
    Ok(frames)
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16, FrameFileError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, FrameFileError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, FrameFileError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::render_frame;
    use crate::scenario::bench_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = bench_grid();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let frames: Vec<_> = (1..=5)
            .map(|k| render_frame(&[], &grid, 0.25, k, &mut rng).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.bin");
        write_frames(&path, &frames).unwrap();
        let back = read_frames(&path).unwrap();
        assert_eq!(frames, back);
    }

    #[test]
    fn empty_sequence_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.bin");
        write_frames(&path, &[]).unwrap();
        assert!(read_frames(&path).unwrap().is_empty());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage.bin");
        std::fs::write(&path, b"not a frame file at all").unwrap();
        assert!(matches!(read_frames(&path), Err(FrameFileError::BadMagic)));
    }

    #[test]
    fn detects_truncation() {
        let grid = bench_grid();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let frames = vec![render_frame(&[], &grid, 0.25, 1, &mut rng).unwrap()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.bin");
        write_frames(&path, &frames).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(
            read_frames(&path),
            Err(FrameFileError::Truncated { .. })
        ));
    }
}
