//! Little-endian binary archive of a lifted driver.
//!
//! ```text
//! magic  [u8; 8] = "RDDEDRV1"
//! dim, delay_steps, n_points : u64
//! t0, h, gamma               : f64
//! x          n_points × dim
//! area       (n_points − 1) × dim × dim
//! delayed    (n_points − 1) × dim × dim
//! ```

use std::io::{Read, Write};

use ndarray::{s, Array2, Array3};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rough::DelayedRoughPath;

pub const ARCHIVE_MAGIC: &[u8; 8] = b"RDDEDRV1";

fn io(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes the samples visible through `p` (from its offset on).
pub fn write_driver(p: &DelayedRoughPath, mut w: impl Write) -> Result<()> {
    let (_, x, area, delayed) = p.raw_parts();
    let off = p.offset();
    let n = p.n_points();
    let grid = p.grid();
    w.write_all(ARCHIVE_MAGIC).map_err(io)?;
    for v in [p.dim() as u64, p.delay_steps() as u64, n as u64] {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    let mut put = |v: f64| w.write_all(&v.to_le_bytes()).map_err(io);
    for v in [grid.t0(), grid.step(), p.gamma()] {
        put(v)?;
    }
    for v in x.slice(s![off..off + n, ..]) {
        put(*v)?;
    }
    for arr in [area, delayed] {
        for v in arr.slice(s![off..off + n - 1, .., ..]) {
            put(*v)?;
        }
    }
    Ok(())
}

pub fn read_driver(mut r: impl Read) -> Result<DelayedRoughPath> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != ARCHIVE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut word).map_err(io)?;
        Ok(u64::from_le_bytes(word))
    };
    let d = next_u64(&mut r)? as usize;
    let delay_steps = next_u64(&mut r)? as usize;
    let n = next_u64(&mut r)? as usize;
    if d == 0 || n < 2 || d.saturating_mul(d).saturating_mul(n) > 1 << 34 {
        return Err(Error::Format(format!("implausible header: dim {d}, points {n}")));
    }
    let read_f64s = |r: &mut dyn Read, count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf).map_err(io)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
    };
    let head = read_f64s(&mut r, 3)?;
    let grid = TimeGrid::new(head[0], head[1], delay_steps, n)?;
    let x = Array2::from_shape_vec((n, d), read_f64s(&mut r, n * d)?).map_err(|e| Error::Format(e.to_string()))?;
    let area = Array3::from_shape_vec((n - 1, d, d), read_f64s(&mut r, (n - 1) * d * d)?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let delayed = Array3::from_shape_vec((n - 1, d, d), read_f64s(&mut r, (n - 1) * d * d)?)
        .map_err(|e| Error::Format(e.to_string()))?;
    DelayedRoughPath::new(grid, x, area, delayed, head[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::random_path;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = random_path(3, 2, 5, 4);
        let mut buf = Vec::new();
        write_driver(&p, &mut buf).unwrap();
        assert_eq!(&buf[..8], ARCHIVE_MAGIC);
        assert_eq!(buf.len(), 32 + 8 * (3 + 21 * 2 + 2 * 20 * 4));
        let q = read_driver(buf.as_slice()).unwrap();
        assert_eq!(p.raw_parts(), q.raw_parts());
        assert_eq!(p.gamma(), q.gamma());
    }

    #[test]
    fn shifted_view_is_materialized() {
        let p = random_path(4, 1, 5, 4).shift(1).unwrap();
        let mut buf = Vec::new();
        write_driver(&p, &mut buf).unwrap();
        let q = read_driver(buf.as_slice()).unwrap();
        assert_eq!(q.grid(), p.grid());
        assert_eq!(q.reconstruct_area(2, 9).unwrap(), p.reconstruct_area(2, 9).unwrap());
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(read_driver(&b"NOTADRV1"[..]).is_err());
        let p = random_path(5, 1, 5, 2);
        let mut buf = Vec::new();
        write_driver(&p, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_driver(buf.as_slice()), Err(Error::Format(_))));
    }
}
