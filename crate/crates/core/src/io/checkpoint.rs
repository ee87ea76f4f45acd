//! Binary field checkpoints.
//!
//! Layout, all little-endian: `b"BFL1"`, `u32` version, `u32 nx`, `u32 nz`,
//! `f64 a`, `f64 λ`, `f64 t`, `f64 shift_accum`, then `nx·nz` values of `T`
//! followed by `nx·nz` values of `ω`, both in the grid's `i·nz + j` order.

use std::fs;
use std::path::Path;

use crate::evolve::SimState;
use crate::flow::velocity_from_vorticity;
use crate::front::FrontSolution;
use crate::grid::{BoundaryKind, ScalarField, StripGrid};

pub const MAGIC: [u8; 4] = *b"BFL1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4 * 8;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("format: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub shift_accum: f64,
    pub temp: ScalarField,
    pub omega: ScalarField,
}

impl Checkpoint {
    pub fn from_state(state: &SimState) -> Self {
        Checkpoint {
            t: state.t,
            shift_accum: state.shift_accum,
            temp: state.temp.clone(),
            omega: state.flow.omega.clone(),
        }
    }

    pub fn from_front(sol: &FrontSolution) -> Self {
        Checkpoint { t: 0.0, shift_accum: 0.0, temp: sol.t.clone(), omega: sol.omega.clone() }
    }

    pub fn grid(&self) -> &StripGrid {
        self.temp.grid()
    }

    /// Rebuilds the evolver state, recovering the velocity from ω.
    pub fn into_state(self) -> SimState {
        SimState {
            t: self.t,
            shift_accum: self.shift_accum,
            temp: self.temp,
            flow: velocity_from_vorticity(&self.omega),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
        out.extend_from_slice(&(g.nz() as u32).to_le_bytes());
        for v in [g.a(), g.lambda(), self.t, self.shift_accum] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.temp.values().iter().chain(self.omega.values()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a checkpoint. A payload shorter than the header promises is a
    /// truncation; a longer one, or an invalid header, is a format error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let short = |expected| CheckpointError::Truncated { expected, found: bytes.len() };
        if bytes.len() < 8 {
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(CheckpointError::BadMagic(bytes[..4].try_into().unwrap()));
            }
            return Err(short(HEADER_LEN));
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        if bytes.len() < HEADER_LEN {
            return Err(short(HEADER_LEN));
        }
        let (nx, nz) = (u32_at(8) as usize, u32_at(12) as usize);
        let (a, lambda, t, shift_accum) = (f64_at(16), f64_at(24), f64_at(32), f64_at(40));
        let grid = StripGrid::new(a, lambda, nx, nz).map_err(|e| CheckpointError::Format(e.to_string()))?;
        let n = nx * nz;
        let expected = HEADER_LEN + 16 * n;
        if bytes.len() < expected {
            return Err(short(expected));
        }
        if bytes.len() > expected {
            return Err(CheckpointError::Format(format!(
                "payload of {} bytes does not match nx·nz = {n}",
                bytes.len() - HEADER_LEN
            )));
        }
        let field = |start: usize| -> Vec<f64> { (0..n).map(|k| f64_at(start + 8 * k)).collect() };
        let temp = ScalarField::from_values(grid.clone(), BoundaryKind::temperature(), field(HEADER_LEN))
            .map_err(|e| CheckpointError::Format(e.to_string()))?;
        let omega = ScalarField::from_values(grid, BoundaryKind::dirichlet_zero(), field(HEADER_LEN + 8 * n))
            .map_err(|e| CheckpointError::Format(e.to_string()))?;
        Ok(Checkpoint { t, shift_accum, temp, omega })
    }
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> std::io::Result<()> {
    fs::write(path, ck.to_bytes())
}

pub fn read_checkpoint(path: &Path) -> crate::Result<Checkpoint> {
    let bytes = fs::read(path)?;
    Ok(Checkpoint::from_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample() -> Checkpoint {
        let g = make_grid(6.0, 2.0, 9, 7).unwrap();
        let temp = ScalarField::from_fn(g.clone(), BoundaryKind::temperature(), |x, z| {
            (0.5 - x / 12.0) + 0.01 * (x * z).sin()
        });
        let omega = ScalarField::from_fn(g, BoundaryKind::dirichlet_zero(), |x, z| 1e-3 * (x + 0.3).exp() * z.cos() / 7.0);
        Checkpoint { t: 1.0 / 3.0, shift_accum: 2.75, temp, omega }
    }

    fn bits(f: &ScalarField) -> Vec<u64> {
        f.values().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(bits(&back.temp), bits(&ck.temp));
        assert_eq!(bits(&back.omega), bits(&ck.omega));
        assert_eq!(back.t.to_bits(), ck.t.to_bits());
        assert_eq!(back.shift_accum.to_bits(), ck.shift_accum.to_bits());
        assert_eq!(back.grid(), ck.grid());
    }

    #[test]
    fn layout_matches_contract() {
        let ck = sample();
        let b = ck.to_bytes();
        assert_eq!(&b[..4], b"BFL1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 9);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 7);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 6.0);
        assert_eq!(b.len(), 48 + 2 * 8 * 63);
        let first_omega = f64::from_le_bytes(b[48 + 8 * 63..48 + 8 * 64].try_into().unwrap());
        assert_eq!(first_omega.to_bits(), ck.omega.values()[0].to_bits());
    }

    #[test]
    fn error_kinds_are_distinct() {
        let b = sample().to_bytes();
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::BadMagic(_))));
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::BadVersion(2))));
        for cut in [0, 3, 20, 47, 48, b.len() - 1] {
            assert!(
                matches!(Checkpoint::from_bytes(&b[..cut]), Err(CheckpointError::Truncated { .. })),
                "cut at {cut}"
            );
        }
        // header claims 9 × 6 nodes, payload carries 9 × 7
        let mut bad = b.clone();
        bad[12] = 6;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::Format(_))));
        let mut bad = b;
        bad[8] = 2;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bfl");
        let ck = sample();
        write_checkpoint(&p, &ck).unwrap();
        let back = read_checkpoint(&p).unwrap();
        assert_eq!(bits(&back.temp), bits(&ck.temp));
        let state = back.into_state();
        assert_eq!(state.flow.omega.values().len(), 63);
    }
}
