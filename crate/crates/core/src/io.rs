//! Signal files.
//!
//! Binary layout, all little-endian:
//!
//! | bytes   | content                          |
//! |---------|----------------------------------|
//! | 0..4    | finest level `J` (`u32`)         |
//! | 4..8    | origin (`f32`)                   |
//! | 8..16   | length (`f64`)                   |
//! | 16..    | `2^J` cell values (`f64` each)   |
//!
//! The origin is stored in single precision; writing a grid whose origin is
//! not exactly representable as `f32` is refused so files always round-trip.
//! The CSV form is one value per line and carries no grid metadata.

use std::io::{BufRead, BufReader, Read, Write};

use crate::dyadic::{Grid, Signal};
use crate::error::{Error, Result};

pub const HEADER_BYTES: usize = 16;

pub fn write_binary<W: Write>(signal: &Signal, mut out: W) -> Result<()> {
    let grid = signal.grid();
    let origin = grid.origin() as f32;
    if origin as f64 != grid.origin() {
        return Err(Error::Format(format!(
            "origin {} is not representable in the binary header",
            grid.origin()
        )));
    }
    let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * signal.len());
    buf.extend_from_slice(&grid.level().to_le_bytes());
    buf.extend_from_slice(&origin.to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    for v in signal.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Signal> {
    let mut header = [0u8; HEADER_BYTES];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let level = u32::from_le_bytes(header[0..4].try_into().unwrap());
    let origin = f32::from_le_bytes(header[4..8].try_into().unwrap()) as f64;
    let length = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let grid = Grid::new(level, origin, length)?;
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != 8 * grid.cells() {
        return Err(Error::Format(format!(
            "expected {} payload bytes for level {level}, found {}",
            8 * grid.cells(),
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Signal::new(grid, values)
}

pub fn write_csv<W: Write>(signal: &Signal, mut out: W) -> Result<()> {
    let mut text = String::with_capacity(24 * signal.len());
    for v in signal.values() {
        text.push_str(&format!("{v:e}\n"));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads one value per line onto `grid`; blank lines are skipped.
pub fn read_csv<R: Read>(grid: Grid, input: R) -> Result<Signal> {
    let mut values = Vec::with_capacity(grid.cells());
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}: {field:?}", lineno + 1)))?;
        values.push(v);
    }
    Signal::new(grid, values)
}
