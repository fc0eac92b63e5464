//! Event stream serialisation.
//!
//! CSV: header `dimension,time`, one row per event, dimensions in order.
//!
//! Binary (all little-endian): a 16-byte header of magic `b"MGEV"`, `d` as
//! u32 and the total event count as u64; then the horizon (f64), `d`
//! per-dimension counts (u64) and finally every dimension's times (f64).

use std::io::{BufRead, Read, Write};

use super::EventTimes;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"MGEV";

pub fn write_csv<W: Write>(events: &EventTimes, mut out: W) -> Result<()> {
    writeln!(out, "dimension,time")?;
    for (i, d) in events.iter().enumerate() {
        for t in d {
            writeln!(out, "{i},{t}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads the CSV layout back. The dimension count and horizon are not part
/// of the CSV and must be supplied.
pub fn read_csv<R: BufRead>(input: R, dim: usize, horizon: f64) -> Result<EventTimes> {
    let mut dims = vec![Vec::new(); dim];
    for (row, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (row == 0 && line.starts_with("dimension")) {
            continue;
        }
        let bad = |column| Error::Parse {
            row: row + 1,
            column,
            value: line.to_owned(),
        };
        let (d, t) = line.split_once(',').ok_or_else(|| bad(1))?;
        let d: usize = d.trim().parse().map_err(|_| bad(1))?;
        let t: f64 = t.trim().parse().map_err(|_| bad(2))?;
        dims.get_mut(d).ok_or_else(|| bad(1))?.push(t);
    }
    EventTimes::new(dims, horizon)
}

pub fn write_binary<W: Write>(events: &EventTimes, mut out: W) -> Result<()> {
    let counts = events.counts();
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    out.write_all(&BINARY_MAGIC)?;
    out.write_all(&(events.dim() as u32).to_le_bytes())?;
    out.write_all(&total.to_le_bytes())?;
    out.write_all(&events.horizon().to_le_bytes())?;
    for c in &counts {
        out.write_all(&(*c as u64).to_le_bytes())?;
    }
    for d in events.iter() {
        for t in d {
            out.write_all(&t.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<EventTimes> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[..4] != BINARY_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let d = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let total = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let horizon = f64::from_le_bytes(word);
    let mut counts = Vec::with_capacity(d);
    for _ in 0..d {
        input.read_exact(&mut word)?;
        counts.push(u64::from_le_bytes(word));
    }
    if counts.iter().sum::<u64>() != total {
        return Err(Error::Format(format!(
            "per-dimension counts sum to {} but header says {total}",
            counts.iter().sum::<u64>()
        )));
    }
    let mut dims = Vec::with_capacity(d);
    for &c in &counts {
        let mut times = Vec::with_capacity(c as usize);
        for _ in 0..c {
            input.read_exact(&mut word)?;
            times.push(f64::from_le_bytes(word));
        }
        dims.push(times);
    }
    EventTimes::new(dims, horizon)
}
