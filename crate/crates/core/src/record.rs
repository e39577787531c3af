//! Binary persistence for measurement records.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       5     magic "OBCS1"
//! 5       8     n   (u64)
//! 13      8     m   (u64)
//! 21      1     model tag (0 noiseless, 1 bitflip, 2 prequant, 3 logistic)
//! 22      8     model parameter (f64; 0 for noiseless)
//! 30      8     rng seed   (u64)
//! 38      8     rng stream (u64)
//! 46      -     y as packed sign bits, LSB-first, bit set = +1, zero padding
//! ...     8n    c as f64
//! ```
//!
//! Retained rows and covariance are never persisted; a record file carries
//! exactly what the estimator needs. Decoding validates sizes before any
//! allocation and rejects non-finite direction entries and nonzero padding
//! bits, so the decoder is total on untrusted input.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::measure::{LinkModel, MeasurementRecord};
use crate::sampling::RngSpec;

pub const MAGIC: &[u8; 5] = b"OBCS1";
const HEADER_LEN: usize = 5 + 8 + 8 + 1 + 8 + 8 + 8;

pub fn encode(record: &MeasurementRecord) -> Vec<u8> {
    let n = record.n();
    let m = record.m;
    let mut out = Vec::with_capacity(HEADER_LEN + m.div_ceil(8) + 8 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.push(record.model.tag_byte());
    out.extend_from_slice(&record.model.param().to_le_bytes());
    out.extend_from_slice(&record.rng.seed.to_le_bytes());
    out.extend_from_slice(&record.rng.stream.to_le_bytes());

    let mut byte = 0u8;
    for (i, &yi) in record.y.iter().enumerate() {
        if yi == 1 {
            byte |= 1 << (i % 8);
        }
        if i % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if m % 8 != 0 {
        out.push(byte);
    }
    for &cj in &record.c {
        out.extend_from_slice(&cj.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<MeasurementRecord> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "record too short: {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..5] != MAGIC {
        return Err(Error::Format("bad magic, expected OBCS1".into()));
    }
    let n = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let m = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let tag = bytes[21];
    let param = f64::from_le_bytes(bytes[22..30].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[30..38].try_into().unwrap());
    let stream = u64::from_le_bytes(bytes[38..46].try_into().unwrap());

    if m == 0 {
        return Err(Error::Format("record declares zero measurements".into()));
    }
    if n == 0 {
        return Err(Error::Format("record declares zero dimension".into()));
    }
    // Validate the declared payload size against the actual buffer before
    // allocating anything, so a hostile header cannot request memory.
    let y_bytes = (m as u128).div_ceil(8);
    let expected = HEADER_LEN as u128 + y_bytes + 8 * n as u128;
    if bytes.len() as u128 != expected {
        return Err(Error::Format(format!(
            "record length {} does not match declared n={n}, m={m} (expected {expected})",
            bytes.len()
        )));
    }
    let n = n as usize;
    let m = m as usize;
    if !param.is_finite() {
        return Err(Error::Format("model parameter is not finite".into()));
    }
    let model = LinkModel::from_tag(tag, param)?;

    let y_start = HEADER_LEN;
    let y_end = y_start + m.div_ceil(8);
    let packed = &bytes[y_start..y_end];
    let mut y = Vec::with_capacity(m);
    for i in 0..m {
        let bit = (packed[i / 8] >> (i % 8)) & 1;
        y.push(if bit == 1 { 1i8 } else { -1i8 });
    }
    if m % 8 != 0 {
        let padding = packed[m / 8] >> (m % 8);
        if padding != 0 {
            return Err(Error::Format("nonzero padding bits in sign block".into()));
        }
    }

    let mut c = Vec::with_capacity(n);
    for j in 0..n {
        let start = y_end + 8 * j;
        let v = f64::from_le_bytes(bytes[start..start + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format(format!("direction entry {j} is not finite")));
        }
        c.push(v);
    }

    Ok(MeasurementRecord {
        y,
        c,
        m,
        rows: None,
        rng: RngSpec::with_stream(seed, stream),
        model,
        covariance: None,
    })
}

pub fn write_file(record: &MeasurementRecord, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(record))?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<MeasurementRecord> {
    let bytes = fs::read(path.as_ref()).map_err(|e| {
        Error::Io(format!("{}: {e}", path.as_ref().display()))
    })?;
    decode(&bytes)
}
