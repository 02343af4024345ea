//! Self-describing binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "CAUSATTN"
//! version  u32      currently 1
//! meta     u64 length + JSON bytes (caller-defined metadata)
//! config   u64 length + JSON-encoded EncoderConfig
//! tensors  u64 count, then per tensor:
//!            u64 name length + UTF-8 name
//!            u64 rows, u64 cols
//!            rows * cols f64 values
//! ```
//!
//! Tensors are written in the canonical [`EncoderParams::tensors`] order and
//! the reader insists on it, so a checkpoint written from a given state is
//! byte-for-byte reproducible and loads without any name lookup table.

use super::{EncoderConfig, EncoderParams};
use crate::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::{BufReader, BufWriter, Read, Write};

const MAGIC: &[u8; 8] = b"CAUSATTN";
const VERSION: u32 = 1;

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_block<R: Read>(r: &mut R, what: &str) -> Result<Vec<u8>> {
    let len = read_u64(r)? as usize;
    // A fence against nonsense lengths from corrupt files.
    if len > 1 << 32 {
        return Err(Error::invalid(format!("{what} length {len} is implausible")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Serializes metadata, config, and every parameter tensor to `w`.
pub fn write_checkpoint<W: Write, M: Serialize>(
    w: W,
    meta: &M,
    cfg: &EncoderConfig,
    params: &EncoderParams,
) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;

    let meta_bytes = serde_json::to_vec(meta)
        .map_err(|e| Error::invalid(format!("metadata serialization: {e}")))?;
    write_u64(&mut w, meta_bytes.len() as u64)?;
    w.write_all(&meta_bytes)?;

    let cfg_bytes = serde_json::to_vec(cfg)
        .map_err(|e| Error::invalid(format!("config serialization: {e}")))?;
    write_u64(&mut w, cfg_bytes.len() as u64)?;
    w.write_all(&cfg_bytes)?;

    let tensors = params.tensors();
    write_u64(&mut w, tensors.len() as u64)?;
    for (name, m) in tensors {
        write_u64(&mut w, name.len() as u64)?;
        w.write_all(name.as_bytes())?;
        write_u64(&mut w, m.rows() as u64)?;
        write_u64(&mut w, m.cols() as u64)?;
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint back; the config in the file dictates all shapes.
pub fn read_checkpoint<R: Read, M: DeserializeOwned>(
    r: R,
) -> Result<(M, EncoderConfig, EncoderParams)> {
    let mut r = BufReader::new(r);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid("not a checkpoint file (bad magic)"));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    let version = u32::from_le_bytes(ver);
    if version != VERSION {
        return Err(Error::invalid(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }

    let meta_bytes = read_block(&mut r, "metadata")?;
    let meta: M = serde_json::from_slice(&meta_bytes)
        .map_err(|e| Error::invalid(format!("checkpoint metadata: {e}")))?;

    let cfg_bytes = read_block(&mut r, "config")?;
    let cfg: EncoderConfig = serde_json::from_slice(&cfg_bytes)
        .map_err(|e| Error::invalid(format!("checkpoint config: {e}")))?;
    cfg.validate()?;

    let mut params = EncoderParams::zeros(&cfg);
    let expected = params.tensors().len() as u64;
    let count = read_u64(&mut r)?;
    if count != expected {
        return Err(Error::invalid(format!(
            "checkpoint holds {count} tensors, config implies {expected}"
        )));
    }
    for (name, m) in params.tensors_mut() {
        let file_name = read_block(&mut r, "tensor name")?;
        let file_name = String::from_utf8(file_name)
            .map_err(|_| Error::invalid("tensor name is not UTF-8"))?;
        if file_name != name {
            return Err(Error::invalid(format!(
                "tensor order mismatch: file has `{file_name}`, expected `{name}`"
            )));
        }
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        if rows != m.rows() || cols != m.cols() {
            return Err(Error::invalid(format!(
                "tensor `{name}` is {rows}x{cols} in the file, config implies {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut buf = [0u8; 8];
        for v in m.data_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }

    Ok((meta, cfg, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Mode;
    use serde_json::json;

    fn sample() -> (serde_json::Value, EncoderConfig, EncoderParams) {
        let cfg = EncoderConfig::tiny(Mode::Casam, 12, 3);
        let params = EncoderParams::init(&cfg, 42);
        let meta = json!({"epoch": 3, "note": "round trip"});
        (meta, cfg, params)
    }

    #[test]
    fn round_trip_is_lossless() {
        let (meta, cfg, params) = sample();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &meta, &cfg, &params).unwrap();
        let (meta2, cfg2, params2): (serde_json::Value, _, _) =
            read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(meta, meta2);
        assert_eq!(cfg, cfg2);
        assert_eq!(params, params2);
    }

    #[test]
    fn writing_twice_yields_identical_bytes() {
        let (meta, cfg, params) = sample();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_checkpoint(&mut a, &meta, &cfg, &params).unwrap();
        write_checkpoint(&mut b, &meta, &cfg, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupt_and_truncated_files_are_rejected() {
        let (meta, cfg, params) = sample();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &meta, &cfg, &params).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] ^= 0xFF;
        assert!(read_checkpoint::<_, serde_json::Value>(bad_magic.as_slice()).is_err());

        let truncated = &buf[..buf.len() / 2];
        assert!(read_checkpoint::<_, serde_json::Value>(truncated).is_err());

        let mut bad_version = buf.clone();
        bad_version[8] = 99;
        assert!(read_checkpoint::<_, serde_json::Value>(bad_version.as_slice()).is_err());
    }
}
