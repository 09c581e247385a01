//! Versioned binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "EMGNETNN"
//! version  u32      1
//! spec     u64 length + UTF-8 JSON of the NetworkSpec
//! params   u64 count + f64 LE values, layer order (Network::parameters)
//! buffers  u64 count + f64 LE values (batch-norm running mean/var)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Network, NetworkSpec};
use crate::error::{Error, Result};

pub const NETWORK_MAGIC: &[u8; 8] = b"EMGNETNN";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    write_u64(w, values.len() as u64)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn write_text<W: Write>(w: &mut W, text: &str) -> Result<()> {
    write_u64(w, text.len() as u64)?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a length-prefixed block, refusing lengths above `limit` items.
pub(crate) fn read_f64s<R: Read>(r: &mut R, limit: usize) -> Result<Vec<f64>> {
    let n = read_u64(r)? as usize;
    if n > limit {
        return Err(Error::Data(format!("value block of {n} entries exceeds limit {limit}")));
    }
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

pub(crate) fn read_text<R: Read>(r: &mut R, limit: usize) -> Result<String> {
    let n = read_u64(r)? as usize;
    if n > limit {
        return Err(Error::Data(format!("text block of {n} bytes exceeds limit {limit}")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Data(format!("model header is not UTF-8: {e}")))
}

pub(crate) fn check_header<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Data(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported format version {version}")));
    }
    Ok(())
}

const MAX_SPEC_BYTES: usize = 1 << 20;
const MAX_VALUES: usize = 1 << 28;

impl Network {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(NETWORK_MAGIC)?;
        write_u32(w, FORMAT_VERSION)?;
        write_text(w, &serde_json::to_string(self.spec())?)?;
        write_f64s(w, &self.parameters())?;
        write_f64s(w, &self.buffers())?;
        Ok(())
    }

    /// Loads a network written by [`Network::write_to`]; the result is in
    /// infer mode.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Network> {
        check_header(r, NETWORK_MAGIC)?;
        let spec: NetworkSpec = serde_json::from_str(&read_text(r, MAX_SPEC_BYTES)?)?;
        let mut net = Network::zeros(spec)?;
        let params = read_f64s(r, MAX_VALUES)?;
        net.set_parameters(&params)
            .map_err(|e| Error::Data(format!("parameter block: {e}")))?;
        let buffers = read_f64s(r, MAX_VALUES)?;
        net.set_buffers(&buffers)
            .map_err(|e| Error::Data(format!("buffer block: {e}")))?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        Network::read_from(&mut BufReader::new(File::open(path)?))
    }
}
