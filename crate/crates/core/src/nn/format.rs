//! Flat binary parameter files: the 8 magic bytes `SIHGMLP1`, a little-endian
//! `u32` layer count `L`, `L` little-endian `u64` widths, a `u64` parameter
//! count, then the parameters as little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::mlp::{MlpParams, MlpShape};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SIHGMLP1";

pub fn write_params(params: &MlpParams, out: &mut impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(params.shape.layers.len() as u32).to_le_bytes())?;
    for &w in &params.shape.layers {
        out.write_all(&(w as u64).to_le_bytes())?;
    }
    out.write_all(&(params.data.len() as u64).to_le_bytes())?;
    for v in &params.data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_params(input: &mut impl Read) -> Result<MlpParams> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    let n_layers = u32::from_le_bytes(b) as usize;
    if !(2..=64).contains(&n_layers) {
        return Err(Error::Format(format!("implausible layer count {n_layers}")));
    }
    let layers = (0..n_layers)
        .map(|_| read_u64(input).map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let shape = MlpShape::new(layers).map_err(|e| Error::Format(e.to_string()))?;
    let count = read_u64(input)? as usize;
    if count != shape.param_count() {
        return Err(Error::Format(format!(
            "parameter count {count} does not match shape ({})",
            shape.param_count()
        )));
    }
    let data = (0..count)
        .map(|_| read_u64(input).map(f64::from_bits))
        .collect::<Result<Vec<_>>>()?;
    if !data.iter().all(|v| v.is_finite()) {
        return Err(Error::Format("non-finite parameter".into()));
    }
    MlpParams::from_flat(shape, data)
}

pub fn save_params(params: &MlpParams, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_params(params, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<MlpParams> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_params(&mut f)
}
