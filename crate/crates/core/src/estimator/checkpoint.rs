//! Model checkpoints.
//!
//! ```text
//! magic   "BOCN"
//! u32     version (1)
//! u32     input channels, u32 input length
//! u32     convolution count, then (out, kernel, stride, padding) u32 each
//! u32     dense count, then output widths u32 each
//! f64     dropout
//! f32 × D input mean, f32 × D input scale   (D = channels × length)
//! f32 ×   parameter blocks, layer by layer, weights then biases
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::network::{Architecture, ConvSpec};
use super::EstimatorModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"BOCN";
const VERSION: u32 = 1;
const MAX_LAYERS: u32 = 64;

pub fn write_model(model: &EstimatorModel, w: &mut impl Write) -> Result<()> {
    let a = &model.arch;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(a.input_channels as u32)?;
    w.write_u32::<LittleEndian>(a.input_len as u32)?;
    w.write_u32::<LittleEndian>(a.conv.len() as u32)?;
    for c in &a.conv {
        for v in [c.out_channels, c.kernel, c.stride, c.padding] {
            w.write_u32::<LittleEndian>(v as u32)?;
        }
    }
    w.write_u32::<LittleEndian>(a.dense.len() as u32)?;
    for &d in &a.dense {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    w.write_f64::<LittleEndian>(a.dropout)?;
    for &v in model.input_mean.iter().chain(&model.input_scale).chain(&model.params) {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_model(r: &mut impl Read) -> Result<EstimatorModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let input_channels = r.read_u32::<LittleEndian>()? as usize;
    let input_len = r.read_u32::<LittleEndian>()? as usize;
    let n_conv = r.read_u32::<LittleEndian>()?;
    if n_conv > MAX_LAYERS {
        return Err(Error::Format("implausible layer count".into()));
    }
    let mut conv = Vec::with_capacity(n_conv as usize);
    for _ in 0..n_conv {
        let mut v = [0usize; 4];
        for x in &mut v {
            *x = r.read_u32::<LittleEndian>()? as usize;
        }
        conv.push(ConvSpec {
            out_channels: v[0],
            kernel: v[1],
            stride: v[2],
            padding: v[3],
        });
    }
    let n_dense = r.read_u32::<LittleEndian>()?;
    if n_dense > MAX_LAYERS {
        return Err(Error::Format("implausible layer count".into()));
    }
    let dense = (0..n_dense)
        .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
        .collect::<std::io::Result<Vec<_>>>()?;
    let arch = Architecture {
        input_channels,
        input_len,
        conv,
        dense,
        dropout: r.read_f64::<LittleEndian>()?,
    };
    arch.validate()
        .map_err(|e| Error::Format(format!("inconsistent layer chain: {e}")))?;
    let d = input_channels * input_len;
    let n = arch.param_count()?;
    if d + n > 1 << 30 {
        return Err(Error::Format("implausible parameter count".into()));
    }
    let mut input_mean = vec![0.0; d];
    let mut input_scale = vec![0.0; d];
    let mut params = vec![0.0; n];
    r.read_f32_into::<LittleEndian>(&mut input_mean)?;
    r.read_f32_into::<LittleEndian>(&mut input_scale)?;
    r.read_f32_into::<LittleEndian>(&mut params)?;
    let model = EstimatorModel {
        arch,
        params,
        input_mean,
        input_scale,
    };
    if !model.all_finite() {
        return Err(Error::Format("checkpoint holds non-finite values".into()));
    }
    Ok(model)
}

pub fn save_model(model: &EstimatorModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EstimatorModel> {
    read_model(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_and_rejects_broken_chain() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = EstimatorModel::init(Architecture::desk(64), &mut rng).unwrap();
        let mut bytes = Vec::new();
        write_model(&m, &mut bytes).unwrap();
        assert_eq!(read_model(&mut bytes.as_slice()).unwrap(), m);

        // kernel of the first convolution larger than the padded input
        let mut bad = bytes.clone();
        bad[24..28].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(read_model(&mut bad.as_slice()), Err(Error::Format(_))));
        assert!(read_model(&mut &bytes[..bytes.len() - 4]).is_err());
    }
}
