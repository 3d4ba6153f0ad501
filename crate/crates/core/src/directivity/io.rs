//! Binary container for directivity tables plus a `key=value` sidecar.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   "DIRT"
//! u32     version (1)
//! u32     kind (0 hrtf-left, 1 hrtf-right, 2 vdp)
//! u32     azimuth count A
//! u32     bin count B
//! f64     bin_hz
//! f64     reference distance in meters (+inf for plane-wave tables)
//! f64 × A azimuths in degrees
//! f64 × A·B·2 responses, row-major, (re, im) interleaved
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::{DirectivityTable, TableKind};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DIRT";
const VERSION: u32 = 1;

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_table(table: &DirectivityTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    encode(table, &mut w)?;
    w.flush()?;

    let az = table.azimuths_deg();
    let meta = format!(
        "kind={}\nversion={VERSION}\nazimuths={}\nazimuth_min_deg={}\nazimuth_max_deg={}\nbins={}\nbin_hz={}\nreference_distance_m={}\n",
        table.kind().name(),
        az.len(),
        az[0],
        az[az.len() - 1],
        table.bins(),
        table.bin_hz(),
        table.reference_distance_m(),
    );
    std::fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn read_table(path: impl AsRef<Path>) -> Result<DirectivityTable> {
    let mut r = BufReader::new(File::open(path)?);
    decode(&mut r)
}

pub(crate) fn encode(table: &DirectivityTable, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(table.kind().code())?;
    w.write_u32::<LittleEndian>(table.azimuths_deg().len() as u32)?;
    w.write_u32::<LittleEndian>(table.bins() as u32)?;
    w.write_f64::<LittleEndian>(table.bin_hz())?;
    w.write_f64::<LittleEndian>(table.reference_distance_m())?;
    for &a in table.azimuths_deg() {
        w.write_f64::<LittleEndian>(a)?;
    }
    for row in table.responses() {
        for c in row {
            w.write_f64::<LittleEndian>(c.re)?;
            w.write_f64::<LittleEndian>(c.im)?;
        }
    }
    Ok(())
}

pub(crate) fn decode(r: &mut impl Read) -> Result<DirectivityTable> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a directivity table (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported table version {version}")));
    }
    let kind = TableKind::from_code(r.read_u32::<LittleEndian>()?)
        .ok_or_else(|| Error::Format("unknown table kind".into()))?;
    let n_az = r.read_u32::<LittleEndian>()? as usize;
    let bins = r.read_u32::<LittleEndian>()? as usize;
    if n_az > 1 << 16 || bins > 1 << 24 {
        return Err(Error::Format("implausible table dimensions".into()));
    }
    let bin_hz = r.read_f64::<LittleEndian>()?;
    let reference = r.read_f64::<LittleEndian>()?;
    let mut az = vec![0.0; n_az];
    r.read_f64_into::<LittleEndian>(&mut az)?;
    let mut flat = vec![0.0; n_az * bins * 2];
    r.read_f64_into::<LittleEndian>(&mut flat)?;
    let responses = flat
        .chunks_exact(bins * 2)
        .map(|row| row.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
        .collect();
    DirectivityTable::new(az, responses, bin_hz, kind, reference)
}
