//! `LCK1` kernel files: one ASCII header line
//! `LCK1 <d> <n_theta> <stat|prob> <literal|group>\n` followed by the raw
//! little-endian `f64` payload in θ, y, x order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelVolume, RotationMode};

const MAGIC: &str = "LCK1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelHeader {
    pub d: usize,
    pub n_theta: usize,
    pub kind: KernelKind,
    pub mode: RotationMode,
}

impl KernelHeader {
    pub fn for_kernel(k: &KernelVolume, kind: KernelKind, mode: RotationMode) -> Self {
        Self {
            d: k.d(),
            n_theta: k.n_theta(),
            kind,
            mode,
        }
    }

    fn payload_len(&self) -> usize {
        let side = 2 * self.d + 1;
        side * side * self.n_theta
    }

    pub fn line(&self) -> String {
        format!(
            "{MAGIC} {} {} {} {}\n",
            self.d, self.n_theta, self.kind, self.mode
        )
    }
}

pub fn encode_kernel(k: &KernelVolume, header: &KernelHeader) -> Result<Vec<u8>> {
    if header.d != k.d() || header.n_theta != k.n_theta() {
        return Err(Error::DimensionMismatch(format!(
            "header says d={}, n_theta={} but kernel is d={}, n_theta={}",
            header.d,
            header.n_theta,
            k.d(),
            k.n_theta()
        )));
    }
    let mut out = header.line().into_bytes();
    out.reserve(k.values().len() * 8);
    for v in k.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_kernel(bytes: &[u8]) -> Result<(KernelVolume, KernelHeader)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC.as_bytes() {
        let n = bytes.len().min(MAGIC.len());
        return Err(Error::BadMagic {
            found: String::from_utf8_lossy(&bytes[..n]).into_owned(),
        });
    }
    let nl = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse {
            offset: bytes.len().min(256),
            message: "kernel header line not terminated".into(),
        })?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Parse {
        offset: 0,
        message: "kernel header is not ASCII".into(),
    })?;
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            offset: 0,
            message: format!("kernel header needs 5 fields, got {}", fields.len()),
        });
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse {
            offset: line.find(s).unwrap_or(0),
            message: format!("bad {what} {s:?}"),
        })
    };
    let header = KernelHeader {
        d: num(fields[1], "d")?,
        n_theta: num(fields[2], "n_theta")?,
        kind: fields[3].parse()?,
        mode: fields[4].parse()?,
    };
    if header.n_theta == 0 {
        return Err(Error::DimensionMismatch("n_theta must be positive".into()));
    }
    let payload = &bytes[nl + 1..];
    let expected = header.payload_len() * 8;
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let k = KernelVolume::from_values(header.d, header.n_theta, values)?;
    Ok((k, header))
}

pub fn write_kernel(path: impl AsRef<Path>, k: &KernelVolume, header: &KernelHeader) -> Result<()> {
    crate::raster_io::write_bytes(path.as_ref(), &encode_kernel(k, header)?)
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<(KernelVolume, KernelHeader)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_kernel(&bytes)
}
