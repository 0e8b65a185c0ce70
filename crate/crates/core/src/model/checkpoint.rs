//! Binary checkpoint.
//!
//! Layout (all integers and floats little-endian, matrices row-major):
//!
//! ```text
//! magic      16 bytes  "TEMPORA-CKPT\0\0\0\0"
//! version    u32
//! K, d, V    u64 x 3
//! W          f64 x K*d
//! b          f64 x K
//! A          f64 x K*K
//! phi        f64 x K*V
//! last_state f64 x K     final slice topic state, seeds forecasting
//! sigma      f64
//! beta       f64
//! config     u64 length + UTF-8 `key = value` lines
//! vocabulary u64 count, then per term u64 length + UTF-8
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::ModelParams;
use crate::binfmt::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 16] = b"TEMPORA-CKPT\0\0\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub last_state: Array1<f64>,
    pub config_echo: String,
    pub vocabulary: Vec<String>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut w = ByteWriter::new();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.u64(p.k() as u64);
        w.u64(p.dim() as u64);
        w.u64(p.vocab_size() as u64);
        w.f64s(p.w.iter());
        w.f64s(p.b.iter());
        w.f64s(p.a.iter());
        w.f64s(p.phi.iter());
        w.f64s(self.last_state.iter());
        w.f64(p.sigma);
        w.f64(p.beta);
        w.str(&self.config_echo);
        w.u64(self.vocabulary.len() as u64);
        for t in &self.vocabulary {
            w.str(t);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(16).map_err(|_| "file too short for magic header".to_string())?;
        if magic != CHECKPOINT_MAGIC {
            return Err("bad magic header".into());
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let k = r.u64()? as usize;
        let d = r.u64()? as usize;
        let v = r.u64()? as usize;
        let matrix = |r: &mut ByteReader, rows: usize, cols: usize| {
            let n = rows.checked_mul(cols).ok_or("dimension overflow")?;
            let data = r.f64s(n)?;
            Ok::<_, String>(Array2::from_shape_vec((rows, cols), data).expect("length matches"))
        };
        let w = matrix(&mut r, k, d)?;
        let b = Array1::from(r.f64s(k)?);
        let a = matrix(&mut r, k, k)?;
        let phi = matrix(&mut r, k, v)?;
        let last_state = Array1::from(r.f64s(k)?);
        let sigma = r.f64()?;
        let beta = r.f64()?;
        let config_echo = r.str()?;
        let count = r.u64()? as usize;
        if count != v {
            return Err(format!("vocabulary has {count} terms but V = {v}"));
        }
        let vocabulary = (0..count).map(|_| r.str()).collect::<std::result::Result<_, _>>()?;
        r.finish()?;
        let params = ModelParams {
            w,
            b,
            a,
            phi,
            sigma,
            beta,
        };
        params.check_finite().map_err(|e| e.to_string())?;
        Ok(Self {
            params,
            last_state,
            config_echo,
            vocabulary,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|message| Error::Checkpoint {
            path: path.to_path_buf(),
            message,
        })
    }
}
