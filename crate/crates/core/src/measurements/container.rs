//! JSON container for replayable ensembles and ground truths.
//!
//! Complex arrays are stored as base64 of little-endian `f64` pairs
//! `(re, im)` in row-major order.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{EnsembleKind, GroundTruth, MeasurementEnsemble};
use crate::{CMatrix, CVector, Complex64, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn encode_complex<'a, I: IntoIterator<Item = &'a Complex64>>(values: I) -> String {
    let mut bytes = Vec::new();
    for c in values {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_complex(text: &str, expected_len: usize) -> Result<Vec<Complex64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::InvalidArgument(format!("bad base64 payload: {e}")))?;
    if bytes.len() != expected_len * 16 {
        return Err(Error::dims("complex payload", expected_len * 16, bytes.len()));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
            let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

pub fn decode_matrix(text: &str, rows: usize, cols: usize) -> Result<CMatrix> {
    let data = decode_complex(text, rows * cols)?;
    CMatrix::from_shape_vec((rows, cols), data).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub schema: u32,
    pub kind: EnsembleKind,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub spectral_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

impl From<&MeasurementEnsemble> for EnsembleRecord {
    fn from(ens: &MeasurementEnsemble) -> Self {
        let data = match ens.kind() {
            EnsembleKind::Dense => Some(encode_complex(ens.to_dense().iter())),
            _ => None,
        };
        Self {
            schema: SCHEMA_VERSION,
            kind: ens.kind(),
            rows: ens.rows(),
            cols: ens.cols(),
            seed: ens.seed(),
            spectral_bound: ens.spectral_bound(),
            row_indices: ens.row_indices().map(<[usize]>::to_vec),
            data,
        }
    }
}

impl EnsembleRecord {
    pub fn to_ensemble(&self) -> Result<MeasurementEnsemble> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported ensemble schema {}", self.schema)));
        }
        let ens = match self.kind {
            EnsembleKind::PartialDft => match (&self.row_indices, self.seed) {
                (Some(rows), seed) => {
                    let mut e = MeasurementEnsemble::partial_dft_from_rows(self.cols, rows.clone())?;
                    e.seed = seed;
                    e
                }
                (None, Some(seed)) => MeasurementEnsemble::partial_dft(self.cols, self.rows, seed)?,
                (None, None) => return Err(Error::Config("partial DFT record needs rows or a seed".into())),
            },
            EnsembleKind::ComplexGaussian => {
                let seed = self
                    .seed
                    .ok_or_else(|| Error::Config("gaussian record needs a seed".into()))?;
                MeasurementEnsemble::complex_gaussian(self.cols, self.rows, seed)?
            }
            EnsembleKind::Dense => {
                let data = self
                    .data
                    .as_deref()
                    .ok_or_else(|| Error::Config("dense record needs data".into()))?;
                let a = decode_matrix(data, self.rows, self.cols)?;
                MeasurementEnsemble::dense(a, Some(self.spectral_bound))?
            }
        };
        if ens.rows() != self.rows {
            return Err(Error::dims("ensemble rows", self.rows, ens.rows()));
        }
        Ok(ens)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub schema: u32,
    pub len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    pub x_true: String,
}

impl From<&GroundTruth> for GroundTruthRecord {
    fn from(g: &GroundTruth) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            len: g.len(),
            sparsity: g.sparsity,
            support: g.support.clone(),
            x_true: encode_complex(g.x_true.iter()),
        }
    }
}

impl GroundTruthRecord {
    pub fn to_ground_truth(&self) -> Result<GroundTruth> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported ground-truth schema {}",
                self.schema
            )));
        }
        let x = CVector::from(decode_complex(&self.x_true, self.len)?);
        Ok(GroundTruth {
            x_true: x,
            sparsity: self.sparsity,
            support: self.support.clone(),
        })
    }
}
