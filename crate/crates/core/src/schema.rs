//! Documented JSON schema for channel realizations and beamforming states.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are row-major:
//!
//! ```json
//! {
//!   "rows": 2, "cols": 1,
//!   "data": [[0.1, -0.2], [0.3, 0.4]]
//! }
//! ```
//!
//! A realization document (schema `nfcovert.channel.v1`) carries the
//! geometry, the four channel blocks and the `(seed, stream)` pair that
//! reproduces it. A state document (schema `nfcovert.state.v1`) carries the
//! precoders, RIS phases and the common-rate allocation.

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelRealization};
use crate::error::{Error, Result};
use crate::rsma::BeamformingState;
use crate::{CMatrix, CVector, C64};

pub const CHANNEL_SCHEMA: &str = "nfcovert.channel.v1";
pub const STATE_SCHEMA: &str = "nfcovert.state.v1";

/// Row-major complex matrix with `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl ComplexMatJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn from_vector(v: &CVector) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Spec(format!(
                "complex matrix: expected {} entries, found {}",
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            C64::new(re, im)
        }))
    }

    pub fn to_vector(&self) -> Result<CVector> {
        if self.cols != 1 {
            return Err(Error::Spec("complex vector: expected a single column".into()));
        }
        Ok(CVector::from_fn(self.rows, |r, _| {
            let [re, im] = self.data[r];
            C64::new(re, im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealizationJson {
    pub schema: String,
    pub geometry: ArrayGeometry,
    pub seed: u64,
    pub stream: u64,
    pub h_br: ComplexMatJson,
    pub g_rb: ComplexMatJson,
    pub g_rw: ComplexMatJson,
    pub g_ru: Vec<ComplexMatJson>,
}

/// Serialize a realization to the documented JSON schema.
pub fn channel_to_json(real: &ChannelRealization) -> String {
    let doc = ChannelRealizationJson {
        schema: CHANNEL_SCHEMA.into(),
        geometry: real.geometry.clone(),
        seed: real.seed,
        stream: real.stream,
        h_br: ComplexMatJson::from_matrix(&real.h_br),
        g_rb: ComplexMatJson::from_vector(&real.g_rb),
        g_rw: ComplexMatJson::from_vector(&real.g_rw),
        g_ru: real.g_ru.iter().map(ComplexMatJson::from_vector).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("realization serializes")
}

/// Parse a realization from its JSON document, revalidating invariants.
pub fn channel_from_json(text: &str) -> Result<ChannelRealization> {
    let doc: ChannelRealizationJson =
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("channel json: {e}")))?;
    if doc.schema != CHANNEL_SCHEMA {
        return Err(Error::Spec(format!(
            "channel json: unsupported schema '{}'",
            doc.schema
        )));
    }
    let real = ChannelRealization {
        geometry: doc.geometry,
        h_br: doc.h_br.to_matrix()?,
        g_rb: doc.g_rb.to_vector()?,
        g_rw: doc.g_rw.to_vector()?,
        g_ru: doc
            .g_ru
            .iter()
            .map(|v| v.to_vector())
            .collect::<Result<Vec<_>>>()?,
        seed: doc.seed,
        stream: doc.stream,
    };
    real.validate()?;
    Ok(real)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingStateJson {
    pub schema: String,
    pub w_c: ComplexMatJson,
    pub w: Vec<ComplexMatJson>,
    pub theta: Vec<f64>,
    pub common_alloc: Vec<f64>,
}

/// Serialize a design point to the documented JSON schema.
pub fn state_to_json(state: &BeamformingState) -> String {
    let doc = BeamformingStateJson {
        schema: STATE_SCHEMA.into(),
        w_c: ComplexMatJson::from_vector(&state.w_c),
        w: state.w.iter().map(ComplexMatJson::from_vector).collect(),
        theta: state.theta.clone(),
        common_alloc: state.common_alloc.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("state serializes")
}

/// Parse a design point from its JSON document.
pub fn state_from_json(text: &str) -> Result<BeamformingState> {
    let doc: BeamformingStateJson =
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("state json: {e}")))?;
    if doc.schema != STATE_SCHEMA {
        return Err(Error::Spec(format!(
            "state json: unsupported schema '{}'",
            doc.schema
        )));
    }
    Ok(BeamformingState {
        w_c: doc.w_c.to_vector()?,
        w: doc
            .w
            .iter()
            .map(|v| v.to_vector())
            .collect::<Result<Vec<_>>>()?,
        theta: doc.theta,
        common_alloc: doc.common_alloc,
    })
}
