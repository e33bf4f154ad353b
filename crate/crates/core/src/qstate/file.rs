//! Text formats for states and measurement records.
//!
//! Both are JSON objects. A state file looks like
//!
//! ```text
//! {
//!   "kind": "pure",
//!   "dims": [2, 2],
//!   "data": [
//!     [0.7071067811865476, 0.0],
//!     [0.0, 0.0],
//!     [0.0, 0.0],
//!     [-0.7071067811865476, 0.0]
//!   ]
//! }
//! ```
//!
//! For `"mixed"` the `data` field holds one array of `[re, im]` pairs per
//! matrix row. A record file carries `kind = "record"`, `n`, `shots`, `seed`
//! and the `n × n` outcome counts flattened row-major. Unknown fields are
//! rejected. The writers emit the canonical layout shown above, with every
//! float in its shortest round-trip decimal form, so parsing and rewriting a
//! canonical file reproduces it byte for byte.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{validate_density, validate_pure, DensityMatrix, PureState};
use crate::error::{Error, Result};
use crate::expsim::MeasurementRecord;
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateData {
    Pure(Vec<[f64; 2]>),
    Mixed(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStateFile {
    kind: String,
    dims: Vec<usize>,
    data: StateData,
}

/// A parsed state file. Keeps the numbers exactly as written, alongside the
/// validated state they describe.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    dims: Vec<usize>,
    data: StateData,
    state: LoadedState,
}

/// What a state file describes.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

fn to_complex(pair: &[f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn fmt_f64(x: f64) -> String {
    // serde_json uses the shortest representation that round-trips
    serde_json::to_string(&x).unwrap_or_else(|_| "null".into())
}

fn fmt_pair(out: &mut String, pair: &[f64; 2]) {
    let _ = write!(out, "[{}, {}]", fmt_f64(pair[0]), fmt_f64(pair[1]));
}

fn fmt_dims(dims: &[usize]) -> String {
    let parts: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

impl StateFile {
    /// Parses and validates a state file.
    pub fn parse(text: &str) -> Result<StateFile> {
        let raw: RawStateFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let state = match (raw.kind.as_str(), &raw.data) {
            ("pure", StateData::Pure(pairs)) => {
                let amps: Vec<Complex64> = pairs.iter().map(to_complex).collect();
                LoadedState::Pure(validate_pure(&raw.dims, &amps)?)
            }
            ("mixed", StateData::Mixed(rows)) => {
                let d: usize = raw.dims.iter().product();
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d * d,
                        got: rows.iter().map(Vec::len).sum(),
                    });
                }
                let m = CMatrix::from_fn(d, d, |r, c| to_complex(&rows[r][c]));
                LoadedState::Mixed(validate_density(&raw.dims, &m)?)
            }
            ("pure", _) | ("mixed", _) => {
                return Err(Error::Parse(format!(
                    "data layout does not match kind \"{}\"",
                    raw.kind
                )))
            }
            (other, _) => return Err(Error::Parse(format!("unknown kind \"{other}\""))),
        };
        Ok(StateFile {
            dims: raw.dims,
            data: raw.data,
            state,
        })
    }

    pub fn from_pure(psi: &PureState) -> StateFile {
        StateFile {
            dims: psi.dims().to_vec(),
            data: StateData::Pure(psi.amplitudes().iter().map(|a| [a.re, a.im]).collect()),
            state: LoadedState::Pure(psi.clone()),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> StateFile {
        let m = rho.matrix();
        let rows = (0..m.nrows())
            .map(|r| {
                (0..m.ncols())
                    .map(|c| [m[(r, c)].re, m[(r, c)].im])
                    .collect()
            })
            .collect();
        StateFile {
            dims: rho.dims().to_vec(),
            data: StateData::Mixed(rows),
            state: LoadedState::Mixed(rho.clone()),
        }
    }

    pub fn state(&self) -> &LoadedState {
        &self.state
    }

    pub fn into_state(self) -> LoadedState {
        self.state
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.data {
            StateData::Pure(_) => "pure",
            StateData::Mixed(_) => "mixed",
        };
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"kind\": \"{kind}\",");
        let _ = writeln!(out, "  \"dims\": {},", fmt_dims(&self.dims));
        let _ = writeln!(out, "  \"data\": [");
        match &self.data {
            StateData::Pure(pairs) => {
                for (i, p) in pairs.iter().enumerate() {
                    out.push_str("    ");
                    fmt_pair(&mut out, p);
                    out.push_str(if i + 1 < pairs.len() { ",\n" } else { "\n" });
                }
            }
            StateData::Mixed(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    out.push_str("    [");
                    for (j, p) in row.iter().enumerate() {
                        if j > 0 {
                            out.push_str(", ");
                        }
                        fmt_pair(&mut out, p);
                    }
                    out.push(']');
                    out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
                }
            }
        }
        out.push_str("  ]\n}\n");
        out
    }
}

/// Parses and validates a state file.
pub fn parse_state_file(text: &str) -> Result<StateFile> {
    StateFile::parse(text)
}

/// Canonical text for a state file.
pub fn write_state_file(file: &StateFile) -> String {
    file.to_text()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub kind: String,
    pub n: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
}

impl RecordFile {
    pub fn from_record(record: &MeasurementRecord) -> RecordFile {
        RecordFile {
            kind: "record".into(),
            n: record.n(),
            shots: record.shots(),
            seed: record.seed(),
            counts: record.counts().to_vec(),
        }
    }

    pub fn into_record(self) -> Result<MeasurementRecord> {
        if self.kind != "record" {
            return Err(Error::Parse(format!(
                "expected kind \"record\", got \"{}\"",
                self.kind
            )));
        }
        MeasurementRecord::new(self.n, self.counts, self.seed).and_then(|r| {
            if r.shots() == self.shots {
                Ok(r)
            } else {
                Err(Error::Parse(format!(
                    "shots = {} but counts sum to {}",
                    self.shots,
                    r.shots()
                )))
            }
        })
    }
}

/// Parses a record file.
pub fn parse_record_file(text: &str) -> Result<MeasurementRecord> {
    let raw: RecordFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.into_record()
}

/// Canonical text for a record file.
pub fn write_record_file(record: &MeasurementRecord) -> String {
    let counts: Vec<String> = record.counts().iter().map(|c| c.to_string()).collect();
    format!(
        "{{\n  \"kind\": \"record\",\n  \"n\": {},\n  \"shots\": {},\n  \"seed\": {},\n  \"counts\": [{}]\n}}\n",
        record.n(),
        record.shots(),
        record.seed(),
        counts.join(", ")
    )
}
