//! JSON moment files.
//!
//! ```json
//! { "two_j": 10, "M": [[[re, im], [re, im], [re, im]], ...], "label": "optional" }
//! { "two_j": 10, "coords": { "u": [u1, u2, u3], "v": [v1, v2, v3] } }
//! ```
//!
//! Exactly one of `M` and `coords` must be present. `coords` are renormalized
//! coordinates (`u = l / j`) and describe a matrix in standard form.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spinmoment::matcore::{c64, ComplexMatrix};
use spinmoment::reduction::{moments_from_coords, RenormalizedCoords};
use spinmoment::{MomentMatrix, SpinNumber};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coords {
    pub u: [f64; 3],
    pub v: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentFile {
    pub two_j: u32,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<[[[f64; 2]; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Coords>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Why a moment file was rejected.
#[derive(Debug)]
pub enum MomentFileError {
    Io(std::io::Error),
    /// JSON syntax or schema error, with position.
    Parse { line: usize, column: usize, message: String },
    /// Well-formed JSON describing an invalid moment matrix.
    Field { field: &'static str, message: String },
}

impl fmt::Display for MomentFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "cannot read moment file: {e}"),
            Self::Parse { line, column, message } => {
                write!(f, "moment file parse error at line {line}, column {column}: {message}")
            }
            Self::Field { field, message } => write!(f, "moment file field '{field}': {message}"),
        }
    }
}

impl std::error::Error for MomentFileError {}

impl MomentFile {
    pub fn from_matrix(m: &MomentMatrix, label: Option<String>) -> Self {
        let mm = m.matrix();
        let entries = std::array::from_fn(|r| std::array::from_fn(|c| [mm[(r, c)].re, mm[(r, c)].im]));
        Self {
            two_j: m.j().two_j(),
            m: Some(entries),
            coords: None,
            label,
        }
    }

    pub fn from_coords(two_j: u32, u: [f64; 3], v: [f64; 3], label: Option<String>) -> Self {
        Self {
            two_j,
            m: None,
            coords: Some(Coords { u, v }),
            label,
        }
    }

    pub fn parse(text: &str) -> Result<Self, MomentFileError> {
        serde_json::from_str(text).map_err(|e| MomentFileError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, MomentFileError> {
        let text = std::fs::read_to_string(path).map_err(MomentFileError::Io)?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("moment files serialize")
    }

    pub fn spin(&self) -> Result<SpinNumber, MomentFileError> {
        SpinNumber::new(self.two_j).map_err(|e| MomentFileError::Field {
            field: "two_j",
            message: e.to_string(),
        })
    }

    /// Validated moment matrix.
    pub fn moments(&self) -> Result<MomentMatrix, MomentFileError> {
        let j = self.spin()?;
        match (&self.m, &self.coords) {
            (Some(_), Some(_)) | (None, None) => Err(MomentFileError::Field {
                field: "M/coords",
                message: "exactly one of 'M' and 'coords' must be present".into(),
            }),
            (Some(entries), None) => {
                let m = ComplexMatrix::from_fn(3, 3, |r, c| c64(entries[r][c][0], entries[r][c][1]));
                MomentMatrix::new(j, m).map_err(|e| MomentFileError::Field {
                    field: "M",
                    message: e.to_string(),
                })
            }
            (None, Some(c)) => {
                let field_err = |e: spinmoment::Error| MomentFileError::Field {
                    field: "coords",
                    message: e.to_string(),
                };
                let rc = RenormalizedCoords::new(j, c.u, c.v).map_err(field_err)?;
                moments_from_coords(&rc).map_err(field_err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_full_matrix() {
        let j = SpinNumber::new(3).unwrap();
        let rc = RenormalizedCoords::new(j, [0.1, 0.0, 0.2], [0.3, 0.3, 0.4]).unwrap();
        let m = moments_from_coords(&rc).unwrap();
        let f = MomentFile::from_matrix(&m, Some("x".into()));
        let back = MomentFile::parse(&f.to_json()).unwrap();
        assert_eq!(back, f);
        let m2 = back.moments().unwrap();
        assert!(spinmoment::matcore::max_abs_diff(m.matrix(), m2.matrix()) == 0.0);
    }

    #[test]
    fn coords_file() {
        let f = MomentFile::parse(r#"{"two_j": 10, "coords": {"u": [0,0,0], "v": [0.3,0.3,0.4]}}"#).unwrap();
        let m = f.moments().unwrap();
        assert_eq!(m.j().two_j(), 10);
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let err = MomentFile::parse("{\n  \"two_j\": 4,\n  \"label\": \"x\"\n  \"coords\": {}\n}").unwrap_err();
        match err {
            MomentFileError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_both_forms() {
        assert!(MomentFile::parse(r#"{"two_j": 4, "coords": {"u": [0,0,0], "v": [1,0,0]}, "x": 1}"#).is_err());
        let f = MomentFile {
            two_j: 4,
            m: Some([[[0.0; 2]; 3]; 3]),
            coords: Some(Coords { u: [0.0; 3], v: [1.0, 0.0, 0.0] }),
            label: None,
        };
        let e = f.moments().unwrap_err();
        assert!(e.to_string().contains("exactly one"));
    }

    #[test]
    fn coordinate_sum_is_a_casimir_violation() {
        let f = MomentFile::from_coords(10, [0.0; 3], [0.3, 0.3, 0.3], None);
        let e = f.moments().unwrap_err().to_string();
        assert!(e.contains("Casimir violated"), "{e}");
    }

    #[test]
    fn zero_spin_rejected() {
        let f = MomentFile::from_coords(0, [0.0; 3], [0.3, 0.3, 0.4], None);
        assert!(f.moments().unwrap_err().to_string().contains("two_j"));
    }
}
