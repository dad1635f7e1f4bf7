//! JSON matrix files: `{"n": .., "entries": [[..], ..], "metadata": {..}}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_core::family::{GammaFamilySpec, Variant};
use crate::operator_core::SymMatrix;

/// Tolerance for accepting a stored matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub family: String,
    pub gamma: f64,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

impl Metadata {
    pub fn for_spec(spec: &GammaFamilySpec, r: Option<f64>, tail_bound: Option<f64>) -> Self {
        Metadata {
            family: "gamma".into(),
            gamma: spec.gamma,
            variant: spec.variant,
            r,
            tail_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl MatrixFile {
    pub fn from_sym(m: &SymMatrix, metadata: Option<Metadata>) -> Self {
        MatrixFile { n: m.n(), entries: m.to_rows(), metadata }
    }

    /// Checks the declared size and symmetry and returns the operator.
    pub fn to_sym(&self) -> Result<SymMatrix> {
        if self.entries.len() != self.n {
            return Err(Error::Format(format!(
                "declared n = {} but found {} rows",
                self.n,
                self.entries.len()
            )));
        }
        SymMatrix::from_rows_with_tolerance(&self.entries, SYMMETRY_TOL)
    }

    pub fn to_json(&self, pretty: bool) -> Result<String> {
        Ok(if pretty { serde_json::to_string_pretty(self)? } else { serde_json::to_string(self)? })
    }
}

pub fn save_matrix(path: impl AsRef<Path>, file: &MatrixFile, pretty: bool) -> Result<()> {
    let mut s = file.to_json(pretty)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Reads a matrix file; the entries are validated by [`MatrixFile::to_sym`].
pub fn load_matrix(path: impl AsRef<Path>) -> Result<(SymMatrix, MatrixFile)> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    let m = file.to_sym()?;
    Ok((m, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::family::GammaFamily;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = GammaFamily::new(0.5).unwrap().t(6).unwrap();
        let spec = GammaFamilySpec::new(0.5, 6, Variant::T).unwrap();
        let f = MatrixFile::from_sym(&t, Some(Metadata::for_spec(&spec, None, Some(1e-3))));
        save_matrix(&path, &f, true).unwrap();
        let (back, file) = load_matrix(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(file, f);
    }

    #[test]
    fn rejects_asymmetric_and_ragged() {
        let bad = MatrixFile { n: 2, entries: vec![vec![0.0, 1.0], vec![1.1, 0.0]], metadata: None };
        assert!(matches!(bad.to_sym(), Err(Error::Format(_))));
        let ragged = MatrixFile { n: 2, entries: vec![vec![0.0, 1.0], vec![1.0]], metadata: None };
        assert!(ragged.to_sym().is_err());
        let wrong_n = MatrixFile { n: 3, entries: vec![vec![0.0, 1.0], vec![1.0, 0.0]], metadata: None };
        assert!(wrong_n.to_sym().is_err());
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let f = MatrixFile { n: 2, entries: vec![vec![0.0, 1.0], vec![1.0 + 1e-14, 0.0]], metadata: None };
        let m = f.to_sym().unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn malformed_json_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"n\": 2, \"entries\": ").unwrap();
        assert!(matches!(load_matrix(&path), Err(Error::Json(_))));
        assert!(matches!(load_matrix(dir.path().join("missing.json")), Err(Error::Io(_))));
    }
}
