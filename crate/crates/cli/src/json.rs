//! JSON shapes for systems, polynomials and results.
//!
//! Complex numbers are `[re, im]` pairs, matrices are arrays of rows, and
//! polynomials list coefficients by ascending degree. Floats are written with
//! 17 significant digits so a parse/serialize cycle reproduces the bytes.

use std::collections::BTreeMap;
use std::io;

use lagplace_core::polymat::ComplexMatrix;
use lagplace_core::solver::SolverConfig;
use lagplace_core::Poly;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `serde_json` formatter writing every float as `d.dddddddddddddddde±x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise);
    value.serialize(&mut ser).map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn from_str<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed {what}: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

impl From<Complex64> for Cx {
    fn from(c: Complex64) -> Self {
        Cx(c.re, c.im)
    }
}

impl From<Cx> for Complex64 {
    fn from(c: Cx) -> Self {
        Complex64::new(c.0, c.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<Cx>>);

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixJson((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect()).collect())
    }

    pub fn to_matrix(&self, what: &str) -> Result<ComplexMatrix, CliError> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(CliError::Input(format!("{what} is empty")));
        }
        if self.0.iter().any(|r| r.len() != cols) {
            return Err(CliError::Input(format!("{what} has rows of different lengths")));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |i, j| self.0[i][j].into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyJson(pub Vec<Cx>);

impl PolyJson {
    pub fn from_poly(p: &Poly) -> Self {
        PolyJson(p.coeffs().iter().map(|&c| c.into()).collect())
    }

    pub fn to_poly(&self) -> Poly {
        Poly::new(self.0.iter().map(|&c| c.into()).collect())
    }
}

/// A system description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemJson {
    /// `A = A^t`, output map `B^t`.
    Symmetric {
        a: MatrixJson,
        b: MatrixJson,
    },
    Hamiltonian {
        a: MatrixJson,
        b: MatrixJson,
        c: MatrixJson,
    },
    /// General realization; converted to a symmetric one when its transfer
    /// function is symmetric.
    StateSpace {
        a: MatrixJson,
        b: MatrixJson,
        c: MatrixJson,
    },
    /// `G(s) = diag(1/s, ..., 1/s^n)`.
    CanonicalDiagonal {
        n: usize,
    },
}

/// Target closed-loop polynomial, by coefficients or roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetJson {
    Coefficients { coefficients: PolyJson },
    Roots { roots: Vec<Cx> },
}

impl TargetJson {
    pub fn to_poly(&self) -> Poly {
        match self {
            TargetJson::Coefficients { coefficients } => coefficients.to_poly(),
            TargetJson::Roots { roots } => {
                Poly::from_roots(&roots.iter().map(|&c| c.into()).collect::<Vec<Complex64>>())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisJson {
    pub basis: Vec<MatrixJson>,
}

/// Provenance embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: SolverConfig,
    pub seed: u64,
    /// Artifact version.
    pub versions: String,
    /// Milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionsJson {
    pub manifest: RunManifest,
    pub gains: Vec<MatrixJson>,
    pub residuals: Vec<f64>,
    pub cluster_multiplicities: Vec<usize>,
    pub paths_tracked: usize,
    pub paths_diverged: usize,
    pub paths_to_base_locus: usize,
    pub paths_failed: usize,
    /// Solutions found by monodromy completion, with multiplicity 0.
    pub monodromy_found: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeJson {
    pub manifest: RunManifest,
    pub n: usize,
    pub d: String,
    pub d_tilde: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityJson {
    pub minimal: bool,
    pub controllability_rank: usize,
    pub observability_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureJson {
    pub symmetric_violation: Option<f64>,
    pub hamiltonian_aj_violation: Option<f64>,
    pub hamiltonian_output_violation: Option<f64>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckJson {
    pub manifest: RunManifest,
    pub kind: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub structure: StructureJson,
    pub minimality: MinimalityJson,
    /// Rank of the closed-loop Jacobian at `F = 0`; absent when the
    /// structure check fails.
    pub jacobian_rank: Option<usize>,
    pub jacobian_expected_rank: Option<usize>,
    pub degeneracy: String,
    pub certificate_passes: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusTrialJson {
    pub trial: usize,
    pub seed: u64,
    pub finite_count: usize,
    pub diverged: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountFrequency {
    pub finite_count: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusJson {
    pub manifest: RunManifest,
    pub n: usize,
    pub hamiltonian: bool,
    pub expected: String,
    pub trials: Vec<CensusTrialJson>,
    /// Number of trials per observed finite count.
    pub distribution: Vec<CountFrequency>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Json {
    pub manifest: RunManifest,
    pub s: MatrixJson,
    pub transformed_basis: Vec<MatrixJson>,
    pub diag_matrix: MatrixJson,
    pub condition: f64,
    pub rotations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellJson {
    pub pivots: Vec<usize>,
    pub satisfies_rule: bool,
    pub alpha: usize,
    pub cofactor_sign: Option<i8>,
    pub conflicts: Vec<Vec<usize>>,
    pub exact_refutation: Option<bool>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseLocusJson {
    pub starts: usize,
    pub best_residual: f64,
    pub hits: usize,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub manifest: RunManifest,
    pub n: usize,
    pub delta: usize,
    pub pivot_sets_examined: usize,
    pub excluded: usize,
    pub cells: Vec<CellJson>,
    pub base_locus_search: Option<BaseLocusJson>,
    pub passes: bool,
}
