//! Machine-readable reports. Timing data is isolated in a single optional
//! field so fixture comparisons can exclude it; everything else is a pure
//! function of the scenario file and the seeds.

use serde::{Deserialize, Serialize};

/// Convention constants pinned by the engine, emitted so downstream
/// consumers can interpret signs without re-deriving them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConventionConstants {
    /// Expansion of vector-valued one-form tensors into insertion
    /// coefficients.
    pub insertion_expansion_sign: f64,
    /// Coefficient-degree sign of the superconnection direction slot.
    pub direction_slot_sign: f64,
    /// Supertrace convention on block supermatrices.
    pub supertrace: String,
    /// Curvature insertion sign in the bracket of two covariant-derivative
    /// generators, fixed by the operator-application oracle.
    pub bracket_curvature_sign: f64,
    /// Graded Ricci contraction: traced slot and odd-block weight. Both
    /// odd-block weights satisfy the antisymmetry and block-role pins; the
    /// supertrace-consistent one is active.
    pub ricci_trace: String,
    pub ricci_str_sign: f64,
}

impl Default for ConventionConstants {
    fn default() -> Self {
        ConventionConstants {
            insertion_expansion_sign: koszul_core::superconn::INSERTION_EXPANSION_SIGN,
            direction_slot_sign: koszul_core::superconn::DIRECTION_SLOT_SIGN,
            supertrace: "tr(A) - tr(D)".into(),
            bracket_curvature_sign: -1.0,
            ricci_trace: "first plane slot; str signs {+1,-1} both satisfy the pins".into(),
            ricci_str_sign: koszul_core::supercurv::RICCI_STR_SIGN,
        }
    }
}

/// Outcome of one named invariant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
}

impl InvariantResult {
    pub fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        InvariantResult {
            name: name.into(),
            passed: residual <= tolerance,
            residual,
            tolerance,
            details: None,
        }
    }

    pub fn with_details(mut self, details: String) -> Self {
        self.details = Some(details);
        self
    }
}

/// Timing, isolated so deterministic comparisons can drop one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_clock_ms: u128,
}

/// Summary of the named curvature tensors of one sampled superconnection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensorNorms {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub b1: f64,
    pub b3: f64,
}

/// Scalar-supercurvature data of one sampled superconnection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarSample {
    pub seed: u64,
    pub scal: f64,
    /// Two-term expansion at scalar level: (-tr(Cᵗ H⁻¹), tr(-Bᵗ Hᵗ⁻¹)).
    pub term_c: f64,
    pub term_b: f64,
    /// Degree-1 scalar values per form generator.
    pub degree1: Vec<f64>,
    /// Cross-block norm and the antisymmetry residual C + Bᵗ across
    /// retained degrees.
    pub cross_block_norm: f64,
    pub ricci_antisymmetry: f64,
}

/// Everything reported for one evaluation point of one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRun {
    pub point: Vec<f64>,
    pub nabla_h_residual: f64,
    pub curvature_norm: f64,
    /// Nullspace data of the forced-vanishing system, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced: Option<koszul_core::superconn::ForcedVanishingCertificate>,
    /// Predicate residuals of the first sampled superconnection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub named_tensor_norms: Option<NamedTensorNorms>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scalar_samples: Vec<ScalarSample>,
}

/// The top-level report emitted by every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub version: String,
    pub command: String,
    pub scenario: String,
    pub h_symmetry: String,
    pub dimension: usize,
    pub seed: u64,
    pub count: usize,
    pub tolerances: crate::scenario_file::Tolerances,
    pub conventions: ConventionConstants,
    pub runs: Vec<PointRun>,
    pub invariants: Vec<InvariantResult>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}
