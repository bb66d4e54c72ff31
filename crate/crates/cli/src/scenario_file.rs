//! The on-disk scenario format: a version tag, one geometry scenario
//! (optionally with extra evaluation points), sampler configuration, and
//! tolerance overrides. See schema/ at the repository root for the field
//! and index conventions.

use koszul_core::scenario::GeometryScenario;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: &str = "koszul-scenario/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 1, count: 8 }
    }
}

/// Tolerance ladder: exact-construction residuals, algebraic identities,
/// and comparisons against independent numerical oracles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    pub construction: f64,
    pub identity: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            construction: 1e-10,
            identity: 1e-9,
            oracle: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub version: String,
    pub scenario: GeometryScenario,
    /// Additional evaluation points beyond the scenario's own.
    #[serde(default)]
    pub extra_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<(), String> {
        if self.version != FORMAT_VERSION {
            return Err(format!(
                "unrecognized version tag {:?}, expected {FORMAT_VERSION:?}",
                self.version
            ));
        }
        self.scenario.validate().map_err(|e| e.to_string())?;
        for p in &self.extra_points {
            if p.len() != self.scenario.dimension {
                return Err(format!(
                    "extra point {:?} has wrong dimension, expected {}",
                    p, self.scenario.dimension
                ));
            }
        }
        Ok(())
    }

    /// All evaluation points: the scenario's own followed by the extras.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut pts = vec![self.scenario.point.clone()];
        pts.extend(self.extra_points.iter().cloned());
        pts
    }

    /// The scenario relocated to the given evaluation point.
    pub fn scenario_at(&self, point: &[f64]) -> GeometryScenario {
        let mut sc = self.scenario.clone();
        sc.point = point.to_vec();
        sc
    }
}
